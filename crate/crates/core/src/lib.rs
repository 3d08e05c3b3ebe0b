//! Reference-architecture modeling with capability traceability, and an
//! energy evaluator for exchangeable coverage-path algorithms.
//!
//! The modeling half stores typed building blocks in a [`repository`],
//! moves them into application [`model`]s by adoption, adaptation or
//! extension, and checks and queries the resulting configurations in
//! [`composition`]. The evaluation half plans coverage paths over elevation
//! grids ([`terrain`], [`planners`]), simulates battery drain along them
//! ([`simulation`]) and compares or ranks configurations ([`evaluator`]).

pub mod composition;
pub mod demo;
pub mod document;
pub mod evaluator;
pub mod model;
pub mod planners;
pub mod report;
pub mod repository;
pub mod simulation;
#[cfg(feature = "testing")]
pub mod testing;
pub mod terrain;
