//! The reference repository and the three reuse mechanisms (adopt, adapt,
//! extend) that copy reference assets into application models.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::composition::{viewpoint_valid, Pattern, Viewpoint};
use crate::document::{self, DocumentError, ParseError};
use crate::model::{BlockKind, BuildingBlock, ConcernLayer, Model, ModelError, Origin, Port};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepoError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("asset `{id}` is a {found} asset, expected a block")]
    WrongAssetKind { id: String, found: &'static str },
    #[error("illegal override on `{id}`: {reason}")]
    IllegalOverride { id: String, reason: String },
    #[error("duplicate port id `{port}` on `{block}`")]
    DuplicatePortId { block: String, port: String },
    #[error("invalid asset `{id}`: {reason}")]
    InvalidAsset { id: String, reason: String },
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Document(#[from] DocumentError),
}

impl From<ModelError> for RepoError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DuplicateId(id) => RepoError::DuplicateId(id),
            ModelError::DuplicatePortId { block, port } => RepoError::DuplicatePortId { block, port },
            other => RepoError::Model(other),
        }
    }
}

impl From<ParseError> for RepoError {
    fn from(e: ParseError) -> Self {
        RepoError::Document(DocumentError::Parse(e))
    }
}

/// Anything stored in the repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Asset {
    Block(BuildingBlock),
    Pattern(Pattern),
    Viewpoint(Viewpoint),
}

impl Asset {
    pub fn id(&self) -> &str {
        match self {
            Asset::Block(b) => &b.id,
            Asset::Pattern(p) => &p.id,
            Asset::Viewpoint(v) => &v.name,
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            Asset::Block(_) => "block",
            Asset::Pattern(_) => "pattern",
            Asset::Viewpoint(_) => "viewpoint",
        }
    }

    /// Reads a single asset, e.g. `{"block": {...}}`, as written by
    /// [`Asset::to_json`].
    pub fn from_json(text: &str) -> Result<Asset, RepoError> {
        let asset: Asset = serde_json::from_str(text).map_err(ParseError::from)?;
        let asset = match asset {
            Asset::Block(b) => Asset::Block(b.canonical()),
            other => other,
        };
        asset.check().map_err(|reason| RepoError::InvalidAsset {
            id: asset.id().to_string(),
            reason,
        })?;
        Ok(asset)
    }

    pub fn to_json(&self) -> String {
        document::to_canonical_json(self)
    }

    fn check(&self) -> Result<(), String> {
        match self {
            Asset::Block(b) => {
                b.check().map_err(|e| e.to_string())?;
                if b.origin != Origin::ReferenceAsset {
                    return Err("block assets must have origin reference_asset".into());
                }
            }
            Asset::Pattern(p) => p.check().map_err(|e| e.to_string())?,
            Asset::Viewpoint(v) => {
                if !viewpoint_valid(v) {
                    return Err(format!("viewpoint ({}, {}) is not valid", v.subject, v.aspect));
                }
            }
        }
        if self.id().is_empty() {
            return Err("empty id".into());
        }
        Ok(())
    }
}

/// Conjunctive filter over block assets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssetFilter {
    pub layer: Option<ConcernLayer>,
    pub kind: Option<BlockKind>,
}

impl AssetFilter {
    fn is_empty(&self) -> bool {
        self.layer.is_none() && self.kind.is_none()
    }

    fn matches(&self, asset: &Asset) -> bool {
        if self.is_empty() {
            return true;
        }
        let Asset::Block(b) = asset else { return false };
        self.layer.is_none_or(|l| b.layer == l) && self.kind.is_none_or(|k| b.kind == k)
    }
}

/// Tailoring applied by [`ReferenceRepository::adapt`]. `layer` and `kind`
/// exist only so that attempts to change them can be rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub name: Option<String>,
    pub parameters: BTreeMap<String, f64>,
    /// port id -> new interface type
    pub interface_types: BTreeMap<String, String>,
    pub layer: Option<ConcernLayer>,
    pub kind: Option<BlockKind>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceRepository {
    assets: BTreeMap<String, Asset>,
    version: u64,
}

#[derive(Serialize)]
struct RepoDocumentRef<'a> {
    schema_version: u32,
    version: u64,
    assets: Vec<&'a Asset>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RepoDocument {
    #[allow(dead_code)]
    schema_version: u32,
    version: u64,
    #[serde(deserialize_with = "checked_assets")]
    assets: BTreeMap<String, Asset>,
}

fn checked_assets<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Asset>, D::Error> {
    let list = Vec::<Asset>::deserialize(d)?;
    let mut map = BTreeMap::new();
    for asset in list {
        asset
            .check()
            .map_err(|reason| D::Error::custom(format!("asset `{}`: {reason}", asset.id())))?;
        let id = asset.id().to_string();
        if map.insert(id.clone(), asset).is_some() {
            return Err(D::Error::custom(format!("duplicate asset id `{id}`")));
        }
    }
    Ok(map)
}

impl ReferenceRepository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Asset> {
        self.assets.get(id)
    }

    /// All assets in ascending id order.
    pub fn assets(&self) -> impl Iterator<Item = &Asset> {
        self.assets.values()
    }

    pub fn add_asset(&self, asset: Asset) -> Result<ReferenceRepository, RepoError> {
        if self.assets.contains_key(asset.id()) {
            return Err(RepoError::DuplicateId(asset.id().to_string()));
        }
        asset.check().map_err(|reason| RepoError::InvalidAsset {
            id: asset.id().to_string(),
            reason,
        })?;
        let asset = match asset {
            Asset::Block(b) => Asset::Block(b.canonical()),
            Asset::Pattern(p) => Asset::Pattern(p.canonical()),
            v => v,
        };
        let mut next = self.clone();
        next.assets.insert(asset.id().to_string(), asset);
        next.version += 1;
        Ok(next)
    }

    /// Asset ids, lexicographically sorted.
    pub fn list_assets(&self, filter: AssetFilter) -> Vec<String> {
        self.assets
            .values()
            .filter(|a| filter.matches(a))
            .map(|a| a.id().to_string())
            .collect()
    }

    fn block_asset(&self, id: &str) -> Result<&BuildingBlock, RepoError> {
        match self.assets.get(id) {
            None => Err(RepoError::UnknownAsset(id.to_string())),
            Some(Asset::Block(b)) => Ok(b),
            Some(other) => Err(RepoError::WrongAssetKind {
                id: id.to_string(),
                found: other.kind_label(),
            }),
        }
    }

    pub fn pattern(&self, id: &str) -> Result<&Pattern, RepoError> {
        match self.assets.get(id) {
            None => Err(RepoError::UnknownAsset(id.to_string())),
            Some(Asset::Pattern(p)) => Ok(p),
            Some(other) => Err(RepoError::WrongAssetKind {
                id: id.to_string(),
                found: other.kind_label(),
            }),
        }
    }

    fn insert(model: &Model, block: BuildingBlock) -> Result<Model, RepoError> {
        if model.blocks.contains_key(&block.id) {
            return Err(RepoError::DuplicateId(block.id));
        }
        Ok(model.add_block(block)?)
    }

    /// Direct use of a reference block.
    pub fn adopt(&self, asset_id: &str, model: &Model) -> Result<Model, RepoError> {
        let block = self.block_asset(asset_id)?.clone().with_origin(Origin::Adopted);
        Self::insert(model, block)
    }

    /// A tailored copy: name, parameter values and interface types may change,
    /// layer and kind may not.
    pub fn adapt(&self, asset_id: &str, overrides: &Overrides, model: &Model) -> Result<Model, RepoError> {
        let mut block = self.block_asset(asset_id)?.clone().with_origin(Origin::Adapted);
        let illegal = |reason: String| RepoError::IllegalOverride {
            id: asset_id.to_string(),
            reason,
        };
        if let Some(layer) = overrides.layer.filter(|l| *l != block.layer) {
            return Err(illegal(format!("layer cannot change from {} to {layer}", block.layer)));
        }
        if let Some(kind) = overrides.kind.filter(|k| *k != block.kind) {
            return Err(illegal(format!("kind cannot change from {} to {kind}", block.kind)));
        }
        if let Some(name) = &overrides.name {
            block.name = name.clone();
        }
        block
            .parameters
            .extend(overrides.parameters.iter().map(|(k, v)| (k.clone(), *v)));
        for (port_id, ty) in &overrides.interface_types {
            let port = block
                .ports
                .iter_mut()
                .find(|p| &p.id == port_id)
                .ok_or_else(|| illegal(format!("no port `{port_id}`")))?;
            port.interface_type = ty.clone();
        }
        Self::insert(model, block)
    }

    /// A supplemented copy: extra ports and parameters on top of the
    /// untouched original.
    pub fn extend(
        &self,
        asset_id: &str,
        extra_ports: &[Port],
        extra_params: &BTreeMap<String, f64>,
        model: &Model,
    ) -> Result<Model, RepoError> {
        let mut block = self.block_asset(asset_id)?.clone().with_origin(Origin::Extended);
        for port in extra_ports {
            if block.port(&port.id).is_some() {
                return Err(RepoError::DuplicatePortId {
                    block: block.id.clone(),
                    port: port.id.clone(),
                });
            }
            block.ports.push(port.clone());
        }
        for (name, value) in extra_params {
            if block.parameters.insert(name.clone(), *value).is_some() {
                return Err(RepoError::IllegalOverride {
                    id: asset_id.to_string(),
                    reason: format!("parameter `{name}` already exists; extension cannot change it"),
                });
            }
        }
        Self::insert(model, block)
    }

    pub fn save(&self) -> String {
        document::to_canonical_json(&RepoDocumentRef {
            schema_version: document::SCHEMA_VERSION,
            version: self.version,
            assets: self.assets.values().collect(),
        })
    }

    pub fn load(text: &str) -> Result<ReferenceRepository, RepoError> {
        let doc: RepoDocument = document::parse_versioned(text)?;
        let assets = doc
            .assets
            .into_iter()
            .map(|(id, a)| {
                let a = match a {
                    Asset::Block(b) => Asset::Block(b.canonical()),
                    other => other,
                };
                (id, a)
            })
            .collect();
        Ok(ReferenceRepository {
            assets,
            version: doc.version,
        })
    }
}
