#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| refmodel_core::testing::fuzz::load_asset(data));
