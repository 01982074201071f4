#![no_main]

use libfuzzer_sys::fuzz_target;
use spellcast::catalog::{load_csv, CsvLayerConfig};
use spellcast::PointDataset;

fuzz_target!(|data: &[u8]| {
    let _ = load_csv(data, "fuzz", &CsvLayerConfig::default());
    let _ = PointDataset::from_csv(data, "lon", "lat");
});
