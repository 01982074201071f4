#![no_main]

use libfuzzer_sys::fuzz_target;
use spellcast::catalog::load_geojson;

fuzz_target!(|data: &[u8]| {
    let _ = load_geojson(data, "fuzz");
});
