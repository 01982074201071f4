#![no_main]

use libfuzzer_sys::fuzz_target;
use spellcast::parse_dburl;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_dburl(text) {
        assert_eq!(parse_dburl(&spec.to_url()).as_ref(), Ok(&spec));
    }
});
