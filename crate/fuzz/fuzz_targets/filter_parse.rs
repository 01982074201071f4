#![no_main]

use libfuzzer_sys::fuzz_target;
use spellcast::parse_filter;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(filter) = parse_filter(text) {
        // whatever parses must print back to itself
        let printed = filter.to_string();
        assert_eq!(parse_filter(&printed).as_ref(), Ok(&filter), "{printed}");
    }
});
