#![no_main]

use libfuzzer_sys::fuzz_target;
use spellcast::SpellBook;

fuzz_target!(|data: &[u8]| {
    if let Ok(book) = SpellBook::from_json(data) {
        let bytes = book.to_json().expect("valid books serialize");
        assert_eq!(SpellBook::from_json(&bytes).expect("reload"), book);
    }
});
