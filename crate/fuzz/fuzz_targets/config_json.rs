#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(e) = deadleaves_cli::parse_config(text) {
            assert!(matches!(e.exit_code(), 2 | 3));
        }
    }
});
