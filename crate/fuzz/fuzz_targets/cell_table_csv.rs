#![no_main]

use deadleaves::io::read_cell_table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = read_cell_table(data) {
        assert!(t.length > 0.0);
        assert!(t.eta.windows(2).all(|w| w[0] <= w[1]));
    }
});
