#![no_main]

use libfuzzer_sys::fuzz_target;
use mcfusion::io::parse_scores_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = parse_scores_csv(data) {
        for series in table.values() {
            assert!(series.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(series.iter().all(|(_, v)| v.is_finite()));
        }
    }
});
