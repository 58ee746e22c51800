#![no_main]

use libfuzzer_sys::fuzz_target;
use mcfusion::io::{parse_panels_csv, write_panels_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(panels) = parse_panels_csv(data) else { return };
    // Whatever parses must survive an export/ingest round trip unchanged.
    let mut buf = Vec::new();
    write_panels_csv(&mut buf, &panels).unwrap();
    let again = parse_panels_csv(buf.as_slice()).unwrap();
    assert_eq!(again, panels);
});
