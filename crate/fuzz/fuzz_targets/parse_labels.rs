#![no_main]
use std::str::FromStr;

use cev_asian::bench::Engine;
use cev_asian::{Side, Style};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(e) = Engine::from_str(s) {
        assert_eq!(Engine::from_str(e.as_str()).unwrap(), e);
    }
    if let Ok(side) = Side::from_str(s) {
        assert_eq!(Side::from_str(side.as_str()).unwrap(), side);
    }
    if let Ok(style) = Style::from_str(s) {
        assert_eq!(Style::from_str(style.as_str()).unwrap(), style);
    }
});
