#![no_main]
use cev_asian::bench::{parse_scenarios, write_scenarios};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(scenarios) = parse_scenarios(data) {
        let mut buf = Vec::new();
        write_scenarios(&scenarios, &mut buf).expect("write to memory");
        let again = parse_scenarios(buf.as_slice()).expect("written scenarios parse");
        assert_eq!(scenarios, again);
    }
});
