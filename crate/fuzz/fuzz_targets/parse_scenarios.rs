#![no_main]
use cev_asian::bench::parse_scenarios;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_scenarios(data);
});
