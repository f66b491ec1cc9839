#![no_main]
use libfuzzer_sys::fuzz_target;
use semitoric::actions::TaylorSeries;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = TaylorSeries::from_json_str(text) {
        let again = TaylorSeries::from_json(&t.to_json()).expect("written series parses");
        assert_eq!(again.to_json(), t.to_json());
    }
});
