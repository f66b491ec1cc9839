#![no_main]
use libfuzzer_sys::fuzz_target;
use semitoric::models::ModelDescriptor;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = ModelDescriptor::from_json(text) {
        let again = ModelDescriptor::from_json(&d.to_json()).expect("descriptor round-trips");
        assert_eq!(again.to_json(), d.to_json());
        let _ = d.build();
    }
});
