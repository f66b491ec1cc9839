#![no_main]
use libfuzzer_sys::fuzz_target;
use semitoric::cartography::DecoratedPolygon;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = DecoratedPolygon::from_json_str(text) {
        let json = p.to_json_string();
        let again = DecoratedPolygon::from_json_str(&json).expect("written polygon parses");
        assert_eq!(again.to_json_string(), json);
    }
});
