#![no_main]
use libfuzzer_sys::fuzz_target;
use semitoric::quantum::JointSpectrum;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = JointSpectrum::from_csv(text) {
        let csv = s.to_csv();
        let again = JointSpectrum::from_csv(&csv).expect("written CSV parses");
        assert_eq!(again.to_csv(), csv);
    }
});
