#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // must never panic; round trip must be lossless when parsing succeeds
        if let Ok(p) = kp_pulse::io::parse_pulse_csv(text) {
            let written = kp_pulse::io::pulse_csv_string(&p);
            let q = kp_pulse::io::parse_pulse_csv(&written).expect("round trip");
            assert_eq!(p.frame, q.frame);
            assert_eq!(p.grid.len(), q.grid.len());
            for (a, b) in p.grid.iter().zip(q.grid.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            for (ca, cb) in p.controls.iter().zip(q.controls.iter()) {
                for (a, b) in ca.iter().zip(cb.iter()) {
                    assert_eq!(a.re.to_bits(), b.re.to_bits());
                    assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
        }
    }
});
