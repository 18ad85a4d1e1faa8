#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = kp_pulse::io::parse_config(text) {
            // anything that parses must satisfy the config invariants
            assert!(cfg.validate().is_ok());
            assert!(cfg.levels.windows(2).all(|w| w[0] < w[1]));
            assert!(cfg.step > 0.0 && cfg.samples >= 2);
            assert!(cfg.level_system().is_ok());
        }
    }
});
