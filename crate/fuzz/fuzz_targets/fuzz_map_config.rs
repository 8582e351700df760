#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapspec::config::MapConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = MapConfig::from_toml_str(text) else { return };
    if let Ok(model) = cfg.build() {
        let (a, b) = model.interval();
        assert!(a < b);
        let _ = cfg.numerics.pressure_options().unwrap();
    }
});
