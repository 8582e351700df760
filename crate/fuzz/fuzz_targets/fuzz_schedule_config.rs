#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapspec::config::ScheduleConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScheduleConfig::from_toml_str(text) else { return };
    if let Ok(stages) = cfg.stages() {
        assert!(!stages.is_empty() && stages.len() <= 64);
    }
    let _ = cfg.policy();
});
