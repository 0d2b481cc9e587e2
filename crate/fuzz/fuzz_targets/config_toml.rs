#![no_main]

use libfuzzer_sys::fuzz_target;
use scgame::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_toml(text) {
            let _ = cfg.spec();
            let _ = cfg.path_config();
            let _ = cfg.to_toml();
        }
    }
});
