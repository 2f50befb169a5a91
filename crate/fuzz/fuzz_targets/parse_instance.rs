#![no_main]

use libfuzzer_sys::fuzz_target;
use srbm_cli::instance::parse_instance;

fuzz_target!(|data: &str| {
    if let Ok(instance) = parse_instance(data) {
        let _ = instance.data();
    }
});
