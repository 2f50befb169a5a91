#![no_main]

use libfuzzer_sys::fuzz_target;
use srbm_cli::format::to_json;
use srbm_cli::instance::parse_instance;
use srbm_cli::report::{build_diagnosis, DEFAULT_TOL};

// Everything downstream of a successful parse must report errors, not panic.
fuzz_target!(|data: &str| {
    let Ok(instance) = parse_instance(data) else {
        return;
    };
    if let Ok(doc) = build_diagnosis(&instance, DEFAULT_TOL) {
        let _ = to_json(&doc);
    }
});
