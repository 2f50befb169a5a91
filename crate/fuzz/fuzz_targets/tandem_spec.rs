#![no_main]

use libfuzzer_sys::fuzz_target;
use srbm_core::tandem::entrance_velocities;
use srbm_core::TandemSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<TandemSpec>(data) else {
        return;
    };
    if spec.check().is_err() {
        return;
    }
    let _ = spec.build_srbm();
    let _ = spec.tau_closed_form();
    let _ = spec.product_form_condition();
    let _ = entrance_velocities(&spec);
});
