#![no_main]

use libfuzzer_sys::fuzz_target;
use srbm_cli::report::DiagnosisDocument;

fuzz_target!(|data: &str| {
    if let Ok(doc) = DiagnosisDocument::from_json(data) {
        let _ = doc.inconsistencies();
        let _ = doc.revalidate();
    }
});
