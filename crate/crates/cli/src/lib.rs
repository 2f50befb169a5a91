//! Instance parsing, JSON documents and figures behind the `srbm` tool.

pub mod format;
pub mod instance;
pub mod plot;
pub mod report;
