//! Bundled test cases, compiled into the binary.

use super::{load_case, Case};

const CASE33_30: &str = include_str!("../../cases/case33_30.toml");
const CASE5_4: &str = include_str!("../../cases/case5_4.toml");

/// 33-bus feeder coupled to a 30-node heating network over 24 hourly
/// periods — the full-size bundled case.
pub fn case33_30() -> Case {
    load_case(CASE33_30).expect("bundled case33_30 parses")
}

/// 5-bus feeder coupled to a 5-node heating network — a small case for
/// fast end-to-end runs.
pub fn case5_4() -> Case {
    load_case(CASE5_4).expect("bundled case5_4 parses")
}
