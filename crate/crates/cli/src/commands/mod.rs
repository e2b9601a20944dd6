pub mod fixture;
pub mod materials;
pub mod pipeline;
pub mod run;
pub mod scene;
pub mod trace;
pub mod validate;

use serde_json::Value;

/// What a command reports on success: a JSON document, a human summary and
/// the exit code (nonzero for refusals that still produce a report).
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub code: i32,
}

impl Outcome {
    pub fn ok(json: Value, text: String) -> Self {
        Outcome { json, text, code: 0 }
    }
}
