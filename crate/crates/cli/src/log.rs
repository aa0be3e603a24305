//! One JSON object per line on stderr: `{"event": <name>, ...fields}`.

use std::io::Write;

use serde_json::{Map, Value};

pub fn event(name: &str, fields: Value) {
    let mut line = Map::new();
    line.insert("event".into(), Value::String(name.into()));
    if let Value::Object(fields) = fields {
        line.extend(fields);
    }
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{}", Value::Object(line));
}

pub fn warnings(stage: &str, items: &[procstory_labeler::Warning]) {
    for w in items {
        event(
            "warning",
            serde_json::json!({ "command": stage, "stage": w.stage, "message": w.message }),
        );
    }
}
