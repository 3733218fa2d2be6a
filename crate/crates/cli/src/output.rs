use std::path::Path;

use rac::RoundStats;
use serde_json::{json, Map, Value};

use crate::Exit;

pub fn write(path: &Path, text: &str) -> Result<(), Exit> {
    Ok(rac::io::write_file(path, text)?)
}

/// JSON-lines text from records.
pub fn lines<'a>(records: impl IntoIterator<Item = &'a Value>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Summary record: `{"summary": true, "command": ..., <fields>}`.
pub fn summary(command: &str, fields: Value) -> Value {
    let mut m = Map::new();
    m.insert("summary".into(), Value::Bool(true));
    m.insert("command".into(), command.into());
    if let Value::Object(f) = fields {
        m.extend(f);
    }
    Value::Object(m)
}

/// Total wall time per phase over all rounds.
pub fn phase_secs(rounds: &[RoundStats]) -> Value {
    json!({
        "find_reciprocal_nearest_neighbors": rounds.iter().map(|r| r.find_rnn_secs).sum::<f64>(),
        "merge": rounds.iter().map(|r| r.merge_secs).sum::<f64>(),
        "update_nearest_neighbors": rounds.iter().map(|r| r.nn_update_secs).sum::<f64>(),
    })
}

pub fn print(record: &Value) {
    println!("{record}");
}
