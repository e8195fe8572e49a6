use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;

use serde_json::Value;

use divgen::exact::Q;
use divgen::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}:{}: '{}' is not a number", path.display(), i + 1, l.trim())))
        })
        .collect()
}

/// Rows of `n,risk`; a non-numeric first line is taken as a header.
pub fn read_risk_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => out.push(p),
            None if i == 0 => continue,
            None => return Err(Error::Config(format!("{}:{}: expected n,risk", path.display(), i + 1))),
        }
    }
    Ok(out)
}

pub fn q_str(q: &Q) -> String {
    q.to_string()
}

pub fn q_vec(v: &[Q]) -> Value {
    Value::from(v.iter().map(q_str).collect::<Vec<_>>())
}

/// Adds the schema version and command name to a JSON object.
pub fn envelope(command: &str, mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
        map.insert("command".into(), command.into());
    }
    body
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Resource(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Error::Resource(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

pub fn emit_json(out: Option<&Path>, command: &str, body: Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&envelope(command, body)).expect("JSON values serialize");
    emit(out, &text)
}

pub fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}
