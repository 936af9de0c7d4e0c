//! Exit-code discipline, input hashing, and the three artifact writers
//! (JSON, CSV, SVG comment headers). Every artifact embeds the crate
//! version and the sha256 of each input file; commands that consume
//! randomness also embed the seed and generator id. Nothing here writes
//! a timestamp, so identical invocations produce identical bytes.

use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

/// Errors carry their process exit code: 2 for unreadable or malformed
/// inputs, 3 for well-formed inputs that violate a domain constraint,
/// 4 for requests beyond a size or depth cap.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Validation(String),
    Capability(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Capability(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "{m}"),
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Capability(m) => write!(f, "{m}"),
        }
    }
}

impl From<monosig::Error> for CliError {
    fn from(e: monosig::Error) -> Self {
        if e.is_capacity() {
            CliError::Capability(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

/// An input file whose digest has been recorded in artifact metadata.
pub struct LoadedFile {
    pub name: String,
    pub text: String,
}

/// Provenance block shared by every artifact a command writes.
pub struct Meta {
    pub command: &'static str,
    pub inputs: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub algorithm: Option<&'static str>,
}

impl Meta {
    pub fn new(command: &'static str) -> Self {
        Meta {
            command,
            inputs: Vec::new(),
            seed: None,
            algorithm: None,
        }
    }

    /// Reads an input file, records its hash, and hands back the text.
    pub fn read_input(&mut self, path: &Path) -> Result<LoadedFile, CliError> {
        let name = path.display().to_string();
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Parse(format!("cannot read {name}: {e}")))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::Parse(format!("{name}: not valid UTF-8")))?;
        self.inputs.push((name.clone(), sha256));
        Ok(LoadedFile { name, text })
    }

    pub fn to_value(&self) -> serde_json::Value {
        let inputs: Vec<serde_json::Value> = self
            .inputs
            .iter()
            .map(|(f, h)| serde_json::json!({"file": f, "sha256": h}))
            .collect();
        let mut obj = serde_json::Map::new();
        obj.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        obj.insert("command".into(), self.command.into());
        obj.insert("inputs".into(), inputs.into());
        if let Some(seed) = self.seed {
            obj.insert("seed".into(), seed.into());
        }
        if let Some(alg) = self.algorithm {
            obj.insert("algorithm".into(), alg.into());
        }
        serde_json::Value::Object(obj)
    }

    /// `# key=value` header lines for CSV artifacts.
    pub fn csv_header(&self) -> String {
        let mut s = format!(
            "# version={}\n# command={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for (f, h) in &self.inputs {
            s.push_str(&format!("# input={f} sha256={h}\n"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed={seed}\n"));
        }
        if let Some(alg) = self.algorithm {
            s.push_str(&format!("# algorithm={alg}\n"));
        }
        s
    }

    /// One-line provenance comment body for SVG artifacts.
    pub fn svg_comment(&self) -> String {
        let mut s = format!(
            "version={} command={}",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for (f, h) in &self.inputs {
            s.push_str(&format!(" input={f} sha256={h}"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s
    }
}

/// Six significant digits, the CSV-wide numeric format.
pub fn sig6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.5e}")
    } else if x.is_infinite() && x > 0.0 {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", path.display())))
}

/// Writes `payload` (a JSON object) with the metadata block merged in,
/// full float precision, stable key order.
pub fn write_json(
    path: &Path,
    meta: &Meta,
    payload: serde_json::Value,
) -> Result<(), CliError> {
    let mut obj = match payload {
        serde_json::Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    obj.insert("meta".into(), meta.to_value());
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
        .expect("json serialization") + "\n";
    write_artifact(path, &text)
}

/// Same as `write_json` but single-line, for bulk artifacts.
pub fn write_json_compact(
    path: &Path,
    meta: &Meta,
    payload: serde_json::Value,
) -> Result<(), CliError> {
    let mut obj = match payload {
        serde_json::Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    obj.insert("meta".into(), meta.to_value());
    let text = serde_json::to_string(&serde_json::Value::Object(obj))
        .expect("json serialization") + "\n";
    write_artifact(path, &text)
}

pub fn write_csv(path: &Path, meta: &Meta, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut text = meta.csv_header();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_artifact(path, &text)
}

pub fn write_svg(path: &Path, contents: &str) -> Result<(), CliError> {
    write_artifact(path, contents)
}
