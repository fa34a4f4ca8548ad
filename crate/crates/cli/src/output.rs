//! Output files, checksums and the run manifest.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Floats with 17 significant digits, as in the CSV outputs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Json17(PrettyFormatter<'static>);

impl Formatter for Json17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Json17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub config: Value,
    pub outputs: Vec<OutputFile>,
    pub duration_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the outputs of one run into a directory and records their checksums.
pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.files.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        self.write(name, &to_json_string(value))
    }

    /// Writes `manifest.json` through a temporary file and a rename, so a
    /// manifest is only ever seen complete and after every output exists.
    pub fn finish(self, config: Value, started: Instant) -> Result<RunManifest> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            config,
            outputs: self.files,
            duration_seconds: started.elapsed().as_secs_f64(),
        };
        let tmp = self.dir.join(format!("{MANIFEST_FILE}.tmp"));
        let dst = self.dir.join(MANIFEST_FILE);
        std::fs::write(&tmp, to_json_string(&manifest))
            .map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
        std::fs::rename(&tmp, &dst).map_err(|e| CliError::io(format!("renaming to {}", dst.display()), e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_floats_have_seventeen_digits() {
        let s = to_json_string(&json!({"x": 0.1, "n": 3, "s": "a"}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
