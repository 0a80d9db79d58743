//! Versioned JSON and CSV outputs and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty printer that writes every real with 17 significant digits so
/// values round-trip exactly.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| CliError::Numeric(format!("cannot serialise output: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Wraps a result with the schema version and the producing command.
#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    result: &'a T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run. Written beside the outputs so the
/// outputs themselves stay byte-identical across reruns.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<InputDigest>,
    pub duration_seconds: f64,
}

/// Collects the files of one run inside the output directory.
pub struct Run {
    command: String,
    dir: PathBuf,
    inputs: Vec<InputDigest>,
    outputs: Vec<InputDigest>,
}

impl Run {
    pub fn new(command: &str, dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Parameter(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Run {
            command: command.into(),
            dir: dir.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Parameter(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Parameter(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(InputDigest {
            path: name.into(),
            sha256: sha256_hex(bytes),
        });
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let bytes = to_json(&Versioned {
            schema_version: SCHEMA_VERSION,
            command: &self.command,
            result: value,
        })?;
        self.write(name, &bytes)
    }

    /// Writes a value that carries its own `schema_version`.
    pub fn write_document<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let bytes = to_json(value)?;
        self.write(name, &bytes)
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Numeric(format!("cannot write {name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Numeric(format!("cannot write {name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn finish(self, config: Value, seed: Option<u64>, duration_seconds: f64) -> Result<(), CliError> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command: self.command.clone(),
            inputs: self.inputs,
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.outputs,
            duration_seconds,
        };
        let bytes = to_json(&manifest)?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, bytes).map_err(|e| CliError::Parameter(format!("cannot write {}: {e}", path.display())))
    }
}

/// Real formatted with 17 significant digits for CSV cells.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}
