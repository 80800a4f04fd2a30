use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// `#` lines opening every output file. The timestamp is the only
/// run-dependent field and lives here, never in the data section.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub overrides: Vec<String>,
    pub timestamp: u64,
}

impl Provenance {
    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# tool: lrkam {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# command: {}", self.command)?;
        writeln!(w, "# config_sha256: {}", self.config_sha256)?;
        writeln!(w, "# seed: {}", self.seed)?;
        let o = if self.overrides.is_empty() { "none".to_string() } else { self.overrides.join(",") };
        writeln!(w, "# overrides: {o}")?;
        writeln!(w, "# timestamp_unix: {}", self.timestamp)
    }
}

pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub provenance: Provenance,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, provenance: Provenance) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            provenance,
            written: Vec::new(),
        })
    }

    /// Opens `<stem>.<ext>` and writes the header.
    pub fn open(&mut self, file: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(file);
        let mut w = BufWriter::new(File::create(&path)?);
        self.provenance.write(&mut w)?;
        self.written.push(path);
        Ok(w)
    }

    /// Rows in the selected format.
    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        let name = format!("{stem}.{}", self.format.extension());
        let format = self.format;
        let mut w = self.open(&name)?;
        match format {
            Format::Csv => {
                let mut wr = csv::Writer::from_writer(&mut w);
                for r in rows {
                    wr.serialize(r)?;
                }
                wr.flush()?;
            }
            Format::Jsonl => {
                for r in rows {
                    serde_json::to_writer(&mut w, r)?;
                    w.write_all(b"\n")?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// A single JSON object; summaries are always JSON lines.
    pub fn summary<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let mut w = self.open("summary.jsonl")?;
        serde_json::to_writer(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// `(x, y, label)` rows, always CSV.
    pub fn plot(&mut self, points: &[PlotPoint]) -> Result<(), CliError> {
        let mut w = self.open("plot.csv")?;
        let mut wr = csv::Writer::from_writer(&mut w);
        for p in points {
            wr.serialize(p)?;
        }
        wr.flush()?;
        drop(wr);
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

impl PlotPoint {
    pub fn new(x: f64, y: f64, label: impl Into<String>) -> Self {
        Self { x, y, label: label.into() }
    }
}
