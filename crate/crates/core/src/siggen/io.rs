//! Line-oriented dataset files.
//!
//! ```text
//! # rmod-dataset v1 {"carrier_freq_hz":1000.0,...}
//! AM,250.0,1.2345,1234567890,0.98,0.71,...
//! ```
//!
//! The header carries the format version and the generation config as JSON.
//! Each following line is `label,message_freq_hz,message_phase_rad,seed,s_0,...,s_{N-1}`.
//! Reals are written as the shortest decimal that parses back to the same
//! `f64`, so write -> read -> write is byte-exact.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{GenConfig, ModulationClass, SignalRecord};
use crate::{Error, Result};

const MAGIC: &str = "# rmod-dataset v1 ";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: GenConfig,
    pub records: Vec<SignalRecord>,
}

impl Dataset {
    pub fn count(&self, class: ModulationClass) -> usize {
        self.records.iter().filter(|r| r.label == class).count()
    }
}

pub fn write_dataset_to<W: Write>(
    mut out: W,
    config: &GenConfig,
    records: &[SignalRecord],
) -> std::io::Result<()> {
    let header = serde_json::to_string(config).expect("GenConfig serializes");
    writeln!(out, "{MAGIC}{header}")?;
    let mut line = String::new();
    for rec in records {
        line.clear();
        let _ = write!(
            line,
            "{},{:?},{:?},{}",
            rec.label, rec.message_freq_hz, rec.message_phase_rad, rec.seed
        );
        for s in &rec.samples {
            let _ = write!(line, ",{s:?}");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn write_dataset(path: &Path, config: &GenConfig, records: &[SignalRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(BufWriter::new(file), config, records).map_err(|e| Error::io(path, e))
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::format(Some(line), format!("bad {what} `{field}`")))?;
    if !v.is_finite() {
        return Err(Error::format(Some(line), format!("non-finite {what}")));
    }
    Ok(v)
}

pub fn read_dataset_from<R: BufRead>(input: R) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::format(Some(1), e.to_string()))?,
        None => return Err(Error::format(None, "empty dataset file")),
    };
    let json = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::format(Some(1), "missing `# rmod-dataset v1` header"))?;
    let config: GenConfig = serde_json::from_str(json)
        .map_err(|e| Error::format(Some(1), format!("bad config: {e}")))?;
    config.validate()?;
    let n = config.sample_count();

    let mut records = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::format(Some(lineno), e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| {
            fields
                .next()
                .ok_or_else(|| Error::format(Some(lineno), format!("missing {what}")))
        };
        let label: ModulationClass = next("label")?
            .parse()
            .map_err(|e: String| Error::format(Some(lineno), e))?;
        let message_freq_hz = parse_f64(next("message_freq_hz")?, lineno, "message_freq_hz")?;
        let message_phase_rad = parse_f64(next("message_phase_rad")?, lineno, "message_phase_rad")?;
        let seed_field = next("seed")?;
        let seed: u64 = seed_field
            .parse()
            .map_err(|_| Error::format(Some(lineno), format!("bad seed `{seed_field}`")))?;
        let samples = fields
            .map(|f| parse_f64(f, lineno, "sample"))
            .collect::<Result<Vec<_>>>()?;
        if samples.len() != n {
            return Err(Error::format(
                Some(lineno),
                format!("expected {n} samples, found {}", samples.len()),
            ));
        }
        records.push(SignalRecord {
            label,
            samples,
            message_freq_hz,
            message_phase_rad,
            seed,
            config,
        });
    }
    Ok(Dataset { config, records })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(BufReader::new(file))
}
