//! Plain-text tables: vector files, finite-space CSV, trial logs and net
//! exports.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use saatrace::family::{FiniteSpace, Sphere};
use saatrace::nets::Net;
use saatrace::validate::{ExactDistribution, TrialRecord};

use crate::error::FormatError;

/// One decimal per line; blank lines and `#` comments are skipped.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| FormatError::parse(i + 1, format!("bad value '{t}'")))?,
        );
    }
    Ok(out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, FormatError> {
    parse_vector(&std::fs::read_to_string(path)?)
}

pub fn write_vector<W: Write>(mut w: W, v: &[f64]) -> Result<(), FormatError> {
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

/// One `θ` per row. A first row that does not parse as numbers is a header.
pub fn parse_space<R: Read>(r: R) -> Result<FiniteSpace, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row: Result<Vec<f64>, _> = record.iter().map(str::parse).collect();
        match row {
            Ok(p) => points.push(p),
            Err(_) if i == 0 => continue,
            Err(_) => {
                let line = record.position().map_or(i + 1, |p| p.line() as usize);
                return Err(FormatError::parse(line, "non-numeric entry"));
            }
        }
    }
    Ok(FiniteSpace::new(points)?)
}

pub fn read_space(path: &Path) -> Result<FiniteSpace, FormatError> {
    parse_space(std::fs::File::open(path)?)
}

pub const TRIAL_COLUMNS: [&str; 5] = ["trial", "seed", "thetaHatIndex", "backwardError", "fail"];

/// Trial log; a missing index is an empty field.
pub fn write_trials<W: Write>(w: W, records: &[TrialRecord]) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRIAL_COLUMNS)?;
    for r in records {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.theta_hat_index.map(|i| i.to_string()).unwrap_or_default(),
            r.backward_error.to_string(),
            u8::from(r.fail).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trials<R: Read>(r: R) -> Result<Vec<TrialRecord>, FormatError> {
    let mut reader = csv::Reader::from_reader(r);
    if reader.headers()?.iter().ne(TRIAL_COLUMNS) {
        return Err(FormatError::parse(1, "unexpected trial log columns"));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |k: usize| record.get(k).unwrap_or("");
        let bad = |what: &str| FormatError::parse(line, format!("bad {what}"));
        out.push(TrialRecord {
            trial: field(0).parse().map_err(|_| bad("trial"))?,
            seed: field(1).parse().map_err(|_| bad("seed"))?,
            theta_hat_index: match field(2) {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("thetaHatIndex"))?),
            },
            backward_error: field(3).parse().map_err(|_| bad("backwardError"))?,
            fail: match field(4) {
                "1" => true,
                "0" => false,
                _ => return Err(bad("fail flag")),
            },
        });
    }
    Ok(out)
}

/// Distribution table of an exact enumeration: `value,probability,count`.
pub fn write_distribution<W: Write>(w: W, dist: &ExactDistribution) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["value", "probability", "count"])?;
    let total = dist.total() as f64;
    for &(v, c) in &dist.atoms {
        out.write_record([v.to_string(), (c as f64 / total).to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetHeader {
    pub eta: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub cardinality: usize,
    pub center: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub floor: Option<(usize, f64)>,
}

/// `# {header json}` line followed by a CSV of net points.
pub fn write_net<W: Write>(mut w: W, net: &Net) -> Result<(), FormatError> {
    let sphere = net.sphere();
    let header = NetHeader {
        eta: net.eta(),
        b: sphere.radius(),
        k: sphere.param_dim(),
        cardinality: net.len(),
        center: sphere.center().to_vec(),
        floor: sphere.floor().map(|f| (f.index, f.min)),
    };
    writeln!(w, "# {}", serde_json::to_string(&header).expect("header serializes"))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record((1..=header.k).map(|i| format!("theta{i}")))?;
    for p in net.points() {
        out.write_record(p.iter().map(f64::to_string))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_net(text: &str) -> Result<Net, FormatError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| FormatError::parse(1, "missing net header"))?;
    let header: NetHeader =
        serde_json::from_str(json).map_err(|e| FormatError::parse(1, format!("net header: {e}")))?;
    let mut sphere = Sphere::new(header.center, header.b)?;
    if let Some((index, min)) = header.floor {
        sphere = sphere.with_floor(index, min)?;
    }
    let space = parse_space(rest.as_bytes())?;
    if space.len() != header.cardinality || space.param_dim() != header.k {
        return Err(FormatError::parse(1, "net header disagrees with the point table"));
    }
    Ok(Net::from_points(sphere, header.eta, space.points().to_vec())?)
}
