//! Self-describing scan CSV files and oracle-grid export.
//!
//! A scan file starts with `# key = value` comment lines: the full run
//! configuration (config-file vocabulary), the engine, the delay unit and, for
//! sampled scans, the RNG seed. Then follows a `delay,probability[,counts]`
//! header and one row per point. Floats are written in their shortest
//! round-trip form, so reading a file reproduces the scan exactly.
//!
//! Foreign files need only `scheme` and `delay_unit` in the comment block;
//! `value` is accepted as an alias for the probability column.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::fock::OracleSample;
use crate::types::{DelayUnit, DetectionScheme, PatternScan, ScanPoint};

/// Metadata carried in a scan file's comment block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanHeader {
    pub engine: Option<String>,
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
}

/// A parsed scan file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFile {
    pub header: ScanHeader,
    pub scan: PatternScan,
}

const CONFIG_KEYS: [&str; 14] = [
    "omega0",
    "delta_omega",
    "mu",
    "rep_rate",
    "scheme",
    "mode",
    "start",
    "step",
    "count",
    "path_multiplier",
    "eta",
    "dc",
    "integration_time",
    "max_photons",
];

fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Writes a scan with its header.
pub fn write_scan<W: Write>(mut out: W, header: &ScanHeader, scan: &PatternScan) -> std::io::Result<()> {
    writeln!(out, "# noon scan")?;
    if let Some(engine) = &header.engine {
        writeln!(out, "# engine = {engine}")?;
    }
    match &header.config {
        Some(cfg) => {
            let cfg = RunConfig { scheme: Some(scan.scheme()), ..*cfg };
            for (k, v) in cfg.entries() {
                writeln!(out, "# {k} = {v}")?;
            }
        }
        None => writeln!(out, "# scheme = \"{}\"", scan.scheme())?,
    }
    writeln!(out, "# delay_unit = {}", scan.delay_unit())?;
    if let Some(seed) = header.seed {
        writeln!(out, "# seed = {seed}")?;
    }
    let with_counts = scan.points().iter().any(|p| p.counts.is_some());
    writeln!(out, "{}", if with_counts { "delay,probability,counts" } else { "delay,probability" })?;
    for p in scan.points() {
        write!(out, "{},{}", float(p.delay), float(p.probability))?;
        if with_counts {
            match p.counts {
                Some(c) => write!(out, ",{c}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Writes the sampled counts of a scan as `delay,counts`.
pub fn write_counts<W: Write>(mut out: W, scan: &PatternScan) -> std::io::Result<()> {
    writeln!(out, "# noon counts")?;
    writeln!(out, "# scheme = \"{}\"", scan.scheme())?;
    writeln!(out, "# delay_unit = {}", scan.delay_unit())?;
    writeln!(out, "delay,counts")?;
    for p in scan.points() {
        writeln!(out, "{},{}", float(p.delay), p.counts.map(|c| c.to_string()).unwrap_or_default())?;
    }
    out.flush()
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { source_name: source.to_string(), line, message: message.into() }
}

/// Parses a scan file. `source` names the input in error messages.
pub fn read_scan<R: BufRead>(input: R, source: &str) -> Result<ScanFile> {
    let mut comments: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut body = String::new();
    let mut body_start = 0;
    let mut in_body = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let lineno = idx + 1;
        if !in_body {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(c) = t.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    comments.insert(k.trim().to_string(), (lineno, v.trim().to_string()));
                }
                continue;
            }
            in_body = true;
            body_start = lineno;
        }
        body.push_str(&line);
        body.push('\n');
    }
    if !in_body {
        return Err(parse_err(source, 1, "no column header found"));
    }

    let entry = |k: &str| comments.get(k);
    let unquote = |v: &str| v.trim_matches('"').to_string();
    let (line, scheme_text) = entry("scheme").ok_or_else(|| parse_err(source, 1, "header lacks `scheme`"))?;
    let scheme: DetectionScheme = unquote(scheme_text).parse().map_err(|e: String| parse_err(source, *line, e))?;
    let (line, unit_text) = entry("delay_unit").ok_or_else(|| parse_err(source, 1, "header lacks `delay_unit`"))?;
    let unit: DelayUnit = unquote(unit_text).parse().map_err(|e: String| parse_err(source, *line, e))?;
    let engine = entry("engine").map(|(_, v)| unquote(v));
    let seed = match entry("seed") {
        Some((line, v)) => Some(v.parse::<u64>().map_err(|e| parse_err(source, *line, format!("bad seed: {e}")))?),
        None => None,
    };
    let config = if entry("omega0").is_some() {
        let text: String = CONFIG_KEYS
            .iter()
            .filter_map(|k| entry(k).map(|(_, v)| format!("{k} = {v}\n")))
            .collect();
        let first = CONFIG_KEYS.iter().filter_map(|k| entry(k).map(|(l, _)| *l)).min().unwrap_or(1);
        Some(config::parse(&text).map_err(|e| parse_err(source, first, format!("embedded configuration: {e}")))?)
    } else {
        None
    };

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(source, body_start, e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let with_counts = match cols.as_slice() {
        ["delay", "probability" | "value"] => false,
        ["delay", "probability" | "value", "counts"] => true,
        other => {
            return Err(parse_err(
                source,
                body_start,
                format!("expected columns delay,probability[,counts], got {}", other.join(",")),
            ))
        }
    };
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| body_start + p.line() as usize - 1).unwrap_or(body_start);
            parse_err(source, line, e.to_string())
        })?;
        let line = body_start + rec.position().map(|p| p.line() as usize).unwrap_or(1) - 1;
        if rec.len() != cols.len() {
            return Err(parse_err(source, line, format!("expected {} fields, found {}", cols.len(), rec.len())));
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| parse_err(source, line, format!("bad {name} {:?}: {e}", &rec[i])))
        };
        let delay = field(0, "delay")?;
        let probability = field(1, "probability")?;
        let counts = if with_counts && !rec[2].is_empty() {
            Some(rec[2].parse::<u64>().map_err(|e| parse_err(source, line, format!("bad counts {:?}: {e}", &rec[2])))?)
        } else {
            None
        };
        if !(0.0..=1.0).contains(&probability) {
            return Err(parse_err(source, line, format!("probability {probability} outside [0, 1]")));
        }
        if let Some(prev) = points.last().map(|p: &ScanPoint| p.delay) {
            let increasing = points.len() < 2 || points[1].delay > points[0].delay;
            let ok = if points.len() < 2 { delay != prev } else if increasing { delay > prev } else { delay < prev };
            if !ok || !delay.is_finite() {
                return Err(parse_err(source, line, "delays are not strictly monotonic"));
            }
        }
        points.push(ScanPoint { delay, probability, counts });
    }
    let scan = PatternScan::new(scheme, unit, points).map_err(|e| parse_err(source, body_start, e.to_string()))?;
    Ok(ScanFile { header: ScanHeader { engine, config, seed }, scan })
}

/// Writes a scan file to `path`.
pub fn save_scan(path: impl AsRef<Path>, header: &ScanHeader, scan: &PatternScan) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_scan(std::io::BufWriter::new(file), header, scan).map_err(|e| Error::io(path, e))
}

/// Reads a scan file from `path`.
pub fn load_scan(path: impl AsRef<Path>) -> Result<ScanFile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scan(std::io::BufReader::new(file), &path.display().to_string())
}

/// Writes oracle samples as `scheme,indistinguishability,phase,probability`.
pub fn write_oracle_grid<W: Write>(out: W, samples: &[OracleSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Io { path: "oracle grid".into(), source: e.into() };
    w.write_record(["scheme", "indistinguishability", "phase", "probability"]).map_err(wrap)?;
    for s in samples {
        w.write_record([s.scheme.to_string(), float(s.indistinguishability), float(s.phase), float(s.probability)])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("oracle grid", e))
}
