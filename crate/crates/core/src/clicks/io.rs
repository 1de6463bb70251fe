//! Click CSV files.
//!
//! ```text
//! # trials=1000000
//! trial_id,detector,time_ns
//! 0,D2,117
//! 4,D3,52
//! ```
//!
//! The `# trials=N` comment is mandatory so that trials without any click
//! are still counted.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Arms, ClickRecord, ClickStream, Detector, PairCounts, TrialCounts, TrialTable, WindowSpec};
use crate::error::{Error, Result};

pub const CLICK_HEADER: &str = "trial_id,detector,time_ns";

pub fn write_click_file(path: &Path, stream: &ClickStream) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "# trials={}", stream.trials)?;
        writeln!(out, "{CLICK_HEADER}")?;
        for r in &stream.records {
            writeln!(out, "{},{},{}", r.trial_id, r.detector, r.time_ns)?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_click_file(path: &Path) -> Result<ClickStream> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clicks(&text)
}

fn parse_clicks(text: &str) -> Result<ClickStream> {
    if text.trim().is_empty() {
        return Err(Error::EmptyFile);
    }
    let mut trials = None;
    for (i, line) in text.lines().enumerate() {
        let Some(comment) = line.trim().strip_prefix('#') else { continue };
        if let Some(value) = comment.trim().strip_prefix("trials=") {
            let n = value.trim().parse::<u64>().map_err(|_| Error::Parse {
                line: i as u64 + 1,
                msg: format!("invalid trial count `{}`", value.trim()),
            })?;
            trials = Some(n);
        }
    }
    let trials = trials.ok_or(Error::Parse { line: 1, msg: "missing `# trials=N` header".into() })?;

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(parse_error)?;
    if header.iter().collect::<Vec<_>>().join(",") != CLICK_HEADER {
        let line = header_line(text);
        return Err(Error::Parse { line, msg: format!("expected header `{CLICK_HEADER}`") });
    }

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Parse { line, msg: format!("invalid {what}") };
        let trial_id: u64 = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("trial_id"))?;
        let detector = rec.get(1).and_then(Detector::parse).ok_or_else(|| bad("detector"))?;
        let time_ns: u64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("time_ns"))?;
        if trial_id >= trials {
            return Err(Error::Parse { line, msg: format!("trial_id {trial_id} >= trials={trials}") });
        }
        records.push(ClickRecord { trial_id, detector, time_ns });
    }
    Ok(ClickStream { trials, records })
}

fn header_line(text: &str) -> u64 {
    let idx = text.lines().position(|l| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('#')
    });
    idx.map_or(1, |i| i as u64 + 1)
}

fn parse_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, msg: e.to_string() }
}

/// Per-trial pattern histogram of a click file.
pub fn ingest_table(path: &Path, windows: &WindowSpec, arms: Arms) -> Result<TrialTable> {
    let stream = read_click_file(path)?;
    TrialTable::from_records(stream.trials, &stream.records, windows, arms)
}

/// HBT counts of a click file with the default arms (D2, D3).
pub fn ingest(path: &Path, windows: &WindowSpec) -> Result<TrialCounts> {
    Ok(ingest_table(path, windows, Arms::default())?.counts())
}

/// Herald/read counts: a write event is a `herald` click in its signal
/// window, a read event a click of any `read` detector in its window.
pub fn ingest_pairs(stream: &ClickStream, windows: &WindowSpec, herald: Detector, read: &[Detector]) -> PairCounts {
    use std::collections::HashMap;
    let mut flags: HashMap<u64, (bool, bool)> = HashMap::new();
    for r in &stream.records {
        if !windows.signal(r.detector).contains(r.time_ns) {
            continue;
        }
        if r.detector == herald {
            flags.entry(r.trial_id).or_default().0 = true;
        } else if read.contains(&r.detector) {
            flags.entry(r.trial_id).or_default().1 = true;
        }
    }
    let (mut n_w, mut n_r, mut n_wr) = (0, 0, 0);
    for (w, r) in flags.into_values() {
        n_w += w as u64;
        n_r += r as u64;
        n_wr += (w && r) as u64;
    }
    PairCounts { trials: stream.trials, n_w, n_r, n_wr }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_line_numbers() {
        let ok = "# trials=3\ntrial_id,detector,time_ns\n0,D2,5\n2,3,7\n";
        let s = parse_clicks(ok).unwrap();
        assert_eq!(s.trials, 3);
        assert_eq!(s.records.len(), 2);
        assert_eq!(s.records[1].detector, Detector::D3);

        let bad = "# trials=3\ntrial_id,detector,time_ns\n0,D2,5\n1,D9,7\n";
        match parse_clicks(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let neg = "# trials=3\ntrial_id,detector,time_ns\n0,D2,-5\n";
        assert!(matches!(parse_clicks(neg), Err(Error::Parse { line: 3, .. })));
        let out_of_range = "# trials=3\ntrial_id,detector,time_ns\n3,D2,5\n";
        assert!(matches!(parse_clicks(out_of_range), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn header_and_empty_checks() {
        assert!(matches!(parse_clicks(""), Err(Error::EmptyFile)));
        assert!(matches!(parse_clicks("trial_id,detector,time_ns\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_clicks("# trials=2\nfoo,bar,baz\n"), Err(Error::Parse { line: 2, .. })));
        let empty = parse_clicks("# trials=10\ntrial_id,detector,time_ns\n").unwrap();
        assert_eq!(empty, ClickStream { trials: 10, records: vec![] });
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let stream = ClickStream {
            trials: 5,
            records: vec![
                ClickRecord { trial_id: 0, detector: Detector::D1, time_ns: 3 },
                ClickRecord { trial_id: 4, detector: Detector::D3, time_ns: 299 },
            ],
        };
        write_click_file(&path, &stream).unwrap();
        assert_eq!(read_click_file(&path).unwrap(), stream);
    }

    #[test]
    fn pair_counting() {
        let stream = ClickStream {
            trials: 10,
            records: vec![
                ClickRecord { trial_id: 0, detector: Detector::D1, time_ns: 3 },
                ClickRecord { trial_id: 0, detector: Detector::D3, time_ns: 30 },
                ClickRecord { trial_id: 1, detector: Detector::D1, time_ns: 3 },
                ClickRecord { trial_id: 2, detector: Detector::D2, time_ns: 3 },
                ClickRecord { trial_id: 2, detector: Detector::D3, time_ns: 8 },
            ],
        };
        let c = ingest_pairs(&stream, &WindowSpec::default(), Detector::D1, &[Detector::D2, Detector::D3]);
        assert_eq!(c, PairCounts { trials: 10, n_w: 2, n_r: 2, n_wr: 1 });
    }
}
