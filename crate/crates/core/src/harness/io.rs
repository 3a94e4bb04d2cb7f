//! Flat-file formats: pulse CSV, JSON and JSON-lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::PulseWaveform;

#[derive(Serialize, Deserialize)]
struct PulseRow {
    t_us: f64,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "Y")]
    y: f64,
}

/// Writes `t_us,X,Y` with one row per sample at its left edge.
pub fn write_pulse_csv(path: &Path, pulse: &PulseWaveform) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for ((t, &x), &y) in pulse.times().into_iter().zip(pulse.x()).zip(pulse.y()) {
        w.serialize(PulseRow { t_us: t, x, y })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pulse CSV. Times must start at 0 and be evenly spaced; the
/// duration is inferred as n·Δt.
pub fn read_pulse_csv(path: &Path) -> Result<PulseWaveform> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_us", "X", "Y"] {
        return Err(Error::Parse(format!("{}: expected header t_us,X,Y", path.display())));
    }
    let rows: Vec<PulseRow> = r
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if rows.len() < 2 {
        return Err(Error::Parse(format!("{}: a pulse needs at least two rows", path.display())));
    }
    if rows.windows(2).any(|w| w[1].t_us <= w[0].t_us) {
        return Err(Error::Parse(format!("{}: times must be strictly increasing", path.display())));
    }
    if rows[0].t_us.abs() > 1e-12 {
        return Err(Error::Parse(format!("{}: first sample must start at t = 0", path.display())));
    }
    let n = rows.len();
    let dt = rows[n - 1].t_us / (n - 1) as f64;
    if rows.iter().enumerate().any(|(i, r)| (r.t_us - i as f64 * dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::Parse(format!("{}: samples must be evenly spaced", path.display())));
    }
    let (x, y) = rows.iter().map(|r| (r.x, r.y)).unzip();
    PulseWaveform::new(n as f64 * dt, x, y).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, records: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let x: Vec<f64> = (0..137).map(|i| (i as f64 * 0.1).sin() * 0.4).collect();
        let y: Vec<f64> = (0..137).map(|i| (i as f64 * 0.07).cos() * 0.3).collect();
        let p = PulseWaveform::new(0.1503, x, y).unwrap();
        write_pulse_csv(&path, &p).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_us,X,Y\n0.0,"), "{}", &text[..20]);
        let q = read_pulse_csv(&path).unwrap();
        assert_eq!(q.x(), p.x());
        assert_eq!(q.y(), p.y());
        assert!((q.duration() - p.duration()).abs() < 1e-15);
    }

    #[test]
    fn malformed_pulse_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, body).unwrap();
            p
        };
        for body in [
            "t,X,Y\n0,0,0\n1,0,0\n",
            "t_us,X,Y\n0,0,0\n",
            "t_us,X,Y\n0,0,0\n0,0,0\n",
            "t_us,X,Y\n0,0,0\n1,0,0\n3,0,0\n",
            "t_us,X,Y\n0,0.8,0.8\n1,0,0\n",
            "t_us,X,Y\n0,a,0\n1,0,0\n",
        ] {
            let err = read_pulse_csv(&write("bad.csv", body)).unwrap_err();
            assert!(matches!(err, Error::Parse(_)), "{body:?}: {err}");
        }
        assert!(matches!(read_pulse_csv(&dir.path().join("missing.csv")), Err(Error::NotFound(_))));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let rows = vec![vec![1.0, 2.0], vec![3.5]];
        write_jsonl(&path, &rows).unwrap();
        let back: Vec<Vec<f64>> = read_jsonl(&path).unwrap();
        assert_eq!(back, rows);
    }
}
