//! On-disk snapshots: a JSON header next to a CSV of amplitude rows.
//!
//! Rows are `index,re,im` (spinors: `index,re_upper,im_upper,re_lower,im_lower`).
//! Floats are written in shortest round-trip form, so reading back is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpinorField, TwoParticleField, WavefunctionField};
use crate::grid::Grid1D;
use crate::propagate::{Direction, EvolutionRecord, Snapshot};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Single,
    Pair,
    Spinor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub kind: FieldKind,
    pub grid: Grid1D,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid2: Option<Grid1D>,
    pub time: f64,
    pub normalized: bool,
    pub rows: usize,
}

/// Fields that can be written as a header plus CSV rows.
pub trait FieldIo: Snapshot + Sized {
    const KIND: FieldKind;
    fn header(&self) -> FieldHeader;
    fn rows(&self) -> Vec<Vec<f64>>;
    fn from_rows(header: &FieldHeader, rows: Vec<Vec<f64>>) -> Result<Self>;
}

fn row_count(h: &FieldHeader) -> usize {
    h.grid.len() * h.grid2.map_or(1, |g| g.len())
}

fn complex_column(rows: &[Vec<f64>], re: usize) -> Vec<C64> {
    rows.iter().map(|r| C64::new(r[re], r[re + 1])).collect()
}

impl FieldIo for WavefunctionField {
    const KIND: FieldKind = FieldKind::Single;

    fn header(&self) -> FieldHeader {
        FieldHeader {
            kind: Self::KIND,
            grid: *self.grid(),
            grid2: None,
            time: self.time(),
            normalized: self.is_normalized(),
            rows: self.grid().len(),
        }
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.values().iter().map(|z| vec![z.re, z.im]).collect()
    }

    fn from_rows(h: &FieldHeader, rows: Vec<Vec<f64>>) -> Result<Self> {
        let f = WavefunctionField::new(h.grid, complex_column(&rows, 0), h.time)?;
        if h.normalized {
            if !f.check_normalized() {
                return Err(Error::Format(format!("header says normalized but norm^2 = {}", f.norm_sq())));
            }
            return Ok(WavefunctionField::from_parts_unchecked(h.grid, f.into_values(), h.time, true));
        }
        Ok(f)
    }
}

impl FieldIo for TwoParticleField {
    const KIND: FieldKind = FieldKind::Pair;

    fn header(&self) -> FieldHeader {
        let (g1, g2) = self.grids();
        FieldHeader {
            kind: Self::KIND,
            grid: *g1,
            grid2: Some(*g2),
            time: self.time(),
            normalized: (self.norm_sq() - 1.0).abs() < 1e-10,
            rows: self.values().len(),
        }
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.values().iter().map(|z| vec![z.re, z.im]).collect()
    }

    fn from_rows(h: &FieldHeader, rows: Vec<Vec<f64>>) -> Result<Self> {
        let g2 = h.grid2.ok_or_else(|| Error::Format("pair header lacks grid2".into()))?;
        TwoParticleField::new(h.grid, g2, complex_column(&rows, 0), h.time)
    }
}

impl FieldIo for SpinorField {
    const KIND: FieldKind = FieldKind::Spinor;

    fn header(&self) -> FieldHeader {
        FieldHeader {
            kind: Self::KIND,
            grid: *self.grid(),
            grid2: None,
            time: self.time(),
            normalized: (self.norm_sq() - 1.0).abs() < 1e-10,
            rows: self.grid().len(),
        }
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.upper()
            .iter()
            .zip(self.lower())
            .map(|(u, l)| vec![u.re, u.im, l.re, l.im])
            .collect()
    }

    fn from_rows(h: &FieldHeader, rows: Vec<Vec<f64>>) -> Result<Self> {
        SpinorField::new(h.grid, complex_column(&rows, 0), complex_column(&rows, 2), h.time)
    }
}

fn columns(kind: FieldKind) -> usize {
    match kind {
        FieldKind::Spinor => 4,
        _ => 2,
    }
}

/// Writes `<stem>.json` and `<stem>.csv`.
pub fn write_field<F: FieldIo>(field: &F, stem: &Path) -> Result<()> {
    let header = field.header();
    fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
    let mut out = String::with_capacity(header.rows * 48);
    for (i, row) in field.rows().iter().enumerate() {
        write!(out, "{i}").unwrap();
        for v in row {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    fs::write(stem.with_extension("csv"), out)?;
    Ok(())
}

pub fn read_field<F: FieldIo>(stem: &Path) -> Result<F> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    if header.kind != F::KIND {
        return Err(Error::Format(format!("expected a {:?} field, found {:?}", F::KIND, header.kind)));
    }
    if header.rows != row_count(&header) {
        return Err(Error::Format(format!("header rows {} disagree with the grid", header.rows)));
    }
    let text = fs::read_to_string(stem.with_extension("csv"))?;
    let rows = parse_rows(&text, columns(header.kind))?;
    if rows.len() != header.rows {
        return Err(Error::Format(format!("expected {} rows, found {}", header.rows, rows.len())));
    }
    F::from_rows(&header, rows)
}

fn parse_rows(text: &str, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut parts = line.split(',');
        let idx: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("line {}: bad index", line_no + 1)))?;
        if idx != rows.len() {
            return Err(Error::Format(format!("line {}: index {idx} out of order", line_no + 1)));
        }
        let vals = parts
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", line_no + 1)))?;
        if vals.len() != cols {
            return Err(Error::Format(format!("line {}: {} columns, expected {}", line_no + 1, vals.len() + 1, cols + 1)));
        }
        rows.push(vals);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub kind: FieldKind,
    pub dt: f64,
    pub stride: usize,
    pub direction: Direction,
    pub times: Vec<f64>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

/// Writes a record as a directory: `record.json` plus one header/CSV pair per snapshot.
pub fn write_record<F: FieldIo>(rec: &EvolutionRecord<F>, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(rec.len());
    for (k, s) in rec.snapshots.iter().enumerate() {
        let stem = format!("snap_{k:05}");
        write_field(s, &dir.join(&stem))?;
        files.push(stem);
    }
    let header = RecordHeader {
        kind: F::KIND,
        dt: rec.dt,
        stride: rec.stride,
        direction: rec.direction,
        times: rec.times(),
        files,
        warnings: rec.warnings.clone(),
    };
    let path = dir.join("record.json");
    fs::write(&path, serde_json::to_string_pretty(&header)?)?;
    Ok(path)
}

pub fn read_record<F: FieldIo>(dir: &Path) -> Result<EvolutionRecord<F>> {
    let header: RecordHeader = serde_json::from_str(&fs::read_to_string(dir.join("record.json"))?)?;
    if header.kind != F::KIND {
        return Err(Error::Format(format!("expected a {:?} record, found {:?}", F::KIND, header.kind)));
    }
    let snapshots = header
        .files
        .iter()
        .map(|stem| read_field::<F>(&dir.join(stem)))
        .collect::<Result<Vec<_>>>()?;
    for (s, &t) in snapshots.iter().zip(&header.times) {
        if s.time() != t {
            return Err(Error::Format(format!("snapshot time {} differs from listed {t}", s.time())));
        }
    }
    Ok(EvolutionRecord {
        snapshots,
        dt: header.dt,
        stride: header.stride,
        direction: header.direction,
        warnings: header.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_packet;
    use crate::propagate::{dirac_packet, evolve_window, Potential};

    #[test]
    fn single_field_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::centered(128, 30.0, 0.0).unwrap();
        let f = gaussian_packet(&g, 0.3, 1.1, 1.7).unwrap().with_time(0.25);
        write_field(&f, &dir.path().join("f")).unwrap();
        let back: WavefunctionField = read_field(&dir.path().join("f")).unwrap();
        assert_eq!(back, f);
        assert!(back.is_normalized());
    }

    #[test]
    fn spinor_rows_carry_both_components() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::centered(64, 40.0, 0.0).unwrap();
        let s = dirac_packet(&g, 0.0, 0.5, 3.0, 1.0, 1.0, 0.0).unwrap();
        write_field(&s, &dir.path().join("s")).unwrap();
        let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), 5);
        let back: SpinorField = read_field(&dir.path().join("s")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn pair_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::centered(16, 16.0, 0.0).unwrap();
        let p = TwoParticleField::from_fn(g, g, 1.5, |a, b| C64::new((-(a * a) - b * b).exp(), a * b * 0.01)).unwrap();
        write_field(&p, &dir.path().join("p")).unwrap();
        let back: TwoParticleField = read_field(&dir.path().join("p")).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn record_round_trip_and_kind_check() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::centered(64, 30.0, 0.0).unwrap();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.5).unwrap().with_time(1.0);
        let rec = evolve_window(&f, &Potential::Free, 1.0, 0.0, 0.05, 5).unwrap();
        write_record(&rec, dir.path()).unwrap();
        let back: EvolutionRecord = read_record(dir.path()).unwrap();
        assert_eq!(back.snapshots, rec.snapshots);
        assert_eq!(back.direction, Direction::Backward);
        assert!(read_record::<SpinorField>(dir.path()).is_err());
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(parse_rows("0,1.0\n", 2).is_err());
        assert!(parse_rows("1,1.0,2.0\n", 2).is_err());
        assert!(parse_rows("0,1.0,x\n", 2).is_err());
        assert_eq!(parse_rows("0,1.0,2.0\n\n", 2).unwrap().len(), 1);
    }
}
