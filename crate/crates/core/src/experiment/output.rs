//! Tables, CSV/JSON emission and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fit::FitResult;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Floats use 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_nan() => "NaN".into(),
            Cell::Float(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    /// Inverse of [`Cell::render`].
    pub fn parse(s: &str) -> Self {
        if let Ok(i) = s.parse::<i64>() {
            return Cell::Int(i);
        }
        match s {
            "true" => return Cell::Bool(true),
            "false" => return Cell::Bool(false),
            "NaN" => return Cell::Float(f64::NAN),
            "inf" => return Cell::Float(f64::INFINITY),
            "-inf" => return Cell::Float(f64::NEG_INFINITY),
            _ => {}
        }
        if s.contains('e') && !s.chars().any(|c| c.is_alphabetic() && c != 'e') {
            if let Ok(x) = s.parse::<f64>() {
                return Cell::Float(x);
            }
        }
        Cell::Text(s.to_string())
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn from_csv(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let columns = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(Cell::parse).collect());
        }
        Ok(Self { name: name.into(), columns, rows })
    }

    /// Array of row objects.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        m.insert(c.clone(), v.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Two-column series for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotData {
    fn render(&self) -> String {
        let mut s = format!("# {} {}\n", self.x_label, self.y_label);
        for (x, y) in &self.points {
            s.push_str(&format!("{} {}\n", Cell::Float(*x).render(), Cell::Float(*y).render()));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultBundle {
    pub experiment: String,
    pub tables: Vec<Table>,
    pub plots: Vec<PlotData>,
    pub fits: Vec<NamedFit>,
    /// Messages of failed rows, in row order.
    pub errors: Vec<String>,
}

impl ResultBundle {
    pub fn rows(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }

    /// Rows whose `converged` column is false.
    pub fn nonconverged(&self) -> usize {
        self.tables
            .iter()
            .filter_map(|t| t.column("converged"))
            .flatten()
            .filter(|c| **c == Cell::Bool(false))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub versions: Map<String, Value>,
    pub started_unix: f64,
    pub wall_time_seconds: f64,
    pub rows: usize,
    pub nonconverged_rows: usize,
    pub files: Vec<String>,
    pub fits: Vec<NamedFit>,
    #[serde(default)]
    pub row_errors: Vec<String>,
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    files.push(name.to_string());
    Ok(())
}

/// Writes every table as CSV and JSON, plot data as `.dat`, fits as
/// `fits.json`. Returns the file names in write order.
pub fn emit(bundle: &ResultBundle, dir: &Path) -> Result<Vec<String>> {
    if bundle.tables.iter().all(|t| t.rows.is_empty()) {
        return Err(Error::Config("nothing to emit: all result tables are empty".into()));
    }
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &bundle.tables {
        write(dir, &format!("{}.csv", t.name), &t.to_csv()?, &mut files)?;
        let json = serde_json::to_vec_pretty(&t.to_json())?;
        write(dir, &format!("{}.json", t.name), &json, &mut files)?;
    }
    for p in &bundle.plots {
        write(dir, &format!("{}.dat", p.name), p.render().as_bytes(), &mut files)?;
    }
    if !bundle.fits.is_empty() {
        write(dir, "fits.json", &serde_json::to_vec_pretty(&bundle.fits)?, &mut files)?;
    }
    Ok(files)
}

pub fn write_manifest(manifest: &Manifest, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["name", "n", "x", "ok"]);
        t.push(vec!["a".into(), 3usize.into(), 0.1f64.into(), true.into()]);
        t.push(vec!["b c".into(), 64usize.into(), (-1.0f64 / 3.0).into(), false.into()]);
        t.push(vec!["d".into(), 0usize.into(), f64::NAN.into(), false.into()]);
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let back = Table::from_csv("demo", &t.to_csv().unwrap()).unwrap();
        assert_eq!(back.columns, t.columns);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (x, y) in a.iter().zip(b) {
                match (x, y) {
                    (Cell::Float(p), Cell::Float(q)) if q.is_nan() => assert!(p.is_nan()),
                    _ => assert_eq!(x, y),
                }
            }
        }
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = Cell::Float(0.1).render();
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(Cell::parse("1e5"), Cell::Float(1e5));
        assert_eq!(Cell::parse("uniform_x"), Cell::Text("uniform_x".into()));
    }

    #[test]
    fn json_mirror_has_one_object_per_row() {
        let v = sample().to_json();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1]["n"], 64);
        assert!(rows[2]["x"].is_null());
    }
}
