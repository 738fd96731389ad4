//! File formats: CSV tables, design / noise / state JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use qnonlocal_core::designs::WeightedVectorSet;
use qnonlocal_core::{JointCounts, NoiseSpec, ProbabilityTable, TwoQubitState};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Formats `x` with 12 significant digits, trailing zeros removed.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').expect("exponent present");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    B(bool),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(n) => n.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::I(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::I(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::B(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

/// A header plus rows, written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Design JSON: `{"label": ..., "elements": [{"weight": w, "axis": [x, y, z]}, ...]}`.
pub fn read_design(path: &Path) -> anyhow::Result<WeightedVectorSet> {
    read_json(path)
}

pub fn read_noise(path: &Path) -> anyhow::Result<NoiseSpec> {
    let spec: NoiseSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

/// State JSON: 16 `[re, im]` pairs of the density matrix in row-major order.
pub fn read_state(path: &Path) -> anyhow::Result<TwoQubitState> {
    let flat: Vec<[f64; 2]> = read_json(path)?;
    let flat: [[f64; 2]; 16] = match flat.try_into() {
        Ok(f) => f,
        Err(v) => bail!("state needs 16 complex entries, found {}", v.len()),
    };
    Ok(TwoQubitState::from_flat(&flat)?)
}

pub fn state_json(rho: &TwoQubitState) -> anyhow::Result<String> {
    to_json(&rho.to_flat().to_vec())
}

/// Probability table with a header row of Bob's outcome labels `b0, b1, ...`.
pub fn probability_table(table: &ProbabilityTable) -> Table {
    let (rows, cols) = table.dims();
    let mut t = Table::new(
        std::iter::once("outcome".to_string()).chain((0..cols).map(|j| format!("b{j}"))),
    );
    for k in 0..rows {
        let mut row = vec![Cell::S(format!("a{k}"))];
        row.extend(table.row(k).iter().map(|&p| Cell::F(p)));
        t.push(row);
    }
    t
}

/// Counts as `(setting, k, j, count)` rows.
pub fn counts_table(counts: &[JointCounts]) -> Table {
    let mut t = Table::new(["setting", "k", "j", "count"]);
    for c in counts {
        let (rows, cols) = c.dims();
        for k in 0..rows {
            for j in 0..cols {
                t.push(vec![
                    c.label.as_str().into(),
                    k.into(),
                    j.into(),
                    c.get(k, j).into(),
                ]);
            }
        }
    }
    t
}

type CellCounts = Vec<(usize, usize, u64)>;

/// Parses a counts CSV back into one [`JointCounts`] per setting, in file order.
pub fn parse_counts(text: &str) -> anyhow::Result<Vec<JointCounts>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut groups: Vec<(String, CellCounts)> = Vec::new();
    for record in reader.deserialize() {
        let (label, k, j, n): (String, usize, usize, u64) = record?;
        match groups.last_mut() {
            Some((l, cells)) if *l == label => cells.push((k, j, n)),
            _ => groups.push((label, vec![(k, j, n)])),
        }
    }
    groups
        .into_iter()
        .map(|(label, cells)| {
            let rows = cells.iter().map(|c| c.0).max().map_or(0, |m| m + 1);
            let cols = cells.iter().map(|c| c.1).max().map_or(0, |m| m + 1);
            let mut counts = vec![0; rows * cols];
            for (k, j, n) in cells {
                counts[k * cols + j] = n;
            }
            Ok(JointCounts::from_counts(label, rows, cols, counts, 0)?)
        })
        .collect()
}
