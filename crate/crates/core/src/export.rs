//! CSV and JSON output. Reals are written with 17 significant digits so every
//! file parses back to the identical `f64`, and all writes go through a
//! temporary file that is renamed into place.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::chebyshev::Generation;
use crate::error::{Error, Result};
use crate::models::SimulatedData;
use crate::pmh::PmhTrace;
use crate::smc::FilterOutput;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Write `bytes` to `path` via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a == b,
            (Cell::Real(a), Cell::Real(b)) => {
                a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
            }
            (Cell::Bool(a), Cell::Bool(b)) => a == b,
            (Cell::Text(a), Cell::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => fmt_real(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn parse(s: &str) -> Cell {
        if let Ok(v) = s.parse::<i64>() {
            return Cell::Int(v);
        }
        match s {
            "true" => return Cell::Bool(true),
            "false" => return Cell::Bool(false),
            _ => {}
        }
        match s.parse::<f64>() {
            Ok(v) => Cell::Real(v),
            Err(_) => Cell::Text(s.to_string()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Real(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
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

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(Cell::parse).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }
}

/// `index,coord_0,…,potential_at_selection`; the last column is the natural log
/// of the potential when the point was chosen (NaN for the first point).
pub fn configuration_table(g: &Generation) -> Table {
    let d = g.config.dim();
    let mut t = Table::new(
        std::iter::once("index".to_string())
            .chain((0..d).map(|k| format!("coord_{k}")))
            .chain(std::iter::once("potential_at_selection".to_string())),
    );
    for (i, (p, diag)) in g.config.points().iter().zip(&g.diagnostics).enumerate() {
        let mut row = vec![Cell::from(i)];
        row.extend(p.coords().iter().map(|&c| Cell::Real(c)));
        row.push(Cell::Real(diag.log_potential));
        t.push(row);
    }
    t
}

pub fn simulated_table(data: &SimulatedData) -> Table {
    let mut t = Table::new(["t", "x_true", "y"]);
    for (i, (x, y)) in data.states.iter().zip(&data.obs).enumerate() {
        t.push(vec![Cell::from(i), Cell::Real(*x), Cell::Real(*y)]);
    }
    t
}

pub fn filter_table(out: &FilterOutput) -> Table {
    let mut t = Table::new(["t", "state_mean", "loglik_increment", "ess"]);
    for i in 0..out.state_means.len() {
        t.push(vec![
            Cell::from(i),
            Cell::Real(out.state_means[i]),
            Cell::Real(out.system.loglik_increments[i]),
            Cell::Real(out.system.ess[i]),
        ]);
    }
    t
}

pub fn trace_table(trace: &PmhTrace) -> Table {
    let p = trace.params.first().map_or(0, Vec::len);
    let mut t = Table::new(
        ["iter", "accepted", "loglik"]
            .into_iter()
            .map(String::from)
            .chain((0..p).map(|k| format!("param_{k}"))),
    );
    for k in 0..trace.len() {
        let mut row = vec![
            Cell::from(k),
            Cell::from(trace.accepted[k]),
            Cell::Real(trace.logliks[k]),
        ];
        row.extend(trace.params[k].iter().map(|&v| Cell::Real(v)));
        t.push(row);
    }
    t
}

/// Rebuild a trace from its CSV table. Degenerate-proposal bookkeeping is not stored.
pub fn trace_from_table(t: &Table) -> Result<PmhTrace> {
    let bad = |row: usize, msg: &str| Error::InvalidData {
        row,
        msg: msg.to_string(),
    };
    let mut trace = PmhTrace {
        params: Vec::new(),
        logliks: Vec::new(),
        accepted: Vec::new(),
        degenerate: Vec::new(),
    };
    for (i, row) in t.rows.iter().enumerate() {
        let Cell::Bool(acc) = row[1] else {
            return Err(bad(i + 1, "accepted must be true/false"));
        };
        let ll = row[2]
            .as_f64()
            .ok_or_else(|| bad(i + 1, "loglik must be numeric"))?;
        let params = row[3..]
            .iter()
            .map(|c| {
                c.as_f64()
                    .ok_or_else(|| bad(i + 1, "param must be numeric"))
            })
            .collect::<Result<Vec<_>>>()?;
        trace.accepted.push(acc);
        trace.logliks.push(ll);
        trace.params.push(params);
    }
    Ok(trace)
}

/// Posterior summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub posterior_mean: Vec<f64>,
    pub posterior_variance: Vec<f64>,
    pub acceptance_rate: f64,
    pub acf: BTreeMap<usize, f64>,
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_real(v).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("json output is utf-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}
