//! Benchmark sweeps and energy grids as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::energy::{approx_energy, PolySystem};
use crate::error::{invalid, Error, Result};
use crate::models::{analytic_energy_example1, build_burgers, build_example1, build_example2, build_ks, Example1Params, FemModel, FemModelConfig};
use crate::polynomial::{poly_eval, EnergyKind};

pub const DEG3_HEADER: &str = "n,n_cubed,cpu_sec,energy";
pub const DEGREES_HEADER: &str = "d,past_energy,future_energy";

/// Largest `n` in the degree-3 sweeps unless overridden.
pub const DEFAULT_MAX_N: usize = 128;

/// Scientific notation with nine digits after the point.
pub fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableName {
    BurgersDeg3,
    BurgersDegrees,
    KsDeg3,
    KsDegrees,
}

impl TableName {
    pub const ALL: [TableName; 4] = [Self::BurgersDeg3, Self::BurgersDegrees, Self::KsDeg3, Self::KsDegrees];

    fn model(self) -> &'static str {
        match self {
            Self::BurgersDeg3 | Self::BurgersDegrees => "burgers",
            Self::KsDeg3 | Self::KsDegrees => "ks",
        }
    }

    fn eta(self) -> f64 {
        match self {
            Self::BurgersDeg3 | Self::BurgersDegrees => 0.9,
            Self::KsDeg3 | Self::KsDegrees => 0.1,
        }
    }

    fn is_degree_sweep(self) -> bool {
        matches!(self, Self::BurgersDegrees | Self::KsDegrees)
    }

    pub fn header(self) -> &'static str {
        if self.is_degree_sweep() {
            DEGREES_HEADER
        } else {
            DEG3_HEADER
        }
    }

    fn build(self, n: usize) -> Result<FemModel> {
        match self.model() {
            "burgers" => build_burgers(&FemModelConfig::burgers(n)),
            _ => build_ks(&FemModelConfig::ks(n)),
        }
    }
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BurgersDeg3 => "burgers-deg3",
            Self::BurgersDegrees => "burgers-degrees",
            Self::KsDeg3 => "ks-deg3",
            Self::KsDegrees => "ks-degrees",
        })
    }
}

impl FromStr for TableName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| invalid(format!("unknown table '{s}' (expected burgers-deg3, burgers-degrees, ks-deg3 or ks-degrees)")))
    }
}

/// One row of a benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub eta: f64,
    pub past_energy: Option<f64>,
    pub future_energy: Option<f64>,
    /// Wall time of the coefficient computation; degree-3 sweeps only.
    pub cpu_sec: Option<f64>,
    /// Solver diagnostic when the row could not be computed.
    pub error: Option<String>,
}

impl ModelReport {
    fn empty(table: TableName, n: usize, d: usize) -> Self {
        Self {
            model: table.model().to_string(),
            n,
            d,
            eta: table.eta(),
            past_energy: None,
            future_energy: None,
            cpu_sec: None,
            error: None,
        }
    }

    fn annotate(&mut self, e: &Error) {
        let msg = e.to_string();
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

/// Energy of `model` at its initial state, and the seconds spent computing
/// the coefficients.
fn timed_energy(model: &FemModel, eta: f64, d: usize, kind: EnergyKind) -> Result<(f64, f64)> {
    let start = Instant::now();
    let ec = approx_energy(&model.system, eta, d, kind)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((poly_eval(&ec, &model.x0)?, secs))
}

/// Runs a benchmark sweep. Failed rows carry their error and the sweep
/// continues.
pub fn run_table(table: TableName, max_n: usize) -> Vec<ModelReport> {
    run_table_with(table, max_n, |_| {})
}

/// Like [`run_table`], calling `progress` after each row.
pub fn run_table_with(table: TableName, max_n: usize, mut progress: impl FnMut(&ModelReport)) -> Vec<ModelReport> {
    let mut rows = Vec::new();
    let eta = table.eta();
    if table.is_degree_sweep() {
        let n = if table.model() == "burgers" { 8 } else { 16 };
        let model = table.build(n);
        for d in 2..=6 {
            let mut row = ModelReport::empty(table, n, d);
            match &model {
                Ok(m) => {
                    match timed_energy(m, eta, d, EnergyKind::Past) {
                        Ok((e, _)) => row.past_energy = Some(e),
                        Err(e) => row.annotate(&e),
                    }
                    match timed_energy(m, eta, d, EnergyKind::Future) {
                        Ok((e, _)) => row.future_energy = Some(e),
                        Err(e) => row.annotate(&e),
                    }
                }
                Err(e) => row.annotate(e),
            }
            progress(&row);
            rows.push(row);
        }
    } else {
        let mut n = if table.model() == "burgers" { 8 } else { 16 };
        while n <= max_n {
            let mut row = ModelReport::empty(table, n, 3);
            match table.build(n).and_then(|m| timed_energy(&m, eta, 3, EnergyKind::Future)) {
                Ok((e, secs)) => {
                    row.future_energy = Some(e);
                    row.cpu_sec = Some(secs);
                }
                Err(e) => row.annotate(&e),
            }
            progress(&row);
            rows.push(row);
            n *= 2;
        }
    }
    rows
}

fn energy_field(v: Option<f64>, error: &Option<String>) -> String {
    match (v, error) {
        (Some(v), _) => sci(v),
        (None, Some(msg)) => format!("error: {}", msg.replace([',', '\n', '\r'], ";")),
        (None, None) => "error: not computed".to_string(),
    }
}

pub fn write_table_csv<W: Write>(mut w: W, table: TableName, rows: &[ModelReport]) -> Result<()> {
    writeln!(w, "{}", table.header())?;
    for r in rows {
        if table.is_degree_sweep() {
            writeln!(w, "{},{},{}", r.d, energy_field(r.past_energy, &r.error), energy_field(r.future_energy, &r.error))?;
        } else {
            let secs = r.cpu_sec.map_or_else(String::new, sci);
            writeln!(w, "{},{},{},{}", r.n, r.n.pow(3), secs, energy_field(r.future_energy, &r.error))?;
        }
    }
    Ok(())
}

fn parse_energy(field: &str, error: &mut Option<String>) -> Result<Option<f64>> {
    if let Some(msg) = field.strip_prefix("error: ") {
        *error = Some(msg.to_string());
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| Error::Format(format!("bad energy field '{field}'")))?;
    if !v.is_finite() {
        return Err(Error::Format(format!("non-finite energy '{field}'")));
    }
    Ok(Some(v))
}

/// Reads back a table written by [`write_table_csv`].
pub fn parse_table_csv(table: TableName, text: &str) -> Result<Vec<ModelReport>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == table.header() => {}
        other => return Err(Error::Format(format!("expected header '{}', found {other:?}", table.header()))),
    }
    let n_fixed = if table.model() == "burgers" { 8 } else { 16 };
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::Format(format!("malformed row '{line}'"));
        if fields.len() != if table.is_degree_sweep() { 3 } else { 4 } {
            return Err(bad());
        }
        let mut error = None;
        let row = if table.is_degree_sweep() {
            let d = fields[0].parse().map_err(|_| bad())?;
            let mut r = ModelReport::empty(table, n_fixed, d);
            r.past_energy = parse_energy(fields[1], &mut error)?;
            r.future_energy = parse_energy(fields[2], &mut error)?;
            r
        } else {
            let n: usize = fields[0].parse().map_err(|_| bad())?;
            let mut r = ModelReport::empty(table, n, 3);
            r.cpu_sec = if fields[2].is_empty() { None } else { Some(fields[2].parse().map_err(|_| bad())?) };
            r.future_energy = parse_energy(fields[3], &mut error)?;
            r
        };
        rows.push(ModelReport { error, ..row });
    }
    Ok(rows)
}

/// Inclusive range `lo..=hi` sampled at `steps` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("grid range needs finite lo < hi, got {lo}:{hi}")));
        }
        if steps < 2 {
            return Err(invalid("grid needs at least two steps"));
        }
        Ok(Self { lo, hi, steps })
    }

    /// Parses `"lo:hi"`.
    pub fn parse(range: &str, steps: usize) -> Result<Self> {
        let (lo, hi) = range.split_once(':').ok_or_else(|| invalid(format!("range '{range}' is not of the form lo:hi")))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("bad range bound '{s}'")));
        Self::new(num(lo)?, num(hi)?, steps)
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.hi } else { self.lo + i as f64 * h }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridModel {
    Example1,
    Example2,
}

/// Tabulated energies; `None` cells are outside the closed form's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl EnergyGrid {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map_or_else(String::new, sci)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Past and future energy approximations of degree `degree` on a grid; the
/// scalar example adds its closed-form values.
pub fn energy_grid(model: GridModel, params: &Example1Params, eta: f64, degree: usize, range: &GridRange) -> Result<EnergyGrid> {
    let sys: PolySystem = match model {
        GridModel::Example1 => build_example1(params.a, params.n, params.b, params.c)?,
        GridModel::Example2 => build_example2()?,
    };
    let past = approx_energy(&sys, eta, degree, EnergyKind::Past)?;
    let future = approx_energy(&sys, eta, degree, EnergyKind::Future)?;
    let pts = range.points();
    let mut rows = Vec::new();
    let header: Vec<String> = match model {
        GridModel::Example1 => {
            for &x in &pts {
                let exact = |kind| analytic_energy_example1(x, params, eta, kind).ok();
                rows.push(vec![
                    Some(x),
                    Some(poly_eval(&past, &[x])?),
                    Some(poly_eval(&future, &[x])?),
                    exact(EnergyKind::Past),
                    exact(EnergyKind::Future),
                ]);
            }
            ["x", "E_past", "E_future", "E_past_analytic", "E_future_analytic"].map(String::from).to_vec()
        }
        GridModel::Example2 => {
            for &x1 in &pts {
                for &x2 in &pts {
                    let x = [x1, x2];
                    rows.push(vec![Some(x1), Some(x2), Some(poly_eval(&past, &x)?), Some(poly_eval(&future, &x)?)]);
                }
            }
            ["x1", "x2", "E_past", "E_future"].map(String::from).to_vec()
        }
    };
    Ok(EnergyGrid { header, rows })
}
