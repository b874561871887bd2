//! CSV output. Floats are written with 17 significant digits so reruns of a
//! seeded configuration give byte-identical files.
//!
//! Schemas (header row first, `y` columns only in 2-D):
//!
//! - `nodes.csv`: `id,x[,y]`
//! - `cells.csv`: `id,v0,v1[,v2],measure,bx[,by]`
//! - `errors.csv`: `id,x[,y],estimate,actual,level` (`actual` empty without an oracle)
//! - `summary.csv`: `termination,n,levels,global_value,global_error`
//! - `sweep.csv`: `kind,a,eps,m,mu,seed,n,global_value,global_error,termination`
//! - `timing.csv`: `d,m,mu,n,reps,tau_m,tau_full,tau_ext,ratio_full,ratio_ext`

use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::TrapezoidResult;
use crate::driver::AdaptiveReport;
use crate::error::{Error, Result};
use crate::geometry::TessCell;
use crate::point::Point;
use crate::timing::TimingRow;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }
}

fn coord_header(prefix: &str, dim: usize) -> Vec<String> {
    AXES[..dim].iter().map(|a| format!("{prefix}{a}")).collect()
}

pub fn nodes_table(points: &[Point]) -> Table {
    let dim = points.first().map_or(1, Point::dim);
    let mut header = vec!["id".to_string()];
    header.extend(coord_header("", dim));
    let mut t = Table::new(&header);
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.coords().iter().map(|&v| fmt_f64(v)));
        t.push(row);
    }
    t
}

pub fn cells_table(cells: &[(usize, TessCell)]) -> Table {
    let dim = cells.first().map_or(1, |(_, c)| c.cell.dim());
    let mut header = vec!["id".to_string()];
    header.extend((0..=dim).map(|i| format!("v{i}")));
    header.push("measure".into());
    header.extend(coord_header("b", dim));
    let mut t = Table::new(&header);
    for (id, c) in cells {
        let mut row = vec![id.to_string()];
        row.extend(c.vertices.iter().map(usize::to_string));
        row.push(fmt_f64(c.cell.measure()));
        row.extend(c.cell.barycenter().coords().iter().map(|&v| fmt_f64(v)));
        t.push(row);
    }
    t
}

fn errors_header(dim: usize) -> Vec<String> {
    let mut header = vec!["id".to_string()];
    header.extend(coord_header("", dim));
    header.extend(["estimate", "actual", "level"].map(String::from));
    header
}

pub fn errors_table(report: &AdaptiveReport) -> Table {
    let mut t = Table::new(&errors_header(report.config.dim));
    for r in &report.records {
        let mut row = vec![r.id.to_string()];
        row.extend(r.center.coords().iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(r.estimate));
        row.push(fmt_opt(r.actual));
        row.push(r.level.to_string());
        t.push(row);
    }
    t
}

pub const SUMMARY_HEADER: [&str; 5] = ["termination", "n", "levels", "global_value", "global_error"];

pub fn summary_table(report: &AdaptiveReport) -> Table {
    let mut t = Table::new(&SUMMARY_HEADER);
    t.push(vec![
        report.termination.as_str().to_string(),
        report.final_nodes().to_string(),
        report.levels.len().to_string(),
        fmt_opt(report.global_value),
        fmt_opt(report.global_error),
    ]);
    t
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFiles {
    pub nodes: PathBuf,
    pub cells: Option<PathBuf>,
    pub errors: PathBuf,
    pub summary: PathBuf,
}

/// Write `nodes.csv`, `errors.csv`, `summary.csv` and, for quadrature,
/// `cells.csv` into `dir`.
pub fn write_report(dir: &Path, report: &AdaptiveReport) -> Result<RunFiles> {
    let files = RunFiles {
        nodes: dir.join("nodes.csv"),
        cells: (!report.cells.is_empty()).then(|| dir.join("cells.csv")),
        errors: dir.join("errors.csv"),
        summary: dir.join("summary.csv"),
    };
    nodes_table(&report.nodes).write(&files.nodes)?;
    if let Some(p) = &files.cells {
        cells_table(&report.cells).write(p)?;
    }
    errors_table(report).write(&files.errors)?;
    summary_table(report).write(&files.summary)?;
    Ok(files)
}

/// Trapezoid output in the driver's schemas. Partition endpoints become
/// nodes, intervals become evaluation points at their midpoints, and the
/// recursion depth stands in for the level. `n` in the summary counts every
/// distinct evaluation point.
pub fn write_trapezoid(
    dir: &Path,
    result: &TrapezoidResult,
    exact: Option<&dyn Fn(f64, f64) -> f64>,
    exact_total: Option<f64>,
) -> Result<RunFiles> {
    let mut ends: Vec<Point> = result.intervals.iter().map(|iv| Point::from1(iv.lo)).collect();
    if let Some(last) = result.intervals.last() {
        ends.push(Point::from1(last.hi));
    }
    let files = RunFiles { nodes: dir.join("nodes.csv"), cells: None, errors: dir.join("errors.csv"), summary: dir.join("summary.csv") };
    nodes_table(&ends).write(&files.nodes)?;
    let mut t = Table::new(&errors_header(1));
    for (i, iv) in result.intervals.iter().enumerate() {
        let actual = exact.map(|e| (iv.value - e(iv.lo, iv.hi)).abs());
        t.push(vec![i.to_string(), fmt_f64(0.5 * (iv.lo + iv.hi)), fmt_f64(iv.estimate), fmt_opt(actual), iv.depth.to_string()]);
    }
    t.write(&files.errors)?;
    let depth = result.intervals.iter().map(|iv| iv.depth).max().unwrap_or(0);
    let mut s = Table::new(&SUMMARY_HEADER);
    s.push(vec![
        "converged".into(),
        result.evaluations.to_string(),
        (depth + 1).to_string(),
        fmt_f64(result.value),
        fmt_opt(exact_total.map(|e| (result.value - e).abs())),
    ]);
    s.write(&files.summary)?;
    Ok(files)
}

pub const SWEEP_HEADER: [&str; 10] = ["kind", "a", "eps", "m", "mu", "seed", "n", "global_value", "global_error", "termination"];

/// One adaptive run of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: String,
    pub a: f64,
    pub eps: f64,
    pub m: usize,
    pub mu: usize,
    pub seed: u64,
    pub report: SweepOutcome,
}

/// The parts of an [`AdaptiveReport`] a sweep keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub n: usize,
    pub global_value: Option<f64>,
    pub global_error: Option<f64>,
    pub termination: &'static str,
}

impl From<&AdaptiveReport> for SweepOutcome {
    fn from(r: &AdaptiveReport) -> Self {
        Self { n: r.final_nodes(), global_value: r.global_value, global_error: r.global_error, termination: r.termination.as_str() }
    }
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            r.kind.clone(),
            fmt_f64(r.a),
            fmt_f64(r.eps),
            r.m.to_string(),
            r.mu.to_string(),
            r.seed.to_string(),
            r.report.n.to_string(),
            fmt_opt(r.report.global_value),
            fmt_opt(r.report.global_error),
            r.report.termination.to_string(),
        ]);
    }
    t
}

pub const TIMING_HEADER: [&str; 10] = ["d", "m", "mu", "n", "reps", "tau_m", "tau_full", "tau_ext", "ratio_full", "ratio_ext"];

pub fn timing_table(rows: &[TimingRow]) -> Table {
    let mut t = Table::new(&TIMING_HEADER);
    for r in rows {
        t.push(vec![
            r.d.to_string(),
            r.m.to_string(),
            r.mu.to_string(),
            r.n.to_string(),
            r.reps.to_string(),
            fmt_f64(r.tau_m),
            fmt_f64(r.tau_full),
            fmt_f64(r.tau_ext),
            fmt_f64(r.ratio_full()),
            fmt_f64(r.ratio_ext()),
        ]);
    }
    t
}

/// Check that the file at `path` has exactly `expected` as its header.
pub fn check_header(path: &Path, expected: &[&str]) -> Result<Table> {
    let t = Table::read(path)?;
    if t.header != expected {
        return Err(Error::Output(format!("{}: header {:?}, expected {:?}", path.display(), t.header, expected)));
    }
    Ok(t)
}
