//! CSV persistence, speedup ratios and log-log scaling slopes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::bench::{aggregate, BenchRecord, RecordKind};
use crate::config::Algorithm;
use crate::error::{BenchError, Result};

pub fn write_csv_to<W: Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| BenchError::Io {
        path: path.into(),
        source,
    })?;
    write_csv_to(records, std::io::BufWriter::new(file)).map_err(|source| BenchError::Csv {
        path: path.into(),
        source,
    })
}

pub fn read_csv_from<R: Read>(input: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchRecord>> {
    let file = std::fs::File::open(path).map_err(|source| BenchError::Io {
        path: path.into(),
        source,
    })?;
    read_csv_from(file).map_err(|source| BenchError::Csv {
        path: path.into(),
        source,
    })
}

/// Timing column used by ratio and scaling reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Total,
    Initialize,
    Cdf,
    Resample,
    ResampleSort,
    ResampleExclSort,
    Propagate,
    Store,
    Other,
}

impl Field {
    pub const ALL: [Field; 9] = [
        Field::Total,
        Field::Initialize,
        Field::Cdf,
        Field::Resample,
        Field::ResampleSort,
        Field::ResampleExclSort,
        Field::Propagate,
        Field::Store,
        Field::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Total => "total",
            Field::Initialize => "initialize",
            Field::Cdf => "cdf",
            Field::Resample => "resample",
            Field::ResampleSort => "resample_sort",
            Field::ResampleExclSort => "resample_excl_sort",
            Field::Propagate => "propagate",
            Field::Store => "store",
            Field::Other => "other",
        }
    }

    pub fn get(self, r: &BenchRecord) -> f64 {
        match self {
            Field::Total => r.total_ns,
            Field::Initialize => r.initialize_ns,
            Field::Cdf => r.cdf_ns,
            Field::Resample => r.resample_ns,
            Field::ResampleSort => r.resample_sort_ns,
            Field::ResampleExclSort => r.resample_excl_sort_ns,
            Field::Propagate => r.propagate_ns,
            Field::Store => r.store_ns,
            Field::Other => r.other_ns,
        }
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.strip_suffix("_ns").unwrap_or(s);
        Field::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown timing field `{s}`"))
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One aggregate per (algorithm, n): the stored aggregate row if present,
/// otherwise the trimmed mean of the trial rows.
pub fn aggregates(records: &[BenchRecord]) -> BTreeMap<(Algorithm, usize), BenchRecord> {
    let mut trials: BTreeMap<(Algorithm, usize), Vec<BenchRecord>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for r in records {
        match r.kind {
            RecordKind::Aggregate => {
                out.insert((r.algorithm, r.n), r.clone());
            }
            RecordKind::Trial => trials
                .entry((r.algorithm, r.n))
                .or_default()
                .push(r.clone()),
        }
    }
    for (key, group) in trials {
        out.entry(key).or_insert_with(|| aggregate(&group));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub numerator: Algorithm,
    pub denominator: Algorithm,
    pub ratio: f64,
}

/// `field(numerator) / field(denominator)` at every n where both were run.
pub fn ratio_table(
    records: &[BenchRecord],
    field: Field,
    numerators: &[Algorithm],
    denominator: Algorithm,
) -> Vec<RatioRow> {
    let agg = aggregates(records);
    let mut rows = Vec::new();
    for (&(alg, n), rec) in &agg {
        if alg != denominator && numerators.contains(&alg) {
            if let Some(den) = agg.get(&(denominator, n)) {
                rows.push(RatioRow {
                    n,
                    numerator: alg,
                    denominator,
                    ratio: field.get(rec) / field.get(den),
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.n, r.numerator));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slope {
    pub algorithm: Algorithm,
    /// Least-squares slope of `ln(time)` against `ln(n)`.
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub field: Field,
    pub slopes: Vec<Slope>,
    /// Every pair of algorithms at every shared n, earlier algorithm over later.
    pub speedups: Vec<RatioRow>,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn scaling_report(records: &[BenchRecord], field: Field) -> Result<ScalingReport> {
    let agg = aggregates(records);
    let mut by_alg: BTreeMap<Algorithm, Vec<(usize, f64)>> = BTreeMap::new();
    for (&(alg, n), rec) in &agg {
        by_alg.entry(alg).or_default().push((n, field.get(rec)));
    }
    let mut slopes = Vec::new();
    for (&algorithm, pts) in &by_alg {
        if pts.len() < 3 {
            return Err(BenchError::InsufficientPoints {
                algorithm,
                have: pts.len(),
            });
        }
        let logs: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(n, v)| ((n as f64).ln(), v.ln()))
            .collect();
        let (slope, intercept) = least_squares(&logs);
        slopes.push(Slope {
            algorithm,
            slope,
            intercept,
            points: pts.len(),
        });
    }
    let algs: Vec<Algorithm> = by_alg.keys().copied().collect();
    let mut speedups = Vec::new();
    for (i, &a) in algs.iter().enumerate() {
        for &b in &algs[i + 1..] {
            speedups.extend(ratio_table(records, field, &[a], b));
        }
    }
    speedups.sort_by_key(|r| (r.n, r.numerator, r.denominator));
    Ok(ScalingReport {
        field,
        slopes,
        speedups,
    })
}

pub fn render_ratios(rows: &[RatioRow], field: Field) -> String {
    let mut s = format!(
        "{:>10}  {:<16} {:<16} {:>12}\n",
        "n",
        "numerator",
        "denominator",
        format!("{field} ratio")
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>10}  {:<16} {:<16} {:>12.3}",
            r.n,
            r.numerator.as_str(),
            r.denominator.as_str(),
            r.ratio
        );
    }
    s
}

pub fn render_scaling(report: &ScalingReport) -> String {
    let mut s = format!("log-log slope of {} time against n\n", report.field);
    for sl in &report.slopes {
        let _ = writeln!(
            s,
            "  {:<16} {:>7.3}  ({} points)",
            sl.algorithm.as_str(),
            sl.slope,
            sl.points
        );
    }
    if !report.speedups.is_empty() {
        s.push('\n');
        s.push_str(&render_ratios(&report.speedups, report.field));
    }
    s
}
