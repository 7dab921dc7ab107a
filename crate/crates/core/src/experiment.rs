//! Revenue-gap sweeps over the constructed families, reported as CSV.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::{gen_polylog_gap, gen_two_item_uniform, gen_unbounded_gap, gen_uniform_gap, Family, GapInstance};
use crate::error::{Error, Result};
use crate::lp::solve_optimal_buy_one;
use crate::model::buy_one_revenue;
use crate::oracles::{best_uniform_price, brute_force_item_pricing};

pub const CSV_HEADER: [&str; 9] =
    ["family", "n", "q", "seed", "lottery_revenue", "item_revenue", "ratio", "item_method", "seconds"];

/// How the item-pricing reference revenue was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ItemMethod {
    #[serde(rename = "brute-force")]
    BruteForce,
    #[serde(rename = "uniform-price-only")]
    UniformPriceOnly,
}

impl ItemMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ItemMethod::BruteForce => "brute-force",
            ItemMethod::UniformPriceOnly => "uniform-price-only",
        }
    }
}

/// One parameter point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub family: Family,
    pub n: usize,
    pub q: Option<f64>,
    pub seed: u64,
    pub budget: usize,
    /// Interval and grid of the two-item uniform family.
    pub interval: (f64, f64),
    pub grid: usize,
}

impl SweepPoint {
    pub fn generate(&self) -> Result<GapInstance> {
        match self.family {
            Family::Unbounded => {
                let q = self.q.ok_or_else(|| Error::InvalidParameter("unbounded family needs q".into()))?;
                gen_unbounded_gap(self.n, q, self.budget, self.seed)
            }
            Family::Uniform => gen_uniform_gap(self.n),
            Family::Polylog => gen_polylog_gap(self.n, self.seed),
            Family::TwoItemUniform => gen_two_item_uniform(self.interval.0, self.interval.1, self.grid),
        }
    }
}

/// A whole sweep: the cross product of `ns` and `qs` for the unbounded
/// family, `ns` for uniform and polylog, `grids` for the two-item family.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub family: Family,
    pub ns: Vec<usize>,
    pub qs: Vec<f64>,
    pub grids: Vec<usize>,
    pub seed: u64,
    pub budget: usize,
    pub interval: (f64, f64),
}

impl SweepConfig {
    pub fn points(&self) -> Vec<SweepPoint> {
        let point = |n: usize, q: Option<f64>, grid: usize| SweepPoint {
            family: self.family,
            n,
            q,
            seed: self.seed,
            budget: self.budget,
            interval: self.interval,
            grid,
        };
        match self.family {
            Family::Unbounded => {
                self.ns.iter().flat_map(|&n| self.qs.iter().map(move |&q| (n, q))).map(|(n, q)| point(n, Some(q), 0)).collect()
            }
            Family::Uniform | Family::Polylog => self.ns.iter().map(|&n| point(n, None, 0)).collect(),
            Family::TwoItemUniform => self.grids.iter().map(|&g| point(2, None, g)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub family: String,
    pub n: usize,
    pub q: Option<f64>,
    pub seed: u64,
    pub lottery_revenue: f64,
    pub item_revenue: f64,
    /// `lottery_revenue / item_revenue`, absent when the denominator is 0.
    pub ratio: Option<f64>,
    pub item_method: ItemMethod,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

/// Best item pricing the oracles can certify, falling back to a single
/// uniform price when exhaustive search is too large.
///
/// The generator's extra price candidates are tried first; if they push the
/// grid over the guard, consumer values alone are used.
pub fn item_reference(g: &GapInstance) -> Result<(f64, ItemMethod)> {
    for extra in [&g.price_candidates[..], &[]] {
        match brute_force_item_pricing(&g.instance, extra) {
            Ok((_, r)) => return Ok((r, ItemMethod::BruteForce)),
            Err(Error::GuardExceeded { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok((best_uniform_price(&g.instance).1, ItemMethod::UniformPriceOnly))
}

/// Generates the point, measures lottery revenue (the designed menu when
/// the family has one, the optimal LP menu otherwise) and the item reference.
pub fn run_point(p: &SweepPoint) -> Result<ReportRow> {
    let start = Instant::now();
    let g = p.generate()?;
    let lottery_revenue = match &g.menu {
        Some(menu) => buy_one_revenue(&g.instance, menu)?,
        None => solve_optimal_buy_one(&g.instance)?.revenue,
    };
    let (item_revenue, item_method) = item_reference(&g)?;
    Ok(ReportRow {
        family: p.family.to_string(),
        n: p.n,
        q: p.q,
        seed: p.seed,
        lottery_revenue,
        item_revenue,
        ratio: (item_revenue > 0.0).then(|| lottery_revenue / item_revenue),
        item_method,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every point in parallel; rows keep sweep order.
pub fn run_sweep(points: &[SweepPoint]) -> Result<ExperimentReport> {
    let rows = points.par_iter().map(run_point).collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { rows })
}

impl ExperimentReport {
    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    /// Writes the fixed header and one line per row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(family: Family) -> SweepConfig {
        SweepConfig { family, ns: vec![], qs: vec![], grids: vec![], seed: 0, budget: 1000, interval: (0.0, 1.0) }
    }

    #[test]
    fn empty_sweep_writes_header_only() {
        let report = run_sweep(&config(Family::Uniform).points()).unwrap();
        assert_eq!(report.to_csv_string(), "family,n,q,seed,lottery_revenue,item_revenue,ratio,item_method,seconds\n");
    }

    #[test]
    fn rows_follow_sweep_order() {
        let cfg = SweepConfig { ns: vec![4, 2, 3], ..config(Family::Uniform) };
        let report = run_sweep(&cfg.points()).unwrap();
        assert_eq!(report.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![4, 2, 3]);
        for r in &report.rows {
            assert_eq!(r.item_method, ItemMethod::BruteForce);
            assert!((r.ratio.unwrap() - r.lottery_revenue / r.item_revenue).abs() < 1e-15);
        }
        let csv = report.to_csv_string();
        let second = csv.lines().nth(1).unwrap();
        assert!(second.starts_with("uniform,4,,0,"), "{second}");
        assert!(second.contains(",brute-force,"));
    }

    #[test]
    fn unbounded_points_cross_n_and_q() {
        let cfg = SweepConfig { ns: vec![3, 4], qs: vec![16.0, 64.0], ..config(Family::Unbounded) };
        let pts = cfg.points();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1].n, pts[1].q), (3, Some(64.0)));
    }
}
