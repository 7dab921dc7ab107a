use super::{
    solve_lp_with, LinearProgram, LpSolution, LpStatus, PivotRule, Precision, Relation, SimplexOptions, FEASIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::model::{Instance, Lottery, LotteryMenu};

/// Whether each consumer's lottery may leave probability unallocated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AllocationMode {
    /// `sum_i x_ji <= 1`.
    #[default]
    AtMostOne,
    /// `sum_i x_ji = 1`: every lottery hands out an item.
    Full,
}

/// Column layout of the buy-one LP: all `x_ji` row-major by consumer, then all `z_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuyOneLpIndex {
    pub consumers: usize,
    pub items: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuyOneVar {
    Prob { consumer: usize, item: usize },
    Price { consumer: usize },
}

impl BuyOneLpIndex {
    pub fn prob(&self, consumer: usize, item: usize) -> usize {
        consumer * self.items + item
    }

    pub fn price(&self, consumer: usize) -> usize {
        self.consumers * self.items + consumer
    }

    pub fn num_vars(&self) -> usize {
        self.consumers * (self.items + 1)
    }

    pub fn decode(&self, pos: usize) -> Option<BuyOneVar> {
        let probs = self.consumers * self.items;
        if pos < probs {
            Some(BuyOneVar::Prob { consumer: pos / self.items, item: pos % self.items })
        } else if pos < self.num_vars() {
            Some(BuyOneVar::Price { consumer: pos - probs })
        } else {
            None
        }
    }
}

/// The revenue-maximizing lottery LP over a finite consumer distribution.
///
/// Consumer `j` is assigned lottery `(x_j, z_j)`; rows are, in order, `m`
/// allocation limits, `m` participation constraints and `m(m-1)`
/// incentive constraints (`j` prefers its own lottery to `k`'s).
pub fn build_buy_one_lp(inst: &Instance) -> (LinearProgram, BuyOneLpIndex) {
    build_buy_one_lp_with(inst, AllocationMode::AtMostOne)
}

pub fn build_buy_one_lp_with(inst: &Instance, mode: AllocationMode) -> (LinearProgram, BuyOneLpIndex) {
    let m = inst.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|j| (0..m).filter(move |&k| k != j).map(move |k| (j, k))).collect();
    build_with_pairs(inst, mode, &pairs)
}

/// The buy-one LP with incentive constraints only for the listed `(j, k)` pairs.
fn build_with_pairs(inst: &Instance, mode: AllocationMode, pairs: &[(usize, usize)]) -> (LinearProgram, BuyOneLpIndex) {
    let (m, n) = (inst.len(), inst.n());
    let idx = BuyOneLpIndex { consumers: m, items: n };
    let width = idx.num_vars();
    let mut objective = vec![0.0; width];
    for (j, c) in inst.consumers().iter().enumerate() {
        objective[idx.price(j)] = c.weight();
    }
    let mut lp = LinearProgram::maximize(objective).expect("weights are finite");

    let relation = match mode {
        AllocationMode::AtMostOne => Relation::Le,
        AllocationMode::Full => Relation::Eq,
    };
    let mut push = |row: Vec<f64>, rel: Relation, rhs: f64| {
        lp.add_constraint(row, rel, rhs).expect("row width matches");
    };
    for j in 0..m {
        let mut row = vec![0.0; width];
        (0..n).for_each(|i| row[idx.prob(j, i)] = 1.0);
        push(row, relation, 1.0);
    }
    for (j, c) in inst.consumers().iter().enumerate() {
        let mut row = vec![0.0; width];
        for i in 0..n {
            row[idx.prob(j, i)] = c.values()[i];
        }
        row[idx.price(j)] = -1.0;
        push(row, Relation::Ge, 0.0);
    }
    for &(j, k) in pairs {
        let v = inst.consumers()[j].values();
        let mut row = vec![0.0; width];
        for i in 0..n {
            row[idx.prob(j, i)] = v[i];
            row[idx.prob(k, i)] = -v[i];
        }
        row[idx.price(j)] = -1.0;
        row[idx.price(k)] = 1.0;
        push(row, Relation::Ge, 0.0);
    }
    (lp, idx)
}

/// An optimal buy-one menu with the LP objective it attains.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalMenu {
    pub menu: LotteryMenu,
    pub revenue: f64,
    /// Menu index of the lottery designed for each consumer.
    pub assigned: Vec<usize>,
    pub pivots: usize,
}

/// Solves the buy-one LP and reads off one lottery per consumer.
///
/// Pivots by steepest edge in double precision; a numerical failure is
/// retried in extended precision, first with the largest-coefficient rule
/// and then with Bland.
pub fn solve_optimal_buy_one(inst: &Instance) -> Result<OptimalMenu> {
    let lazy = inst.len() > LAZY_MIN_CONSUMERS;
    let attempts = [
        (SimplexOptions { rule: PivotRule::SteepestEdgeThenBland { degenerate_limit: 50 }, ..SimplexOptions::default() }, lazy),
        (
            SimplexOptions {
                rule: PivotRule::DantzigThenBland { degenerate_limit: 10_000 },
                precision: Precision::Extended,
                ..SimplexOptions::default()
            },
            false,
        ),
        (SimplexOptions { precision: Precision::Extended, ..SimplexOptions::default() }, false),
    ];
    let mut last = None;
    for (opts, lazy) in attempts {
        match solve_buy_one(inst, AllocationMode::AtMostOne, opts, lazy) {
            Err(Error::Numerical(msg)) => last = Some(Error::Numerical(msg)),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Solves the buy-one LP with the given options.
///
/// Small instances are solved in one pass. Larger ones start without
/// incentive constraints and repeatedly add, for every consumer, the most
/// violated pairs until the solution satisfies all of them; the final LP
/// has the same optimum as the full one.
pub fn solve_optimal_buy_one_with(
    inst: &Instance,
    mode: AllocationMode,
    opts: SimplexOptions,
) -> Result<OptimalMenu> {
    solve_buy_one(inst, mode, opts, inst.len() > LAZY_MIN_CONSUMERS)
}

fn solve_buy_one(inst: &Instance, mode: AllocationMode, opts: SimplexOptions, lazy: bool) -> Result<OptimalMenu> {
    let m = inst.len();
    let (sol, idx) = if !lazy {
        let (lp, idx) = build_buy_one_lp_with(inst, mode);
        (check_status(solve_lp_with(&lp, opts)?)?, idx)
    } else {
        let mut active = vec![vec![false; m]; m];
        let mut pairs = Vec::new();
        let mut pivots = 0;
        loop {
            let (lp, idx) = build_with_pairs(inst, mode, &pairs);
            let mut sol = check_status(solve_lp_with(&lp, opts)?)?;
            pivots += sol.pivots;
            let before = pairs.len();
            for j in 0..m {
                let mut worst: Vec<(f64, usize)> = (0..m)
                    .filter(|&k| k != j && !active[j][k])
                    .filter_map(|k| {
                        let gap = ic_violation(inst, &idx, &sol.values, j, k);
                        (gap > 0.0).then_some((gap, k))
                    })
                    .collect();
                worst.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                for &(_, k) in worst.iter().take(PAIRS_PER_ROUND) {
                    active[j][k] = true;
                    pairs.push((j, k));
                }
            }
            if pairs.len() == before {
                sol.pivots = pivots;
                break (sol, idx);
            }
        }
    };
    let n = inst.n();
    let mut lotteries = Vec::with_capacity(m);
    for j in 0..m {
        let mut probs: Vec<f64> = (0..n).map(|i| sol.values[idx.prob(j, i)].clamp(0.0, 1.0)).collect();
        let total: f64 = probs.iter().sum();
        if total > 1.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        lotteries.push(Lottery::new(probs, sol.values[idx.price(j)].max(0.0) * (1.0 - PRICE_SHAVE))?);
    }
    let menu = LotteryMenu::new(n, lotteries.clone())?.dedup();
    let assigned = lotteries
        .iter()
        .map(|l| menu.lotteries().iter().position(|m| m == l).expect("deduplicated from these"))
        .collect();
    Ok(OptimalMenu { menu, revenue: sol.objective, assigned, pivots: sol.pivots })
}

/// Relative amount taken off every LP price, so that rounding in the
/// solution cannot tip a consumer towards a cheaper lottery.
const PRICE_SHAVE: f64 = 1e-12;
/// Instances up to this many consumers get every incentive constraint up front.
const LAZY_MIN_CONSUMERS: usize = 12;
/// Violated pairs added per consumer in each round.
const PAIRS_PER_ROUND: usize = 3;

fn check_status(sol: LpSolution) -> Result<LpSolution> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::LpStatus("infeasible")),
        LpStatus::Unbounded => Err(Error::LpStatus("unbounded")),
    }
}

/// How much consumer `j` would gain by taking `k`'s lottery, beyond the
/// feasibility tolerance; nonpositive when the constraint holds.
fn ic_violation(inst: &Instance, idx: &BuyOneLpIndex, x: &[f64], j: usize, k: usize) -> f64 {
    let v = inst.consumers()[j].values();
    let (mut own, mut other, mut scale) = (0.0, 0.0, 0.0f64);
    for i in 0..inst.n() {
        own += v[i] * x[idx.prob(j, i)];
        other += v[i] * x[idx.prob(k, i)];
        scale = scale.max((v[i] * x[idx.prob(j, i)]).abs()).max((v[i] * x[idx.prob(k, i)]).abs());
    }
    let (zj, zk) = (x[idx.price(j)], x[idx.price(k)]);
    let gap = (other - zk) - (own - zj);
    gap - FEASIBILITY_TOL * (1.0 + scale.max(zj.abs()).max(zk.abs()))
}
