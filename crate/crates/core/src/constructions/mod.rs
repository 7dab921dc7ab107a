//! Instance families whose optimal lottery revenue is far above (or close
//! to) what item pricing can earn.
//!
//! Every generator is a deterministic function of its arguments and seed.

mod packing;

pub use packing::{pack_vectors, PackedVectorSet};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{ConsumerType, Instance, Lottery, LotteryMenu};
use crate::rng::{self, streams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Unbounded,
    Uniform,
    Polylog,
    TwoItemUniform,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Unbounded, Family::Uniform, Family::Polylog, Family::TwoItemUniform];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Unbounded => "unbounded",
            Family::Uniform => "uniform",
            Family::Polylog => "polylog",
            Family::TwoItemUniform => "two-item-uniform",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}")))
    }
}

/// A generated instance together with its designed menu and metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct GapInstance {
    pub family: Family,
    pub params: Map<String, Value>,
    pub instance: Instance,
    pub menu: Option<LotteryMenu>,
    /// Exact buy-one revenue of `menu` when every consumer takes the lottery built for her.
    pub analytic_lottery_revenue: Option<f64>,
    /// Prices the family's analysis refers to, for item-pricing searches.
    pub price_candidates: Vec<f64>,
    pub warning: Option<String>,
}

/// Unbounded-gap family from a greedy vector packing.
///
/// Consumer `j` (1-based) values items by `2^j v_j` and has weight `2^-j`;
/// lottery `j` allocates by `v_j` at price `2^j / q`. Each consumer buys her own
/// lottery, for lottery revenue `l / q`, while any single item price earns at most 2.
pub fn gen_unbounded_gap(n: usize, q: f64, budget: usize, seed: u64) -> Result<GapInstance> {
    let set = pack_vectors(n, q, budget, seed)?;
    // 2^j must stay finite with room for the weight products.
    if set.len() > 1000 {
        return Err(Error::InvalidParameter(format!(
            "packing produced {} vectors; scales 2^j overflow past 1000",
            set.len()
        )));
    }
    let mut consumers = Vec::with_capacity(set.len());
    let mut lotteries = Vec::with_capacity(set.len());
    for (k, v) in set.vectors.iter().enumerate() {
        let scale = 2f64.powi(k as i32 + 1);
        consumers.push(ConsumerType::new(v.iter().map(|x| x * scale).collect(), 1.0 / scale)?);
        lotteries.push(Lottery::new(v.clone(), scale / q)?);
    }
    let menu = LotteryMenu::new(n, lotteries)?;
    let price_candidates = menu.non_null().map(Lottery::price).collect();
    Ok(GapInstance {
        family: Family::Unbounded,
        params: params([("n", json!(n)), ("q", json!(q)), ("budget", json!(budget)), ("seed", json!(seed))]),
        instance: Instance::new(n, consumers)?,
        menu: Some(menu),
        analytic_lottery_revenue: Some(set.len() as f64 / q),
        price_candidates,
        warning: (n < 4).then(|| format!("n = {n} < 4: the lottery/item gap is bounded in this dimension")),
    })
}

/// All nonempty subsets of `0..n`, largest first, equal sizes in lexicographic order.
pub fn subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (1u32..(1u32 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    sets
}

/// Uniform-valuation family with an exponential lottery/item gap.
///
/// Consumer `c_j` values the `j`-th subset at `n^j` with weight proportional
/// to `n^-j`; lottery `j` is uniform on that subset at price `n^(j-1)`.
/// Values reach `n^(2^n - 2)`, which limits `n` to 8 in double precision.
pub fn gen_uniform_gap(n: usize) -> Result<GapInstance> {
    if !(2..=8).contains(&n) {
        return Err(Error::InvalidParameter(format!("uniform family needs 2 <= n <= 8, got {n}")));
    }
    let sets = subsets_by_size(n);
    let k = sets.len() - 1;
    let nf = n as f64;
    let norm = (1.0 - 1.0 / nf) / (1.0 - nf.powi(-(k as i32) - 1));
    let mut consumers = Vec::with_capacity(sets.len());
    let mut lotteries = Vec::with_capacity(sets.len());
    let mut revenue = 0.0;
    for (j, set) in sets.iter().enumerate() {
        let value = nf.powi(j as i32);
        let weight = nf.powi(-(j as i32)) * norm;
        let mut values = vec![0.0; n];
        let mut probs = vec![0.0; n];
        for &i in set {
            values[i] = value;
            probs[i] = 1.0 / set.len() as f64;
        }
        let price = nf.powi(j as i32 - 1);
        consumers.push(ConsumerType::new(values, weight)?);
        lotteries.push(Lottery::new(probs, price)?);
        revenue += weight * price;
    }
    let menu = LotteryMenu::new(n, lotteries)?;
    let price_candidates = menu.non_null().map(Lottery::price).collect();
    Ok(GapInstance {
        family: Family::Uniform,
        params: params([("n", json!(n))]),
        instance: Instance::new(n, consumers)?,
        menu: Some(menu),
        analytic_lottery_revenue: Some(revenue),
        price_candidates,
        warning: None,
    })
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Point sets of all polynomials of degree at most 2 over `Z/nZ`.
///
/// Polynomial `a x^2 + b x + c` is entry `(a n + b) n + c`; item `(x, y)` is
/// index `x n + y`.
pub fn polynomial_sets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                out.push((0..n).map(|x| x * n + (a * x * x + b * x + c) % n).collect());
            }
        }
    }
    out
}

/// Polylog-gap family over the `n^2` points of the plane over `Z/nZ`.
///
/// Each of the `n^3` quadratic polynomials gives one consumer class with
/// weight `2^(k-j)` and value `2^(j-k)` on its graph, `k = floor(log2 n)` and
/// `j` drawn uniformly from `1..=k`. Its lottery is uniform on the graph at
/// half the class value, so every class contributes exactly 1/2.
pub fn gen_polylog_gap(n: usize, seed: u64) -> Result<GapInstance> {
    if !is_prime(n) || n > 13 {
        return Err(Error::InvalidParameter(format!("polylog family needs a prime 2 <= n <= 13, got {n}")));
    }
    let k = n.ilog2() as i32;
    let items = n * n;
    let mut rng = rng::stream(seed, streams::POLYLOG_LEVELS);
    let mut consumers = Vec::with_capacity(n * n * n);
    let mut lotteries = Vec::with_capacity(n * n * n);
    let mut revenue = 0.0;
    for set in polynomial_sets(n) {
        let j: i32 = rng.random_range(1..=k);
        let value = 2f64.powi(j - k);
        let weight = 2f64.powi(k - j);
        let mut values = vec![0.0; items];
        let mut probs = vec![0.0; items];
        for &i in &set {
            values[i] = value;
            probs[i] = 1.0 / n as f64;
        }
        consumers.push(ConsumerType::new(values, weight)?);
        lotteries.push(Lottery::new(probs, value / 2.0)?);
        revenue += weight * value / 2.0;
    }
    let price_candidates = (0..=k).map(|e| 2f64.powi(-e)).collect();
    Ok(GapInstance {
        family: Family::Polylog,
        params: params([("n", json!(n)), ("seed", json!(seed))]),
        instance: Instance::new(items, consumers)?,
        menu: Some(LotteryMenu::new(items, lotteries)?),
        analytic_lottery_revenue: Some(revenue),
        price_candidates,
        warning: None,
    })
}

/// Two items with values uniform on `[a, b]^2`, discretized at cell centers.
pub fn gen_two_item_uniform(a: f64, b: f64, grid: usize) -> Result<GapInstance> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 <= a < b, got [{a}, {b}]")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter("grid must be at least 2".into()));
    }
    let step = (b - a) / grid as f64;
    let weight = 1.0 / (grid * grid) as f64;
    let center = |i: usize| a + (i as f64 + 0.5) * step;
    let consumers = (0..grid)
        .flat_map(|x| (0..grid).map(move |y| (x, y)))
        .map(|(x, y)| ConsumerType::new(vec![center(x), center(y)], weight))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapInstance {
        family: Family::TwoItemUniform,
        params: params([("a", json!(a)), ("b", json!(b)), ("grid", json!(grid))]),
        instance: Instance::new(2, consumers)?,
        menu: None,
        analytic_lottery_revenue: None,
        price_candidates: Vec::new(),
        warning: None,
    })
}

fn params<const N: usize>(entries: [(&str, Value); N]) -> Map<String, Value> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{buy_one_choice, buy_one_revenue, DEFAULT_TOL};

    #[test]
    fn uniform_family_counts_and_weights() {
        let g = gen_uniform_gap(2).unwrap();
        assert_eq!(g.instance.len(), 3);
        assert_eq!(g.menu.as_ref().unwrap().non_null().count(), 3);
        for n in 2..=6 {
            let g = gen_uniform_gap(n).unwrap();
            assert_eq!(g.instance.len(), (1 << n) - 1);
            assert!((g.instance.total_weight() - 1.0).abs() < 1e-9);
        }
        assert!(gen_uniform_gap(1).is_err());
        assert!(gen_uniform_gap(9).is_err());
    }

    #[test]
    fn uniform_family_consumers_buy_their_own_lottery() {
        for n in 2..=5 {
            let g = gen_uniform_gap(n).unwrap();
            let menu = g.menu.unwrap();
            for (j, c) in g.instance.consumers().iter().enumerate() {
                // Index 0 is the null lottery.
                assert_eq!(buy_one_choice(c, &menu, DEFAULT_TOL).unwrap().index, j + 1, "n={n} j={j}");
            }
            let r = buy_one_revenue(&g.instance, &menu).unwrap();
            assert!((r - g.analytic_lottery_revenue.unwrap()).abs() < 1e-9 * r);
        }
    }

    #[test]
    fn subsets_are_ordered_by_size_then_lexicographically() {
        let s = subsets_by_size(3);
        assert_eq!(s[0], vec![0, 1, 2]);
        assert_eq!(s[1..4], [vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(s[4..], [vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn polynomial_sets_meet_in_at_most_two_points() {
        for n in [2, 3, 5] {
            let sets = polynomial_sets(n);
            assert_eq!(sets.len(), n * n * n);
            for (i, s) in sets.iter().enumerate() {
                assert_eq!(s.len(), n);
                for t in &sets[i + 1..] {
                    assert!(s.iter().filter(|x| t.contains(x)).count() <= 2);
                }
            }
        }
    }

    #[test]
    fn polylog_revenue_is_half_per_class() {
        let g = gen_polylog_gap(3, 1).unwrap();
        let r = buy_one_revenue(&g.instance, g.menu.as_ref().unwrap()).unwrap();
        assert!((r - 13.5).abs() < 1e-9);
        assert_eq!(g.analytic_lottery_revenue, Some(13.5));
        assert!(gen_polylog_gap(4, 0).is_err());
        assert!(gen_polylog_gap(17, 0).is_err());
    }

    #[test]
    fn polylog_is_deterministic_in_seed() {
        assert_eq!(gen_polylog_gap(5, 7).unwrap(), gen_polylog_gap(5, 7).unwrap());
    }

    #[test]
    fn two_item_grid() {
        let g = gen_two_item_uniform(0.0, 1.0, 2).unwrap();
        let values: Vec<&[f64]> = g.instance.consumers().iter().map(|c| c.values()).collect();
        assert_eq!(values, vec![&[0.25, 0.25][..], &[0.25, 0.75], &[0.75, 0.25], &[0.75, 0.75]]);
        assert!(g.instance.consumers().iter().all(|c| c.weight() == 0.25));
        assert!((gen_two_item_uniform(5.0, 6.0, 7).unwrap().instance.total_weight() - 1.0).abs() < 1e-12);
        assert!(gen_two_item_uniform(1.0, 1.0, 4).is_err());
        assert!(gen_two_item_uniform(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn unbounded_family_sells_each_consumer_her_lottery() {
        let g = gen_unbounded_gap(4, 16.0, 20_000, 5).unwrap();
        let menu = g.menu.as_ref().unwrap();
        for (j, c) in g.instance.consumers().iter().enumerate() {
            assert_eq!(buy_one_choice(c, menu, DEFAULT_TOL).unwrap().index, j + 1);
        }
        let l = g.instance.len() as f64;
        assert!((buy_one_revenue(&g.instance, menu).unwrap() - l / 16.0).abs() < 1e-9);
        assert!(gen_unbounded_gap(2, 4.0, 10, 0).unwrap().warning.is_some());
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
        }
        assert!("nope".parse::<Family>().is_err());
    }
}
