//! Exhaustive reference computations for cross-checking the LP and the roundings.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    bundle_utility, buy_one_revenue, buy_one_utility, item_pricing_revenue, Bundle, ConsumerType, Instance,
    ItemPricing, Lottery, LotteryMenu, DEFAULT_TOL,
};

/// Largest number of price vectors [`brute_force_item_pricing`] will enumerate.
pub const ITEM_PRICING_GUARD: f64 = 1e7;

fn float_key(a: &f64, b: &f64) -> std::cmp::Ordering {
    a.total_cmp(b)
}

/// Sorted, deduplicated per-item price candidates: positive consumer values
/// for that item, the positive finite extras, and `+inf`.
///
/// A price of 0 is never needed: `+inf` earns the same from that item and
/// diverts no consumer away from paid items.
pub fn item_price_candidates(inst: &Instance, extra: &[f64]) -> Vec<Vec<f64>> {
    (0..inst.n())
        .map(|i| {
            let mut c: Vec<f64> = inst
                .consumers()
                .iter()
                .map(|v| v.values()[i])
                .chain(extra.iter().copied())
                .filter(|p| *p > 0.0 && p.is_finite())
                .collect();
            c.sort_by(float_key);
            c.dedup();
            c.push(f64::INFINITY);
            c
        })
        .collect()
}

fn tie_slack(best: f64) -> f64 {
    1e-12 * best.abs().max(1.0)
}

/// Best item pricing over the candidate grid, by exhaustive enumeration.
///
/// Ties go to the lexicographically smallest price vector.
pub fn brute_force_item_pricing(inst: &Instance, extra: &[f64]) -> Result<(ItemPricing, f64)> {
    let candidates = item_price_candidates(inst, extra);
    let size: f64 = candidates.iter().map(|c| c.len() as f64).product();
    if size > ITEM_PRICING_GUARD {
        return Err(Error::GuardExceeded { size, guard: ITEM_PRICING_GUARD });
    }
    let n = inst.n();
    let total = size as u64;
    let decode = |mut code: u64| -> Vec<f64> {
        let mut prices = vec![0.0; n];
        for i in (0..n).rev() {
            let base = candidates[i].len() as u64;
            prices[i] = candidates[i][(code % base) as usize];
            code /= base;
        }
        prices
    };
    let (best_code, best_rev) = (0..total)
        .into_par_iter()
        .map(|code| {
            let pricing = ItemPricing::new(decode(code)).expect("candidates are valid prices");
            let rev = item_pricing_revenue(inst, &pricing, DEFAULT_TOL).expect("dimensions match");
            (code, rev)
        })
        .reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |a, b| {
                let slack = tie_slack(a.1.max(b.1));
                if b.1 > a.1 + slack || ((b.1 - a.1).abs() <= slack && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((ItemPricing::new(decode(best_code))?, best_rev))
}

/// Best single price offered on every item, over all distinct consumer values.
///
/// Returns `(+inf, 0)` when no consumer values anything.
pub fn best_uniform_price(inst: &Instance) -> (f64, f64) {
    let mut prices: Vec<f64> = inst
        .consumers()
        .iter()
        .flat_map(|c| c.values().iter().copied())
        .filter(|p| *p > 0.0)
        .collect();
    prices.sort_by(float_key);
    prices.dedup();
    let revenues: Vec<f64> = prices
        .par_iter()
        .map(|&p| {
            let pricing = ItemPricing::uniform(inst.n(), p).expect("positive finite price");
            item_pricing_revenue(inst, &pricing, DEFAULT_TOL).expect("dimensions match")
        })
        .collect();
    let mut best = (f64::INFINITY, 0.0);
    for (p, r) in prices.into_iter().zip(revenues) {
        if r > best.1 + tie_slack(best.1) {
            best = (p, r);
        }
    }
    best
}

/// Search limits for buy-many bundles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BundleLimits {
    /// Copies of a single lottery tried.
    pub max_copies: u32,
    /// Size of mixed multisets tried.
    pub max_mix: u32,
    /// Number of best single lotteries mixes are drawn from.
    pub top_c: usize,
}

impl Default for BundleLimits {
    fn default() -> Self {
        Self { max_copies: 5, max_mix: 3, top_c: 20 }
    }
}

impl BundleLimits {
    pub fn new(max_copies: u32, max_mix: u32, top_c: usize) -> Result<Self> {
        if max_copies == 0 || max_mix == 0 || top_c == 0 {
            return Err(Error::InvalidParameter("bundle limits must all be at least 1".into()));
        }
        Ok(Self { max_copies, max_mix, top_c })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundleChoice {
    pub bundle: Bundle,
    pub payment: f64,
    pub utility: f64,
}

/// Calls `f` on every multiset of `pool` with between 1 and `size` elements.
fn for_each_multiset(pool: &[usize], size: u32, f: &mut impl FnMut(&[usize])) {
    fn rec(pool: &[usize], start: usize, left: u32, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if !cur.is_empty() {
            f(cur);
        }
        if left == 0 {
            return;
        }
        for k in start..pool.len() {
            cur.push(pool[k]);
            rec(pool, k, left - 1, cur, f);
            cur.pop();
        }
    }
    rec(pool, 0, size, &mut Vec::new(), f);
}

fn bundle_of(indices: &[usize]) -> Bundle {
    let mut entries: Vec<(usize, u32)> = Vec::new();
    for &i in indices {
        match entries.iter_mut().find(|(j, _)| *j == i) {
            Some(e) => e.1 += 1,
            None => entries.push((i, 1)),
        }
    }
    Bundle { entries }
}

/// Best buy-many bundle within a restricted family.
///
/// Searches the empty bundle, up to `max_copies` copies of each single
/// lottery, and every multiset of at most `max_mix` lotteries drawn from the
/// `top_c` lotteries with the highest single-copy utility. Near-ties go to the
/// highest total price.
pub fn bounded_bundle_choice(v: &ConsumerType, menu: &LotteryMenu, limits: BundleLimits) -> Result<BundleChoice> {
    let mut best = BundleChoice { bundle: Bundle::empty(), payment: 0.0, utility: 0.0 };
    let mut consider = |bundle: Bundle| -> Result<()> {
        let utility = bundle_utility(v, menu, &bundle)?;
        let payment = bundle.total_price(menu);
        if utility > best.utility + DEFAULT_TOL
            || (utility >= best.utility - DEFAULT_TOL && payment > best.payment)
        {
            best = BundleChoice { bundle, payment, utility };
        }
        Ok(())
    };
    let candidates: Vec<usize> = (0..menu.len()).filter(|&i| !menu.lotteries()[i].is_null()).collect();
    for &i in &candidates {
        for k in 1..=limits.max_copies {
            consider(Bundle::single(i, k))?;
        }
    }
    let mut ranked: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| Ok((i, buy_one_utility(v, &menu.lotteries()[i])?)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let pool: Vec<usize> = ranked.iter().take(limits.top_c).map(|&(i, _)| i).collect();
    let mut err = None;
    for_each_multiset(&pool, limits.max_mix, &mut |set| {
        if err.is_none() {
            if let Err(e) = consider(bundle_of(set)) {
                err = Some(e);
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(best)
}

/// Buy-many revenue when every consumer picks her [`bounded_bundle_choice`].
///
/// Exact whenever each consumer's true optimum lies in the searched family.
pub fn buy_many_revenue_bounded(inst: &Instance, menu: &LotteryMenu, limits: BundleLimits) -> Result<f64> {
    let payments = inst
        .consumers()
        .par_iter()
        .map(|c| Ok(c.weight() * bounded_bundle_choice(c, menu, limits)?.payment))
        .collect::<Result<Vec<f64>>>()?;
    Ok(payments.into_iter().sum())
}

/// All probability vectors in `n` dimensions with entries `k / steps` summing to at most 1.
fn grid_allocations(n: usize, steps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if i == cur.len() {
            out.push(cur.iter().map(|&k| k as f64 / steps as f64).collect());
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            rec(i + 1, left - k, steps, cur, out);
        }
    }
    rec(0, steps, steps, &mut cur, &mut out);
    out
}

/// Vertices of `{z >= 0, z_j <= a_jj, z_j - z_k <= a_jj - a_jk}` for one or two consumers,
/// where `a_jk` is consumer `j`'s expected value for allocation `k`.
fn price_vertices(a: &[[f64; 2]; 2], m: usize) -> Vec<[f64; 2]> {
    if m == 1 {
        return vec![[0.0, 0.0], [a[0][0].max(0.0), 0.0]];
    }
    // Lines c0 z0 + c1 z1 = d, each also a constraint c0 z0 + c1 z1 <= d or >= d.
    let lines: [([f64; 2], f64, bool); 6] = [
        ([1.0, 0.0], 0.0, false),
        ([0.0, 1.0], 0.0, false),
        ([1.0, 0.0], a[0][0], true),
        ([0.0, 1.0], a[1][1], true),
        ([1.0, -1.0], a[0][0] - a[0][1], true),
        ([-1.0, 1.0], a[1][1] - a[1][0], true),
    ];
    let feasible = |z: [f64; 2]| {
        lines.iter().all(|(c, d, upper)| {
            let lhs = c[0] * z[0] + c[1] * z[1];
            let slack = 1e-12 * d.abs().max(1.0);
            if *upper {
                lhs <= d + slack
            } else {
                lhs >= d - slack
            }
        })
    };
    let mut out = Vec::new();
    for (p, (c, d, _)) in lines.iter().enumerate() {
        for (e, f, _) in &lines[p + 1..] {
            let det = c[0] * e[1] - c[1] * e[0];
            if det.abs() < 1e-15 {
                continue;
            }
            let z = [(d * e[1] - c[1] * f) / det, (c[0] * f - d * e[0]) / det];
            if feasible(z) {
                out.push([z[0].max(0.0), z[1].max(0.0)]);
            }
        }
    }
    out
}

/// Best menu with one grid lottery per consumer, for at most two consumers and two items.
///
/// Allocations range over multiples of `resolution` (which must divide 1);
/// for each pair of allocations every vertex of the feasible price region is
/// evaluated under the buy-one model.
pub fn grid_lottery_search(inst: &Instance, resolution: f64) -> Result<(LotteryMenu, f64)> {
    let (m, n) = (inst.len(), inst.n());
    if m > 2 || n > 2 {
        return Err(Error::Precondition(format!(
            "grid search handles at most 2 consumers and 2 items, got {m} and {n}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParameter(format!("resolution {resolution} must lie in (0, 1]")));
    }
    let steps = (1.0 / resolution).round() as usize;
    if ((steps as f64) * resolution - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("resolution {resolution} does not divide 1")));
    }
    if m == 0 {
        return Ok((LotteryMenu::new(n, vec![])?, 0.0));
    }
    let grid = grid_allocations(n, steps);
    let value = |j: usize, x: &[f64]| -> f64 { inst.consumers()[j].values().iter().zip(x).map(|(v, p)| v * p).sum() };
    // None when no prices make this pair of allocations incentive compatible.
    let evaluate = |xs: [&Vec<f64>; 2]| -> Result<Option<(f64, LotteryMenu)>> {
        let mut a = [[0.0; 2]; 2];
        for j in 0..m {
            for k in 0..m {
                a[j][k] = value(j, xs[k]);
            }
        }
        let mut best: Option<(f64, LotteryMenu)> = None;
        for z in price_vertices(&a, m) {
            let lotteries = (0..m).map(|j| Lottery::new(xs[j].clone(), z[j])).collect::<Result<Vec<_>>>()?;
            let menu = LotteryMenu::new(n, lotteries)?;
            let rev = buy_one_revenue(inst, &menu)?;
            if best.as_ref().is_none_or(|(b, _)| rev > *b) {
                best = Some((rev, menu));
            }
        }
        Ok(best)
    };
    let per_first = grid
        .par_iter()
        .map(|x0| {
            let seconds: Vec<&Vec<f64>> = if m == 2 { grid.iter().collect() } else { vec![x0] };
            let mut best: Option<(f64, LotteryMenu)> = None;
            for x1 in seconds {
                if let Some(cand) = evaluate([x0, x1])? {
                    if best.as_ref().is_none_or(|(b, _)| cand.0 > *b) {
                        best = Some(cand);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(f64, LotteryMenu)> = None;
    for cand in per_first.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| cand.0 > *b) {
            best = Some(cand);
        }
    }
    // Equal allocations at price 0 are always feasible.
    let (rev, menu) = best.expect("the zero allocation pair is feasible");
    Ok((menu, rev))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, rows: &[(&[f64], f64)]) -> Instance {
        Instance::from_rows(n, rows.iter().map(|(v, w)| (v.to_vec(), *w))).unwrap()
    }

    #[test]
    fn brute_force_single_consumer() {
        let (p, r) = brute_force_item_pricing(&inst(2, &[(&[4.0, 1.0], 1.0)]), &[]).unwrap();
        assert_eq!(r, 4.0);
        // (4, 1) leaves the consumer indifferent and she takes the pricier item.
        assert_eq!(p.prices(), &[4.0, 1.0]);
    }

    #[test]
    fn brute_force_two_disjoint_consumers() {
        let i = inst(2, &[(&[4.0, 0.0], 0.5), (&[0.0, 4.0], 0.5)]);
        let (p, r) = brute_force_item_pricing(&i, &[]).unwrap();
        assert_eq!(r, 4.0);
        assert_eq!(p.prices(), &[4.0, 4.0]);
    }

    #[test]
    fn brute_force_guard() {
        let rows: Vec<(Vec<f64>, f64)> = (0..200).map(|j| (vec![j as f64 + 1.0; 4], 1.0)).collect();
        let i = Instance::from_rows(4, rows).unwrap();
        assert!(matches!(brute_force_item_pricing(&i, &[]), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn uniform_price_single_consumer() {
        assert_eq!(best_uniform_price(&inst(2, &[(&[4.0, 1.0], 1.0)])), (4.0, 4.0));
        assert_eq!(best_uniform_price(&inst(2, &[(&[0.0, 0.0], 1.0)])), (f64::INFINITY, 0.0));
    }

    #[test]
    fn multiset_enumeration_counts() {
        let mut count = 0;
        for_each_multiset(&[0, 1, 2, 3], 3, &mut |_| count += 1);
        // C(4,1) + C(5,2) + C(6,3)
        assert_eq!(count, 4 + 10 + 20);
    }

    #[test]
    fn cheap_copies_beat_the_sure_thing() {
        let v = ConsumerType::new(vec![1.0], 1.0).unwrap();
        let t = 10;
        let cheap = 2f64.powi(-t);
        let menu = LotteryMenu::new(
            1,
            vec![Lottery::new(vec![1.0], 0.5).unwrap(), Lottery::new(vec![0.5], cheap).unwrap()],
        )
        .unwrap();
        let choice = bounded_bundle_choice(&v, &menu, BundleLimits::new(16, 1, 2).unwrap()).unwrap();
        assert!(choice.utility > 0.5);
        assert_eq!(choice.bundle.entries.len(), 1);
        assert_eq!(menu.lotteries()[choice.bundle.entries[0].0].price(), cheap);
    }

    #[test]
    fn null_menu_gives_empty_bundle() {
        let v = ConsumerType::new(vec![1.0, 2.0], 1.0).unwrap();
        let choice = bounded_bundle_choice(&v, &LotteryMenu::new(2, vec![]).unwrap(), BundleLimits::default()).unwrap();
        assert!(choice.bundle.is_empty());
        assert_eq!(choice.payment, 0.0);
    }

    #[test]
    fn one_copy_when_the_second_is_not_worth_it() {
        let v = ConsumerType::new(vec![1.0], 1.0).unwrap();
        let menu = LotteryMenu::new(1, vec![Lottery::new(vec![0.5], 0.3).unwrap()]).unwrap();
        let one = bundle_utility(&v, &menu, &Bundle::single(1, 1)).unwrap();
        let two = bundle_utility(&v, &menu, &Bundle::single(1, 2)).unwrap();
        assert!(two < one);
        let choice = bounded_bundle_choice(&v, &menu, BundleLimits::default()).unwrap();
        assert_eq!(choice.bundle, Bundle::single(1, 1));
    }

    #[test]
    fn deterministic_menu_matches_item_pricing() {
        let i = inst(2, &[(&[3.0, 1.0], 1.0), (&[1.0, 2.0], 2.0), (&[0.5, 0.5], 1.0)]);
        let menu = LotteryMenu::new(
            2,
            vec![Lottery::new(vec![1.0, 0.0], 2.5).unwrap(), Lottery::new(vec![0.0, 1.0], 1.5).unwrap()],
        )
        .unwrap();
        let pricing = ItemPricing::new(vec![2.5, 1.5]).unwrap();
        let bm = buy_many_revenue_bounded(&i, &menu, BundleLimits::default()).unwrap();
        assert!((bm - item_pricing_revenue(&i, &pricing, DEFAULT_TOL).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn grid_search_examples() {
        let (_, r) = grid_lottery_search(&inst(2, &[(&[4.0, 1.0], 1.0)]), 0.25).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        let (_, r) = grid_lottery_search(&inst(2, &[(&[4.0, 0.0], 0.5), (&[0.0, 4.0], 0.5)]), 0.25).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert!(grid_lottery_search(&inst(3, &[(&[1.0, 1.0, 1.0], 1.0)]), 0.5).is_err());
        assert!(grid_lottery_search(&inst(1, &[(&[1.0], 1.0)]), 0.3).is_err());
    }

    #[test]
    fn grid_refinement_never_hurts() {
        let i = inst(2, &[(&[3.0, 1.0], 0.6), (&[1.0, 2.5], 0.4)]);
        let (_, coarse) = grid_lottery_search(&i, 0.5).unwrap();
        let (_, fine) = grid_lottery_search(&i, 0.25).unwrap();
        assert!(fine >= coarse);
    }
}
