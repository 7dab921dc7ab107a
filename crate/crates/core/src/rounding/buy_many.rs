use std::f64::consts::E;

use super::{Outcome, PricingDistribution};
use crate::error::{Error, Result};
use crate::model::{Instance, ItemPricing, LotteryMenu};

/// Base prices and step-(3) ladders are scaled by `BASE_SCALE * n^3`.
pub const BASE_SCALE: f64 = 130.0;

const FULL_ALLOCATION_TOL: f64 = 1e-9;

fn scale(n: usize) -> f64 {
    BASE_SCALE * (n as f64).powi(3)
}

/// For each item, the cheapest menu price among lotteries that allocate the
/// item with probability at least `1 / (130 n^3)`; `+inf` if none does.
pub fn base_prices(menu: &LotteryMenu, n: usize) -> Result<Vec<f64>> {
    if menu.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: menu.n() });
    }
    let threshold = 1.0 / scale(n);
    Ok((0..n)
        .map(|i| {
            menu.lotteries()
                .iter()
                .filter(|l| l.probs()[i] >= threshold)
                .map(|l| l.price())
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Exponents `t` of the uniform scaling step: `-1 ..= 3 floor(log2 n) + 9`.
pub fn step_two_range(n: usize) -> std::ops::RangeInclusive<i32> {
    let lg = n.max(1).ilog2() as i32;
    -1..=3 * lg + 9
}

fn scaled(price: f64, factor: f64) -> f64 {
    // Keeps 0 * inf out of the picture; free items stay free.
    if price == 0.0 {
        0.0
    } else {
        price * factor
    }
}

/// Buy-many rounding: the full outcome distribution of the three-step
/// randomized algorithm.
///
/// Half the mass is spread uniformly over the scalings `2^t * base`; the
/// other half over single items offered alone on the geometric ladder
/// `130 n^3 e^j base_i` with probability `(1 - 1/e) e^{-j}`. The ladder is
/// cut at the first rung above every consumer value; the remaining tail
/// `e^{-J}` is one outcome that sells nothing, so the cut is exact.
pub fn round_buy_many(menu: &LotteryMenu, inst: &Instance) -> Result<PricingDistribution> {
    let n = menu.n();
    if inst.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: inst.n() });
    }
    if let Some(l) = menu.non_null().find(|l| (l.total_prob() - 1.0).abs() > FULL_ALLOCATION_TOL) {
        return Err(Error::Precondition(format!(
            "lottery at price {} allocates with probability {}; add a dummy item first",
            l.price(),
            l.total_prob()
        )));
    }
    let base = base_prices(menu, n)?;
    let mut outcomes = Vec::new();

    let range = step_two_range(n);
    let t_count = range.clone().count() as f64;
    for t in range {
        let factor = 2f64.powi(t);
        let prices = base.iter().map(|&p| scaled(p, factor)).collect();
        outcomes.push(Outcome { prob: 0.5 / t_count, pricing: ItemPricing::new(prices)? });
    }

    let item_mass = 0.5 / n as f64;
    let ceiling = inst.max_value();
    let alone = |i: usize, price: f64| -> Result<ItemPricing> {
        let mut prices = vec![f64::INFINITY; n];
        prices[i] = price;
        ItemPricing::new(prices)
    };
    for (i, &p) in base.iter().enumerate() {
        if p.is_infinite() {
            outcomes.push(Outcome { prob: item_mass, pricing: ItemPricing::not_for_sale(n) });
            continue;
        }
        if p == 0.0 {
            outcomes.push(Outcome { prob: item_mass, pricing: alone(i, 0.0)? });
            continue;
        }
        let mut j = 0;
        loop {
            let price = scale(n) * E.powi(j) * p;
            if price > ceiling {
                outcomes.push(Outcome { prob: item_mass * E.powi(-j), pricing: alone(i, price)? });
                break;
            }
            let prob = item_mass * (1.0 - 1.0 / E) * E.powi(-j);
            outcomes.push(Outcome { prob, pricing: alone(i, price)? });
            j += 1;
        }
    }
    PricingDistribution::new(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{add_dummy_item, Lottery};

    #[test]
    fn base_price_examples() {
        let m = LotteryMenu::new(2, vec![Lottery::new(vec![0.5, 0.5], 2.0).unwrap()]).unwrap();
        assert_eq!(base_prices(&m, 2).unwrap(), vec![2.0, 2.0]);

        let m = LotteryMenu::new(
            2,
            vec![
                Lottery::new(vec![1.0, 0.0], 5.0).unwrap(),
                Lottery::new(vec![0.6, 0.0], 3.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(base_prices(&m, 2).unwrap(), vec![3.0, f64::INFINITY]);

        // Below the 1/(130 n^3) = 1/1040 threshold.
        let m = LotteryMenu::new(2, vec![Lottery::new(vec![0.9995, 0.0005], 1.0).unwrap()]).unwrap();
        assert_eq!(base_prices(&m, 2).unwrap(), vec![1.0, f64::INFINITY]);
    }

    #[test]
    fn step_two_has_fourteen_scalings_for_two_items() {
        let r = step_two_range(2);
        assert_eq!((*r.start(), *r.end()), (-1, 12));
        assert_eq!(r.count(), 14);
        assert_eq!(step_two_range(1).count(), 11);
    }

    #[test]
    fn lowest_scaling_halves_base_price() {
        let inst = Instance::from_rows(1, [(vec![10.0], 1.0)]).unwrap();
        let m = LotteryMenu::new(1, vec![Lottery::new(vec![1.0], 4.0).unwrap()]).unwrap();
        let (inst, m) = add_dummy_item(&inst, &m).unwrap();
        let pd = round_buy_many(&m, &inst).unwrap();
        assert_eq!(pd.outcomes()[0].pricing.prices()[0], 2.0);
        assert!((pd.total_prob() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ladder_tail_is_merged() {
        // 130 * 8 * e^j * 0.001 = 1.04 e^j crosses 3 at j = 2.
        let inst = Instance::from_rows(2, [(vec![3.0, 0.0], 1.0)]).unwrap();
        let m = LotteryMenu::new(2, vec![Lottery::new(vec![1.0, 0.0], 0.001).unwrap()]).unwrap();
        let pd = round_buy_many(&m, &inst).unwrap();
        let ladder: Vec<&Outcome> = pd
            .outcomes()
            .iter()
            .skip(step_two_range(2).count())
            .filter(|o| o.pricing.prices()[0].is_finite())
            .collect();
        assert_eq!(ladder.len(), 3);
        let mass: f64 = ladder.iter().map(|o| o.prob).sum();
        assert!((mass - 0.25).abs() < 1e-15);
        assert!((ladder[2].prob - 0.25 * E.powi(-2)).abs() < 1e-15);
        assert!(ladder[2].pricing.prices()[0] > 3.0);
    }

    #[test]
    fn rejects_partial_lotteries() {
        let inst = Instance::from_rows(2, [(vec![3.0, 0.0], 1.0)]).unwrap();
        let m = LotteryMenu::new(2, vec![Lottery::new(vec![0.5, 0.0], 1.0).unwrap()]).unwrap();
        assert!(matches!(round_buy_many(&m, &inst), Err(Error::Precondition(_))));
    }
}
