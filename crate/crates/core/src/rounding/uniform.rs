use std::collections::BTreeSet;

use super::one_dim::{from_thresholds, threshold_prices};
use super::PricingDistribution;
use crate::error::{Error, Result};
use crate::model::{ConsumerType, Instance, ItemPricing, LotteryMenu};

/// Items a uniform-valued consumer wants, or an error if her nonzero values differ.
pub fn support_set(c: &ConsumerType) -> Result<Vec<usize>> {
    let support: Vec<usize> = (0..c.dim()).filter(|&i| c.values()[i] > 0.0).collect();
    if let Some(&first) = support.first() {
        let v = c.values()[first];
        if support.iter().any(|&i| (c.values()[i] - v).abs() > 1e-12 * v) {
            return Err(Error::Precondition(format!(
                "consumer {:?} does not have uniform valuations",
                c.values()
            )));
        }
    }
    Ok(support)
}

/// Rounding for uniform-valued consumers.
///
/// Picks one support set uniformly among those present, collapses every
/// lottery to its probability of landing in that set, rounds that single-item
/// menu exactly and offers the sampled price on all items.
pub fn round_uniform_valuations(inst: &Instance, menu: &LotteryMenu) -> Result<PricingDistribution> {
    let n = inst.n();
    if menu.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: menu.n() });
    }
    let mut sets = BTreeSet::new();
    for c in inst.consumers() {
        let s = support_set(c)?;
        if !s.is_empty() {
            sets.insert(s);
        }
    }
    if sets.is_empty() {
        return Ok(PricingDistribution::certain(ItemPricing::not_for_sale(n)));
    }
    let share = 1.0 / sets.len() as f64;
    let parts = sets
        .iter()
        .map(|set| {
            let collapsed = menu
                .lotteries()
                .iter()
                .map(|l| (set.iter().map(|&i| l.probs()[i]).sum::<f64>().min(1.0), l.price()));
            Ok((share, from_thresholds(threshold_prices(collapsed), n)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PricingDistribution::mixture(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{buy_one_revenue, Lottery, DEFAULT_TOL};
    use crate::rounding::round_1d;

    #[test]
    fn full_support_matches_collapsed_1d() {
        let inst = Instance::from_rows(2, [(vec![3.0, 3.0], 1.0), (vec![1.0, 1.0], 2.0)]).unwrap();
        let m = LotteryMenu::new(
            2,
            vec![Lottery::new(vec![0.2, 0.3], 1.0).unwrap(), Lottery::new(vec![0.5, 0.5], 2.5).unwrap()],
        )
        .unwrap();
        let pd = round_uniform_valuations(&inst, &m).unwrap();
        let collapsed = LotteryMenu::new(
            1,
            vec![Lottery::new(vec![0.5], 1.0).unwrap(), Lottery::new(vec![1.0], 2.5).unwrap()],
        )
        .unwrap();
        let one = round_1d(&collapsed).unwrap();
        assert_eq!(pd.outcomes().len(), one.outcomes().len());
        for (a, b) in pd.outcomes().iter().zip(one.outcomes()) {
            assert!((a.prob - b.prob).abs() < 1e-15);
            assert_eq!(a.pricing.prices(), &[b.pricing.prices()[0]; 2]);
        }
        let exp = pd.expected_revenue(&inst, DEFAULT_TOL).unwrap();
        assert!((exp - buy_one_revenue(&inst, &m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn null_menu_earns_nothing() {
        let inst = Instance::from_rows(2, [(vec![3.0, 0.0], 1.0)]).unwrap();
        let pd = round_uniform_valuations(&inst, &LotteryMenu::new(2, vec![]).unwrap()).unwrap();
        assert_eq!(pd.expected_revenue(&inst, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_uniform_consumers() {
        let inst = Instance::from_rows(2, [(vec![3.0, 1.0], 1.0)]).unwrap();
        assert!(round_uniform_valuations(&inst, &LotteryMenu::new(2, vec![]).unwrap()).is_err());
    }
}
