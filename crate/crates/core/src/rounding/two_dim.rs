//! Two-item rounding with factor-3 revenue loss.
//!
//! For lotteries that allocate an item with certainty, the zero-utility set
//! of a lottery is a line in the valuation plane, and the set of consumers
//! priced out of the whole menu is a convex polygon. With probability 1/3
//! each axis is rounded on its own; otherwise both items are priced at the
//! point where the diagonal through `(x*/2, y*/2)` meets the polygon.

use super::one_dim::threshold_prices;
use super::{Outcome, PricingDistribution};
use crate::error::{Error, Result};
use crate::model::{buy_one_choice, ConsumerType, Instance, ItemPricing, Lottery, LotteryMenu, DEFAULT_TOL};

const FULL_ALLOCATION_TOL: f64 = 1e-9;

fn check_two_item_menu(menu: &LotteryMenu) -> Result<()> {
    if menu.n() != 2 {
        return Err(Error::Precondition(format!(
            "two-dimensional rounding needs n = 2, got n = {}",
            menu.n()
        )));
    }
    if let Some(l) = menu.non_null().find(|l| (l.total_prob() - 1.0).abs() > FULL_ALLOCATION_TOL) {
        return Err(Error::Precondition(format!(
            "lottery {:?} at price {} does not allocate an item with certainty",
            l.probs(),
            l.price()
        )));
    }
    Ok(())
}

/// The polygon of valuations that cannot afford any lottery of a menu.
#[derive(Clone, Debug, PartialEq)]
pub struct IndifferencePolygon {
    pub x_star: f64,
    pub y_star: f64,
    lotteries: Vec<Lottery>,
}

impl IndifferencePolygon {
    /// `None` when the menu has no lottery besides the null one.
    pub fn from_menu(menu: &LotteryMenu) -> Result<Option<Self>> {
        check_two_item_menu(menu)?;
        let lotteries: Vec<Lottery> = menu.non_null().cloned().collect();
        if lotteries.is_empty() {
            return Ok(None);
        }
        let intercept = |axis: usize| {
            lotteries
                .iter()
                .filter(|l| l.probs()[axis] > 0.0)
                .map(|l| l.price() / l.probs()[axis])
                .fold(f64::INFINITY, f64::min)
        };
        Ok(Some(Self { x_star: intercept(0), y_star: intercept(1), lotteries }))
    }

    /// Largest excess `phi . v - p` over the menu; `<= 0` inside the polygon.
    pub fn excess(&self, x: f64, y: f64) -> f64 {
        self.lotteries
            .iter()
            .map(|l| weighted(l.probs()[0], x) + weighted(l.probs()[1], y) - l.price())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distance along the diagonal from `(x*/2, y*/2)` to the polygon boundary.
    ///
    /// Since every lottery's probabilities sum to one, moving by `delta`
    /// along the diagonal raises each lottery's value by exactly `delta`.
    pub fn diagonal_shift(&self) -> f64 {
        let (hx, hy) = (self.x_star / 2.0, self.y_star / 2.0);
        self.lotteries
            .iter()
            .map(|l| l.price() - weighted(l.probs()[0], hx) - weighted(l.probs()[1], hy))
            .fold(f64::INFINITY, f64::min)
    }

    /// The deterministic pricing `(x*/2 + delta, y*/2 + delta)`.
    ///
    /// An axis the menu never allocates has an infinite intercept and the
    /// corresponding item is not offered.
    pub fn diagonal_pricing(&self) -> Result<ItemPricing> {
        let delta = self.diagonal_shift();
        let price = |star: f64| if star.is_finite() { star / 2.0 + delta } else { f64::INFINITY };
        ItemPricing::new(vec![price(self.x_star), price(self.y_star)])
    }
}

/// `prob * value` with `0 * inf = 0`.
fn weighted(prob: f64, value: f64) -> f64 {
    if prob == 0.0 {
        0.0
    } else {
        prob * value
    }
}

/// Shifts every consumer down the diagonal by `min(best utility, v_x, v_y)`.
///
/// Buy-one revenue is unchanged and each shifted consumer either sits on an
/// axis or has zero best utility.
pub fn normalize_2d(inst: &Instance, menu: &LotteryMenu) -> Result<Instance> {
    check_two_item_menu(menu)?;
    if inst.n() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: inst.n() });
    }
    let consumers = inst
        .consumers()
        .iter()
        .map(|c| {
            let u = buy_one_choice(c, menu, DEFAULT_TOL)?.utility.max(0.0);
            let v = c.values();
            let delta = u.min(v[0]).min(v[1]);
            ConsumerType::new(vec![(v[0] - delta).max(0.0), (v[1] - delta).max(0.0)], c.weight())
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(2, consumers)
}

/// Randomized factor-3 rounding for two items.
///
/// The outcome distribution depends only on the menu; `inst` fixes the
/// dimension. Revenue guarantees are stated against the buy-one revenue of
/// the menu on any instance (normalized or not).
pub fn round_2d(inst: &Instance, menu: &LotteryMenu) -> Result<PricingDistribution> {
    if inst.n() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: inst.n() });
    }
    let Some(polygon) = IndifferencePolygon::from_menu(menu)? else {
        return Ok(PricingDistribution::certain(ItemPricing::not_for_sale(2)));
    };

    let axis = |i: usize| -> Result<PricingDistribution> {
        let outcomes = threshold_prices(menu.lotteries().iter().map(|l| (l.probs()[i], l.price())))
            .into_iter()
            .map(|(prob, price)| Ok(Outcome { prob, pricing: ItemPricing::new(vec![price])? }))
            .collect::<Result<Vec<_>>>()?;
        PricingDistribution::new(outcomes)
    };
    let split = PricingDistribution::product(&[axis(0)?, axis(1)?])?;
    let diagonal = PricingDistribution::certain(polygon.diagonal_pricing()?);
    PricingDistribution::mixture(vec![(1.0 / 3.0, split), (2.0 / 3.0, diagonal)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::buy_one_revenue;

    fn menu(ls: &[([f64; 2], f64)]) -> LotteryMenu {
        LotteryMenu::new(2, ls.iter().map(|(p, c)| Lottery::new(p.to_vec(), *c).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn symmetric_menu_prices_both_items_at_two() {
        let m = menu(&[([0.5, 0.5], 2.0)]);
        let poly = IndifferencePolygon::from_menu(&m).unwrap().unwrap();
        assert_eq!((poly.x_star, poly.y_star), (4.0, 4.0));
        assert_eq!(poly.diagonal_shift(), 0.0);
        assert_eq!(poly.diagonal_pricing().unwrap().prices(), &[2.0, 2.0]);
        let inst = Instance::from_rows(2, [(vec![1.0, 1.0], 1.0)]).unwrap();
        let pd = round_2d(&inst, &m).unwrap();
        assert!((pd.total_prob() - 1.0).abs() < 1e-12);
        assert_eq!(pd.outcomes().last().unwrap().pricing.prices(), &[2.0, 2.0]);
    }

    #[test]
    fn one_axis_menu_leaves_other_item_unsold() {
        let m = menu(&[([1.0, 0.0], 3.0)]);
        let poly = IndifferencePolygon::from_menu(&m).unwrap().unwrap();
        assert_eq!(poly.x_star, 3.0);
        assert!(poly.y_star.is_infinite());
        assert_eq!(poly.diagonal_pricing().unwrap().prices(), &[3.0, f64::INFINITY]);
    }

    #[test]
    fn diagonal_point_lies_on_polygon() {
        let m = menu(&[([0.8, 0.2], 2.0), ([0.3, 0.7], 2.5), ([0.5, 0.5], 2.2)]);
        let poly = IndifferencePolygon::from_menu(&m).unwrap().unwrap();
        let d = poly.diagonal_shift();
        assert!(d >= 0.0);
        assert!(poly.excess(poly.x_star / 2.0, poly.y_star / 2.0) <= 1e-12);
        assert!(poly.excess(poly.x_star / 2.0 + d, poly.y_star / 2.0 + d).abs() < 1e-12);
    }

    #[test]
    fn null_only_menu_rounds_to_no_sale() {
        let inst = Instance::from_rows(2, [(vec![1.0, 1.0], 1.0)]).unwrap();
        let pd = round_2d(&inst, &LotteryMenu::new(2, vec![]).unwrap()).unwrap();
        assert_eq!(pd.outcomes().len(), 1);
        assert_eq!(pd.outcomes()[0].pricing, ItemPricing::not_for_sale(2));
    }

    #[test]
    fn rejects_partial_lotteries_and_wrong_dimension() {
        let inst = Instance::from_rows(2, [(vec![1.0, 1.0], 1.0)]).unwrap();
        assert!(round_2d(&inst, &menu(&[([0.5, 0.2], 1.0)])).is_err());
        let inst3 = Instance::from_rows(3, [(vec![1.0, 1.0, 1.0], 1.0)]).unwrap();
        let m3 = LotteryMenu::new(3, vec![]).unwrap();
        assert!(round_2d(&inst3, &m3).is_err());
    }

    #[test]
    fn normalize_examples() {
        let m = menu(&[([0.5, 0.5], 3.0)]);
        let inst = Instance::from_rows(2, [(vec![5.0, 5.0], 1.0), (vec![4.0, 0.0], 1.0), (vec![0.0, 0.0], 1.0)])
            .unwrap();
        let norm = normalize_2d(&inst, &m).unwrap();
        assert_eq!(norm.consumers()[0].values(), &[3.0, 3.0]);
        assert_eq!(norm.consumers()[1].values(), &[4.0, 0.0]);
        assert_eq!(norm.consumers()[2].values(), &[0.0, 0.0]);
        let before = buy_one_revenue(&inst, &m).unwrap();
        let after = buy_one_revenue(&norm, &m).unwrap();
        assert!((before - after).abs() < 1e-9);
    }
}
