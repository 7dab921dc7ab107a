use super::{Outcome, PricingDistribution};
use crate::error::{Error, Result};
use crate::model::{ItemPricing, LotteryMenu};

/// Single-item rounding of a set of `(probability, price)` lotteries.
///
/// Returns `(probability, price)` pairs: for consecutive vertices of the
/// lower convex hull of the lotteries (anchored at the null lottery), the
/// slope `(p_j - p_{j-1}) / (phi_j - phi_{j-1})` is offered with probability
/// `phi_j - phi_{j-1}`; the leftover mass `1 - phi_max` gets an infinite price.
///
/// Lotteries off the hull are never a strict best response for any
/// nonnegative value, and dropping them is what makes the expected payment
/// of every consumer match the menu exactly.
pub fn threshold_prices<I>(lotteries: I) -> Vec<(f64, f64)>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut points: Vec<(f64, f64)> = lotteries.into_iter().collect();
    points.push((0.0, 0.0));
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // Keep the cheapest lottery per probability level.
    points.dedup_by(|later, earlier| later.0 == earlier.0);

    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for pt in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }

    let mut out: Vec<(f64, f64)> = hull
        .windows(2)
        .map(|w| (w[1].0 - w[0].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
        .collect();
    let top = hull.last().map_or(0.0, |h| h.0);
    let residual = 1.0 - top;
    if residual > 0.0 {
        out.push((residual, f64::INFINITY));
    }
    out
}

/// Exact lottery-to-price rounding for a single item.
pub fn round_1d(menu: &LotteryMenu) -> Result<PricingDistribution> {
    if menu.n() != 1 {
        return Err(Error::Precondition(format!(
            "one-dimensional rounding needs n = 1, got n = {}",
            menu.n()
        )));
    }
    from_thresholds(threshold_prices(menu.lotteries().iter().map(|l| (l.probs()[0], l.price()))), 1)
}

/// Builds a distribution where each threshold price is applied to all `n` items.
pub(super) fn from_thresholds(thresholds: Vec<(f64, f64)>, n: usize) -> Result<PricingDistribution> {
    let outcomes = thresholds
        .into_iter()
        .map(|(prob, price)| Ok(Outcome { prob, pricing: ItemPricing::uniform(n, price)? }))
        .collect::<Result<Vec<_>>>()?;
    PricingDistribution::new(outcomes)
}
