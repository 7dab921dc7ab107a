//! Turning lottery menus into (distributions over) item pricings.
//!
//! Every rounding returns the complete finite outcome distribution rather
//! than a sample, so expected revenue is computed exactly and
//! derandomization is an exhaustive scan.

mod buy_many;
mod one_dim;
mod two_dim;
mod uniform;

pub use buy_many::{base_prices, round_buy_many, step_two_range, BASE_SCALE};
pub use one_dim::{round_1d, threshold_prices};
pub use two_dim::{normalize_2d, round_2d, IndifferencePolygon};
pub use uniform::{round_uniform_valuations, support_set};

use crate::error::{Error, Result};
use crate::model::{item_pricing_revenue, Instance, ItemPricing};

/// Allowed drift of the total outcome probability from 1.
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub pricing: ItemPricing,
}

/// A finite distribution over item pricings.
#[derive(Clone, Debug, PartialEq)]
pub struct PricingDistribution {
    outcomes: Vec<Outcome>,
}

impl PricingDistribution {
    pub fn new(outcomes: Vec<Outcome>) -> Result<Self> {
        let Some(first) = outcomes.first() else {
            return Err(Error::InvalidPricing("distribution has no outcomes".into()));
        };
        let n = first.pricing.dim();
        if let Some(o) = outcomes.iter().find(|o| o.pricing.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: o.pricing.dim() });
        }
        if let Some(o) = outcomes.iter().find(|o| !(0.0..=1.0 + PROB_SUM_TOL).contains(&o.prob)) {
            return Err(Error::InvalidPricing(format!("outcome probability {}", o.prob)));
        }
        let total: f64 = outcomes.iter().map(|o| o.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidPricing(format!("outcome probabilities sum to {total}")));
        }
        Ok(Self { outcomes })
    }

    pub fn certain(pricing: ItemPricing) -> Self {
        Self { outcomes: vec![Outcome { prob: 1.0, pricing }] }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].pricing.dim()
    }

    pub fn total_prob(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum()
    }

    /// Revenue of every outcome, in outcome order.
    pub fn outcome_revenues(&self, inst: &Instance, tol: f64) -> Result<Vec<f64>> {
        self.outcomes
            .iter()
            .map(|o| item_pricing_revenue(inst, &o.pricing, tol))
            .collect()
    }

    pub fn expected_revenue(&self, inst: &Instance, tol: f64) -> Result<f64> {
        let revenues = self.outcome_revenues(inst, tol)?;
        Ok(self.weighted_mean(&revenues))
    }

    fn weighted_mean(&self, revenues: &[f64]) -> f64 {
        self.outcomes.iter().zip(revenues).map(|(o, r)| o.prob * r).sum::<f64>() / self.total_prob()
    }

    /// Mixes distributions with the given weights.
    pub fn mixture(parts: Vec<(f64, PricingDistribution)>) -> Result<Self> {
        let outcomes = parts
            .into_iter()
            .flat_map(|(w, d)| {
                d.outcomes.into_iter().map(move |o| Outcome { prob: w * o.prob, pricing: o.pricing })
            })
            .collect();
        Self::new(outcomes)
    }

    /// Independent product of per-item distributions (coordinates concatenated).
    pub fn product(parts: &[PricingDistribution]) -> Result<Self> {
        let mut acc = vec![Outcome { prob: 1.0, pricing: ItemPricing::not_for_sale(0) }];
        for part in parts {
            let mut next = Vec::with_capacity(acc.len() * part.outcomes.len());
            for a in &acc {
                for b in &part.outcomes {
                    let mut prices = a.pricing.prices().to_vec();
                    prices.extend_from_slice(b.pricing.prices());
                    next.push(Outcome { prob: a.prob * b.prob, pricing: ItemPricing::new(prices)? });
                }
            }
            acc = next;
        }
        Self::new(acc)
    }
}

/// Result of scanning every outcome of a [`PricingDistribution`].
#[derive(Clone, Debug, PartialEq)]
pub struct Derandomized {
    pub pricing: ItemPricing,
    pub best_index: usize,
    pub best_revenue: f64,
    pub expected_revenue: f64,
}

/// Picks the best outcome; ties go to the lowest outcome index.
pub fn derandomize(pd: &PricingDistribution, inst: &Instance, tol: f64) -> Result<Derandomized> {
    let revenues = pd.outcome_revenues(inst, tol)?;
    let mut best_index = 0;
    for (i, &r) in revenues.iter().enumerate() {
        if r > revenues[best_index] {
            best_index = i;
        }
    }
    let best_revenue = revenues[best_index];
    // Rounding in the weighted sum can land a few ulps above the maximum.
    let expected_revenue = pd.weighted_mean(&revenues).min(best_revenue);
    Ok(Derandomized {
        pricing: pd.outcomes[best_index].pricing.clone(),
        best_index,
        best_revenue,
        expected_revenue,
    })
}
