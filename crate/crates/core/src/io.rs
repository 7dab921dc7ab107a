//! JSON formats for instances, menus, pricings and pricing distributions.
//!
//! Prices may be written as the string `"inf"` (not for sale). Every other
//! number must be a finite nonnegative decimal.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::constructions::GapInstance;
use crate::error::{Error, Result};
use crate::model::{ConsumerType, Instance, ItemPricing, Lottery, LotteryMenu};
use crate::rounding::{Outcome, PricingDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Price {
    Finite(f64),
    Named(InfTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl From<f64> for Price {
    fn from(p: f64) -> Self {
        if p == f64::INFINITY {
            Price::Named(InfTag::Inf)
        } else {
            Price::Finite(p)
        }
    }
}

impl From<Price> for f64 {
    fn from(p: Price) -> Self {
        match p {
            Price::Finite(x) => x,
            Price::Named(InfTag::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsumerJson {
    values: Vec<f64>,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    n: usize,
    consumers: Vec<ConsumerJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LotteryJson {
    probs: Vec<f64>,
    price: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MenuJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    lotteries: Vec<LotteryJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PricingJson {
    prices: Vec<Price>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeJson {
    prob: f64,
    prices: Vec<Price>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionJson {
    outcomes: Vec<OutcomeJson>,
}

/// Generator metadata written next to a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub family: String,
    pub params: Map<String, Value>,
    pub analytic_lottery_revenue: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub price_candidates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl From<&GapInstance> for Metadata {
    fn from(g: &GapInstance) -> Self {
        Self {
            family: g.family.to_string(),
            params: g.params.clone(),
            analytic_lottery_revenue: g.analytic_lottery_revenue,
            price_candidates: g.price_candidates.clone(),
            warning: g.warning.clone(),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn instance_to_json(inst: &Instance) -> String {
    to_json(&InstanceJson {
        n: inst.n(),
        consumers: inst
            .consumers()
            .iter()
            .map(|c| ConsumerJson { values: c.values().to_vec(), weight: c.weight() })
            .collect(),
    })
}

/// Parses an instance; an empty consumer list is rejected.
pub fn instance_from_json(text: &str) -> Result<Instance> {
    let raw: InstanceJson = from_json(text)?;
    if raw.consumers.is_empty() {
        return Err(Error::InvalidInstance("instance has no consumers".into()));
    }
    let consumers = raw
        .consumers
        .into_iter()
        .map(|c| ConsumerType::new(c.values, c.weight))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(raw.n, consumers)
}

pub fn menu_to_json(menu: &LotteryMenu) -> String {
    to_json(&MenuJson {
        n: Some(menu.n()),
        lotteries: menu
            .lotteries()
            .iter()
            .map(|l| LotteryJson { probs: l.probs().to_vec(), price: l.price() })
            .collect(),
    })
}

/// Parses a menu. The item count comes from `"n"` when present, else from the lotteries.
pub fn menu_from_json(text: &str) -> Result<LotteryMenu> {
    let raw: MenuJson = from_json(text)?;
    let n = raw
        .n
        .or_else(|| raw.lotteries.first().map(|l| l.probs.len()))
        .ok_or_else(|| Error::InvalidLottery("menu without lotteries must state \"n\"".into()))?;
    let lotteries = raw
        .lotteries
        .into_iter()
        .map(|l| Lottery::new(l.probs, l.price))
        .collect::<Result<Vec<_>>>()?;
    LotteryMenu::new(n, lotteries)
}

fn prices_out(p: &ItemPricing) -> Vec<Price> {
    p.prices().iter().map(|&x| Price::from(x)).collect()
}

fn prices_in(p: Vec<Price>) -> Result<ItemPricing> {
    ItemPricing::new(p.into_iter().map(f64::from).collect())
}

pub fn pricing_to_json(p: &ItemPricing) -> String {
    to_json(&PricingJson { prices: prices_out(p) })
}

pub fn pricing_from_json(text: &str) -> Result<ItemPricing> {
    prices_in(from_json::<PricingJson>(text)?.prices)
}

pub fn distribution_to_json(d: &PricingDistribution) -> String {
    to_json(&DistributionJson {
        outcomes: d
            .outcomes()
            .iter()
            .map(|o| OutcomeJson { prob: o.prob, prices: prices_out(&o.pricing) })
            .collect(),
    })
}

pub fn distribution_from_json(text: &str) -> Result<PricingDistribution> {
    let raw: DistributionJson = from_json(text)?;
    let outcomes = raw
        .outcomes
        .into_iter()
        .map(|o| Ok(Outcome { prob: o.prob, pricing: prices_in(o.prices)? }))
        .collect::<Result<Vec<_>>>()?;
    PricingDistribution::new(outcomes)
}

pub fn metadata_to_json(m: &Metadata) -> String {
    to_json(m)
}

pub fn metadata_from_json(text: &str) -> Result<Metadata> {
    from_json(text)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn read_menu(path: impl AsRef<Path>) -> Result<LotteryMenu> {
    menu_from_json(&fs::read_to_string(path)?)
}

pub fn read_pricing(path: impl AsRef<Path>) -> Result<ItemPricing> {
    pricing_from_json(&fs::read_to_string(path)?)
}

pub fn read_distribution(path: impl AsRef<Path>) -> Result<PricingDistribution> {
    distribution_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    Ok(fs::write(path, instance_to_json(inst))?)
}

pub fn write_menu(path: impl AsRef<Path>, menu: &LotteryMenu) -> Result<()> {
    Ok(fs::write(path, menu_to_json(menu))?)
}

pub fn write_pricing(path: impl AsRef<Path>, p: &ItemPricing) -> Result<()> {
    Ok(fs::write(path, pricing_to_json(p))?)
}

pub fn write_distribution(path: impl AsRef<Path>, d: &PricingDistribution) -> Result<()> {
    Ok(fs::write(path, distribution_to_json(d))?)
}

pub fn write_metadata(path: impl AsRef<Path>, m: &Metadata) -> Result<()> {
    Ok(fs::write(path, metadata_to_json(m))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let inst = Instance::from_rows(2, [(vec![0.1, 1.0 / 3.0], 0.7), (vec![1e-300, 5.0], 2.0)]).unwrap();
        assert_eq!(instance_from_json(&instance_to_json(&inst)).unwrap(), inst);
    }

    #[test]
    fn pricing_writes_inf_as_string() {
        let p = ItemPricing::new(vec![1.5, f64::INFINITY]).unwrap();
        let text = pricing_to_json(&p);
        assert!(text.contains("\"inf\""));
        assert_eq!(pricing_from_json(&text).unwrap(), p);
        assert_eq!(pricing_from_json(r#"{"prices": [2, "inf"]}"#).unwrap().prices(), &[2.0, f64::INFINITY]);
    }

    #[test]
    fn rejects_bad_numbers() {
        assert!(instance_from_json(r#"{"n": 1, "consumers": [{"values": [-1], "weight": 1}]}"#).is_err());
        assert!(instance_from_json(r#"{"n": 1, "consumers": [{"values": [1], "weight": -1}]}"#).is_err());
        assert!(instance_from_json(r#"{"n": 1, "consumers": [{"values": [NaN], "weight": 1}]}"#).is_err());
        assert!(instance_from_json(r#"{"n": 1, "consumers": []}"#).is_err());
        assert!(pricing_from_json(r#"{"prices": ["nan"]}"#).is_err());
        assert!(pricing_from_json(r#"{"prices": [-2]}"#).is_err());
        assert!(menu_from_json(r#"{"lotteries": [{"probs": [0.5], "price": "inf"}]}"#).is_err());
    }

    #[test]
    fn menu_round_trip_and_inference() {
        let m = menu_from_json(r#"{"lotteries": [{"probs": [0.5, 0.25], "price": 1}]}"#).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.len(), 2);
        assert_eq!(menu_from_json(&menu_to_json(&m)).unwrap(), m);
        assert!(menu_from_json(r#"{"lotteries": []}"#).is_err());
        assert_eq!(menu_from_json(r#"{"n": 3, "lotteries": []}"#).unwrap().n(), 3);
    }

    #[test]
    fn distribution_round_trip() {
        let d = PricingDistribution::new(vec![
            Outcome { prob: 0.3, pricing: ItemPricing::new(vec![1.0, f64::INFINITY]).unwrap() },
            Outcome { prob: 0.7, pricing: ItemPricing::new(vec![0.1, 2.0]).unwrap() },
        ])
        .unwrap();
        assert_eq!(distribution_from_json(&distribution_to_json(&d)).unwrap(), d);
    }

    #[test]
    fn metadata_round_trip() {
        let g = crate::constructions::gen_uniform_gap(3).unwrap();
        let m = Metadata::from(&g);
        let back = metadata_from_json(&metadata_to_json(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.family, "uniform");
    }
}
