//! Consumers, lotteries, item pricings and the revenue they generate.
//!
//! A consumer facing a lottery menu in the buy-one model takes a single
//! utility-maximizing lottery and, among near-ties, the most expensive one.
//! In the buy-many model she may purchase any multiset of lotteries, receives
//! one independent sample from each and keeps the best item.

use crate::error::{Error, Result};

/// Default width of the tie band used by every choice rule.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Slack allowed on `sum(probs) <= 1`.
pub const PROB_SLACK: f64 = 1e-12;

/// One point of the consumer distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsumerType {
    values: Vec<f64>,
    weight: f64,
}

impl ConsumerType {
    pub fn new(values: Vec<f64>, weight: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInstance(format!(
                "valuation {v} is not a finite nonnegative number"
            )));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidInstance(format!(
                "weight {weight} is not a finite nonnegative number"
            )));
        }
        Ok(Self { values, weight })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// A finite-support consumer distribution over `n` items.
///
/// Weights are unnormalized: they may be probabilities or head counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    n: usize,
    consumers: Vec<ConsumerType>,
}

impl Instance {
    pub fn new(n: usize, consumers: Vec<ConsumerType>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("item count must be positive".into()));
        }
        if consumers.is_empty() {
            return Err(Error::InvalidInstance("at least one consumer is required".into()));
        }
        if let Some(c) = consumers.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: c.dim() });
        }
        Ok(Self { n, consumers })
    }

    /// Convenience constructor from `(values, weight)` pairs.
    pub fn from_rows<I>(n: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let consumers = rows
            .into_iter()
            .map(|(values, weight)| ConsumerType::new(values, weight))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, consumers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn consumers(&self) -> &[ConsumerType] {
        &self.consumers
    }

    pub fn len(&self) -> usize {
        self.consumers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.consumers.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.consumers.iter().map(|c| c.weight).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.consumers.iter().map(ConsumerType::max_value).fold(0.0, f64::max)
    }

    /// Relabels items: item `i` of the result is item `perm[i]` of `self`.
    pub fn permute_items(&self, perm: &[usize]) -> Result<Self> {
        check_perm(perm, self.n)?;
        let consumers = self
            .consumers
            .iter()
            .map(|c| ConsumerType {
                values: perm.iter().map(|&p| c.values[p]).collect(),
                weight: c.weight,
            })
            .collect();
        Ok(Self { n: self.n, consumers })
    }
}

fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// A priced probability vector over items.
#[derive(Clone, Debug, PartialEq)]
pub struct Lottery {
    probs: Vec<f64>,
    price: f64,
}

impl Lottery {
    pub fn new(probs: Vec<f64>, price: f64) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::InvalidLottery(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + PROB_SLACK {
            return Err(Error::InvalidLottery(format!("probabilities sum to {total} > 1")));
        }
        if !price.is_finite() || price < 0.0 {
            return Err(Error::InvalidLottery(format!(
                "price {price} is not a finite nonnegative number"
            )));
        }
        Ok(Self { probs, price })
    }

    /// The "buy nothing" option.
    pub fn null(n: usize) -> Self {
        Self { probs: vec![0.0; n], price: 0.0 }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn total_prob(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_null(&self) -> bool {
        self.price == 0.0 && self.probs.iter().all(|&p| p == 0.0)
    }

    /// Probability that a sample is worth at most `w` to `values`.
    fn cdf_at(&self, values: &[f64], w: f64) -> f64 {
        let residual = (1.0 - self.total_prob()).max(0.0);
        residual
            + self
                .probs
                .iter()
                .zip(values)
                .filter(|(_, &v)| v <= w)
                .map(|(p, _)| p)
                .sum::<f64>()
    }
}

/// A finite lottery pricing system. Always contains the null lottery.
#[derive(Clone, Debug, PartialEq)]
pub struct LotteryMenu {
    n: usize,
    lotteries: Vec<Lottery>,
}

impl LotteryMenu {
    /// Builds a menu over `n` items, prepending the null lottery if absent.
    pub fn new(n: usize, mut lotteries: Vec<Lottery>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLottery("item count must be positive".into()));
        }
        if let Some(l) = lotteries.iter().find(|l| l.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: l.dim() });
        }
        if !lotteries.iter().any(Lottery::is_null) {
            lotteries.insert(0, Lottery::null(n));
        }
        Ok(Self { n, lotteries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lotteries(&self) -> &[Lottery] {
        &self.lotteries
    }

    pub fn len(&self) -> usize {
        self.lotteries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lotteries.is_empty()
    }

    pub fn non_null(&self) -> impl Iterator<Item = &Lottery> {
        self.lotteries.iter().filter(|l| !l.is_null())
    }

    pub fn max_price(&self) -> f64 {
        self.lotteries.iter().map(Lottery::price).fold(0.0, f64::max)
    }

    /// Drops exact duplicates, keeping first occurrences.
    pub fn dedup(&self) -> Self {
        let mut out: Vec<Lottery> = Vec::with_capacity(self.lotteries.len());
        for l in &self.lotteries {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        Self { n: self.n, lotteries: out }
    }

    /// Relabels items consistently with [`Instance::permute_items`].
    pub fn permute_items(&self, perm: &[usize]) -> Result<Self> {
        check_perm(perm, self.n)?;
        let lotteries = self
            .lotteries
            .iter()
            .map(|l| Lottery { probs: perm.iter().map(|&p| l.probs[p]).collect(), price: l.price })
            .collect();
        Ok(Self { n: self.n, lotteries })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.n });
        }
        Ok(())
    }
}

/// Deterministic per-item prices; `f64::INFINITY` marks an item that is not for sale.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemPricing {
    prices: Vec<f64>,
}

impl ItemPricing {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidPricing("no prices".into()));
        }
        if let Some(p) = prices.iter().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::InvalidPricing(format!("price {p} is negative or NaN")));
        }
        Ok(Self { prices })
    }

    pub fn uniform(n: usize, price: f64) -> Result<Self> {
        Self::new(vec![price; n])
    }

    pub fn not_for_sale(n: usize) -> Self {
        Self { prices: vec![f64::INFINITY; n] }
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn dim(&self) -> usize {
        self.prices.len()
    }
}

/// A multiset of lotteries given as `(menu index, copies)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bundle {
    pub entries: Vec<(usize, u32)>,
}

impl Bundle {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(index: usize, copies: u32) -> Self {
        Self { entries: vec![(index, copies)] }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|&(_, c)| c == 0)
    }

    pub fn total_price(&self, menu: &LotteryMenu) -> f64 {
        self.entries
            .iter()
            .map(|&(i, c)| menu.lotteries[i].price * f64::from(c))
            .sum()
    }

    pub fn size(&self) -> u32 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }
}

/// How a consumer resolves (near-)ties between utility-maximizing options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Take the most expensive option (the seller-favourable rule).
    #[default]
    HighestPrice,
    LowestPrice,
}

/// Outcome of a buy-one choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Choice {
    pub index: usize,
    pub payment: f64,
    pub utility: f64,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Expected value of the sample minus the price.
pub fn buy_one_utility(v: &ConsumerType, lottery: &Lottery) -> Result<f64> {
    check_len(v.dim(), lottery.dim())?;
    Ok(dot(&lottery.probs, &v.values) - lottery.price)
}

/// The lottery a buy-one consumer purchases, using the highest-price rule.
pub fn buy_one_choice(v: &ConsumerType, menu: &LotteryMenu, tol: f64) -> Result<Choice> {
    buy_one_choice_with(v, menu, tol, TieBreak::HighestPrice)
}

pub fn buy_one_choice_with(
    v: &ConsumerType,
    menu: &LotteryMenu,
    tol: f64,
    tie: TieBreak,
) -> Result<Choice> {
    menu.check_dim(v.dim())?;
    let utilities: Vec<f64> = menu
        .lotteries
        .iter()
        .map(|l| dot(&l.probs, &v.values) - l.price)
        .collect();
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<usize> = None;
    for (i, &u) in utilities.iter().enumerate() {
        if u < best - tol {
            continue;
        }
        let better = match chosen {
            None => true,
            Some(c) => {
                let (p, q) = (menu.lotteries[i].price, menu.lotteries[c].price);
                match tie {
                    TieBreak::HighestPrice => p > q,
                    TieBreak::LowestPrice => p < q,
                }
            }
        };
        if better {
            chosen = Some(i);
        }
    }
    // The null lottery keeps the menu nonempty.
    let index = chosen.expect("menu contains the null lottery");
    Ok(Choice { index, payment: menu.lotteries[index].price, utility: utilities[index] })
}

/// Weighted sum of buy-one payments.
pub fn buy_one_revenue(inst: &Instance, menu: &LotteryMenu) -> Result<f64> {
    buy_one_revenue_with(inst, menu, DEFAULT_TOL, TieBreak::HighestPrice)
}

pub fn buy_one_revenue_with(
    inst: &Instance,
    menu: &LotteryMenu,
    tol: f64,
    tie: TieBreak,
) -> Result<f64> {
    menu.check_dim(inst.n)?;
    inst.consumers.iter().try_fold(0.0, |acc, c| {
        Ok(acc + c.weight * buy_one_choice_with(c, menu, tol, tie)?.payment)
    })
}

/// Exact buy-many utility of a bundle: `E[max sampled value] - total price`.
///
/// Unallocated probability mass counts as value 0.
pub fn bundle_utility(v: &ConsumerType, menu: &LotteryMenu, bundle: &Bundle) -> Result<f64> {
    menu.check_dim(v.dim())?;
    for &(index, _) in &bundle.entries {
        if index >= menu.len() {
            return Err(Error::InvalidBundleIndex { index, len: menu.len() });
        }
    }
    let mut levels: Vec<f64> = v.values.clone();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut expected_max = 0.0;
    let mut prev_cdf = 0.0;
    for &w in &levels {
        let cdf: f64 = bundle
            .entries
            .iter()
            .map(|&(i, c)| menu.lotteries[i].cdf_at(&v.values, w).powi(c as i32))
            .product();
        expected_max += w * (cdf - prev_cdf);
        prev_cdf = cdf;
    }
    Ok(expected_max - bundle.total_price(menu))
}

/// The item a consumer buys under deterministic prices, if any.
pub fn item_choice(v: &ConsumerType, pricing: &ItemPricing, tol: f64) -> Result<Option<usize>> {
    check_len(v.dim(), pricing.dim())?;
    let utility = |i: usize| v.values[i] - pricing.prices[i];
    let best = (0..v.dim()).map(utility).fold(f64::NEG_INFINITY, f64::max);
    if !(best >= -tol) {
        return Ok(None);
    }
    let mut chosen: Option<usize> = None;
    for i in 0..v.dim() {
        if utility(i) >= best - tol
            && chosen.is_none_or(|c| pricing.prices[i] > pricing.prices[c])
        {
            chosen = Some(i);
        }
    }
    Ok(chosen)
}

/// Revenue of an item pricing from unit-demand consumers.
pub fn item_pricing_revenue(inst: &Instance, pricing: &ItemPricing, tol: f64) -> Result<f64> {
    check_len(inst.n, pricing.dim())?;
    inst.consumers.iter().try_fold(0.0, |acc, c| {
        Ok(acc
            + match item_choice(c, pricing, tol)? {
                Some(i) => c.weight * pricing.prices[i],
                None => 0.0,
            })
    })
}

/// Scales every price by `1 - eps`, turning the highest-price tie rule
/// into a strict preference at a `(1 - eps)` revenue cost.
pub fn epsilon_discount(menu: &LotteryMenu, eps: f64) -> Result<LotteryMenu> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")));
    }
    let lotteries = menu
        .lotteries
        .iter()
        .map(|l| Lottery { probs: l.probs.clone(), price: l.price * (1.0 - eps) })
        .collect();
    Ok(LotteryMenu { n: menu.n, lotteries })
}

/// Appends an item nobody values and routes each lottery's residual
/// probability to it, so every lottery allocates with certainty.
pub fn add_dummy_item(inst: &Instance, menu: &LotteryMenu) -> Result<(Instance, LotteryMenu)> {
    menu.check_dim(inst.n)?;
    let consumers = inst
        .consumers
        .iter()
        .map(|c| {
            let mut values = c.values.clone();
            values.push(0.0);
            ConsumerType { values, weight: c.weight }
        })
        .collect();
    let lotteries = menu
        .lotteries
        .iter()
        .map(|l| {
            let mut probs = l.probs.clone();
            probs.push((1.0 - l.total_prob()).max(0.0));
            Lottery { probs, price: l.price }
        })
        .collect();
    let inst = Instance::new(inst.n + 1, consumers)?;
    let menu = LotteryMenu::new(menu.n + 1, lotteries)?;
    Ok((inst, menu))
}
