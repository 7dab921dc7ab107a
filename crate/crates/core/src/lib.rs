//! Revenue-maximizing lottery pricing for unit-demand consumers.
//!
//! * [`model`]: consumers, lotteries, item pricings and both purchase models.
//! * [`lp`]: a dense two-phase simplex and the optimal buy-one lottery LP.
//! * [`rounding`]: lottery menus to item pricings, with exact expected revenue.
//! * [`constructions`]: instance families with large lottery/item revenue gaps.
//! * [`oracles`]: brute-force reference computations.
//! * [`experiment`]: parameter sweeps reported as CSV.
//! * [`io`]: the JSON file formats.

pub mod constructions;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracles;
pub mod rng;
pub mod rounding;

pub use error::{Error, Result};
pub use model::{
    add_dummy_item, bundle_utility, buy_one_choice, buy_one_revenue, buy_one_utility, epsilon_discount,
    item_pricing_revenue, Bundle, ConsumerType, Instance, ItemPricing, Lottery, LotteryMenu, DEFAULT_TOL,
};
