//! Python bindings: instances, menus, pricings, the optimal buy-one LP,
//! the roundings and the gap generators.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use lotprice::constructions::Family;
use lotprice::experiment::SweepPoint;
use lotprice::io;
use lotprice::model::{self, TieBreak};
use lotprice::oracles::{self, BundleLimits};
use lotprice::rounding::{self, PricingDistribution};
use lotprice::{ConsumerType, Instance, ItemPricing, Lottery, LotteryMenu, DEFAULT_TOL};

create_exception!(pylotprice, LotpriceError, PyException, "Invalid input or solver failure.");

fn err(e: lotprice::Error) -> PyErr {
    LotpriceError::new_err(e.to_string())
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for lotprice::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Consumers over `n` items, given as `(values, weight)` pairs.
#[pyclass(name = "Instance", module = "pylotprice", frozen)]
struct PyInstance(Instance);

#[pymethods]
impl PyInstance {
    #[new]
    fn new(n: usize, consumers: Vec<(Vec<f64>, f64)>) -> PyResult<Self> {
        let consumers = consumers.into_iter().map(|(v, w)| ConsumerType::new(v, w)).collect::<lotprice::Result<Vec<_>>>().py()?;
        Ok(Self(Instance::new(n, consumers).py()?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(io::instance_from_json(text).py()?))
    }

    fn to_json(&self) -> String {
        io::instance_to_json(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn consumers(&self) -> Vec<(Vec<f64>, f64)> {
        self.0.consumers().iter().map(|c| (c.values().to_vec(), c.weight())).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, consumers={})", self.0.n(), self.0.len())
    }
}

/// A lottery menu from `(probs, price)` pairs; the null lottery is always added.
#[pyclass(name = "LotteryMenu", module = "pylotprice", frozen)]
struct PyMenu(LotteryMenu);

#[pymethods]
impl PyMenu {
    #[new]
    fn new(n: usize, lotteries: Vec<(Vec<f64>, f64)>) -> PyResult<Self> {
        let lotteries = lotteries.into_iter().map(|(p, price)| Lottery::new(p, price)).collect::<lotprice::Result<Vec<_>>>().py()?;
        Ok(Self(LotteryMenu::new(n, lotteries).py()?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(io::menu_from_json(text).py()?))
    }

    fn to_json(&self) -> String {
        io::menu_to_json(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn lotteries(&self) -> Vec<(Vec<f64>, f64)> {
        self.0.lotteries().iter().map(|l| (l.probs().to_vec(), l.price())).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("LotteryMenu(n={}, lotteries={})", self.0.n(), self.0.len())
    }
}

/// Per-item prices; `float("inf")` marks an item not for sale.
#[pyclass(name = "ItemPricing", module = "pylotprice", frozen)]
struct PyPricing(ItemPricing);

#[pymethods]
impl PyPricing {
    #[new]
    fn new(prices: Vec<f64>) -> PyResult<Self> {
        Ok(Self(ItemPricing::new(prices).py()?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(io::pricing_from_json(text).py()?))
    }

    fn to_json(&self) -> String {
        io::pricing_to_json(&self.0)
    }

    #[getter]
    fn prices(&self) -> Vec<f64> {
        self.0.prices().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("ItemPricing({:?})", self.0.prices())
    }
}

/// A finite distribution over item pricings.
#[pyclass(name = "PricingDistribution", module = "pylotprice", frozen)]
struct PyDistribution(PricingDistribution);

#[pymethods]
impl PyDistribution {
    #[getter]
    fn outcomes(&self) -> Vec<(f64, Vec<f64>)> {
        self.0.outcomes().iter().map(|o| (o.prob, o.pricing.prices().to_vec())).collect()
    }

    #[pyo3(signature = (instance, tol = DEFAULT_TOL))]
    fn expected_revenue(&self, instance: PyRef<'_, PyInstance>, tol: f64) -> PyResult<f64> {
        self.0.expected_revenue(&instance.0, tol).py()
    }

    /// Best outcome as `(pricing, best_revenue, expected_revenue)`.
    #[pyo3(signature = (instance, tol = DEFAULT_TOL))]
    fn derandomize(&self, instance: PyRef<'_, PyInstance>, tol: f64) -> PyResult<(PyPricing, f64, f64)> {
        let d = rounding::derandomize(&self.0, &instance.0, tol).py()?;
        Ok((PyPricing(d.pricing), d.best_revenue, d.expected_revenue))
    }

    fn to_json(&self) -> String {
        io::distribution_to_json(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.outcomes().len()
    }
}

#[pyfunction]
#[pyo3(signature = (instance, menu, tol = DEFAULT_TOL))]
fn buy_one_revenue(instance: PyRef<'_, PyInstance>, menu: PyRef<'_, PyMenu>, tol: f64) -> PyResult<f64> {
    model::buy_one_revenue_with(&instance.0, &menu.0, tol, TieBreak::HighestPrice).py()
}

#[pyfunction]
#[pyo3(signature = (instance, pricing, tol = DEFAULT_TOL))]
fn item_pricing_revenue(instance: PyRef<'_, PyInstance>, pricing: PyRef<'_, PyPricing>, tol: f64) -> PyResult<f64> {
    model::item_pricing_revenue(&instance.0, &pricing.0, tol).py()
}

#[pyfunction]
#[pyo3(signature = (instance, menu, max_copies = 5, max_mix = 3, top_c = 20))]
fn buy_many_revenue(
    instance: PyRef<'_, PyInstance>,
    menu: PyRef<'_, PyMenu>,
    max_copies: u32,
    max_mix: u32,
    top_c: usize,
) -> PyResult<f64> {
    let limits = BundleLimits::new(max_copies, max_mix, top_c).py()?;
    oracles::buy_many_revenue_bounded(&instance.0, &menu.0, limits).py()
}

/// Optimal buy-one menu and its revenue.
#[pyfunction]
fn solve_optimal_buy_one(py: Python<'_>, instance: PyRef<'_, PyInstance>) -> PyResult<(PyMenu, f64)> {
    let inst = instance.0.clone();
    let sol = py.detach(|| lotprice::lp::solve_optimal_buy_one(&inst)).py()?;
    Ok((PyMenu(sol.menu), sol.revenue))
}

/// Best item pricing by exhaustive search, as `(pricing, revenue)`.
#[pyfunction]
#[pyo3(signature = (instance, extra_prices = Vec::new()))]
fn brute_force_item_pricing(instance: PyRef<'_, PyInstance>, extra_prices: Vec<f64>) -> PyResult<(PyPricing, f64)> {
    let (p, r) = oracles::brute_force_item_pricing(&instance.0, &extra_prices).py()?;
    Ok((PyPricing(p), r))
}

/// Best single price for every item, as `(price, revenue)`.
#[pyfunction]
fn best_uniform_price(instance: PyRef<'_, PyInstance>) -> (f64, f64) {
    oracles::best_uniform_price(&instance.0)
}

#[pyfunction]
fn round_1d(menu: PyRef<'_, PyMenu>) -> PyResult<PyDistribution> {
    Ok(PyDistribution(rounding::round_1d(&menu.0).py()?))
}

#[pyfunction]
fn round_2d(instance: PyRef<'_, PyInstance>, menu: PyRef<'_, PyMenu>) -> PyResult<PyDistribution> {
    Ok(PyDistribution(rounding::round_2d(&instance.0, &menu.0).py()?))
}

#[pyfunction]
fn round_buy_many(instance: PyRef<'_, PyInstance>, menu: PyRef<'_, PyMenu>) -> PyResult<PyDistribution> {
    Ok(PyDistribution(rounding::round_buy_many(&menu.0, &instance.0).py()?))
}

#[pyfunction]
fn round_uniform_valuations(instance: PyRef<'_, PyInstance>, menu: PyRef<'_, PyMenu>) -> PyResult<PyDistribution> {
    Ok(PyDistribution(rounding::round_uniform_valuations(&instance.0, &menu.0).py()?))
}

/// Generates a gap instance: `(instance, designed menu or None, metadata JSON)`.
#[pyfunction]
#[pyo3(signature = (family, n = 2, q = None, seed = 0, budget = 200_000, a = 5.0, b = 6.0, grid = 10))]
#[allow(clippy::too_many_arguments)]
fn generate(
    py: Python<'_>,
    family: &str,
    n: usize,
    q: Option<f64>,
    seed: u64,
    budget: usize,
    a: f64,
    b: f64,
    grid: usize,
) -> PyResult<(PyInstance, Option<PyMenu>, String)> {
    let family: Family = family.parse().py()?;
    let point = SweepPoint { family, n, q, seed, budget, interval: (a, b), grid };
    let g = py.detach(|| point.generate()).py()?;
    let meta = io::metadata_to_json(&io::Metadata::from(&g));
    Ok((PyInstance(g.instance), g.menu.map(PyMenu), meta))
}

#[pymodule]
fn pylotprice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LotpriceError", m.py().get_type::<LotpriceError>())?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyMenu>()?;
    m.add_class::<PyPricing>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(buy_one_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(item_pricing_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(buy_many_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(solve_optimal_buy_one, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_item_pricing, m)?)?;
    m.add_function(wrap_pyfunction!(best_uniform_price, m)?)?;
    m.add_function(wrap_pyfunction!(round_1d, m)?)?;
    m.add_function(wrap_pyfunction!(round_2d, m)?)?;
    m.add_function(wrap_pyfunction!(round_buy_many, m)?)?;
    m.add_function(wrap_pyfunction!(round_uniform_valuations, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
