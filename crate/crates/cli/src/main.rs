//! `lotprice`: generate gap instances, solve the buy-one LP, round menus
//! to item pricings, evaluate revenue and run CSV sweeps.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use lotprice::constructions::Family;
use lotprice::experiment::{run_sweep, SweepConfig, SweepPoint};
use lotprice::io::{self as lio, Metadata};
use lotprice::lp::solve_optimal_buy_one;
use lotprice::model::{add_dummy_item, buy_one_revenue_with, item_pricing_revenue, ItemPricing, TieBreak};
use lotprice::oracles::{buy_many_revenue_bounded, BundleLimits};
use lotprice::rounding::{
    derandomize, round_1d, round_2d, round_buy_many, round_uniform_valuations, Outcome, PricingDistribution,
};
use lotprice::{Instance, LotteryMenu};

#[derive(Parser)]
#[command(name = "lotprice", version, about = "Lottery and item pricing for unit-demand consumers")]
struct Cli {
    /// Seed for every stochastic choice.
    #[arg(long, global = true, env = "LOTPRICE_SEED", default_value_t = 0)]
    seed: u64,
    /// Tolerance for purchase decisions.
    #[arg(long, global = true, default_value_t = lotprice::DEFAULT_TOL)]
    tol: f64,
    /// Suppress messages about written files.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance (and its designed menu) from a family.
    Gen {
        #[arg(long)]
        family: Family,
        #[command(flatten)]
        params: FamilyParams,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 10)]
        grid: usize,
        /// Output directory for instance.json, menu.json and metadata.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the optimal buy-one lottery LP.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Output file for the optimal menu.
        #[arg(long)]
        out: PathBuf,
    },
    /// Round a lottery menu into a distribution over item pricings.
    Round {
        #[arg(long)]
        mode: RoundMode,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        menu: PathBuf,
        /// Output directory for distribution.json and best_pricing.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the revenue of a menu or an item pricing.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "pricing", required_unless_present = "pricing")]
        menu: Option<PathBuf>,
        #[arg(long)]
        pricing: Option<PathBuf>,
        #[arg(long)]
        model: EvalModel,
        #[arg(long, default_value_t = 5)]
        max_copies: u32,
        #[arg(long, default_value_t = 3)]
        max_mix: u32,
        #[arg(long, default_value_t = 20)]
        top_c: usize,
    },
    /// Sweep a family and report lottery against item revenue as CSV.
    Gap {
        #[arg(long)]
        family: Family,
        #[command(flatten)]
        params: FamilyParams,
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        qs: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        grids: Vec<usize>,
        /// CSV file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct FamilyParams {
    /// Packing candidate budget of the unbounded family.
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
    /// Value interval of the two-item uniform family.
    #[arg(long, default_value_t = 5.0)]
    a: f64,
    #[arg(long, default_value_t = 6.0)]
    b: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundMode {
    #[value(name = "1d")]
    OneDim,
    #[value(name = "2d")]
    TwoDim,
    BuyMany,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalModel {
    BuyOne,
    BuyMany,
    Items,
}

/// Twelve significant digits, trailing zeros dropped.
fn fmt_revenue(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn note(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    lio::read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn read_menu(path: &Path) -> Result<LotteryMenu> {
    lio::read_menu(path).with_context(|| format!("reading menu {}", path.display()))
}

fn cmd_gen(cli: &Cli, family: Family, params: &FamilyParams, n: Option<usize>, q: Option<f64>, grid: usize, out: &Path) -> Result<()> {
    let n = match (family, n) {
        (Family::TwoItemUniform, _) => 2,
        (_, Some(n)) => n,
        (_, None) => bail!("family {family} needs --n"),
    };
    let point = SweepPoint { family, n, q, seed: cli.seed, budget: params.budget, interval: (params.a, params.b), grid };
    let g = point.generate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    lio::write_instance(out.join("instance.json"), &g.instance)?;
    if let Some(menu) = &g.menu {
        lio::write_menu(out.join("menu.json"), menu)?;
    }
    lio::write_metadata(out.join("metadata.json"), &Metadata::from(&g))?;
    if let Some(w) = &g.warning {
        eprintln!("warning: {w}");
    }
    note(cli, format!("wrote {} consumers to {}", g.instance.len(), out.display()));
    Ok(())
}

fn cmd_solve(cli: &Cli, instance: &Path, out: &Path) -> Result<()> {
    let inst = read_instance(instance)?;
    let sol = solve_optimal_buy_one(&inst)?;
    lio::write_menu(out, &sol.menu)?;
    println!("revenue {}", fmt_revenue(sol.revenue));
    note(cli, format!("wrote menu with {} lotteries to {}", sol.menu.len(), out.display()));
    Ok(())
}

/// Buy-many rounding on a menu whose lotteries may not allocate fully:
/// round with a zero-value dummy item, then drop its price.
fn round_buy_many_any(inst: &Instance, menu: &LotteryMenu) -> Result<PricingDistribution> {
    if menu.lotteries().iter().all(|l| (l.total_prob() - 1.0).abs() <= 1e-9 || l.is_null()) {
        return Ok(round_buy_many(menu, inst)?);
    }
    let (inst_d, menu_d) = add_dummy_item(inst, menu)?;
    let pd = round_buy_many(&menu_d, &inst_d)?;
    let outcomes = pd
        .outcomes()
        .iter()
        .map(|o| {
            let prices = &o.pricing.prices()[..inst.n()];
            Ok(Outcome { prob: o.prob, pricing: ItemPricing::new(prices.to_vec())? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PricingDistribution::new(outcomes)?)
}

fn cmd_round(cli: &Cli, mode: RoundMode, instance: &Path, menu: &Path, out: &Path) -> Result<()> {
    let inst = read_instance(instance)?;
    let menu = read_menu(menu)?;
    let pd = match mode {
        RoundMode::OneDim => round_1d(&menu).context("1d rounding")?,
        RoundMode::TwoDim => round_2d(&inst, &menu).context("2d rounding")?,
        RoundMode::BuyMany => round_buy_many_any(&inst, &menu).context("buy-many rounding")?,
        RoundMode::Uniform => round_uniform_valuations(&inst, &menu).context("uniform rounding")?,
    };
    let d = derandomize(&pd, &inst, cli.tol)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    lio::write_distribution(out.join("distribution.json"), &pd)?;
    lio::write_pricing(out.join("best_pricing.json"), &d.pricing)?;
    println!("outcomes {}", pd.outcomes().len());
    println!("expected_revenue {}", fmt_revenue(d.expected_revenue));
    println!("best_revenue {}", fmt_revenue(d.best_revenue));
    note(cli, format!("wrote distribution and best pricing to {}", out.display()));
    Ok(())
}

fn cmd_eval(
    cli: &Cli,
    instance: &Path,
    menu: Option<&Path>,
    pricing: Option<&Path>,
    model: EvalModel,
    limits: (u32, u32, usize),
) -> Result<()> {
    let inst = read_instance(instance)?;
    let revenue = match (model, menu, pricing) {
        (EvalModel::Items, _, Some(p)) => {
            let pricing = lio::read_pricing(p).with_context(|| format!("reading pricing {}", p.display()))?;
            item_pricing_revenue(&inst, &pricing, cli.tol)?
        }
        (EvalModel::Items, _, None) => bail!("model items needs --pricing"),
        (EvalModel::BuyOne, Some(m), _) => buy_one_revenue_with(&inst, &read_menu(m)?, cli.tol, TieBreak::HighestPrice)?,
        (EvalModel::BuyMany, Some(m), _) => {
            let limits = BundleLimits::new(limits.0, limits.1, limits.2)?;
            buy_many_revenue_bounded(&inst, &read_menu(m)?, limits)?
        }
        (_, None, _) => bail!("models buy-one and buy-many need --menu"),
    };
    println!("revenue {}", fmt_revenue(revenue));
    Ok(())
}

fn cmd_gap(cli: &Cli, family: Family, params: &FamilyParams, ns: &[usize], qs: &[f64], grids: &[usize], out: Option<&Path>) -> Result<()> {
    let config = SweepConfig {
        family,
        ns: ns.to_vec(),
        qs: qs.to_vec(),
        grids: grids.to_vec(),
        seed: cli.seed,
        budget: params.budget,
        interval: (params.a, params.b),
    };
    let report = run_sweep(&config.points())?;
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            report.write_csv(file)?;
            note(cli, format!("wrote {} rows to {}", report.rows.len(), path.display()));
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if !(cli.tol >= 0.0 && cli.tol.is_finite()) {
        bail!("--tol must be a finite non-negative number");
    }
    match &cli.command {
        Command::Gen { family, params, n, q, grid, out } => cmd_gen(cli, *family, params, *n, *q, *grid, out),
        Command::Solve { instance, out } => cmd_solve(cli, instance, out),
        Command::Round { mode, instance, menu, out } => cmd_round(cli, *mode, instance, menu, out),
        Command::Eval { instance, menu, pricing, model, max_copies, max_mix, top_c } => {
            cmd_eval(cli, instance, menu.as_deref(), pricing.as_deref(), *model, (*max_copies, *max_mix, *top_c))
        }
        Command::Gap { family, params, ns, qs, grids, out } => cmd_gap(cli, *family, params, ns, qs, grids, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
