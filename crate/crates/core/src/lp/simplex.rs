//! Two-phase dense simplex on a condensed (dictionary) tableau.
//!
//! After shifting variables by their lower bounds and splitting equalities,
//! every row reads `s_i = b_i - a_i . y >= 0` with `y >= 0`. The tableau keeps
//! only the nonbasic columns, so its size is `rows x vars` regardless of how
//! many slacks there are. Infeasible starting dictionaries are repaired with
//! a single auxiliary variable (phase one) before optimizing the real
//! objective (phase two).
//!
//! Rows and columns are equilibrated by powers of two, and the tableau is
//! periodically rebuilt from the starting dictionary so rounding error
//! cannot accumulate across many pivots.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::dd::Dd;
use super::{LinearProgram, LpSolution, LpStatus, Relation, FEASIBILITY_TOL, REDUCED_COST_TOL};
use crate::error::{Error, Result};

/// Smallest column entry accepted as a pivot in the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Entries below this fraction of their column's largest entry are not pivots.
const PIVOT_REL: f64 = 1e-7;
/// Primal infeasibility the ratio test may introduce to pick a larger pivot.
const HARRIS_TOL: f64 = 1e-10;
/// A pivot smaller than this after selection is a numerical failure.
const MIN_PIVOT: f64 = 1e-11;
/// Pivots between tableau rebuilds, on top of one per column.
const REINVERT_BASE: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Lowest-index improving column, lowest-index leaving row on ties.
    #[default]
    Bland,
    /// Largest reduced cost. After `degenerate_limit` consecutive degenerate
    /// pivots Bland takes over until the objective moves again.
    DantzigThenBland { degenerate_limit: usize },
    /// Largest reduced cost per unit length of the tableau column, with the
    /// same fallback to Bland on degenerate runs.
    SteepestEdgeThenBland { degenerate_limit: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pricing {
    Bland,
    Dantzig,
    SteepestEdge,
}

/// Arithmetic used inside the tableau.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    /// Double-double (about 32 significant digits), several times slower.
    Extended,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub rule: PivotRule,
    pub max_pivots: usize,
    pub precision: Precision,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { rule: PivotRule::Bland, max_pivots: 1_000_000, precision: Precision::Double }
    }
}

trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
    const ZERO: Self;
    /// Factor applied to the pivoting tolerances.
    const TOL_SCALE: f64;
    fn get(self) -> f64;
}

impl Real for f64 {
    const ZERO: f64 = 0.0;
    const TOL_SCALE: f64 = 1.0;

    #[inline]
    fn get(self) -> f64 {
        self
    }
}

impl Real for Dd {
    const ZERO: Dd = Dd::ZERO;
    const TOL_SCALE: f64 = 1e-12;

    #[inline]
    fn get(self) -> f64 {
        self.hi()
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, SimplexOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: SimplexOptions) -> Result<LpSolution> {
    match opts.precision {
        Precision::Double => solve_in::<f64>(lp, opts),
        Precision::Extended => solve_in::<Dd>(lp, opts),
    }
}

fn solve_in<T: Real>(lp: &LinearProgram, opts: SimplexOptions) -> Result<LpSolution> {
    let n = lp.num_vars();
    let lower = lp.lower_bounds();

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(lp.constraints().len() + 1);
    for c in lp.constraints() {
        let shifted = c.rhs - c.lhs(lower);
        match c.relation {
            Relation::Le => rows.push((c.coeffs.clone(), shifted)),
            Relation::Ge => rows.push((c.coeffs.iter().map(|a| -a).collect(), -shifted)),
            Relation::Eq => {
                rows.push((c.coeffs.clone(), shifted));
                rows.push((c.coeffs.iter().map(|a| -a).collect(), -shifted));
            }
        }
    }

    // The objective takes part in the scaling so that its entries stay
    // comparable to the reduced-cost tolerance.
    rows.push((lp.objective().to_vec(), 0.0));
    let col_scale = equilibrate(&mut rows, n);
    let (objective, _) = rows.pop().expect("objective row pushed above");

    let needs_phase_one = rows.iter().any(|(_, b)| *b < 0.0);
    let mut t = Tableau::<T>::new(n, &rows, needs_phase_one);
    let mut pivots = 0;

    if needs_phase_one {
        let art = n;
        let r = (0..t.rows)
            .min_by(|&i, &j| t.b[i].get().total_cmp(&t.b[j].get()))
            .expect("phase one implies at least one row");
        t.cost[t.art_label] = -1.0;
        t.price_out();
        t.pivot(r, art);
        pivots += 1;
        match t.run(opts, &mut pivots)? {
            Phase::Optimal => {}
            Phase::Unbounded => unreachable!("phase one objective is bounded by zero"),
        }
        if t.z.get() < -FEASIBILITY_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective: f64::NEG_INFINITY,
                pivots,
            });
        }
        let art_label = t.art_label;
        if let Some(r) = t.basic.iter().position(|&l| l == art_label) {
            // Degenerate at zero: swap it out for any usable column.
            if let Some(s) = (0..t.cols).find(|&s| !t.frozen[s] && t.at(r, s).get().abs() > PIVOT_TOL) {
                t.pivot(r, s);
                pivots += 1;
            }
        }
        if let Some(s) = t.nonbasic.iter().position(|&l| l == art_label) {
            t.frozen[s] = true;
        }
    }

    t.set_objective(&objective);
    let status = match t.run(opts, &mut pivots)? {
        Phase::Optimal => LpStatus::Optimal,
        Phase::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                values: Vec::new(),
                objective: f64::INFINITY,
                pivots,
            })
        }
    };

    let mut values = lower.to_vec();
    for (r, &label) in t.basic.iter().enumerate() {
        if label < n {
            values[label] += col_scale[label] * t.b[r].get().max(0.0);
        }
    }
    check_residuals(lp, &values)?;
    let objective = lp.objective_value(&values);
    Ok(LpSolution { status, values, objective, pivots })
}

/// Power of two closest to `x` in log scale, or 1 for zero.
fn pow2_near(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        2f64.powi(x.log2().round() as i32)
    } else {
        1.0
    }
}

/// Geometric-mean row and column scaling by powers of two, applied in place.
///
/// Returns the column factors: a solution `y'` of the scaled rows maps back
/// to `y = col_scale * y'`.
fn equilibrate(rows: &mut [(Vec<f64>, f64)], n: usize) -> Vec<f64> {
    let mut col_scale = vec![1.0; n];
    let spread = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.filter(|a| *a != 0.0).fold((f64::INFINITY, 0.0f64), |(lo, hi), a| (lo.min(a.abs()), hi.max(a.abs())));
        if hi > 0.0 {
            pow2_near(1.0 / (lo * hi).sqrt())
        } else {
            1.0
        }
    };
    for _ in 0..4 {
        for (coeffs, rhs) in rows.iter_mut() {
            let f = spread(&mut coeffs.iter().copied());
            coeffs.iter_mut().for_each(|a| *a *= f);
            *rhs *= f;
        }
        for (j, scale) in col_scale.iter_mut().enumerate() {
            let f = spread(&mut rows.iter().map(|(c, _)| c[j]));
            rows.iter_mut().for_each(|(c, _)| c[j] *= f);
            *scale *= f;
        }
    }
    for (coeffs, rhs) in rows.iter_mut() {
        let f = 1.0 / pow2_near(coeffs.iter().fold(0.0, |m: f64, a| m.max(a.abs())));
        coeffs.iter_mut().for_each(|a| *a *= f);
        *rhs *= f;
    }
    col_scale
}

/// Relative residual check against the original constraints.
fn check_residuals(lp: &LinearProgram, x: &[f64]) -> Result<()> {
    for (k, c) in lp.constraints().iter().enumerate() {
        let scale = 1.0
            + c.rhs.abs()
            + c.coeffs.iter().zip(x).map(|(a, v)| (a * v).abs()).fold(0.0, f64::max);
        let viol = c.violation(x);
        if viol > FEASIBILITY_TOL * scale {
            return Err(Error::Numerical(format!(
                "constraint {k} violated by {viol:e} at the final vertex"
            )));
        }
    }
    Ok(())
}

enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    rows: usize,
    cols: usize,
    /// Structural variable count; the auxiliary column, if any, follows.
    n: usize,
    /// Row-major `rows x cols` coefficients of the nonbasic columns.
    a: Vec<T>,
    b: Vec<T>,
    /// Reduced costs of the nonbasic columns.
    c: Vec<T>,
    z: T,
    /// Variable labels: structural `0..n`, slack `n..n+rows`, auxiliary last.
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    frozen: Vec<bool>,
    art_label: usize,
    /// Objective coefficient of every label.
    cost: Vec<f64>,
    /// The starting dictionary, kept for rebuilding the tableau.
    orig_a: Vec<f64>,
    orig_b: Vec<f64>,
    since_reinvert: usize,
    scratch: Vec<T>,
}

impl<T: Real> Tableau<T> {
    fn new(n: usize, rows: &[(Vec<f64>, f64)], with_aux: bool) -> Self {
        let m = rows.len();
        let cols = n + usize::from(with_aux);
        let mut orig_a = vec![0.0; m * cols];
        let mut orig_b = vec![0.0; m];
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            orig_a[i * cols..i * cols + n].copy_from_slice(coeffs);
            if with_aux {
                orig_a[i * cols + n] = -1.0;
            }
            orig_b[i] = *rhs;
        }
        let art_label = n + m;
        let mut nonbasic: Vec<usize> = (0..n).collect();
        if with_aux {
            nonbasic.push(art_label);
        }
        Self {
            rows: m,
            cols,
            n,
            a: orig_a.iter().map(|&v| T::from(v)).collect(),
            b: orig_b.iter().map(|&v| T::from(v)).collect(),
            orig_a,
            orig_b,
            c: vec![T::ZERO; cols],
            z: T::ZERO,
            basic: (n..n + m).collect(),
            nonbasic,
            frozen: vec![false; cols],
            art_label,
            cost: vec![0.0; n + m + 1],
            since_reinvert: 0,
            scratch: vec![T::ZERO; cols],
        }
    }

    /// Column of `label` in the starting dictionary; `None` for slacks.
    fn orig_col(&self, label: usize) -> Option<usize> {
        if label < self.n {
            Some(label)
        } else if label == self.art_label {
            Some(self.n)
        } else {
            None
        }
    }

    /// Starting-dictionary coefficient of row `i` on nonbasic position `s`
    /// (slacks contribute the identity).
    fn orig_entry(&self, i: usize, s: usize) -> f64 {
        let label = self.nonbasic[s];
        match self.orig_col(label) {
            Some(c) => self.orig_a[i * self.cols + c],
            None if label - self.n == i => 1.0,
            None => 0.0,
        }
    }

    /// Rebuilds `a`, `b`, `c` and `z` for the current basis from the
    /// starting dictionary, discarding accumulated rounding error.
    ///
    /// With `S` the basic structural columns and `R` the rows whose slack is
    /// nonbasic, only the square system `A_RS X = [b_R | A_RN]` is solved.
    fn reinvert(&mut self) -> Result<()> {
        let (m, w) = (self.rows, self.cols);
        let basic_struct: Vec<(usize, usize)> =
            (0..m).filter_map(|p| self.orig_col(self.basic[p]).map(|c| (p, c))).collect();
        let tight_rows: Vec<usize> =
            self.nonbasic.iter().filter(|&&l| self.orig_col(l).is_none()).map(|&l| l - self.n).collect();
        let k = basic_struct.len();
        debug_assert_eq!(k, tight_rows.len());

        let stride = w + 1;
        let mut mat = vec![T::ZERO; k * k];
        let mut x = vec![T::ZERO; k * stride];
        for (r, &i) in tight_rows.iter().enumerate() {
            for (col, &(_, c)) in basic_struct.iter().enumerate() {
                mat[r * k + col] = T::from(self.orig_a[i * w + c]);
            }
            x[r * stride] = T::from(self.orig_b[i]);
            for s in 0..w {
                x[r * stride + 1 + s] = T::from(self.orig_entry(i, s));
            }
        }
        gauss_solve(&mut mat, &mut x, k, stride)?;

        let mut struct_row = vec![None; m];
        for (idx, &(p, _)) in basic_struct.iter().enumerate() {
            struct_row[p] = Some(idx);
        }
        for p in 0..m {
            let row = &mut self.a[p * w..(p + 1) * w];
            match struct_row[p] {
                Some(idx) => {
                    self.b[p] = x[idx * stride];
                    row.copy_from_slice(&x[idx * stride + 1..(idx + 1) * stride]);
                }
                None => {
                    let i = self.basic[p] - self.n;
                    let mut b = T::from(self.orig_b[i]);
                    for (s, v) in row.iter_mut().enumerate() {
                        let label = self.nonbasic[s];
                        *v = T::from(match label {
                            l if l < self.n => self.orig_a[i * w + l],
                            l if l == self.art_label => self.orig_a[i * w + self.n],
                            l if l - self.n == i => 1.0,
                            _ => 0.0,
                        });
                    }
                    for (idx, &(_, c)) in basic_struct.iter().enumerate() {
                        let f = self.orig_a[i * w + c];
                        if f != 0.0 {
                            let f = T::from(f);
                            b = b - f * x[idx * stride];
                            for (v, &xv) in row.iter_mut().zip(&x[idx * stride + 1..(idx + 1) * stride]) {
                                *v = *v - f * xv;
                            }
                        }
                    }
                    self.b[p] = clamp_zero(b);
                }
            }
        }
        self.price_out();
        self.since_reinvert = 0;
        Ok(())
    }

    /// Recomputes reduced costs and the objective value from `cost`.
    fn price_out(&mut self) {
        for s in 0..self.cols {
            self.c[s] = T::from(self.cost[self.nonbasic[s]]);
        }
        self.z = T::ZERO;
        for r in 0..self.rows {
            let f = self.cost[self.basic[r]];
            if f != 0.0 {
                let f = T::from(f);
                self.z = self.z + f * self.b[r];
                let row = &self.a[r * self.cols..(r + 1) * self.cols];
                for (c, &a) in self.c.iter_mut().zip(row) {
                    *c = *c - f * a;
                }
            }
        }
    }

    /// Switches to `max obj . y` over the structural variables.
    fn set_objective(&mut self, obj: &[f64]) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..obj.len()].copy_from_slice(obj);
        self.price_out();
    }

    #[inline]
    fn at(&self, r: usize, s: usize) -> T {
        self.a[r * self.cols + s]
    }

    #[inline]
    fn at_f(&self, r: usize, s: usize) -> f64 {
        self.a[r * self.cols + s].get()
    }

    /// An improving column, or `None` once every reduced cost is at most
    /// the tolerance (relative to the objective value when that exceeds 1).
    fn entering(&self, pricing: Pricing) -> Option<usize> {
        let tol = T::TOL_SCALE * REDUCED_COST_TOL * self.z.get().abs().max(1.0);
        let candidates = (0..self.cols).filter(|&s| !self.frozen[s] && self.c[s].get() > tol);
        let by_score = |score: &dyn Fn(usize) -> f64| {
            candidates.clone().max_by(|&i, &j| score(i).total_cmp(&score(j)).then(self.nonbasic[j].cmp(&self.nonbasic[i])))
        };
        match pricing {
            Pricing::Bland => candidates.min_by_key(|&s| self.nonbasic[s]),
            Pricing::Dantzig => by_score(&|s| self.c[s].get()),
            Pricing::SteepestEdge => by_score(&|s| {
                let norm2 = (0..self.rows).fold(1.0, |acc, r| acc + self.at_f(r, s) * self.at_f(r, s));
                self.c[s].get() / norm2.sqrt()
            }),
        }
    }

    /// Two-pass (Harris) ratio test. Rows whose entry is small relative to
    /// the column are never pivoted on; among rows within the relaxed bound,
    /// Bland takes the lowest label and Dantzig the largest entry.
    fn leaving(&self, s: usize, pricing: Pricing) -> Option<usize> {
        let col_max = (0..self.rows).fold(0.0, |m: f64, r| m.max(self.at_f(r, s)));
        let thresh = T::TOL_SCALE * PIVOT_TOL.max(PIVOT_REL * col_max);
        let theta = (0..self.rows)
            .filter(|&r| self.at_f(r, s) > thresh)
            .map(|r| (self.b[r].get().max(0.0) + T::TOL_SCALE * HARRIS_TOL) / self.at_f(r, s))
            .fold(f64::INFINITY, f64::min);
        if theta == f64::INFINITY {
            return None;
        }
        let eligible = (0..self.rows)
            .filter(|&r| self.at_f(r, s) > thresh && self.b[r].get().max(0.0) / self.at_f(r, s) <= theta);
        if pricing == Pricing::Bland {
            eligible.min_by_key(|&r| self.basic[r])
        } else {
            eligible.max_by(|&i, &j| self.at_f(i, s).total_cmp(&self.at_f(j, s)).then(self.basic[j].cmp(&self.basic[i])))
        }
    }

    fn run(&mut self, opts: SimplexOptions, pivots: &mut usize) -> Result<Phase> {
        let (base, limit) = match opts.rule {
            PivotRule::Bland => (Pricing::Bland, usize::MAX),
            PivotRule::DantzigThenBland { degenerate_limit } => (Pricing::Dantzig, degenerate_limit),
            PivotRule::SteepestEdgeThenBland { degenerate_limit } => (Pricing::SteepestEdge, degenerate_limit),
        };
        let mut pricing = base;
        let mut degenerate_run = 0;
        loop {
            if self.since_reinvert >= REINVERT_BASE + self.cols {
                self.reinvert()?;
            }
            // Verdicts are only trusted on a freshly rebuilt tableau.
            let Some(s) = self.entering(pricing) else {
                if self.since_reinvert == 0 {
                    return Ok(Phase::Optimal);
                }
                self.reinvert()?;
                continue;
            };
            let Some(r) = self.leaving(s, pricing) else {
                if self.since_reinvert == 0 {
                    return Ok(Phase::Unbounded);
                }
                self.reinvert()?;
                continue;
            };
            if self.at_f(r, s).abs() < T::TOL_SCALE * MIN_PIVOT {
                return Err(Error::Numerical(format!("pivot magnitude {:e}", self.at_f(r, s))));
            }
            if self.b[r].get() <= 0.0 {
                degenerate_run += 1;
                if degenerate_run >= limit {
                    pricing = Pricing::Bland;
                }
            } else {
                degenerate_run = 0;
                pricing = base;
            }
            self.pivot(r, s);
            *pivots += 1;
            if *pivots > opts.max_pivots {
                return Err(Error::Numerical(format!("no convergence after {} pivots", opts.max_pivots)));
            }
        }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.cols;
        let one = T::from(1.0);
        let inv = one / self.at(r, s);
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            row.iter_mut().for_each(|v| *v = *v * inv);
            row[s] = inv;
        }
        self.b[r] = self.b[r] * inv;
        self.scratch.copy_from_slice(&self.a[r * w..(r + 1) * w]);
        let br = self.b[r];

        for (i, (row, bi)) in self.a.chunks_mut(w).zip(self.b.iter_mut()).enumerate() {
            if i == r {
                continue;
            }
            let f = row[s];
            if f.get() == 0.0 {
                continue;
            }
            for (v, &p) in row.iter_mut().zip(&self.scratch) {
                *v = *v - f * p;
            }
            row[s] = -(f * inv);
            *bi = clamp_zero(*bi - f * br);
        }

        let f = self.c[s];
        if f.get() != 0.0 {
            for (c, &p) in self.c.iter_mut().zip(&self.scratch) {
                *c = *c - f * p;
            }
            self.c[s] = -(f * inv);
            self.z = self.z + f * br;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
        self.since_reinvert += 1;
    }
}

/// Rounds tiny negative right-hand sides up to zero.
#[inline]
fn clamp_zero<T: Real>(b: T) -> T {
    let v = b.get();
    if v < 0.0 && v > -1e-12 * T::TOL_SCALE {
        T::ZERO
    } else {
        b
    }
}

/// Solves `mat X = rhs` in place (`rhs` becomes `X`) by Gaussian
/// elimination with partial pivoting; `mat` is `k x k`, `rhs` is `k x stride`.
fn gauss_solve<T: Real>(mat: &mut [T], rhs: &mut [T], k: usize, stride: usize) -> Result<()> {
    let one = T::from(1.0);
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| mat[x * k + col].get().abs().total_cmp(&mat[y * k + col].get().abs()))
            .expect("nonempty range");
        let row_max = (col..k).fold(0.0, |m: f64, j| m.max(mat[piv * k + j].get().abs()));
        if !(mat[piv * k + col].get().abs() > 1e-13 * T::TOL_SCALE * row_max) {
            return Err(Error::Numerical("basis became singular".into()));
        }
        if piv != col {
            for j in 0..k {
                mat.swap(col * k + j, piv * k + j);
            }
            for j in 0..stride {
                rhs.swap(col * stride + j, piv * stride + j);
            }
        }
        let inv = one / mat[col * k + col];
        for r in (col + 1)..k {
            let f = mat[r * k + col] * inv;
            if f.get() == 0.0 {
                continue;
            }
            for j in col..k {
                mat[r * k + j] = mat[r * k + j] - f * mat[col * k + j];
            }
            for j in 0..stride {
                rhs[r * stride + j] = rhs[r * stride + j] - f * rhs[col * stride + j];
            }
        }
    }
    for col in (0..k).rev() {
        let inv = one / mat[col * k + col];
        for j in 0..stride {
            rhs[col * stride + j] = rhs[col * stride + j] * inv;
        }
        for r in 0..col {
            let f = mat[r * k + col];
            if f.get() == 0.0 {
                continue;
            }
            for j in 0..stride {
                rhs[r * stride + j] = rhs[r * stride + j] - f * rhs[col * stride + j];
            }
        }
    }
    Ok(())
}
