//! Value functions: the generic [`ScalarField`] interface, the closed-form value
//! of the vintage family, and a brute-force enumeration oracle.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dynamics::{simulate_cost, PiecewiseControl};
use crate::error::{Error, Result};
use crate::export::{fmt_f64, write_row};
use crate::problem::{ControlProblem, VintageSpec};
use crate::statespace::StateVec;

/// A real function of `(t, x)`, optionally with exact derivatives.
pub trait ScalarField: Send + Sync {
    fn eval(&self, t: f64, x: &StateVec) -> f64;

    /// `(w_t, Dw)` where known.
    fn derivatives(&self, _t: f64, _x: &StateVec) -> Option<(f64, StateVec)> {
        None
    }

    /// Constant `C` with `|w(t,x) - w(t,y)| <= C |x - y|_{-1}`, where known.
    fn lipschitz_minus1(&self) -> Option<f64> {
        None
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn eval(&self, t: f64, x: &StateVec) -> f64 {
        (**self).eval(t, x)
    }
    fn derivatives(&self, t: f64, x: &StateVec) -> Option<(f64, StateVec)> {
        (**self).derivatives(t, x)
    }
    fn lipschitz_minus1(&self) -> Option<f64> {
        (**self).lipschitz_minus1()
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Arc<F> {
    fn eval(&self, t: f64, x: &StateVec) -> f64 {
        (**self).eval(t, x)
    }
    fn derivatives(&self, t: f64, x: &StateVec) -> Option<(f64, StateVec)> {
        (**self).derivatives(t, x)
    }
    fn lipschitz_minus1(&self) -> Option<f64> {
        (**self).lipschitz_minus1()
    }
}

type EvalFn = Arc<dyn Fn(f64, &StateVec) -> f64 + Send + Sync>;
type DerivFn = Arc<dyn Fn(f64, &StateVec) -> (f64, StateVec) + Send + Sync>;

/// A field from closures.
#[derive(Clone)]
pub struct FnField {
    f: EvalFn,
    df: Option<DerivFn>,
    lipschitz: Option<f64>,
}

impl FnField {
    pub fn new(f: impl Fn(f64, &StateVec) -> f64 + Send + Sync + 'static) -> Self {
        FnField {
            f: Arc::new(f),
            df: None,
            lipschitz: None,
        }
    }

    pub fn with_derivatives(mut self, df: impl Fn(f64, &StateVec) -> (f64, StateVec) + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_lipschitz(mut self, c: f64) -> Self {
        self.lipschitz = Some(c);
        self
    }

    pub fn constant(c: f64) -> Self {
        FnField::new(move |_, _| c).with_lipschitz(0.0)
    }
}

impl ScalarField for FnField {
    fn eval(&self, t: f64, x: &StateVec) -> f64 {
        (self.f)(t, x)
    }
    fn derivatives(&self, t: f64, x: &StateVec) -> Option<(f64, StateVec)> {
        self.df.as_ref().map(|d| d(t, x))
    }
    fn lipschitz_minus1(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// `w(t, x) + offset + rate (T - t)`
#[derive(Clone)]
pub struct AffineShift<W> {
    pub inner: W,
    pub offset: f64,
    pub rate: f64,
    pub horizon: f64,
}

impl<W: ScalarField> ScalarField for AffineShift<W> {
    fn eval(&self, t: f64, x: &StateVec) -> f64 {
        self.inner.eval(t, x) + self.offset + self.rate * (self.horizon - t)
    }
    fn derivatives(&self, t: f64, x: &StateVec) -> Option<(f64, StateVec)> {
        self.inner.derivatives(t, x).map(|(wt, dw)| (wt - self.rate, dw))
    }
    fn lipschitz_minus1(&self) -> Option<f64> {
        self.inner.lipschitz_minus1()
    }
}

/// `G(t) = int_t^T e^{lambda (s - t)} ds`, the analytic continuation for `t > T`.
pub fn compute_g(lambda: f64, t: f64, horizon: f64) -> f64 {
    let d = horizon - t;
    if lambda.abs() < 1e-8 {
        d
    } else {
        (lambda * d).exp_m1() / lambda
    }
}

/// `int_t^T G(s)^2 ds`
pub fn g_squared_integral(lambda: f64, t: f64, horizon: f64) -> f64 {
    let d = horizon - t;
    let z = lambda * d;
    if z.abs() <= 1.0 {
        // sum_{n>=2} (2^n - 2) lambda^{n-2} d^{n+1} / ((n+1) n!)
        let mut sum = 0.0;
        let mut zpow = 1.0; // (lambda d)^{n-2}
        let mut fact = 2.0; // n!
        let mut two = 4.0; // 2^n
        for n in 2..60 {
            let term = (two - 2.0) * zpow / ((n as f64 + 1.0) * fact);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            zpow *= z;
            fact *= n as f64 + 1.0;
            two *= 2.0;
        }
        sum * d * d * d
    } else {
        let l = lambda;
        ((2.0 * z).exp_m1() / (2.0 * l) - 2.0 * z.exp_m1() / l + d) / (l * l)
    }
}

/// `W(t, x) = -G(t) |<alpha, x>| - c^2/2 int_t^T G^2`
pub fn vintage_value(spec: &VintageSpec, t: f64, x: &StateVec) -> f64 {
    let g = compute_g(spec.eigenvalue, t, spec.horizon);
    -g * x[0].abs() - 0.5 * spec.coupling * spec.coupling * g_squared_integral(spec.eigenvalue, t, spec.horizon)
}

/// The closed-form value function of a vintage instance.
#[derive(Clone, Debug)]
pub struct VintageValue {
    pub spec: VintageSpec,
}

impl VintageValue {
    pub fn new(spec: VintageSpec) -> Self {
        VintageValue { spec }
    }

    /// `(W_t, DW)` on the branch selected by the sign of `<alpha, x>`;
    /// on the hyperplane this is the branch `<alpha, x> <= 0`.
    pub fn branch_derivatives(&self, t: f64, x: &StateVec) -> (f64, StateVec) {
        let s = &self.spec;
        let g = s.g(t);
        let sign = if x[0] > 0.0 { 1.0 } else { -1.0 };
        let wt = (1.0 + s.eigenvalue * g) * x[0].abs() + 0.5 * s.coupling * s.coupling * g * g;
        (wt, s.alpha().scaled(-g * sign))
    }
}

impl ScalarField for VintageValue {
    fn eval(&self, t: f64, x: &StateVec) -> f64 {
        vintage_value(&self.spec, t, x)
    }
    fn derivatives(&self, t: f64, x: &StateVec) -> Option<(f64, StateVec)> {
        Some(self.branch_derivatives(t, x))
    }
    fn lipschitz_minus1(&self) -> Option<f64> {
        Some(self.spec.g(0.0).abs())
    }
}

/// Which side of the hyperplane `<alpha, x> = 0` gets the negative-side control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryConvention {
    /// `-c G(t)` on `<alpha, x> <= 0`.
    Closed,
    /// `-c G(t)` on `<alpha, x> < 0`.
    Open,
}

pub fn vintage_feedback(spec: &VintageSpec, t: f64, x: &StateVec, convention: BoundaryConvention) -> f64 {
    let cg = spec.coupling * spec.g(t);
    let negative = match convention {
        BoundaryConvention::Closed => x[0] <= 0.0,
        BoundaryConvention::Open => x[0] < 0.0,
    };
    if negative {
        -cg
    } else {
        cg
    }
}

/// Maximum number of control sequences [`brute_force_value`] will enumerate.
pub const ENUMERATION_BUDGET: usize = 1_000_000;

/// Minimum cost over all controls that are constant on `n_steps` equal pieces of
/// `[t, T]` with values in `grid`. Ties go to the first sequence in
/// lexicographic order of grid indices.
pub fn brute_force_value(
    problem: &ControlProblem,
    t: f64,
    x: &StateVec,
    n_steps: usize,
    grid: &[Vec<f64>],
    dt: f64,
) -> Result<(f64, PiecewiseControl)> {
    if n_steps == 0 || grid.is_empty() {
        return Err(Error::param("n_steps", "need at least one step and one grid value"));
    }
    let count = (grid.len() as f64).powi(n_steps as i32);
    if count > ENUMERATION_BUDGET as f64 {
        return Err(Error::EnumerationBudget {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let t1 = problem.horizon();
    let decode = |mut idx: usize| {
        let mut values = vec![Vec::new(); n_steps];
        for slot in values.iter_mut().rev() {
            *slot = grid[idx % grid.len()].clone();
            idx /= grid.len();
        }
        PiecewiseControl::uniform(t, t1, values)
    };
    let best = (0..count as usize)
        .into_par_iter()
        .map(|idx| -> Result<(f64, usize)> {
            let u = decode(idx)?;
            Ok((simulate_cost(problem, t, x, &u, dt)?.0, idx))
        })
        .try_reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;
    Ok((best.0, decode(best.1)?))
}

/// Cache key for oracle results.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleKey {
    pub problem: String,
    pub t: f64,
    pub x_hash: String,
    pub n_steps: usize,
    pub grid_hash: String,
}

impl OracleKey {
    pub fn new(problem: &ControlProblem, t: f64, x: &StateVec, n_steps: usize, grid: &[Vec<f64>]) -> Self {
        OracleKey {
            problem: problem.fingerprint(),
            t,
            x_hash: hash_floats(x.iter().copied()),
            n_steps,
            grid_hash: hash_floats(grid.iter().flatten().copied()),
        }
    }

    fn fields(&self) -> [String; 5] {
        [
            self.problem.clone(),
            fmt_f64(self.t),
            self.x_hash.clone(),
            self.n_steps.to_string(),
            self.grid_hash.clone(),
        ]
    }
}

fn hash_floats(values: impl Iterator<Item = f64>) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// CSV table of oracle values keyed by problem, start point, step count and grid.
#[derive(Clone, Debug)]
pub struct OracleCache {
    path: PathBuf,
}

const CACHE_HEADER: [&str; 6] = ["problem", "t", "x_hash", "n_steps", "grid_hash", "value"];

impl OracleCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        OracleCache { path: path.into() }
    }

    pub fn lookup(&self, key: &OracleKey) -> Result<Option<f64>> {
        if !self.path.exists() {
            return Ok(None);
        }
        let mut reader = csv::Reader::from_path(&self.path)?;
        let want = key.fields();
        for record in reader.records() {
            let record = record?;
            if record.len() == 6 && (0..5).all(|i| record[i] == want[i]) {
                let v = record[5]
                    .parse::<f64>()
                    .map_err(|e| Error::config("oracle cache", e.to_string()))?;
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    pub fn store(&self, key: &OracleKey, value: f64) -> Result<()> {
        let fresh = !self.path.exists();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        if fresh {
            write_row(&mut f, &CACHE_HEADER)?;
        }
        let mut row = key.fields().to_vec();
        row.push(fmt_f64(value));
        write_row(&mut f, &row)?;
        f.flush()?;
        Ok(())
    }
}
