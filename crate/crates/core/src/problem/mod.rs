//! Control problem bundle: generator, smoothing operator, drift, costs, control
//! set and the structural constants, plus the parametric test-function families.

mod catalog;
mod probe;
mod testfn;

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::statespace::{SmoothingOperator, SpectralOperator, StateVec};

pub use catalog::{scalar_toy, square_wave, vintage, VintageSpec};
pub use probe::{probe_lipschitz, probe_uniform_modulus, LipschitzReport, ModulusReport};
pub use testfn::{RadialProfile, SmoothScalar, Test1Fn, Test2Fn};

pub type DriftFn = Arc<dyn Fn(f64, &StateVec, &[f64]) -> StateVec + Send + Sync>;
pub type RunningCostFn = Arc<dyn Fn(f64, &StateVec, &[f64]) -> f64 + Send + Sync>;
pub type TerminalCostFn = Arc<dyn Fn(&StateVec) -> f64 + Send + Sync>;

/// Default number of grid points per control dimension.
pub const DEFAULT_CONTROL_GRID: usize = 201;

/// Compact box in `R^d` with a uniform evaluation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: usize,
    grid: Vec<Vec<f64>>,
}

impl ControlSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: usize) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::param("control box", "lower/upper must be nonempty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::param("control box", "need finite lower <= upper"));
        }
        if points == 0 {
            return Err(Error::param("control grid", "must have at least one point"));
        }
        let axes: Vec<Vec<f64>> = lower
            .iter()
            .zip(&upper)
            .map(|(&l, &u)| axis_points(l, u, points))
            .collect();
        // lexicographic order: first coordinate varies slowest
        let mut grid = vec![Vec::new()];
        for axis in &axes {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(ControlSet {
            lower,
            upper,
            points,
            grid,
        })
    }

    pub fn interval(lo: f64, hi: f64, points: usize) -> Result<Self> {
        ControlSet::new(vec![lo], vec![hi], points)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    /// Grid points in lexicographic order.
    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn axis(&self, k: usize) -> Vec<f64> {
        axis_points(self.lower[k], self.upper[k], self.points)
    }

    pub fn spacing(&self, k: usize) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.upper[k] - self.lower[k]) / (self.points - 1) as f64
        }
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.len() == self.dim()
            && u
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn clamp(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    /// Same box with a different grid resolution.
    pub fn with_points(&self, points: usize) -> Result<Self> {
        ControlSet::new(self.lower.clone(), self.upper.clone(), points)
    }
}

fn axis_points(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 || lo == hi {
        return vec![0.5 * (lo + hi)];
    }
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// A deterministic optimal control problem on a truncated state space.
#[derive(Clone)]
pub struct ControlProblem {
    name: String,
    descriptor: String,
    generator: SpectralOperator,
    smoothing: SmoothingOperator,
    horizon: f64,
    controls: ControlSet,
    drift: DriftFn,
    running_cost: RunningCostFn,
    terminal_cost: TerminalCostFn,
    lipschitz_k: f64,
    bound_m: f64,
    growth_k: f64,
    vintage: Option<VintageSpec>,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("name", &self.name)
            .field("descriptor", &self.descriptor)
            .field("dim", &self.dim())
            .field("horizon", &self.horizon)
            .field("controls", &self.controls)
            .finish()
    }
}

impl ControlProblem {
    pub fn builder(
        name: impl Into<String>,
        generator: SpectralOperator,
        smoothing: SmoothingOperator,
        horizon: f64,
        controls: ControlSet,
    ) -> ProblemBuilder {
        let n = generator.dim();
        ProblemBuilder {
            name: name.into(),
            descriptor: String::new(),
            generator,
            smoothing,
            horizon,
            controls,
            drift: Arc::new(move |_, _, _| StateVec::zeros(n)),
            running_cost: Arc::new(|_, _, _| 0.0),
            terminal_cost: Arc::new(|_| 0.0),
            lipschitz_k: 1.0,
            bound_m: 1.0,
            growth_k: 0.0,
            vintage: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Human-readable parameter summary used for hashing and manifests.
    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Stable hash of name and descriptor.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(format!("{}|{}", self.name, self.descriptor).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn generator(&self) -> &SpectralOperator {
        &self.generator
    }

    pub fn smoothing(&self) -> &SmoothingOperator {
        &self.smoothing
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn controls(&self) -> &ControlSet {
        &self.controls
    }

    pub fn lipschitz_k(&self) -> f64 {
        self.lipschitz_k
    }

    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    pub fn growth_k(&self) -> f64 {
        self.growth_k
    }

    pub fn vintage(&self) -> Option<&VintageSpec> {
        self.vintage.as_ref()
    }

    pub fn drift(&self, t: f64, x: &StateVec, u: &[f64]) -> StateVec {
        (self.drift)(t, x, u)
    }

    pub fn running_cost(&self, t: f64, x: &StateVec, u: &[f64]) -> f64 {
        (self.running_cost)(t, x, u)
    }

    pub fn terminal_cost(&self, x: &StateVec) -> f64 {
        (self.terminal_cost)(x)
    }

    /// Same dynamics and costs with replaced operators. The closed-form tag is
    /// dropped since it no longer applies.
    pub fn with_operators(&self, generator: SpectralOperator, smoothing: SmoothingOperator) -> Result<Self> {
        if generator.dim() != self.dim() || smoothing.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: if generator.dim() != self.dim() { generator.dim() } else { smoothing.dim() },
            });
        }
        let mut p = self.clone();
        p.descriptor = format!("{};A={:?};B={:?}", self.descriptor, generator.to_spec().blocks, smoothing.diag());
        p.generator = generator;
        p.smoothing = smoothing;
        p.vintage = None;
        Ok(p)
    }

    /// Same problem with a different control-grid resolution.
    pub fn with_control_points(&self, points: usize) -> Result<Self> {
        let mut p = self.clone();
        p.controls = self.controls.with_points(points)?;
        p.descriptor = format!("{};grid={points}", self.descriptor);
        Ok(p)
    }
}

pub struct ProblemBuilder {
    name: String,
    descriptor: String,
    generator: SpectralOperator,
    smoothing: SmoothingOperator,
    horizon: f64,
    controls: ControlSet,
    drift: DriftFn,
    running_cost: RunningCostFn,
    terminal_cost: TerminalCostFn,
    lipschitz_k: f64,
    bound_m: f64,
    growth_k: f64,
    vintage: Option<VintageSpec>,
}

impl ProblemBuilder {
    pub fn descriptor(mut self, d: impl Into<String>) -> Self {
        self.descriptor = d.into();
        self
    }

    pub fn drift(mut self, f: impl Fn(f64, &StateVec, &[f64]) -> StateVec + Send + Sync + 'static) -> Self {
        self.drift = Arc::new(f);
        self
    }

    pub fn running_cost(mut self, f: impl Fn(f64, &StateVec, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.running_cost = Arc::new(f);
        self
    }

    pub fn terminal_cost(mut self, f: impl Fn(&StateVec) -> f64 + Send + Sync + 'static) -> Self {
        self.terminal_cost = Arc::new(f);
        self
    }

    /// `K` (weak-norm Lipschitz constant of the drift), `M` (bounds on the data)
    /// and the growth exponent of admissible value functions.
    pub fn constants(mut self, lipschitz_k: f64, bound_m: f64, growth_k: f64) -> Self {
        self.lipschitz_k = lipschitz_k;
        self.bound_m = bound_m;
        self.growth_k = growth_k;
        self
    }

    pub(crate) fn vintage(mut self, spec: VintageSpec) -> Self {
        self.vintage = Some(spec);
        self
    }

    pub fn build(self) -> Result<ControlProblem> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if self.generator.dim() != self.smoothing.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.generator.dim(),
                got: self.smoothing.dim(),
            });
        }
        if !(self.lipschitz_k > 0.0) {
            return Err(Error::param("K", "must be positive"));
        }
        if !(self.bound_m > 0.0) {
            return Err(Error::param("M", "must be positive"));
        }
        if !(self.growth_k >= 0.0) {
            return Err(Error::param("growth_k", "must be nonnegative"));
        }
        // evaluators must be finite at the origin for every grid control
        let zero = StateVec::zeros(self.generator.dim());
        for u in self.controls.grid() {
            let b = (self.drift)(0.0, &zero, u);
            b.check_len(self.generator.dim())?;
            if !b.is_finite() || !(self.running_cost)(0.0, &zero, u).is_finite() {
                return Err(Error::param("drift/running cost", format!("non-finite at x = 0, u = {u:?}")));
            }
        }
        if !(self.terminal_cost)(&zero).is_finite() {
            return Err(Error::param("terminal cost", "non-finite at x = 0"));
        }
        Ok(ControlProblem {
            name: self.name,
            descriptor: self.descriptor,
            generator: self.generator,
            smoothing: self.smoothing,
            horizon: self.horizon,
            controls: self.controls,
            drift: self.drift,
            running_cost: self.running_cost,
            terminal_cost: self.terminal_cost,
            lipschitz_k: self.lipschitz_k,
            bound_m: self.bound_m,
            growth_k: self.growth_k,
            vintage: self.vintage,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_lexicographic_and_hits_endpoints() {
        let u = ControlSet::new(vec![-1.0, 0.0], vec![1.0, 2.0], 3).unwrap();
        assert_eq!(u.grid().len(), 9);
        assert_eq!(u.grid()[0], vec![-1.0, 0.0]);
        assert_eq!(u.grid()[1], vec![-1.0, 1.0]);
        assert_eq!(u.grid()[8], vec![1.0, 2.0]);
        let v = ControlSet::interval(-1.0, 1.0, 5).unwrap();
        let pts: Vec<f64> = v.grid().iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn control_set_validation() {
        assert!(ControlSet::interval(1.0, -1.0, 3).is_err());
        assert!(ControlSet::interval(-1.0, 1.0, 0).is_err());
        assert!(ControlSet::new(vec![], vec![], 3).is_err());
        let single = ControlSet::interval(0.0, 0.0, 7).unwrap();
        assert_eq!(single.grid().len(), 1);
        assert!(single.contains(&[0.0], 0.0));
        assert!(!single.contains(&[0.1], 1e-9));
    }

    #[test]
    fn fingerprint_depends_on_parameters() {
        let a = vintage(&VintageSpec::nondegenerate()).unwrap();
        let b = vintage(&VintageSpec::degenerate()).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), vintage(&VintageSpec::nondegenerate()).unwrap().fingerprint());
    }

    #[test]
    fn builder_rejects_bad_horizon() {
        let a = SpectralOperator::diagonal(&[0.0]).unwrap();
        let r = ControlProblem::builder("x", a, SmoothingOperator::identity(1), 0.0, ControlSet::interval(-1.0, 1.0, 3).unwrap()).build();
        assert!(r.is_err());
    }
}
