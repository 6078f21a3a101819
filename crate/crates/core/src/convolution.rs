//! Inf- and sup-convolution regularization in the weak norm, envelope
//! differentials, and probes of the regularized functions.
//!
//! For a field `w` the inf-convolution is
//!
//! `w_{l,e,b}(t,x) = inf_{s,y} w(s,y) + |x-y|_{-1}^2/(2e) + (t-s)^2/(2b) + l e^{2mK(T-s)} |y|^m`
//!
//! and the sup-convolution is the mirror image. The search runs in scaled
//! variables `y = x + sqrt(e/b_k) z_k`, `s = t + sqrt(b) z_t`, where both
//! quadratic penalties become `|z|^2 / 2`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::hamiltonian;
use crate::problem::ControlProblem;
use crate::sampling;
use crate::statespace::{SmoothingOperator, StateVec};
use crate::value::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvolutionParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// Growth exponent of the penalty, `m >= 2` and `m > growth_k`.
    pub m: f64,
    /// `K` in `e^{2mK(T-s)}`.
    pub k_lip: f64,
}

impl ConvolutionParams {
    /// `m = max(2, growth_k + 1)` and `K` from the problem.
    pub fn for_problem(problem: &ControlProblem, lambda: f64, epsilon: f64, beta: f64) -> Result<Self> {
        let p = ConvolutionParams {
            lambda,
            epsilon,
            beta,
            m: (problem.growth_k() + 1.0).max(2.0),
            k_lip: problem.lipschitz_k(),
        };
        p.validate(problem)?;
        Ok(p)
    }

    pub fn validate(&self, problem: &ControlProblem) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("epsilon", self.epsilon), ("beta", self.beta), ("K", self.k_lip)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.m >= 2.0 && self.m > problem.growth_k()) {
            return Err(Error::param(
                "m",
                format!("need m >= 2 and m > growth exponent {}, got {}", problem.growth_k(), self.m),
            ));
        }
        Ok(())
    }
}

/// Controls for the multistart pattern search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub time_points: usize,
    pub space_points: usize,
    /// Number of spatial axes in the coarse grid.
    pub effective_dims: usize,
    /// Final pattern-search step in scaled variables.
    pub tolerance: f64,
    pub max_evals: usize,
    /// Best coarse-grid points used as extra starts.
    pub refine_starts: usize,
    /// Relative value difference under which two distinct local minima tie.
    pub tie_tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            time_points: 17,
            space_points: 9,
            effective_dims: 2,
            tolerance: 1e-9,
            max_evals: 200_000,
            refine_starts: 3,
            tie_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Inf,
    Sup,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Inf => 1.0,
            Sense::Sup => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvelopeStatus {
    Converged,
    /// Another local optimum with the same value and a different optimizer.
    Ambiguous { other_s: f64, other_y: StateVec },
}

#[derive(Clone, Debug)]
pub struct EnvelopePoint {
    pub value: f64,
    pub minimizer_s: f64,
    pub minimizer_y: StateVec,
    /// Time derivative of the envelope.
    pub a: f64,
    /// `p = B q`
    pub p: StateVec,
    pub q: StateVec,
    pub status: EnvelopeStatus,
    pub evaluations: usize,
}

/// The convolution objective at `(s, y)`; its infimum (or supremum for
/// [`Sense::Sup`]) over `(s, y)` is the regularized value at `(t, x)`.
#[allow(clippy::too_many_arguments)]
pub fn convolution_objective(
    problem: &ControlProblem,
    w: &impl ScalarField,
    params: &ConvolutionParams,
    sense: Sense,
    t: f64,
    x: &StateVec,
    s: f64,
    y: &StateVec,
) -> f64 {
    let b = problem.smoothing();
    let weak: f64 = x.iter().zip(y.iter()).zip(b.diag()).map(|((xi, yi), bk)| bk * (xi - yi) * (xi - yi)).sum();
    let penalty = weak / (2.0 * params.epsilon) + (t - s) * (t - s) / (2.0 * params.beta) + growth_penalty(problem, params, s, y);
    w.eval(s, y) + sense.sign() * penalty
}

fn growth_penalty(problem: &ControlProblem, params: &ConvolutionParams, s: f64, y: &StateVec) -> f64 {
    params.lambda * (2.0 * params.m * params.k_lip * (problem.horizon() - s)).exp() * y.norm().powf(params.m)
}

struct Search<'a, W> {
    problem: &'a ControlProblem,
    w: &'a W,
    params: &'a ConvolutionParams,
    sense: Sense,
    t: f64,
    x: &'a StateVec,
    // sqrt(eps / b_k)
    scale: Vec<f64>,
    sqrt_beta: f64,
    evals: usize,
}

impl<W: ScalarField> Search<'_, W> {
    fn point(&self, z: &[f64]) -> (f64, StateVec) {
        let s = (self.t + self.sqrt_beta * z[0]).clamp(0.0, self.problem.horizon());
        let y = StateVec::from_vec(self.x.iter().zip(&self.scale).zip(&z[1..]).map(|((xi, c), zi)| xi + c * zi).collect());
        (s, y)
    }

    // sign * (objective), minimized
    fn f(&mut self, z: &[f64]) -> f64 {
        self.evals += 1;
        let (s, y) = self.point(z);
        let quad = 0.5 * z[1..].iter().map(|v| v * v).sum::<f64>();
        let dt = self.t - s;
        self.sense.sign() * self.w.eval(s, &y)
            + quad
            + dt * dt / (2.0 * self.params.beta)
            + growth_penalty(self.problem, self.params, s, &y)
    }

    /// Hooke-Jeeves pattern search.
    fn descend(&mut self, start: Vec<f64>, step0: f64, tol: f64, cap: usize) -> Result<(f64, Vec<f64>)> {
        let n = start.len();
        let mut base = start;
        let mut fbase = self.f(&base);
        let mut step = step0;
        let budget_end = self.evals + cap;
        while step >= tol {
            if self.evals > budget_end {
                return Err(Error::NonConvergent {
                    t: self.t,
                    detail: format!("pattern search exceeded {cap} evaluations at step {step:e}"),
                });
            }
            let (mut trial, mut ftrial) = (base.clone(), fbase);
            self.explore(&mut trial, &mut ftrial, step, n);
            if ftrial < fbase {
                // pattern moves while they keep improving
                loop {
                    let mut pattern: Vec<f64> = trial.iter().zip(&base).map(|(a, b)| 2.0 * a - b).collect();
                    base = trial.clone();
                    fbase = ftrial;
                    let mut fp = self.f(&pattern);
                    self.explore(&mut pattern, &mut fp, step, n);
                    if fp < fbase {
                        trial = pattern;
                        ftrial = fp;
                    } else {
                        break;
                    }
                    if self.evals > budget_end {
                        break;
                    }
                }
            } else {
                step *= 0.5;
            }
        }
        Ok((fbase, base))
    }

    fn explore(&mut self, z: &mut [f64], fz: &mut f64, step: f64, n: usize) {
        for i in 0..n {
            let orig = z[i];
            z[i] = orig + step;
            let fp = self.f(z);
            if fp < *fz {
                *fz = fp;
                continue;
            }
            z[i] = orig - step;
            let fm = self.f(z);
            if fm < *fz {
                *fz = fm;
                continue;
            }
            z[i] = orig;
        }
    }
}

/// Shared driver for both convolutions.
#[allow(clippy::too_many_arguments)]
pub fn convolve(
    problem: &ControlProblem,
    w: &impl ScalarField,
    params: &ConvolutionParams,
    opts: &SearchOptions,
    sense: Sense,
    t: f64,
    x: &StateVec,
) -> Result<EnvelopePoint> {
    params.validate(problem)?;
    x.check_len(problem.dim())?;
    let b = problem.smoothing();
    let n = problem.dim();
    let mut search = Search {
        problem,
        w,
        params,
        sense,
        t,
        x,
        scale: b.diag().iter().map(|bk| (params.epsilon / bk).sqrt()).collect(),
        sqrt_beta: params.beta.sqrt(),
        evals: 0,
    };
    let dim = n + 1;
    let origin = vec![0.0; dim];
    let f0 = search.f(&origin);

    // one-sided slopes at the anchor
    let fd = 1e-7;
    let mut grad = vec![0.0; dim];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut z = origin.clone();
        z[i] = fd;
        *g = (search.f(&z) - f0) / fd;
    }
    let g_space = grad[1..].iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut r_space = 3.0 * g_space;
    if let Some(c) = w.lipschitz_minus1() {
        r_space = r_space.max(2.0 * c * params.epsilon.sqrt());
    }
    let r_space = r_space.max(1e-3);
    let r_time = (3.0 * grad[0].abs()).max(1e-3);

    // coarse grid: negative gradient direction plus the steepest coordinate axes
    let mut axes: Vec<Vec<f64>> = Vec::new();
    if g_space > 0.0 {
        axes.push(grad[1..].iter().map(|g| -g / g_space).collect());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| grad[j + 1].abs().total_cmp(&grad[i + 1].abs()).then(i.cmp(&j)));
    for &k in &order {
        if axes.len() >= opts.effective_dims.min(n) {
            break;
        }
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        axes.push(e);
    }
    let lin = |m: usize, r: f64, i: usize| if m < 2 { 0.0 } else { -r + 2.0 * r * i as f64 / (m - 1) as f64 };
    let space_count = opts.space_points.max(1).pow(axes.len() as u32);
    let mut grid_vals: Vec<(f64, Vec<f64>)> = Vec::with_capacity(space_count * opts.time_points.max(1));
    for ti in 0..opts.time_points.max(1) {
        let zt = lin(opts.time_points, r_time, ti);
        for si in 0..space_count {
            let mut z = vec![0.0; dim];
            z[0] = zt;
            let mut idx = si;
            for axis in &axes {
                let c = lin(opts.space_points, r_space, idx % opts.space_points.max(1));
                idx /= opts.space_points.max(1);
                for k in 0..n {
                    z[k + 1] += c * axis[k];
                }
            }
            let v = search.f(&z);
            grid_vals.push((v, z));
        }
    }
    grid_vals.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut starts = vec![origin.clone(), grad.iter().map(|g| -g).collect::<Vec<_>>()];
    starts.extend(grid_vals.into_iter().take(opts.refine_starts).map(|(_, z)| z));
    let step0 = 0.25 * r_space.max(r_time);
    let mut minima: Vec<(f64, Vec<f64>)> = Vec::new();
    for z in starts {
        minima.push(search.descend(z, step0, opts.tolerance, opts.max_evals)?);
    }
    let best = minima
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one start");
    let (fbest, zbest) = minima[best].clone();
    let tie = opts.tie_tolerance * (1.0 + fbest.abs());
    let mut status = EnvelopeStatus::Converged;
    for (fv, z) in &minima {
        let dist = z.iter().zip(&zbest).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if (fv - fbest).abs() <= tie && dist > 1e-4 * (1.0 + r_space.max(r_time)) {
            let (other_s, other_y) = search.point(z);
            status = EnvelopeStatus::Ambiguous { other_s, other_y };
            break;
        }
    }
    let (s, y) = search.point(&zbest);
    let (a, q) = match sense {
        Sense::Inf => ((t - s) / params.beta, x.sub(&y).scaled(1.0 / params.epsilon)),
        Sense::Sup => ((s - t) / params.beta, y.sub(x).scaled(1.0 / params.epsilon)),
    };
    let p = b.apply(&q);
    Ok(EnvelopePoint {
        value: sense.sign() * fbest,
        minimizer_s: s,
        minimizer_y: y,
        a,
        p,
        q,
        status,
        evaluations: search.evals,
    })
}

pub fn inf_convolve(
    problem: &ControlProblem,
    w: &impl ScalarField,
    params: &ConvolutionParams,
    opts: &SearchOptions,
    t: f64,
    x: &StateVec,
) -> Result<EnvelopePoint> {
    convolve(problem, w, params, opts, Sense::Inf, t, x)
}

pub fn sup_convolve(
    problem: &ControlProblem,
    w: &impl ScalarField,
    params: &ConvolutionParams,
    opts: &SearchOptions,
    t: f64,
    x: &StateVec,
) -> Result<EnvelopePoint> {
    convolve(problem, w, params, opts, Sense::Sup, t, x)
}

/// A regularized field, usable wherever a [`ScalarField`] is expected.
/// Evaluation returns NaN if the search fails.
#[derive(Clone)]
pub struct Regularized<W> {
    pub problem: ControlProblem,
    pub w: W,
    pub params: ConvolutionParams,
    pub opts: SearchOptions,
    pub sense: Sense,
}

impl<W: ScalarField> Regularized<W> {
    pub fn new(problem: &ControlProblem, w: W, params: ConvolutionParams, sense: Sense) -> Self {
        Regularized {
            problem: problem.clone(),
            w,
            params,
            opts: SearchOptions::default(),
            sense,
        }
    }

    pub fn envelope(&self, t: f64, x: &StateVec) -> Result<EnvelopePoint> {
        convolve(&self.problem, &self.w, &self.params, &self.opts, self.sense, t, x)
    }

    /// Largest deviation between the envelope differential `(a, p)` and central
    /// differences of the regularized value with step `h`.
    pub fn gradient_mismatch(&self, t: f64, x: &StateVec, h: f64) -> Result<f64> {
        let env = self.envelope(t, x)?;
        let v = |t: f64, x: &StateVec| self.envelope(t, x).map(|e| e.value);
        let mut worst = ((v(t + h, x)? - v(t - h, x)?) / (2.0 * h) - env.a).abs();
        for k in 0..x.len() {
            let e = StateVec::unit(x.len(), k).scaled(h);
            let fd = (v(t, &x.add(&e))? - v(t, &x.sub(&e))?) / (2.0 * h);
            worst = worst.max((fd - env.p[k]).abs());
        }
        Ok(worst)
    }
}

impl<W: ScalarField> ScalarField for Regularized<W> {
    fn eval(&self, t: f64, x: &StateVec) -> f64 {
        self.envelope(t, x).map_or(f64::NAN, |e| e.value)
    }

    fn derivatives(&self, t: f64, x: &StateVec) -> Option<(f64, StateVec)> {
        self.envelope(t, x).ok().map(|e| (e.a, e.p))
    }
}

/// Sampling region `[t_min, t_max] x B_R` for the probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeDomain {
    pub t_min: f64,
    pub t_max: f64,
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub struct ConcavityReport {
    pub triples: usize,
    pub max_violation: f64,
    /// `((t1, x1), (t2, x2))` of the worst midpoint triple.
    pub worst: ((f64, StateVec), (f64, StateVec)),
    /// Per-triple violations in sampling order.
    pub violations: Vec<f64>,
}

/// Midpoint concavity of `f(t,x) - |x|_{-1}^2/(2 eps) - t^2/(2 beta)`.
///
/// Half the pairs are close, separated on the natural scales `sqrt(beta)` in
/// time and `sqrt(eps/b_k)` in space; the rest are independent in the domain.
pub fn midpoint_concavity_probe(
    f: &(dyn Fn(f64, &StateVec) -> f64 + Sync),
    smoothing: &SmoothingOperator,
    params: &ConvolutionParams,
    domain: &ProbeDomain,
    triples: usize,
    seed: u64,
) -> ConcavityReport {
    let n = smoothing.dim();
    let mut rng = sampling::rng(seed);
    let mut pairs = Vec::with_capacity(triples);
    for i in 0..triples {
        let t1 = sampling::uniform(&mut rng, domain.t_min, domain.t_max);
        let x1 = sampling::in_ball(&mut rng, n, domain.radius);
        let (t2, x2) = if i % 2 == 0 {
            let dt = params.beta.sqrt() * sampling::uniform(&mut rng, -1.0, 1.0);
            let dir = sampling::unit_vector(&mut rng, n);
            let dx = StateVec::from_vec(
                dir.iter()
                    .zip(smoothing.diag())
                    .map(|(d, b)| d * (params.epsilon / b).sqrt())
                    .collect(),
            );
            ((t1 + dt).clamp(domain.t_min, domain.t_max), x1.add(&dx))
        } else {
            (
                sampling::uniform(&mut rng, domain.t_min, domain.t_max),
                sampling::in_ball(&mut rng, n, domain.radius),
            )
        };
        pairs.push(((t1, x1), (t2, x2)));
    }
    let g = |t: f64, x: &StateVec| {
        f(t, x) - smoothing.norm_gamma(x, 1.0).powi(2) / (2.0 * params.epsilon) - t * t / (2.0 * params.beta)
    };
    let violations: Vec<f64> = pairs
        .par_iter()
        .map(|((t1, x1), (t2, x2))| {
            let tm = 0.5 * (t1 + t2);
            let xm = x1.add(x2).scaled(0.5);
            (0.5 * (g(*t1, x1) + g(*t2, x2)) - g(tm, &xm)).max(0.0)
        })
        .collect();
    let (wi, max_violation) = violations
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let worst = if pairs.is_empty() {
        ((0.0, StateVec::zeros(n)), (0.0, StateVec::zeros(n)))
    } else {
        pairs[wi].clone()
    };
    ConcavityReport {
        triples,
        max_violation,
        worst,
        violations,
    }
}

/// Semiconcavity check of the inf-convolution of `w`: the regularized value
/// minus the penalty quadratics must be concave.
#[allow(clippy::too_many_arguments)]
pub fn semiconvexity_probe<W: ScalarField + Clone>(
    problem: &ControlProblem,
    w: &W,
    params: &ConvolutionParams,
    opts: &SearchOptions,
    domain: &ProbeDomain,
    triples: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    if triples == 0 {
        return Err(Error::param("triples", "must be at least 1"));
    }
    params.validate(problem)?;
    let mut reg = Regularized::new(problem, w.clone(), *params, Sense::Inf);
    reg.opts = opts.clone();
    let f = |t: f64, x: &StateVec| reg.eval(t, x);
    Ok(midpoint_concavity_probe(&f, problem.smoothing(), params, domain, triples, seed))
}

#[derive(Clone, Debug)]
pub struct WeakLipschitzReport {
    /// Empirical constant over the first `samples` pairs.
    pub m_n: f64,
    /// Over `2 * samples` pairs.
    pub m_2n: f64,
    pub doubling_ratio: f64,
    /// Per basis direction, the largest `|f(x + h e_k) - f(x)| / |h e_k|_{-2}`.
    pub mode_ratios: Vec<f64>,
    /// Mode ratio at the smallest `b_k` over the ratio at the largest `b_k`.
    pub trend: f64,
    pub flagged: bool,
}

/// Empirical constant `M` in `|f(t,x) - f(s,y)| <= M (|t - s| + |x - y|_{-2})`.
pub fn lipschitz_minus2_probe(
    f: &(dyn Fn(f64, &StateVec) -> f64 + Sync),
    smoothing: &SmoothingOperator,
    domain: &ProbeDomain,
    samples: usize,
    seed: u64,
) -> Result<WeakLipschitzReport> {
    if samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    let n = smoothing.dim();
    let mut rng = sampling::rng(seed);
    let mut pairs = Vec::with_capacity(2 * samples);
    for _ in 0..2 * samples {
        let p = (
            sampling::uniform(&mut rng, domain.t_min, domain.t_max),
            sampling::in_ball(&mut rng, n, domain.radius),
        );
        let q = (
            sampling::uniform(&mut rng, domain.t_min, domain.t_max),
            sampling::in_ball(&mut rng, n, domain.radius),
        );
        pairs.push((p, q));
    }
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|((t, x), (s, y))| {
            let d = (t - s).abs() + smoothing.norm_gamma(&x.sub(y), 2.0);
            if d < 1e-14 {
                0.0
            } else {
                (f(*t, x) - f(*s, y)).abs() / d
            }
        })
        .collect();
    let m_n = ratios[..samples].iter().cloned().fold(0.0, f64::max);
    let m_2n = ratios.iter().cloned().fold(0.0, f64::max);
    let doubling_ratio = if m_n > 0.0 { m_2n / m_n } else if m_2n > 0.0 { f64::INFINITY } else { 1.0 };

    let h = 0.1;
    let tm = 0.5 * (domain.t_min + domain.t_max);
    let mut bases = vec![StateVec::zeros(n)];
    for _ in 0..4 {
        bases.push(sampling::in_ball(&mut rng, n, 0.5 * domain.radius));
    }
    let mode_ratios: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let e = StateVec::unit(n, k).scaled(h);
            let d = smoothing.norm_gamma(&e, 2.0);
            bases
                .iter()
                .map(|x| (f(tm, &x.add(&e)) - f(tm, x)).abs() / d)
                .fold(0.0, f64::max)
        })
        .collect();
    let diag = smoothing.diag();
    let lo = (0..n).min_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(j.cmp(&i))).unwrap();
    let hi = (0..n).max_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(j.cmp(&i))).unwrap();
    let trend = if mode_ratios[hi] > 0.0 {
        mode_ratios[lo] / mode_ratios[hi]
    } else if mode_ratios[lo] > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(WeakLipschitzReport {
        m_n,
        m_2n,
        doubling_ratio,
        mode_ratios,
        trend,
        flagged: doubling_ratio > 1.2 || trend > 2.0,
    })
}

/// Which viscosity inequality the regularization is meant to preserve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Inf-convolution of a supersolution; expect `r >= -gamma`.
    Super,
    /// Sup-convolution of a subsolution; expect `r <= gamma`.
    Sub,
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub residual: f64,
    pub envelope: EnvelopePoint,
}

/// `r = a + <A* p, x> + H(t, x, p)` at the envelope differential.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_hjb_residual(
    problem: &ControlProblem,
    w: &impl ScalarField,
    params: &ConvolutionParams,
    opts: &SearchOptions,
    t: f64,
    x: &StateVec,
    side: Side,
) -> Result<ResidualReport> {
    let sense = match side {
        Side::Super => Sense::Inf,
        Side::Sub => Sense::Sup,
    };
    let env = convolve(problem, w, params, opts, sense, t, x)?;
    let pairing = problem.generator().pair_adjoint(&env.p, x)?;
    let residual = env.a + pairing + hamiltonian(problem, t, x, &env.p).value;
    Ok(ResidualReport { residual, envelope: env })
}
