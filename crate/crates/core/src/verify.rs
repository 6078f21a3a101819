//! Sufficient optimality checks: superdifferential membership, the integral
//! certificate along a trajectory, and the pointwise directional condition.

use std::io::Write;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::export::{fmt_f64, write_row};
use crate::problem::{ControlProblem, VintageSpec};
use crate::sampling;
use crate::statespace::StateVec;
use crate::value::{ScalarField, VintageValue};

/// `(q, p1, p2)` sampled at the midpoints of the trajectory steps.
#[derive(Clone, Debug)]
pub struct CertificateSelectors {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    /// Expected to lie in `D(A*)`.
    pub p1: Vec<StateVec>,
    pub p2: Vec<StateVec>,
}

impl CertificateSelectors {
    pub fn sample(traj: &Trajectory, f: impl Fn(f64, &StateVec) -> (f64, StateVec, StateVec)) -> Self {
        let mut sel = CertificateSelectors {
            times: Vec::with_capacity(traj.steps()),
            q: Vec::with_capacity(traj.steps()),
            p1: Vec::with_capacity(traj.steps()),
            p2: Vec::with_capacity(traj.steps()),
        };
        for j in 0..traj.steps() {
            let tm = traj.mid_time(j);
            let (q, p1, p2) = f(tm, &traj.mid_states[j]);
            sel.times.push(tm);
            sel.q.push(q);
            sel.p1.push(p1);
            sel.p2.push(p2);
        }
        sel
    }

    /// `q = V_t`, `p1 = DV` on the branch of the current state, `p2 = 0`.
    pub fn vintage(spec: &VintageSpec, traj: &Trajectory) -> Self {
        let v = VintageValue::new(spec.clone());
        let n = spec.dim();
        CertificateSelectors::sample(traj, |t, x| {
            let (q, p1) = v.branch_derivatives(t, x);
            (q, p1, StateVec::zeros(n))
        })
    }

    fn validate(&self, traj: &Trajectory) -> Result<()> {
        let m = traj.steps();
        if self.times.len() != m || self.q.len() != m || self.p1.len() != m || self.p2.len() != m {
            return Err(Error::param("selectors", format!("need {m} samples, one per trajectory step")));
        }
        if self.q.iter().any(|v| !v.is_finite()) || self.p1.iter().chain(&self.p2).any(|p| !p.is_finite()) {
            return Err(Error::param("selectors", "samples must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    /// `lhs <= rhs + tolerance`
    pub pass: bool,
    /// `|lhs - rhs| <= tolerance`
    pub equality: bool,
    /// `int <p2, A x> ds`, which vanishes for optimal certificates along
    /// trajectories in the domain of `A`.
    pub p2_pairing: f64,
    /// `(time, lhs density, rhs density)` per step.
    pub integrand: Vec<(f64, f64, f64)>,
}

impl CertificateReport {
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        write_row(&mut w, &["time", "lhs_density", "rhs_density"])?;
        for (t, l, r) in &self.integrand {
            write_row(&mut w, &[fmt_f64(*t), fmt_f64(*l), fmt_f64(*r)])?;
        }
        write_row(&mut w, &["# lhs".to_string(), fmt_f64(self.lhs), String::new()])?;
        write_row(&mut w, &["# rhs".to_string(), fmt_f64(self.rhs), String::new()])?;
        write_row(&mut w, &["# pass".to_string(), self.pass.to_string(), self.equality.to_string()])?;
        Ok(())
    }
}

/// `lhs = int [<p1 + p2, b> + q + <A* p1, x>] ds` and `rhs = -int L ds`, both on
/// the trajectory's midpoint rule. The default tolerance is `10 dt`.
pub fn check_certificate(
    problem: &ControlProblem,
    traj: &Trajectory,
    sel: &CertificateSelectors,
    tolerance: Option<f64>,
) -> Result<CertificateReport> {
    sel.validate(traj)?;
    let a = problem.generator();
    let (mut lhs, mut rhs, mut p2_pairing) = (0.0, 0.0, 0.0);
    let mut integrand = Vec::with_capacity(traj.steps());
    for j in 0..traj.steps() {
        let h = traj.step_width(j);
        let (tm, xm, u) = (traj.mid_time(j), &traj.mid_states[j], &traj.controls[j]);
        let b = problem.drift(tm, xm, u);
        let ptot = sel.p1[j].add(&sel.p2[j]);
        let l = ptot.dot(&b) + sel.q[j] + a.pair_adjoint(&sel.p1[j], xm)?;
        let r = -problem.running_cost(tm, xm, u);
        lhs += h * l;
        rhs += h * r;
        p2_pairing += h * sel.p2[j].dot(&a.apply(xm));
        integrand.push((tm, l, r));
    }
    let tolerance = tolerance.unwrap_or(10.0 * traj.dt);
    Ok(CertificateReport {
        lhs,
        rhs,
        tolerance,
        pass: lhs <= rhs + tolerance,
        equality: (lhs - rhs).abs() <= tolerance,
        p2_pairing,
        integrand,
    })
}

#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub radii: Vec<f64>,
    /// Positive part of the worst excess at each radius, divided by the radius.
    pub excess: Vec<f64>,
    /// Intercept of the least-squares line `excess ~ kappa + C rho`.
    pub kappa: f64,
    pub slope: f64,
    pub violation: f64,
    pub pass: bool,
}

/// Threshold on the first-order violation for membership to pass.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Checks the first-order superdifferential inequality
/// `w(s,y) <= w(t,x) + q (s-t) + <p, y-x> + o(|s-t| + |y-x|)`.
///
/// Excesses are measured on radii `r 2^{-j}` along random unit directions in
/// `(s, y)` and the coordinate directions. The first-order part is the
/// intercept of a line fitted to excess / radius; only the necessary
/// condition for the structured superdifferential is tested here.
#[allow(clippy::too_many_arguments)]
pub fn check_superdiff_membership(
    w: &impl ScalarField,
    t: f64,
    x: &StateVec,
    q: f64,
    p: &StateVec,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<MembershipReport> {
    if !(radius > 0.0) {
        return Err(Error::param("radius", "must be positive"));
    }
    let n = x.len();
    let mut rng = sampling::rng(seed);
    let mut dirs: Vec<Vec<f64>> = (0..samples).map(|_| sampling::unit_vector(&mut rng, n + 1).into_vec()).collect();
    for i in 0..=n {
        for sgn in [1.0, -1.0] {
            let mut d = vec![0.0; n + 1];
            d[i] = sgn;
            dirs.push(d);
        }
    }
    let w0 = w.eval(t, x);
    let radii: Vec<f64> = (0..6).map(|j| radius * 0.5_f64.powi(j)).collect();
    let excess: Vec<f64> = radii
        .iter()
        .map(|&rho| {
            let worst = dirs
                .iter()
                .map(|d| {
                    let s = t + rho * d[0];
                    let dy = StateVec::from_vec(d[1..].iter().map(|c| rho * c).collect());
                    w.eval(s, &x.add(&dy)) - w0 - q * (s - t) - p.dot(&dy)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            worst.max(0.0) / rho
        })
        .collect();
    let m = radii.len() as f64;
    let mr = radii.iter().sum::<f64>() / m;
    let me = excess.iter().sum::<f64>() / m;
    let sxx: f64 = radii.iter().map(|r| (r - mr) * (r - mr)).sum();
    let sxy: f64 = radii.iter().zip(&excess).map(|(r, e)| (r - mr) * (e - me)).sum();
    let slope = sxy / sxx;
    let kappa = me - slope * mr;
    let violation = kappa.max(0.0);
    Ok(MembershipReport {
        radii,
        excess,
        kappa,
        slope,
        violation,
        pass: violation <= MEMBERSHIP_TOL,
    })
}

/// Value at `0` of the polynomial through `(xs[i], ys[i])`.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// Default step list for [`pointwise_residual`].
pub const DEFAULT_DELTAS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Extrapolation to `delta = 0` of
/// `[V(s + delta, x + delta (A x + b(s, x, u))) - V(s, x)] / delta + L(s, x, u)`.
pub fn pointwise_residual(
    problem: &ControlProblem,
    v: &impl ScalarField,
    s: f64,
    x: &StateVec,
    u: &[f64],
    deltas: &[f64],
) -> Result<f64> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("deltas", "must be positive and strictly decreasing"));
    }
    let dir = problem.generator().apply(x).add(&problem.drift(s, x, u));
    let v0 = v.eval(s, x);
    let l = problem.running_cost(s, x, u);
    let quotients: Vec<f64> = deltas
        .iter()
        .map(|&d| (v.eval(s + d, &x.add_scaled(d, &dir)) - v0) / d + l)
        .collect();
    Ok(neville_at_zero(deltas, &quotients))
}
