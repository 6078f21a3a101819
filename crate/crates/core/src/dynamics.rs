//! Mild solutions under piecewise-constant controls, costs along trajectories,
//! and chain-rule residuals for the test-function families.

use std::io::Write;

use crate::error::{Error, Result};
use crate::export::{fmt_f64, write_row};
use crate::problem::{ControlProblem, Test1Fn, Test2Fn};
use crate::statespace::StateVec;

const TIME_TOL: f64 = 1e-12;

/// `u(s) = values[i]` on `[knots[i], knots[i+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseControl {
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl PiecewiseControl {
    /// `knots.len() == values.len() + 1`. A single knot with no values is the
    /// empty control on a degenerate interval.
    pub fn new(knots: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if knots.len() != values.len() + 1 {
            return Err(Error::param(
                "knots",
                format!("need {} knots for {} pieces, got {}", values.len() + 1, values.len(), knots.len()),
            ));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::param("knots", "non-finite knot"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("knots", "must be strictly increasing"));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.len() != first.len() || v.iter().any(|c| !c.is_finite())) {
                return Err(Error::param("values", "control values must be finite and of equal dimension"));
            }
        }
        Ok(PiecewiseControl { knots, values })
    }

    pub fn constant(t0: f64, t1: f64, u: Vec<f64>) -> Result<Self> {
        PiecewiseControl::new(vec![t0, t1], vec![u])
    }

    /// `values.len()` equal pieces on `[t0, t1]`.
    pub fn uniform(t0: f64, t1: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return PiecewiseControl::new(vec![t0], values);
        }
        let knots = (0..=n)
            .map(|i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 })
            .collect();
        PiecewiseControl::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Right-continuous evaluation; the last piece also covers the end point.
    pub fn value_at(&self, s: f64) -> Option<&[f64]> {
        if self.values.is_empty() || s < self.start() - TIME_TOL || s > self.end() + TIME_TOL {
            return None;
        }
        let i = self.knots[1..].partition_point(|&k| k <= s).min(self.values.len() - 1);
        Some(&self.values[i])
    }

    pub fn validate_for(&self, problem: &ControlProblem) -> Result<()> {
        if self.start() < -TIME_TOL || self.end() > problem.horizon() + TIME_TOL {
            return Err(Error::param(
                "knots",
                format!("[{}, {}] is not inside [0, {}]", self.start(), self.end(), problem.horizon()),
            ));
        }
        for v in &self.values {
            if !problem.controls().contains(v, 1e-12) {
                return Err(Error::param("values", format!("control {v:?} is outside the control box")));
            }
        }
        Ok(())
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &PiecewiseControl) -> Result<Self> {
        if (other.start() - self.end()).abs() > TIME_TOL {
            return Err(Error::param("knots", "controls are not contiguous"));
        }
        let mut knots = self.knots.clone();
        knots.extend_from_slice(&other.knots[1..]);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        PiecewiseControl::new(knots, values)
    }

    /// The control on `[a, b]`, which must lie inside its domain.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if a < self.start() - TIME_TOL || b > self.end() + TIME_TOL || b < a {
            return Err(Error::param("window", format!("[{a}, {b}] is outside [{}, {}]", self.start(), self.end())));
        }
        if b - a <= TIME_TOL {
            return PiecewiseControl::new(vec![a], Vec::new());
        }
        let mut knots = vec![a];
        let mut values = Vec::new();
        for i in 0..self.values.len() {
            let (lo, hi) = (self.knots[i].max(a), self.knots[i + 1].min(b));
            if hi - lo > TIME_TOL {
                values.push(self.values[i].clone());
                knots.push(hi);
            }
        }
        *knots.last_mut().unwrap() = b;
        PiecewiseControl::new(knots, values)
    }

    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.values.first().map_or(0, Vec::len);
        let mut header = vec!["t_start".to_string(), "t_end".to_string()];
        header.extend((1..=d).map(|k| format!("u_{k}")));
        write_row(&mut w, &header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row = vec![fmt_f64(self.knots[i]), fmt_f64(self.knots[i + 1])];
            row.extend(v.iter().map(|c| fmt_f64(*c)));
            write_row(&mut w, &row)?;
        }
        Ok(())
    }
}

/// Nodes of the integrator together with the predicted midpoint states.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVec>,
    /// `mid_states[j]` approximates `x((times[j] + times[j+1]) / 2)`.
    pub mid_states: Vec<StateVec>,
    /// Control on `[times[j], times[j+1])`.
    pub controls: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn initial_state(&self) -> &StateVec {
        &self.states[0]
    }

    pub fn final_state(&self) -> &StateVec {
        &self.states[self.states.len() - 1]
    }

    pub fn steps(&self) -> usize {
        self.controls.len()
    }

    pub fn step_width(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    pub fn mid_time(&self, j: usize) -> f64 {
        0.5 * (self.times[j] + self.times[j + 1])
    }

    /// Linear interpolation between nodes.
    pub fn state_at(&self, s: f64) -> StateVec {
        let last = self.times.len() - 1;
        if s <= self.times[0] || last == 0 {
            return self.states[0].clone();
        }
        if s >= self.times[last] {
            return self.states[last].clone();
        }
        let j = self.times.partition_point(|&t| t <= s) - 1;
        let w = (s - self.times[j]) / (self.times[j + 1] - self.times[j]);
        self.states[j].scaled(1.0 - w).add_scaled(w, &self.states[j + 1])
    }

    /// `n` uniformly spaced samples over the trajectory span.
    pub fn resample(&self, n: usize) -> (Vec<f64>, Vec<StateVec>) {
        let (a, b) = (self.start_time(), self.end_time());
        let times: Vec<f64> = (0..n)
            .map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect();
        let states = times.iter().map(|&s| self.state_at(s)).collect();
        (times, states)
    }

    /// Columns `time, coeff_1..coeff_N, u_1..u_d`; the control at the final
    /// node repeats the last piece.
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        let n = self.states[0].len();
        let d = self.controls.first().map_or(0, Vec::len);
        let mut header = vec!["time".to_string()];
        header.extend((1..=n).map(|k| format!("coeff_{k}")));
        header.extend((1..=d).map(|k| format!("u_{k}")));
        write_row(&mut w, &header)?;
        for (j, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row = vec![fmt_f64(*t)];
            row.extend(x.iter().map(|c| fmt_f64(*c)));
            if d > 0 {
                let u = &self.controls[j.min(self.controls.len() - 1)];
                row.extend(u.iter().map(|c| fmt_f64(*c)));
            }
            write_row(&mut w, &row)?;
        }
        Ok(())
    }
}

/// Exponential midpoint integration of `x' = Ax + b(t, x, u)`.
///
/// Each control piece of length `l` is split into `ceil(l / dt)` equal steps,
/// so steps never cross a knot. With `h` the step,
/// `x_pred = e^{hA/2} x_j + (h/2) b(t_j, x_j, u)` and
/// `x_{j+1} = e^{hA} x_j + h e^{hA/2} b(t_j + h/2, x_pred, u)`.
pub fn integrate_mild(
    problem: &ControlProblem,
    t0: f64,
    x0: &StateVec,
    u: &PiecewiseControl,
    dt: f64,
) -> Result<Trajectory> {
    x0.check_len(problem.dim())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if (u.start() - t0).abs() > TIME_TOL {
        return Err(Error::param("control", format!("starts at {} but t0 = {t0}", u.start())));
    }
    u.validate_for(problem)?;
    let a = problem.generator();
    let mut times = vec![t0];
    let mut states = vec![x0.clone()];
    let mut mid_states = Vec::new();
    let mut controls = Vec::new();
    let mut x = x0.clone();
    let mut cache: Option<(f64, crate::statespace::SpectralOperator, crate::statespace::SpectralOperator)> = None;
    for (i, v) in u.values().iter().enumerate() {
        let (k0, k1) = (u.knots()[i], u.knots()[i + 1]);
        let m = (((k1 - k0) / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = (k1 - k0) / m as f64;
        if cache.as_ref().is_none_or(|c| c.0 != h) {
            cache = Some((h, a.exponential(h), a.exponential(0.5 * h)));
        }
        let (_, full, half) = cache.as_ref().unwrap();
        for j in 0..m {
            let tj = k0 + h * j as f64;
            let b0 = drift_checked(problem, tj, &x, v)?;
            let pred = half.apply(&x).add_scaled(0.5 * h, &b0);
            let b1 = drift_checked(problem, tj + 0.5 * h, &pred, v)?;
            x = full.apply(&x).add(&half.apply(&b1).scaled(h));
            times.push(if j + 1 == m { k1 } else { tj + h });
            states.push(x.clone());
            mid_states.push(pred);
            controls.push(v.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        mid_states,
        controls,
        dt,
    })
}

fn drift_checked(problem: &ControlProblem, t: f64, x: &StateVec, u: &[f64]) -> Result<StateVec> {
    let b = problem.drift(t, x, u);
    b.check_len(problem.dim())?;
    if !b.is_finite() || !x.is_finite() {
        return Err(Error::NonFiniteDrift {
            t,
            state_norm: x.norm(),
            control: u.to_vec(),
        });
    }
    Ok(b)
}

/// Composite midpoint rule for `int L(s, x(s), u(s)) ds`.
pub fn running_cost_integral(problem: &ControlProblem, traj: &Trajectory) -> f64 {
    (0..traj.steps())
        .map(|j| traj.step_width(j) * problem.running_cost(traj.mid_time(j), &traj.mid_states[j], &traj.controls[j]))
        .sum()
}

/// `int L ds + h(x(end))`.
pub fn cost(problem: &ControlProblem, traj: &Trajectory) -> f64 {
    running_cost_integral(problem, traj) + problem.terminal_cost(traj.final_state())
}

/// Integrates and evaluates the cost in one call.
pub fn simulate_cost(problem: &ControlProblem, t0: f64, x0: &StateVec, u: &PiecewiseControl, dt: f64) -> Result<(f64, Trajectory)> {
    let traj = integrate_mild(problem, t0, x0, u, dt)?;
    Ok((cost(problem, &traj), traj))
}

/// Sample-and-hold closed loop: on each of `pieces` equal intervals of
/// `[t0, t1]` the control is the feedback evaluated at the interval start.
pub fn sample_and_hold(
    problem: &ControlProblem,
    t0: f64,
    t1: f64,
    x0: &StateVec,
    pieces: usize,
    dt: f64,
    feedback: impl Fn(f64, &StateVec) -> Vec<f64>,
) -> Result<(PiecewiseControl, Trajectory)> {
    if pieces == 0 {
        return Err(Error::param("pieces", "must be at least 1"));
    }
    let knots: Vec<f64> = (0..=pieces)
        .map(|i| if i == pieces { t1 } else { t0 + (t1 - t0) * i as f64 / pieces as f64 })
        .collect();
    let mut x = x0.clone();
    let mut values = Vec::with_capacity(pieces);
    let mut full: Option<Trajectory> = None;
    for i in 0..pieces {
        let v = problem.controls().clamp(&feedback(knots[i], &x));
        let piece = PiecewiseControl::constant(knots[i], knots[i + 1], v.clone())?;
        let seg = integrate_mild(problem, knots[i], &x, &piece, dt)?;
        x = seg.final_state().clone();
        values.push(v);
        full = Some(match full {
            None => seg,
            Some(mut acc) => {
                acc.times.extend_from_slice(&seg.times[1..]);
                acc.states.extend_from_slice(&seg.states[1..]);
                acc.mid_states.extend(seg.mid_states);
                acc.controls.extend(seg.controls);
                acc
            }
        });
    }
    Ok((PiecewiseControl::new(knots, values)?, full.expect("at least one piece")))
}

/// `|phi(s, x(s)) - phi(t, x) - int [phi_t + <A* D phi, x> + <D phi, b>] dr|`
/// at the trajectory end point, with the integral on the midpoint rule.
pub fn chain_rule_residual(problem: &ControlProblem, phi: &Test1Fn, traj: &Trajectory) -> Result<f64> {
    let mut integral = 0.0;
    for j in 0..traj.steps() {
        let (tm, xm) = (traj.mid_time(j), &traj.mid_states[j]);
        let grad = phi.grad(tm, xm);
        let b = problem.drift(tm, xm, &traj.controls[j]);
        integral += traj.step_width(j) * (phi.dt(tm, xm) + problem.generator().pair_adjoint(&grad, xm)? + grad.dot(&b));
    }
    let lhs = phi.value(traj.end_time(), traj.final_state()) - phi.value(traj.start_time(), traj.initial_state());
    Ok((lhs - integral).abs())
}

/// Signed defect `[g(s, x(s)) - g(t, x)] - [g_t(t, x)(s - t) + int <Dg(t, x), b(r, x(r), u(r))> dr]`
/// with `s` the trajectory end.
pub fn test2_residual(problem: &ControlProblem, g: &Test2Fn, traj: &Trajectory) -> f64 {
    let (t, x) = (traj.start_time(), traj.initial_state());
    let dg = g.grad(t, x);
    let drift_term: f64 = (0..traj.steps())
        .map(|j| traj.step_width(j) * dg.dot(&problem.drift(traj.mid_time(j), &traj.mid_states[j], &traj.controls[j])))
        .sum();
    let s = traj.end_time();
    (g.value(s, traj.final_state()) - g.value(t, x)) - (g.dt(t, x) * (s - t) + drift_term)
}

/// Final states under a sequence of step sizes and the successive differences
/// `d_k = |x_{dt_k}(end) - x_{dt_{k+1}}(end)|`. For a second-order scheme under
/// step halving, `d_k / d_{k+1}` tends to 4.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl ConvergenceReport {
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        write_row(&mut w, &["dt", "difference", "ratio"])?;
        for (k, dt) in self.dts.iter().enumerate() {
            let d = self.differences.get(k).map_or(String::new(), |v| fmt_f64(*v));
            let r = k.checked_sub(1).and_then(|i| self.ratios.get(i)).map_or(String::new(), |v| fmt_f64(*v));
            write_row(&mut w, &[fmt_f64(*dt), d, r])?;
        }
        Ok(())
    }
}

/// Integrates `u` once per entry of the strictly decreasing `dts`.
pub fn convergence_study(problem: &ControlProblem, t0: f64, x0: &StateVec, u: &PiecewiseControl, dts: &[f64]) -> Result<ConvergenceReport> {
    if dts.len() < 3 || dts.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("dts", "need at least three strictly decreasing step sizes"));
    }
    let trajectories = dts
        .iter()
        .map(|&dt| integrate_mild(problem, t0, x0, u, dt))
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = trajectories
        .windows(2)
        .map(|w| w[0].final_state().sub(w[1].final_state()).norm())
        .collect();
    let ratios = differences.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ConvergenceReport {
        dts: dts.to_vec(),
        trajectories,
        differences,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{scalar_toy, vintage, ControlSet, SmoothScalar, VintageSpec};
    use crate::statespace::{SmoothingOperator, SpectralOperator};
    use approx::assert_abs_diff_eq;

    fn free_rotation() -> ControlProblem {
        ControlProblem::builder("free", SpectralOperator::rotation(4, 0.0).unwrap(), SmoothingOperator::fourier(4), 1.0, ControlSet::interval(-1.0, 1.0, 3).unwrap())
            .build()
            .unwrap()
    }

    #[test]
    fn control_lookup_and_validation() {
        let u = PiecewiseControl::uniform(0.0, 1.0, vec![vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(u.value_at(0.0), Some(&[1.0][..]));
        assert_eq!(u.value_at(0.5), Some(&[-1.0][..]));
        assert_eq!(u.value_at(1.0), Some(&[-1.0][..]));
        assert_eq!(u.value_at(1.5), None);
        assert!(PiecewiseControl::new(vec![0.0, 0.0], vec![vec![1.0]]).is_err());
        assert!(PiecewiseControl::new(vec![0.0, 1.0], vec![]).is_err());
        let p = scalar_toy(1.0, 5).unwrap();
        assert!(u.validate_for(&p).is_ok());
        assert!(PiecewiseControl::constant(0.0, 1.0, vec![2.0]).unwrap().validate_for(&p).is_err());
        assert!(PiecewiseControl::constant(0.0, 1.5, vec![0.0]).unwrap().validate_for(&p).is_err());
    }

    #[test]
    fn restrict_and_concat_roundtrip() {
        let u = PiecewiseControl::uniform(0.0, 1.0, vec![vec![1.0], vec![0.0], vec![-1.0], vec![0.5]]).unwrap();
        let a = u.restrict(0.0, 0.6).unwrap();
        assert_eq!(a.knots(), &[0.0, 0.25, 0.5, 0.6]);
        let b = u.restrict(0.6, 1.0).unwrap();
        assert_eq!(b.values(), &[vec![-1.0], vec![0.5]]);
        let joined = a.concat(&b).unwrap();
        assert_eq!(joined.pieces(), 5);
        assert_eq!(u.restrict(0.3, 0.3).unwrap().pieces(), 0);
    }

    #[test]
    fn pure_rotation_is_exact() {
        let p = free_rotation();
        let u = PiecewiseControl::constant(0.0, 0.25, vec![0.0]).unwrap();
        let traj = integrate_mild(&p, 0.0, &StateVec::unit(9, 2), &u, 1e-3).unwrap();
        let end = traj.final_state();
        for (i, v) in end.iter().enumerate() {
            assert_abs_diff_eq!(*v, if i == 1 { 1.0 } else { 0.0 }, epsilon = 1e-10);
        }
        assert_eq!(traj.states[0], StateVec::unit(9, 2));
    }

    #[test]
    fn vintage_zero_control_keeps_alpha_pairing() {
        let p = vintage(&VintageSpec::nondegenerate()).unwrap();
        let mut x = StateVec::new(vec![-1.0, 0.3, 0.2, -0.5, 0.1, 0.0, 0.7, 0.2, -0.1]).unwrap();
        x[0] = -1.0;
        let u = PiecewiseControl::constant(0.0, 1.0, vec![0.0]).unwrap();
        let traj = integrate_mild(&p, 0.0, &x, &u, 1e-3).unwrap();
        assert!(traj.states.iter().all(|s| (s[0] + 1.0).abs() < 1e-14));
        assert_abs_diff_eq!(cost(&p, &traj), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn scalar_toy_linear_motion_and_cost() {
        let p = scalar_toy(1.0, 5).unwrap();
        let u = PiecewiseControl::constant(0.0, 1.0, vec![-1.0]).unwrap();
        let traj = integrate_mild(&p, 0.0, &StateVec::zeros(1), &u, 1e-3).unwrap();
        assert_abs_diff_eq!(traj.final_state()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cost(&p, &traj), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_interval_costs_terminal_value() {
        let p = scalar_toy(1.0, 5).unwrap();
        let u = PiecewiseControl::new(vec![1.0], vec![]).unwrap();
        let x = StateVec::new(vec![0.3]).unwrap();
        let traj = integrate_mild(&p, 1.0, &x, &u, 1e-3).unwrap();
        assert_eq!(cost(&p, &traj), 0.3);
    }

    #[test]
    fn steps_never_cross_knots() {
        let p = scalar_toy(1.0, 5).unwrap();
        let u = PiecewiseControl::new(vec![0.0, 0.3, 1.0], vec![vec![1.0], vec![-1.0]]).unwrap();
        let traj = integrate_mild(&p, 0.0, &StateVec::zeros(1), &u, 0.25).unwrap();
        assert!(traj.times.contains(&0.3));
        assert_abs_diff_eq!(traj.final_state()[0], 0.3 - 0.7, epsilon = 1e-14);
    }

    #[test]
    fn non_finite_drift_reports_context() {
        let p = ControlProblem::builder("blowup", SpectralOperator::diagonal(&[0.0]).unwrap(), SmoothingOperator::identity(1), 1.0, ControlSet::interval(-1.0, 1.0, 3).unwrap())
            .drift(|t, _, _| StateVec::from_vec(vec![if t > 0.5 { f64::NAN } else { 0.0 }]))
            .build()
            .unwrap();
        let u = PiecewiseControl::constant(0.0, 1.0, vec![0.5]).unwrap();
        match integrate_mild(&p, 0.0, &StateVec::zeros(1), &u, 0.1) {
            Err(Error::NonFiniteDrift { t, control, .. }) => {
                assert!(t > 0.5);
                assert_eq!(control, vec![0.5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chain_rule_for_time_weighted_alpha() {
        let p = vintage(&VintageSpec::nondegenerate()).unwrap();
        let phi = Test1Fn::linear(StateVec::unit(9, 0), SmoothScalar::affine(1.0, -1.0), SmoothScalar::constant(0.0), p.generator()).unwrap();
        let x = StateVec::new(vec![-1.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.0, 0.1, 0.0]).unwrap();
        let u = PiecewiseControl::constant(0.0, 1.0, vec![0.0]).unwrap();
        let traj = integrate_mild(&p, 0.0, &x, &u, 1e-3).unwrap();
        assert!(chain_rule_residual(&p, &phi, &traj).unwrap() <= 1e-8);
        let plain = Test1Fn::linear(StateVec::unit(9, 0), SmoothScalar::constant(1.0), SmoothScalar::constant(0.0), p.generator()).unwrap();
        assert!(chain_rule_residual(&p, &plain, &traj).unwrap() <= 1e-10);
    }

    #[test]
    fn test2_defects_have_expected_sign() {
        let g = Test2Fn::squared_norm(1.0);
        let rot = free_rotation();
        let x = StateVec::new(vec![0.1, 0.5, -0.3, 0.2, 0.0, 0.1, 0.0, 0.0, 0.4]).unwrap();
        let u = PiecewiseControl::constant(0.0, 0.1, vec![0.0]).unwrap();
        let traj = integrate_mild(&rot, 0.0, &x, &u, 1e-3).unwrap();
        assert!(test2_residual(&rot, &g, &traj) <= 1e-12);

        let decay = ControlProblem::builder("decay", SpectralOperator::diagonal(&[-1.0]).unwrap(), SmoothingOperator::identity(1), 1.0, ControlSet::interval(-1.0, 1.0, 3).unwrap())
            .build()
            .unwrap();
        let traj = integrate_mild(&decay, 0.0, &StateVec::new(vec![1.0]).unwrap(), &u, 1e-3).unwrap();
        assert!(test2_residual(&decay, &g, &traj) < 0.0);
    }

    #[test]
    fn resample_interpolates_nodes() {
        let p = scalar_toy(1.0, 5).unwrap();
        let u = PiecewiseControl::constant(0.0, 1.0, vec![1.0]).unwrap();
        let traj = integrate_mild(&p, 0.0, &StateVec::zeros(1), &u, 0.1).unwrap();
        let (t, x) = traj.resample(5);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_abs_diff_eq!(x[1][0], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn midpoint_scheme_is_second_order() {
        let p = vintage(&VintageSpec::nondegenerate()).unwrap();
        let x = StateVec::new(vec![-1.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.0, 0.1, 0.0]).unwrap();
        let decay = ControlProblem::builder("decay", SpectralOperator::diagonal(&[-1.0, -2.0]).unwrap(), SmoothingOperator::identity(2), 1.0, ControlSet::interval(-1.0, 1.0, 3).unwrap())
            .drift(|_, x, u| StateVec::new(vec![(x[1]).sin() + u[0], x[0] * x[0]]).unwrap())
            .build()
            .unwrap();
        let u = PiecewiseControl::uniform(0.0, 1.0, vec![vec![0.7], vec![-0.4]]).unwrap();
        let dts = [0.02, 0.01, 0.005, 0.0025];
        let rep = convergence_study(&p, 0.0, &x, &u, &dts).unwrap();
        assert!(rep.ratios.iter().all(|r| (3.5..=4.5).contains(r)), "{:?}", rep.ratios);
        let rep = convergence_study(&decay, 0.0, &StateVec::new(vec![1.0, 0.5]).unwrap(), &u, &dts).unwrap();
        assert!(rep.ratios.iter().all(|r| (3.5..=4.5).contains(r)), "{:?}", rep.ratios);
        assert!(convergence_study(&p, 0.0, &x, &u, &[0.01, 0.02, 0.005]).is_err());
    }
}
