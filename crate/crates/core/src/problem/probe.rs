//! Empirical probes of the structural constants of a [`ControlProblem`].

use crate::dynamics::{integrate_mild, PiecewiseControl};
use crate::error::{Error, Result};
use crate::problem::ControlProblem;
use crate::sampling;
use crate::statespace::StateVec;

#[derive(Clone, Debug)]
pub struct LipschitzReport {
    pub samples: usize,
    /// `sup |b(t,x,u) - b(t,y,u)| / |x - y|_{-1}`
    pub drift_ratio: f64,
    /// `sup |L(t,x,u) - L(t,y,u)| / |x - y|`
    pub cost_ratio: f64,
    pub k: f64,
    pub worst: (StateVec, StateVec),
    pub passed: bool,
}

/// Samples random pairs in the ball of radius `radius`, plus pairs separated
/// along each basis direction, at random times and grid controls.
pub fn probe_lipschitz(problem: &ControlProblem, samples: usize, radius: f64, seed: u64) -> Result<LipschitzReport> {
    if samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    let n = problem.dim();
    let grid = problem.controls().grid();
    let b = problem.smoothing();
    let mut rng = sampling::rng(seed);
    let mut drift_ratio = 0.0_f64;
    let mut cost_ratio = 0.0_f64;
    let mut worst = (StateVec::zeros(n), StateVec::zeros(n));
    let mut pairs: Vec<(StateVec, StateVec)> = Vec::with_capacity(samples + n);
    for _ in 0..samples {
        let x = sampling::in_ball(&mut rng, n, radius);
        let y = sampling::in_ball(&mut rng, n, radius);
        pairs.push((x, y));
    }
    for k in 0..n {
        let x = sampling::in_ball(&mut rng, n, 0.5 * radius);
        let y = x.add_scaled(0.25 * radius, &StateVec::unit(n, k));
        pairs.push((x, y));
    }
    for (x, y) in pairs {
        let d = x.sub(&y);
        let weak = b.norm_gamma(&d, 1.0);
        if weak < 1e-14 {
            continue;
        }
        let t = sampling::uniform(&mut rng, 0.0, problem.horizon());
        let u = &grid[rng_index(&mut rng, grid.len())];
        let db = problem.drift(t, &x, u).sub(&problem.drift(t, &y, u)).norm();
        let dl = (problem.running_cost(t, &x, u) - problem.running_cost(t, &y, u)).abs();
        let r = db / weak;
        if r > drift_ratio {
            drift_ratio = r;
            worst = (x.clone(), y.clone());
        }
        cost_ratio = cost_ratio.max(dl / d.norm());
    }
    let k = problem.lipschitz_k();
    Ok(LipschitzReport {
        samples,
        drift_ratio,
        cost_ratio,
        k,
        worst,
        passed: drift_ratio <= k * (1.0 + 1e-9),
    })
}

fn rng_index(rng: &mut sampling::SeededRng, len: usize) -> usize {
    use rand::Rng;
    rng.random_range(0..len)
}

#[derive(Clone, Debug)]
pub struct ModulusReport {
    pub deltas: Vec<f64>,
    /// `table[c][j]`: modulus of control `c` at `deltas[j]`.
    pub table: Vec<Vec<f64>>,
    /// Envelope over controls.
    pub modulus: Vec<f64>,
    /// `max_j (max_c - min_c) / max_c` over the table columns.
    pub spread: f64,
}

/// Empirical time modulus `delta -> max |x(s2) - x(s1)|` over `|s2 - s1| <= delta`,
/// computed on a uniform resampling of each trajectory.
pub fn probe_uniform_modulus(
    problem: &ControlProblem,
    t: f64,
    x: &StateVec,
    controls: &[PiecewiseControl],
    deltas: &[f64],
    dt: f64,
) -> Result<ModulusReport> {
    const SAMPLES: usize = 512;
    let span = problem.horizon() - t;
    let h = span / (SAMPLES - 1) as f64;
    let mut table = Vec::with_capacity(controls.len());
    for u in controls {
        let traj = integrate_mild(problem, t, x, u, dt)?;
        let (_, states) = traj.resample(SAMPLES);
        let row = deltas
            .iter()
            .map(|&delta| {
                let lag = ((delta / h) + 1e-9).floor() as usize;
                let mut m = 0.0_f64;
                for l in 1..=lag.min(SAMPLES - 1) {
                    for i in 0..SAMPLES - l {
                        m = m.max(states[i + l].sub(&states[i]).norm());
                    }
                }
                m
            })
            .collect();
        table.push(row);
    }
    let modulus: Vec<f64> = (0..deltas.len())
        .map(|j| table.iter().map(|r: &Vec<f64>| r[j]).fold(0.0, f64::max))
        .collect();
    let spread = (0..deltas.len())
        .map(|j| {
            let lo = table.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            if modulus[j] > 0.0 {
                (modulus[j] - lo) / modulus[j]
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    Ok(ModulusReport {
        deltas: deltas.to_vec(),
        table,
        modulus,
        spread,
    })
}
