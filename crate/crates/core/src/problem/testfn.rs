//! Parametric families of smooth test functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::statespace::{SpectralOperator, StateVec};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth scalar function with its exact derivative.
#[derive(Clone)]
pub struct SmoothScalar {
    f: ScalarFn,
    df: ScalarFn,
}

impl fmt::Debug for SmoothScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothScalar")
    }
}

impl SmoothScalar {
    pub fn constant(c: f64) -> Self {
        SmoothScalar {
            f: Arc::new(move |_| c),
            df: Arc::new(|_| 0.0),
        }
    }

    /// `c0 + c1 * t`
    pub fn affine(c0: f64, c1: f64) -> Self {
        SmoothScalar {
            f: Arc::new(move |t| c0 + c1 * t),
            df: Arc::new(move |_| c1),
        }
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SmoothScalar {
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.df)(t)
    }
}

/// `phi(t, x) = eta(t) <a, x> + psi(t) + 1/2 sum_k w_k (x_k - c_k)^2`.
///
/// The quadratic part is optional; with diagonal weights it covers the
/// proximal-type test functions built from the weak norms.
#[derive(Clone, Debug)]
pub struct Test1Fn {
    eta: SmoothScalar,
    a: StateVec,
    psi: SmoothScalar,
    quad: Option<(Vec<f64>, StateVec)>,
}

impl Test1Fn {
    /// Fails if `a` is outside the generator's `D(A*)` budget.
    pub fn linear(a: StateVec, eta: SmoothScalar, psi: SmoothScalar, generator: &SpectralOperator) -> Result<Self> {
        generator.check_dual(&a)?;
        Ok(Test1Fn { eta, a, psi, quad: None })
    }

    pub fn with_quadratic(mut self, weights: Vec<f64>, center: StateVec) -> Result<Self> {
        if weights.len() != self.a.len() || center.len() != self.a.len() {
            return Err(Error::DimensionMismatch {
                expected: self.a.len(),
                got: weights.len().max(center.len()),
            });
        }
        self.quad = Some((weights, center));
        Ok(self)
    }

    pub fn value(&self, t: f64, x: &StateVec) -> f64 {
        let mut v = self.eta.value(t) * self.a.dot(x) + self.psi.value(t);
        if let Some((w, c)) = &self.quad {
            v += 0.5
                * x.iter()
                    .zip(c.iter())
                    .zip(w)
                    .map(|((xi, ci), wi)| wi * (xi - ci) * (xi - ci))
                    .sum::<f64>();
        }
        v
    }

    pub fn dt(&self, t: f64, x: &StateVec) -> f64 {
        self.eta.deriv(t) * self.a.dot(x) + self.psi.deriv(t)
    }

    pub fn grad(&self, t: f64, x: &StateVec) -> StateVec {
        let mut g = self.a.scaled(self.eta.value(t));
        if let Some((w, c)) = &self.quad {
            for k in 0..g.len() {
                g[k] += w[k] * (x[k] - c[k]);
            }
        }
        g
    }

    /// `<A* D phi(t, x), x>`
    pub fn adjoint_pairing(&self, generator: &SpectralOperator, t: f64, x: &StateVec) -> Result<f64> {
        generator.pair_adjoint(&self.grad(t, x), x)
    }
}

/// Radial profile `g0` with `g0' >= 0` and `g0'(0) = 0`.
#[derive(Clone)]
pub enum RadialProfile {
    /// `r^2`
    Square,
    /// `r^p`, `p > 1`
    Power(f64),
    Custom { g0: ScalarFn, dg0: ScalarFn },
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Square => f.write_str("Square"),
            RadialProfile::Power(p) => write!(f, "Power({p})"),
            RadialProfile::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Square => r * r,
            RadialProfile::Power(p) => r.powf(*p),
            RadialProfile::Custom { g0, .. } => g0(r),
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Square => 2.0 * r,
            RadialProfile::Power(p) => p * r.powf(p - 1.0),
            RadialProfile::Custom { dg0, .. } => dg0(r),
        }
    }
}

/// `g(t, x) = eta(t) g0(|x|)`
#[derive(Clone, Debug)]
pub struct Test2Fn {
    eta: SmoothScalar,
    profile: RadialProfile,
}

impl Test2Fn {
    /// Validates `eta > 0` on a grid of `(0, horizon)`, `g0'(0) = 0`, and
    /// `g0' >= 0` on a grid of `[0, radius]`.
    pub fn new(eta: SmoothScalar, profile: RadialProfile, horizon: f64, radius: f64) -> Result<Self> {
        if let RadialProfile::Power(p) = profile {
            if !(p > 1.0) {
                return Err(Error::param("g0", format!("power profile needs p > 1, got {p}")));
            }
        }
        if profile.deriv(0.0).abs() > 1e-12 {
            return Err(Error::param("g0", "g0'(0) must vanish"));
        }
        for i in 0..=200 {
            let r = radius * i as f64 / 200.0;
            if profile.deriv(r) < -1e-12 {
                return Err(Error::param("g0", format!("g0' is negative at r = {r}")));
            }
        }
        for i in 1..200 {
            let t = horizon * i as f64 / 200.0;
            if !(eta.value(t) > 0.0) {
                return Err(Error::param("eta", format!("must be positive, fails at t = {t}")));
            }
        }
        Ok(Test2Fn { eta, profile })
    }

    /// `|x|^2`
    pub fn squared_norm(horizon: f64) -> Self {
        Test2Fn::new(SmoothScalar::constant(1.0), RadialProfile::Square, horizon, 1.0)
            .expect("constant positive eta with square profile")
    }

    pub fn value(&self, t: f64, x: &StateVec) -> f64 {
        self.eta.value(t) * self.profile.value(x.norm())
    }

    pub fn dt(&self, t: f64, x: &StateVec) -> f64 {
        self.eta.deriv(t) * self.profile.value(x.norm())
    }

    pub fn grad(&self, t: f64, x: &StateVec) -> StateVec {
        let r = x.norm();
        if r == 0.0 {
            return StateVec::zeros(x.len());
        }
        x.scaled(self.eta.value(t) * self.profile.deriv(r) / r)
    }
}
