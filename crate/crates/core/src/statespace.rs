//! Spectral truncation of the state space.
//!
//! States are coefficient vectors in a fixed orthonormal basis. The generator
//! `A` acts block-diagonally with 1x1 and 2x2 real blocks, so its semigroup is
//! exact per block. The smoothing operator `B` is diagonal in the same basis and
//! induces the weak norms `|x|_{-g} = |B^{g/2} x|`.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

/// Tolerance used for structural checks (dissipativity, compatibility of `B`).
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Coefficients of a state with respect to the truncated orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec(Vec<f64>);

impl StateVec {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::param("coeffs", format!("non-finite entry {bad}")));
        }
        Ok(StateVec(coeffs))
    }

    /// Builds a vector without the finiteness check. Callers guarantee finiteness.
    pub(crate) fn from_vec(coeffs: Vec<f64>) -> Self {
        StateVec(coeffs)
    }

    pub fn zeros(n: usize) -> Self {
        StateVec(vec![0.0; n])
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        StateVec(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &StateVec) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, s: f64) -> StateVec {
        StateVec(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &StateVec) -> StateVec {
        StateVec(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn add(&self, other: &StateVec) -> StateVec {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &StateVec) -> StateVec {
        self.add_scaled(-1.0, other)
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for StateVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for StateVec {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// One diagonal block of the generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Block {
    Scalar(f64),
    /// Row-major 2x2 matrix.
    Pair([[f64; 2]; 2]),
}

impl Block {
    pub fn size(&self) -> usize {
        match self {
            Block::Scalar(_) => 1,
            Block::Pair(_) => 2,
        }
    }

    fn transpose(&self) -> Block {
        match *self {
            Block::Scalar(a) => Block::Scalar(a),
            Block::Pair(m) => Block::Pair([[m[0][0], m[1][0]], [m[0][1], m[1][1]]]),
        }
    }

    /// Largest eigenvalue of the symmetric part.
    fn numerical_abscissa(&self) -> f64 {
        match *self {
            Block::Scalar(a) => a,
            Block::Pair(m) => {
                let mean = 0.5 * (m[0][0] + m[1][1]);
                let half_diff = 0.5 * (m[0][0] - m[1][1]);
                let off = 0.5 * (m[0][1] + m[1][0]);
                mean + half_diff.hypot(off)
            }
        }
    }

    /// Spectral norm of the block.
    pub fn op_norm(&self) -> f64 {
        match *self {
            Block::Scalar(a) => a.abs(),
            Block::Pair(m) => {
                // sqrt of the largest eigenvalue of M^T M
                let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
                let p = a * a + c * c;
                let q = a * b + c * d;
                let r = b * b + d * d;
                let mean = 0.5 * (p + r);
                (mean + (0.5 * (p - r)).hypot(q)).max(0.0).sqrt()
            }
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Block::Scalar(a) => out[0] = a * x[0],
            Block::Pair(m) => {
                out[0] = m[0][0] * x[0] + m[0][1] * x[1];
                out[1] = m[1][0] * x[0] + m[1][1] * x[1];
            }
        }
    }

    /// `exp(s * block)` in closed form.
    fn exp(&self, s: f64) -> Block {
        match *self {
            Block::Scalar(a) => Block::Scalar((a * s).exp()),
            Block::Pair(m) => {
                // M = tau I + N with N traceless, N^2 = disc I
                let tau = 0.5 * (m[0][0] + m[1][1]);
                let n00 = 0.5 * (m[0][0] - m[1][1]);
                let disc = n00 * n00 + m[0][1] * m[1][0];
                let z = disc * s * s;
                let (c, sn) = if z.abs() < 1e-4 {
                    (
                        1.0 + z / 2.0 + z * z / 24.0 + z * z * z / 720.0,
                        s * (1.0 + z / 6.0 + z * z / 120.0 + z * z * z / 5040.0),
                    )
                } else if disc > 0.0 {
                    let r = disc.sqrt();
                    ((r * s).cosh(), (r * s).sinh() / r)
                } else {
                    let r = (-disc).sqrt();
                    ((r * s).cos(), (r * s).sin() / r)
                };
                let e = (tau * s).exp();
                Block::Pair([
                    [e * (c + sn * n00), e * sn * m[0][1]],
                    [e * sn * m[1][0], e * (c - sn * n00)],
                ])
            }
        }
    }
}

/// Block-diagonal generator `A` of a contraction semigroup.
#[derive(Clone, Debug)]
pub struct SpectralOperator {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    dim: usize,
    dual_budget: f64,
}

impl SpectralOperator {
    /// Fails if a block is not dissipative (`<Ax, x> > 0` for some `x`).
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::param("blocks", "at least one block is required"));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for (i, b) in blocks.iter().enumerate() {
            let finite = match b {
                Block::Scalar(a) => a.is_finite(),
                Block::Pair(m) => m.iter().flatten().all(|v| v.is_finite()),
            };
            if !finite {
                return Err(Error::param("blocks", format!("block {i} has non-finite entries")));
            }
            let abscissa = b.numerical_abscissa();
            if abscissa > STRUCTURE_TOL {
                return Err(Error::param(
                    "blocks",
                    format!("block {i} is not dissipative (numerical abscissa {abscissa:e})"),
                ));
            }
            offsets.push(dim);
            dim += b.size();
        }
        Ok(SpectralOperator {
            blocks,
            offsets,
            dim,
            dual_budget: f64::INFINITY,
        })
    }

    /// Builds an operator without the dissipativity check, for probing
    /// structural conditions on candidate generators.
    pub fn unchecked(blocks: Vec<Block>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for b in &blocks {
            offsets.push(dim);
            dim += b.size();
        }
        SpectralOperator {
            blocks,
            offsets,
            dim,
            dual_budget: f64::INFINITY,
        }
    }

    pub fn is_dissipative(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.numerical_abscissa() <= STRUCTURE_TOL)
    }

    /// Generator of the rotation semigroup on periodic `L^2(0,1)` in the real
    /// Fourier basis `{1, sqrt2 cos(2 pi k s), sqrt2 sin(2 pi k s)}`, `k = 1..=modes`.
    ///
    /// `eigenvalue` is placed on the constant mode, so the constant function is an
    /// eigenvector of `A*` with that eigenvalue (zero for the pure rotation).
    pub fn rotation(modes: usize, eigenvalue: f64) -> Result<Self> {
        let mut blocks = vec![Block::Scalar(eigenvalue)];
        for k in 1..=modes {
            let w = 2.0 * PI * k as f64;
            blocks.push(Block::Pair([[0.0, w], [-w, 0.0]]));
        }
        SpectralOperator::new(blocks)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        SpectralOperator::new(entries.iter().map(|&a| Block::Scalar(a)).collect())
    }

    /// Caps `|A* p|` for vectors admitted to `pair_adjoint`.
    pub fn with_dual_budget(mut self, budget: f64) -> Self {
        self.dual_budget = budget;
        self
    }

    pub fn dual_budget(&self) -> f64 {
        self.dual_budget
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Per-block operator norms.
    pub fn block_norms(&self) -> Vec<f64> {
        self.blocks.iter().map(Block::op_norm).collect()
    }

    fn map_blocks(&self, x: &StateVec, f: impl Fn(&Block) -> Block) -> StateVec {
        let mut out = vec![0.0; self.dim];
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            let n = b.size();
            f(b).apply(&x.as_slice()[off..off + n], &mut out[off..off + n]);
        }
        StateVec::from_vec(out)
    }

    /// `A x`
    pub fn apply(&self, x: &StateVec) -> StateVec {
        self.map_blocks(x, |b| *b)
    }

    /// `A* p`
    pub fn apply_adjoint(&self, p: &StateVec) -> StateVec {
        self.map_blocks(p, Block::transpose)
    }

    /// `e^{sA} x`, exact per block.
    pub fn semigroup(&self, s: f64, x: &StateVec) -> StateVec {
        debug_assert!(s >= 0.0);
        if s == 0.0 {
            return x.clone();
        }
        self.map_blocks(x, |b| b.exp(s))
    }

    /// The bounded operator `e^{sA}` in the same block structure, for reuse
    /// across many applications with a fixed step.
    pub fn exponential(&self, s: f64) -> SpectralOperator {
        SpectralOperator {
            blocks: self.blocks.iter().map(|b| b.exp(s)).collect(),
            offsets: self.offsets.clone(),
            dim: self.dim,
            dual_budget: f64::INFINITY,
        }
    }

    /// Checks that `p` lies within the configured `D(A*)` budget.
    pub fn check_dual(&self, p: &StateVec) -> Result<StateVec> {
        p.check_len(self.dim)?;
        let ap = self.apply_adjoint(p);
        let norm = ap.norm();
        if !(norm <= self.dual_budget) {
            return Err(Error::DualBudget {
                norm,
                budget: self.dual_budget,
            });
        }
        Ok(ap)
    }

    /// `<A* p, x>`, blockwise.
    pub fn pair_adjoint(&self, p: &StateVec, x: &StateVec) -> Result<f64> {
        x.check_len(self.dim)?;
        Ok(self.check_dual(p)?.dot(x))
    }
}

/// Config form of a [`SpectralOperator`]: each block is `[[a]]` or a row-major
/// `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub blocks: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_budget: Option<f64>,
}

impl SpectralOperator {
    pub fn to_spec(&self) -> OperatorSpec {
        OperatorSpec {
            blocks: self
                .blocks
                .iter()
                .map(|b| match b {
                    Block::Scalar(a) => vec![vec![*a]],
                    Block::Pair(m) => m.iter().map(|r| r.to_vec()).collect(),
                })
                .collect(),
            dual_budget: self.dual_budget.is_finite().then_some(self.dual_budget),
        }
    }

    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        let blocks = spec
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| match b.as_slice() {
                [r] if r.len() == 1 => Ok(Block::Scalar(r[0])),
                [r0, r1] if r0.len() == 2 && r1.len() == 2 => Ok(Block::Pair([[r0[0], r0[1]], [r1[0], r1[1]]])),
                _ => Err(Error::param("blocks", format!("block {i} must be 1x1 or 2x2"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let op = SpectralOperator::new(blocks)?;
        Ok(match spec.dual_budget {
            Some(b) if b > 0.0 => op.with_dual_budget(b),
            Some(b) => return Err(Error::param("dual_budget", format!("must be positive, got {b}"))),
            None => op,
        })
    }
}

/// Config form of a [`SmoothingOperator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSpec {
    pub diag: Vec<f64>,
    #[serde(default)]
    pub c0: f64,
}

impl SmoothingOperator {
    pub fn to_spec(&self) -> SmoothingSpec {
        SmoothingSpec {
            diag: self.diag.clone(),
            c0: self.c0,
        }
    }

    pub fn from_spec(spec: &SmoothingSpec) -> Result<Self> {
        SmoothingOperator::new(spec.diag.clone(), spec.c0)
    }
}

/// Diagonal, positive, self-adjoint smoothing operator `B` with its constant `c0 <= 0`.
#[derive(Clone, Debug)]
pub struct SmoothingOperator {
    diag: Vec<f64>,
    c0: f64,
}

impl SmoothingOperator {
    pub fn new(diag: Vec<f64>, c0: f64) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::param("diag", "empty"));
        }
        if let Some(b) = diag.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::param("diag", format!("entries must be positive, got {b}")));
        }
        if !(c0 <= 0.0) {
            return Err(Error::param("c0", format!("must be nonpositive, got {c0}")));
        }
        Ok(SmoothingOperator { diag, c0 })
    }

    pub fn identity(n: usize) -> Self {
        SmoothingOperator {
            diag: vec![1.0; n],
            c0: 0.0,
        }
    }

    /// `(I - Laplacian)^{-1/2}` in the real Fourier basis used by [`SpectralOperator::rotation`].
    pub fn fourier(modes: usize) -> Self {
        let mut diag = vec![1.0];
        for k in 1..=modes {
            let b = (1.0 + 4.0 * PI * PI * (k * k) as f64).powf(-0.5);
            diag.push(b);
            diag.push(b);
        }
        SmoothingOperator { diag, c0: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn op_norm(&self) -> f64 {
        self.diag.iter().cloned().fold(0.0, f64::max)
    }

    /// `B^g x`
    pub fn apply_pow(&self, x: &StateVec, g: f64) -> StateVec {
        StateVec::from_vec(
            x.iter()
                .zip(&self.diag)
                .map(|(xi, b)| if g == 1.0 { b * xi } else { b.powf(g) * xi })
                .collect(),
        )
    }

    /// `B x`
    pub fn apply(&self, x: &StateVec) -> StateVec {
        self.apply_pow(x, 1.0)
    }

    /// `|x|_{-g} = |B^{g/2} x|`
    pub fn norm_gamma(&self, x: &StateVec, g: f64) -> f64 {
        if g == 0.0 {
            return x.norm();
        }
        x.iter()
            .zip(&self.diag)
            .map(|(xi, b)| b.powf(g) * xi * xi)
            .sum::<f64>()
            .sqrt()
    }
}

/// Outcome of sampling `<(A*B + c0 B) x, x> <= 0` on random unit vectors.
#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    pub samples: usize,
    pub max_violation: f64,
    pub worst: StateVec,
    pub tolerance: f64,
    pub passed: bool,
}

/// `<(A*B + c0 B) x, x> = <B x, A x> + c0 <B x, x>`
pub fn compatibility_form(a: &SpectralOperator, b: &SmoothingOperator, x: &StateVec) -> f64 {
    let bx = b.apply(x);
    bx.dot(&a.apply(x)) + b.c0() * bx.dot(x)
}

pub fn check_b_compatibility(
    a: &SpectralOperator,
    b: &SmoothingOperator,
    samples: usize,
    seed: u64,
) -> Result<CompatibilityReport> {
    if samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut rng = sampling::rng(seed);
    let mut worst = StateVec::zeros(a.dim());
    let mut max_violation = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x = sampling::unit_vector(&mut rng, a.dim());
        let form = compatibility_form(a, b, &x);
        if form > max_violation {
            max_violation = form;
            worst = x;
        }
    }
    // the form on the zero vector is zero, so report violations relative to that
    let max_violation = max_violation.max(0.0);
    Ok(CompatibilityReport {
        samples,
        max_violation,
        worst,
        tolerance: STRUCTURE_TOL,
        passed: max_violation <= STRUCTURE_TOL,
    })
}
