use evoctrl::convolution::{inf_convolve, sup_convolve, ConvolutionParams, SearchOptions};
use evoctrl::dynamics::PiecewiseControl;
use evoctrl::hamiltonian::hamiltonian;
use evoctrl::problem::{vintage, VintageSpec};
use evoctrl::statespace::Block;
use evoctrl::value::{vintage_value, FnField, VintageValue};
use evoctrl::{SmoothingOperator, SpectralOperator, StateVec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// A 2x2 block whose symmetric part is negative semidefinite.
fn dissipative_pair() -> impl Strategy<Value = Block> {
    (-3.0..0.0f64, -3.0..0.0f64, -20.0..20.0f64, -1.0..1.0f64).prop_map(|(a, d, b, frac)| {
        let room = 2.0 * (a * d).sqrt();
        Block::Pair([[a, b], [-b + frac * room, d]])
    })
}

fn block() -> impl Strategy<Value = Block> {
    prop_oneof![(-5.0..0.0f64).prop_map(Block::Scalar), dissipative_pair()]
}

fn operator() -> impl Strategy<Value = SpectralOperator> {
    prop::collection::vec(block(), 1..5).prop_map(|b| SpectralOperator::new(b).unwrap())
}

fn state(n: usize) -> impl Strategy<Value = StateVec> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(|v| StateVec::new(v).unwrap())
}

fn dense(a: &SpectralOperator) -> DMatrix<f64> {
    let n = a.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in a.blocks() {
        match b {
            Block::Scalar(v) => m[(off, off)] = *v,
            Block::Pair(p) => {
                for i in 0..2 {
                    for j in 0..2 {
                        m[(off + i, off + j)] = p[i][j];
                    }
                }
            }
        }
        off += b.size();
    }
    m
}

fn with_state() -> impl Strategy<Value = (SpectralOperator, StateVec, StateVec)> {
    operator().prop_flat_map(|a| {
        let n = a.dim();
        (Just(a), state(n), state(n))
    })
}

fn to_dense(x: &StateVec) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn semigroup_contracts((a, x, _) in with_state(), s in 0.0..3.0f64) {
        prop_assert!(a.semigroup(s, &x).norm() <= x.norm() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn semigroup_law((a, x, _) in with_state(), s in 0.0..1.5f64, r in 0.0..1.5f64) {
        let lhs = a.semigroup(s + r, &x);
        let rhs = a.semigroup(s, &a.semigroup(r, &x));
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn matches_dense_matrices((a, x, p) in with_state(), s in 0.0..1.0f64) {
        let m = dense(&a);
        let (xd, pd) = (to_dense(&x), to_dense(&p));
        let ax = a.apply(&x);
        prop_assert!((to_dense(&ax) - &m * &xd).norm() <= 1e-12 * (1.0 + m.norm()));
        let pair = a.pair_adjoint(&p, &x).unwrap();
        prop_assert!((pair - (m.transpose() * &pd).dot(&xd)).abs() <= 1e-10 * (1.0 + m.norm()));
        let e = (&m * s).exp();
        let ex = a.semigroup(s, &x);
        prop_assert!((to_dense(&ex) - e * xd).norm() <= 1e-9 * (1.0 + x.norm()));
    }

    #[test]
    fn weak_norms_are_ordered(x in state(9)) {
        let b = SmoothingOperator::fourier(4);
        let n0 = x.norm();
        let n1 = b.norm_gamma(&x, 1.0);
        let n2 = b.norm_gamma(&x, 2.0);
        prop_assert!(n2 <= n1 * (1.0 + 1e-12) && n1 <= n0 * (1.0 + 1e-12));
    }

    #[test]
    fn hamiltonian_is_concave_in_p(p1 in state(9), p2 in state(9), x in state(9), t in 0.0..1.0f64) {
        let prob = vintage(&VintageSpec::nondegenerate()).unwrap();
        let pm = p1.add(&p2).scaled(0.5);
        let h = |p: &StateVec| hamiltonian(&prob, t, &x, p).value;
        prop_assert!(h(&pm) >= 0.5 * (h(&p1) + h(&p2)) - 1e-9);
    }

    #[test]
    fn value_is_concave_in_alpha(a in -2.0..2.0f64, b in -2.0..2.0f64, t in 0.0..1.0f64) {
        let spec = VintageSpec::nondegenerate();
        let at = |v: f64| {
            let mut x = StateVec::zeros(9);
            x[0] = v;
            vintage_value(&spec, t, &x)
        };
        prop_assert!(at(0.5 * (a + b)) >= 0.5 * (at(a) + at(b)) - 1e-12);
    }

    #[test]
    fn restrict_and_concat_roundtrip(values in prop::collection::vec(-1.0..1.0f64, 2..8), cut in 0.05..0.95f64) {
        let u = PiecewiseControl::uniform(0.0, 1.0, values.iter().map(|v| vec![*v]).collect()).unwrap();
        let joined = u.restrict(0.0, cut).unwrap().concat(&u.restrict(cut, 1.0).unwrap()).unwrap();
        for k in 0..50 {
            let s = k as f64 / 50.0;
            prop_assert_eq!(joined.value_at(s), u.value_at(s));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn convolutions_bracket_the_field(x in state(9), t in 0.1..0.9f64) {
        let spec = VintageSpec::nondegenerate();
        let prob = vintage(&spec).unwrap();
        let w = VintageValue::new(spec);
        let params = ConvolutionParams::for_problem(&prob, 1e-8, 1e-2, 1e-3).unwrap();
        let opts = SearchOptions::default();
        let growth = params.lambda * (2.0 * params.m * params.k_lip * (1.0 - t)).exp() * x.norm().powf(params.m);
        let v = vintage_value(&w.spec, t, &x);
        let inf = inf_convolve(&prob, &w, &params, &opts, t, &x).unwrap();
        let sup = sup_convolve(&prob, &w, &params, &opts, t, &x).unwrap();
        prop_assert!(inf.value <= v + growth + 1e-12);
        prop_assert!(sup.value >= v - growth - 1e-12);
        prop_assert!(inf.value <= sup.value + 1e-12);
    }

    #[test]
    fn affine_fields_shift_by_half_epsilon(c in prop::collection::vec(-1.0..1.0f64, 9), x in state(9)) {
        let prob = vintage(&VintageSpec::nondegenerate()).unwrap();
        let b = prob.smoothing().clone();
        let cv = StateVec::new(c).unwrap();
        let c2 = cv.clone();
        let w = FnField::new(move |_, y| c2.dot(y));
        let mut params = ConvolutionParams::for_problem(&prob, 1e-8, 1e-2, 1e-3).unwrap();
        params.lambda = 1e-300;
        // inf_y <c, y> + |x - y|_{-1}^2 / (2 eps) = <c, x> - eps/2 sum c_k^2 / b_k
        let shift: f64 = cv.iter().zip(b.diag()).map(|(ck, bk)| ck * ck / bk).sum::<f64>() * params.epsilon / 2.0;
        let env = inf_convolve(&prob, &w, &params, &SearchOptions::default(), 0.5, &x).unwrap();
        prop_assert!((env.value - (cv.dot(&x) - shift)).abs() <= 1e-8);
        prop_assert!(env.p.sub(&cv).norm() <= 1e-6);
    }
}
