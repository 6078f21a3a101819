//! Inf- and sup-convolutions of the vintage value function, the envelope
//! differential, and the perturbed HJB residual it produces.
//!
//! cargo run --release --example convolution_envelope

use evoctrl::convolution::{
    inf_convolve, perturbed_hjb_residual, sup_convolve, ConvolutionParams, EnvelopeStatus, Regularized, SearchOptions,
    Sense, Side,
};
use evoctrl::hamiltonian::hamiltonian;
use evoctrl::problem::{vintage, VintageSpec};
use evoctrl::value::{vintage_value, ScalarField, VintageValue};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;
    let w = VintageValue::new(spec.clone());
    let opts = SearchOptions::default();
    let params = ConvolutionParams::for_problem(&problem, 1e-8, 1e-2, 1e-3)?;
    let x = StateVec::new(vec![-0.6, 0.3, -0.1, 0.2, 0.05, -0.2, 0.1, 0.0, 0.15])?;
    let t = 0.4;

    let inf = inf_convolve(&problem, &w, &params, &opts, t, &x)?;
    let sup = sup_convolve(&problem, &w, &params, &opts, t, &x)?;
    println!("V = {:.6}  inf = {:.6}  sup = {:.6}", vintage_value(&spec, t, &x), inf.value, sup.value);
    println!("minimizer s* = {:.6}, |y* - x| = {:.3e}", inf.minimizer_s, inf.minimizer_y.sub(&x).norm());
    println!("envelope a = {:.6} (V_t = {:.6}), p_0 = {:.6} (-G = {:.6})", inf.a, w.branch_derivatives(t, &x).0, inf.p[0], -spec.g(t));
    println!("{} objective evaluations", inf.evaluations);

    let h = hamiltonian(&problem, t, &x, &inf.p);
    println!("H = {:.6} at u = {:.6} (interior: {})", h.value, h.argmin_u[0], h.interior);

    let fine = ConvolutionParams::for_problem(&problem, 1e-10, 1e-4, 1e-4)?;
    let r = perturbed_hjb_residual(&problem, &w, &fine, &opts, t, &x, Side::Super)?;
    println!("perturbed residual {:+.3e} (expected eps G(s*) = {:.3e})", r.residual, 1e-4 * spec.g(r.envelope.minimizer_s));

    let mut kink = x.clone();
    kink[0] = 0.0;
    let at_kink = inf_convolve(&problem, &w, &params, &opts, t, &kink)?;
    if let EnvelopeStatus::Ambiguous { other_y, .. } = &at_kink.status {
        println!("at the kink: two minimizers, <alpha, y*> = {:+.4} and {:+.4}", at_kink.minimizer_y[0], other_y[0]);
    }

    let reg = Regularized::new(&problem, w, params, Sense::Inf);
    println!("regularized field at (t, x): {:.6}", reg.eval(t, &x));
    println!("envelope vs finite differences: {:.2e}", reg.gradient_mismatch(t, &x, 1e-5)?);
    Ok(())
}
