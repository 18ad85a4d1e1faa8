//! Numerical integration of the covector flow dM/dt = [M_p(t), M(t)] in
//! Lax–Poincaré form, together with ġ = M_p(t)·g, checking conservation of
//! the k-component and agreement with the closed-form geodesic.

use num_complex::Complex64;

use crate::error::Result;
use crate::geodesic::{geodesic_point, Covector, Geodesic, ProblemKind};
use crate::liealg::{metric_inner, so3_decomposition, su3_decomposition, AlgebraElement, CartanDecomposition};
use crate::matcore::{frob_dist, CMat};

#[derive(Debug, Clone)]
pub struct CovectorFlowResult {
    pub grid: Vec<f64>,
    pub m_samples: Vec<CMat>,
    pub g_samples: Vec<CMat>,
    /// max over the grid of ‖M_k(t) − M_k(0)‖_F.
    pub mk_drift: f64,
    /// max over the grid of ‖g_flow(t) − g_closed_form(t)‖_F.
    pub reconstruction_error: f64,
    pub accuracy_warning: bool,
}

fn decomposition_for(problem: ProblemKind) -> CartanDecomposition {
    match problem {
        ProblemKind::RealResonant => so3_decomposition(),
        ProblemKind::GeneralComplex => su3_decomposition(),
    }
}

/// Metric-orthogonal projection onto p (the shipped p-basis is orthonormal
/// and p ⟂ k for the trace form).
pub fn project_p(m: &CMat, d: &CartanDecomposition) -> CMat {
    let mut out = CMat::zeros(3, 3);
    for b in &d.p_basis {
        let coeff = -0.5 * (m * &b.mat).trace().re;
        out += &b.mat * Complex64::from(coeff);
    }
    out
}

/// Fixed-step RK4 integration of the covector flow on a uniform grid.
pub fn lax_poincare_flow(a: &Covector, grid: &[f64]) -> Result<CovectorFlowResult> {
    let d = decomposition_for(a.problem);
    let m0 = a.a_total();
    let mk0 = &m0 - project_p(&m0, &d);

    // state y = (M, g); dM = [P_p M, M], dg = (P_p M) g
    let deriv = |m: &CMat, g: &CMat| -> (CMat, CMat) {
        let mp = project_p(m, &d);
        (&mp * m - m * &mp, mp * g)
    };

    let mut m = m0.clone();
    let mut g = CMat::identity(3, 3);
    let mut m_samples = vec![m.clone()];
    let mut g_samples = vec![g.clone()];
    let mut mk_drift: f64 = 0.0;
    let mut reconstruction_error: f64 = 0.0;
    let closed = Geodesic::from_identity(*a, *grid.last().unwrap());

    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let hc = Complex64::from(h);
        let half = Complex64::from(0.5);
        let (k1m, k1g) = deriv(&m, &g);
        let (k2m, k2g) = deriv(&(&m + &k1m * hc * half), &(&g + &k1g * hc * half));
        let (k3m, k3g) = deriv(&(&m + &k2m * hc * half), &(&g + &k2g * hc * half));
        let (k4m, k4g) = deriv(&(&m + &k3m * hc), &(&g + &k3g * hc));
        let sixth = Complex64::from(h / 6.0);
        let two = Complex64::from(2.0);
        m += (&k1m + &k2m * two + &k3m * two + &k4m) * sixth;
        g += (&k1g + &k2g * two + &k3g * two + &k4g) * sixth;

        let mk = &m - project_p(&m, &d);
        mk_drift = mk_drift.max(frob_dist(&mk, &mk0));
        reconstruction_error =
            reconstruction_error.max(frob_dist(&g, &geodesic_point(&closed, w[1])?));
        m_samples.push(m.clone());
        g_samples.push(g.clone());
    }

    Ok(CovectorFlowResult {
        grid: grid.to_vec(),
        m_samples,
        g_samples,
        mk_drift,
        reconstruction_error,
        accuracy_warning: mk_drift > 1e-6,
    })
}

/// Uniform grid on [0, horizon] with the given step (last point clamped to
/// the horizon).
pub fn uniform_grid(horizon: f64, step: f64) -> Vec<f64> {
    let n = (horizon / step).ceil() as usize;
    let mut g: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(horizon)).collect();
    if let Some(last) = g.last_mut() {
        *last = horizon;
    }
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    g
}

/// ⟨M_p, M_p⟩ for a sampled flow matrix.
pub fn p_norm_sq(m: &CMat, problem: ProblemKind) -> f64 {
    let d = decomposition_for(problem);
    let mp = project_p(m, &d);
    let e = AlgebraElement::new(problem.algebra(), mp).expect("p projection");
    metric_inner(&e, &e)
}
