//! Geodesic synthesis: transversality-constrained covector families, the
//! closed-form geodesic g(t) = e^{−A_k t}·e^{(A_k+A_p)t}·g(0), control
//! extraction, the closed-form states and controls, and the reach-time
//! analysis built on f_a(t).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::driftfree::{normalize_phase, Frame, LevelSystem, PulseSchedule};
use crate::error::{Error, Result};
use crate::liealg::{
    killing, n13_mat, n_mat, so3_decomposition, su3_decomposition, x2, y2, z3, z4, Algebra,
    AlgebraElement,
};
use crate::matcore::{expm, is_special_unitary, CMat};

pub const OPTIMAL_A3: f64 = 0.5773502691896258; // 1/√3

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    RealResonant,
    GeneralComplex,
}

impl ProblemKind {
    pub fn algebra(&self) -> Algebra {
        match self {
            ProblemKind::RealResonant => Algebra::SO3,
            ProblemKind::GeneralComplex => Algebra::SU3,
        }
    }
}

/// Initial PMP covector A = A_p + A_k with named coefficients.
///
/// Real-resonant: A_p = a₁N₁(1) + a₂N₂(1), A_k = a₃N₁,₃(1).
/// General-complex: A_p = N₁(a₁e^{iθ₁}) + N₂(a₂e^{iθ₂}),
/// A_k = a₄Z₃ + a₅Z₄ + N₁,₃(a₃e^{iθ₃}).
#[derive(Debug, Clone, Copy)]
pub struct Covector {
    pub problem: ProblemKind,
    pub a: [f64; 5],
    pub theta: [f64; 3],
}

impl Covector {
    pub fn real_resonant(a1: f64, a2: f64, a3: f64) -> Self {
        Covector {
            problem: ProblemKind::RealResonant,
            a: [a1, a2, a3, 0.0, 0.0],
            theta: [0.0; 3],
        }
    }

    pub fn general_complex(a: [f64; 5], theta: [f64; 3]) -> Self {
        Covector {
            problem: ProblemKind::GeneralComplex,
            a,
            theta: [
                normalize_phase(theta[0]),
                normalize_phase(theta[1]),
                normalize_phase(theta[2]),
            ],
        }
    }

    fn phase(&self, i: usize) -> Complex64 {
        Complex64::new(0.0, self.theta[i]).exp()
    }

    pub fn a_p(&self) -> CMat {
        match self.problem {
            ProblemKind::RealResonant => {
                n_mat(1, self.a[0].into(), 3) + n_mat(2, self.a[1].into(), 3)
            }
            ProblemKind::GeneralComplex => {
                n_mat(1, self.phase(0) * self.a[0], 3) + n_mat(2, self.phase(1) * self.a[1], 3)
            }
        }
    }

    pub fn a_k(&self) -> CMat {
        match self.problem {
            ProblemKind::RealResonant => n13_mat(self.a[2].into()),
            ProblemKind::GeneralComplex => {
                &z3().mat * Complex64::from(self.a[3])
                    + &z4().mat * Complex64::from(self.a[4])
                    + n13_mat(self.phase(2) * self.a[2])
            }
        }
    }

    pub fn a_total(&self) -> CMat {
        self.a_p() + self.a_k()
    }

    /// ⟨A_p, A_p⟩ under the metric; 1 for arclength parametrization.
    pub fn p_norm_sq(&self) -> f64 {
        let ap = self.a_p();
        -0.5 * (&ap * &ap).trace().re
    }

    pub fn element(&self) -> AlgebraElement {
        AlgebraElement::new(self.problem.algebra(), self.a_total()).expect("covector assembly")
    }
}

/// Kil(A, B_m) over a fixed basis {B_m} of T_id S^u. All components vanish
/// iff transversality at the source holds; by Ad-invariance this transports
/// to the target, so no separate target check is needed.
pub fn transversality_residual(a: &Covector) -> Vec<f64> {
    match a.problem {
        ProblemKind::RealResonant => {
            let d = so3_decomposition();
            let basis = d.full_basis();
            let elem = a.element();
            // T_id S^u_R is spanned by the rotation in the (2,3) plane
            let b = AlgebraElement::new(Algebra::SO3, &x2(Algebra::SO3).mat * Complex64::from(-1.0))
                .unwrap();
            vec![killing(&elem, &b, &basis).expect("so(3) killing")]
        }
        ProblemKind::GeneralComplex => {
            let d = su3_decomposition();
            let basis = d.full_basis();
            let elem = a.element();
            // T_id S^u_C = Ad_{g0} k, spanned by Z3, Z4, X2, Y2
            [z3(), z4(), x2(Algebra::SU3), y2()]
                .iter()
                .map(|b| killing(&elem, b, &basis).expect("su(3) killing"))
                .collect()
        }
    }
}

/// Arclength-normalized, transversality-satisfying covectors.
///
/// Real: a₁ = sign_p, a₂ = 0, a₃ = sign_k/√3 (θ's ignored).
/// Complex: a₁ = 1, a₂ = a₄ = a₅ = 0, a₃ = sign_k/√3, θ₁/θ₃ as given.
pub fn covector_family(
    problem: ProblemKind,
    sign_p: i8,
    sign_k: i8,
    theta1: f64,
    theta3: f64,
) -> Covector {
    let sp = if sign_p >= 0 { 1.0 } else { -1.0 };
    let sk = if sign_k >= 0 { 1.0 } else { -1.0 };
    match problem {
        ProblemKind::RealResonant => Covector::real_resonant(sp, 0.0, sk * OPTIMAL_A3),
        ProblemKind::GeneralComplex => Covector::general_complex(
            [1.0, 0.0, sk * OPTIMAL_A3, 0.0, 0.0],
            [theta1, 0.0, theta3],
        ),
    }
}

#[derive(Debug, Clone)]
pub struct Geodesic {
    pub covector: Covector,
    pub g0: CMat,
    pub horizon: f64,
}

impl Geodesic {
    pub fn from_identity(covector: Covector, horizon: f64) -> Self {
        Geodesic {
            covector,
            g0: CMat::identity(3, 3),
            horizon,
        }
    }

    pub fn new(covector: Covector, g0: CMat, horizon: f64) -> Result<Self> {
        if !is_special_unitary(&g0, 1e-10) {
            return Err(Error::invalid("geodesic start must be special unitary"));
        }
        Ok(Geodesic {
            covector,
            g0,
            horizon,
        })
    }
}

/// g(t) = e^{−A_k t}·e^{(A_k+A_p)t}·g(0).
pub fn geodesic_point(g: &Geodesic, t: f64) -> Result<CMat> {
    let tc = Complex64::from(t);
    let ak = g.covector.a_k();
    let a = g.covector.a_total();
    let left = expm(&(&ak * -tc))?;
    let right = expm(&(&a * tc))?;
    Ok(left * right * &g.g0)
}

/// Controls read from ġg⁻¹ = e^{−A_k t}·A_p·e^{A_k t}: the (1,2) and (2,3)
/// entries.
pub fn extract_controls(g: &Geodesic, t: f64) -> Result<(Complex64, Complex64)> {
    let tc = Complex64::from(t);
    let ak = g.covector.a_k();
    let e_m = expm(&(&ak * -tc))?;
    let e_p = expm(&(&ak * tc))?;
    let mp = e_m * g.covector.a_p() * e_p;
    Ok((mp[(0, 1)], mp[(1, 2)]))
}

/// Branch parameters for the closed-form expressions. The real case is the
/// reference branch (sign − on a₁, a₃ = +1/√3); the complex case is the
/// two-phase family with a₃ = +1/√3.
#[derive(Debug, Clone, Copy)]
pub enum BranchParams {
    Real,
    Complex { theta1: f64, theta3: f64 },
}

impl BranchParams {
    pub fn covector(&self) -> Covector {
        match *self {
            BranchParams::Real => covector_family(ProblemKind::RealResonant, -1, 1, 0.0, 0.0),
            BranchParams::Complex { theta1, theta3 } => {
                covector_family(ProblemKind::GeneralComplex, 1, 1, theta1, theta3)
            }
        }
    }
}

/// Closed-form wave function (c₁, c₂, c₃) along the branch geodesic from
/// (1,0,0).
pub fn closed_form_state(branch: &BranchParams, t: f64) -> [Complex64; 3] {
    let x = t / 3f64.sqrt();
    let c1 = Complex64::from(x.cos().powi(3));
    match *branch {
        BranchParams::Real => [
            c1,
            Complex64::from(3f64.sqrt() / 2.0 * (2.0 * x).sin()),
            Complex64::from(-x.sin().powi(3)),
        ],
        BranchParams::Complex { theta1, theta3 } => [
            c1,
            Complex64::from(-3f64.sqrt() / 2.0 * (2.0 * x).sin()) * Complex64::new(0.0, -theta1).exp(),
            Complex64::from(-x.sin().powi(3)) * Complex64::new(0.0, -theta3).exp(),
        ],
    }
}

/// Closed-form driftless controls (u₁, u₂) along the branch geodesic.
pub fn closed_form_controls(branch: &BranchParams, t: f64) -> (Complex64, Complex64) {
    let x = t / 3f64.sqrt();
    match *branch {
        BranchParams::Real => (Complex64::from(-x.cos()), Complex64::from(x.sin())),
        BranchParams::Complex { theta1, theta3 } => (
            Complex64::from(x.cos()) * Complex64::new(0.0, theta1).exp(),
            Complex64::from(-x.sin()) * Complex64::new(0.0, theta3 - theta1).exp(),
        ),
    }
}

/// Synthesis parameters for the lab-frame pulses.
#[derive(Debug, Clone, Copy)]
pub enum SynthesisBranch {
    /// Real-resonant pulses with free per-channel phases α₁, α₂.
    Real { alpha1: f64, alpha2: f64 },
    /// General-complex pulses parametrized by θ₁, θ₃.
    Complex { theta1: f64, theta3: f64 },
}

/// Samples the closed-form optimal controls on [0, √3π/2] and maps them to
/// the lab frame for the given level system.
pub fn synthesize_pulses(
    branch: &SynthesisBranch,
    sys: &LevelSystem,
    samples: usize,
) -> Result<PulseSchedule> {
    if sys.n() != 3 {
        return Err(Error::UnsupportedProblem(format!(
            "geodesic synthesis is only available for 3 levels, got {}",
            sys.n()
        )));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let horizon = 3f64.sqrt() * PI / 2.0;
    let grid: Vec<f64> = (0..samples)
        .map(|k| horizon * k as f64 / (samples - 1) as f64)
        .collect();
    let (cf_branch, phases) = match *branch {
        SynthesisBranch::Real { alpha1, alpha2 } => (BranchParams::Real, Some(vec![alpha1, alpha2])),
        SynthesisBranch::Complex { theta1, theta3 } => {
            (BranchParams::Complex { theta1, theta3 }, None)
        }
    };
    let mut u1 = Vec::with_capacity(samples);
    let mut u2 = Vec::with_capacity(samples);
    for &t in &grid {
        let (a, b) = closed_form_controls(&cf_branch, t);
        u1.push(a);
        u2.push(b);
    }
    let frame = match branch {
        SynthesisBranch::Real { .. } => Frame::DriftlessReal,
        SynthesisBranch::Complex { .. } => Frame::DriftlessComplex,
    };
    let driftless = PulseSchedule::new(frame, grid, vec![u1, u2], phases)?;
    crate::driftfree::to_lab_frame(&driftless, sys)
}

/// f_a(t) = cos(ta)·sin(t√(1+a²))·a/√(1+a²) − cos(t√(1+a²))·sin(ta).
/// Satisfies |f_a| ≤ 1; the geodesic population obeys c₃(t)² = f_{a₃}(t)².
pub fn f_lemma(a: f64, t: f64) -> f64 {
    let r = (1.0 + a * a).sqrt();
    (t * a).cos() * (t * r).sin() * a / r - (t * r).cos() * (t * a).sin()
}

/// Smallest t > 0 with |f_a(t)| = 1, from the lemma's characterization:
/// |f_a| = 1 exactly at t = kπ/√(1+a²) with 2k·|a|/√(1+a²) an odd integer.
pub fn first_reach_time(a: f64) -> Option<f64> {
    let r = (1.0 + a * a).sqrt();
    let lambda = a.abs() / r;
    if lambda < 1e-15 {
        return None;
    }
    const K_MAX: u64 = 4096;
    for k in 1..=K_MAX {
        let m = 2.0 * k as f64 * lambda;
        let rounded = m.round();
        if (m - rounded).abs() < 1e-9 && (rounded as i64) % 2 != 0 {
            return Some(k as f64 * PI / r);
        }
    }
    None
}

/// Independent check of `first_reach_time`: dense grid scan of |f_a| on
/// [0, t_max] followed by ternary refinement of candidate maxima.
pub fn first_reach_time_scan(a: f64, t_max: f64, step: f64) -> Option<f64> {
    let n = (t_max / step).ceil() as usize;
    let f2 = |t: f64| f_lemma(a, t).powi(2);
    let mut prev2 = f2(0.0);
    let mut prev1 = f2(step);
    for k in 2..=n {
        let t = k as f64 * step;
        let cur = f2(t);
        if prev1 >= prev2 && prev1 >= cur && prev1 > (1.0 - 1e-4) {
            // f² is too flat at its maxima for a direct search, so refine by
            // bisecting f_a'(t) = sin(ta)·sin(t√(1+a²))/√(1+a²), which has a
            // simple sign change there
            let r = (1.0 + a * a).sqrt();
            let fp = |t: f64| (t * a).sin() * (t * r).sin();
            let (mut lo, mut hi) = ((k as f64 - 2.0) * step, t);
            if fp(lo) * fp(hi) < 0.0 {
                while hi - lo > 1e-13 {
                    let mid = 0.5 * (lo + hi);
                    if fp(lo) * fp(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            let tm = 0.5 * (lo + hi);
            if f2(tm) >= 1.0 - 1e-9 {
                return Some(tm);
            }
        }
        prev2 = prev1;
        prev1 = cur;
    }
    None
}
