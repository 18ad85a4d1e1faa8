//! Time-dependent Schrödinger propagation in the lab and driftless frames,
//! resolvent propagation on the group, populations, and the energy
//! functional. This is the independent check that synthesized pulses do
//! transfer population.

use num_complex::Complex64;

use crate::driftfree::{chain_coupling, CouplingKind, Frame, LevelSystem, PulseSchedule};
use crate::error::{Error, Result};
use crate::matcore::{frob_dist, CMat, CVec};

#[derive(Debug, Clone)]
pub struct QuantumState {
    amplitudes: CVec,
}

impl QuantumState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = CVec::from_vec(amplitudes);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(QuantumState { amplitudes: v })
    }

    pub fn ground(n: usize) -> Self {
        let mut v = CVec::zeros(n);
        v[0] = Complex64::from(1.0);
        QuantumState { amplitudes: v }
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub grid: Vec<f64>,
    pub states: Vec<CVec>,
    pub populations: Vec<Vec<f64>>,
    /// Σ_j ∫ |control_j|² dt by trapezoid quadrature.
    pub energy: f64,
}

impl PropagationResult {
    pub fn final_state(&self) -> &CVec {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().expect("nonempty trajectory")
    }
}

/// The generator at time t: lab frame gives the Hermitian H = Δ + Σ M_j(Ω_j);
/// driftless frames give the skew-Hermitian Σ N_j(u_j).
pub fn hamiltonian_at(pulses: &PulseSchedule, sys: &LevelSystem, t: f64) -> Result<CMat> {
    let n = sys.n();
    let mut h = CMat::zeros(n, n);
    let kind = match pulses.frame {
        Frame::Lab => {
            for (i, &e) in sys.energies().iter().enumerate() {
                h[(i, i)] = Complex64::from(e);
            }
            CouplingKind::M
        }
        Frame::DriftlessComplex | Frame::DriftlessReal => CouplingKind::N,
    };
    for ch in 0..pulses.channels() {
        let u = pulses.control_at(ch, t)?;
        h += chain_coupling(kind, ch + 1, u, n)?;
    }
    Ok(h)
}

fn rhs_matrix(pulses: &PulseSchedule, sys: &LevelSystem, t: f64) -> Result<CMat> {
    let h = hamiltonian_at(pulses, sys, t)?;
    Ok(match pulses.frame {
        // iψ̇ = Hψ
        Frame::Lab => h * Complex64::new(0.0, -1.0),
        // ψ̇ = H̃ψ, H̃ already skew-Hermitian
        _ => h,
    })
}

fn rk4_grid(pulses: &PulseSchedule, step: f64) -> Vec<f64> {
    let (t0, t1) = (pulses.grid[0], *pulses.grid.last().unwrap());
    let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
    (0..=n).map(|k| (t0 + k as f64 * step).min(t1)).collect()
}

/// RK4 integration of the state equation from ψ₀.
pub fn propagate_state(
    pulses: &PulseSchedule,
    sys: &LevelSystem,
    psi0: &QuantumState,
    step: f64,
) -> Result<PropagationResult> {
    if step <= 0.0 {
        return Err(Error::invalid("step must be positive"));
    }
    let grid = rk4_grid(pulses, step);
    let mut psi = psi0.amplitudes().clone();
    let mut states = vec![psi.clone()];
    let mut populations = vec![psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()];
    for w in grid.windows(2) {
        psi = rk4_step_vec(pulses, sys, &psi, w[0], w[1] - w[0])?;
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Accuracy(format!(
                "norm drift {:.2e} exceeds 1e-6; reduce the step",
                (norm - 1.0).abs()
            )));
        }
        states.push(psi.clone());
        populations.push(psi.iter().map(|z| z.norm_sqr()).collect());
    }
    Ok(PropagationResult {
        grid,
        states,
        populations,
        energy: pulses.energy(),
    })
}

fn rk4_step_vec(
    pulses: &PulseSchedule,
    sys: &LevelSystem,
    psi: &CVec,
    t: f64,
    h: f64,
) -> Result<CVec> {
    let a1 = rhs_matrix(pulses, sys, t)?;
    let a2 = rhs_matrix(pulses, sys, t + 0.5 * h)?;
    let a4 = rhs_matrix(pulses, sys, t + h)?;
    let hc = Complex64::from(h);
    let half = Complex64::from(0.5);
    let k1 = &a1 * psi;
    let k2 = &a2 * &(psi + &k1 * hc * half);
    let k3 = &a2 * &(psi + &k2 * hc * half);
    let k4 = &a4 * &(psi + &k3 * hc);
    Ok(psi + (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0))
}

/// RK4 integration of the resolvent ġ = (−iH)g or ġ = H̃g from g(0) = I.
pub fn propagate_resolvent(
    pulses: &PulseSchedule,
    sys: &LevelSystem,
    step: f64,
) -> Result<Vec<(f64, CMat)>> {
    if step <= 0.0 {
        return Err(Error::invalid("step must be positive"));
    }
    let grid = rk4_grid(pulses, step);
    let n = sys.n();
    let mut g = CMat::identity(n, n);
    let mut out = vec![(grid[0], g.clone())];
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let a1 = rhs_matrix(pulses, sys, w[0])?;
        let a2 = rhs_matrix(pulses, sys, w[0] + 0.5 * h)?;
        let a4 = rhs_matrix(pulses, sys, w[1])?;
        let hc = Complex64::from(h);
        let half = Complex64::from(0.5);
        let k1 = &a1 * &g;
        let k2 = &a2 * &(&g + &k1 * hc * half);
        let k3 = &a2 * &(&g + &k2 * hc * half);
        let k4 = &a4 * &(&g + &k3 * hc);
        g += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4)
            * Complex64::from(h / 6.0);
        let unit_err = frob_dist(&(g.adjoint() * &g), &CMat::identity(n, n));
        if unit_err > 1e-6 {
            return Err(Error::Accuracy(format!(
                "resolvent unitarity drift {unit_err:.2e} exceeds 1e-6"
            )));
        }
        out.push((w[1], g.clone()));
    }
    Ok(out)
}
