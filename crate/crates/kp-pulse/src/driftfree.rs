//! Drift elimination: the interaction-representation gauge transform between
//! lab-frame pulses Ω_j and driftless controls u_j, the resonant phase
//! reduction, and the nearest-neighbor chain coupling matrices.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::liealg::n_mat;
use crate::matcore::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    DriftlessComplex,
    DriftlessReal,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Hermitian coupling: (j,j+1) = Ω, (j+1,j) = Ω*.
    M,
    /// Skew-Hermitian coupling: (j,j+1) = Ω, (j+1,j) = −Ω*.
    N,
}

/// An n-level ladder with strictly increasing energies (ħ = 1).
#[derive(Debug, Clone)]
pub struct LevelSystem {
    energies: Vec<f64>,
}

impl LevelSystem {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::invalid("level system needs at least 2 energies"));
        }
        if energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("energies must be strictly increasing"));
        }
        Ok(LevelSystem { energies })
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Transition frequency ω_j = E_{j+1} − E_j, j = 1..n−1.
    pub fn omega(&self, j: usize) -> f64 {
        self.energies[j] - self.energies[j - 1]
    }
}

/// Sampled control functions with a frame tag. `controls[ch][k]` is the
/// channel-(ch+1) sample at `grid[k]`.
#[derive(Debug, Clone)]
pub struct PulseSchedule {
    pub frame: Frame,
    pub grid: Vec<f64>,
    pub controls: Vec<Vec<Complex64>>,
    /// α_j for the real-resonant lab map, or (θ₁, θ₃) bookkeeping.
    pub phases: Option<Vec<f64>>,
}

impl PulseSchedule {
    pub fn new(
        frame: Frame,
        grid: Vec<f64>,
        controls: Vec<Vec<Complex64>>,
        phases: Option<Vec<f64>>,
    ) -> Result<Self> {
        if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid must be strictly increasing, len >= 2"));
        }
        if controls.is_empty() || controls.iter().any(|ch| ch.len() != grid.len()) {
            return Err(Error::invalid("controls must be (n-1) x grid.len()"));
        }
        if frame == Frame::DriftlessReal {
            let imax = controls
                .iter()
                .flatten()
                .map(|z| z.im.abs())
                .fold(0.0, f64::max);
            if imax > 1e-12 {
                return Err(Error::invalid("driftless_real controls must be real"));
            }
        }
        Ok(PulseSchedule {
            frame,
            grid,
            controls,
            phases,
        })
    }

    pub fn channels(&self) -> usize {
        self.controls.len()
    }

    /// Σ_j ∫ |control_j|² dt by trapezoid quadrature on the schedule grid.
    pub fn energy(&self) -> f64 {
        let mut total = 0.0;
        for ch in &self.controls {
            for k in 1..self.grid.len() {
                let h = self.grid[k] - self.grid[k - 1];
                total += 0.5 * h * (ch[k - 1].norm_sqr() + ch[k].norm_sqr());
            }
        }
        total
    }

    /// Linear interpolation of channel `ch` (0-based) at time t.
    pub fn control_at(&self, ch: usize, t: f64) -> Result<Complex64> {
        let grid = &self.grid;
        let eps = 1e-12 * (grid[grid.len() - 1] - grid[0]).max(1.0);
        if t < grid[0] - eps || t > grid[grid.len() - 1] + eps {
            return Err(Error::invalid(format!("time {t} outside schedule grid")));
        }
        let t = t.clamp(grid[0], grid[grid.len() - 1]);
        let k = match grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
            Ok(k) => return Ok(self.controls[ch][k]),
            Err(k) => k.clamp(1, grid.len() - 1),
        };
        let (t0, t1) = (grid[k - 1], grid[k]);
        let w = (t - t0) / (t1 - t0);
        let (c0, c1) = (self.controls[ch][k - 1], self.controls[ch][k]);
        Ok(c0 * (1.0 - w) + c1 * w)
    }
}

pub fn normalize_phase(a: f64) -> f64 {
    let mut a = a.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// The chain coupling matrices M_j(Ω), N_j(Ω) on an n-level ladder.
pub fn chain_coupling(kind: CouplingKind, j: usize, omega: Complex64, n: usize) -> Result<CMat> {
    if j < 1 || j > n - 1 {
        return Err(Error::invalid(format!("chain coupling index j={j} out of 1..{}", n - 1)));
    }
    Ok(match kind {
        CouplingKind::N => n_mat(j, omega, n),
        CouplingKind::M => {
            let mut m = CMat::zeros(n, n);
            m[(j - 1, j)] = omega;
            m[(j, j - 1)] = omega.conj();
            m
        }
    })
}

/// Gauge transform of a lab schedule into the driftless complex frame:
/// u_j(t) = −i·e^{−iω_j t}·Ω_j(t), sample by sample.
pub fn to_driftless_complex(lab: &PulseSchedule, sys: &LevelSystem) -> Result<PulseSchedule> {
    if lab.frame != Frame::Lab {
        return Err(Error::invalid("to_driftless_complex expects a lab-frame schedule"));
    }
    if lab.channels() != sys.n() - 1 {
        return Err(Error::invalid("channel count must be n-1"));
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let controls = (0..lab.channels())
        .map(|ch| {
            let w = sys.omega(ch + 1);
            lab.grid
                .iter()
                .zip(&lab.controls[ch])
                .map(|(&t, &om)| minus_i * Complex64::new(0.0, -w * t).exp() * om)
                .collect()
        })
        .collect();
    PulseSchedule::new(Frame::DriftlessComplex, lab.grid.clone(), controls, None)
}

/// Inverse maps producing lab pulses. Complex frame: Ω_j = i·u_j·e^{iω_j t};
/// real frame: Ω_j = u_j·e^{i(ω_j t + α_j)} with the supplied phases α_j.
pub fn to_lab_frame(driftless: &PulseSchedule, sys: &LevelSystem) -> Result<PulseSchedule> {
    if driftless.channels() != sys.n() - 1 {
        return Err(Error::invalid("channel count must be n-1"));
    }
    let nch = driftless.channels();
    let controls: Vec<Vec<Complex64>> = match driftless.frame {
        Frame::Lab => return Err(Error::invalid("schedule is already in the lab frame")),
        Frame::DriftlessComplex => (0..nch)
            .map(|ch| {
                let w = sys.omega(ch + 1);
                driftless.grid
                    .iter()
                    .zip(&driftless.controls[ch])
                    .map(|(&t, &u)| Complex64::new(0.0, 1.0) * u * Complex64::new(0.0, w * t).exp())
                    .collect()
            })
            .collect(),
        Frame::DriftlessReal => {
            let alphas = driftless
                .phases
                .as_ref()
                .ok_or_else(|| Error::invalid("real frame needs phases alpha_j"))?;
            if alphas.len() != nch {
                return Err(Error::invalid("need one phase per channel"));
            }
            (0..nch)
                .map(|ch| {
                    let w = sys.omega(ch + 1);
                    let a = alphas[ch];
                    driftless.grid
                        .iter()
                        .zip(&driftless.controls[ch])
                        .map(|(&t, &u)| u * Complex64::new(0.0, w * t + a).exp())
                        .collect()
                })
                .collect()
        }
    };
    PulseSchedule::new(
        Frame::Lab,
        driftless.grid.clone(),
        controls,
        driftless.phases.clone(),
    )
}

/// Diagonal phases λ_1..λ_n with λ_1 = 0, λ_{j+1} = λ_j + π/2 − α_j (mod 2π),
/// which turn the phase-tagged couplings into the real driftless generator.
pub fn resonant_phase_choice(alphas: &[f64]) -> Vec<f64> {
    let mut lambdas = Vec::with_capacity(alphas.len() + 1);
    lambdas.push(0.0);
    for &a in alphas {
        let prev = *lambdas.last().unwrap();
        lambdas.push((prev + PI / 2.0 - a).rem_euclid(2.0 * PI));
    }
    lambdas
}
