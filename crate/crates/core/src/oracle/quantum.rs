//! Wavefunction-level referee.
//!
//! A Gaussian state is evolved exactly, either by a phase in the momentum
//! basis (Hamiltonians depending on `p` alone) or by Strang split-step on a
//! periodic position grid (separable `T(p) + V(q)`). Chord functions are then
//! extracted as `χ(ξ) = ⟨ψ| T̂_{−ξ} |ψ⟩`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::conventions::Orientation;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::polynomial::Polynomial;
use crate::symplectic::ChordVector;

/// `ψ(q) = (2πσ²)^{-1/4} exp(−(q−q0)²/4σ² + i p0 q/ħ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub q0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub hbar: f64,
}

impl GaussianState {
    pub fn new(q0: f64, p0: f64, sigma: f64, hbar: f64) -> Result<Self> {
        if !(sigma > 0.0 && hbar > 0.0) {
            return Err(Error::Invalid("sigma and hbar must be positive".into()));
        }
        Ok(Self { q0, p0, sigma, hbar })
    }

    pub fn position_amplitude(&self, q: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let norm = (2.0 * PI * s2).powf(-0.25);
        let d = q - self.q0;
        Complex64::from_polar(norm * (-d * d / (4.0 * s2)).exp(), self.p0 * q / self.hbar)
    }

    /// `ψ̃(p) = (2πħ)^{-1/2} ∫ dq e^{−ipq/ħ} ψ(q)`.
    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        let (s, h) = (self.sigma, self.hbar);
        let norm = (2.0 * s * s / (PI * h * h)).powf(0.25);
        let d = p - self.p0;
        Complex64::from_polar(norm * (-s * s * d * d / (h * h)).exp(), -(p - self.p0) * self.q0 / h)
    }

    /// Weight `c` with Weyl symbol `→ c δ(q − q0)` as `σ → 0`: `c = 2σ√(2π)`.
    pub fn delta_weight(&self) -> f64 {
        2.0 * self.sigma * (2.0 * PI).sqrt()
    }

    /// Wigner function (normalized to unit integral).
    pub fn wigner(&self, p: f64, q: f64) -> f64 {
        let (s, h) = (self.sigma, self.hbar);
        let dq = q - self.q0;
        let dp = p - self.p0;
        (-dq * dq / (2.0 * s * s) - 2.0 * s * s * dp * dp / (h * h)).exp() / (PI * h)
    }
}

/// Chord function of `ψ̃(p, t) = e^{−iφ(p)} ψ̃(p)` by trapezoid quadrature
/// over momentum: `∫dp ψ̃*(p − ξ_p/2) ψ̃(p + ξ_p/2) e^{iξ_q p/ħ}`.
///
/// `max_rate` bounds `|d/dp|` of the total phase over the window; the step is
/// a quarter of the Nyquist step for that rate.
pub fn momentum_chord_function(
    state: &GaussianState,
    phi: impl Fn(f64) -> f64 + Sync,
    xi: &ChordVector,
    max_rate: f64,
) -> Complex64 {
    let h = state.hbar;
    let (xp, xq) = (xi.p(0), xi.q(0));
    let width = h / state.sigma;
    let (lo, hi) = (state.p0 - 10.0 * width, state.p0 + 10.0 * width);
    let rate = (max_rate + xq.abs() / h + state.q0.abs() / h).max(1.0);
    let dp_target = (PI / rate / 4.0).min(width / 20.0);
    let n = ((hi - lo) / dp_target).ceil() as usize;
    let dp = (hi - lo) / n as f64;
    let f = |k: usize| {
        let p = lo + k as f64 * dp;
        let a = state.momentum_amplitude(p - 0.5 * xp).conj() * state.momentum_amplitude(p + 0.5 * xp);
        let phase = phi(p - 0.5 * xp) - phi(p + 0.5 * xp) + xq * p / h;
        a * Complex64::from_polar(1.0, phase)
    };
    let interior: Complex64 = (1..n).into_par_iter().map(f).sum();
    (interior + 0.5 * (f(0) + f(n))) * dp
}

/// Exact evolution of the Gaussian under `H = a p³` for time `t`, then its
/// chord function at `ξ`.
pub fn cubic_chord_function(
    state: &GaussianState,
    a: f64,
    t: f64,
    orientation: Orientation,
    xi: &ChordVector,
) -> Complex64 {
    let s = orientation.sign();
    let h = state.hbar;
    let phi = move |p: f64| s * a * p.powi(3) * t / h;
    let width = h / state.sigma;
    let pmax = state.p0.abs() + 10.0 * width + xi.p(0).abs();
    let rate = (6.0 * a * t * xi.p(0) * pmax).abs() / h + (a * t * xi.p(0).powi(2)).abs() / h;
    momentum_chord_function(state, phi, xi, rate)
}

/// Periodic position grid `q_j = q_min + j dq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGrid {
    pub n: usize,
    pub q_min: f64,
    pub dq: f64,
}

impl PositionGrid {
    /// Centred grid of `n` nodes spanning `[−half_width, half_width)`.
    pub fn centred(n: usize, half_width: f64) -> Self {
        Self {
            n,
            q_min: -half_width,
            dq: 2.0 * half_width / n as f64,
        }
    }

    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq
    }

    /// Momentum of FFT bin `k` (standard wrap-around ordering).
    pub fn p(&self, k: usize, hbar: f64) -> f64 {
        let n = self.n as i64;
        let kk = if (k as i64) < (n + 1) / 2 { k as i64 } else { k as i64 - n };
        2.0 * PI * hbar * kk as f64 / (n as f64 * self.dq)
    }

    pub fn sample(&self, state: &GaussianState) -> Vec<Complex64> {
        (0..self.n).map(|j| state.position_amplitude(self.q(j))).collect()
    }
}

fn split_parts(h: &HamiltonianSpec) -> Result<(Polynomial, Polynomial)> {
    if h.dof() != 1 {
        return Err(Error::Invalid("split-step oracle is one-dimensional".into()));
    }
    let mut kinetic = Polynomial::zero(2);
    let mut potential = Polynomial::zero(2);
    for (e, c) in h.polynomial().terms() {
        match (e[0], e[1]) {
            (_, 0) => kinetic.add_term(e.clone(), c),
            (0, _) => potential.add_term(e.clone(), c),
            _ => {
                return Err(Error::Invalid(
                    "split-step oracle needs a separable H = T(p) + V(q)".into(),
                ))
            }
        }
    }
    Ok((kinetic, potential))
}

fn strang(
    psi0: &[Complex64],
    grid: &PositionGrid,
    kinetic: &[f64],
    potential: &[f64],
    t: f64,
    steps: usize,
    hbar: f64,
) -> Vec<Complex64> {
    let n = grid.n;
    let dt = t / steps as f64;
    let half_v: Vec<Complex64> = potential
        .iter()
        .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar))
        .collect();
    let full_t: Vec<Complex64> = kinetic
        .iter()
        .map(|k| Complex64::from_polar(1.0 / n as f64, -k * dt / hbar))
        .collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut psi = psi0.to_vec();
    for _ in 0..steps {
        psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
        fwd.process(&mut psi);
        psi.iter_mut().zip(&full_t).for_each(|(a, b)| *a *= b);
        inv.process(&mut psi);
        psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
    }
    psi
}

/// Evolves `ψ` on a periodic grid by `e^{∓iHt/ħ}` (sign from the orientation),
/// halving the Strang step until successive results agree to `tol`.
pub fn split_step_evolve(
    psi0: &[Complex64],
    grid: &PositionGrid,
    h: &HamiltonianSpec,
    t: f64,
    orientation: Orientation,
    tol: f64,
) -> Result<Vec<Complex64>> {
    if psi0.len() != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            found: psi0.len(),
        });
    }
    let h = h.oriented(orientation);
    let (kin, pot) = split_parts(&h)?;
    let hbar = h.hbar();
    let kinetic: Vec<f64> = (0..grid.n).map(|k| kin.eval(&[grid.p(k, hbar), 0.0])).collect();
    let potential: Vec<f64> = (0..grid.n).map(|j| pot.eval(&[0.0, grid.q(j)])).collect();
    if t == 0.0 {
        return Ok(psi0.to_vec());
    }
    let mut steps = ((t.abs() / 0.01).ceil() as usize).max(1);
    let mut prev = strang(psi0, grid, &kinetic, &potential, t, steps, hbar);
    for _ in 0..16 {
        steps *= 2;
        let next = strang(psi0, grid, &kinetic, &potential, t, steps, hbar);
        let change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if change < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::StepControl {
        change: f64::NAN,
        halvings: 16,
    })
}

/// `χ(ξ) = ∫dq ψ*(q) e^{−iξ_p(q + ξ_q/2)/ħ} ψ(q + ξ_q)` for `ξ_q = m dq`,
/// with periodic wrap.
pub fn chord_function_on_grid(psi: &[Complex64], grid: &PositionGrid, xi_p: f64, m: i64, hbar: f64) -> Complex64 {
    let n = grid.n as i64;
    let xq = m as f64 * grid.dq;
    (0..n)
        .map(|j| {
            let jj = ((j + m) % n + n) % n;
            let q = grid.q(j as usize);
            psi[j as usize].conj()
                * psi[jj as usize]
                * Complex64::from_polar(1.0, -xi_p * (q + 0.5 * xq) / hbar)
        })
        .sum::<Complex64>()
        * grid.dq
}
