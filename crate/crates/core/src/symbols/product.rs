//! Operator products and commutators in the chord representation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{symplectic_fourier, SymbolGrid, SymbolKind};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;

/// Largest `len²` accepted by the direct twisted convolution.
const MAX_PRODUCT_WORK: usize = 400_000_000;

fn wedge(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn centred_offsets(s: &SymbolGrid) -> Result<(i64, i64)> {
    let g = &s.grid;
    match (g.p.origin(), g.q.origin()) {
        (Some(a), Some(b)) if g.p.n % 2 == 1 && g.q.n % 2 == 1 => Ok((a as i64, b as i64)),
        _ => Err(Error::Invalid("chord grid must be centred with odd node counts".into())),
    }
}

/// Chord symbol of `ÂB̂`:
/// `(2πħ)⁻¹ Σ_{ξ₁} A(ξ₁) B(ξ − ξ₁) e^{(i/2ħ) ξ₁∧ξ} Δξ`, with `B` taken as zero
/// off the grid. The phase follows the group law
/// `T̂_{ξ₁}T̂_{ξ₂} = e^{(i/2ħ)ξ₁∧ξ₂} T̂_{ξ₁+ξ₂}`.
pub fn chord_product(a: &SymbolGrid, b: &SymbolGrid) -> Result<SymbolGrid> {
    a.require(SymbolKind::Chord)?;
    a.same_grid(b)?;
    let g = a.grid;
    if g.len().saturating_mul(g.len()) > MAX_PRODUCT_WORK {
        return Err(Error::Invalid(format!(
            "direct chord product on {} nodes is too large",
            g.len()
        )));
    }
    let (hp, hq) = centred_offsets(a)?;
    let (np, nq) = (g.p.n as i64, g.q.n as i64);
    let hbar = a.hbar;
    let support: Vec<(i64, i64, [f64; 2], Complex64)> = (0..g.len())
        .filter(|&k| a.values[k] != Complex64::new(0.0, 0.0))
        .map(|k| {
            let (i, j) = g.split(k);
            (i as i64 - hp, j as i64 - hq, g.point(k), a.values[k])
        })
        .collect();
    let scale = g.cell_area() / (2.0 * PI * hbar);
    let values = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.split(k);
            let xi = g.point(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(di, dj, xi1, av) in &support {
                let (bi, bj) = (i as i64 - di, j as i64 - dj);
                if bi < 0 || bj < 0 || bi >= np || bj >= nq {
                    continue;
                }
                let bv = b.values[(bi * nq + bj) as usize];
                acc += av * bv * Complex64::from_polar(1.0, 0.5 * wedge(xi1, xi) / hbar);
            }
            acc * scale
        })
        .collect();
    let mut s = SymbolGrid::new(SymbolKind::Chord, g, values, hbar)?;
    s.time = a.time;
    Ok(s)
}

/// Chord symbol of `T̂_η Â` in closed form: `A(ξ − η) e^{(i/2ħ) η∧ξ}`.
/// `η` must be a whole number of grid steps.
pub fn translate_left(a: &SymbolGrid, eta: [f64; 2]) -> Result<SymbolGrid> {
    a.require(SymbolKind::Chord)?;
    let g = a.grid;
    let (dp, dq) = (g.p.spacing(), g.q.spacing());
    let (m, n) = ((eta[0] / dp).round(), (eta[1] / dq).round());
    if (m * dp - eta[0]).abs() > 1e-9 * dp || (n * dq - eta[1]).abs() > 1e-9 * dq {
        return Err(Error::Invalid(format!("shift {eta:?} is not a lattice vector of the grid")));
    }
    let (m, n) = (m as i64, n as i64);
    let (np, nq) = (g.p.n as i64, g.q.n as i64);
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = g.split(k);
            let (si, sj) = (i as i64 - m, j as i64 - n);
            if si < 0 || sj < 0 || si >= np || sj >= nq {
                return Complex64::new(0.0, 0.0);
            }
            let phase = 0.5 * wedge(eta, g.point(k)) / a.hbar;
            a.values[(si * nq + sj) as usize] * Complex64::from_polar(1.0, phase)
        })
        .collect();
    let mut s = SymbolGrid::new(SymbolKind::Chord, g, values, a.hbar)?;
    s.time = a.time;
    Ok(s)
}

/// Chord symbol of `[Ĥ, Û]` from the mixed form
/// `(2πħ)⁻² ∫dξ′dx U(ξ′) ℍ′(x, ξ′) e^{−i(ξ−ξ′)∧x/ħ}`
/// with `ℍ′(x, ξ) = H(x + ξ/2) − H(x − ξ/2)`.
///
/// `ℍ′` is split into products `h_{kl}(x) ξ_p^k ξ_q^l`; each `ξ`-monomial
/// times `U` is carried to the centre grid by the (trapezoid) transform, the
/// `x`-factors are applied there, and the sum is transformed back.
pub fn chord_commutator_with_h(h: &HamiltonianSpec, u: &SymbolGrid) -> Result<SymbolGrid> {
    u.require(SymbolKind::Chord)?;
    if h.dof() != 1 {
        return Err(Error::Invalid("grid symbols are one-dimensional".into()));
    }
    // (k, l) → list of (coefficient, i − k, j − l)
    let mut groups: BTreeMap<(u32, u32), Vec<(f64, i32, i32)>> = BTreeMap::new();
    for (e, c) in h.polynomial().terms() {
        let (i, j) = (e[0], e[1]);
        for k in 0..=i {
            for l in 0..=j {
                if (k + l) % 2 == 0 {
                    continue;
                }
                let coeff = c * binomial(i, k) * binomial(j, l) * 2.0 / 2f64.powi((k + l) as i32);
                groups
                    .entry((k, l))
                    .or_default()
                    .push((coeff, (i - k) as i32, (j - l) as i32));
            }
        }
    }
    let mut centre: Option<SymbolGrid> = None;
    for ((k, l), xfactors) in &groups {
        let mut g = u.clone();
        for (n, z) in g.values.iter_mut().enumerate() {
            let [xp, xq] = u.grid.point(n);
            *z *= xp.powi(*k as i32) * xq.powi(*l as i32);
        }
        let mut w = symplectic_fourier(&g)?;
        for (n, z) in w.values.iter_mut().enumerate() {
            let [p, q] = w.grid.point(n);
            let f: f64 = xfactors.iter().map(|&(c, a, b)| c * p.powi(a) * q.powi(b)).sum();
            *z *= f;
        }
        centre = Some(match centre {
            None => w,
            Some(mut acc) => {
                acc.values.iter_mut().zip(&w.values).for_each(|(a, b)| *a += b);
                acc
            }
        });
    }
    match centre {
        Some(w) => symplectic_fourier(&w),
        None => SymbolGrid::zeros(SymbolKind::Chord, u.grid, u.hbar).map(|s| s.at_time(u.time)),
    }
}
