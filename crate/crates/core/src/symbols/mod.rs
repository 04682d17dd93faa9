//! Grid-sampled Weyl and chord symbols for one degree of freedom.
//!
//! Normalization: an operator is `Â = (2πħ)⁻¹∫dx A(x) 2R̂_x = (2πħ)⁻¹∫dξ A(ξ) T̂_ξ`,
//! so `A(x) = tr(2R̂_x Â)`, `A(ξ) = tr(T̂_{−ξ} Â)` and the two are linked by
//! `A(ξ) = (2πħ)⁻¹∫dx e^{−iξ∧x/ħ} A(x)` (an involution). A normalized Wigner
//! function is the Weyl symbol of `ρ̂` divided by `2πħ`.

mod autocorrelation;
mod evolve;
mod product;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2};

pub use autocorrelation::{kernel_from_evolution_symbols, Autocorrelation, AutocorrelationKernel};
pub use evolve::{
    evolve_chord_from_line, evolve_chord_from_weyl, evolve_weyl_from_chord, small_chord_evolve,
    small_chord_evolve_line, Evolved, KernelFamily, LiouvilleKernels, NYQUIST_NODES,
};
pub use product::{chord_commutator_with_h, chord_product, translate_left};

/// Boundary band (in nodes) watched by the aliasing check.
pub const ALIAS_BAND: usize = 2;
/// Fraction of total mass in the boundary band above which a transform warns.
pub const ALIAS_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    Weyl,
    Chord,
}

impl SymbolKind {
    pub fn dual(self) -> Self {
        match self {
            SymbolKind::Weyl => SymbolKind::Chord,
            SymbolKind::Chord => SymbolKind::Weyl,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SymbolKind::Weyl => "weyl",
            SymbolKind::Chord => "chord",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymbolGrid {
    pub kind: SymbolKind,
    pub grid: Grid2,
    pub values: Vec<Complex64>,
    pub hbar: f64,
    pub time: f64,
}

impl SymbolGrid {
    pub fn new(kind: SymbolKind, grid: Grid2, values: Vec<Complex64>, hbar: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if !(hbar > 0.0) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self {
            kind,
            grid,
            values,
            hbar,
            time: 0.0,
        })
    }

    pub fn from_fn(
        kind: SymbolKind,
        grid: Grid2,
        hbar: f64,
        f: impl Fn([f64; 2]) -> Complex64,
    ) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(kind, grid, values, hbar)
    }

    pub fn zeros(kind: SymbolKind, grid: Grid2, hbar: f64) -> Result<Self> {
        Self::new(kind, grid, vec![Complex64::new(0.0, 0.0); grid.len()], hbar)
    }

    /// Discrete `weight·δ(v − at)`: `weight / cell_area` on the node `at`,
    /// which must sit on the grid.
    pub fn delta(kind: SymbolKind, grid: Grid2, hbar: f64, at: [f64; 2], weight: Complex64) -> Result<Self> {
        let k = node_on_grid(&grid, at)?;
        let mut s = Self::zeros(kind, grid, hbar)?;
        s.values[k] = weight / grid.cell_area();
        Ok(s)
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn same_grid(&self, other: &SymbolGrid) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::GridMismatch(format!(
                "{} symbol vs {} symbol",
                self.kind.label(),
                other.kind.label()
            )));
        }
        if (self.hbar - other.hbar).abs() > 1e-14 * self.hbar {
            return Err(Error::GridMismatch(format!("hbar {} vs {}", self.hbar, other.hbar)));
        }
        self.grid.same_as(&other.grid)
    }

    pub fn require(&self, kind: SymbolKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "expected a {} symbol, got {}",
                kind.label(),
                self.kind.label()
            )))
        }
    }

    /// Value at a grid node given by coordinates.
    pub fn value_at(&self, v: [f64; 2]) -> Result<Complex64> {
        Ok(self.values[node_on_grid(&self.grid, v)?])
    }

    /// `Σ|A| ΔA`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).sum::<f64>() * self.grid.cell_area()
    }

    /// Share of `Σ|A|` carried by nodes within `band` nodes of the boundary.
    pub fn boundary_fraction(&self, band: usize) -> f64 {
        let total: f64 = self.values.iter().map(|z| z.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = (0..self.grid.len())
            .filter(|&k| !self.grid.is_interior(k, band))
            .map(|k| self.values[k].norm())
            .sum();
        edge / total
    }

    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_difference(&self, other: &SymbolGrid) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest nodewise difference against a reference function.
    pub fn max_difference_fn(&self, reference: impl Fn([f64; 2]) -> Complex64) -> f64 {
        (0..self.grid.len())
            .map(|k| (self.values[k] - reference(self.grid.point(k))).norm())
            .fold(0.0, f64::max)
    }

    /// Chord symbol at the origin, or `(2πħ)⁻¹∫A(x)dx` for Weyl symbols.
    pub fn trace(&self) -> Result<Complex64> {
        match self.kind {
            SymbolKind::Chord => {
                let k = self
                    .grid
                    .origin()
                    .ok_or_else(|| Error::Invalid("chord grid has no node on ξ = 0".into()))?;
                Ok(self.values[k])
            }
            SymbolKind::Weyl => {
                let s: Complex64 = self.values.iter().sum();
                Ok(s * self.grid.cell_area() / (2.0 * PI * self.hbar))
            }
        }
    }
}

/// Hilbert-Schmidt product `tr(Â†B̂) = (2πħ)⁻¹ Σ A* B ΔA`; the same formula
/// holds for either kind.
pub fn overlap(a: &SymbolGrid, b: &SymbolGrid) -> Result<Complex64> {
    a.same_grid(b)?;
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.cell_area() / (2.0 * PI * a.hbar))
}

/// `⟨Â⟩ = ∫W A dx` for a normalized Wigner function `w` and a Weyl symbol `a`.
pub fn expectation(w: &SymbolGrid, a: &SymbolGrid) -> Result<f64> {
    w.require(SymbolKind::Weyl)?;
    w.same_grid(a)?;
    let s: Complex64 = w.values.iter().zip(&a.values).map(|(x, y)| x * y).sum();
    Ok(s.re * w.grid.cell_area())
}

pub(crate) fn node_on_grid(grid: &Grid2, v: [f64; 2]) -> Result<usize> {
    let k = grid
        .nearest(v)
        .ok_or_else(|| Error::Invalid(format!("point {v:?} is outside the grid")))?;
    let n = grid.point(k);
    let tol = 1e-9;
    if (n[0] - v[0]).abs() > tol * grid.p.spacing() || (n[1] - v[1]).abs() > tol * grid.q.spacing() {
        return Err(Error::Invalid(format!("point {v:?} is not a grid node")));
    }
    Ok(k)
}

fn check_centred(axis: &Axis, name: &str) -> Result<()> {
    if axis.n % 2 == 0 || axis.origin().is_none() || (axis.min + axis.max).abs() > 1e-9 * axis.spacing() {
        return Err(Error::Invalid(format!(
            "{name} axis must be centred with an odd node count for the symplectic Fourier transform"
        )));
    }
    Ok(())
}

/// The grid conjugate to `grid`: the `p` axis pairs with the old `q` axis and
/// vice versa, with spacing `2πħ/(n·Δ)`.
pub fn conjugate_grid(grid: &Grid2, hbar: f64) -> Result<Grid2> {
    check_centred(&grid.p, "p")?;
    check_centred(&grid.q, "q")?;
    let h = 2.0 * PI * hbar;
    let (r, c) = (grid.p.n, grid.q.n);
    Ok(Grid2::new(
        Axis::centred(c, h / (c as f64 * grid.q.spacing()))?,
        Axis::centred(r, h / (r as f64 * grid.p.spacing()))?,
    ))
}

fn centred_dft(buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let h = (buf.len() - 1) / 2;
    buf.rotate_left(h);
    fft.process(buf);
    buf.rotate_right(h);
}

/// `A(ξ) = (2πħ)⁻¹ Σ e^{−iξ∧x/ħ} A(x) Δx`, or the same map back.
///
/// With centred odd axes the conjugate nodes satisfy `ξ_p q/ħ = 2π a j / n_q`
/// and `ξ_q p/ħ = 2π b i / n_p`, so the sum is an exact pair of centred DFTs
/// (forward along `q`, inverse along `p`) followed by a transpose. Plane waves
/// on conjugate nodes map to single-node deltas and the map is an involution.
pub fn symplectic_fourier(a: &SymbolGrid) -> Result<SymbolGrid> {
    let out_grid = conjugate_grid(&a.grid, a.hbar)?;
    let band = a.boundary_fraction(ALIAS_BAND);
    if band > ALIAS_FRACTION {
        log::warn!(
            "{} symbol carries {band:.2e} of its mass within {ALIAS_BAND} nodes of the boundary; transform may alias",
            a.kind.label()
        );
    }
    let (r, c) = (a.grid.p.n, a.grid.q.n);
    let mut planner = FftPlanner::new();
    let along_q = planner.plan_fft_forward(c);
    let along_p = planner.plan_fft_inverse(r);

    let mut work = a.values.clone();
    for row in work.chunks_mut(c) {
        centred_dft(row, &along_q);
    }
    // column r' of `work` is the transform input along p; store it as output row r'
    let scale = a.grid.cell_area() / (2.0 * PI * a.hbar);
    let mut out = vec![Complex64::new(0.0, 0.0); r * c];
    let mut col = vec![Complex64::new(0.0, 0.0); r];
    for j in 0..c {
        for i in 0..r {
            col[i] = work[i * c + j];
        }
        centred_dft(&mut col, &along_p);
        for i in 0..r {
            out[j * r + i] = col[i] * scale;
        }
    }
    let mut s = SymbolGrid::new(a.kind.dual(), out_grid, out, a.hbar)?;
    s.time = a.time;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, d: f64) -> Grid2 {
        Grid2::new(Axis::centred(n, d).unwrap(), Axis::centred(n, d).unwrap())
    }

    #[test]
    fn round_trip_is_identity() {
        let g = Grid2::new(Axis::centred(33, 0.21).unwrap(), Axis::centred(45, 0.17).unwrap());
        let a = SymbolGrid::from_fn(SymbolKind::Weyl, g, 0.7, |[p, q]| {
            Complex64::new((-(p * p + 2.0 * q * q)).exp() * (1.0 + p), q.sin() * (-q * q).exp())
        })
        .unwrap();
        let b = symplectic_fourier(&a).unwrap();
        assert_eq!(b.kind, SymbolKind::Chord);
        assert_eq!(b.grid.shape(), [45, 33]);
        let back = symplectic_fourier(&b).unwrap();
        assert!(back.max_difference(&a).unwrap() < 1e-12);
    }

    #[test]
    fn plane_wave_maps_to_node_delta() {
        let hbar = 0.5;
        let g = grid(31, 0.3);
        let xg = conjugate_grid(&g, hbar).unwrap();
        let xi0 = xg.point(xg.index(19, 8));
        let a = SymbolGrid::from_fn(SymbolKind::Weyl, g, hbar, |[p, q]| {
            // exp(−i x∧ξ0/ħ) with x∧ξ = p ξ_q − q ξ_p
            Complex64::from_polar(1.0, -(p * xi0[1] - q * xi0[0]) / hbar)
        })
        .unwrap();
        let chord = symplectic_fourier(&a).unwrap();
        let expect = SymbolGrid::delta(SymbolKind::Chord, xg, hbar, xi0, Complex64::new(2.0 * PI * hbar, 0.0)).unwrap();
        assert!(chord.max_difference(&expect).unwrap() < 1e-10);
        // identity operator: A(x) = 1 → trace-weighted delta at the origin
        let one = SymbolGrid::from_fn(SymbolKind::Weyl, g, hbar, |_| Complex64::new(1.0, 0.0)).unwrap();
        let id = symplectic_fourier(&one).unwrap();
        let k0 = id.grid.origin().unwrap();
        assert!((id.values[k0] * id.grid.cell_area() - 2.0 * PI * hbar).norm() < 1e-10);
        assert!(id.values.iter().enumerate().all(|(k, z)| k == k0 || z.norm() < 1e-10));
    }

    #[test]
    fn coherent_state_symbols_and_moments() {
        let hbar = 1.0;
        let g = grid(129, 0.1);
        let wigner = SymbolGrid::from_fn(SymbolKind::Weyl, g, hbar, |[p, q]| {
            Complex64::new((-(p * p + q * q) / hbar).exp() / (PI * hbar), 0.0)
        })
        .unwrap();
        let mut rho = wigner.clone();
        rho.values.iter_mut().for_each(|z| *z *= 2.0 * PI * hbar);
        let chi = symplectic_fourier(&rho).unwrap();
        let err = chi.max_difference_fn(|[a, b]| Complex64::new((-(a * a + b * b) / (4.0 * hbar)).exp(), 0.0));
        assert!(err < 1e-10, "{err}");
        assert!((chi.trace().unwrap() - 1.0).norm() < 1e-10);
        assert!((rho.trace().unwrap() - 1.0).norm() < 1e-10);

        let q2 = SymbolGrid::from_fn(SymbolKind::Weyl, g, hbar, |[_, q]| Complex64::new(q * q, 0.0)).unwrap();
        assert!((expectation(&wigner, &q2).unwrap() - 0.5 * hbar).abs() < 1e-10);

        let w = overlap(&rho, &rho).unwrap();
        let c = overlap(&chi, &chi).unwrap();
        assert!((w - c).norm() < 1e-10 && (w.re - 1.0).abs() < 1e-10 && w.im.abs() < 1e-14);
    }

    #[test]
    fn rejects_non_centred_grids() {
        let g = Grid2::square(1.0, 10).unwrap();
        let a = SymbolGrid::zeros(SymbolKind::Weyl, g, 1.0).unwrap();
        assert!(symplectic_fourier(&a).is_err());
    }
}
