//! Kernels of the Heisenberg super-operator `Â ↦ V̂ÂV̂†` rebuilt from the
//! symbols of `V̂` alone, on the dense oracle's periodic lattice.
//!
//! With `V = N⁻¹ Σ_η V(η) T_η` (`V(η) = tr(T_{−η}V)`), the chord-chord kernel is
//! `tr(T_{−ξ′} V T_ξ V†) = N⁻¹ Σ_η V(η + d/2) V*(η − d/2) e^{(i/ħ) η∧(ξ+ξ′)/2}`
//! with `d = ξ′ − ξ`. With `V = N⁻¹ Σ_c w(c) R_c` over integer-lattice centres
//! (`w(c) = tr(R_c V)`), the centre-centre kernel is
//! `tr(R_{x′} V R_x V†) = N⁻¹ Σ_c w(c) w*(x + x′ − c) e^{iφ}`, an
//! autocorrelation about the midpoint `(x + x′)/2`. Both sums are exact
//! lattice identities; labels outside the fundamental domain are folded back
//! with the lattice's periodicity signs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Axis, Grid2};
use crate::oracle::dense::{CMatrix, DenseOracle};
use crate::propagators::{KernelGrid, KernelKind, PropagatorValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutocorrelationKernel {
    /// Chord symbol of the evolved translation `T̂_ξ`, over chords `ξ′`.
    ChordChord,
    /// Weyl-lattice symbol `tr(R̂_{x′} V̂R̂_xV̂†)` over integer-lattice centres.
    CentreCentre,
}

#[derive(Debug, Clone)]
pub struct Autocorrelation {
    pub kernel: KernelGrid,
    /// Output nodes whose explicit phase factor advances faster than the
    /// six-nodes-per-period guard allows.
    pub under_resolved: usize,
}

struct Lattice {
    n: i64,
    h: i64,
}

impl Lattice {
    fn new(n: usize) -> Self {
        Self {
            n: n as i64,
            h: (n as i64 - 1) / 2,
        }
    }

    /// `(reduced label, number of periods removed)`.
    fn fold(&self, m: i64) -> (i64, i64) {
        let a = (m + self.h).div_euclid(self.n);
        (m - a * self.n, a)
    }

    fn slot(&self, m: i64, n: i64) -> usize {
        ((m + self.h) * self.n + (n + self.h)) as usize
    }

    fn unit(&self, numer: i64) -> Complex64 {
        Complex64::from_polar(1.0, PI * (numer.rem_euclid(2 * self.n)) as f64 / self.n as f64)
    }
}

/// Exact lattice kernel of `Â ↦ V̂ÂV̂†` from the symbols of `V̂`.
///
/// `anchor` is the chord `(mΔ, nΔ)` for [`AutocorrelationKernel::ChordChord`]
/// or the centre `(iΔ, kΔ)` for [`AutocorrelationKernel::CentreCentre`]. The
/// output grid is the full `N × N` lattice with spacing `Δ`.
pub fn kernel_from_evolution_symbols(
    oracle: &DenseOracle,
    v: &CMatrix,
    time: f64,
    which: AutocorrelationKernel,
    anchor: [i64; 2],
) -> Result<Autocorrelation> {
    let lat = Lattice::new(oracle.n());
    let (n, h) = (lat.n, lat.h);
    let labels: Vec<(i64, i64)> = (-h..=h).flat_map(|a| (-h..=h).map(move |b| (a, b))).collect();
    let limit = 2.0 * PI / super::NYQUIST_NODES;

    let values: Vec<(Complex64, bool)> = match which {
        AutocorrelationKernel::ChordChord => {
            let table: Vec<Complex64> = labels
                .par_iter()
                .map(|&(m, k)| oracle.chord_symbol(v, m, k))
                .collect();
            let coeff = |m: i64, k: i64| {
                let (mr, a) = lat.fold(m);
                let (kr, b) = lat.fold(k);
                let sign = if (mr * b + a * kr + a * b).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                table[lat.slot(mr, kr)] * sign
            };
            let (m0, n0) = (anchor[0], anchor[1]);
            labels
                .par_iter()
                .map(|&(m1, n1)| {
                    // ξ = anchor, ξ′ = (m1, n1); ζ = η + ξ − ξ′
                    let (s0, s1) = (m0 + m1, n0 + n1);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(em, en) in &labels {
                        let z = coeff(em + m0 - m1, en + n0 - n1);
                        acc += table[lat.slot(em, en)] * z.conj() * lat.unit(em * s1 - en * s0);
                    }
                    let step = PI * (s0.abs().max(s1.abs())) as f64 / n as f64;
                    (acc * lat.unit(m0 * n1 - n0 * m1) / n as f64, step > limit)
                })
                .collect()
        }
        AutocorrelationKernel::CentreCentre => {
            let table: Vec<Complex64> = labels
                .par_iter()
                .map(|&(i, k)| oracle.reflection(2 * i, 2 * k).trace_with(v))
                .collect();
            let w = |i: i64, k: i64| table[lat.slot(lat.fold(i).0, lat.fold(k).0)];
            let (xa, xb) = (2 * anchor[0], 2 * anchor[1]);
            labels
                .par_iter()
                .map(|&(i1, k1)| {
                    let (ya, yb) = (2 * i1, 2 * k1);
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut step: f64 = 0.0;
                    for &(ci, ck) in &labels {
                        let (ca, cb) = (2 * ci, 2 * ck);
                        let (da, db) = (ya + xa - ca, yb + xb - cb);
                        let wd = w(da / 2, db / 2);
                        let phase = (ca * yb - ya * cb) + (da * xb - xa * db);
                        acc += table[lat.slot(ci, ck)] * wd.conj() * lat.unit(phase);
                        step = step.max(PI * 2.0 * ((ya - xa).abs().max((yb - xb).abs())) as f64 / n as f64);
                    }
                    (acc / n as f64, step > limit)
                })
                .collect()
        }
    };

    let axis = Axis::centred(oracle.n(), oracle.delta())?;
    let under_resolved = values.iter().filter(|(_, bad)| *bad).count();
    if under_resolved > 0 {
        log::warn!("{under_resolved} kernel nodes have fewer than six lattice nodes per period of the explicit phase");
    }
    let d = oracle.delta();
    let (kind, anchor_xy) = match which {
        AutocorrelationKernel::ChordChord => (KernelKind::ChordChord, [anchor[0] as f64 * d, anchor[1] as f64 * d]),
        AutocorrelationKernel::CentreCentre => (KernelKind::CentreCentre, [anchor[0] as f64 * d, anchor[1] as f64 * d]),
    };
    Ok(Autocorrelation {
        kernel: KernelGrid {
            kind,
            anchor: Some(anchor_xy),
            grid: Grid2::new(axis, axis),
            time,
            hbar: oracle.hbar(),
            values: values
                .into_iter()
                .map(|(z, _)| PropagatorValue::new(z.norm(), z.arg(), 0))
                .collect(),
            first_caustic: None,
        },
        under_resolved,
    })
}
