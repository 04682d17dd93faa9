//! Exact affine flows for Hamiltonians of degree at most two.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::conventions::Orientation;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::symplectic::{
    apply_j, canonical_j, skew_vectors, ChordVector, DoublePhasePoint, PhasePoint, SymplecticMatrix,
};

/// `H(x) = c + g·x + ½ x·Kx` with its time-`t` flow `x ↦ M x + d`.
#[derive(Debug, Clone)]
pub struct QuadraticFlow {
    gradient0: DVector<f64>,
    hessian: DMatrix<f64>,
    hbar: f64,
}

impl QuadraticFlow {
    pub fn new(h: &HamiltonianSpec) -> Result<Self> {
        if !h.is_quadratic() {
            return Err(Error::Invalid(format!(
                "quadratic oracle needs degree <= 2, got {}",
                h.degree()
            )));
        }
        let origin = PhasePoint::zeros(h.dof());
        Ok(Self {
            gradient0: h.gradient(&origin),
            hessian: h.hessian(&origin),
            hbar: h.hbar(),
        })
    }

    pub fn oriented(h: &HamiltonianSpec, orientation: Orientation) -> Result<Self> {
        Self::new(&h.oriented(orientation))
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    fn dim(&self) -> usize {
        self.gradient0.len()
    }

    /// `(M, d)` of the time-`t` flow, from the exponential of the augmented generator.
    pub fn affine(&self, t: f64) -> (SymplecticMatrix, DVector<f64>) {
        let n = self.dim();
        let j = canonical_j(n / 2);
        let mut gen = DMatrix::zeros(n + 1, n + 1);
        gen.view_mut((0, 0), (n, n)).copy_from(&(&j * &self.hessian * t));
        gen.view_mut((0, n), (n, 1)).copy_from(&(&j * &self.gradient0 * t));
        let e = gen.exp();
        let m = e.view((0, 0), (n, n)).into_owned();
        let d = e.view((0, n), (n, 1)).column(0).into_owned();
        (SymplecticMatrix::new(m).expect("finite exponential"), d)
    }

    pub fn flow(&self, x: &PhasePoint, t: f64) -> PhasePoint {
        let (m, d) = self.affine(t);
        PhasePoint::new((m.matrix() * x.vector() + d).as_slice().to_vec()).expect("finite flow")
    }

    /// Chords are carried by the linear part only.
    pub fn chord_transport(&self, xi: &ChordVector, t: f64) -> ChordVector {
        let (m, _) = self.affine(t);
        ChordVector::new((m.matrix() * xi.vector()).as_slice().to_vec()).expect("finite flow")
    }

    /// Double characteristic: centre by the affine flow, chord by its linear part.
    pub fn double_flow(&self, x: &DoublePhasePoint, t: f64) -> DoublePhasePoint {
        DoublePhasePoint::new(self.flow(&x.centre, t), self.chord_transport(&x.chord, t))
            .expect("finite flow")
    }

    /// Chord symbol of `2R̂'_x(t)`: the plane wave `exp(i x(t)∧ξ/ħ)`.
    pub fn reflection_kernel(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> Complex64 {
        let xt = self.flow(x, t);
        Complex64::from_polar(1.0, skew_vectors(xt.vector(), xi.vector()) / self.hbar)
    }

    /// Weyl symbol of `T̂'_ξ(t)`: `exp(−i(x' − d)∧ξ(t)/ħ)` with `ξ(t) = Mξ`.
    pub fn translation_kernel(&self, xi: &ChordVector, x: &PhasePoint, t: f64) -> Complex64 {
        let (m, d) = self.affine(t);
        let xit = m.matrix() * xi.vector();
        let shifted = x.vector() - d;
        Complex64::from_polar(1.0, -skew_vectors(&shifted, &xit) / self.hbar)
    }

    /// Where the centre-centre kernel anchored at `x` concentrates.
    pub fn kernel_position(&self, x: &PhasePoint, t: f64) -> PhasePoint {
        self.flow(x, t)
    }

    /// Linear part of the Hamiltonian vector field at the origin, `J g`.
    pub fn drift(&self) -> DVector<f64> {
        apply_j(&self.gradient0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn oscillator_quarter_turn() {
        let f = QuadraticFlow::new(&HamiltonianSpec::harmonic()).unwrap();
        let x = f.flow(&PhasePoint::pq(1.0, 0.0), FRAC_PI_2);
        assert!(x.p(0).abs() < 1e-14 && (x.q(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_chords_follow_centres() {
        let f = QuadraticFlow::new(&HamiltonianSpec::harmonic()).unwrap();
        let v = PhasePoint::pq(0.3, -0.8);
        let a = f.flow(&v, 0.7);
        let b = f.chord_transport(&v.as_chord(), 0.7);
        assert!((a.vector() - b.vector()).norm() < 1e-14);
    }

    #[test]
    fn linear_part_moves_centres_only() {
        let h = HamiltonianSpec::from_terms(1, [(vec![1, 0], 2.0), (vec![0, 1], -1.0)], 1.0, "2p-q")
            .unwrap();
        let f = QuadraticFlow::new(&h).unwrap();
        let xi = ChordVector::pq(0.5, 0.25);
        assert!((f.chord_transport(&xi, 1.3).vector() - xi.vector()).norm() < 1e-14);
        // ṗ = −∂H/∂q = 1, q̇ = ∂H/∂p = 2
        let x = f.flow(&PhasePoint::pq(0.0, 0.0), 1.0);
        assert!((x.p(0) - 1.0).abs() < 1e-14 && (x.q(0) - 2.0).abs() < 1e-14);
        // centre representation picks up the shift phase exp(i d∧ξ/ħ)
        let k = f.translation_kernel(&xi, &PhasePoint::pq(0.0, 0.0), 1.0);
        let d = DVector::from_vec(vec![1.0, 2.0]);
        assert!((k.arg() - skew_vectors(&d, xi.vector())).abs() < 1e-14);
    }

    #[test]
    fn rejects_cubic() {
        assert!(QuadraticFlow::new(&HamiltonianSpec::cubic(1.0)).is_err());
    }
}
