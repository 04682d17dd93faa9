//! Closed forms for `H = a p³` (one degree of freedom).
//!
//! Methods without a suffix are the forms consistent with the double
//! Hamiltonian `a(3p²ξ_p + ξ_p³/4)` under the shipped orientation. The
//! `*_as_printed` methods reproduce the printed reference formulas verbatim,
//! including their sign of the cubic term, so that the disagreement can be
//! measured rather than hidden.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::conventions::Orientation;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::symplectic::{ChordVector, DoublePhasePoint, PhasePoint};

/// Smallest `|a t ξ_p|` accepted before the parabola chord function is
/// reported as sitting on its `ξ_p = 0` caustic.
pub const CHORD_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicClosedForm {
    pub a: f64,
    pub hbar: f64,
}

impl CubicClosedForm {
    pub fn new(a: f64, hbar: f64) -> Self {
        Self { a, hbar }
    }

    /// The same family seen under another orientation (`a → −a` for `B`).
    pub fn oriented(self, orientation: Orientation) -> Self {
        Self {
            a: self.a * orientation.sign(),
            hbar: self.hbar,
        }
    }

    pub fn hamiltonian(&self) -> HamiltonianSpec {
        HamiltonianSpec::cubic(self.a)
            .with_hbar(self.hbar)
            .expect("positive hbar")
    }

    /// Single-space orbit: `p` constant, `q(t) = q + 3ap²t`.
    pub fn trajectory(&self, x: &PhasePoint, t: f64) -> PhasePoint {
        let (p, q) = (x.p(0), x.q(0));
        PhasePoint::pq(p, q + 3.0 * self.a * p * p * t)
    }

    /// Double characteristic through `(x, ξ)`.
    pub fn characteristic(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> DoublePhasePoint {
        let (p, q) = (x.p(0), x.q(0));
        let (xp, xq) = (xi.p(0), xi.q(0));
        let centre = PhasePoint::pq(p, q + 3.0 * self.a * (p * p + 0.25 * xp * xp) * t);
        let chord = ChordVector::pq(xp, xq + 6.0 * self.a * p * xp * t);
        DoublePhasePoint::new(centre, chord).expect("finite closed form")
    }

    /// Centre `q` on the evolved reflection plane through `x` at chord `ξ_p`.
    pub fn surface_q(&self, x: &PhasePoint, xi_p: f64, t: f64) -> f64 {
        let p = x.p(0);
        x.q(0) + 3.0 * self.a * (p * p + 0.25 * xi_p * xi_p) * t
    }

    pub fn surface_q_as_printed(&self, x: &PhasePoint, xi_p: f64, t: f64) -> f64 {
        let p = x.p(0);
        x.q(0) + 3.0 * self.a * (p * p - 0.25 * xi_p * xi_p) * t
    }

    /// `ℍ'(x, ξ) = a(3p²ξ_p + ξ_p³/4)`.
    pub fn double_hamiltonian(&self, x: &PhasePoint, xi: &ChordVector) -> f64 {
        let (p, xp) = (x.p(0), xi.p(0));
        self.a * (3.0 * p * p * xp + 0.25 * xp.powi(3))
    }

    /// Chord action of the evolved reflection through `x`:
    /// `p ξ_q − q(t) ξ_p − (at/4) ξ_p³`.
    pub fn reflection_action(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> f64 {
        let qt = self.trajectory(x, t).q(0);
        x.p(0) * xi.q(0) - qt * xi.p(0) - 0.25 * self.a * t * xi.p(0).powi(3)
    }

    pub fn reflection_action_as_printed(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> f64 {
        let qt = self.trajectory(x, t).q(0);
        x.p(0) * xi.q(0) - qt * xi.p(0) + 0.25 * self.a * t * xi.p(0).powi(3)
    }

    /// `∂S/∂t` of [`Self::reflection_action`].
    pub fn reflection_action_dt(&self, x: &PhasePoint, xi: &ChordVector) -> f64 {
        -self.double_hamiltonian(x, xi)
    }

    pub fn reflection_action_dt_as_printed(&self, x: &PhasePoint, xi: &ChordVector) -> f64 {
        let (p, xp) = (x.p(0), xi.p(0));
        self.a * (-3.0 * p * p * xp + 0.25 * xp.powi(3))
    }

    /// `∂S/∂ξ = (∂/∂ξ_p, ∂/∂ξ_q)` of [`Self::reflection_action`].
    pub fn reflection_action_gradient(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> [f64; 2] {
        let qt = self.trajectory(x, t).q(0);
        [-qt - 0.75 * self.a * t * xi.p(0).powi(2), x.p(0)]
    }

    pub fn reflection_action_gradient_as_printed(
        &self,
        x: &PhasePoint,
        xi: &ChordVector,
        t: f64,
    ) -> [f64; 2] {
        let qt = self.trajectory(x, t).q(0);
        [-qt + 0.75 * self.a * t * xi.p(0).powi(2), x.p(0)]
    }

    /// Chord symbol of `2R̂'_x(t)`: unit modulus, phase `S/ħ`.
    pub fn reflection_kernel(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.reflection_action(x, xi, t) / self.hbar)
    }

    pub fn reflection_kernel_as_printed(&self, x: &PhasePoint, xi: &ChordVector, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.reflection_action_as_printed(x, xi, t) / self.hbar)
    }

    /// Centre action of the evolved translation by `ξ`, at final centre `x'`:
    /// `−x'∧ξ − t ℍ'(x', ξ)`.
    pub fn translation_action(&self, xi: &ChordVector, x: &PhasePoint, t: f64) -> f64 {
        let wedge = x.p(0) * xi.q(0) - x.q(0) * xi.p(0);
        -wedge - t * self.double_hamiltonian(x, xi)
    }

    /// Weyl symbol of `T̂'_ξ(t)`: unit modulus, phase `S/ħ`.
    pub fn translation_kernel(&self, xi: &ChordVector, x: &PhasePoint, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.translation_action(xi, x, t) / self.hbar)
    }

    /// Evolved chord symbol of the position projector with Weyl symbol
    /// `δ(q − q0)`, using the normalization
    /// `A(ξ) = (2πħ)⁻¹ ∫dx e^{−iξ∧x/ħ} A(x)`.
    pub fn chord_function(&self, q0: f64, xi: &ChordVector, t: f64) -> Result<Complex64> {
        let (xp, xq) = (xi.p(0), xi.q(0));
        let k = self.a * t * xp;
        if k.abs() < CHORD_POLE_TOL {
            return Err(Error::ChordCaustic { det: k.abs() });
        }
        let h = self.hbar;
        let modulus = (PI * h / (3.0 * k.abs())).sqrt() / (2.0 * PI * h);
        let phase = (-q0 * xp - 0.25 * self.a * t * xp.powi(3) + xq * xq / (12.0 * k)) / h
            - 0.25 * PI * k.signum();
        Ok(Complex64::from_polar(modulus, phase))
    }

    /// The printed closed form, verbatim: `[2πħ/(3atξ_p)]^{1/2}` times
    /// `exp(i/ħ(−q0ξ_p + (at/4)ξ_p³ + ξ_q²/(12atξ_p)))`.
    pub fn chord_function_as_printed(&self, q0: f64, xi: &ChordVector, t: f64) -> Result<Complex64> {
        let (xp, xq) = (xi.p(0), xi.q(0));
        let k = self.a * t * xp;
        if k.abs() < CHORD_POLE_TOL {
            return Err(Error::ChordCaustic { det: k.abs() });
        }
        let h = self.hbar;
        let prefactor = Complex64::new(2.0 * PI * h / (3.0 * k), 0.0).sqrt();
        let phase = (-q0 * xp + 0.25 * self.a * t * xp.powi(3) + xq * xq / (12.0 * k)) / h;
        Ok(prefactor * Complex64::from_polar(1.0, phase))
    }

    /// Small-chord approximation of [`Self::chord_function`]: the same
    /// integral with only the transported linear phase `x(t)∧ξ`.
    pub fn chord_function_small_chord(&self, q0: f64, xi: &ChordVector, t: f64) -> Result<Complex64> {
        let exact = self.chord_function(q0, xi, t)?;
        let cubic = -0.25 * self.a * t * xi.p(0).powi(3) / self.hbar;
        Ok(exact * Complex64::from_polar(1.0, -cubic))
    }

    /// Position of the crude Liouville line `q' = q0 + 3ap'²t`.
    pub fn liouville_line(&self, q0: f64, p: f64, t: f64) -> f64 {
        q0 + 3.0 * self.a * p * p * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> CubicClosedForm {
        CubicClosedForm::new(1.0, 1.0)
    }

    #[test]
    fn trajectory_example() {
        let x = c().trajectory(&PhasePoint::pq(1.0, 0.0), 2.0);
        assert_eq!((x.p(0), x.q(0)), (1.0, 6.0));
    }

    #[test]
    fn chord_transport_example() {
        let d = c().characteristic(&PhasePoint::pq(1.0, 0.0), &ChordVector::pq(1.0, 0.0), 1.0);
        assert_eq!(d.chord.q(0), 6.0);
    }

    #[test]
    fn printed_action_example() {
        let x = PhasePoint::pq(1.0, 0.0);
        let xi = ChordVector::pq(2.0, 1.0);
        assert_eq!(c().reflection_action_as_printed(&x, &xi, 1.0), -3.0);
        assert_eq!(c().reflection_action(&x, &xi, 1.0), -7.0);
    }

    #[test]
    fn action_solves_chord_hamilton_jacobi() {
        // ∂S/∂t = −ℍ'(x_C, ξ) with x_C = −J ∂S/∂ξ
        let cf = c();
        let x = PhasePoint::pq(0.7, -0.4);
        for &(xp, xq) in &[(1.3, 0.2), (-2.0, 3.0), (0.5, -1.5)] {
            let xi = ChordVector::pq(xp, xq);
            let g = cf.reflection_action_gradient(&x, &xi, 0.8);
            let centre = PhasePoint::pq(g[1], -g[0]);
            let residual = cf.reflection_action_dt(&x, &xi) + cf.double_hamiltonian(&centre, &xi);
            assert!(residual.abs() < 1e-12);
        }
    }

    #[test]
    fn printed_action_fails_hamilton_jacobi_under_both_orientations() {
        let x = PhasePoint::pq(1.0, 0.0);
        let xi = ChordVector::pq(2.0, 1.0);
        for o in Orientation::both() {
            let cf = c().oriented(o);
            let g = cf.reflection_action_gradient_as_printed(&x, &xi, 1.0);
            let centre = PhasePoint::pq(g[1], -g[0]);
            let residual = cf.reflection_action_dt_as_printed(&x, &xi) + cf.double_hamiltonian(&centre, &xi);
            assert!(residual.abs() > 1.0, "{o:?} residual {residual}");
        }
    }

    #[test]
    fn zero_time_limits() {
        let cf = c();
        let x = PhasePoint::pq(0.3, 1.1);
        let xi = ChordVector::pq(-0.6, 2.0);
        let wedge = x.p(0) * xi.q(0) - x.q(0) * xi.p(0);
        assert!((cf.reflection_kernel(&x, &xi, 0.0) - Complex64::from_polar(1.0, wedge)).norm() < 1e-15);
        assert!((cf.translation_kernel(&xi, &x, 0.0) - Complex64::from_polar(1.0, -wedge)).norm() < 1e-15);
    }

    #[test]
    fn time_reversal_identity() {
        // T'_ξ(x', t) = R'_{x'}(−ξ, −t)
        let cf = c();
        let x = PhasePoint::pq(0.4, -0.9);
        let xi = ChordVector::pq(1.2, 0.3);
        let lhs = cf.translation_kernel(&xi, &x, 1.0);
        let rhs = cf.reflection_kernel(&x, &(-&xi), -1.0);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn chord_function_instances() {
        let xi = ChordVector::pq(2.0, 0.0);
        let printed = c().chord_function_as_printed(0.0, &xi, 1.0).unwrap();
        assert!((printed.norm() - (PI / 3.0).sqrt()).abs() < 1e-14);
        assert!((printed.arg() - 2.0).abs() < 1e-14);
        let exact = c().chord_function(0.0, &xi, 1.0).unwrap();
        assert!((exact.norm() - (PI / 6.0).sqrt() / (2.0 * PI)).abs() < 1e-14);
        assert!((exact.arg() - (-2.0 - 0.25 * PI)).abs() < 1e-14);
        assert!(matches!(
            c().chord_function(0.0, &ChordVector::pq(0.0, 1.0), 1.0),
            Err(Error::ChordCaustic { .. })
        ));
    }

    #[test]
    fn small_chord_misses_cubic_phase() {
        let cf = c();
        let xi = ChordVector::pq(1.5, 0.7);
        let ratio = cf.chord_function(0.2, &xi, 1.0).unwrap() / cf.chord_function_small_chord(0.2, &xi, 1.0).unwrap();
        assert!((ratio.arg() + 0.25 * 1.5_f64.powi(3)).abs() < 1e-13);
    }
}
