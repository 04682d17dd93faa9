//! Polynomial Hamiltonians on single phase space and their double-phase-space
//! companions.
//!
//! The Heisenberg double Hamiltonian is `ℍ'(x, ξ) = H'(x + ξ/2) - H'(x - ξ/2)`
//! and the Schroedinger one is `ℍ(x, ξ) = H(x + ξ/2)`. Both are expanded
//! exactly into polynomials over `(x, ξ)`, so even powers of `ξ` cancel
//! identically in the Heisenberg case.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::conventions::Orientation;
use crate::error::{Error, Result};
use crate::polynomial::{PolyJet, Polynomial};
use crate::symplectic::{apply_j, ChordVector, DoublePhasePoint, PhasePoint};

pub const DEFAULT_MAX_DEGREE: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    poly: Polynomial,
    hbar: f64,
    label: String,
}

impl HamiltonianSpec {
    /// Builds from `(exponents over the 2L coordinates, coefficient)` pairs.
    pub fn from_terms(
        dof: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, f64)>,
        hbar: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::from_terms_with_max_degree(dof, terms, hbar, label, DEFAULT_MAX_DEGREE)
    }

    pub fn from_terms_with_max_degree(
        dof: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, f64)>,
        hbar: f64,
        label: impl Into<String>,
        max_degree: u32,
    ) -> Result<Self> {
        if dof == 0 {
            return Err(Error::Invalid("a Hamiltonian needs L >= 1".into()));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        let mut poly = Polynomial::zero(2 * dof);
        for (exps, coeff) in terms {
            if exps.len() != 2 * dof {
                return Err(Error::DimensionMismatch {
                    expected: 2 * dof,
                    found: exps.len(),
                });
            }
            if !coeff.is_finite() {
                return Err(Error::NonFinite("Hamiltonian coefficient"));
            }
            poly.add_term(exps, coeff);
        }
        if poly.degree() > max_degree {
            return Err(Error::Invalid(format!(
                "degree {} exceeds the configured maximum {max_degree}",
                poly.degree()
            )));
        }
        Ok(Self {
            poly,
            hbar,
            label: label.into(),
        })
    }

    /// `H = a p³`.
    pub fn cubic(a: f64) -> Self {
        Self::from_terms(1, [(vec![3, 0], a)], 1.0, format!("{a} p^3")).expect("valid cubic")
    }

    /// `H = (p² + q²)/2`.
    pub fn harmonic() -> Self {
        Self::from_terms(1, [(vec![2, 0], 0.5), (vec![0, 2], 0.5)], 1.0, "(p^2+q^2)/2")
            .expect("valid oscillator")
    }

    /// `H = p²/2 + q⁴/4`.
    pub fn quartic() -> Self {
        Self::from_terms(1, [(vec![2, 0], 0.5), (vec![0, 4], 0.25)], 1.0, "p^2/2+q^4/4")
            .expect("valid quartic")
    }

    /// `H = p²/2`.
    pub fn free_particle() -> Self {
        Self::from_terms(1, [(vec![2, 0], 0.5)], 1.0, "p^2/2").expect("valid free particle")
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(1, [(vec![0, 0], c)], 1.0, format!("{c}")).expect("valid constant")
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        self.hbar = hbar;
        Ok(self)
    }

    /// The same Hamiltonian multiplied by `s` (used for time reversal).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            poly: self.poly.scaled(s),
            hbar: self.hbar,
            label: if s == 1.0 {
                self.label.clone()
            } else {
                format!("{s}*({})", self.label)
            },
        }
    }

    /// The Hamiltonian that drives evolution under the given orientation.
    pub fn oriented(&self, orientation: Orientation) -> Self {
        self.scaled(orientation.sign())
    }

    pub fn dof(&self) -> usize {
        self.poly.nvars() / 2
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn degree(&self) -> u32 {
        self.poly.degree()
    }

    pub fn is_quadratic(&self) -> bool {
        self.degree() <= 2
    }

    pub fn value(&self, x: &PhasePoint) -> f64 {
        self.poly.eval(x.as_slice())
    }

    pub fn gradient(&self, x: &PhasePoint) -> DVector<f64> {
        self.poly.gradient(x.as_slice())
    }

    pub fn hessian(&self, x: &PhasePoint) -> DMatrix<f64> {
        self.poly.hessian(x.as_slice())
    }

    /// Hamilton's vector field `ẋ = J ∇H`.
    pub fn vector_field(&self, x: &DVector<f64>) -> DVector<f64> {
        apply_j(&self.poly.gradient(x.as_slice()))
    }

    pub fn heisenberg_double(&self) -> DoubleHamiltonian {
        DoubleHamiltonian::new(DoubleKind::Heisenberg, self.clone())
    }

    pub fn schroedinger_double(&self) -> DoubleHamiltonian {
        DoubleHamiltonian::new(DoubleKind::Schroedinger, self.clone())
    }

    /// Parses the one-degree-of-freedom text format: one `coeff i j` per line
    /// meaning `coeff · p^i q^j`; `#` starts a comment.
    pub fn parse_text(src: &str, hbar: f64, label: impl Into<String>) -> Result<Self> {
        let mut terms = Vec::new();
        for (n, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            if fields.len() != 3 {
                return Err(bad(format!("expected `coeff i j`, got `{line}`")));
            }
            let coeff: f64 = fields[0]
                .parse()
                .map_err(|e| bad(format!("coefficient `{}`: {e}", fields[0])))?;
            let i: u32 = fields[1]
                .parse()
                .map_err(|e| bad(format!("p exponent `{}`: {e}", fields[1])))?;
            let j: u32 = fields[2]
                .parse()
                .map_err(|e| bad(format!("q exponent `{}`: {e}", fields[2])))?;
            terms.push((vec![i, j], coeff));
        }
        Self::from_terms(1, terms, hbar, label)
    }

    /// Writes the text format back out (L = 1 only).
    pub fn to_text(&self) -> Result<String> {
        if self.dof() != 1 {
            return Err(Error::Invalid("text format is defined for L = 1".into()));
        }
        let mut out = format!("# {}\n", self.label);
        for (e, c) in self.poly.terms() {
            let _ = writeln!(out, "{c:?} {} {}", e[0], e[1]);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleKind {
    Heisenberg,
    Schroedinger,
}

/// A Hamiltonian on double phase space, expanded over `(x, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleHamiltonian {
    kind: DoubleKind,
    base: HamiltonianSpec,
    jet: PolyJet,
    /// The same function over canonical coordinates `(x, y)`.
    canonical: PolyJet,
}

impl DoubleHamiltonian {
    fn new(kind: DoubleKind, base: HamiltonianSpec) -> Self {
        let plus = base.poly.shifted_by_half_chord(1.0);
        let poly = match kind {
            DoubleKind::Heisenberg => plus.sub(&base.poly.shifted_by_half_chord(-1.0)),
            DoubleKind::Schroedinger => plus,
        };
        let canonical = PolyJet::new(&chord_to_canonical(&poly, base.dof()));
        Self {
            kind,
            base,
            jet: PolyJet::new(&poly),
            canonical,
        }
    }

    pub fn kind(&self) -> DoubleKind {
        self.kind
    }

    pub fn base(&self) -> &HamiltonianSpec {
        &self.base
    }

    /// Polynomial over `(x_1..x_2L, ξ_1..ξ_2L)`.
    pub fn polynomial(&self) -> &Polynomial {
        self.jet.polynomial()
    }

    pub fn dof(&self) -> usize {
        self.base.dof()
    }

    fn stack(x: &[f64], xi: &[f64]) -> Vec<f64> {
        x.iter().chain(xi).copied().collect()
    }

    pub fn value(&self, x: &PhasePoint, xi: &ChordVector) -> f64 {
        self.jet.eval(&Self::stack(x.as_slice(), xi.as_slice()))
    }

    pub fn value_at(&self, point: &DoublePhasePoint) -> f64 {
        self.value(&point.centre, &point.chord)
    }

    /// Value at canonical coordinates `z = (x, y)`.
    pub fn value_canonical(&self, z: &DVector<f64>) -> f64 {
        self.canonical.eval(z.as_slice())
    }

    /// Gradient with respect to `(x, y)`: `(∂ℍ/∂x, J ∂ℍ/∂ξ)`.
    pub fn gradient_canonical(&self, z: &DVector<f64>) -> DVector<f64> {
        self.canonical.gradient(z.as_slice())
    }

    /// Hessian with respect to `(x, y)`.
    pub fn hessian_canonical(&self, z: &DVector<f64>) -> DMatrix<f64> {
        self.canonical.hessian(z.as_slice())
    }

    /// Hamilton's equations in canonical form: `ẋ = ∂ℍ/∂y`, `ẏ = -∂ℍ/∂x`.
    pub fn vector_field(&self, z: &DVector<f64>) -> DVector<f64> {
        let g = self.gradient_canonical(z);
        let n = z.len() / 2;
        DVector::from_fn(2 * n, |i, _| if i < n { g[n + i] } else { -g[i - n] })
    }
}

/// Rewrites a polynomial over `(x, ξ)` in canonical coordinates `(x, y)`
/// through `ξ = -Jy`, i.e. `ξ_p = y_q`, `ξ_q = -y_p`.
fn chord_to_canonical(poly: &Polynomial, dof: usize) -> Polynomial {
    let n = 2 * dof;
    let mut out = Polynomial::zero(2 * n);
    for (e, c) in poly.terms() {
        let mut ex = e.clone();
        let mut sign = 1.0;
        for i in 0..dof {
            let (xi_p, xi_q) = (e[n + i], e[n + dof + i]);
            ex[n + i] = xi_q;
            ex[n + dof + i] = xi_p;
            if xi_q % 2 == 1 {
                sign = -sign;
            }
        }
        out.add_term(ex, sign * c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::canonical_j;

    #[test]
    fn monomial_examples() {
        let h = HamiltonianSpec::cubic(1.0);
        assert_eq!(h.value(&PhasePoint::pq(2.0, 5.0)), 8.0);
        let g = h.gradient(&PhasePoint::pq(2.0, 3.0));
        assert_eq!((g[0], g[1]), (12.0, 0.0));
        assert_eq!(HamiltonianSpec::harmonic().value(&PhasePoint::pq(3.0, 4.0)), 12.5);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = HamiltonianSpec::quartic();
        let x = PhasePoint::pq(0.7, -1.3);
        let g = h.gradient(&x);
        let step = 1e-4;
        for k in 0..2 {
            let mut a = x.as_slice().to_vec();
            let mut b = a.clone();
            a[k] += step;
            b[k] -= step;
            let fd = (h.value(&PhasePoint::new(a).unwrap()) - h.value(&PhasePoint::new(b).unwrap()))
                / (2.0 * step);
            assert!((fd - g[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn cubic_heisenberg_closed_form() {
        let hh = HamiltonianSpec::cubic(1.0).heisenberg_double();
        let mut expect = Polynomial::zero(4);
        expect.add_term(vec![2, 0, 1, 0], 3.0);
        expect.add_term(vec![0, 0, 3, 0], 0.25);
        assert_eq!(hh.polynomial(), &expect);
    }

    #[test]
    fn quadratic_heisenberg_is_bilinear() {
        // H = -a∧x + x·Bx with a = (1, 2), B = diag(0.5, 0.5)
        // -a∧x = -(a_p q - a_q p) = 2p - q
        let h = HamiltonianSpec::from_terms(
            1,
            [
                (vec![1, 0], 2.0),
                (vec![0, 1], -1.0),
                (vec![2, 0], 0.5),
                (vec![0, 2], 0.5),
            ],
            1.0,
            "q",
        )
        .unwrap();
        let hh = h.heisenberg_double();
        let x = PhasePoint::pq(0.4, -0.9);
        let xi = ChordVector::pq(1.1, 0.3);
        // a·y - 2 x·BJy with y = Jξ
        let y = apply_j(xi.vector());
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DMatrix::identity(2, 2) * 0.5;
        let j = canonical_j(1);
        let expect = a.dot(&y) - 2.0 * x.vector().dot(&(&b * &j * &y));
        assert!((hh.value(&x, &xi) - expect).abs() < 1e-14);
    }

    #[test]
    fn constant_has_zero_heisenberg_double() {
        assert!(HamiltonianSpec::constant(3.0)
            .heisenberg_double()
            .polynomial()
            .is_zero());
    }

    #[test]
    fn schroedinger_double_is_forward_tip() {
        let p = HamiltonianSpec::from_terms(1, [(vec![1, 0], 1.0)], 1.0, "p").unwrap();
        let d = p.schroedinger_double();
        assert_eq!(d.value(&PhasePoint::pq(0.0, 0.0), &ChordVector::pq(2.0, 0.0)), 1.0);
        let ho = HamiltonianSpec::harmonic().schroedinger_double();
        assert_eq!(ho.value(&PhasePoint::pq(1.0, 0.0), &ChordVector::pq(2.0, 0.0)), 2.0);
        let c = HamiltonianSpec::cubic(1.0);
        let x = PhasePoint::pq(1.3, 0.2);
        assert_eq!(c.schroedinger_double().value(&x, &ChordVector::zeros(1)), c.value(&x));
    }

    #[test]
    fn parses_text_format() {
        let src = "# cubic\n1.0 3 0\n\n0.5 0 2 # potential\n";
        let h = HamiltonianSpec::parse_text(src, 1.0, "t").unwrap();
        assert_eq!(h.value(&PhasePoint::pq(2.0, 2.0)), 10.0);
        let again = HamiltonianSpec::parse_text(&h.to_text().unwrap(), 1.0, "t").unwrap();
        assert_eq!(again.polynomial(), h.polynomial());
        // decimal parsing is correctly rounded
        let h = HamiltonianSpec::parse_text("0.1 1 0", 1.0, "t").unwrap();
        assert_eq!(h.polynomial().terms().next().unwrap().1, 0.1);
    }

    #[test]
    fn rejects_bad_text() {
        assert!(matches!(
            HamiltonianSpec::parse_text("1.0 3", 1.0, "t"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            HamiltonianSpec::parse_text("1 0 0\nx 1 0", 1.0, "t"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(HamiltonianSpec::parse_text("1 7 0", 1.0, "t").is_err());
    }
}
