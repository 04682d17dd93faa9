//! Dense operator algebra on an odd periodic lattice.
//!
//! Positions and momenta both live on `Δ·Z` with `Δ² N = 2πħ`, so the
//! discrete Fourier transform is an exact change of basis and every lattice
//! translation `T(mΔ, nΔ) = Z^m X^n e^{−iπmn/N}` obeys the continuum group law
//! exactly. Reflections are labelled by half-lattice centres `(aΔ/2, bΔ/2)`.
//!
//! A lattice reflection is the sum of the continuum reflection through its
//! centre and through the antipodal centre half a period away. Symbols of
//! operators localized away from the antipode therefore read
//! `2 tr(R_x Â)`, while operators spread over the whole torus (the identity,
//! `q̂`, evolved reflections) read `tr(R_x Â)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conventions::Orientation;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;

pub type CMatrix = DMatrix<Complex64>;

pub const MAX_ORACLE_N: usize = 1024;

/// A matrix with exactly one nonzero per row: `(Mψ)_j = phase_j ψ_{perm_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    perm: Vec<usize>,
    phase: Vec<Complex64>,
}

impl Monomial {
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.perm
            .iter()
            .zip(&self.phase)
            .map(|(&k, &ph)| ph * psi[k])
            .collect()
    }

    /// `tr(M B)`.
    pub fn trace_with(&self, b: &CMatrix) -> Complex64 {
        self.perm
            .iter()
            .zip(&self.phase)
            .enumerate()
            .map(|(j, (&k, &ph))| ph * b[(k, j)])
            .sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.perm.len();
        let mut m = CMatrix::zeros(n, n);
        for (j, (&k, &ph)) in self.perm.iter().zip(&self.phase).enumerate() {
            m[(j, k)] = ph;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOracle {
    n: usize,
    hbar: f64,
    delta: f64,
}

impl DenseOracle {
    pub fn new(n: usize, hbar: f64) -> Result<Self> {
        if n > MAX_ORACLE_N {
            return Err(Error::OracleTooLarge(n));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::Invalid(format!("oracle lattice size must be odd and >= 3, got {n}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::Invalid("hbar must be positive".into()));
        }
        Ok(Self {
            n,
            hbar,
            delta: (2.0 * PI * hbar / n as f64).sqrt(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Lattice spacing `Δ = (2πħ/N)^{1/2}` in both `q` and `p`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn half(&self) -> i64 {
        (self.n as i64 - 1) / 2
    }

    /// Centred integer coordinate of basis index `j`.
    pub fn coord(&self, j: usize) -> i64 {
        j as i64 - self.half()
    }

    fn index(&self, k: i64) -> usize {
        let n = self.n as i64;
        ((k + self.half()) % n + n) as usize % self.n
    }

    pub fn q(&self, j: usize) -> f64 {
        self.coord(j) as f64 * self.delta
    }

    pub fn p(&self, m: usize) -> f64 {
        self.coord(m) as f64 * self.delta
    }

    fn unit(&self, numer: f64) -> Complex64 {
        Complex64::from_polar(1.0, PI * numer / self.n as f64)
    }

    /// Translation by the chord `(mΔ, nΔ)`.
    pub fn translation(&self, m: i64, n: i64) -> Monomial {
        let global = self.unit(-(m * n) as f64);
        let (perm, phase) = (0..self.n)
            .map(|j| {
                let k = self.coord(j);
                (self.index(k - n), self.unit((2 * m * k) as f64) * global)
            })
            .unzip();
        Monomial { perm, phase }
    }

    /// Reflection through the centre `(aΔ/2, bΔ/2)`.
    pub fn reflection(&self, a: i64, b: i64) -> Monomial {
        let global = self.unit(-(a * b) as f64);
        let (perm, phase) = (0..self.n)
            .map(|j| {
                let k = self.coord(j);
                (self.index(b - k), self.unit((2 * a * k) as f64) * global)
            })
            .unzip();
        Monomial { perm, phase }
    }

    /// `F_{jm} = ⟨q_j|p_m⟩ = N^{-1/2} e^{i p_m q_j/ħ}`.
    pub fn fourier(&self) -> CMatrix {
        let s = 1.0 / (self.n as f64).sqrt();
        CMatrix::from_fn(self.n, self.n, |j, m| {
            self.unit((2 * self.coord(j) * self.coord(m)) as f64) * s
        })
    }

    pub fn position(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_fn(self.n, |j, _| {
            Complex64::new(self.q(j), 0.0)
        }))
    }

    /// `F diag(f(p)) F†`.
    pub fn momentum_function(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let fm = self.fourier();
        let d = nalgebra::DVector::from_fn(self.n, |m, _| f(self.p(m)));
        &fm * CMatrix::from_diagonal(&d) * fm.adjoint()
    }

    /// Lattice quantization of a separable `H = T(p) + V(q)`.
    pub fn hamiltonian(&self, h: &HamiltonianSpec) -> Result<CMatrix> {
        if h.dof() != 1 {
            return Err(Error::Invalid("dense oracle is one-dimensional".into()));
        }
        let mut kinetic = Vec::new();
        let mut potential = Vec::new();
        for (e, c) in h.polynomial().terms() {
            match (e[0], e[1]) {
                (i, 0) => kinetic.push((i, c)),
                (0, j) => potential.push((j, c)),
                _ => {
                    return Err(Error::Invalid(
                        "dense oracle quantizes separable Hamiltonians only".into(),
                    ))
                }
            }
        }
        let t = |p: f64| kinetic.iter().map(|&(i, c)| c * p.powi(i as i32)).sum::<f64>();
        let v = |q: f64| potential.iter().map(|&(j, c)| c * q.powi(j as i32)).sum::<f64>();
        let mut m = self.momentum_function(|p| Complex64::new(t(p), 0.0));
        for j in 0..self.n {
            m[(j, j)] += v(self.q(j));
        }
        Ok(m)
    }

    /// `V = exp(−i s H t/ħ)` with `s` the orientation sign, by Hermitian
    /// eigendecomposition.
    pub fn evolution(&self, h: &HamiltonianSpec, t: f64, orientation: Orientation) -> Result<CMatrix> {
        let hm = self.hamiltonian(h)?;
        let eig = hm.symmetric_eigen();
        let s = orientation.sign();
        let d = nalgebra::DVector::from_fn(self.n, |k, _| {
            Complex64::from_polar(1.0, -s * eig.eigenvalues[k] * t / self.hbar)
        });
        Ok(&eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint())
    }

    /// Exact evolution for Hamiltonians of `p` alone: `F diag(e^{−i s H(p) t/ħ}) F†`.
    pub fn momentum_evolution(
        &self,
        h: impl Fn(f64) -> f64,
        t: f64,
        orientation: Orientation,
    ) -> CMatrix {
        let s = orientation.sign();
        self.momentum_function(|p| Complex64::from_polar(1.0, -s * h(p) * t / self.hbar))
    }

    /// `V Â V†`.
    pub fn conjugate(&self, v: &CMatrix, a: &CMatrix) -> CMatrix {
        v * a * v.adjoint()
    }

    /// Chord symbol `tr(T_{−ξ} Â)` at `ξ = (mΔ, nΔ)`.
    pub fn chord_symbol(&self, a: &CMatrix, m: i64, n: i64) -> Complex64 {
        self.translation(-m, -n).trace_with(a)
    }

    /// Weyl symbol at the centre `(aΔ/2, bΔ/2)`; see the module notes for
    /// the `localized` switch.
    pub fn weyl_symbol(&self, op: &CMatrix, a: i64, b: i64, localized: bool) -> Complex64 {
        let w = if localized { 2.0 } else { 1.0 };
        self.reflection(a, b).trace_with(op) * w
    }

    /// Chord symbol of the evolved reflection, `tr(T_{−ξ} V R_x V†)`.
    ///
    /// The tips `x ± ξ/2` sit on the lattice only for parity-matched labels
    /// (`a ≡ m`, `b ≡ n` mod 2); otherwise the trace samples the antipodal
    /// branch half a period away.
    pub fn reflection_chord_kernel(&self, v: &CMatrix, centre: (i64, i64), chord: (i64, i64)) -> Complex64 {
        let r = self.reflection(centre.0, centre.1).to_dense();
        self.chord_symbol(&self.conjugate(v, &r), chord.0, chord.1)
    }

    /// Centre-centre kernel `tr(R_{x'} V R_x V†)` over all integer-lattice
    /// centres `x' = (iΔ, kΔ)`; entries sum to `N`, so `/N` reads as mass.
    pub fn centre_kernel(&self, v: &CMatrix, centre: (i64, i64)) -> CMatrix {
        let r = self.reflection(centre.0, centre.1).to_dense();
        let evolved = self.conjugate(v, &r);
        let h = self.half();
        CMatrix::from_fn(self.n, self.n, |i, k| {
            let (pi, qk) = (i as i64 - h, k as i64 - h);
            self.reflection(2 * pi, 2 * qk).trace_with(&evolved)
        })
    }

    /// Fraction of `|ψ|²` within `margin` nodes of the periodic seam in the
    /// position and momentum bases (a bound on wrap-around contamination).
    pub fn wraparound_bound(&self, psi: &[Complex64], margin: usize) -> f64 {
        let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        let edge = |v: &[Complex64]| -> f64 {
            (0..margin)
                .chain(self.n - margin..self.n)
                .map(|j| v[j].norm_sqr())
                .sum()
        };
        let fm = self.fourier();
        let psi_v = nalgebra::DVector::from_column_slice(psi);
        let mom = fm.adjoint() * psi_v;
        (edge(psi) + edge(mom.as_slice())) / total.max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn guard_and_validation() {
        assert!(matches!(DenseOracle::new(1025, 1.0), Err(Error::OracleTooLarge(1025))));
        assert!(DenseOracle::new(64, 1.0).is_err());
        assert!(DenseOracle::new(65, 1.0).is_ok());
    }

    #[test]
    fn translations_are_unitary_and_satisfy_the_group_law() {
        let o = DenseOracle::new(31, 1.0).unwrap();
        let id = CMatrix::identity(31, 31);
        let (m1, n1, m2, n2) = (3, -5, -7, 2);
        let t1 = o.translation(m1, n1).to_dense();
        let t2 = o.translation(m2, n2).to_dense();
        assert!(close(&(t1.adjoint() * &t1), &id) < 1e-12);
        let wedge = o.delta().powi(2) * (m1 * n2 - n1 * m2) as f64;
        let expect = o.translation(m1 + m2, n1 + n2).to_dense() * Complex64::from_polar(1.0, wedge / 2.0);
        assert!(close(&(&t1 * &t2), &expect) < 1e-12);
    }

    #[test]
    fn reflections_are_involutive_and_self_adjoint() {
        let o = DenseOracle::new(31, 1.0).unwrap();
        for &(a, b) in &[(0, 0), (3, -5), (-7, 8)] {
            let r = o.reflection(a, b).to_dense();
            assert!(close(&(&r * &r), &CMatrix::identity(31, 31)) < 1e-12);
            assert!(close(&r.adjoint(), &r) < 1e-12);
        }
    }

    #[test]
    fn fourier_is_unitary() {
        let o = DenseOracle::new(21, 0.5).unwrap();
        let f = o.fourier();
        assert!(close(&(f.adjoint() * &f), &CMatrix::identity(21, 21)) < 1e-12);
    }

    #[test]
    fn weyl_symbols_of_test_operators() {
        let o = DenseOracle::new(101, 1.0).unwrap();
        let id = CMatrix::identity(101, 101);
        assert!((o.weyl_symbol(&id, 6, -4, false) - 1.0).norm() < 1e-12);
        let q = o.position();
        assert!((o.weyl_symbol(&q, 4, -6, false).re + 3.0 * o.delta()).abs() < 1e-12);
        let p2 = o.momentum_function(|p| Complex64::new(p * p, 0.0));
        let w = o.weyl_symbol(&p2, 10, 2, false);
        assert!((w.re - (5.0 * o.delta()).powi(2)).abs() < 1e-10);

        // coherent state: symbol 2 e^{-|x|²/ħ} (σ² = ħ/2)
        let s = (0.5_f64).sqrt();
        let norm = (2.0 * PI * s * s).powf(-0.25) * o.delta().sqrt();
        let psi: Vec<Complex64> = (0..101)
            .map(|j| Complex64::new(norm * (-o.q(j).powi(2) / (4.0 * s * s)).exp(), 0.0))
            .collect();
        let v = nalgebra::DVector::from_column_slice(&psi);
        let rho = &v * v.adjoint();
        for &(a, b) in &[(0, 0), (2, -1), (-3, 4)] {
            let (pp, qq) = (a as f64 * o.delta() / 2.0, b as f64 * o.delta() / 2.0);
            let expect = 2.0 * (-(pp * pp + qq * qq)).exp();
            assert!((o.weyl_symbol(&rho, a, b, true) - expect).norm() < 1e-8);
        }
        assert!(o.wraparound_bound(&psi, 5) < 1e-10);
    }

    #[test]
    fn cubic_reflection_kernel_matches_forward_closed_form() {
        use crate::oracle::cubic::CubicClosedForm;
        use crate::symplectic::{ChordVector, PhasePoint};
        let o = DenseOracle::new(121, 1.0).unwrap();
        let t = 0.5;
        let d = o.delta();
        let cf = CubicClosedForm::new(1.0, 1.0);
        let mut worst = [0.0_f64; 2];
        for (k, orientation) in Orientation::both().into_iter().enumerate() {
            let v = o.momentum_evolution(|p| p.powi(3), t, orientation);
            for &(a, b) in &[(0, 0), (2, -2), (-1, 3)] {
                for &(m, n) in &[(2, 0), (4, 2), (-2, 6), (1, 1), (-3, 5)] {
                    if (a - m) % 2 != 0 {
                        continue;
                    }
                    let got = o.reflection_chord_kernel(&v, (a, b), (m, n));
                    let x = PhasePoint::pq(a as f64 * d / 2.0, b as f64 * d / 2.0);
                    let xi = ChordVector::pq(m as f64 * d, n as f64 * d);
                    worst[k] = worst[k].max((got - cf.reflection_kernel(&x, &xi, t)).norm());
                }
            }
        }
        assert!(worst[0] < 1e-10, "forward {}", worst[0]);
        assert!(worst[1] > 1e-2, "backward {}", worst[1]);
    }

    #[test]
    fn zero_time_centre_kernel_is_a_node_delta() {
        let o = DenseOracle::new(15, 1.0).unwrap();
        let g = o.centre_kernel(&CMatrix::identity(15, 15), (2, -4));
        let h = 7;
        assert!((g[((1 + h) as usize, (-2 + h) as usize)] - 15.0).norm() < 1e-10);
        let total: Complex64 = g.iter().sum();
        assert!((total - 15.0).norm() < 1e-9);
    }
}
