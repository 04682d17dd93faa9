//! Phase-space algebra: coordinates, the skew product, elementary canonical
//! maps and the Cayley parametrizations of linear symplectic maps.
//!
//! Coordinates are ordered `(p_1..p_L, q_1..q_L)`. The canonical matrix acts
//! as `J(p, q) = (-q, p)`, so that `x ∧ x' = Jx · x' = Σ p_n q'_n - q_n p'_n`.
//! Every other module takes its convention from [`canonical_j`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `|det(1 ± M)|` below this raises a caustic error.
pub const CAUSTIC_TOL: f64 = 1e-8;

macro_rules! phase_vector {
    ($name:ident, $what:literal) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(DVector<f64>);

        impl $name {
            /// Builds from a flat `(p.., q..)` coordinate list.
            pub fn new(coords: Vec<f64>) -> Result<Self> {
                if coords.is_empty() || coords.len() % 2 != 0 {
                    return Err(Error::Invalid(format!(
                        "{} needs an even, non-zero number of coordinates, got {}",
                        $what,
                        coords.len()
                    )));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite($what));
                }
                Ok(Self(DVector::from_vec(coords)))
            }

            /// One degree of freedom, `(p, q)`.
            pub fn pq(p: f64, q: f64) -> Self {
                Self(DVector::from_vec(vec![p, q]))
            }

            pub fn zeros(dof: usize) -> Self {
                Self(DVector::zeros(2 * dof))
            }

            pub fn dof(&self) -> usize {
                self.0.len() / 2
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn p(&self, n: usize) -> f64 {
                self.0[n]
            }

            pub fn q(&self, n: usize) -> f64 {
                self.0[self.dof() + n]
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn vector(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_vector(self) -> DVector<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }
        }

        impl std::ops::Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-&self.0)
            }
        }
    };
}

phase_vector!(PhasePoint, "phase point");
phase_vector!(ChordVector, "chord");

impl ChordVector {
    pub fn as_point(&self) -> PhasePoint {
        PhasePoint(self.0.clone())
    }
}

impl PhasePoint {
    pub fn as_chord(&self) -> ChordVector {
        ChordVector(self.0.clone())
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// A point of double phase space, held as centre `x` and chord `ξ`.
/// The canonical momentum conjugate to the centre is `y = Jξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublePhasePoint {
    pub centre: PhasePoint,
    pub chord: ChordVector,
}

impl DoublePhasePoint {
    pub fn new(centre: PhasePoint, chord: ChordVector) -> Result<Self> {
        check_dims(centre.dim(), chord.dim())?;
        Ok(Self { centre, chord })
    }

    pub fn from_tips(minus: &PhasePoint, plus: &PhasePoint) -> Result<Self> {
        check_dims(minus.dim(), plus.dim())?;
        let centre = (minus.vector() + plus.vector()) * 0.5;
        let chord = plus.vector() - minus.vector();
        Ok(Self {
            centre: PhasePoint(centre),
            chord: ChordVector(chord),
        })
    }

    /// `(x - ξ/2, x + ξ/2)`.
    pub fn tips(&self) -> (PhasePoint, PhasePoint) {
        let half = self.chord.vector() * 0.5;
        (
            PhasePoint(self.centre.vector() - &half),
            PhasePoint(self.centre.vector() + &half),
        )
    }

    pub fn dof(&self) -> usize {
        self.centre.dof()
    }

    /// Canonical coordinates `(x, y)` with `y = Jξ`, stacked into a 4L vector.
    pub fn to_canonical(&self) -> DVector<f64> {
        let l2 = self.centre.dim();
        let y = apply_j(self.chord.vector());
        let mut out = DVector::zeros(2 * l2);
        out.rows_mut(0, l2).copy_from(self.centre.vector());
        out.rows_mut(l2, l2).copy_from(&y);
        out
    }

    /// Inverse of [`to_canonical`](Self::to_canonical): `ξ = -Jy`.
    pub fn from_canonical(z: &DVector<f64>) -> Result<Self> {
        if z.len() % 4 != 0 || z.is_empty() {
            return Err(Error::Invalid(format!(
                "double phase point needs 4L coordinates, got {}",
                z.len()
            )));
        }
        let l2 = z.len() / 2;
        let x = z.rows(0, l2).into_owned();
        let y = z.rows(l2, l2).into_owned();
        let xi = -apply_j(&y);
        Ok(Self {
            centre: PhasePoint(x),
            chord: ChordVector(xi),
        })
    }
}

/// The canonical `2L × 2L` matrix with `J(p, q) = (-q, p)`.
pub fn canonical_j(dof: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * dof, 2 * dof);
    for n in 0..dof {
        j[(n, dof + n)] = -1.0;
        j[(dof + n, n)] = 1.0;
    }
    j
}

/// `J v` without forming the matrix.
pub fn apply_j(v: &DVector<f64>) -> DVector<f64> {
    let dof = v.len() / 2;
    let mut out = DVector::zeros(v.len());
    for n in 0..dof {
        out[n] = -v[dof + n];
        out[dof + n] = v[n];
    }
    out
}

pub fn skew_vectors(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let dof = a.len() / 2;
    (0..dof)
        .map(|n| a[n] * b[dof + n] - a[dof + n] * b[n])
        .sum()
}

/// `x ∧ x' = Σ p_n q'_n - q_n p'_n`.
pub fn skew_product(x: &PhasePoint, x2: &PhasePoint) -> Result<f64> {
    check_dims(x.dim(), x2.dim())?;
    Ok(skew_vectors(x.vector(), x2.vector()))
}

/// Point reflection through `centre`: `z ↦ 2 centre - z`.
pub fn apply_reflection(z: &PhasePoint, centre: &PhasePoint) -> Result<PhasePoint> {
    check_dims(z.dim(), centre.dim())?;
    Ok(PhasePoint(centre.vector() * 2.0 - z.vector()))
}

/// Uniform translation `z ↦ z + ξ`.
pub fn apply_translation(z: &PhasePoint, xi: &ChordVector) -> Result<PhasePoint> {
    check_dims(z.dim(), xi.dim())?;
    Ok(PhasePoint(z.vector() + xi.vector()))
}

/// A square `2L × 2L` real matrix, typically a tangent (monodromy) map.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() % 2 != 0 || entries.nrows() == 0 {
            return Err(Error::Invalid(format!(
                "expected a square 2L x 2L matrix, got {} x {}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self(entries))
    }

    pub fn identity(dof: usize) -> Self {
        Self(DMatrix::identity(2 * dof, 2 * dof))
    }

    /// Rotation of a single degree of freedom generated by `(p² + q²)/2`
    /// over time `t`: `p(t) = p cos t - q sin t`, `q(t) = p sin t + q cos t`.
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// `exp(J K)` for a symmetric `K`: the time-one map of `H = x·Kx/2`.
    pub fn from_hamiltonian_matrix(k: &DMatrix<f64>) -> Result<Self> {
        let dof = k.nrows() / 2;
        let sym = (k + k.transpose()) * 0.5;
        Self::new((canonical_j(dof) * sym).exp())
    }

    pub fn dof(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `‖MᵀJM - J‖_max`.
    pub fn symplectic_defect(&self) -> f64 {
        let j = canonical_j(self.dof());
        (self.0.transpose() * &j * &self.0 - j).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }

    pub fn det_one_plus(&self) -> f64 {
        (DMatrix::identity(self.0.nrows(), self.0.nrows()) + &self.0).determinant()
    }

    pub fn det_one_minus(&self) -> f64 {
        (DMatrix::identity(self.0.nrows(), self.0.nrows()) - &self.0).determinant()
    }

    pub fn apply(&self, z: &PhasePoint) -> Result<PhasePoint> {
        check_dims(self.0.nrows(), z.dim())?;
        Ok(PhasePoint(&self.0 * z.vector()))
    }
}

/// `-J (1 - M)(1 + M)⁻¹`, the centre-side Cayley transform.
pub fn cayley_centre(m: &SymplecticMatrix) -> Result<DMatrix<f64>> {
    let n = m.0.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let plus = &id + &m.0;
    let det = plus.determinant();
    if det.abs() < CAUSTIC_TOL {
        return Err(Error::CentreCaustic { det: det.abs() });
    }
    let inv = plus
        .try_inverse()
        .ok_or(Error::CentreCaustic { det: det.abs() })?;
    Ok(-canonical_j(m.dof()) * (&id - &m.0) * inv)
}

/// `-J (1 + M)(1 - M)⁻¹`, the chord-side Cayley transform.
pub fn cayley_chord(m: &SymplecticMatrix) -> Result<DMatrix<f64>> {
    let n = m.0.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let minus = &id - &m.0;
    let det = minus.determinant();
    if det.abs() < CAUSTIC_TOL {
        return Err(Error::ChordCaustic { det: det.abs() });
    }
    let inv = minus
        .try_inverse()
        .ok_or(Error::ChordCaustic { det: det.abs() })?;
    Ok(-canonical_j(m.dof()) * (&id + &m.0) * inv)
}

/// Inverts [`cayley_centre`]: recovers `M` from `B = -J(1-M)(1+M)⁻¹`.
pub fn cayley_centre_inverse(b: &DMatrix<f64>) -> Result<SymplecticMatrix> {
    // B = -J(1-M)(1+M)^-1  =>  JB = (1-M)(1+M)^-1  =>  JB(1+M) = 1-M
    //   => (JB + 1) M = 1 - JB
    let dof = b.nrows() / 2;
    let n = b.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let jb = canonical_j(dof) * b;
    let lhs = &jb + &id;
    let inv = lhs
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("1 + JB is singular".into()))?;
    SymplecticMatrix::new(inv * (&id - &jb))
}

/// Hessian of the centre generating function `S(x)` with `∂S/∂x = Jξ`:
/// twice the centre Cayley transform.
pub fn centre_action_hessian(m: &SymplecticMatrix) -> Result<DMatrix<f64>> {
    Ok(cayley_centre(m)? * 2.0)
}

/// Hessian of the chord generating function `S(ξ)` with `∂S/∂ξ = Jx`:
/// half the chord Cayley transform.
pub fn chord_action_hessian(m: &SymplecticMatrix) -> Result<DMatrix<f64>> {
    Ok(cayley_chord(m)? * 0.5)
}
