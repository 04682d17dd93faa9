//! Generating-function fields on grids.
//!
//! A centre field `S(x)` carries the chord `ξ = −J∂S/∂x` at every centre; a
//! chord field `S(ξ)` carries the centre `x = −J∂S/∂ξ` at every chord. The two
//! are Legendre duals, `S(ξ) = S(x) + x∧ξ` at the stationary point.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conventions::Orientation;
use crate::dynamics::{integrate_single, solve_centre_fixed_point, solve_chord_fixed_point, FlowMap};
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::hamiltonian::HamiltonianSpec;
use crate::surface::{sample_plane, Evolution, Plane, PlaneSample};
use crate::symplectic::{skew_vectors, ChordVector, PhasePoint, SymplecticMatrix, CAUSTIC_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Centre,
    Chord,
}

impl FieldKind {
    pub fn dual(self) -> Self {
        match self {
            FieldKind::Centre => FieldKind::Chord,
            FieldKind::Chord => FieldKind::Centre,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActionField {
    pub kind: FieldKind,
    pub grid: Grid2,
    pub time: f64,
    pub values: Vec<f64>,
    /// `∂S/∂(p, q)` per node.
    pub gradient: Vec<[f64; 2]>,
    /// `false` at caustic or unsolved nodes.
    pub mask: Vec<bool>,
    pub single_branch: bool,
}

fn j2(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn wedge(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl ActionField {
    /// Samples a closed form returning value and gradient (`None` masks the node).
    pub fn from_fn(
        kind: FieldKind,
        grid: &Grid2,
        time: f64,
        f: impl Fn([f64; 2]) -> Option<(f64, [f64; 2])> + Sync,
    ) -> Self {
        let samples: Vec<_> = (0..grid.len()).into_par_iter().map(|k| f(grid.point(k))).collect();
        let mask: Vec<bool> = samples.iter().map(|s| s.is_some()).collect();
        let values = samples.iter().map(|s| s.map_or(f64::NAN, |s| s.0)).collect();
        let gradient = samples.iter().map(|s| s.map_or([f64::NAN; 2], |s| s.1)).collect();
        Self {
            kind,
            grid: *grid,
            time,
            single_branch: mask.iter().all(|&m| m),
            values,
            gradient,
            mask,
        }
    }

    /// Field of an evolved reflection (chord kind) or translation (centre kind).
    pub fn from_plane_sample(sample: &PlaneSample) -> Self {
        let kind = match sample.plane {
            Plane::Reflection(_) => FieldKind::Chord,
            Plane::Translation(_) => FieldKind::Centre,
        };
        let mut values = Vec::with_capacity(sample.points.len());
        let mut gradient = Vec::with_capacity(sample.points.len());
        let mut mask = Vec::with_capacity(sample.points.len());
        for sp in &sample.points {
            match sp {
                Some(sp) => {
                    let g = sp.action_gradient(&sample.plane);
                    values.push(sp.action);
                    gradient.push([g[0], g[1]]);
                    mask.push(true);
                }
                None => {
                    values.push(f64::NAN);
                    gradient.push([f64::NAN; 2]);
                    mask.push(false);
                }
            }
        }
        Self {
            kind,
            grid: sample.grid,
            time: sample.time,
            values,
            gradient,
            mask,
            single_branch: sample.single_branch(),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        self.mask[k].then(|| self.values[k])
    }

    /// The conjugate coordinate carried by node `k`: `ξ = −J∇S` for centre
    /// fields, `x = −J∇S` for chord fields.
    pub fn conjugate(&self, k: usize) -> Option<[f64; 2]> {
        let g = self.gradient[k];
        self.mask[k].then_some([g[1], -g[0]])
    }

    /// Largest nodewise `|S − S_other|` over nodes valid in both.
    pub fn max_difference(&self, other: &ActionField) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok((0..self.grid.len())
            .filter(|&k| self.mask[k] && other.mask[k])
            .map(|k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max))
    }

    /// Largest `|S(v) + S(−v)|` over mirrored valid node pairs (grid symmetric about 0).
    pub fn odd_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.grid.len() {
            let [a, b] = self.grid.point(k);
            if let Some(m) = self.grid.nearest([-a, -b]) {
                let [c, d] = self.grid.point(m);
                if (a + c).abs() < 1e-9 && (b + d).abs() < 1e-9 && self.mask[k] && self.mask[m] {
                    worst = worst.max((self.values[k] + self.values[m]).abs());
                }
            }
        }
        worst
    }

    /// Central-difference gradient from the values alone; edges and nodes next
    /// to masked ones are `None`.
    pub fn finite_difference_gradient(&self, k: usize) -> Option<[f64; 2]> {
        let (i, j) = self.grid.split(k);
        if !self.grid.is_interior(k, 1) {
            return None;
        }
        let g = &self.grid;
        let v = |a: usize, b: usize| self.value(g.index(a, b));
        let hp = g.p.spacing();
        let hq = g.q.spacing();
        Some([
            (v(i + 1, j)? - v(i - 1, j)?) / (2.0 * hp),
            (v(i, j + 1)? - v(i, j - 1)?) / (2.0 * hq),
        ])
    }

    /// O(h²) Hessian from the values alone.
    pub fn finite_difference_hessian(&self, k: usize) -> Option<Matrix2<f64>> {
        let (i, j) = self.grid.split(k);
        if !self.grid.is_interior(k, 1) {
            return None;
        }
        let g = &self.grid;
        let v = |a: usize, b: usize| self.value(g.index(a, b));
        let hp = g.p.spacing();
        let hq = g.q.spacing();
        let c = v(i, j)?;
        let spp = (v(i + 1, j)? - 2.0 * c + v(i - 1, j)?) / (hp * hp);
        let sqq = (v(i, j + 1)? - 2.0 * c + v(i, j - 1)?) / (hq * hq);
        let spq = (v(i + 1, j + 1)? - v(i + 1, j - 1)? - v(i - 1, j + 1)? + v(i - 1, j - 1)?) / (4.0 * hp * hq);
        Some(Matrix2::new(spp, spq, spq, sqq))
    }

    /// Replaces the stored gradient by central differences of the values.
    pub fn with_finite_difference_gradient(&self) -> Self {
        let mut out = self.clone();
        for k in 0..self.grid.len() {
            match self.finite_difference_gradient(k) {
                Some(g) => out.gradient[k] = g,
                None => {
                    out.mask[k] = false;
                    out.gradient[k] = [f64::NAN; 2];
                }
            }
        }
        out
    }

    pub fn interpolant(&self) -> FieldInterpolant<'_> {
        FieldInterpolant::new(self)
    }
}

/// Bicubic Hermite interpolation from values, stored gradients and a
/// differenced cross derivative; exact for cubic polynomials.
pub struct FieldInterpolant<'a> {
    field: &'a ActionField,
    cross: Vec<f64>,
}

fn hermite(s: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2],
        [6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s],
        [12.0 * s - 6.0, 6.0 * s - 4.0, -12.0 * s + 6.0, 6.0 * s - 2.0],
    )
}

/// Interpolated value, gradient and Hessian.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

impl<'a> FieldInterpolant<'a> {
    fn new(field: &'a ActionField) -> Self {
        let g = &field.grid;
        let (np, nq) = (g.p.n, g.q.n);
        let (hp, hq) = (g.p.spacing(), g.q.spacing());
        let grad = |i: usize, j: usize| {
            let k = g.index(i, j);
            field.mask[k].then(|| field.gradient[k])
        };
        // ∂/∂q of S_p and ∂/∂p of S_q, averaged where both exist.
        let diff = |i: usize, j: usize, axis: usize| -> Option<f64> {
            let (n, h) = if axis == 0 { (np, hp) } else { (nq, hq) };
            let pos = if axis == 0 { i } else { j };
            let at = |o: usize| if axis == 0 { grad(o, j) } else { grad(i, o) };
            let comp = 1 - axis;
            if pos > 0 && pos + 1 < n {
                Some((at(pos + 1)?[comp] - at(pos - 1)?[comp]) / (2.0 * h))
            } else if pos == 0 && n > 2 {
                Some((-3.0 * at(0)?[comp] + 4.0 * at(1)?[comp] - at(2)?[comp]) / (2.0 * h))
            } else if n > 2 {
                Some((3.0 * at(n - 1)?[comp] - 4.0 * at(n - 2)?[comp] + at(n - 3)?[comp]) / (2.0 * h))
            } else {
                None
            }
        };
        let cross = (0..g.len())
            .map(|k| {
                let (i, j) = g.split(k);
                match (diff(i, j, 1), diff(i, j, 0)) {
                    (Some(a), Some(b)) => 0.5 * (a + b),
                    (Some(a), None) | (None, Some(a)) => a,
                    _ => f64::NAN,
                }
            })
            .collect();
        Self { field, cross }
    }

    pub fn eval(&self, v: [f64; 2]) -> Option<Jet> {
        let g = &self.field.grid;
        let (i, u) = g.p.locate(v[0])?;
        let (j, w) = g.q.locate(v[1])?;
        let (hp, hq) = (g.p.spacing(), g.q.spacing());
        let (bu, du, ddu) = hermite(u);
        let (bw, dw, ddw) = hermite(w);
        let mut out = Jet {
            value: 0.0,
            gradient: Vector2::zeros(),
            hessian: Matrix2::zeros(),
        };
        for a in 0..2 {
            for b in 0..2 {
                let k = g.index(i + a, j + b);
                if !self.field.mask[k] || self.cross[k].is_nan() {
                    return None;
                }
                let coef = [
                    self.field.values[k],
                    self.field.gradient[k][0] * hp,
                    self.field.gradient[k][1] * hq,
                    self.cross[k] * hp * hq,
                ];
                // (value-or-derivative index in u, in w) for the four data
                let slots = [(0, 0), (1, 0), (0, 1), (1, 1)];
                for (c, &(su, sw)) in coef.iter().zip(&slots) {
                    let iu = 2 * a + su;
                    let iw = 2 * b + sw;
                    out.value += c * bu[iu] * bw[iw];
                    out.gradient[0] += c * du[iu] * bw[iw] / hp;
                    out.gradient[1] += c * bu[iu] * dw[iw] / hq;
                    out.hessian[(0, 0)] += c * ddu[iu] * bw[iw] / (hp * hp);
                    out.hessian[(1, 1)] += c * bu[iu] * ddw[iw] / (hq * hq);
                    out.hessian[(0, 1)] += c * du[iu] * dw[iw] / (hp * hq);
                }
            }
        }
        out.hessian[(1, 0)] = out.hessian[(0, 1)];
        Some(out)
    }
}

/// The centre action of the time-`t` flow at `x`, by Marinov's circuit area.
#[derive(Debug, Clone)]
pub struct MarinovPoint {
    pub value: f64,
    /// Tip `x₋` with `φ_t(x₋) = x₊` and midpoint `x`.
    pub minus: PhasePoint,
    pub plus: PhasePoint,
    /// Circuit area `A_t`: orbit integral of `p dq` closed by the chord.
    pub area: f64,
    /// Tangent map of the flow at `x₋`.
    pub monodromy: SymplecticMatrix,
}

impl MarinovPoint {
    pub fn chord(&self) -> ChordVector {
        ChordVector::new((self.plus.vector() - self.minus.vector()).as_slice().to_vec()).expect("finite chord")
    }
}

/// `S_t(x) = A_t(x) − t H(x₋)` for the flow of the (oriented) Hamiltonian.
pub fn centre_action_marinov(evo: &Evolution, x: &PhasePoint, t: f64, guess: Option<&PhasePoint>) -> Result<MarinovPoint> {
    let h = evo.effective();
    if t == 0.0 {
        return Ok(MarinovPoint {
            value: 0.0,
            minus: x.clone(),
            plus: x.clone(),
            area: 0.0,
            monodromy: SymplecticMatrix::identity(h.dof()),
        });
    }
    let map = FlowMap::new(&h, t, evo.integrator);
    let fp = solve_centre_fixed_point(&map, x, guess.unwrap_or(x)).map_err(|e| match e {
        Error::SingularJacobian { det } => Error::CentreCaustic { det },
        e => e,
    })?;
    if fp.degenerate {
        return Err(Error::CentreCaustic { det: 0.0 });
    }
    marinov_from_minus(&h, &fp.point, t, evo)
}

fn marinov_from_minus(h: &HamiltonianSpec, minus: &PhasePoint, t: f64, evo: &Evolution) -> Result<MarinovPoint> {
    let b = integrate_single(h, minus, &[0.0, t], &evo.integrator)?;
    let plus = b.point(b.len() - 1)?;
    let monodromy = SymplecticMatrix::new(b.final_monodromy().clone())?;
    let det = monodromy.det_one_plus();
    if det.abs() < CAUSTIC_TOL {
        return Err(Error::CentreCaustic { det: det.abs() });
    }
    let n = h.dof();
    let closing: f64 = (0..n)
        .map(|i| 0.5 * (minus.p(i) + plus.p(i)) * (plus.q(i) - minus.q(i)))
        .sum();
    let area = b.final_action() - closing;
    Ok(MarinovPoint {
        value: area - t * h.value(minus),
        minus: minus.clone(),
        plus,
        area,
        monodromy,
    })
}

/// Chord action of the time-`t` flow, `S_t(ξ) = S_t(x) + x∧ξ` at the centre of the chord `ξ`.
#[derive(Debug, Clone)]
pub struct ChordActionPoint {
    pub value: f64,
    pub centre: PhasePoint,
    pub marinov: MarinovPoint,
}

pub fn chord_action_of_flow(evo: &Evolution, xi: &ChordVector, t: f64, guess: &PhasePoint) -> Result<ChordActionPoint> {
    let h = evo.effective();
    let map = FlowMap::new(&h, t, evo.integrator);
    let fp = solve_chord_fixed_point(&map, xi, guess).map_err(|e| match e {
        Error::SingularJacobian { det } => Error::ChordCaustic { det },
        e => e,
    })?;
    if fp.degenerate {
        return Err(Error::ChordCaustic { det: 0.0 });
    }
    let m = marinov_from_minus(&h, &fp.point, t, evo)?;
    let det = m.monodromy.det_one_minus();
    if det.abs() < CAUSTIC_TOL {
        return Err(Error::ChordCaustic { det: det.abs() });
    }
    let centre = PhasePoint::new(((m.minus.vector() + m.plus.vector()) * 0.5).as_slice().to_vec())?;
    Ok(ChordActionPoint {
        value: m.value + skew_vectors(centre.vector(), xi.vector()),
        centre,
        marinov: m,
    })
}

/// Marinov centre action of the flow over a one-freedom grid.
pub fn marinov_centre_field(evo: &Evolution, grid: &Grid2, t: f64) -> Result<ActionField> {
    if evo.dof() != 1 {
        return Err(Error::Invalid("grid fields are one-freedom only".into()));
    }
    Ok(ActionField::from_fn(FieldKind::Centre, grid, t, |v| {
        let m = centre_action_marinov(evo, &PhasePoint::pq(v[0], v[1]), t, None).ok()?;
        let xi = m.chord();
        Some((m.value, j2([xi.p(0), xi.q(0)])))
    }))
}

/// Chord field `S′_x(ξ′, t)` of the reflection through `x` evolved by the Heisenberg flow.
pub fn evolve_reflection_field(evo: &Evolution, x: &PhasePoint, grid: &Grid2, t: f64) -> Result<ActionField> {
    let sample = sample_plane(evo, &Plane::Reflection(x.clone()), grid, t)?;
    Ok(ActionField::from_plane_sample(&sample))
}

/// Centre field `S′_ξ(x′, t)` of the translation by `ξ` evolved by the Heisenberg flow.
pub fn evolve_translation_field(evo: &Evolution, xi: &ChordVector, grid: &Grid2, t: f64) -> Result<ActionField> {
    let sample = sample_plane(evo, &Plane::Translation(xi.clone()), grid, t)?;
    Ok(ActionField::from_plane_sample(&sample))
}

const LEGENDRE_TOL: f64 = 1e-12;
const LEGENDRE_MAX_ITER: usize = 30;
const HESSIAN_DEGENERACY: f64 = 1e-10;

/// Rejects fields whose Hessian vanishes: planes of constant gradient are
/// translations (or the identity) and have no dual generating function.
fn check_nondegenerate(field: &ActionField) -> Result<()> {
    let mut any = false;
    let mut first: Option<[f64; 2]> = None;
    let mut constant = true;
    for k in 0..field.grid.len() {
        if !field.mask[k] {
            continue;
        }
        let g = field.gradient[k];
        match first {
            None => first = Some(g),
            Some(f) => {
                if (f[0] - g[0]).abs() + (f[1] - g[1]).abs() > 1e-9 {
                    constant = false;
                }
            }
        }
        if let Some(h) = field.finite_difference_hessian(k) {
            any |= h.determinant().abs() > HESSIAN_DEGENERACY;
        }
    }
    if let (true, Some(g)) = (constant, first) {
        let c = [g[1], -g[0]];
        let what = match field.kind {
            FieldKind::Centre if c == [0.0, 0.0] => "identity transformation: the chord field is a delta at the origin".to_string(),
            FieldKind::Centre => format!("translation by ({}, {}): the chord field is a delta there", c[0], c[1]),
            FieldKind::Chord => format!("reflection through ({}, {}): the centre field is a delta there", c[0], c[1]),
        };
        return Err(Error::Degenerate(what));
    }
    if !any {
        return Err(Error::Degenerate("Hessian vanishes on every node".into()));
    }
    Ok(())
}

/// Legendre dual of a field onto `out_grid`.
///
/// For a centre field, each output chord `ξ` is matched to the centre with
/// `∇S(x) = Jξ` and assigned `S(x) + x∧ξ`; for a chord field, each output
/// centre `x` is matched to the chord with `∇S(ξ) = Jx` and assigned
/// `S(ξ) − x∧ξ`. Nodes whose stationary point leaves the input grid or
/// sits on a degenerate Hessian are masked.
pub fn legendre(field: &ActionField, out_grid: &Grid2) -> Result<ActionField> {
    check_nondegenerate(field)?;
    let interp = field.interpolant();
    // Seed each output node from the input node whose conjugate lands nearest.
    let mut seed: Vec<Option<(usize, f64)>> = vec![None; out_grid.len()];
    for k in 0..field.grid.len() {
        let Some(c) = field.conjugate(k) else { continue };
        let Some(o) = out_grid.nearest(c) else { continue };
        let p = out_grid.point(o);
        let d = (p[0] - c[0]).hypot(p[1] - c[1]);
        if seed[o].is_none_or(|(_, best)| d < best) {
            seed[o] = Some((k, d));
        }
    }
    let seed_for = |o: usize| -> Option<usize> {
        if let Some((k, _)) = seed[o] {
            return Some(k);
        }
        let (i, j) = out_grid.split(o);
        for r in 1..=4usize {
            let mut best: Option<(usize, f64)> = None;
            for a in i.saturating_sub(r)..=(i + r).min(out_grid.p.n - 1) {
                for b in j.saturating_sub(r)..=(j + r).min(out_grid.q.n - 1) {
                    if let Some((k, d)) = seed[out_grid.index(a, b)] {
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((k, d));
                        }
                    }
                }
            }
            if let Some((k, _)) = best {
                return Some(k);
            }
        }
        None
    };
    let solve = |target: [f64; 2]| -> Option<(f64, [f64; 2])> {
        let o = out_grid.nearest(target)?;
        let want = Vector2::new(-target[1], target[0]);
        let k0 = seed_for(o)?;
        let mut v = field.grid.point(k0);
        for _ in 0..LEGENDRE_MAX_ITER {
            let jet = interp.eval(v)?;
            let f = jet.gradient - want;
            if f.norm() < LEGENDRE_TOL * want.norm().max(1.0) {
                let value = jet.value + wedge(v, target);
                let grad = j2(v);
                return Some((value, grad));
            }
            if jet.hessian.determinant().abs() < HESSIAN_DEGENERACY {
                return None;
            }
            let step = jet.hessian.try_inverse()? * f;
            v = [v[0] - step[0], v[1] - step[1]];
        }
        None
    };
    let mut out = ActionField::from_fn(field.kind.dual(), out_grid, field.time, solve);
    out.single_branch = field.single_branch && out.mask.iter().all(|&m| m);
    Ok(out)
}

/// Which Hamilton-Jacobi equation a residual tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HjEquation {
    /// Centre action of the flow: `∂S/∂t + H(x + ξ/2) = 0`, `ξ = −J∇S`.
    Marinov,
    /// Heisenberg centre action: `∂S/∂t + H(x + ξ/2) − H(x − ξ/2) = 0`, `ξ = −J∇S`.
    HeisenbergCentre,
    /// Heisenberg chord action: same double Hamiltonian with `x = −J∇S`.
    HeisenbergChord,
    /// Chord action of the flow: `∂S/∂t + H(x + ξ/2) = 0`, `x = −J∇S`.
    SchroedingerChord,
}

impl HjEquation {
    pub fn field_kind(self) -> FieldKind {
        match self {
            HjEquation::Marinov | HjEquation::HeisenbergCentre => FieldKind::Centre,
            HjEquation::HeisenbergChord | HjEquation::SchroedingerChord => FieldKind::Chord,
        }
    }

    fn double_sided(self) -> bool {
        matches!(self, HjEquation::HeisenbergCentre | HjEquation::HeisenbergChord)
    }

    pub fn all() -> [HjEquation; 4] {
        [
            HjEquation::Marinov,
            HjEquation::HeisenbergCentre,
            HjEquation::HeisenbergChord,
            HjEquation::SchroedingerChord,
        ]
    }
}

/// Where the spatial gradient in a residual comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientSource {
    /// The gradient carried by the field (exact for characteristic fields).
    Stored,
    /// Central differences of the sampled values.
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct Residual {
    pub grid: Grid2,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    /// Largest `|residual|` over unmasked nodes at least one node from the edge.
    pub max_interior: f64,
    pub masked: usize,
}

/// `(S(t₊) − S(t₋)) / (t₊ − t₋)` nodewise; `NaN` where either is masked.
pub fn central_time_derivative(before: &ActionField, after: &ActionField) -> Result<Vec<f64>> {
    before.grid.same_as(&after.grid)?;
    if before.kind != after.kind {
        return Err(Error::Invalid("time derivative across different field kinds".into()));
    }
    let dt = after.time - before.time;
    if dt == 0.0 {
        return Err(Error::Invalid("time derivative needs two distinct times".into()));
    }
    Ok((0..before.grid.len())
        .map(|k| match (before.value(k), after.value(k)) {
            (Some(a), Some(b)) => (b - a) / dt,
            _ => f64::NAN,
        })
        .collect())
}

/// Pointwise residual of the selected Hamilton-Jacobi equation.
pub fn hj_residual(
    field: &ActionField,
    ds_dt: &[f64],
    h: &HamiltonianSpec,
    orientation: Orientation,
    which: HjEquation,
    gradient: GradientSource,
) -> Result<Residual> {
    if field.kind != which.field_kind() {
        return Err(Error::Invalid(format!("{which:?} needs a {:?} field", which.field_kind())));
    }
    if ds_dt.len() != field.grid.len() {
        return Err(Error::DimensionMismatch {
            expected: field.grid.len(),
            found: ds_dt.len(),
        });
    }
    if h.dof() != 1 {
        return Err(Error::Invalid("grid residuals are one-freedom only".into()));
    }
    let h = h.oriented(orientation);
    let grid = field.grid;
    let per_node: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !field.mask[k] || !ds_dt[k].is_finite() {
                return None;
            }
            let g = match gradient {
                GradientSource::Stored => field.gradient[k],
                GradientSource::FiniteDifference => field.finite_difference_gradient(k)?,
            };
            let node = grid.point(k);
            let conj = [g[1], -g[0]];
            let (x, xi) = match field.kind {
                FieldKind::Centre => (node, conj),
                FieldKind::Chord => (conj, node),
            };
            let plus = PhasePoint::pq(x[0] + 0.5 * xi[0], x[1] + 0.5 * xi[1]);
            let mut r = ds_dt[k] + h.value(&plus);
            if which.double_sided() {
                r -= h.value(&PhasePoint::pq(x[0] - 0.5 * xi[0], x[1] - 0.5 * xi[1]));
            }
            Some(r)
        })
        .collect();
    let mask: Vec<bool> = per_node.iter().map(|r| r.is_some()).collect();
    let values: Vec<f64> = per_node.iter().map(|r| r.unwrap_or(f64::NAN)).collect();
    let max_interior = (0..grid.len())
        .filter(|&k| mask[k] && grid.is_interior(k, 1))
        .map(|k| values[k].abs())
        .fold(0.0, f64::max);
    Ok(Residual {
        grid,
        masked: mask.iter().filter(|&&m| !m).count(),
        values,
        mask,
        max_interior,
    })
}

/// Hessian predicted by the tangent map: `2·cayley_centre(M)` for centre
/// fields, `½·cayley_chord(M)` for chord fields.
pub fn predicted_hessian(kind: FieldKind, m: &SymplecticMatrix) -> Result<DMatrix<f64>> {
    match kind {
        FieldKind::Centre => crate::symplectic::centre_action_hessian(m),
        FieldKind::Chord => crate::symplectic::chord_action_hessian(m),
    }
}

/// Convenience: the free coordinate of node `k` as a vector.
pub fn node_vector(grid: &Grid2, k: usize) -> DVector<f64> {
    DVector::from_row_slice(&grid.point(k))
}
