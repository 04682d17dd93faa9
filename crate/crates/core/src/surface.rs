//! Evolved Lagrangian planes in double phase space.
//!
//! A reflection through `x₀` is the plane `{centre = x₀}` and a translation by
//! `ξ₀` is the plane `{chord = ξ₀}`. Under the Heisenberg double flow each
//! plane is carried to a curved surface; a point of the evolved surface is
//! located by shooting: Newton iteration on the free initial coordinate until
//! the image lands on the requested free coordinate at time `t`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::conventions::Orientation;
use crate::dynamics::{run, ActionForm, DoubleFlow, IntegratorConfig, TrajectoryBundle};
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::hamiltonian::{DoubleHamiltonian, HamiltonianSpec};
use crate::symplectic::{canonical_j, skew_vectors, ChordVector, DoublePhasePoint, PhasePoint, SymplecticMatrix};

/// A Hamiltonian together with the orientation and integrator used to evolve it.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub hamiltonian: HamiltonianSpec,
    pub orientation: Orientation,
    pub integrator: IntegratorConfig,
}

impl Evolution {
    pub fn new(hamiltonian: HamiltonianSpec) -> Self {
        Self {
            hamiltonian,
            orientation: Orientation::default(),
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_integrator(mut self, integrator: IntegratorConfig) -> Self {
        self.integrator = integrator;
        self
    }

    /// The Hamiltonian actually driving the flow (sign-flipped for `Backward`).
    pub fn effective(&self) -> HamiltonianSpec {
        self.hamiltonian.oriented(self.orientation)
    }

    pub fn double(&self) -> DoubleHamiltonian {
        self.effective().heisenberg_double()
    }

    pub fn hbar(&self) -> f64 {
        self.hamiltonian.hbar()
    }

    pub fn dof(&self) -> usize {
        self.hamiltonian.dof()
    }
}

/// The initial Lagrangian plane of an evolved reflection or translation.
#[derive(Debug, Clone, PartialEq)]
pub enum Plane {
    /// `{centre = x₀}`, generated by `S(ξ) = x₀∧ξ`; free coordinate is the chord.
    Reflection(PhasePoint),
    /// `{chord = ξ₀}`, generated by `S(x) = −x∧ξ₀`; free coordinate is the centre.
    Translation(ChordVector),
}

impl Plane {
    pub fn dof(&self) -> usize {
        match self {
            Plane::Reflection(x) => x.dof(),
            Plane::Translation(xi) => xi.dof(),
        }
    }

    fn form(&self) -> ActionForm {
        match self {
            Plane::Reflection(_) => ActionForm::Chord,
            Plane::Translation(_) => ActionForm::Centre,
        }
    }

    /// Initial double point with free coordinate `u`.
    pub fn seed(&self, u: &DVector<f64>) -> Result<DoublePhasePoint> {
        match self {
            Plane::Reflection(x) => DoublePhasePoint::new(x.clone(), ChordVector::new(u.as_slice().to_vec())?),
            Plane::Translation(xi) => DoublePhasePoint::new(PhasePoint::new(u.as_slice().to_vec())?, xi.clone()),
        }
    }

    /// Generating function on the initial plane.
    pub fn initial_action(&self, u: &DVector<f64>) -> f64 {
        match self {
            Plane::Reflection(x) => skew_vectors(x.vector(), u),
            Plane::Translation(xi) => -skew_vectors(u, xi.vector()),
        }
    }

    fn free_of(&self, p: &DoublePhasePoint) -> DVector<f64> {
        match self {
            Plane::Reflection(_) => p.chord.vector().clone(),
            Plane::Translation(_) => p.centre.vector().clone(),
        }
    }

    fn caustic(&self, det: f64) -> Error {
        match self {
            Plane::Reflection(_) => Error::ChordCaustic { det },
            Plane::Translation(_) => Error::CentreCaustic { det },
        }
    }
}

/// One point of an evolved plane, with its tangent data.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub initial: DoublePhasePoint,
    pub image: DoublePhasePoint,
    /// Generating function at the image: `S(ξ′)` for reflections, `S(x′)` for translations.
    pub action: f64,
    /// `∂x′/∂u` for the free initial coordinate `u`.
    pub centre_jacobian: DMatrix<f64>,
    /// `∂ξ′/∂u`.
    pub chord_jacobian: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl SurfacePoint {
    /// Tangent map `M′` of the evolved transformation at this chord,
    /// `(P + Q/2)(P − Q/2)⁻¹` with `P = ∂x′/∂u`, `Q = ∂ξ′/∂u`.
    pub fn tangent_map(&self) -> Result<SymplecticMatrix> {
        let p = &self.centre_jacobian;
        let q = &self.chord_jacobian * 0.5;
        let minus = p - &q;
        let inv = minus
            .clone()
            .try_inverse()
            .ok_or(Error::SingularJacobian { det: minus.determinant() })?;
        SymplecticMatrix::new((p + &q) * inv)
    }

    /// Free-coordinate Jacobian: `Q` for reflections, `P` for translations.
    pub fn free_jacobian(&self, plane: &Plane) -> &DMatrix<f64> {
        match plane {
            Plane::Reflection(_) => &self.chord_jacobian,
            Plane::Translation(_) => &self.centre_jacobian,
        }
    }

    /// Gradient of the generating function with respect to the free coordinate:
    /// `Jx′` for reflections, `Jξ′` for translations.
    pub fn action_gradient(&self, plane: &Plane) -> DVector<f64> {
        let v = match plane {
            Plane::Reflection(_) => self.image.centre.vector(),
            Plane::Translation(_) => self.image.chord.vector(),
        };
        crate::symplectic::apply_j(v)
    }
}

/// Monodromy of the double flow in `(x, ξ)` coordinates.
pub(crate) fn centre_chord_monodromy(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows() / 2;
    let j = canonical_j(n / 2);
    let mut to = DMatrix::identity(2 * n, 2 * n);
    to.view_mut((n, n), (n, n)).copy_from(&j);
    let mut from = DMatrix::identity(2 * n, 2 * n);
    from.view_mut((n, n), (n, n)).copy_from(&(-&j));
    from * d * to
}

pub const SHOOT_TOL: f64 = 1e-12;
pub const SHOOT_MAX_ITER: usize = 40;
const SHOOT_DET_TOL: f64 = 1e-10;
const MAX_CONTINUATION: usize = 64;

fn integrate_seed(hh: &DoubleHamiltonian, plane: &Plane, u: &DVector<f64>, t_grid: &[f64], cfg: &IntegratorConfig) -> Result<TrajectoryBundle> {
    let seed = plane.seed(u)?;
    run(&DoubleFlow::new(hh, plane.form()), &seed.to_canonical(), t_grid, cfg)
}

fn evaluate(hh: &DoubleHamiltonian, plane: &Plane, u: &DVector<f64>, t: f64, cfg: &IntegratorConfig) -> Result<SurfacePoint> {
    let initial = plane.seed(u)?;
    let (image, action, g) = if t == 0.0 {
        let n = 2 * plane.dof();
        (initial.clone(), 0.0, DMatrix::identity(2 * n, 2 * n))
    } else {
        let b = integrate_seed(hh, plane, u, &[0.0, t], cfg)?;
        (
            DoublePhasePoint::from_canonical(b.final_state())?,
            b.final_action(),
            centre_chord_monodromy(b.final_monodromy()),
        )
    };
    let n = 2 * plane.dof();
    let col = match plane {
        Plane::Reflection(_) => n,
        Plane::Translation(_) => 0,
    };
    Ok(SurfacePoint {
        centre_jacobian: g.view((0, col), (n, n)).into_owned(),
        chord_jacobian: g.view((n, col), (n, n)).into_owned(),
        action: plane.initial_action(u) + action,
        initial,
        image,
        residual: f64::INFINITY,
        iterations: 0,
    })
}

fn newton(hh: &DoubleHamiltonian, plane: &Plane, target: &DVector<f64>, t: f64, guess: &DVector<f64>, cfg: &IntegratorConfig) -> Result<SurfacePoint> {
    let mut u = guess.clone();
    let scale = target.norm().max(1.0);
    let mut last = f64::INFINITY;
    for it in 0..=SHOOT_MAX_ITER {
        let mut sp = evaluate(hh, plane, &u, t, cfg)?;
        let f = plane.free_of(&sp.image) - target;
        let r = f.norm();
        // Converged, or stalled at round-off after getting close.
        if r < SHOOT_TOL * scale || (r < 1e3 * SHOOT_TOL * scale && r >= last) {
            sp.residual = r;
            sp.iterations = it;
            let det = sp.free_jacobian(plane).determinant();
            if det.abs() < SHOOT_DET_TOL {
                return Err(plane.caustic(det.abs()));
            }
            return Ok(sp);
        }
        last = r;
        let jac = sp.free_jacobian(plane);
        let det = jac.determinant();
        if det.abs() < SHOOT_DET_TOL {
            return Err(plane.caustic(det.abs()));
        }
        let step = jac.clone().lu().solve(&f).ok_or(Error::SingularJacobian { det })?;
        u -= step;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("shooting iterate"));
        }
    }
    Err(Error::NoConvergence {
        iterations: SHOOT_MAX_ITER,
        residual: last,
    })
}

/// Point of the plane evolved to time `t` whose free coordinate equals `target`.
///
/// Newton starts from `guess` (default: `target`); when that fails the
/// solution is continued in time from `t = 0` with successively finer steps.
pub fn shoot(
    evo: &Evolution,
    plane: &Plane,
    target: &DVector<f64>,
    t: f64,
    guess: Option<&DVector<f64>>,
) -> Result<SurfacePoint> {
    shoot_with(&evo.double(), plane, target, t, guess, &evo.integrator)
}

pub(crate) fn shoot_with(
    hh: &DoubleHamiltonian,
    plane: &Plane,
    target: &DVector<f64>,
    t: f64,
    guess: Option<&DVector<f64>>,
    cfg: &IntegratorConfig,
) -> Result<SurfacePoint> {
    if target.len() != 2 * plane.dof() || plane.dof() != hh.dof() {
        return Err(Error::DimensionMismatch {
            expected: 2 * hh.dof(),
            found: target.len(),
        });
    }
    let g0 = guess.cloned().unwrap_or_else(|| target.clone());
    let first = match newton(hh, plane, target, t, &g0, cfg) {
        Ok(sp) => return Ok(sp),
        Err(e) if e.is_caustic() => return Err(e),
        Err(e) => e,
    };
    let mut steps = 2;
    while steps <= MAX_CONTINUATION {
        let mut u = target.clone();
        let mut ok = None;
        for k in 1..=steps {
            match newton(hh, plane, target, t * k as f64 / steps as f64, &u, cfg) {
                Ok(sp) => {
                    u = plane.free_of(&sp.initial);
                    ok = Some(sp);
                }
                Err(e) if e.is_caustic() => return Err(e),
                Err(_) => {
                    ok = None;
                    break;
                }
            }
        }
        if let Some(sp) = ok {
            return Ok(sp);
        }
        steps *= 2;
    }
    Err(first)
}

/// Smallest RK4 step passing the halving test on every seed of the plane.
///
/// Shooting then runs at that fixed step, so each Newton iteration costs one
/// integration.
pub fn calibrate_step(evo: &Evolution, plane: &Plane, seeds: &[DVector<f64>], t: f64) -> Result<IntegratorConfig> {
    if t == 0.0 || !evo.integrator.adaptive {
        return Ok(evo.integrator);
    }
    let hh = evo.double();
    let mut step = evo.integrator.step;
    for u in seeds {
        let b = integrate_seed(&hh, plane, u, &[0.0, t], &evo.integrator)?;
        step = step.min(b.step);
    }
    Ok(IntegratorConfig {
        step,
        adaptive: false,
        ..evo.integrator
    })
}

/// The characteristic through the plane point with free coordinate `u`, sampled on `t_grid`.
pub fn trace_characteristic(evo: &Evolution, plane: &Plane, u: &DVector<f64>, t_grid: &[f64]) -> Result<TrajectoryBundle> {
    integrate_seed(&evo.double(), plane, u, t_grid, &evo.integrator)
}

/// Free-coordinate Jacobian along a traced characteristic.
pub fn free_jacobian_history(plane: &Plane, bundle: &TrajectoryBundle) -> Vec<DMatrix<f64>> {
    let n = 2 * plane.dof();
    let (row, col) = match plane {
        Plane::Reflection(_) => (n, n),
        Plane::Translation(_) => (0, 0),
    };
    bundle
        .monodromy
        .iter()
        .map(|d| centre_chord_monodromy(d).view((row, col), (n, n)).into_owned())
        .collect()
}

/// An evolved plane sampled on a grid of its free coordinate.
#[derive(Debug, Clone)]
pub struct PlaneSample {
    pub plane: Plane,
    pub grid: Grid2,
    pub time: f64,
    /// `None` where shooting failed; the reason is in `failures`.
    pub points: Vec<Option<SurfacePoint>>,
    pub failures: Vec<(usize, String)>,
    /// Nodes whose failure was a caustic.
    pub caustic: Vec<bool>,
    pub integrator: IntegratorConfig,
}

impl PlaneSample {
    pub fn valid_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }

    /// Every node solved and the free Jacobian keeps one sign: the evolved
    /// plane projects one-to-one onto the grid.
    pub fn single_branch(&self) -> bool {
        let mut sign = 0.0;
        for sp in &self.points {
            let Some(sp) = sp else { return false };
            let d = sp.free_jacobian(&self.plane).determinant().signum();
            if sign == 0.0 {
                sign = d;
            } else if d != sign {
                return false;
            }
        }
        true
    }
}

/// Shoots every node of a one-freedom grid in parallel (output in node order).
pub fn sample_plane(evo: &Evolution, plane: &Plane, grid: &Grid2, t: f64) -> Result<PlaneSample> {
    if evo.dof() != 1 || plane.dof() != 1 {
        return Err(Error::Invalid("grid sampling is one-freedom only".into()));
    }
    let corners: Vec<DVector<f64>> = [(0, 0), (grid.p.n - 1, 0), (0, grid.q.n - 1), (grid.p.n - 1, grid.q.n - 1)]
        .iter()
        .map(|&(i, j)| DVector::from_row_slice(&grid.point(grid.index(i, j))))
        .collect();
    let cfg = calibrate_step(evo, plane, &corners, t)?;
    let hh = evo.double();
    // Rows in parallel; along a row each node starts from a Newton step off its
    // solved neighbour.
    let rows: Vec<Vec<(usize, Result<SurfacePoint>)>> = (0..grid.p.n)
        .into_par_iter()
        .map(|i| {
            let mut prev: Option<(DVector<f64>, SurfacePoint)> = None;
            (0..grid.q.n)
                .map(|j| {
                    let k = grid.index(i, j);
                    let target = DVector::from_row_slice(&grid.point(k));
                    let guess = prev.as_ref().and_then(|(t0, sp)| {
                        let du = sp.free_jacobian(plane).clone().lu().solve(&(&target - t0))?;
                        Some(plane.free_of(&sp.initial) + du)
                    });
                    let r = shoot_with(&hh, plane, &target, t, guess.as_ref(), &cfg);
                    prev = r.as_ref().ok().map(|sp| (target, sp.clone()));
                    (k, r)
                })
                .collect()
        })
        .collect();
    let mut solved: Vec<Option<Result<SurfacePoint>>> = (0..grid.len()).map(|_| None).collect();
    for (k, r) in rows.into_iter().flatten() {
        solved[k] = Some(r);
    }
    let solved = solved.into_iter().map(|r| r.expect("every node visited"));
    let mut points = Vec::with_capacity(solved.len());
    let mut failures = Vec::new();
    let mut caustic = vec![false; solved.len()];
    for (k, r) in solved.into_iter().enumerate() {
        match r {
            Ok(sp) => points.push(Some(sp)),
            Err(e) => {
                caustic[k] = e.is_caustic();
                failures.push((k, e.to_string()));
                points.push(None);
            }
        }
    }
    Ok(PlaneSample {
        plane: plane.clone(),
        grid: *grid,
        time: t,
        points,
        failures,
        caustic,
        integrator: cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::cubic::CubicClosedForm;

    fn cubic() -> Evolution {
        Evolution::new(HamiltonianSpec::cubic(1.0))
    }

    #[test]
    fn reflection_plane_reproduces_cubic_action() {
        let evo = cubic();
        let x = PhasePoint::pq(1.0, 0.0);
        let plane = Plane::Reflection(x.clone());
        let cf = CubicClosedForm::new(1.0, 1.0);
        for &(xp, xq, t) in &[(2.0, 1.0, 1.0), (-1.5, 3.0, 2.0), (0.3, -4.0, 0.5)] {
            let target = DVector::from_vec(vec![xp, xq]);
            let sp = shoot(&evo, &plane, &target, t, None).unwrap();
            let want = cf.reflection_action(&x, &ChordVector::pq(xp, xq), t);
            assert!((sp.action - want).abs() < 1e-9, "{} vs {want}", sp.action);
            assert!((sp.free_jacobian(&plane).determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tangent_map_is_minus_identity_at_start() {
        let evo = cubic();
        let plane = Plane::Reflection(PhasePoint::pq(0.5, 0.2));
        let sp = shoot(&evo, &plane, &DVector::from_vec(vec![1.0, 1.0]), 0.0, None).unwrap();
        let m = sp.tangent_map().unwrap();
        assert!((m.matrix() + DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn translation_plane_of_oscillator_rotates_chord() {
        let evo = Evolution::new(HamiltonianSpec::harmonic());
        let xi = ChordVector::pq(0.5, 0.0);
        let plane = Plane::Translation(xi);
        let target = DVector::from_vec(vec![0.3, -0.2]);
        let sp = shoot(&evo, &plane, &target, 1.0, None).unwrap();
        let r = SymplecticMatrix::rotation(1.0);
        let want = r.matrix() * DVector::from_vec(vec![0.5, 0.0]);
        assert!((sp.image.chord.vector() - want).norm() < 1e-9);
        assert!((sp.centre_jacobian.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn continuation_reaches_far_targets() {
        let evo = Evolution::new(HamiltonianSpec::quartic());
        let plane = Plane::Reflection(PhasePoint::pq(0.4, -0.3));
        let target = DVector::from_vec(vec![1.2, -0.8]);
        let sp = shoot(&evo, &plane, &target, 0.5, Some(&DVector::from_vec(vec![-3.0, 3.0]))).unwrap();
        assert!((sp.image.chord.vector() - &target).norm() < 1e-10);
    }
}
