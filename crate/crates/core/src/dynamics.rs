//! Characteristic integration on single and double phase space.
//!
//! Every integration carries the state, its tangent map (monodromy) and an
//! action accumulator through one fixed-step classical RK4 scheme. The step is
//! chosen by repeated halving until two successive resolutions agree to the
//! configured tolerance.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{DoubleHamiltonian, HamiltonianSpec};
use crate::polynomial::PolyJet;
use crate::symplectic::{
    apply_j, canonical_j, ChordVector, DoublePhasePoint, PhasePoint, SymplecticMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Initial (or, with `adaptive = false`, the only) RK4 step.
    pub step: f64,
    /// Agreement required between successive halvings.
    pub tol: f64,
    pub max_halvings: u32,
    pub adaptive: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            tol: 1e-9,
            max_halvings: 12,
            adaptive: true,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(step: f64) -> Self {
        Self {
            step,
            adaptive: false,
            ..Self::default()
        }
    }
}

/// Which generating-function increment the double flow accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionForm {
    /// `dS = y·dx − ℍ dt`, for fields `S(x)` with `∂S/∂x = y`.
    Centre,
    /// `dS = −x·dy − ℍ dt`, for fields `S(ξ)` with `∂S/∂ξ = Jx`.
    Chord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleKind {
    Single,
    Double,
}

/// A time-sampled characteristic.
///
/// Single bundles store `x = (p, q)` and accumulate the orbit integral
/// `∫ p·dq`. Double bundles store canonical `(x, y)` with `y = Jξ`, a `4L×4L`
/// monodromy in those coordinates, and the increment selected by [`ActionForm`].
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    pub kind: BundleKind,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub monodromy: Vec<DMatrix<f64>>,
    pub action: Vec<f64>,
    pub energy: Vec<f64>,
    pub step: f64,
}

impl TrajectoryBundle {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("non-empty bundle")
    }

    pub fn final_monodromy(&self) -> &DMatrix<f64> {
        self.monodromy.last().expect("non-empty bundle")
    }

    pub fn final_action(&self) -> f64 {
        *self.action.last().expect("non-empty bundle")
    }

    pub fn point(&self, k: usize) -> Result<PhasePoint> {
        if self.kind != BundleKind::Single {
            return Err(Error::Invalid("point() needs a single-space bundle".into()));
        }
        PhasePoint::new(self.states[k].as_slice().to_vec())
    }

    pub fn double_point(&self, k: usize) -> Result<DoublePhasePoint> {
        if self.kind != BundleKind::Double {
            return Err(Error::Invalid("double_point() needs a double-space bundle".into()));
        }
        DoublePhasePoint::from_canonical(&self.states[k])
    }

    /// Largest `‖MᵀJM − J‖` over the samples.
    pub fn max_symplectic_defect(&self) -> f64 {
        self.monodromy
            .iter()
            .map(|m| SymplecticMatrix::new(m.clone()).map_or(f64::INFINITY, |s| s.symplectic_defect()))
            .fold(0.0, f64::max)
    }

    /// Largest `|E(t) − E(0)| / max(1, |E(0)|)`.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let scale = e0.abs().max(1.0);
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Cubic Hermite interpolation of the state at any `t` inside the sampled range.
    pub fn state_at(&self, t: f64) -> Result<DVector<f64>> {
        let n = self.times.len();
        if n == 1 {
            if t == self.times[0] {
                return Ok(self.states[0].clone());
            }
            return Err(Error::Invalid(format!("time {t} outside a one-sample bundle")));
        }
        let (lo, hi) = (
            self.times[0].min(self.times[n - 1]),
            self.times[0].max(self.times[n - 1]),
        );
        if !(lo..=hi).contains(&t) {
            return Err(Error::Invalid(format!("time {t} outside [{lo}, {hi}]")));
        }
        let mut k = 0;
        while k + 2 < n && (self.times[k + 1] - t) * (self.times[1] - self.times[0]) < 0.0 {
            k += 1;
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok(&self.states[k] * h00
            + &self.velocities[k] * (h10 * h)
            + &self.states[k + 1] * h01
            + &self.velocities[k + 1] * (h11 * h))
    }
}

/// An autonomous flow with its variational equation and action integrand.
pub(crate) trait Flow: Sync {
    fn dim(&self) -> usize;
    fn field(&self, z: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64>;
    fn action_rate(&self, z: &DVector<f64>, zdot: &DVector<f64>) -> f64;
    fn energy(&self, z: &DVector<f64>) -> f64;
    fn kind(&self) -> BundleKind;
}

pub(crate) struct SingleFlow {
    jet: PolyJet,
    j: DMatrix<f64>,
}

impl SingleFlow {
    pub(crate) fn new(h: &HamiltonianSpec) -> Self {
        Self {
            jet: PolyJet::new(h.polynomial()),
            j: canonical_j(h.dof()),
        }
    }
}

impl Flow for SingleFlow {
    fn dim(&self) -> usize {
        self.j.nrows()
    }
    fn field(&self, z: &DVector<f64>) -> DVector<f64> {
        apply_j(&self.jet.gradient(z.as_slice()))
    }
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        &self.j * self.jet.hessian(z.as_slice())
    }
    fn action_rate(&self, z: &DVector<f64>, zdot: &DVector<f64>) -> f64 {
        let n = z.len() / 2;
        (0..n).map(|i| z[i] * zdot[n + i]).sum()
    }
    fn energy(&self, z: &DVector<f64>) -> f64 {
        self.jet.eval(z.as_slice())
    }
    fn kind(&self) -> BundleKind {
        BundleKind::Single
    }
}

pub(crate) struct DoubleFlow<'a> {
    hh: &'a DoubleHamiltonian,
    form: ActionForm,
}

impl<'a> DoubleFlow<'a> {
    pub(crate) fn new(hh: &'a DoubleHamiltonian, form: ActionForm) -> Self {
        Self { hh, form }
    }
}

impl Flow for DoubleFlow<'_> {
    fn dim(&self) -> usize {
        4 * self.hh.dof()
    }
    fn field(&self, z: &DVector<f64>) -> DVector<f64> {
        self.hh.vector_field(z)
    }
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        // d/dz (∂ℍ/∂y, −∂ℍ/∂x)
        let h = self.hh.hessian_canonical(z);
        let n = z.len() / 2;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| if i < n { h[(n + i, j)] } else { -h[(i - n, j)] })
    }
    fn action_rate(&self, z: &DVector<f64>, zdot: &DVector<f64>) -> f64 {
        let n = z.len() / 2;
        let hval = self.hh.value_canonical(z);
        let rate = match self.form {
            ActionForm::Centre => (0..n).map(|i| z[n + i] * zdot[i]).sum::<f64>(),
            ActionForm::Chord => -(0..n).map(|i| z[i] * zdot[n + i]).sum::<f64>(),
        };
        rate - hval
    }
    fn energy(&self, z: &DVector<f64>) -> f64 {
        self.hh.value_canonical(z)
    }
    fn kind(&self) -> BundleKind {
        BundleKind::Double
    }
}

struct Aug {
    z: DVector<f64>,
    m: DMatrix<f64>,
    s: f64,
}

fn derivative(flow: &dyn Flow, a: &Aug) -> (DVector<f64>, DMatrix<f64>, f64) {
    let zdot = flow.field(&a.z);
    let mdot = flow.jacobian(&a.z) * &a.m;
    let sdot = flow.action_rate(&a.z, &zdot);
    (zdot, mdot, sdot)
}

fn rk4_step(flow: &dyn Flow, a: &Aug, h: f64) -> Aug {
    let shifted = |k: &(DVector<f64>, DMatrix<f64>, f64), c: f64| Aug {
        z: &a.z + &k.0 * c,
        m: &a.m + &k.1 * c,
        s: a.s + k.2 * c,
    };
    let k1 = derivative(flow, a);
    let k2 = derivative(flow, &shifted(&k1, 0.5 * h));
    let k3 = derivative(flow, &shifted(&k2, 0.5 * h));
    let k4 = derivative(flow, &shifted(&k3, h));
    let w = h / 6.0;
    Aug {
        z: &a.z + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * w,
        m: &a.m + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * w,
        s: a.s + (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) * w,
    }
}

fn check_grid(t_grid: &[f64]) -> Result<f64> {
    if t_grid.is_empty() {
        return Err(Error::Invalid("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("time grid"));
    }
    let dir = if t_grid.len() > 1 && t_grid[1] < t_grid[0] {
        -1.0
    } else {
        1.0
    };
    if t_grid.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
        return Err(Error::Invalid("time grid must be strictly monotone".into()));
    }
    Ok(dir)
}

fn run_fixed(flow: &dyn Flow, z0: &DVector<f64>, t_grid: &[f64], h: f64) -> Result<TrajectoryBundle> {
    let dim = flow.dim();
    let mut a = Aug {
        z: z0.clone(),
        m: DMatrix::identity(dim, dim),
        s: 0.0,
    };
    let mut out = TrajectoryBundle {
        kind: flow.kind(),
        times: Vec::with_capacity(t_grid.len()),
        states: Vec::with_capacity(t_grid.len()),
        velocities: Vec::with_capacity(t_grid.len()),
        monodromy: Vec::with_capacity(t_grid.len()),
        action: Vec::with_capacity(t_grid.len()),
        energy: Vec::with_capacity(t_grid.len()),
        step: h,
    };
    let push = |a: &Aug, t: f64, out: &mut TrajectoryBundle| {
        out.times.push(t);
        out.velocities.push(flow.field(&a.z));
        out.states.push(a.z.clone());
        out.monodromy.push(a.m.clone());
        out.action.push(a.s);
        out.energy.push(flow.energy(&a.z));
    };
    push(&a, t_grid[0], &mut out);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let n = (span.abs() / h).ceil().max(1.0) as usize;
        let dt = span / n as f64;
        for i in 0..n {
            a = rk4_step(flow, &a, dt);
            if !a.z.iter().all(|v| v.is_finite()) || !a.m.iter().all(|v| v.is_finite()) {
                return Err(Error::BlowUp {
                    time: w[0] + dt * (i + 1) as f64,
                });
            }
        }
        push(&a, w[1], &mut out);
    }
    Ok(out)
}

fn endpoint_change(a: &TrajectoryBundle, b: &TrajectoryBundle) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..a.len() {
        let scale = a.states[k].norm().max(1.0);
        worst = worst.max((&a.states[k] - &b.states[k]).norm() / scale);
        let mscale = a.monodromy[k].norm().max(1.0);
        worst = worst.max((&a.monodromy[k] - &b.monodromy[k]).norm() / mscale);
        worst = worst.max((a.action[k] - b.action[k]).abs() / a.action[k].abs().max(1.0));
    }
    worst
}

pub(crate) fn run(
    flow: &dyn Flow,
    z0: &DVector<f64>,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryBundle> {
    check_grid(t_grid)?;
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(Error::Invalid(format!("integrator step must be positive, got {}", cfg.step)));
    }
    if z0.len() != flow.dim() {
        return Err(Error::DimensionMismatch {
            expected: flow.dim(),
            found: z0.len(),
        });
    }
    if !cfg.adaptive {
        return run_fixed(flow, z0, t_grid, cfg.step);
    }
    let mut h = cfg.step;
    let mut coarse = run_fixed(flow, z0, t_grid, h)?;
    let mut change = f64::INFINITY;
    for _ in 0..=cfg.max_halvings {
        h *= 0.5;
        let fine = run_fixed(flow, z0, t_grid, h)?;
        change = endpoint_change(&coarse, &fine);
        if change < cfg.tol {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::StepControl {
        change,
        halvings: cfg.max_halvings as usize,
    })
}

/// Integrates Hamilton's equations with the tangent map alongside.
pub fn integrate_single(
    h: &HamiltonianSpec,
    x0: &PhasePoint,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryBundle> {
    if x0.dof() != h.dof() {
        return Err(Error::DimensionMismatch {
            expected: 2 * h.dof(),
            found: x0.dim(),
        });
    }
    run(&SingleFlow::new(h), x0.vector(), t_grid, cfg)
}

/// Integrates the double-phase-space characteristic through `X0`.
pub fn integrate_double(
    hh: &DoubleHamiltonian,
    x0: &DoublePhasePoint,
    t_grid: &[f64],
    form: ActionForm,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryBundle> {
    if x0.dof() != hh.dof() {
        return Err(Error::DimensionMismatch {
            expected: 4 * hh.dof(),
            found: 2 * x0.centre.dim(),
        });
    }
    run(&DoubleFlow::new(hh, form), &x0.to_canonical(), t_grid, cfg)
}

/// Accumulated centre-form action increments along the double characteristic.
pub fn accumulate_centre_action(
    hh: &DoubleHamiltonian,
    x0: &DoublePhasePoint,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    Ok(integrate_double(hh, x0, t_grid, ActionForm::Centre, cfg)?.action)
}

/// Accumulated chord-form action increments along the double characteristic.
pub fn accumulate_chord_action(
    hh: &DoubleHamiltonian,
    x0: &DoublePhasePoint,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    Ok(integrate_double(hh, x0, t_grid, ActionForm::Chord, cfg)?.action)
}

/// Runs independent single integrations in parallel; output order follows input order.
pub fn integrate_many_single(
    h: &HamiltonianSpec,
    seeds: &[PhasePoint],
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Vec<Result<TrajectoryBundle>> {
    let flow = SingleFlow::new(h);
    seeds
        .par_iter()
        .map(|x0| run(&flow, x0.vector(), t_grid, cfg))
        .collect()
}

/// Runs independent double integrations in parallel; output order follows input order.
pub fn integrate_many_double(
    hh: &DoubleHamiltonian,
    seeds: &[DoublePhasePoint],
    t_grid: &[f64],
    form: ActionForm,
    cfg: &IntegratorConfig,
) -> Vec<Result<TrajectoryBundle>> {
    let flow = DoubleFlow::new(hh, form);
    seeds
        .par_iter()
        .map(|x0| run(&flow, &x0.to_canonical(), t_grid, cfg))
        .collect()
}

/// A canonical map of single phase space that can report its tangent map.
pub trait CanonicalMap: Sync {
    fn dof(&self) -> usize;
    /// Image of `x` and the tangent map there.
    fn apply(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>;
}

pub struct IdentityMap(pub usize);

impl CanonicalMap for IdentityMap {
    fn dof(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Ok((x.clone(), DMatrix::identity(x.len(), x.len())))
    }
}

pub struct TranslationMap(pub ChordVector);

impl CanonicalMap for TranslationMap {
    fn dof(&self) -> usize {
        self.0.dof()
    }
    fn apply(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Ok((x + self.0.vector(), DMatrix::identity(x.len(), x.len())))
    }
}

/// Affine symplectic map `x ↦ Mx + c`. Rotations are `M = rotation(θ)`, `c = 0`.
pub struct LinearMap {
    pub m: SymplecticMatrix,
    pub shift: DVector<f64>,
}

impl LinearMap {
    pub fn rotation(theta: f64) -> Self {
        Self {
            m: SymplecticMatrix::rotation(theta),
            shift: DVector::zeros(2),
        }
    }
}

impl CanonicalMap for LinearMap {
    fn dof(&self) -> usize {
        self.m.dof()
    }
    fn apply(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Ok((self.m.matrix() * x + &self.shift, self.m.matrix().clone()))
    }
}

/// The time-`t` flow of a Hamiltonian, evaluated by integration.
pub struct FlowMap {
    flow: SingleFlow,
    dof: usize,
    t: f64,
    cfg: IntegratorConfig,
}

impl FlowMap {
    pub fn new(h: &HamiltonianSpec, t: f64, cfg: IntegratorConfig) -> Self {
        Self {
            flow: SingleFlow::new(h),
            dof: h.dof(),
            t,
            cfg,
        }
    }
}

impl CanonicalMap for FlowMap {
    fn dof(&self) -> usize {
        self.dof
    }
    fn apply(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if self.t == 0.0 {
            return Ok((x.clone(), DMatrix::identity(x.len(), x.len())));
        }
        let b = run(&self.flow, x, &[0.0, self.t], &self.cfg)?;
        Ok((b.final_state().clone(), b.final_monodromy().clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub point: PhasePoint,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The Jacobian at the solution is singular: the solution belongs to a
    /// continuous family (or sits on a caustic).
    pub degenerate: bool,
}

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 50;
const DEGENERACY_TOL: f64 = 1e-10;

fn newton(
    c: &dyn CanonicalMap,
    guess: &DVector<f64>,
    residual: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
    jac: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
) -> Result<FixedPointResult> {
    let mut z = guess.clone();
    for it in 0..=FIXED_POINT_MAX_ITER {
        let (cz, m) = c.apply(&z)?;
        let f = residual(&z, &cz);
        let r = f.norm();
        let jm = jac(&m);
        let det = jm.determinant();
        if r < FIXED_POINT_TOL {
            return Ok(FixedPointResult {
                point: PhasePoint::new(z.as_slice().to_vec())?,
                residual: r,
                iterations: it,
                converged: true,
                degenerate: det.abs() < DEGENERACY_TOL,
            });
        }
        if it == FIXED_POINT_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: r,
            });
        }
        let step = jm.lu().solve(&f).ok_or(Error::SingularJacobian { det })?;
        if det.abs() < DEGENERACY_TOL {
            return Err(Error::SingularJacobian { det });
        }
        z -= step;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("fixed-point iterate"));
        }
    }
    unreachable!("loop returns on the last iteration")
}

/// Finds `x₋` with `R_x(C(x₋)) = x₋`, i.e. the chord of `C` centred on `x`.
pub fn solve_centre_fixed_point(
    c: &dyn CanonicalMap,
    x: &PhasePoint,
    guess: &PhasePoint,
) -> Result<FixedPointResult> {
    let centre = x.vector().clone() * 2.0;
    newton(
        c,
        guess.vector(),
        |z, cz| cz + z - &centre,
        |m| m + DMatrix::identity(m.nrows(), m.ncols()),
    )
}

/// Finds `x₋` with `T_{−ξ}(C(x₋)) = x₋`, i.e. `C(x₋) − x₋ = ξ`.
pub fn solve_chord_fixed_point(
    c: &dyn CanonicalMap,
    xi: &ChordVector,
    guess: &PhasePoint,
) -> Result<FixedPointResult> {
    let xi = xi.vector().clone();
    newton(
        c,
        guess.vector(),
        |z, cz| cz - z - &xi,
        |m| m - DMatrix::identity(m.nrows(), m.ncols()),
    )
}
