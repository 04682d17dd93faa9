//! Semiclassical kernels with amplitude determinants, Maslov offsets and
//! caustic tracking.
//!
//! Normalization: the Weyl propagator is the symbol `tr(2R̂_x V̂)`, the chord
//! propagator is `tr(T̂_{−ξ} V̂)`, the centre-to-chord kernel `R′_x(ξ′, t)` is
//! the chord symbol of `2R̂′_x(t)` and the chord-to-centre kernel `T′_ξ(x′, t)`
//! is the Weyl symbol of `T̂′_ξ(t)`. All four have unit modulus at `t = 0`
//! except the chord propagator, which is singular there.
//!
//! Kernels are certified only up to the first caustic; nodes beyond it are
//! marked invalid rather than continued onto other branches.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{centre_action_marinov, chord_action_of_flow};
use crate::dynamics::{integrate_single, run, IntegratorConfig, SingleFlow, TrajectoryBundle};
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::surface::{free_jacobian_history, sample_plane, shoot, trace_characteristic, Evolution, Plane};
use crate::symplectic::{chord_action_hessian, ChordVector, PhasePoint, SymplecticMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorValue {
    pub amplitude: f64,
    /// `S/ħ + maslov·π/2`.
    pub phase: f64,
    /// Accumulated phase offset in units of `π/2`.
    pub maslov: i32,
    pub valid: bool,
}

impl PropagatorValue {
    pub fn new(amplitude: f64, action_over_hbar: f64, maslov: i32) -> Self {
        Self {
            amplitude,
            phase: action_over_hbar + maslov as f64 * FRAC_PI_2,
            maslov,
            valid: true,
        }
    }

    pub fn invalid() -> Self {
        Self {
            amplitude: f64::NAN,
            phase: f64::NAN,
            maslov: 0,
            valid: false,
        }
    }

    pub fn complex(&self) -> Complex64 {
        if self.valid {
            Complex64::from_polar(self.amplitude, self.phase)
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// Weyl symbol of the evolution operator, over centres.
    Weyl,
    /// Chord symbol of the evolution operator, over chords.
    Chord,
    /// `T′_ξ(x′, t)`: evolved translation, over centres.
    ChordToCentre,
    /// `R′_x(ξ′, t)`: evolved reflection, over chords.
    CentreToChord,
    /// Chord symbol of an evolved translation, over chords.
    ChordChord,
    /// Weyl symbol of an evolved reflection, over centres.
    CentreCentre,
}

#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub kind: KernelKind,
    /// The fixed label: `x` for `CentreToChord`, `ξ` for `ChordToCentre`.
    pub anchor: Option<[f64; 2]>,
    pub grid: Grid2,
    pub time: f64,
    pub hbar: f64,
    pub values: Vec<PropagatorValue>,
    /// Earliest caustic time found among the grid's characteristics, when one was hit.
    pub first_caustic: Option<f64>,
}

impl KernelGrid {
    pub fn complex_values(&self) -> Vec<Complex64> {
        self.values.iter().map(|v| v.complex()).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.valid).count()
    }

    /// Largest `| |K| − 1 |` over valid nodes.
    pub fn unit_modulus_defect(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.valid)
            .map(|v| (v.amplitude - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest nodewise difference against reference values over valid nodes.
    pub fn max_difference(&self, reference: impl Fn([f64; 2]) -> Complex64) -> f64 {
        (0..self.grid.len())
            .filter(|&k| self.values[k].valid)
            .map(|k| (self.values[k].complex() - reference(self.grid.point(k))).norm())
            .fold(0.0, f64::max)
    }
}

fn dof_factor(dof: usize) -> f64 {
    2f64.powi(dof as i32)
}

/// `2^L |det(1 + M)|^{−1/2} exp(i S/ħ − iπν/2)` from the Marinov centre
/// action, with `ν` the centre caustics met along the orbit of `x₋` before `t`.
pub fn weyl_propagator(evo: &Evolution, x: &PhasePoint, t: f64) -> Result<PropagatorValue> {
    let m = centre_action_marinov(evo, x, t, None)?;
    let det = m.monodromy.det_one_plus();
    let nu = if t == 0.0 {
        0
    } else {
        let n = 64;
        let ts: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
        detect_caustics(evo, &m.minus, &ts)?
            .iter()
            .filter(|e| e.kind == CausticKind::Centre && e.time.abs() < t.abs() - CAUSTIC_TIME_TOL)
            .map(|e| e.maslov)
            .max()
            .unwrap_or(0)
    };
    Ok(PropagatorValue::new(
        dof_factor(evo.dof()) / det.abs().sqrt(),
        m.value / evo.hbar(),
        -nu,
    ))
}

/// Short-time guess for the tail `x₋` of the chord `ξ`: solve `t J∇H(x) = ξ`.
pub fn short_time_chord_guess(evo: &Evolution, xi: &ChordVector, t: f64) -> PhasePoint {
    let h = evo.effective();
    let target = xi.vector() / t;
    let mut x = DVector::zeros(xi.dim());
    for _ in 0..30 {
        let p = PhasePoint::new(x.as_slice().to_vec()).expect("finite");
        let f = h.vector_field(&x) - &target;
        if f.norm() < 1e-13 {
            break;
        }
        let jac = crate::symplectic::canonical_j(h.dof()) * h.hessian(&p);
        match jac.lu().solve(&f) {
            Some(step) if step.iter().all(|v| v.is_finite()) => x -= step,
            _ => break,
        }
    }
    PhasePoint::new((x - xi.vector() * 0.5).as_slice().to_vec()).expect("finite guess")
}

/// Signature of the chord-action Hessian as `t → 0⁺` along the orbit of `x₋`,
/// together with the check that no chord caustic intervenes on `(0, t]`.
fn chord_signature(evo: &Evolution, minus: &PhasePoint, t: f64) -> Result<i32> {
    let h = evo.effective();
    let n = 64;
    let grid: Vec<f64> = (1..=n).map(|k| t * k as f64 / n as f64).collect();
    let mut ts = vec![0.0];
    ts.extend(&grid);
    let b = integrate_single(&h, minus, &ts, &evo.integrator)?;
    let dets: Vec<f64> = b.monodromy[1..]
        .iter()
        .map(|m| (DMatrix::identity(m.nrows(), m.ncols()) - m).determinant())
        .collect();
    if dets.windows(2).any(|w| w[0].signum() != w[1].signum()) {
        return Err(Error::ChordCaustic { det: 0.0 });
    }
    let early = SymplecticMatrix::new(b.monodromy[1].clone())?;
    let hess = chord_action_hessian(&early)?;
    let sym = (&hess + hess.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    Ok(eig.eigenvalues.iter().map(|&e| if e > 0.0 { 1 } else { -1 }).sum())
}

/// `|det(1 − M)|^{−1/2} exp(i S(ξ)/ħ − iπ/4·sig)` with the signature taken at short time.
pub fn chord_propagator(evo: &Evolution, xi: &ChordVector, t: f64, guess: Option<&PhasePoint>) -> Result<PropagatorValue> {
    if t == 0.0 {
        return Err(Error::ChordCaustic { det: 0.0 });
    }
    let g = guess.cloned().unwrap_or_else(|| short_time_chord_guess(evo, xi, t));
    let c = chord_action_of_flow(evo, xi, t, &g)?;
    let sig = chord_signature(evo, &c.marinov.minus, t)?;
    let det = c.marinov.monodromy.det_one_minus();
    // −π/4·sig is −sig/2 units of π/2
    Ok(PropagatorValue::new(det.abs().powf(-0.5), c.value / evo.hbar(), -sig / 2))
}

/// Weyl propagator over a grid of centres.
pub fn weyl_kernel_grid(evo: &Evolution, grid: &Grid2, t: f64) -> Result<KernelGrid> {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let [p, q] = grid.point(k);
            weyl_propagator(evo, &PhasePoint::pq(p, q), t).unwrap_or_else(|_| PropagatorValue::invalid())
        })
        .collect();
    Ok(KernelGrid {
        kind: KernelKind::Weyl,
        anchor: None,
        grid: *grid,
        time: t,
        hbar: evo.hbar(),
        values,
        first_caustic: None,
    })
}

/// Chord propagator over a grid of chords.
pub fn chord_kernel_grid(evo: &Evolution, grid: &Grid2, t: f64) -> Result<KernelGrid> {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let [p, q] = grid.point(k);
            chord_propagator(evo, &ChordVector::pq(p, q), t, None).unwrap_or_else(|_| PropagatorValue::invalid())
        })
        .collect();
    Ok(KernelGrid {
        kind: KernelKind::Chord,
        anchor: None,
        grid: *grid,
        time: t,
        hbar: evo.hbar(),
        values,
        first_caustic: if t == 0.0 { Some(0.0) } else { None },
    })
}

fn mixed_kernel(evo: &Evolution, plane: Plane, grid: &Grid2, t: f64) -> Result<KernelGrid> {
    let sample = sample_plane(evo, &plane, grid, t)?;
    let hbar = evo.hbar();
    let values = sample
        .points
        .iter()
        .map(|sp| match sp {
            Some(sp) => {
                let det = sp.free_jacobian(&plane).determinant();
                // A sign flip of the free Jacobian means a caustic was crossed on (0, t).
                if det <= 0.0 {
                    PropagatorValue::invalid()
                } else {
                    PropagatorValue::new(det.powf(-0.5), sp.action / hbar, 0)
                }
            }
            None => PropagatorValue::invalid(),
        })
        .collect::<Vec<_>>();
    let hit = values.iter().any(|v| !v.valid);
    let (kind, anchor) = match &plane {
        Plane::Reflection(x) => (KernelKind::CentreToChord, [x.p(0), x.q(0)]),
        Plane::Translation(xi) => (KernelKind::ChordToCentre, [xi.p(0), xi.q(0)]),
    };
    let first_caustic = if hit && t != 0.0 {
        let n = 32;
        let ts: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
        let events = detect_plane_caustics(evo, &plane, grid, &ts)?;
        events.iter().map(|e| e.time.abs()).fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
            .map(|v| v * t.signum())
    } else {
        None
    };
    Ok(KernelGrid {
        kind,
        anchor: Some(anchor),
        grid: *grid,
        time: t,
        hbar,
        values,
        first_caustic,
    })
}

/// `R′_x(ξ′, t)` over a grid of chords `ξ′`.
pub fn mixed_centre_to_chord(evo: &Evolution, x: &PhasePoint, grid: &Grid2, t: f64) -> Result<KernelGrid> {
    mixed_kernel(evo, Plane::Reflection(x.clone()), grid, t)
}

/// `T′_ξ(x′, t)` over a grid of centres `x′`.
pub fn mixed_chord_to_centre(evo: &Evolution, xi: &ChordVector, grid: &Grid2, t: f64) -> Result<KernelGrid> {
    mixed_kernel(evo, Plane::Translation(xi.clone()), grid, t)
}

/// One node of a mixed kernel, without the grid machinery.
pub fn mixed_kernel_value(evo: &Evolution, plane: &Plane, target: [f64; 2], t: f64) -> Result<PropagatorValue> {
    let sp = shoot(evo, plane, &DVector::from_row_slice(&target), t, None)?;
    let det = sp.free_jacobian(plane).determinant();
    if det <= 0.0 {
        return Err(match plane {
            Plane::Reflection(_) => Error::ChordCaustic { det: det.abs() },
            Plane::Translation(_) => Error::CentreCaustic { det: det.abs() },
        });
    }
    Ok(PropagatorValue::new(det.powf(-0.5), sp.action / evo.hbar(), 0))
}

/// Largest `|T′_ξ(x′, t) − R′_{x′}(−ξ, −t)|` over the given pairs.
pub fn check_time_reversal(evo: &Evolution, pairs: &[(ChordVector, PhasePoint)], t: f64) -> Result<f64> {
    let diffs: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|(xi, x)| {
            let fwd = mixed_kernel_value(evo, &Plane::Translation(xi.clone()), [x.p(0), x.q(0)], t)?;
            let back = mixed_kernel_value(evo, &Plane::Reflection(x.clone()), [-xi.p(0), -xi.q(0)], -t)?;
            Ok((fwd.complex() - back.complex()).norm())
        })
        .collect();
    let mut worst = 0.0_f64;
    for d in diffs {
        worst = worst.max(d?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausticKind {
    /// `det(1 + M) = 0`: the centre representation is singular.
    Centre,
    /// `det(1 − M) = 0`: the chord representation is singular.
    Chord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausticEvent {
    pub time: f64,
    /// State of the characteristic at the event.
    pub location: Vec<f64>,
    pub kind: CausticKind,
    pub det_value: f64,
    /// The determinant touched zero without changing sign.
    pub tangential: bool,
    /// Running Maslov count (units of `π/2`) for this kind after the event.
    pub maslov: i32,
}

pub const CAUSTIC_TIME_TOL: f64 = 1e-9;
const TANGENTIAL_TOL: f64 = 1e-9;

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while (b - a).abs() > CAUSTIC_TIME_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?.abs();
    let mut fd = f(d)?.abs();
    while (b - a).abs() > CAUSTIC_TIME_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?.abs();
        }
    }
    let m = 0.5 * (a + b);
    Ok((m, f(m)?))
}

/// Zeros of a sampled determinant history, refined by bisection (sign
/// changes) or golden-section search (tangential touches). Returns
/// `(time, det, tangential)` in time order; a zero at the first sample is
/// reported as is.
fn find_zeros(times: &[f64], vals: &[f64], f: &dyn Fn(f64) -> Result<f64>) -> Result<Vec<(f64, f64, bool)>> {
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut out = Vec::new();
    if vals[0].abs() <= TANGENTIAL_TOL * scale {
        out.push((times[0], vals[0], false));
    }
    for k in 1..times.len() {
        let (a, b) = (vals[k - 1], vals[k]);
        let a_zero = a.abs() <= TANGENTIAL_TOL * scale;
        if !a_zero && a.signum() != b.signum() && b != 0.0 {
            let tz = bisect(f, times[k - 1], times[k], a)?;
            out.push((tz, f(tz)?, false));
            continue;
        }
        // local minimum of |det| at an interior sample without a sign change
        if k + 1 < times.len() {
            let c = vals[k + 1];
            if b.abs() < a.abs() && b.abs() <= c.abs() && a.signum() == c.signum() && b.signum() == a.signum() {
                let (tm, fm) = golden_min(f, times[k - 1], times[k + 1])?;
                if fm.abs() <= TANGENTIAL_TOL * scale {
                    out.push((tm, fm, true));
                }
            }
        }
    }
    Ok(out)
}

/// Re-integrates from the nearest earlier sample to evaluate state and monodromy anywhere.
fn resample(flow: &SingleFlow, bundle: &TrajectoryBundle, t: f64, cfg: &IntegratorConfig) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let dir = if bundle.times.len() > 1 && bundle.times[1] < bundle.times[0] { -1.0 } else { 1.0 };
    let k = bundle
        .times
        .iter()
        .rposition(|&s| (s - t) * dir <= 0.0)
        .unwrap_or(0);
    let s = bundle.times[k];
    if s == t {
        return Ok((bundle.states[k].clone(), bundle.monodromy[k].clone()));
    }
    let local = run(flow, &bundle.states[k], &[0.0, t - s], cfg)?;
    Ok((local.final_state().clone(), local.final_monodromy() * &bundle.monodromy[k]))
}

/// Centre and chord caustics along a single-space characteristic.
///
/// Each sign change of `det(1 ± M)` adds one unit of `π/2` to the Maslov count
/// of its kind; a tangential touch (a pair of eigenvalues reaching `∓1`
/// together) adds two.
pub fn detect_caustics(evo: &Evolution, x0: &PhasePoint, t_grid: &[f64]) -> Result<Vec<CausticEvent>> {
    let h = evo.effective();
    let bundle = integrate_single(&h, x0, t_grid, &evo.integrator)?;
    let flow = SingleFlow::new(&h);
    let cfg = IntegratorConfig::fixed(bundle.step);
    let mut events = Vec::new();
    for kind in [CausticKind::Centre, CausticKind::Chord] {
        let s = match kind {
            CausticKind::Centre => 1.0,
            CausticKind::Chord => -1.0,
        };
        let det = |m: &DMatrix<f64>| (DMatrix::identity(m.nrows(), m.ncols()) + m * s).determinant();
        let vals: Vec<f64> = bundle.monodromy.iter().map(det).collect();
        let f = |t: f64| -> Result<f64> { Ok(det(&resample(&flow, &bundle, t, &cfg)?.1)) };
        let mut maslov = 0;
        for (time, value, tangential) in find_zeros(&bundle.times, &vals, &f)? {
            maslov += if tangential { 2 } else { 1 };
            let location = resample(&flow, &bundle, time, &cfg)?.0.as_slice().to_vec();
            events.push(CausticEvent {
                time,
                location,
                kind,
                det_value: value,
                tangential,
                maslov,
            });
        }
    }
    events.sort_by(|a, b| a.time.abs().total_cmp(&b.time.abs()));
    Ok(events)
}

/// Caustics met by the characteristics seeded at the grid nodes of an evolved plane.
///
/// The determinant tracked is that of the free-coordinate Jacobian: chord
/// caustics for reflections, centre caustics for translations.
pub fn detect_plane_caustics(evo: &Evolution, plane: &Plane, grid: &Grid2, t_grid: &[f64]) -> Result<Vec<CausticEvent>> {
    let kind = match plane {
        Plane::Reflection(_) => CausticKind::Chord,
        Plane::Translation(_) => CausticKind::Centre,
    };
    let per_node: Vec<Result<Vec<CausticEvent>>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let u = DVector::from_row_slice(&grid.point(k));
            let b = trace_characteristic(evo, plane, &u, t_grid)?;
            let vals: Vec<f64> = free_jacobian_history(plane, &b).iter().map(|m| m.determinant()).collect();
            let f = |t: f64| -> Result<f64> {
                let b = trace_characteristic(evo, plane, &u, &[0.0, t])?;
                Ok(free_jacobian_history(plane, &b).last().expect("sample").determinant())
            };
            let mut maslov = 0;
            let mut out = Vec::new();
            let mut ts = vec![0.0];
            ts.extend(t_grid.iter().copied().filter(|&s| s != 0.0));
            let vals = if t_grid[0] == 0.0 {
                vals
            } else {
                let mut v = vec![1.0];
                v.extend(vals);
                v
            };
            for (time, value, tangential) in find_zeros(&ts, &vals, &f)? {
                maslov += if tangential { 2 } else { 1 };
                let location = if time == 0.0 {
                    plane.seed(&u)?.to_canonical().as_slice().to_vec()
                } else {
                    trace_characteristic(evo, plane, &u, &[0.0, time])?.final_state().as_slice().to_vec()
                };
                out.push(CausticEvent {
                    time,
                    location,
                    kind,
                    det_value: value,
                    tangential,
                    maslov,
                });
            }
            Ok(out)
        })
        .collect();
    let mut events = Vec::new();
    for r in per_node {
        events.extend(r?);
    }
    events.sort_by(|a, b| a.time.abs().total_cmp(&b.time.abs()));
    Ok(events)
}

/// Slope `∂x′/∂ξ′` of the evolved reflection plane through `x0` at `ξ′ = 0`,
/// by central differences with step `h`; returns the largest entry.
pub fn vertical_tangent_check(evo: &Evolution, x0: &PhasePoint, t: f64, h: f64) -> Result<f64> {
    let plane = Plane::Reflection(x0.clone());
    let n = x0.dim();
    let mut worst = 0.0_f64;
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = h;
        let plus = shoot(evo, &plane, &e, t, None)?;
        let minus = shoot(evo, &plane, &(-&e), t, None)?;
        let slope = (plus.image.centre.vector() - minus.image.centre.vector()) / (2.0 * h);
        worst = worst.max(slope.amax());
    }
    Ok(worst)
}
