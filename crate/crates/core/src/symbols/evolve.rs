//! Evolution of whole symbols by quadrature over the mixed kernels:
//! `A′(ξ′) = (2πħ)⁻¹∫dx A(x) R′_x(ξ′, t)` and
//! `A′(x′) = (2πħ)⁻¹∫dξ A(ξ) T′_ξ(x′, t)`,
//! where `R′_x` is the chord symbol of the evolved `2R̂_x` and `T′_ξ` the
//! Weyl symbol of the evolved `T̂_ξ`.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{SymbolGrid, SymbolKind};
use crate::dynamics::integrate_single;
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::oracle::cubic::CubicClosedForm;
use crate::oracle::quadratic::QuadraticFlow;
use crate::propagators::{mixed_centre_to_chord, mixed_chord_to_centre, mixed_kernel_value, PropagatorValue};
use crate::surface::{Evolution, Plane};
use crate::symplectic::{skew_vectors, ChordVector, PhasePoint};

/// Minimum nodes per `2π` of integrand phase.
pub const NYQUIST_NODES: f64 = 6.0;
/// Integrand weights below this fraction of the peak are ignored by the guard.
const GUARD_WEIGHT: f64 = 1e-6;
/// Input nodes below this fraction of the peak are skipped entirely.
const SUPPORT_CUT: f64 = 1e-14;
/// Momenta (in units of the line scale) at which a line integrand is sampled.
const LINE_SAMPLES: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

/// A source of mixed kernels. Caustic nodes may be reported either as an
/// `Err` with a caustic variant or as an invalid [`PropagatorValue`]; both are
/// masked by the quadratures.
pub trait KernelFamily: Sync {
    fn hbar(&self) -> f64;

    /// Chord symbol of the evolved `2R̂_x` at chord `ξ′`.
    fn centre_to_chord(&self, x: [f64; 2], xi: [f64; 2], t: f64) -> Result<PropagatorValue>;

    /// Weyl symbol of the evolved `T̂_ξ` at centre `x′`.
    fn chord_to_centre(&self, xi: [f64; 2], x: [f64; 2], t: f64) -> Result<PropagatorValue>;

    fn centre_to_chord_row(&self, x: [f64; 2], out: &Grid2, t: f64) -> Result<Vec<Option<PropagatorValue>>> {
        out.points().into_iter().map(|xi| masked(self.centre_to_chord(x, xi, t))).collect()
    }

    fn chord_to_centre_row(&self, xi: [f64; 2], out: &Grid2, t: f64) -> Result<Vec<Option<PropagatorValue>>> {
        out.points().into_iter().map(|x| masked(self.chord_to_centre(xi, x, t))).collect()
    }
}

fn masked(v: Result<PropagatorValue>) -> Result<Option<PropagatorValue>> {
    match v {
        Ok(v) if v.valid => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(e) if e.is_caustic() => Ok(None),
        Err(e) => Err(e),
    }
}

fn unit(phase: f64) -> PropagatorValue {
    PropagatorValue::new(1.0, phase, 0)
}

impl KernelFamily for CubicClosedForm {
    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn centre_to_chord(&self, x: [f64; 2], xi: [f64; 2], t: f64) -> Result<PropagatorValue> {
        let (x, xi) = (PhasePoint::pq(x[0], x[1]), ChordVector::pq(xi[0], xi[1]));
        Ok(unit(self.reflection_action(&x, &xi, t) / self.hbar))
    }

    fn chord_to_centre(&self, xi: [f64; 2], x: [f64; 2], t: f64) -> Result<PropagatorValue> {
        let (x, xi) = (PhasePoint::pq(x[0], x[1]), ChordVector::pq(xi[0], xi[1]));
        Ok(unit(self.translation_action(&xi, &x, t) / self.hbar))
    }
}

impl KernelFamily for QuadraticFlow {
    fn hbar(&self) -> f64 {
        QuadraticFlow::hbar(self)
    }

    fn centre_to_chord(&self, x: [f64; 2], xi: [f64; 2], t: f64) -> Result<PropagatorValue> {
        let xt = self.flow(&PhasePoint::pq(x[0], x[1]), t);
        let xi = ChordVector::pq(xi[0], xi[1]);
        Ok(unit(skew_vectors(xt.vector(), xi.vector()) / self.hbar()))
    }

    fn chord_to_centre(&self, xi: [f64; 2], x: [f64; 2], t: f64) -> Result<PropagatorValue> {
        let (m, d) = self.affine(t);
        let xit = m.matrix() * DVector::from_row_slice(&xi);
        let shifted = DVector::from_row_slice(&x) - d;
        Ok(unit(-skew_vectors(&shifted, &xit) / self.hbar()))
    }
}

impl KernelFamily for Evolution {
    fn hbar(&self) -> f64 {
        Evolution::hbar(self)
    }

    fn centre_to_chord(&self, x: [f64; 2], xi: [f64; 2], t: f64) -> Result<PropagatorValue> {
        mixed_kernel_value(self, &Plane::Reflection(PhasePoint::pq(x[0], x[1])), xi, t)
    }

    fn chord_to_centre(&self, xi: [f64; 2], x: [f64; 2], t: f64) -> Result<PropagatorValue> {
        mixed_kernel_value(self, &Plane::Translation(ChordVector::pq(xi[0], xi[1])), x, t)
    }

    fn centre_to_chord_row(&self, x: [f64; 2], out: &Grid2, t: f64) -> Result<Vec<Option<PropagatorValue>>> {
        let k = mixed_centre_to_chord(self, &PhasePoint::pq(x[0], x[1]), out, t)?;
        Ok(k.values.into_iter().map(|v| v.valid.then_some(v)).collect())
    }

    fn chord_to_centre_row(&self, xi: [f64; 2], out: &Grid2, t: f64) -> Result<Vec<Option<PropagatorValue>>> {
        let k = mixed_chord_to_centre(self, &ChordVector::pq(xi[0], xi[1]), out, t)?;
        Ok(k.values.into_iter().map(|v| v.valid.then_some(v)).collect())
    }
}

/// The small-chord kernel `exp(i x(t)∧ξ′/ħ)`: only the Liouville-transported
/// linear phase of the reflection kernel is kept.
#[derive(Debug, Clone)]
pub struct LiouvilleKernels {
    pub evolution: Evolution,
}

impl LiouvilleKernels {
    pub fn new(evolution: Evolution) -> Self {
        Self { evolution }
    }

    fn transported(&self, x: [f64; 2], t: f64) -> Result<[f64; 2]> {
        if t == 0.0 {
            return Ok(x);
        }
        let b = integrate_single(
            &self.evolution.effective(),
            &PhasePoint::pq(x[0], x[1]),
            &[0.0, t],
            &self.evolution.integrator,
        )?;
        let s = b.final_state();
        Ok([s[0], s[1]])
    }
}

impl KernelFamily for LiouvilleKernels {
    fn hbar(&self) -> f64 {
        self.evolution.hbar()
    }

    fn centre_to_chord(&self, x: [f64; 2], xi: [f64; 2], t: f64) -> Result<PropagatorValue> {
        let xt = self.transported(x, t)?;
        Ok(unit((xt[0] * xi[1] - xt[1] * xi[0]) / self.hbar()))
    }

    fn chord_to_centre(&self, _xi: [f64; 2], _x: [f64; 2], _t: f64) -> Result<PropagatorValue> {
        Err(Error::Invalid("the small-chord route only maps Weyl symbols to chord symbols".into()))
    }

    fn centre_to_chord_row(&self, x: [f64; 2], out: &Grid2, t: f64) -> Result<Vec<Option<PropagatorValue>>> {
        let xt = self.transported(x, t)?;
        let h = self.hbar();
        Ok(out
            .points()
            .into_iter()
            .map(|xi| Some(unit((xt[0] * xi[1] - xt[1] * xi[0]) / h)))
            .collect())
    }
}

/// Result of a kernel quadrature.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub symbol: SymbolGrid,
    /// Input/output node pairs dropped because the kernel sat in a caustic mask.
    pub masked_pairs: usize,
    /// Output nodes that lost a significant contribution (or, for lines, the
    /// whole integral) to the mask.
    pub masked_outputs: Vec<usize>,
    /// Largest integrand phase step between neighbouring input nodes.
    pub max_phase_step: f64,
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

type RowFn<'a> = dyn Fn([f64; 2]) -> Result<Vec<Option<PropagatorValue>>> + Sync + 'a;

/// Trapezoid sum `(2πħ)⁻¹ Σ A(v) K_v(w) ΔA` over the input grid, evaluated
/// one input row at a time so the phase guard only needs two rows of kernels.
fn quadrature(input: &SymbolGrid, out: Grid2, out_kind: SymbolKind, t: f64, row: &RowFn) -> Result<Evolved> {
    let g = input.grid;
    let amax = input.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut acc = vec![Complex64::new(0.0, 0.0); out.len()];
    let mut lost = vec![false; out.len()];
    let mut masked_pairs = 0usize;
    let mut max_step = 0.0_f64;
    let mut worst_at: Option<([f64; 2], [f64; 2])> = None;
    let limit = 2.0 * PI / NYQUIST_NODES;
    let mut prev: Vec<Option<Vec<Option<PropagatorValue>>>> = vec![None; g.q.n];

    for ip in 0..g.p.n {
        let live: Vec<usize> = (0..g.q.n)
            .filter(|&jq| {
                let a = input.values[g.index(ip, jq)].norm();
                a > 0.0 && a >= SUPPORT_CUT * amax
            })
            .collect();
        let rows: Vec<(usize, Vec<Option<PropagatorValue>>)> = live
            .par_iter()
            .map(|&jq| row(g.point(g.index(ip, jq))).map(|r| (jq, r)))
            .collect::<Result<_>>()?;
        let mut current: Vec<Option<Vec<Option<PropagatorValue>>>> = vec![None; g.q.n];
        for (jq, r) in rows {
            let k = g.index(ip, jq);
            let a = input.values[k];
            let significant = a.norm() >= GUARD_WEIGHT * amax;
            for (o, v) in r.iter().enumerate() {
                match v {
                    Some(v) => acc[o] += a * v.complex(),
                    None => {
                        masked_pairs += 1;
                        if significant {
                            lost[o] = true;
                        }
                    }
                }
            }
            if significant {
                let mut neighbours = Vec::with_capacity(2);
                if jq > 0 {
                    if let Some(rn) = current[jq - 1].as_ref() {
                        neighbours.push((g.index(ip, jq - 1), rn));
                    }
                }
                if ip > 0 {
                    if let Some(rn) = prev[jq].as_ref() {
                        neighbours.push((g.index(ip - 1, jq), rn));
                    }
                }
                for (kn, rn) in neighbours {
                    let an = input.values[kn];
                    if an.norm() < GUARD_WEIGHT * amax {
                        continue;
                    }
                    let da = wrap(a.arg() - an.arg());
                    for (o, (v, w)) in r.iter().zip(rn.iter()).enumerate() {
                        if let (Some(v), Some(w)) = (v, w) {
                            let step = (v.phase - w.phase + da).abs();
                            if step > max_step {
                                max_step = step;
                                worst_at = Some((g.point(k), out.point(o)));
                            }
                        }
                    }
                }
            }
            current[jq] = Some(r);
        }
        prev = current;
    }
    if max_step > limit {
        let (v, w) = worst_at.unwrap_or_default();
        return Err(Error::Resolution(format!(
            "integrand phase step {max_step:.3} rad exceeds {limit:.3} (input node {v:?}, output node {w:?})"
        )));
    }
    let scale = g.cell_area() / (2.0 * PI * input.hbar);
    acc.iter_mut().for_each(|z| *z *= scale);
    let masked_outputs = (0..out.len()).filter(|&o| lost[o]).collect();
    let mut symbol = SymbolGrid::new(out_kind, out, acc, input.hbar)?;
    symbol.time = t;
    Ok(Evolved {
        symbol,
        masked_pairs,
        masked_outputs,
        max_phase_step: max_step,
    })
}

fn check_hbar(input: &SymbolGrid, kernels: &dyn KernelFamily) -> Result<()> {
    let h = kernels.hbar();
    if (h - input.hbar).abs() > 1e-14 * h {
        return Err(Error::Invalid(format!(
            "symbol has hbar {} but kernels use {}",
            input.hbar, h
        )));
    }
    Ok(())
}

/// `A′(ξ′) = (2πħ)⁻¹ Σ_x A(x) R′_x(ξ′, t) Δx` on the chord grid `out`.
pub fn evolve_chord_from_weyl(a0: &SymbolGrid, kernels: &dyn KernelFamily, out: &Grid2, t: f64) -> Result<Evolved> {
    a0.require(SymbolKind::Weyl)?;
    check_hbar(a0, kernels)?;
    quadrature(a0, *out, SymbolKind::Chord, t, &|x| kernels.centre_to_chord_row(x, out, t))
}

/// `A′(x′) = (2πħ)⁻¹ Σ_ξ A(ξ) T′_ξ(x′, t) Δξ` on the centre grid `out`.
pub fn evolve_weyl_from_chord(a0: &SymbolGrid, kernels: &dyn KernelFamily, out: &Grid2, t: f64) -> Result<Evolved> {
    a0.require(SymbolKind::Chord)?;
    check_hbar(a0, kernels)?;
    quadrature(a0, *out, SymbolKind::Weyl, t, &|xi| kernels.chord_to_centre_row(xi, out, t))
}

/// Small-chord evolution: the moving Fourier transform
/// `(2πħ)⁻¹ Σ_x A(x) e^{i x(t)∧ξ′/ħ} Δx`.
pub fn small_chord_evolve(a0: &SymbolGrid, evolution: &Evolution, out: &Grid2, t: f64) -> Result<Evolved> {
    evolve_chord_from_weyl(a0, &LiouvilleKernels::new(evolution.clone()), out, t)
}

/// Evolves the Weyl symbol `δ(q − q0)` to a chord symbol on `out`.
///
/// The `q` integral is done by the delta; the remaining line integral
/// `(2πħ)⁻¹∫dp R′_{(p,q0)}(ξ′, t)` is done in closed form after checking that
/// the kernel along the line has constant modulus and a phase quadratic in
/// `p` (sampled over `±2·scale`). A vanishing quadratic coefficient is the
/// line's own caustic and masks the node; any other shape is a resolution
/// error.
pub fn evolve_chord_from_line(
    q0: f64,
    kernels: &dyn KernelFamily,
    out: &Grid2,
    t: f64,
    scale: f64,
) -> Result<Evolved> {
    let hbar = kernels.hbar();
    let ps: Vec<f64> = LINE_SAMPLES.iter().map(|s| s * scale).collect();
    let design = DMatrix::from_fn(ps.len(), 3, |i, j| ps[i].powi(j as i32));
    let svd = design.clone().svd(true, true);
    let span = 2.0 * scale;
    let nodes: Vec<Result<Option<Complex64>>> = out
        .points()
        .into_par_iter()
        .map(|xi| {
            let mut phases = Vec::with_capacity(ps.len());
            let mut amps = Vec::with_capacity(ps.len());
            for &p in &ps {
                match masked(kernels.centre_to_chord([p, q0], xi, t))? {
                    Some(v) => {
                        phases.push(v.phase);
                        amps.push(v.amplitude);
                    }
                    None => return Ok(None),
                }
            }
            let amp = amps[0];
            if amps.iter().any(|a| (a - amp).abs() > 1e-9 * amp) {
                return Err(Error::Resolution(format!(
                    "kernel modulus varies along the line at ξ′ = {xi:?}"
                )));
            }
            let rhs = DVector::from_vec(phases.clone());
            let c = svd
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::Invalid(format!("line fit failed: {e}")))?;
            let fit = &design * &c;
            let resid = (fit - &rhs).amax();
            let size = rhs.amax().max(1.0);
            if resid > 1e-7 * size {
                return Err(Error::Resolution(format!(
                    "kernel phase along the line is not quadratic at ξ′ = {xi:?} (residual {resid:.2e})"
                )));
            }
            let (gamma, beta, alpha) = (c[0], c[1], c[2]);
            if (alpha * span * span).abs() < 1e-9 {
                return Ok(None);
            }
            let phase = alpha.signum() * FRAC_PI_4 + gamma - beta * beta / (4.0 * alpha);
            let modulus = amp * (PI / alpha.abs()).sqrt() / (2.0 * PI * hbar);
            Ok(Some(Complex64::from_polar(modulus, phase)))
        })
        .collect();
    let mut values = Vec::with_capacity(out.len());
    let mut masked_outputs = Vec::new();
    for (o, v) in nodes.into_iter().enumerate() {
        match v? {
            Some(z) => values.push(z),
            None => {
                masked_outputs.push(o);
                values.push(Complex64::new(0.0, 0.0));
            }
        }
    }
    let mut symbol = SymbolGrid::new(SymbolKind::Chord, *out, values, hbar)?;
    symbol.time = t;
    Ok(Evolved {
        symbol,
        masked_pairs: masked_outputs.len(),
        masked_outputs,
        max_phase_step: 0.0,
    })
}

/// Small-chord evolution of `δ(q − q0)`.
pub fn small_chord_evolve_line(q0: f64, evolution: &Evolution, out: &Grid2, t: f64, scale: f64) -> Result<Evolved> {
    evolve_chord_from_line(q0, &LiouvilleKernels::new(evolution.clone()), out, t, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::hamiltonian::HamiltonianSpec;
    use crate::symbols::{conjugate_grid, symplectic_fourier};

    fn centred(n: usize, d: f64) -> Grid2 {
        Grid2::new(Axis::centred(n, d).unwrap(), Axis::centred(n, d).unwrap())
    }

    #[test]
    fn zero_time_reduces_to_the_fourier_transform() {
        let hbar = 1.0;
        let g = centred(61, 0.2);
        let a0 = SymbolGrid::from_fn(SymbolKind::Weyl, g, hbar, |[p, q]| {
            Complex64::new(2.0 * (-((p - 0.3).powi(2) + q * q) / hbar).exp(), 0.0)
        })
        .unwrap();
        let full = symplectic_fourier(&a0).unwrap();
        let cg = conjugate_grid(&g, hbar).unwrap();
        // inner third of the conjugate grid keeps the integrand above six nodes per period
        let d = cg.p.spacing();
        let out = centred(17, d);
        let ev = evolve_chord_from_weyl(&a0, &CubicClosedForm::new(1.0, hbar), &out, 0.0).unwrap();
        for k in 0..out.len() {
            let v = out.point(k);
            assert!((ev.symbol.values[k] - full.value_at(v).unwrap()).norm() < 1e-12);
        }
        assert!(ev.max_phase_step <= 2.0 * PI / NYQUIST_NODES);
    }

    #[test]
    fn guard_rejects_undersampled_integrands() {
        let hbar = 0.1;
        let g = centred(41, 0.2);
        let a0 = SymbolGrid::from_fn(SymbolKind::Weyl, g, hbar, |[p, q]| Complex64::new((-(p * p + q * q)).exp(), 0.0)).unwrap();
        let out = centred(5, 1.0);
        let r = evolve_chord_from_weyl(&a0, &CubicClosedForm::new(1.0, hbar), &out, 0.5);
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn translation_delta_under_quadratic_flow_is_a_transported_plane_wave() {
        let h = HamiltonianSpec::harmonic();
        let qf = QuadraticFlow::new(&h).unwrap();
        let hbar = qf.hbar();
        let t = 0.8;
        let g = centred(21, 0.25);
        let xi0 = [0.5, -0.75];
        let a0 = SymbolGrid::delta(SymbolKind::Chord, g, hbar, xi0, Complex64::new(2.0 * PI * hbar, 0.0)).unwrap();
        let out = centred(15, 0.3);
        let ev = evolve_weyl_from_chord(&a0, &qf, &out, t).unwrap();
        let err = ev.symbol.max_difference_fn(|x| {
            qf.translation_kernel(&ChordVector::pq(xi0[0], xi0[1]), &PhasePoint::pq(x[0], x[1]), t)
        });
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn identity_stays_identity() {
        let cf = CubicClosedForm::new(1.0, 0.5);
        let g = centred(11, 0.3);
        let id = SymbolGrid::delta(SymbolKind::Chord, g, 0.5, [0.0, 0.0], Complex64::new(PI, 0.0)).unwrap();
        let out = centred(9, 0.5);
        for &t in &[0.0, 0.7, 1.5] {
            let ev = evolve_weyl_from_chord(&id, &cf, &out, t).unwrap();
            assert!(ev.symbol.max_difference_fn(|_| Complex64::new(1.0, 0.0)) < 1e-12);
        }
    }

    #[test]
    fn line_integral_reproduces_the_parabola_chord_function() {
        let cf = CubicClosedForm::new(1.0, 1.0);
        let out = Grid2::new(Axis::new(0.25, 3.25, 7).unwrap(), Axis::new(-2.0, 2.0, 5).unwrap());
        let (q0, t) = (0.4, 1.0);
        let ev = evolve_chord_from_line(q0, &cf, &out, t, 1.0).unwrap();
        assert!(ev.masked_outputs.is_empty());
        let err = ev.symbol.max_difference_fn(|[a, b]| cf.chord_function(q0, &ChordVector::pq(a, b), t).unwrap());
        assert!(err < 1e-12, "{err}");

        let evo = Evolution::new(cf.hamiltonian());
        let small = small_chord_evolve_line(q0, &evo, &out, t, 1.0).unwrap();
        let err = small
            .symbol
            .max_difference_fn(|[a, b]| cf.chord_function_small_chord(q0, &ChordVector::pq(a, b), t).unwrap());
        assert!(err < 1e-9, "{err}");

        let axis = Grid2::new(Axis::new(-1.0, 1.0, 3).unwrap(), Axis::new(0.0, 1.0, 2).unwrap());
        let masked = evolve_chord_from_line(q0, &cf, &axis, t, 1.0).unwrap();
        assert_eq!(masked.masked_outputs, vec![2, 3]);
    }
}
