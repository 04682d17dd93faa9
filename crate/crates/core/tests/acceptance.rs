//! Acceptance suite: one PASS/FAIL line per criterion, followed by indented
//! detail lines. Tolerances are pinned here.
//!
//! Criteria listed in `UNATTAINABLE` are evaluated against the reference
//! formulas exactly as given and are expected to fail; for those the suite
//! instead requires their detail checks against the self-consistent forms to
//! pass. Any other failure makes the process exit non-zero.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;

use nalgebra::DVector;
use num_complex::Complex64;
use semiclassics::action::{
    centre_action_marinov, evolve_reflection_field, evolve_translation_field, hj_residual, marinov_centre_field,
    predicted_hessian, ActionField, FieldKind, GradientSource, HjEquation,
};
use semiclassics::dynamics::{integrate_double, integrate_single, ActionForm, IntegratorConfig};
use semiclassics::grid::{Axis, Grid2};
use semiclassics::hamiltonian::HamiltonianSpec;
use semiclassics::oracle::cubic::CubicClosedForm;
use semiclassics::oracle::dense::DenseOracle;
use semiclassics::oracle::quadratic::QuadraticFlow;
use semiclassics::oracle::quantum::{cubic_chord_function, GaussianState};
use semiclassics::propagators::{
    check_time_reversal, chord_kernel_grid, detect_caustics, mixed_centre_to_chord, vertical_tangent_check,
    weyl_propagator, CausticKind,
};
use semiclassics::surface::{shoot, Evolution, Plane};
use semiclassics::symbols::{
    evolve_chord_from_line, evolve_chord_from_weyl, kernel_from_evolution_symbols, overlap, small_chord_evolve_line,
    symplectic_fourier, AutocorrelationKernel, SymbolGrid, SymbolKind,
};
use semiclassics::symplectic::{ChordVector, DoublePhasePoint, PhasePoint};
use semiclassics::Orientation;

const UNATTAINABLE: [usize; 3] = [1, 2, 3];

const TOL_ACTION: f64 = 1e-8;
const TOL_MODULUS: f64 = 1e-10;
const TOL_HJ: f64 = 1e-8;
const TOL_CHORD_REL: f64 = 1e-6;
const TOL_CHORD_PHASE: f64 = 1e-6;
const MIN_CHORD_P: f64 = 0.2;
const EXPONENT: f64 = 3.0;
const TOL_EXPONENT: f64 = 0.1;
const TOL_REFEREE: f64 = 0.02;
const TOL_WEYL_AMPLITUDE: f64 = 1e-8;
const MIN_NODE_MASS: f64 = 0.999;
const TOL_CAUSTIC_TIME: f64 = 1e-6;
const TOL_DOUBLE_H_ZERO: f64 = 1e-13;
const TOL_CONSERVATION: f64 = 1e-9;
const TOL_LIOUVILLE: f64 = 1e-10;
const TOL_ODD: f64 = 1e-10;
const TOL_REVERSAL: f64 = 1e-8;
const TOL_TRACE: f64 = 1e-8;
const TOL_ROUND_TRIP: f64 = 1e-12;
const TOL_PARSEVAL: f64 = 1e-10;
const TOL_SYMPLECTIC: f64 = 1e-8;
const TOL_VERTICAL: f64 = 1e-6;
const TOL_HESSIAN: f64 = 1e-5;

struct Criterion {
    id: usize,
    name: &'static str,
    pass: bool,
    details: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: usize, name: &'static str) -> Self {
        Self {
            id,
            name,
            pass: true,
            details: Vec::new(),
        }
    }

    /// A check that decides the criterion.
    fn check(&mut self, ok: bool, text: String) {
        self.pass &= ok;
        self.details.push((ok, text));
    }

    /// A check reported alongside, not part of the verdict.
    fn note(&mut self, ok: bool, text: String) {
        self.details.push((ok, format!("[consistent] {text}")));
    }

    fn notes_pass(&self) -> bool {
        self.details.iter().filter(|(_, t)| t.starts_with("[consistent]")).all(|(ok, _)| *ok)
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn square(half: f64, n: usize) -> Grid2 {
    Grid2::square(half, n).expect("grid")
}

fn around(c: [f64; 2], h: f64, n: usize) -> Grid2 {
    let half = h * (n / 2) as f64;
    Grid2::new(
        Axis::new(c[0] - half, c[0] + half, n).expect("axis"),
        Axis::new(c[1] - half, c[1] + half, n).expect("axis"),
    )
}

fn cubic_closed_form_suite() -> Criterion {
    let mut c = Criterion::new(1, "cubic closed-form suite");
    let cf = CubicClosedForm::new(1.0, 1.0);
    let evo = Evolution::new(cf.hamiltonian());
    let x = PhasePoint::pq(1.0, 0.0);
    let grid = square(4.0, 17);
    let anchor = grid.nearest([2.0, 1.0]).expect("anchor node");

    let (mut printed, mut consistent, mut modulus) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut anchor_value = f64::NAN;
    let mut invalid = 0;
    for &t in &[0.5, 1.0, 2.0] {
        for x0 in [x.clone(), PhasePoint::pq(-0.5, 0.7)] {
            let field = evolve_reflection_field(&evo, &x0, &grid, t).expect("reflection field");
            for k in 0..grid.len() {
                let Some(s) = field.value(k) else {
                    invalid += 1;
                    continue;
                };
                let [a, b] = grid.point(k);
                let xi = ChordVector::pq(a, b);
                printed = printed.max((s - cf.reflection_action_as_printed(&x0, &xi, t)).abs());
                consistent = consistent.max((s - cf.reflection_action(&x0, &xi, t)).abs());
                if t == 1.0 && x0 == x && k == anchor {
                    anchor_value = s;
                }
            }
            let kernel = mixed_centre_to_chord(&evo, &x0, &grid, t).expect("mixed kernel");
            modulus = modulus.max(kernel.unit_modulus_defect());
            invalid += kernel.grid.len() - kernel.valid_count();
        }
    }
    let reference = cf.reflection_action_as_printed(&x, &ChordVector::pq(2.0, 1.0), 1.0);
    c.check(
        printed < TOL_ACTION && invalid == 0,
        format!(
            "engine S′_x(ξ′) vs reference closed form over |ξ′| ≤ 4, t ≤ 2: max diff {printed:.3e} (tol {TOL_ACTION:e}); \
             anchor a=1, x=(1,0), t=1, ξ′=(2,1): reference {reference}, engine {anchor_value:.10}"
        ),
    );
    c.check(modulus < TOL_MODULUS, format!("mixed kernel | |R′| − 1 |: {modulus:.3e} (tol {TOL_MODULUS:e})"));

    let hh = HamiltonianSpec::cubic(1.0);
    let residual = |printed: bool| {
        let f = ActionField::from_fn(FieldKind::Chord, &grid, 1.0, |v| {
            let xi = ChordVector::pq(v[0], v[1]);
            Some(if printed {
                (cf.reflection_action_as_printed(&x, &xi, 1.0), cf.reflection_action_gradient_as_printed(&x, &xi, 1.0))
            } else {
                (cf.reflection_action(&x, &xi, 1.0), cf.reflection_action_gradient(&x, &xi, 1.0))
            })
        });
        let dt: Vec<f64> = grid
            .points()
            .iter()
            .map(|v| {
                let xi = ChordVector::pq(v[0], v[1]);
                if printed {
                    cf.reflection_action_dt_as_printed(&x, &xi)
                } else {
                    cf.reflection_action_dt(&x, &xi)
                }
            })
            .collect();
        hj_residual(&f, &dt, &hh, Orientation::Forward, HjEquation::HeisenbergChord, GradientSource::Stored)
            .expect("residual")
            .max_interior
    };
    let (hj_printed, hj_consistent) = (residual(true), residual(false));
    c.check(hj_printed < TOL_HJ, format!("chord HJ residual of the reference action (analytic ∂t): {hj_printed:.3e} (tol {TOL_HJ:e})"));
    c.note(consistent < TOL_ACTION, format!("engine vs p ξ_q − q(t) ξ_p − (at/4) ξ_p³: max diff {consistent:.3e}"));
    c.note(hj_consistent < TOL_HJ, format!("chord HJ residual of the consistent action: {hj_consistent:.3e}"));
    c
}

fn parabola_chord_function() -> Criterion {
    let mut c = Criterion::new(2, "parabola chord function");
    let (a, hbar, t, q0) = (1.0, 1.0, 1.0, 0.3);
    let cf = CubicClosedForm::new(a, hbar);
    let evo = Evolution::new(cf.hamiltonian());
    let out = Grid2::new(Axis::new(-3.0, 3.0, 25).unwrap(), Axis::new(-2.0, 2.0, 9).unwrap());
    let full = evolve_chord_from_line(q0, &evo, &out, t, 1.0).expect("line evolution");
    let small = small_chord_evolve_line(q0, &evo, &out, t, 1.0).expect("small-chord evolution");

    let (mut mod_p, mut ph_p, mut mod_c, mut ph_c, mut cubic_gap) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut compared = 0;
    for k in 0..out.len() {
        let [xp, xq] = out.point(k);
        if xp.abs() < MIN_CHORD_P {
            continue;
        }
        compared += 1;
        let xi = ChordVector::pq(xp, xq);
        let z = full.symbol.values[k];
        let p = cf.chord_function_as_printed(q0, &xi, t).unwrap();
        let e = cf.chord_function(q0, &xi, t).unwrap();
        mod_p = mod_p.max((z.norm() - p.norm()).abs() / p.norm());
        ph_p = ph_p.max(wrap(z.arg() - p.arg()).abs());
        mod_c = mod_c.max((z.norm() - e.norm()).abs() / e.norm());
        ph_c = ph_c.max(wrap(z.arg() - e.arg()).abs());
        let ratio = small.symbol.values[k] / z;
        cubic_gap = cubic_gap.max(wrap(ratio.arg() - 0.25 * a * t * xp.powi(3) / hbar).abs() + (ratio.norm() - 1.0).abs());
    }
    c.check(
        mod_p < TOL_CHORD_REL && ph_p < TOL_CHORD_PHASE,
        format!(
            "evolve pipeline vs reference closed form on {compared} nodes with |ξ′_p| ≥ {MIN_CHORD_P}: \
             modulus rel {mod_p:.3e}, phase {ph_p:.3e} rad (tol {TOL_CHORD_REL:e}, {TOL_CHORD_PHASE:e})"
        ),
    );
    c.check(cubic_gap < TOL_CHORD_PHASE, format!("small-chord / full = exp(i (at/4) ξ′_p³ / ħ): max deviation {cubic_gap:.3e}"));

    let sweep = Grid2::new(Axis::new(0.05, 0.5, 10).unwrap(), Axis::new(-0.1, 0.1, 3).unwrap());
    let f = evolve_chord_from_line(q0, &evo, &sweep, t, 1.0).expect("sweep");
    let s = small_chord_evolve_line(q0, &evo, &sweep, t, 1.0).expect("sweep");
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for i in 0..sweep.p.n {
        let k = sweep.index(i, 1);
        let err = (s.symbol.values[k] - f.symbol.values[k]).norm() / f.symbol.values[k].norm();
        lx.push(sweep.point(k)[0].ln());
        ly.push(err.ln());
    }
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    c.check(
        (slope - EXPONENT).abs() <= TOL_EXPONENT,
        format!("small-chord error exponent over ξ′_p ∈ [0.05, 0.5]: {slope:.4} (want {EXPONENT} ± {TOL_EXPONENT})"),
    );
    c.note(
        mod_c < TOL_CHORD_REL && ph_c < TOL_CHORD_PHASE,
        format!("evolve pipeline vs (2πħ)⁻¹√(πħ/3|atξ_p|) e^{{i(…)/ħ − iπ/4 sgn}}: modulus rel {mod_c:.3e}, phase {ph_c:.3e} rad"),
    );
    c
}

fn quantum_referee() -> Criterion {
    let mut c = Criterion::new(3, "quantum-oracle referee");
    let (a, hbar, t, q0) = (1.0, 1.0, 1.0, 0.3);
    let cf = CubicClosedForm::new(a, hbar);
    let mut samples = Vec::new();
    for &xp in &[-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0] {
        for &xq in &[0.0, 1.0] {
            samples.push(ChordVector::pq(xp, xq));
        }
    }
    let sigmas = [0.3, 0.2, 0.1, 0.05, 0.03];
    let error = |sigma: f64, orientation: Orientation, printed: bool| -> f64 {
        let state = GaussianState::new(q0, 0.0, sigma, hbar).unwrap();
        let w = state.delta_weight();
        samples
            .iter()
            .map(|xi| {
                let chi = cubic_chord_function(&state, a, t, orientation, xi) / w;
                let want = if printed {
                    cf.chord_function_as_printed(q0, xi, t).unwrap()
                } else {
                    cf.chord_function(q0, xi, t).unwrap()
                };
                (chi - want).norm() / want.norm()
            })
            .fold(0.0, f64::max)
    };
    let printed: Vec<f64> = sigmas.iter().map(|&s| error(s, Orientation::Forward, true)).collect();
    let consistent: Vec<f64> = sigmas.iter().map(|&s| error(s, Orientation::Forward, false)).collect();
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ");
    let last = |v: &[f64]| *v.last().unwrap();
    c.check(
        monotone(&printed) && last(&printed) < TOL_REFEREE,
        format!("σ = {sigmas:?} vs reference closed form on 0.5 ≤ |ξ′_p| ≤ 3: max rel err [{}] (final tol {TOL_REFEREE})", fmt(&printed)),
    );
    let backward = error(0.03, Orientation::Backward, true);
    let printed_passes = [last(&printed), backward].iter().filter(|&&e| e < TOL_REFEREE).count();
    c.check(
        printed_passes == 1,
        format!("orientations matching the reference at σ = 0.03: {printed_passes} (A: {:.3e}, B: {backward:.3e})", last(&printed)),
    );
    c.note(
        monotone(&consistent) && last(&consistent) < TOL_REFEREE,
        format!("vs consistent closed form: max rel err [{}]", fmt(&consistent)),
    );
    let backward = error(0.03, Orientation::Backward, false);
    let passes = [last(&consistent), backward].iter().filter(|&&e| e < TOL_REFEREE).count();
    c.note(
        passes == 1 && last(&consistent) < TOL_REFEREE,
        format!("convention switch: A {:.3e}, B {backward:.3e}; exactly one passes and it is A", last(&consistent)),
    );
    c
}

fn quadratic_exactness() -> Criterion {
    let mut c = Criterion::new(4, "quadratic exactness");
    let evo = Evolution::new(HamiltonianSpec::harmonic());
    let x = PhasePoint::pq(0.7, -0.4);
    let mut worst = 0.0_f64;
    for k in 0..=28 {
        let t = 0.1 + 0.1 * k as f64;
        let v = weyl_propagator(&evo, &x, t).expect("Weyl propagator");
        worst = worst.max((v.amplitude - 1.0 / (t / 2.0).cos().abs()).abs());
    }
    c.check(worst < TOL_WEYL_AMPLITUDE, format!("Weyl amplitude vs 1/|cos(t/2)| on t ∈ [0.1, 2.9]: {worst:.3e} (tol {TOL_WEYL_AMPLITUDE:e})"));

    let o = DenseOracle::new(31, 1.0).unwrap();
    let quarter = o.fourier().adjoint();
    let half = &quarter * &quarter;
    let mut masses = Vec::new();
    for (v, t, node) in [(&quarter, FRAC_PI_2, (15, 18)), (&half, PI, (12, 15))] {
        let k = kernel_from_evolution_symbols(&o, v, t, AutocorrelationKernel::CentreCentre, [3, 0]).unwrap().kernel;
        let at = k.grid.index(node.0, node.1);
        masses.push(k.values[at].amplitude / 31.0);
    }
    let mass = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    c.check(
        mass > MIN_NODE_MASS,
        format!("centre-centre kernel mass at the node of x(t) for x = (3Δ, 0), t = π/2, π: {masses:?} (min {MIN_NODE_MASS})"),
    );

    let ts: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
    let events = detect_caustics(&evo, &PhasePoint::pq(1.0, 0.0), &ts).expect("caustics");
    let first_centre = events.iter().find(|e| e.kind == CausticKind::Centre).map(|e| e.time);
    let centre_ok = first_centre.is_some_and(|tc| (tc - PI).abs() < TOL_CAUSTIC_TIME);
    c.check(centre_ok, format!("first centre caustic: {first_centre:?} (want π ± {TOL_CAUSTIC_TIME:e})"));
    let chord_at_zero = events.iter().any(|e| e.kind == CausticKind::Chord && e.time == 0.0);
    let grid_flag = chord_kernel_grid(&evo, &square(1.0, 5), 0.0).unwrap().first_caustic;
    c.check(
        chord_at_zero && grid_flag == Some(0.0),
        format!("chord caustic flagged at t = 0: event {chord_at_zero}, kernel grid {grid_flag:?}"),
    );
    c
}

fn invariant_suite() -> Criterion {
    let mut c = Criterion::new(5, "invariant suite");
    let quartic = HamiltonianSpec::quartic();
    let cubic = HamiltonianSpec::cubic(1.0);
    let mixed = HamiltonianSpec::parse_text("0.5 2 0\n0.3 1 1\n-0.2 0 3\n0.1 2 2", 1.0, "mixed").unwrap();
    let points = [[0.3, -1.2], [1.7, 0.4], [-2.5, 2.5], [0.0, 0.9]];

    let mut zero: f64 = 0.0;
    for h in [&quartic, &cubic, &mixed] {
        let hh = h.heisenberg_double();
        for p in points {
            zero = zero.max(hh.value(&PhasePoint::pq(p[0], p[1]), &ChordVector::pq(0.0, 0.0)).abs());
        }
    }
    c.check(zero < TOL_DOUBLE_H_ZERO, format!("ℍ′(x, 0): {zero:.3e} (tol {TOL_DOUBLE_H_ZERO:e})"));

    let cfg = IntegratorConfig::default();
    let ts: Vec<f64> = (0..=40).map(|k| 0.025 * k as f64).collect();
    let (mut drift, mut liouville, mut symplectic, mut min_chord) = (0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY);
    for h in [&quartic, &cubic, &mixed] {
        let hh = h.heisenberg_double();
        for p in points {
            let x = PhasePoint::pq(p[0] * 0.5, p[1] * 0.5);
            let start = DoublePhasePoint::new(x.clone(), ChordVector::pq(0.3, -0.2)).unwrap();
            let b = integrate_double(&hh, &start, &ts, ActionForm::Centre, &cfg).expect("double");
            drift = drift.max(b.max_energy_drift());
            symplectic = symplectic.max(b.max_symplectic_defect());
            for k in 0..b.len() {
                min_chord = min_chord.min(b.double_point(k).unwrap().chord.norm());
            }
            let on_plane = DoublePhasePoint::new(x.clone(), ChordVector::pq(0.0, 0.0)).unwrap();
            let d = integrate_double(&hh, &on_plane, &ts, ActionForm::Centre, &cfg).expect("double");
            let s = integrate_single(h, &x, &ts, &cfg).expect("single");
            symplectic = symplectic.max(s.max_symplectic_defect());
            for k in 0..s.len() {
                let centre = d.double_point(k).unwrap().centre;
                liouville = liouville.max((centre.vector() - s.states[k].clone()).amax());
            }
        }
    }
    c.check(drift < TOL_CONSERVATION, format!("ℍ′ conservation: {drift:.3e} (tol {TOL_CONSERVATION:e})"));
    c.check(liouville < TOL_LIOUVILLE, format!("ξ = 0 flow vs Liouville flow: {liouville:.3e} (tol {TOL_LIOUVILLE:e})"));
    c.check(symplectic < TOL_SYMPLECTIC, format!("monodromy symplecticity: {symplectic:.3e} (tol {TOL_SYMPLECTIC:e})"));
    c.check(min_chord > 0.0, format!("distorted translations stay fixed-point free: min |ξ(t)| = {min_chord:.4}"));

    let grid = square(1.0, 11);
    let mut odd: f64 = 0.0;
    for h in [&quartic, &cubic] {
        let evo = Evolution::new(h.clone());
        let f = evolve_reflection_field(&evo, &PhasePoint::pq(0.4, 0.3), &grid, 0.4).expect("field");
        odd = odd.max(f.odd_defect());
    }
    c.check(odd < TOL_ODD, format!("S′ odd in ξ: {odd:.3e} (tol {TOL_ODD:e})"));

    // T′_ξ(x′, t) = tr(2R̂_{x′}(−t) T̂_ξ), which under A(ξ) = tr(T̂_{−ξ}Â) is R′_{x′}(−ξ, −t)
    let cf = CubicClosedForm::new(1.0, 1.0);
    let qf = QuadraticFlow::new(&HamiltonianSpec::harmonic()).unwrap();
    let (mut reversal, mut literal) = (0.0_f64, 0.0_f64);
    for p in points {
        for xi in [[0.5, -0.3], [-1.1, 0.8]] {
            let (x, xi) = (PhasePoint::pq(p[0], p[1]), ChordVector::pq(xi[0], xi[1]));
            let neg = ChordVector::pq(-xi.p(0), -xi.q(0));
            for t in [0.4, 1.3] {
                reversal = reversal
                    .max((cf.translation_kernel(&xi, &x, t) - cf.reflection_kernel(&x, &neg, -t)).norm())
                    .max((qf.translation_kernel(&xi, &x, t) - qf.reflection_kernel(&x, &neg, -t)).norm());
                literal = literal.max((cf.translation_kernel(&xi, &x, t) - cf.reflection_kernel(&x, &xi, -t)).norm());
            }
        }
    }
    c.check(reversal < TOL_REVERSAL, format!("time reversal on closed forms (cubic, oscillator): {reversal:.3e} (tol {TOL_REVERSAL:e})"));
    let pairs = vec![(ChordVector::pq(0.3, -0.2), PhasePoint::pq(0.5, 0.4))];
    let engine = check_time_reversal(&Evolution::new(quartic.clone()), &pairs, 0.5).expect("reversal");
    c.note(engine < TOL_REVERSAL, format!("time reversal on the quartic engine: {engine:.3e}"));
    c.details.push((true, format!("[info] same identity read with +ξ on the chord side: {literal:.3e}")));

    let g = square(3.0, 25);
    let gauss = GaussianState::new(0.2, -0.1, 0.6, 1.0).unwrap();
    let a0 = SymbolGrid::from_fn(SymbolKind::Weyl, g, 1.0, |[p, q]| Complex64::new(2.0 * PI * gauss.wigner(p, q), 0.0)).unwrap();
    let out = square(0.1, 3);
    let evolved = evolve_chord_from_weyl(&a0, &Evolution::new(quartic.clone()), &out, 0.5).expect("evolve");
    let trace = (evolved.symbol.trace().unwrap() - a0.trace().unwrap()).norm();
    c.check(trace < TOL_TRACE, format!("trace invariance A′(0, t) = A′(0, 0): {trace:.3e} (tol {TOL_TRACE:e})"));

    let g = square(6.0, 65);
    let s = SymbolGrid::from_fn(SymbolKind::Weyl, g, 0.5, |[p, q]| {
        Complex64::from_polar((-(p - 0.3).powi(2) - 0.5 * (q + 0.2).powi(2)).exp(), 0.7 * p - 0.2 * q * q)
    })
    .unwrap();
    let f = symplectic_fourier(&s).unwrap();
    let back = symplectic_fourier(&f).unwrap();
    let round = back.max_difference(&s).unwrap();
    let parseval = (overlap(&f, &f).unwrap() - overlap(&s, &s).unwrap()).norm() / overlap(&s, &s).unwrap().norm();
    c.check(round < TOL_ROUND_TRIP, format!("symplectic Fourier round trip: {round:.3e} (tol {TOL_ROUND_TRIP:e})"));
    c.check(parseval < TOL_PARSEVAL, format!("Parseval: {parseval:.3e} (tol {TOL_PARSEVAL:e})"));

    let mut slope: f64 = 0.0;
    for h in [&quartic, &cubic] {
        let evo = Evolution::new(h.clone());
        for x0 in [PhasePoint::pq(0.8, 0.1), PhasePoint::pq(-0.4, 0.6)] {
            slope = slope.max(vertical_tangent_check(&evo, &x0, 1.0, 1e-3).expect("tangent"));
        }
    }
    c.check(slope < TOL_VERTICAL, format!("vertical tangent at ξ = 0: slope {slope:.3e} (tol {TOL_VERTICAL:e})"));
    c
}

fn hessian_error(field: &ActionField, at: usize, predicted: &nalgebra::DMatrix<f64>) -> f64 {
    let fd = field.finite_difference_hessian(at).expect("interior node");
    let scale = predicted.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((fd[(i, j)] - predicted[(i, j)]).abs() / scale);
        }
    }
    worst
}

fn hessian_cross_check() -> Criterion {
    let mut c = Criterion::new(6, "Hessian/Cayley cross-check");
    let h = 2e-3;
    let centre = 12;
    let (mut marinov, mut translation, mut reflection) = (0.0_f64, 0.0_f64, 0.0_f64);
    for ham in [HamiltonianSpec::cubic(1.0), HamiltonianSpec::quartic()] {
        let evo = Evolution::new(ham);
        for t in [0.25, 0.5] {
            let x0 = [0.6, 0.4];
            let grid = around(x0, h, 5);
            let f = marinov_centre_field(&evo, &grid, t).unwrap();
            let m = centre_action_marinov(&evo, &PhasePoint::pq(x0[0], x0[1]), t, None).unwrap();
            marinov = marinov.max(hessian_error(&f, centre, &predicted_hessian(FieldKind::Centre, &m.monodromy).unwrap()));

            let xi0 = [0.3, -0.2];
            let plane = Plane::Translation(ChordVector::pq(xi0[0], xi0[1]));
            let f = evolve_translation_field(&evo, &ChordVector::pq(xi0[0], xi0[1]), &grid, t).unwrap();
            let sp = shoot(&evo, &plane, &DVector::from_row_slice(&x0), t, None).unwrap();
            let pred = predicted_hessian(FieldKind::Centre, &sp.tangent_map().unwrap()).unwrap();
            translation = translation.max(hessian_error(&f, centre, &pred));

            let chord_grid = around(xi0, h, 5);
            let plane = Plane::Reflection(PhasePoint::pq(x0[0], x0[1]));
            let f = evolve_reflection_field(&evo, &PhasePoint::pq(x0[0], x0[1]), &chord_grid, t).unwrap();
            let sp = shoot(&evo, &plane, &DVector::from_row_slice(&xi0), t, None).unwrap();
            let pred = predicted_hessian(FieldKind::Chord, &sp.tangent_map().unwrap()).unwrap();
            reflection = reflection.max(hessian_error(&f, centre, &pred));
        }
    }
    c.check(marinov < TOL_HESSIAN, format!("flow centre action vs centre Cayley form (cubic, quartic; t ≤ 0.5): {marinov:.3e}"));
    c.check(translation < TOL_HESSIAN, format!("evolved translation S′_ξ(x′) vs centre Cayley form of M′: {translation:.3e}"));
    c.check(reflection < TOL_HESSIAN, format!("evolved reflection S′_x(ξ′) vs chord Cayley form of M′: {reflection:.3e}"));
    c.details.push((true, format!("[info] errors relative to max(1, max|H|), stencil h = {h}, tol {TOL_HESSIAN:e}")));
    c
}

fn main() -> ExitCode {
    let criteria = [
        cubic_closed_form_suite as fn() -> Criterion,
        parabola_chord_function,
        quantum_referee,
        quadratic_exactness,
        invariant_suite,
        hessian_cross_check,
    ];
    let mut unexpected = Vec::new();
    for run in criteria {
        let c = run();
        println!("{} [{}] {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name);
        for (ok, text) in &c.details {
            println!("    {:4} {text}", mark(*ok));
        }
        let expected_failure = UNATTAINABLE.contains(&c.id);
        if (!c.pass && !expected_failure) || !c.notes_pass() {
            unexpected.push(c.id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: every deviation is one of the documented unattainable criteria {UNATTAINABLE:?}");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
