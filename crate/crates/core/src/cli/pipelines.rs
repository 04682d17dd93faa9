use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use super::config::{CausticSource, GradientChoice, InitialSymbol, KernelSource, Pipeline, Route};
use super::{Context, ExitStatus, StageError};
use crate::action::{
    central_time_derivative, evolve_reflection_field, evolve_translation_field, hj_residual, marinov_centre_field,
    ActionField, GradientSource, HjEquation,
};
use crate::dynamics::{integrate_double, integrate_single, ActionForm};
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::hamiltonian::HamiltonianSpec;
use crate::io::{write_csv, write_grid, write_kernel, write_symbol, write_table, GridSidecar};
use crate::oracle::cubic::CubicClosedForm;
use crate::oracle::quadratic::QuadraticFlow;
use crate::oracle::quantum::GaussianState;
use crate::propagators::{
    chord_kernel_grid, detect_caustics, detect_plane_caustics, mixed_centre_to_chord, mixed_chord_to_centre,
    weyl_kernel_grid, CausticEvent, CausticKind, KernelGrid, KernelKind,
};
use crate::surface::{Evolution, Plane};
use crate::symbols::{evolve_chord_from_line, evolve_chord_from_weyl, KernelFamily, LiouvilleKernels, SymbolGrid, SymbolKind};
use crate::symplectic::{ChordVector, DoublePhasePoint, PhasePoint};
use crate::Orientation;

type Staged<T> = std::result::Result<T, StageError>;

trait StageExt<T> {
    fn stage(self, name: &str) -> Staged<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, name: &str) -> Staged<T> {
        self.map_err(|e| StageError::new(name, e))
    }
}

pub(crate) fn run(pipeline: Pipeline, h: &HamiltonianSpec, ctx: &mut Context) -> Staged<()> {
    let evo = Evolution::new(h.clone())
        .with_orientation(ctx.orientation)
        .with_integrator(ctx.config.integrator.config());
    match pipeline {
        Pipeline::Trajectory => trajectory(&evo, ctx),
        Pipeline::Kernel => kernel(&evo, ctx),
        Pipeline::Evolve => evolve(&evo, ctx),
        Pipeline::Caustics => caustics(&evo, ctx),
        Pipeline::HjResidual => residual(&evo, h, ctx),
        Pipeline::OracleCompare => oracle_compare(&evo, ctx),
    }
}

fn numbered(stem: &str, i: usize) -> String {
    format!("{stem}_{i:03}")
}

/// Exact kernels for the Hamiltonians that have them.
fn closed_form(h: &HamiltonianSpec, orientation: Orientation, field: &str) -> Result<Box<dyn KernelFamily>> {
    if h.is_quadratic() {
        return Ok(Box::new(QuadraticFlow::oriented(h, orientation)?));
    }
    let terms: Vec<_> = h.polynomial().terms().collect();
    if let [(e, a)] = terms.as_slice() {
        if e.as_slice() == [3, 0] {
            return Ok(Box::new(CubicClosedForm::new(*a, h.hbar()).oriented(orientation)));
        }
    }
    Err(Error::Config {
        field: field.into(),
        message: "closed-form kernels exist only for quadratic Hamiltonians and a·p³".into(),
    })
}

fn trajectory(evo: &Evolution, ctx: &mut Context) -> Staged<()> {
    let section = ctx.config.trajectory.clone().expect("validated");
    let times = ctx.config.time_grid();
    let cfg = ctx.config.integrator.config();
    let dof = evo.dof();
    let x0 = PhasePoint::new(section.initial.clone()).stage("trajectory")?;
    let names = |prefix: &str| -> Vec<String> {
        if dof == 1 {
            vec![prefix.to_string()]
        } else {
            (1..=dof).map(|n| format!("{prefix}{n}")).collect()
        }
    };

    let mut header = vec!["t".to_string()];
    header.extend(names("p"));
    header.extend(names("q"));
    let mut rows = Vec::with_capacity(times.len());
    let bundle = match &section.chord {
        None => {
            let b = integrate_single(&evo.effective(), &x0, &times, &cfg).stage("integrate")?;
            for k in 0..b.len() {
                let mut row = vec![b.times[k]];
                row.extend(b.point(k).stage("integrate")?.as_slice());
                row.extend([b.action[k], b.energy[k]]);
                rows.push(row);
            }
            header.extend(["orbit_action".into(), "energy".into()]);
            b
        }
        Some(chord) => {
            let xi0 = ChordVector::new(chord.clone()).stage("trajectory")?;
            let start = DoublePhasePoint::new(x0, xi0).stage("trajectory")?;
            let b = integrate_double(&evo.double(), &start, &times, ActionForm::Centre, &cfg).stage("integrate")?;
            for k in 0..b.len() {
                let d = b.double_point(k).stage("integrate")?;
                let mut row = vec![b.times[k]];
                row.extend(d.centre.as_slice());
                row.extend(d.chord.as_slice());
                row.extend([b.action[k], b.energy[k]]);
                rows.push(row);
            }
            header.extend(names("xi_p"));
            header.extend(names("xi_q"));
            header.extend(["centre_action".into(), "double_hamiltonian".into()]);
            b
        }
    };
    ctx.manifest.stages.push("integrate".into());
    ctx.manifest.residual("energy_drift", bundle.max_energy_drift());
    ctx.manifest.residual("symplectic_defect", bundle.max_symplectic_defect());
    let path = ctx.output("trajectory.csv");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&path, &header, &rows).stage("write")?;
    ctx.manifest.stages.push("write".into());
    Ok(())
}

fn kernel(evo: &Evolution, ctx: &mut Context) -> Staged<()> {
    let section = ctx.config.kernel.clone().expect("validated");
    let (grid, chord_grid) = (ctx.config.grid, ctx.config.chord_grid());
    let anchor = section.anchor.unwrap_or([0.0, 0.0]);
    let tol = ctx.config.tolerances;
    for (i, &t) in ctx.config.times.iter().enumerate() {
        let k: KernelGrid = match section.kind {
            KernelKind::Weyl => weyl_kernel_grid(evo, &grid, t),
            KernelKind::Chord => chord_kernel_grid(evo, &chord_grid, t),
            KernelKind::CentreToChord => mixed_centre_to_chord(evo, &PhasePoint::pq(anchor[0], anchor[1]), &chord_grid, t),
            KernelKind::ChordToCentre => mixed_chord_to_centre(evo, &ChordVector::pq(anchor[0], anchor[1]), &grid, t),
            _ => unreachable!("rejected by validation"),
        }
        .stage("kernel")?;
        let masked = k.grid.len() - k.valid_count();
        ctx.manifest.count("masked_nodes", masked as u64);
        if let Some(tc) = k.first_caustic {
            ctx.manifest.diagnostic(&format!("first_caustic_{i:03}"), tc);
        }
        let name = serde_json::to_value(section.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let path = ctx.output(&numbered(&format!("kernel_{name}"), i));
        write_kernel(&path, &k).stage("write")?;

        if matches!(section.kind, KernelKind::CentreToChord | KernelKind::ChordToCentre) {
            let defect = k.unit_modulus_defect();
            let slot = ctx.manifest.diagnostics.entry("mixed_modulus_defect".into()).or_insert(0.0);
            *slot = slot.max(defect);
        }
        if tol.abort_on_caustic && masked > 0 {
            return Err(StageError::with_status(
                "kernel",
                ExitStatus::CausticAbort,
                Error::Invalid(format!("{masked} kernel nodes masked by caustics at t = {t}")),
            ));
        }
    }
    ctx.manifest.stages.push("kernel".into());
    Ok(())
}

fn evolve(evo: &Evolution, ctx: &mut Context) -> Staged<()> {
    let section = ctx.config.evolve.clone().expect("validated");
    let out = ctx.config.chord_grid();
    let family: Box<dyn KernelFamily> = match (section.route, section.kernels) {
        (Route::SmallChord, _) => Box::new(LiouvilleKernels::new(evo.clone())),
        (Route::Mixed, KernelSource::Numeric) => Box::new(evo.clone()),
        (Route::Mixed, KernelSource::ClosedForm) => {
            closed_form(&evo.hamiltonian, ctx.orientation, "evolve.kernels").stage("kernels")?
        }
    };
    let initial = match section.initial {
        InitialSymbol::Gaussian { q0, p0, sigma } => {
            let state = GaussianState::new(q0, p0, sigma, evo.hbar()).stage("initial")?;
            let two_pi_hbar = 2.0 * PI * evo.hbar();
            let w = SymbolGrid::from_fn(SymbolKind::Weyl, ctx.config.grid, evo.hbar(), |[p, q]| {
                Complex64::new(two_pi_hbar * state.wigner(p, q), 0.0)
            })
            .stage("initial")?;
            write_symbol(&ctx.output("initial_weyl"), &w).stage("write")?;
            Some(w)
        }
        InitialSymbol::Line { .. } => None,
    };
    ctx.manifest.stages.push("initial".into());

    for (i, &t) in ctx.config.times.iter().enumerate() {
        let evolved = match (&initial, &section.initial) {
            (Some(w), _) => evolve_chord_from_weyl(w, family.as_ref(), &out, t),
            (None, InitialSymbol::Line { q0, scale }) => evolve_chord_from_line(*q0, family.as_ref(), &out, t, *scale),
            _ => unreachable!(),
        }
        .stage("evolve")?;
        ctx.manifest.residual("max_phase_step", evolved.max_phase_step);
        ctx.manifest.count("masked_outputs", evolved.masked_outputs.len() as u64);
        ctx.manifest.count("masked_pairs", evolved.masked_pairs as u64);
        if initial.is_some() {
            if let Some(k) = out.origin() {
                ctx.manifest.residual("trace_defect", (evolved.symbol.values[k] - 1.0).norm());
            }
        }
        let mut dump = evolved.symbol;
        for &o in &evolved.masked_outputs {
            dump.values[o] = Complex64::new(f64::NAN, f64::NAN);
        }
        write_symbol(&ctx.output(&numbered("chord", i)), &dump).stage("write")?;
    }
    ctx.manifest.stages.push("evolve".into());
    Ok(())
}

#[derive(Debug, Serialize)]
struct EventRow {
    time: f64,
    kind: CausticKind,
    det_value: f64,
    tangential: bool,
    maslov: i32,
    p: f64,
    q: f64,
    xi_p: Option<f64>,
    xi_q: Option<f64>,
}

impl EventRow {
    fn from_event(e: &CausticEvent) -> Result<Self> {
        let (x, xi) = if e.location.len() == 4 {
            let d = DoublePhasePoint::from_canonical(&DVector::from_column_slice(&e.location))?;
            ([d.centre.p(0), d.centre.q(0)], Some([d.chord.p(0), d.chord.q(0)]))
        } else {
            ([e.location[0], e.location[1]], None)
        };
        Ok(Self {
            time: e.time,
            kind: e.kind,
            det_value: e.det_value,
            tangential: e.tangential,
            maslov: e.maslov,
            p: x[0],
            q: x[1],
            xi_p: xi.map(|v| v[0]),
            xi_q: xi.map(|v| v[1]),
        })
    }
}

fn caustics(evo: &Evolution, ctx: &mut Context) -> Staged<()> {
    let section = ctx.config.caustics.clone().expect("validated");
    let times = ctx.config.time_grid();
    let events = match section.source {
        CausticSource::Orbit(x) => detect_caustics(evo, &PhasePoint::pq(x[0], x[1]), &times),
        CausticSource::Reflection(x) => {
            detect_plane_caustics(evo, &Plane::Reflection(PhasePoint::pq(x[0], x[1])), &ctx.config.chord_grid(), &times)
        }
        CausticSource::Translation(xi) => {
            detect_plane_caustics(evo, &Plane::Translation(ChordVector::pq(xi[0], xi[1])), &ctx.config.grid, &times)
        }
    }
    .stage("caustics")?;
    ctx.manifest.stages.push("caustics".into());
    for kind in [CausticKind::Centre, CausticKind::Chord] {
        let of_kind: Vec<&CausticEvent> = events.iter().filter(|e| e.kind == kind).collect();
        let label = match kind {
            CausticKind::Centre => "centre",
            CausticKind::Chord => "chord",
        };
        ctx.manifest.count(&format!("{label}_events"), of_kind.len() as u64);
        if let Some(first) = of_kind.first() {
            ctx.manifest.diagnostic(&format!("first_{label}_caustic"), first.time);
        }
    }
    let rows = events.iter().map(EventRow::from_event).collect::<Result<Vec<_>>>().stage("write")?;
    write_csv(&ctx.output("caustics.csv"), &rows).stage("write")?;
    ctx.manifest.stages.push("write".into());
    Ok(())
}

fn residual(evo: &Evolution, h: &HamiltonianSpec, ctx: &mut Context) -> Staged<()> {
    let section = ctx.config.hj_residual.clone().expect("validated");
    let dt = section.dt.unwrap_or(ctx.config.integrator.step);
    let anchor = section.anchor.unwrap_or([0.0, 0.0]);
    let (grid, chord_grid) = (ctx.config.grid, ctx.config.chord_grid());
    let field = |t: f64| -> Result<ActionField> {
        match section.equation {
            HjEquation::Marinov => marinov_centre_field(evo, &grid, t),
            HjEquation::HeisenbergCentre => evolve_translation_field(evo, &ChordVector::pq(anchor[0], anchor[1]), &grid, t),
            HjEquation::HeisenbergChord => evolve_reflection_field(evo, &PhasePoint::pq(anchor[0], anchor[1]), &chord_grid, t),
            HjEquation::SchroedingerChord => unreachable!("rejected by validation"),
        }
    };
    let gradient = match section.gradient {
        GradientChoice::Stored => GradientSource::Stored,
        GradientChoice::FiniteDifference => GradientSource::FiniteDifference,
    };
    let tol = ctx.config.tolerances.hj_residual;
    let mut worst: f64 = 0.0;
    for (i, &t) in ctx.config.times.iter().enumerate() {
        let (before, now, after) = (field(t - dt), field(t), field(t + dt));
        let ds_dt = central_time_derivative(&before.stage("field")?, &after.stage("field")?).stage("field")?;
        let now = now.stage("field")?;
        let r = hj_residual(&now, &ds_dt, h, ctx.orientation, section.equation, gradient).stage("residual")?;
        worst = worst.max(r.max_interior);
        ctx.manifest.residual("hj_residual", r.max_interior);
        ctx.manifest.count("masked_nodes", r.masked as u64);
        let values: Vec<Complex64> = r.values.iter().map(|&v| Complex64::new(v, if v.is_nan() { f64::NAN } else { 0.0 })).collect();
        let meta = GridSidecar::new(&r.grid, "hj-residual", t, evo.hbar());
        write_grid(&ctx.output(&numbered("residual", i)), &meta, &values).stage("write")?;
    }
    ctx.manifest.stages.push("residual".into());
    if worst > tol {
        return Err(StageError::new(
            "residual",
            Error::Invalid(format!("Hamilton-Jacobi residual {worst:e} exceeds {tol:e}")),
        ));
    }
    Ok(())
}

fn difference(engine: &KernelGrid, reference: &dyn Fn([f64; 2]) -> Result<Complex64>) -> Result<(Vec<Complex64>, f64)> {
    let mut worst: f64 = 0.0;
    let mut diff = Vec::with_capacity(engine.grid.len());
    for (k, v) in engine.values.iter().enumerate() {
        if !v.valid {
            diff.push(Complex64::new(f64::NAN, f64::NAN));
            continue;
        }
        match reference(engine.grid.point(k)) {
            Ok(r) => {
                let d = v.complex() - r;
                worst = worst.max(d.norm());
                diff.push(d);
            }
            Err(e) if e.is_caustic() => diff.push(Complex64::new(f64::NAN, f64::NAN)),
            Err(e) => return Err(e),
        }
    }
    Ok((diff, worst))
}

fn oracle_compare(evo: &Evolution, ctx: &mut Context) -> Staged<()> {
    let section = ctx.config.oracle_compare.clone().expect("validated");
    let oracle = closed_form(&evo.hamiltonian, ctx.orientation, "hamiltonian").stage("oracle")?;
    let a = section.anchor;
    let (grid, chord_grid): (Grid2, Grid2) = (ctx.config.grid, ctx.config.chord_grid());
    let tol = ctx.config.tolerances.oracle;
    let mut worst: f64 = 0.0;
    for (i, &t) in ctx.config.times.iter().enumerate() {
        let r = mixed_centre_to_chord(evo, &PhasePoint::pq(a[0], a[1]), &chord_grid, t).stage("engine")?;
        let (diff, d1) = difference(&r, &|xi| Ok(oracle.centre_to_chord(a, xi, t)?.complex())).stage("oracle")?;
        let mut meta = GridSidecar::new(&chord_grid, "diff-centre-to-chord", t, evo.hbar());
        meta.anchor = Some(a);
        write_grid(&ctx.output(&numbered("diff_centre_to_chord", i)), &meta, &diff).stage("write")?;

        let tk = mixed_chord_to_centre(evo, &ChordVector::pq(a[0], a[1]), &grid, t).stage("engine")?;
        let (diff, d2) = difference(&tk, &|x| Ok(oracle.chord_to_centre(a, x, t)?.complex())).stage("oracle")?;
        let mut meta = GridSidecar::new(&grid, "diff-chord-to-centre", t, evo.hbar());
        meta.anchor = Some(a);
        write_grid(&ctx.output(&numbered("diff_chord_to_centre", i)), &meta, &diff).stage("write")?;

        ctx.manifest.residual("oracle_centre_to_chord", d1);
        ctx.manifest.residual("oracle_chord_to_centre", d2);
        ctx.manifest.count("masked_nodes", (r.grid.len() - r.valid_count() + tk.grid.len() - tk.valid_count()) as u64);
        worst = worst.max(d1).max(d2);
    }
    ctx.manifest.stages.push("compare".into());
    if worst > tol {
        return Err(StageError::new(
            "compare",
            Error::Invalid(format!("max kernel discrepancy {worst:e} exceeds {tol:e}")),
        ));
    }
    Ok(())
}
