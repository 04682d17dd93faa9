use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::action::HjEquation;
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2};
use crate::hamiltonian::HamiltonianSpec;
use crate::propagators::KernelKind;
use crate::Orientation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Trajectory,
    Kernel,
    Evolve,
    Caustics,
    HjResidual,
    OracleCompare,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Trajectory => "trajectory",
            Pipeline::Kernel => "kernel",
            Pipeline::Evolve => "evolve",
            Pipeline::Caustics => "caustics",
            Pipeline::HjResidual => "hj-residual",
            Pipeline::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    /// Exponents of `(p₁…p_L, q₁…q_L)`.
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianSource {
    /// `harmonic`, `quartic`, `free`, or `cubic` (with `a`).
    Preset {
        name: String,
        #[serde(default = "one")]
        a: f64,
    },
    /// Text format: one `coeff i j` per line.
    Text(String),
    /// Path to a text-format file, relative to the config file.
    File(PathBuf),
    Terms(Vec<Term>),
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub step: f64,
    pub tol: f64,
    pub adaptive: bool,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            step: d.step,
            tol: d.tol,
            adaptive: d.adaptive,
        }
    }
}

impl IntegratorSettings {
    pub fn config(&self) -> IntegratorConfig {
        IntegratorConfig {
            step: self.step,
            tol: self.tol,
            adaptive: self.adaptive,
            ..IntegratorConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Guard on the largest interior Hamilton-Jacobi residual.
    pub hj_residual: f64,
    /// Guard on engine-vs-oracle kernel discrepancies.
    pub oracle: f64,
    /// Exit with the caustic status when any kernel node is masked.
    pub abort_on_caustic: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hj_residual: 1e-6,
            oracle: 1e-6,
            abort_on_caustic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// `(p₁…p_L, q₁…q_L)`.
    pub initial: Vec<f64>,
    /// When present, the double-phase-space characteristic through `(initial, chord)`.
    #[serde(default)]
    pub chord: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelKind,
    /// Fixed label of a mixed kernel.
    #[serde(default)]
    pub anchor: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSymbol {
    /// Weyl symbol `δ(q − q0)`.
    Line {
        q0: f64,
        /// Momentum scale of the phase-shape check along the line.
        #[serde(default = "one")]
        scale: f64,
    },
    /// Coherent-state projector.
    Gaussian { q0: f64, p0: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    #[default]
    Mixed,
    SmallChord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSource {
    #[default]
    Numeric,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub initial: InitialSymbol,
    #[serde(default)]
    pub route: Route,
    #[serde(default)]
    pub kernels: KernelSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CausticSource {
    Orbit([f64; 2]),
    Reflection([f64; 2]),
    Translation([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausticsSection {
    pub source: CausticSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradientChoice {
    #[default]
    Stored,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjSection {
    pub equation: HjEquation,
    #[serde(default)]
    pub anchor: Option<[f64; 2]>,
    /// Half-width of the central time difference (defaults to the integrator step).
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub gradient: GradientChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub anchor: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hamiltonian: HamiltonianSource,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one_usize")]
    pub dof: usize,
    /// Must match the subcommand when given.
    #[serde(default)]
    pub pipeline: Option<Pipeline>,
    /// Centre grid.
    #[serde(default = "default_grid")]
    pub grid: Grid2,
    /// Chord grid (defaults to the centre grid).
    #[serde(default)]
    pub chord_grid: Option<Grid2>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub convention: Option<Orientation>,
    #[serde(default)]
    pub trajectory: Option<TrajectorySection>,
    #[serde(default)]
    pub kernel: Option<KernelSection>,
    #[serde(default)]
    pub evolve: Option<EvolveSection>,
    #[serde(default)]
    pub caustics: Option<CausticsSection>,
    #[serde(default)]
    pub hj_residual: Option<HjSection>,
    #[serde(default)]
    pub oracle_compare: Option<OracleSection>,
}

pub fn default_grid() -> Grid2 {
    Grid2::square(8.0, 257).expect("default grid")
}

fn bad(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn check_axis(field: &str, a: &Axis) -> Result<()> {
    Axis::new(a.min, a.max, a.n).map(|_| ()).map_err(|e| bad(field, e.to_string()))
}

fn check_len(field: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(bad(field, format!("expected {len} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(field, "entries must be finite"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| bad("<document>", e.to_string()))
    }

    /// `times` with `0` prepended when missing: the sampling grid for characteristics.
    pub fn time_grid(&self) -> Vec<f64> {
        let mut grid = Vec::with_capacity(self.times.len() + 1);
        if self.times.first() != Some(&0.0) {
            grid.push(0.0);
        }
        grid.extend(&self.times);
        grid
    }

    pub fn chord_grid(&self) -> Grid2 {
        self.chord_grid.unwrap_or(self.grid)
    }

    /// Checks every field the selected pipeline reads.
    pub fn validate(&self, pipeline: Pipeline) -> Result<()> {
        if let Some(p) = self.pipeline {
            if p != pipeline {
                return Err(bad("pipeline", format!("config is for `{}`, subcommand is `{}`", p.name(), pipeline.name())));
            }
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(bad("hbar", format!("must be positive, got {}", self.hbar)));
        }
        if self.dof == 0 {
            return Err(bad("dof", "must be at least 1"));
        }
        if pipeline != Pipeline::Trajectory && self.dof != 1 {
            return Err(bad("dof", "grid pipelines need dof = 1"));
        }
        if self.times.is_empty() {
            return Err(bad("times", "at least one time is required"));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(bad("times", "times must be finite"));
        }
        if matches!(pipeline, Pipeline::Trajectory | Pipeline::Caustics) {
            let grid = self.time_grid();
            let up = grid.len() < 2 || grid[1] > grid[0];
            if grid.windows(2).any(|w| (w[1] > w[0]) != up || w[1] == w[0]) {
                return Err(bad("times", "trajectory times must move monotonically away from 0"));
            }
        }
        let s = &self.integrator;
        if !(s.step > 0.0 && s.step.is_finite()) {
            return Err(bad("integrator.step", "must be positive"));
        }
        if !(s.tol > 0.0) {
            return Err(bad("integrator.tol", "must be positive"));
        }
        for (field, v) in [
            ("tolerances.hj_residual", self.tolerances.hj_residual),
            ("tolerances.oracle", self.tolerances.oracle),
        ] {
            if !(v > 0.0) {
                return Err(bad(field, "must be positive"));
            }
        }
        check_axis("grid.p", &self.grid.p)?;
        check_axis("grid.q", &self.grid.q)?;
        if let Some(g) = &self.chord_grid {
            check_axis("chord_grid.p", &g.p)?;
            check_axis("chord_grid.q", &g.q)?;
        }

        let missing = |name: &str| bad(name, format!("section required by `{}`", pipeline.name()));
        match pipeline {
            Pipeline::Trajectory => {
                let t = self.trajectory.as_ref().ok_or_else(|| missing("trajectory"))?;
                check_len("trajectory.initial", &t.initial, 2 * self.dof)?;
                if let Some(c) = &t.chord {
                    check_len("trajectory.chord", c, 2 * self.dof)?;
                }
            }
            Pipeline::Kernel => {
                let k = self.kernel.as_ref().ok_or_else(|| missing("kernel"))?;
                match k.kind {
                    KernelKind::CentreToChord | KernelKind::ChordToCentre => {
                        let a = k.anchor.ok_or_else(|| bad("kernel.anchor", "mixed kernels need an anchor"))?;
                        check_len("kernel.anchor", &a, 2)?;
                    }
                    KernelKind::Weyl | KernelKind::Chord => {}
                    other => return Err(bad("kernel.kind", format!("{other:?} is built by the symbol calculus, not by this pipeline"))),
                }
            }
            Pipeline::Evolve => {
                let e = self.evolve.as_ref().ok_or_else(|| missing("evolve"))?;
                match e.initial {
                    InitialSymbol::Line { q0, scale } => {
                        check_len("evolve.initial.line", &[q0, scale], 2)?;
                        if !(scale > 0.0) {
                            return Err(bad("evolve.initial.line.scale", "must be positive"));
                        }
                    }
                    InitialSymbol::Gaussian { q0, p0, sigma } => {
                        check_len("evolve.initial.gaussian", &[q0, p0, sigma], 3)?;
                        if !(sigma > 0.0) {
                            return Err(bad("evolve.initial.gaussian.sigma", "must be positive"));
                        }
                    }
                }
                if e.route == Route::SmallChord && e.kernels == KernelSource::ClosedForm {
                    return Err(bad("evolve.kernels", "the small-chord route has no closed-form kernels"));
                }
            }
            Pipeline::Caustics => {
                let c = self.caustics.as_ref().ok_or_else(|| missing("caustics"))?;
                let v = match &c.source {
                    CausticSource::Orbit(v) | CausticSource::Reflection(v) | CausticSource::Translation(v) => v,
                };
                check_len("caustics.source", v, 2)?;
            }
            Pipeline::HjResidual => {
                let h = self.hj_residual.as_ref().ok_or_else(|| missing("hj_residual"))?;
                match h.equation {
                    HjEquation::Marinov => {}
                    HjEquation::HeisenbergCentre | HjEquation::HeisenbergChord => {
                        let a = h.anchor.ok_or_else(|| bad("hj_residual.anchor", "Heisenberg fields need an anchor"))?;
                        check_len("hj_residual.anchor", &a, 2)?;
                    }
                    HjEquation::SchroedingerChord => {
                        return Err(bad("hj_residual.equation", "no grid field is built for schroedinger-chord"));
                    }
                }
                if let Some(dt) = h.dt {
                    if !(dt > 0.0 && dt.is_finite()) {
                        return Err(bad("hj_residual.dt", "must be positive"));
                    }
                }
            }
            Pipeline::OracleCompare => {
                let o = self.oracle_compare.as_ref().ok_or_else(|| missing("oracle_compare"))?;
                check_len("oracle_compare.anchor", &o.anchor, 2)?;
            }
        }
        Ok(())
    }

    /// Builds the Hamiltonian; `base` resolves relative file paths.
    pub fn hamiltonian(&self, base: &Path) -> Result<HamiltonianSpec> {
        let h = match &self.hamiltonian {
            HamiltonianSource::Preset { name, a } => match name.as_str() {
                "harmonic" => HamiltonianSpec::harmonic(),
                "quartic" => HamiltonianSpec::quartic(),
                "free" => HamiltonianSpec::free_particle(),
                "cubic" => HamiltonianSpec::cubic(*a),
                other => return Err(bad("hamiltonian.preset.name", format!("unknown preset `{other}`"))),
            },
            HamiltonianSource::Text(src) => {
                HamiltonianSpec::parse_text(src, self.hbar, "inline").map_err(|e| bad("hamiltonian.text", e.to_string()))?
            }
            HamiltonianSource::File(path) => {
                let full = base.join(path);
                let src = fs::read_to_string(&full).map_err(|e| bad("hamiltonian.file", format!("{}: {e}", full.display())))?;
                HamiltonianSpec::parse_text(&src, self.hbar, path.display().to_string())
                    .map_err(|e| bad("hamiltonian.file", e.to_string()))?
            }
            HamiltonianSource::Terms(terms) => HamiltonianSpec::from_terms(
                self.dof,
                terms.iter().map(|t| (t.exponents.clone(), t.coeff)),
                self.hbar,
                "terms",
            )
            .map_err(|e| bad("hamiltonian.terms", e.to_string()))?,
        };
        if h.dof() != self.dof {
            return Err(bad("dof", format!("Hamiltonian has {} freedoms, config says {}", h.dof(), self.dof)));
        }
        h.with_hbar(self.hbar).map_err(|e| bad("hbar", e.to_string()))
    }
}
