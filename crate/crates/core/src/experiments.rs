//! Experiment configs, scenario presets, and the commands behind the CLI.
//!
//! A config is one JSON document. Presets supply a base document that the
//! user's document overlays, and `key=value` assignments on dotted paths
//! override both.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::curve::{CurveError, DiscreteCurve, IsoRatio};
use crate::flow::{self, FlowConfig, FlowError, FlowReport, GateResult, SymmetryOptions, Verdict};
use crate::geometry::Vec2;
use crate::io::{self, IoError};
use crate::minimize::{
    self, FreeBoundaryProblem, MinimizeError, MinimizeOptions, MinimizeReport, SymmetricIsoReport,
    VariationReport,
};
use crate::shapes;
use crate::symmetry::{self, SymmetryCheck, SymmetryError, SymmetrySpec};
use crate::winding::{banchoff_pohl_area, winding_field, BpEstimate};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl ExperimentError {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Input(_) => 2,
            ExperimentError::Numerical(_) => 3,
        }
    }
}

impl From<FlowError> for ExperimentError {
    fn from(e: FlowError) -> Self {
        if e.is_numerical() {
            ExperimentError::Numerical(e.to_string())
        } else {
            ExperimentError::Input(e.to_string())
        }
    }
}

impl From<MinimizeError> for ExperimentError {
    fn from(e: MinimizeError) -> Self {
        if e.is_numerical() {
            ExperimentError::Numerical(e.to_string())
        } else {
            ExperimentError::Input(e.to_string())
        }
    }
}

impl From<CurveError> for ExperimentError {
    fn from(e: CurveError) -> Self {
        ExperimentError::Input(e.to_string())
    }
}

impl From<SymmetryError> for ExperimentError {
    fn from(e: SymmetryError) -> Self {
        ExperimentError::Input(e.to_string())
    }
}

impl From<IoError> for ExperimentError {
    fn from(e: IoError) -> Self {
        ExperimentError::Input(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Metrics,
    Flow,
    Minimize,
    VerifyIso,
    Sweep,
}

impl FromStr for Command {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| ExperimentError::Input(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `n`-covered circle with an `(m, i)`-symmetric radial perturbation.
    StableNm,
    /// Doubly winding limaçon whose inner loop collapses.
    Limacon,
    /// Figure-eight, for the decay of `∫w²`.
    FigureEight,
    /// Non-convex 8-fold flower on the doubly covered circle.
    WaitingTime,
}

impl Preset {
    /// Base document the user's config overlays.
    pub fn defaults(self) -> Value {
        match self {
            Preset::StableNm => json!({
                "command": "flow",
                "input": {"kind": "perturbed_circle", "n": 2, "m": 4, "amplitude": 0.03, "radius": 1.0},
                "flow": {"vertices": 512, "sample_stride": 20, "frame_stride": 200, "stop": {"t_end": 10.0}},
            }),
            Preset::Limacon => json!({
                "command": "flow",
                "input": {"kind": "limacon", "a": 1.0, "b": 0.75},
                "flow": {
                    "vertices": 512,
                    "redistribution": {"mode": "curvature", "beta": 0.9, "sweeps": 2},
                    "dt": {"policy": "adaptive", "dt_max": 1e-2, "safety_h4": 1e6, "safety_curvature": 0.02},
                    "stop": {"t_end": 1.0, "bending_energy_threshold": 1e3, "min_edge_fraction": 1e-7},
                    "sample_stride": 200,
                    "frame_stride": 2000,
                },
            }),
            Preset::FigureEight => json!({
                "command": "flow",
                "input": {"kind": "figure_eight", "lobe_area": 1.0},
                "flow": {
                    "vertices": 512,
                    "stop": {"t_end": 0.1},
                    "bp_interval": 0.01,
                    "bp_spacing": 0.01,
                    "sample_stride": 1000,
                    "frame_stride": 2000,
                },
            }),
            Preset::WaitingTime => json!({
                "command": "flow",
                "input": {"kind": "perturbed_circle", "n": 2, "m": 8, "amplitude": 0.1, "radius": 1.0},
                "flow": {"vertices": 512, "sample_stride": 20, "frame_stride": 200, "stop": {"t_end": 10.0}},
            }),
        }
    }
}

/// Where the input curve comes from. Generators without `vertices` use the
/// flow's vertex count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSource {
    File {
        path: PathBuf,
    },
    CoveredCircle {
        n: u32,
        #[serde(default = "one")]
        radius: f64,
        vertices: Option<usize>,
    },
    PerturbedCircle {
        n: u32,
        m: u32,
        amplitude: f64,
        #[serde(default = "one")]
        radius: f64,
        vertices: Option<usize>,
    },
    Ellipse {
        a: f64,
        b: f64,
        vertices: Option<usize>,
    },
    Limacon {
        a: f64,
        b: f64,
        vertices: Option<usize>,
    },
    FigureEight {
        #[serde(default = "one")]
        lobe_area: f64,
        vertices: Option<usize>,
    },
    VanishingLoops {
        n: i64,
        m: u32,
        loop_radius: f64,
    },
    /// Unit circle plus seeded random Fourier modes.
    RandomSmooth {
        modes: usize,
        vertices: Option<usize>,
    },
}

fn one() -> f64 {
    1.0
}

impl CurveSource {
    /// True for closed-form generators that can be resampled exactly.
    pub fn is_generator(&self) -> bool {
        !matches!(self, CurveSource::File { .. })
    }

    /// `(m, i)` symmetry the source has by construction.
    pub fn symmetry(&self) -> Option<(u32, u32)> {
        match *self {
            CurveSource::PerturbedCircle { n, m, .. } if m > 0 => {
                symmetry::index_i(n as i64, m as i64).ok().map(|i| (m, i))
            }
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            CurveSource::File { path } => path.display().to_string(),
            CurveSource::CoveredCircle { n, .. } => format!("covered_circle_n{n}"),
            CurveSource::PerturbedCircle {
                n, m, amplitude, ..
            } => {
                format!("perturbed_circle_n{n}_m{m}_a{amplitude}")
            }
            CurveSource::Ellipse { a, b, .. } => format!("ellipse_{a}_{b}"),
            CurveSource::Limacon { a, b, .. } => format!("limacon_{a}_{b}"),
            CurveSource::FigureEight { .. } => "figure_eight".into(),
            CurveSource::VanishingLoops { n, m, loop_radius } => {
                format!("vanishing_loops_n{n}_m{m}_r{loop_radius}")
            }
            CurveSource::RandomSmooth { modes, .. } => format!("random_smooth_{modes}"),
        }
    }

    /// Builds the curve; `default_vertices` fills an unset vertex count.
    pub fn build(&self, default_vertices: usize, seed: u64) -> Result<DiscreteCurve> {
        let count = |v: &Option<usize>| v.unwrap_or(default_vertices);
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ExperimentError::Input(format!(
                    "{name} must be positive, got {x}"
                )))
            }
        };
        let curve = match self {
            CurveSource::File { path } => io::read_curve(path)?.0,
            CurveSource::CoveredCircle {
                n,
                radius,
                vertices,
            } => {
                positive("radius", *radius)?;
                symmetry::covered_circle(*n, *radius, count(vertices))?
            }
            CurveSource::PerturbedCircle {
                n,
                m,
                amplitude,
                radius,
                vertices,
            } => {
                positive("radius", *radius)?;
                let v = count(vertices);
                if *n == 0 || *m == 0 || v < 3 * *n as usize {
                    return Err(ExperimentError::Input(format!(
                        "perturbed circle needs n, m >= 1 and at least 3n vertices (n={n}, m={m}, vertices={v})"
                    )));
                }
                if !(amplitude.abs() < 1.0) {
                    return Err(ExperimentError::Input(format!(
                        "amplitude must lie in (-1, 1), got {amplitude}"
                    )));
                }
                DiscreteCurve::closed(
                    shapes::perturbed_covered_circle(*n, *m, *amplitude, *radius, v)
                        .into_vertices(),
                )?
            }
            CurveSource::Ellipse { a, b, vertices } => {
                positive("a", *a)?;
                positive("b", *b)?;
                DiscreteCurve::closed(shapes::ellipse(*a, *b, count(vertices)).into_vertices())?
            }
            CurveSource::Limacon { a, b, vertices } => {
                positive("a", *a)?;
                DiscreteCurve::closed(shapes::limacon(*a, *b, count(vertices)).into_vertices())?
            }
            CurveSource::FigureEight {
                lobe_area,
                vertices,
            } => {
                positive("lobe_area", *lobe_area)?;
                DiscreteCurve::closed(
                    shapes::figure_eight(count(vertices), *lobe_area).into_vertices(),
                )?
            }
            CurveSource::VanishingLoops { n, m, loop_radius } => {
                symmetry::vanishing_loop_curve(*n, *m, *loop_radius)?
            }
            CurveSource::RandomSmooth { modes, vertices } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                DiscreteCurve::closed(
                    shapes::random_smooth_closed(&mut rng, count(vertices), *modes).into_vertices(),
                )?
            }
        };
        Ok(curve)
    }
}

/// One sweep axis: every value assigns all paths in `set`; with several
/// paths each value is an array holding one entry per path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub set: Vec<String>,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Command run in every cell.
    #[serde(default = "flow_command")]
    pub command: Command,
    /// Cells are the cartesian product of the axes, first axis slowest.
    pub axes: Vec<SweepAxis>,
}

fn flow_command() -> Command {
    Command::Flow
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub preset: Option<Preset>,
    pub input: Option<CurveSource>,
    pub flow: FlowConfig,
    pub problem: Option<FreeBoundaryProblem>,
    pub minimize: MinimizeOptions,
    /// Symmetry order for `verify-iso` and the symmetry report of `metrics`.
    pub symmetry_order: Option<u32>,
    /// Monitor the source's own symmetry when `flow.symmetry` is unset.
    pub auto_symmetry: bool,
    /// Vertex count at which generator inputs are re-evaluated for the
    /// reference smallness gate.
    pub gate_vertices: usize,
    /// Lattice spacing of the optional winding-field CSV of `metrics`.
    pub winding_spacing: Option<f64>,
    pub sweep: Option<SweepSpec>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            preset: None,
            input: None,
            flow: FlowConfig::default(),
            problem: None,
            minimize: MinimizeOptions::default(),
            symmetry_order: None,
            auto_symmetry: true,
            gate_vertices: 8192,
            winding_spacing: None,
            sweep: None,
            seed: 0,
            output_dir: None,
        }
    }
}

/// Sets `path` (dot separated) in `doc`, creating objects on the way. The
/// value is parsed as JSON and kept as a string when that fails.
pub fn set_path(doc: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_value(doc, path, value)
}

fn set_value(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ExperimentError::Input(format!("bad key path {path:?}")));
    }
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        let Value::Object(map) = node else {
            return Err(ExperimentError::Input(format!(
                "{path:?}: {key:?} is not an object"
            )));
        };
        node = map.entry(key.to_string()).or_insert(Value::Null);
    }
    if node.is_null() {
        *node = Value::Object(Map::new());
    }
    let Value::Object(map) = node else {
        return Err(ExperimentError::Input(format!(
            "{path:?}: parent is not an object"
        )));
    };
    map.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

const TAGS: [&str; 3] = ["kind", "policy", "mode"];

/// Recursive object merge. An overlay object whose enum tag differs from the
/// base replaces it instead of merging.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            let retagged = TAGS
                .iter()
                .any(|t| o.get(*t).is_some_and(|v| b.get(*t).is_some_and(|w| w != v)));
            if retagged {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Layers preset defaults, the user document, and `key=value` assignments.
pub fn resolve_document(user: Option<&str>, assignments: &[String]) -> Result<Value> {
    let mut doc = match user {
        Some(text) => serde_json::from_str(text)
            .map_err(|e| ExperimentError::Input(format!("config: {e}")))?,
        None => Value::Object(Map::new()),
    };
    if !doc.is_object() {
        return Err(ExperimentError::Input(
            "config must be a JSON object".into(),
        ));
    }
    for a in assignments {
        let Some((key, raw)) = a.split_once('=') else {
            return Err(ExperimentError::Input(format!(
                "expected key=value, got {a:?}"
            )));
        };
        set_path(&mut doc, key.trim(), raw.trim())?;
    }
    let preset: Option<Preset> = match doc.get("preset") {
        None | Some(Value::Null) => None,
        Some(p) => Some(
            serde_json::from_value(p.clone())
                .map_err(|_| ExperimentError::Input(format!("unknown preset {p}")))?,
        ),
    };
    Ok(match preset {
        Some(p) => {
            let mut base = p.defaults();
            merge(&mut base, doc);
            base
        }
        None => doc,
    })
}

pub fn config_from_document(doc: Value) -> Result<ExperimentConfig> {
    serde_json::from_value(doc).map_err(|e| ExperimentError::Input(format!("config: {e}")))
}

/// [`resolve_document`] followed by deserialization.
pub fn load_config(user: Option<&str>, assignments: &[String]) -> Result<ExperimentConfig> {
    config_from_document(resolve_document(user, assignments)?)
}

/// Output of `metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub name: String,
    pub closed: bool,
    pub vertices: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "A")]
    pub area: f64,
    #[serde(rename = "N")]
    pub rotation: Option<i64>,
    #[serde(rename = "I")]
    pub iso_ratio: Option<IsoRatio>,
    pub kosc: Option<f64>,
    pub bending: Option<f64>,
    pub kstar: Option<f64>,
    pub gate: Option<GateResult>,
    pub symmetry: Option<SymmetryCheck>,
    pub bp: Option<BpEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub name: String,
    pub report: FlowReport,
    /// Gate on the generator re-evaluated at `gate_vertices`.
    pub reference_gate: Option<GateResult>,
    pub symmetry: Option<SymmetryOptions>,
    #[serde(skip)]
    pub initial_curve: Option<DiscreteCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOutcome {
    pub variation: VariationReport,
    pub report: MinimizeReport,
    #[serde(skip)]
    pub curve: Option<DiscreteCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyIsoOutcome {
    pub name: String,
    pub report: SymmetricIsoReport,
}

/// One sweep cell. Failed cells carry the error and no results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub assignments: Vec<(String, Value)>,
    pub error: Option<String>,
    pub verdict: Option<Verdict>,
    pub t_final: Option<f64>,
    pub steps: Option<usize>,
    pub area_drift: Option<f64>,
    #[serde(rename = "L")]
    pub length: Option<f64>,
    #[serde(rename = "A")]
    pub area: Option<f64>,
    #[serde(rename = "N")]
    pub rotation: Option<i64>,
    #[serde(rename = "I")]
    pub iso_ratio: Option<IsoRatio>,
    pub kosc: Option<f64>,
    pub gate_passed: Option<bool>,
    pub kosc_margin: Option<f64>,
    pub iso_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Metrics(MetricsSummary),
    Flow(Box<FlowOutcome>),
    Minimize(Box<MinimizeOutcome>),
    VerifyIso(VerifyIsoOutcome),
    Sweep(Vec<SweepRow>),
}

fn command_of(cfg: &ExperimentConfig) -> Result<Command> {
    cfg.command
        .ok_or_else(|| ExperimentError::Input("no command given".into()))
}

fn input_curve(cfg: &ExperimentConfig) -> Result<(DiscreteCurve, &CurveSource)> {
    let src = cfg
        .input
        .as_ref()
        .ok_or_else(|| ExperimentError::Input("this command needs an `input` curve".into()))?;
    Ok((src.build(cfg.flow.vertices, cfg.seed)?, src))
}

pub fn metrics(cfg: &ExperimentConfig) -> Result<MetricsSummary> {
    let (curve, src) = input_curve(cfg)?;
    metrics_of(&curve, src.name(), cfg)
}

fn metrics_of(
    curve: &DiscreteCurve,
    name: String,
    cfg: &ExperimentConfig,
) -> Result<MetricsSummary> {
    let mut out = MetricsSummary {
        name,
        closed: curve.is_closed(),
        vertices: curve.len(),
        length: curve.length(),
        area: if curve.is_closed() {
            curve.signed_area()?
        } else {
            curve.sector_area()
        },
        rotation: None,
        iso_ratio: None,
        kosc: None,
        bending: None,
        kstar: None,
        gate: None,
        symmetry: None,
        bp: None,
    };
    if !curve.is_closed() {
        return Ok(out);
    }
    let m = curve.metrics()?;
    out.rotation = Some(m.rotation_number);
    out.iso_ratio = Some(m.iso_ratio);
    out.kosc = Some(m.k_osc);
    out.bending = Some(m.bending_energy);
    if m.rotation_number >= 1 {
        let n = m.rotation_number as u32;
        let k = flow::kstar(n);
        out.kstar = Some(k);
        out.gate = Some(flow::smallness_gate(
            curve,
            n,
            cfg.flow.k.unwrap_or(k).min(k),
        )?);
    }
    if let Some(order) = cfg.symmetry_order {
        if order == 0 || !curve.len().is_multiple_of(order as usize) {
            return Err(ExperimentError::Input(format!(
                "symmetry order {order} does not divide the vertex count {}",
                curve.len()
            )));
        }
        out.symmetry = Some(symmetry::check_symmetry(curve, order, 1e-8)?);
    }
    let spacing = cfg.winding_spacing.unwrap_or(curve.diameter() / 400.0);
    out.bp = Some(banchoff_pohl_area(curve, spacing)?);
    Ok(out)
}

pub fn flow_run(cfg: &ExperimentConfig) -> Result<FlowOutcome> {
    let (curve, src) = input_curve(cfg)?;
    let mut fc = cfg.flow;
    if fc.symmetry.is_none() && cfg.auto_symmetry {
        if let Some((m, i)) = src.symmetry() {
            if fc.vertices.is_multiple_of(m as usize) {
                fc.symmetry = Some(SymmetryOptions {
                    m,
                    i,
                    project_every: None,
                });
            }
        }
    }
    let report = flow::run(&curve, &fc)?;
    let reference_gate = match (src.is_generator(), report.initial.rotation_number) {
        (true, n) if n >= 1 && cfg.gate_vertices >= 3 => {
            let fine = src.build(cfg.gate_vertices, cfg.seed);
            // sources with a fixed vertex count ignore the request
            match fine {
                Ok(c) if c.len() == cfg.gate_vertices => {
                    let k = report.k.unwrap_or_else(|| flow::kstar(n as u32));
                    Some(flow::smallness_gate(&c, n as u32, k)?)
                }
                _ => None,
            }
        }
        _ => None,
    };
    Ok(FlowOutcome {
        name: src.name(),
        report,
        reference_gate,
        symmetry: fc.symmetry,
        initial_curve: Some(curve),
    })
}

pub fn minimize_run(cfg: &ExperimentConfig) -> Result<MinimizeOutcome> {
    let problem = cfg
        .problem
        .ok_or_else(|| ExperimentError::Input("minimize needs a `problem` with `theta`".into()))?;
    let (curve, variation, report) = minimize::solve(&problem, &cfg.minimize)?;
    Ok(MinimizeOutcome {
        variation,
        report,
        curve: Some(curve),
    })
}

pub fn verify_iso(cfg: &ExperimentConfig) -> Result<VerifyIsoOutcome> {
    let (curve, src) = input_curve(cfg)?;
    let m = cfg
        .symmetry_order
        .or_else(|| src.symmetry().map(|s| s.0))
        .ok_or_else(|| ExperimentError::Input("verify-iso needs `symmetry_order`".into()))?;
    let n = curve.rotation_number()?.value;
    let spec = SymmetrySpec::new(n, m)?;
    let report = minimize::verify_symmetric_isoperimetric(&curve, spec)?;
    Ok(VerifyIsoOutcome {
        name: src.name(),
        report,
    })
}

/// Runs the configured command without writing anything.
pub fn compute(cfg: &ExperimentConfig) -> Result<Outcome> {
    Ok(match command_of(cfg)? {
        Command::Metrics => Outcome::Metrics(metrics(cfg)?),
        Command::Flow => Outcome::Flow(Box::new(flow_run(cfg)?)),
        Command::Minimize => Outcome::Minimize(Box::new(minimize_run(cfg)?)),
        Command::VerifyIso => Outcome::VerifyIso(verify_iso(cfg)?),
        Command::Sweep => Outcome::Sweep(sweep(cfg)?),
    })
}

fn cells(spec: &SweepSpec) -> Result<Vec<Vec<(String, Value)>>> {
    let mut out: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for axis in &spec.axes {
        if axis.set.is_empty() || axis.values.is_empty() {
            return Err(ExperimentError::Input(
                "sweep axes need paths and values".into(),
            ));
        }
        let mut next = Vec::with_capacity(out.len() * axis.values.len());
        for prefix in &out {
            for v in &axis.values {
                let mut cell = prefix.clone();
                if axis.set.len() == 1 {
                    cell.push((axis.set[0].clone(), v.clone()));
                } else {
                    let Value::Array(items) = v else {
                        return Err(ExperimentError::Input(format!(
                            "axis over {:?} needs array values",
                            axis.set
                        )));
                    };
                    if items.len() != axis.set.len() {
                        return Err(ExperimentError::Input(format!(
                            "axis over {:?}: value {v} has the wrong length",
                            axis.set
                        )));
                    }
                    cell.extend(axis.set.iter().cloned().zip(items.iter().cloned()));
                }
                next.push(cell);
            }
        }
        out = next;
    }
    Ok(out)
}

fn sweep_row(index: usize, assignments: Vec<(String, Value)>, result: Result<Outcome>) -> SweepRow {
    let mut row = SweepRow {
        index,
        assignments,
        error: None,
        verdict: None,
        t_final: None,
        steps: None,
        area_drift: None,
        length: None,
        area: None,
        rotation: None,
        iso_ratio: None,
        kosc: None,
        gate_passed: None,
        kosc_margin: None,
        iso_margin: None,
    };
    let gate_into = |row: &mut SweepRow, g: Option<GateResult>| {
        if let Some(g) = g {
            row.gate_passed = Some(g.passed);
            row.kosc_margin = Some(g.kosc_margin);
            row.iso_margin = Some(g.iso_margin);
        }
    };
    match result {
        Err(e) => row.error = Some(e.to_string()),
        Ok(Outcome::Flow(f)) => {
            let r = &f.report;
            row.verdict = Some(r.verdict);
            row.t_final = Some(r.t_final);
            row.steps = Some(r.steps);
            row.area_drift = Some(r.area_drift);
            row.length = Some(r.final_metrics.length);
            row.area = Some(r.final_metrics.signed_area);
            row.rotation = Some(r.final_metrics.rotation_number);
            row.iso_ratio = Some(r.final_metrics.iso_ratio);
            row.kosc = Some(r.final_metrics.k_osc);
            gate_into(&mut row, f.reference_gate.or(r.gate));
        }
        Ok(Outcome::Metrics(m)) => {
            row.length = Some(m.length);
            row.area = Some(m.area);
            row.rotation = m.rotation;
            row.iso_ratio = m.iso_ratio;
            row.kosc = m.kosc;
            gate_into(&mut row, m.gate);
        }
        Ok(Outcome::Minimize(m)) => {
            row.length = Some(m.report.length);
            row.area = Some(m.report.area);
        }
        Ok(Outcome::VerifyIso(v)) => {
            row.iso_ratio = Some(v.report.iso_ratio);
        }
        Ok(Outcome::Sweep(_)) => row.error = Some("nested sweeps are not supported".into()),
    }
    row
}

/// Runs every cell concurrently; rows come back in grid order and a failing
/// cell only fills its own `error`.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| ExperimentError::Input("sweep needs a `sweep` section".into()))?;
    if spec.command == Command::Sweep {
        return Err(ExperimentError::Input(
            "nested sweeps are not supported".into(),
        ));
    }
    let mut base = serde_json::to_value(cfg).map_err(|e| ExperimentError::Input(e.to_string()))?;
    if let Value::Object(map) = &mut base {
        map.remove("sweep");
        map.insert(
            "command".into(),
            serde_json::to_value(spec.command).unwrap_or(Value::Null),
        );
    }
    let grid = cells(spec)?;
    Ok(grid
        .into_par_iter()
        .enumerate()
        .map(|(index, assignments)| {
            let mut doc = base.clone();
            let result = assignments
                .iter()
                .try_for_each(|(k, v)| set_value(&mut doc, k, v.clone()))
                .and_then(|_| config_from_document(doc))
                .and_then(|c| compute(&c));
            sweep_row(index, assignments, result)
        })
        .collect())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| ExperimentError::Input(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Numerical(e.to_string()))
}

/// Fixed frame geometry: the initial bounding box inflated by 20%.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgView {
    pub center: Vec2,
    pub size: Vec2,
}

impl SvgView {
    pub fn around(curve: &DiscreteCurve) -> Self {
        let (lo, hi) = curve.bounding_box();
        let size = (hi - lo) * 1.2;
        let pad = 0.01 * size.x.max(size.y).max(f64::MIN_POSITIVE);
        SvgView {
            center: (lo + hi) * 0.5,
            size: Vec2::new(size.x.max(pad), size.y.max(pad)),
        }
    }
}

/// One frame; the polygon (or polyline, for open curves) carries exactly
/// the curve's vertices, with `y` flipped to point up.
pub fn svg_frame(curve: &DiscreteCurve, view: SvgView, t: f64) -> String {
    let min_x = view.center.x - 0.5 * view.size.x;
    let min_y = -(view.center.y + 0.5 * view.size.y);
    let stroke = 0.004 * view.size.x.max(view.size.y);
    let mut points = String::with_capacity(24 * curve.len());
    for (k, v) in curve.vertices().iter().enumerate() {
        if k > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{},{}", v.x, -v.y);
    }
    let element = if curve.is_closed() {
        "polygon"
    } else {
        "polyline"
    };
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{min_x} {min_y} {} {}\" width=\"600\" height=\"{}\">\n\
         <title>t = {t}</title>\n\
         <{element} fill=\"none\" stroke=\"black\" stroke-width=\"{stroke}\" points=\"{points}\"/>\n\
         </svg>\n",
        view.size.x,
        view.size.y,
        (600.0 * view.size.y / view.size.x).round().max(1.0),
    )
}

fn winding_csv(curve: &DiscreteCurve, spacing: f64) -> Result<String> {
    let field = winding_field(curve, spacing)?;
    let mut out = String::from("i,j,x,y,w\n");
    for j in 0..field.ny {
        for i in 0..field.nx {
            let p = field.sample_point(i, j);
            let w = field.value(i, j).map(|w| w.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{i},{j},{},{},{w}", p.x, p.y);
        }
    }
    Ok(out)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let paths: Vec<String> = rows
        .first()
        .map(|r| r.assignments.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut out = String::from("index");
    for p in &paths {
        out.push(',');
        out.push_str(p);
    }
    out.push_str(",status,verdict,t_final,steps,area_drift,L,A,N,I,kosc,gate_passed,kosc_margin,iso_margin,error\n");
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in rows {
        let _ = write!(out, "{}", r.index);
        for (_, v) in &r.assignments {
            let cell = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let _ = write!(out, ",{}", cell.replace(',', ";"));
        }
        let verdict = r.verdict.map(|v| {
            serde_json::to_value(v)
                .ok()
                .and_then(|x| x.as_str().map(str::to_string))
                .unwrap_or_default()
        });
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            if r.error.is_some() { "error" } else { "ok" },
            opt(verdict),
            opt(r.t_final.map(|x| x.to_string())),
            opt(r.steps.map(|x| x.to_string())),
            opt(r.area_drift.map(|x| x.to_string())),
            opt(r.length.map(|x| x.to_string())),
            opt(r.area.map(|x| x.to_string())),
            opt(r.rotation.map(|x| x.to_string())),
            opt(r.iso_ratio.map(|x| x.to_string())),
            opt(r.kosc.map(|x| x.to_string())),
            opt(r.gate_passed.map(|x| x.to_string())),
            opt(r.kosc_margin.map(|x| x.to_string())),
            opt(r.iso_margin.map(|x| x.to_string())),
            opt(r.error.as_ref().map(|e| e.replace([',', '\n'], ";"))),
        );
    }
    out
}

/// Writes the artifacts of `outcome` into `dir`, creating it if needed.
/// Returns the written paths.
pub fn write_outcome(
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)
        .map_err(|e| ExperimentError::Input(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        write(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    match outcome {
        Outcome::Metrics(m) => {
            put("metrics.json", to_json(m)?)?;
            if let Some(spacing) = cfg.winding_spacing {
                let (curve, _) = input_curve(cfg)?;
                if curve.is_closed() {
                    put("winding.csv", winding_csv(&curve, spacing)?)?;
                }
            }
        }
        Outcome::Flow(f) => {
            put("report.json", to_json(f.as_ref())?)?;
            put("series.csv", flow::series_to_csv(&f.report.series))?;
            let symmetry = f
                .symmetry
                .and_then(|s| SymmetrySpec::new(f.report.initial.rotation_number, s.m).ok());
            if let Some(c) = &f.initial_curve {
                written.push(io::write_curve(dir, "initial", c, &f.name, symmetry)?);
            }
            if let Some(c) = &f.report.final_curve {
                written.push(io::write_curve(dir, "final", c, &f.name, symmetry)?);
            }
            if !f.report.frames.is_empty() {
                let frames = dir.join("frames");
                fs::create_dir_all(&frames)
                    .map_err(|e| ExperimentError::Input(format!("{}: {e}", frames.display())))?;
                let view = SvgView::around(&f.report.frames[0].1);
                for (k, (t, c)) in f.report.frames.iter().enumerate() {
                    let stem = format!("frame_{k:05}");
                    let svg = frames.join(format!("{stem}.svg"));
                    write(&svg, &svg_frame(c, view, *t))?;
                    written.push(svg);
                    written.push(io::write_curve(
                        &frames,
                        &stem,
                        c,
                        &format!("t={t}"),
                        symmetry,
                    )?);
                }
            }
        }
        Outcome::Minimize(m) => {
            put("report.json", to_json(m.as_ref())?)?;
            let mut hist = String::from("iteration,residual\n");
            for (k, r) in m.variation.residual_history.iter().enumerate() {
                let _ = writeln!(hist, "{k},{r}");
            }
            put("residual_history.csv", hist)?;
            if let Some(c) = &m.curve {
                written.push(io::write_curve(
                    dir,
                    "minimizer",
                    c,
                    &format!("minimizer_theta_{}", m.report.theta),
                    None,
                )?);
            }
        }
        Outcome::VerifyIso(v) => put("report.json", to_json(v)?)?,
        Outcome::Sweep(rows) => {
            put("sweep.csv", sweep_csv(rows))?;
            put("sweep.json", to_json(rows)?)?;
        }
    }
    Ok(written)
}

/// [`compute`] followed by [`write_outcome`].
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let outcome = compute(cfg)?;
    write_outcome(cfg, &outcome, dir)?;
    Ok(outcome)
}

/// One-line human summary of an outcome.
pub fn summary_line(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Metrics(m) => format!(
            "{}: L={} A={} N={} I={}",
            m.name,
            m.length,
            m.area,
            m.rotation
                .map(|n| n.to_string())
                .unwrap_or_else(|| "-".into()),
            m.iso_ratio
                .map(|i| i.to_string())
                .unwrap_or_else(|| "-".into()),
        ),
        Outcome::Flow(f) => format!(
            "{}: verdict {:?} at t={} after {} steps, area drift {:.3e}",
            f.name, f.report.verdict, f.report.t_final, f.report.steps, f.report.area_drift
        ),
        Outcome::Minimize(m) => format!(
            "theta={}: L={} (optimal {}), margin {:.3e}",
            m.report.theta, m.report.length, m.report.optimal_length, m.report.margin
        ),
        Outcome::VerifyIso(v) => format!(
            "{}: I={} i={} margin {}",
            v.name, v.report.iso_ratio, v.report.spec.i, v.report.iso_margin
        ),
        Outcome::Sweep(rows) => format!(
            "{} cells, {} failed",
            rows.len(),
            rows.iter().filter(|r| r.error.is_some()).count()
        ),
    }
}
