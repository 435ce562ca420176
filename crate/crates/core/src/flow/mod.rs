//! Curve diffusion flow `∂t γ = −(∂²_s κ)ν` on closed polygons, with monitors
//! for the quantities the flow is known to control.

mod scheme;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::LinalgError;
use crate::curve::{CurveError, CurveMetrics, DiscreteCurve, IsoRatio, AREA_ROUNDOFF};
use crate::symmetry::{self, SymmetryError, SymmetrySpec};
use crate::winding::banchoff_pohl_area;

pub use scheme::{velocity, Redistribution, Velocity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid initial curve: {0}")]
    InvalidInit(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate spacing at vertex {index}")]
    DegenerateSpacing { index: usize },
    #[error("step rejected after {halvings} halvings of dt")]
    StepRejected { halvings: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

impl FlowError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FlowError::DegenerateSpacing { .. }
                | FlowError::StepRejected { .. }
                | FlowError::Linalg(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// `(2π/3)(√(1+3n²π) − √(3n²π))²`, the smallness constant for rotation
/// number `n ≥ 1`.
pub fn kstar(n: u32) -> f64 {
    let x = 3.0 * (n as f64).powi(2) * PI;
    // √(1+x) − √x without cancellation
    let d = 1.0 / ((1.0 + x).sqrt() + x.sqrt());
    2.0 * PI / 3.0 * d * d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub passed: bool,
    pub n: u32,
    #[serde(rename = "K")]
    pub k: f64,
    pub kosc: f64,
    /// `K − K_osc`.
    pub kosc_margin: f64,
    pub iso_ratio: IsoRatio,
    /// `exp(K/(8n²π²))`.
    pub iso_bound: f64,
    /// `exp(K/(8n²π²)) − I/n`.
    pub iso_margin: f64,
}

/// Passes iff `K_osc ≤ K` and `I/n ≤ exp(K/(8n²π²))`.
pub fn smallness_gate(curve: &DiscreteCurve, n: u32, k: f64) -> Result<GateResult> {
    if n == 0 {
        return Err(FlowError::InvalidArgument("n must be at least 1".into()));
    }
    if !(k > 0.0 && k <= kstar(n)) {
        return Err(FlowError::InvalidArgument(format!(
            "K must lie in (0, {}], got {k}",
            kstar(n)
        )));
    }
    let m = curve.metrics()?;
    let iso_bound = (k / (8.0 * (n as f64).powi(2) * PI * PI)).exp();
    let ratio = m.iso_ratio.as_f64() / n as f64;
    let kosc_margin = k - m.k_osc;
    let iso_margin = iso_bound - ratio;
    Ok(GateResult {
        passed: kosc_margin >= 0.0 && iso_margin >= 0.0,
        n,
        k,
        kosc: m.k_osc,
        kosc_margin,
        iso_ratio: m.iso_ratio,
        iso_bound,
        iso_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed {
        dt: f64,
    },
    /// `dt = min(dt_max, safety_h4·h_min⁴, safety_curvature/max|κ|⁴)`.
    Adaptive {
        dt_max: f64,
        safety_h4: f64,
        safety_curvature: f64,
    },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive {
            dt_max: 1e-2,
            safety_h4: 2000.0,
            safety_curvature: 0.05,
        }
    }
}

/// Time integrator built on the linearly implicit Euler update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// First order, one solve per step.
    Euler,
    /// `2·(two half steps) − (one full step)`: second order, three solves.
    #[default]
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCriteria {
    pub t_end: f64,
    /// Singular when `K_osc` exceeds this.
    pub kosc_blow_threshold: Option<f64>,
    /// Singular when `∫κ²` exceeds this multiple of its initial value.
    pub bending_energy_threshold: f64,
    /// A step whose shortest edge falls below this fraction of `L/M` is
    /// rejected.
    pub min_edge_fraction: f64,
    pub convergence_kosc: f64,
    /// Converged also needs `max|V|·L·h²` below this, with `h = L/M`. The
    /// grid factor keeps the test above the round-off floor of `D²κ`.
    pub convergence_velocity: f64,
    pub max_steps: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            t_end: 10.0,
            kosc_blow_threshold: None,
            bending_energy_threshold: 1e4,
            min_edge_fraction: 1e-3,
            convergence_kosc: 1e-8,
            convergence_velocity: 1e-9,
            max_steps: 5_000_000,
        }
    }
}

/// Symmetry to monitor, and optionally to restore by orbit averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOptions {
    pub m: u32,
    pub i: u32,
    /// Project every this many steps; `None` only monitors.
    #[serde(default)]
    pub project_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Vertex count; the initial curve is resampled when it differs.
    pub vertices: usize,
    pub dt: DtPolicy,
    pub integrator: Integrator,
    pub redistribution: Redistribution,
    pub symmetry: Option<SymmetryOptions>,
    pub stop: StopCriteria,
    /// Smallness constant; defaults to `kstar(n)`.
    #[serde(rename = "K")]
    pub k: Option<f64>,
    /// Record a series sample every this many steps.
    pub sample_stride: usize,
    /// Sample `∫w²` every this much time, with line spacing `bp_spacing`.
    pub bp_interval: Option<f64>,
    pub bp_spacing: f64,
    /// Keep a curve snapshot every this many steps.
    pub frame_stride: Option<usize>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            vertices: 512,
            dt: DtPolicy::default(),
            integrator: Integrator::default(),
            redistribution: Redistribution::default(),
            symmetry: None,
            stop: StopCriteria::default(),
            k: None,
            sample_stride: 100,
            bp_interval: None,
            bp_spacing: 0.01,
            frame_stride: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FlowError::InvalidConfig(msg));
        if self.vertices < 16 {
            return bad(format!("need at least 16 vertices, got {}", self.vertices));
        }
        if !matches!(self.redistribution, Redistribution::None) && !self.vertices.is_multiple_of(2)
        {
            return bad("redistribution needs an even vertex count".into());
        }
        if let Redistribution::Curvature { beta, .. } = self.redistribution {
            if !(0.0..1.0).contains(&beta) {
                return bad(format!("beta must lie in [0, 1), got {beta}"));
            }
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0) => {
                return bad(format!("dt must be positive, got {dt}"))
            }
            DtPolicy::Adaptive {
                dt_max,
                safety_h4,
                safety_curvature,
            } if !(dt_max > 0.0 && safety_h4 > 0.0 && safety_curvature > 0.0) => {
                return bad("adaptive dt factors must be positive".into())
            }
            _ => {}
        }
        let s = &self.stop;
        if !(s.t_end > 0.0
            && s.bending_energy_threshold > 0.0
            && s.min_edge_fraction > 0.0
            && s.convergence_kosc > 0.0
            && s.convergence_velocity > 0.0
            && s.kosc_blow_threshold.is_none_or(|t| t > 0.0))
        {
            return bad("stop thresholds must be positive".into());
        }
        if let Some(sym) = self.symmetry {
            if sym.m == 0 || !self.vertices.is_multiple_of(sym.m as usize) {
                return bad(format!(
                    "vertex count {} is not divisible by m={}",
                    self.vertices, sym.m
                ));
            }
            if sym.i == 0 || sym.i > sym.m {
                return bad(format!("need 1 <= i <= m, got i={}", sym.i));
            }
            if sym.project_every == Some(0) {
                return bad("projection period must be positive".into());
            }
        }
        if let Some(k) = self.k {
            if !(k > 0.0) {
                return bad(format!("K must be positive, got {k}"));
            }
        }
        if self.sample_stride == 0 || self.frame_stride == Some(0) {
            return bad("strides must be positive".into());
        }
        if self.bp_interval.is_some_and(|t| !(t > 0.0)) || !(self.bp_spacing > 0.0) {
            return bad("winding sampling interval and spacing must be positive".into());
        }
        Ok(())
    }
}

/// One time slice of the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub curve: DiscreteCurve,
    pub metrics: CurveMetrics,
    pub velocity: Velocity,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve) -> Result<Self> {
        let metrics = curve.metrics()?;
        let velocity = velocity(&curve)?;
        Ok(FlowState {
            t: 0.0,
            curve,
            metrics,
            velocity,
        })
    }
}

/// Largest step allowed by the policy at this state.
pub fn step_size(state: &FlowState, policy: &DtPolicy) -> f64 {
    match *policy {
        DtPolicy::Fixed { dt } => dt,
        DtPolicy::Adaptive {
            dt_max,
            safety_h4,
            safety_curvature,
        } => {
            let h = state.curve.min_edge_length();
            let k = state.metrics.max_abs_kappa.max(f64::MIN_POSITIVE);
            dt_max
                .min(safety_h4 * h.powi(4))
                .min(safety_curvature / k.powi(4))
        }
    }
}

const MAX_HALVINGS: usize = 20;

fn try_step(state: &FlowState, dt: f64, config: &FlowConfig) -> Result<DiscreteCurve> {
    let p = state.curve.vertices();
    let n = p.len();
    let vel = &state.velocity;
    let mut next = match config.integrator {
        Integrator::Euler => scheme::implicit_update(p, vel, dt)?,
        Integrator::Extrapolated => {
            let full = scheme::implicit_update(p, vel, dt)?;
            let half = scheme::implicit_update(p, vel, 0.5 * dt)?;
            let half_vel = scheme::velocity_of(&half)?;
            let two_halves = scheme::implicit_update(&half, &half_vel, 0.5 * dt)?;
            two_halves
                .iter()
                .zip(&full)
                .map(|(a, b)| *a * 2.0 - *b)
                .collect()
        }
    };
    scheme::redistribute(&mut next, config.redistribution);
    let curve = DiscreteCurve::new(next, true)?;
    let floor = config.stop.min_edge_fraction * curve.length() / n as f64;
    let min_edge = curve.min_edge_length();
    if !(min_edge >= floor) {
        let index = curve
            .edge_lengths()
            .iter()
            .position(|&l| l == min_edge)
            .unwrap_or(0);
        return Err(FlowError::DegenerateSpacing { index });
    }
    Ok(curve)
}

/// One accepted step of at most `dt_target`, halving on failure.
fn advance(
    state: &FlowState,
    dt_target: f64,
    config: &FlowConfig,
) -> Result<(FlowState, f64, usize)> {
    let mut dt = dt_target;
    for halvings in 0..=MAX_HALVINGS {
        let attempt = try_step(state, dt, config).and_then(|curve| {
            let metrics = curve.metrics()?;
            let velocity = velocity(&curve)?;
            if !velocity.max_speed().is_finite() {
                return Err(FlowError::DegenerateSpacing { index: 0 });
            }
            Ok(FlowState {
                t: state.t + dt,
                curve,
                metrics,
                velocity,
            })
        });
        match attempt {
            Ok(next) => return Ok((next, dt, halvings)),
            Err(_) => dt *= 0.5,
        }
    }
    Err(FlowError::StepRejected {
        halvings: MAX_HALVINGS,
    })
}

/// One step with the policy's `dt`, then redistribution.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    let dt = step_size(state, &config.dt);
    advance(state, dt, config).map(|(s, _, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Singular,
    TEndReached,
    /// `max_steps` ran out before any other criterion fired.
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularCause {
    BendingEnergy,
    OscillationBlowUp,
    StepRejection,
    RotationNumberLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "A")]
    pub area: f64,
    #[serde(rename = "N")]
    pub rotation: i64,
    pub kosc: f64,
    pub bending: f64,
    pub min_kappa: f64,
    pub max_kappa: f64,
    pub sym_defect: Option<f64>,
    pub bp_area: Option<f64>,
    pub bp_error: Option<f64>,
}

impl Sample {
    fn of(state: &FlowState) -> Self {
        let m = &state.metrics;
        Sample {
            t: state.t,
            length: m.length,
            area: m.signed_area,
            rotation: m.rotation_number,
            kosc: m.k_osc,
            bending: m.bending_energy,
            min_kappa: m.min_kappa,
            max_kappa: m.max_abs_kappa,
            sym_defect: None,
            bp_area: None,
            bp_error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub verdict: Verdict,
    pub singular_cause: Option<SingularCause>,
    pub t_final: f64,
    pub steps: usize,
    pub rejected_halvings: usize,
    pub initial: CurveMetrics,
    #[serde(rename = "final")]
    pub final_metrics: CurveMetrics,
    pub gate: Option<GateResult>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    /// Largest `|A(t) − A(0)|/|A(0)|` over accepted steps; absolute when
    /// `A(0)` is at round-off level.
    pub area_drift: f64,
    /// Largest `L(t_{k+1}) − L(t_k)` over accepted steps, relative to `L(0)`.
    pub max_length_increase: f64,
    pub length_monotone_ok: bool,
    pub rotation_invariant_ok: bool,
    /// Largest `|K_osc − (L∫κ² − 4π²N²)|`.
    pub identity_defect: f64,
    pub wheeler_bound_ok: bool,
    pub wheeler_max_excess: f64,
    pub kosc_2k_ok: bool,
    pub kosc_max: f64,
    pub length_bound_ok: bool,
    pub max_sym_defect: Option<f64>,
    #[serde(rename = "T_M_estimate")]
    pub t_m_estimate: Option<f64>,
    #[serde(rename = "T_W_measured")]
    pub t_w_measured: f64,
    #[serde(rename = "T_W_bound")]
    pub t_w_bound: f64,
    /// Mean vertex distance from the centroid at the end.
    pub limit_radius: f64,
    /// `√(A(0)/(nπ))`.
    pub expected_radius: Option<f64>,
    pub final_max_speed: f64,
    pub series: Vec<Sample>,
    #[serde(skip)]
    pub final_curve: Option<DiscreteCurve>,
    #[serde(skip)]
    pub frames: Vec<(f64, DiscreteCurve)>,
}

const MONITOR_TOL: f64 = 1e-6;

/// Integrates until a stop criterion fires and evaluates every monitor.
pub fn run(init: &DiscreteCurve, config: &FlowConfig) -> Result<FlowReport> {
    config.validate()?;
    if !init.is_closed() {
        return Err(FlowError::InvalidInit("curve must be closed".into()));
    }
    let curve = if init.len() == config.vertices {
        init.clone()
    } else {
        init.reparameterize(config.vertices)?
    };
    let mut state = FlowState::new(curve).map_err(|e| FlowError::InvalidInit(e.to_string()))?;
    let m0 = state.metrics.clone();
    let n0 = m0.rotation_number;
    let n_pos = (n0 >= 1).then_some(n0 as u32);
    let k = n_pos.map(|n| config.k.unwrap_or_else(|| kstar(n)));
    let gate = match (n_pos, k) {
        (Some(n), Some(k)) if k <= kstar(n) => Some(smallness_gate(&state.curve, n, k)?),
        _ => None,
    };
    let area_scale = if m0.signed_area.abs() > AREA_ROUNDOFF * m0.length * m0.length {
        m0.signed_area.abs()
    } else {
        1.0
    };

    let mut report = FlowReport {
        verdict: Verdict::TEndReached,
        singular_cause: None,
        t_final: 0.0,
        steps: 0,
        rejected_halvings: 0,
        initial: m0.clone(),
        final_metrics: m0.clone(),
        gate,
        k,
        area_drift: 0.0,
        max_length_increase: 0.0,
        length_monotone_ok: true,
        rotation_invariant_ok: true,
        identity_defect: 0.0,
        wheeler_bound_ok: true,
        wheeler_max_excess: f64::NEG_INFINITY,
        kosc_2k_ok: true,
        kosc_max: m0.k_osc,
        length_bound_ok: true,
        max_sym_defect: None,
        t_m_estimate: None,
        t_w_measured: 0.0,
        t_w_bound: waiting_time_bound(m0.length, m0.signed_area, n0),
        limit_radius: 0.0,
        expected_radius: n_pos.map(|n| (m0.signed_area / (n as f64 * PI)).sqrt()),
        final_max_speed: state.velocity.max_speed(),
        series: Vec::new(),
        final_curve: None,
        frames: Vec::new(),
    };
    let mut wheeler_window = true;
    let mut next_bp = config.bp_interval.map(|_| 0.0);

    let mut monitor = |state: &FlowState, report: &mut FlowReport, prev_length: f64| {
        let m = &state.metrics;
        report.area_drift = report
            .area_drift
            .max((m.signed_area - m0.signed_area).abs() / area_scale);
        let inc = (m.length - prev_length) / m0.length;
        report.max_length_increase = report.max_length_increase.max(inc);
        if inc > 1e-10 {
            report.length_monotone_ok = false;
        }
        if m.rotation_number != n0 {
            report.rotation_invariant_ok = false;
        }
        let id = (m.k_osc - m.k_osc_identity()).abs();
        report.identity_defect = report.identity_defect.max(id);
        report.kosc_max = report.kosc_max.max(m.k_osc);
        if let (Some(n), Some(k)) = (n_pos, k) {
            let nn = n as f64;
            if m.k_osc > 2.0 * k + MONITOR_TOL {
                report.kosc_2k_ok = false;
            }
            if m.k_osc > 2.0 * kstar(n) {
                wheeler_window = false;
            }
            if wheeler_window {
                let bound = m0.k_osc + 8.0 * PI * PI * nn * nn * (m0.length / m.length).ln();
                let excess = m.k_osc - bound;
                report.wheeler_max_excess = report.wheeler_max_excess.max(excess);
                if excess > MONITOR_TOL {
                    report.wheeler_bound_ok = false;
                }
            }
            if config.symmetry.is_some() {
                if let Some(i0) = m0.iso_ratio.finite() {
                    if m0.length / m.length > (i0 / nn).sqrt() + MONITOR_TOL {
                        report.length_bound_ok = false;
                    }
                }
            }
        }
    };

    let sample = |state: &FlowState, report: &mut FlowReport, with_bp: bool| -> Result<()> {
        let mut s = Sample::of(state);
        if let Some(sym) = config.symmetry {
            let d = symmetry::symmetry_defect(&state.curve, sym.m, sym.i)?;
            s.sym_defect = Some(d);
            report.max_sym_defect = Some(report.max_sym_defect.map_or(d, |x: f64| x.max(d)));
        }
        if with_bp {
            let bp = banchoff_pohl_area(&state.curve, config.bp_spacing)?;
            s.bp_area = Some(bp.area);
            s.bp_error = Some(bp.error);
        }
        if report.series.last().is_none_or(|last| last.t < s.t) {
            report.series.push(s);
        } else if let Some(last) = report.series.last_mut() {
            // same time: merge the richer sample
            if s.bp_area.is_some() {
                *last = s;
            }
        }
        Ok(())
    };

    monitor(&state, &mut report, m0.length);
    sample(&state, &mut report, next_bp.is_some())?;
    if let (Some(iv), Some(nb)) = (config.bp_interval, next_bp.as_mut()) {
        *nb += iv;
    }
    if config.frame_stride.is_some() {
        report.frames.push((0.0, state.curve.clone()));
    }

    let t_end = config.stop.t_end;
    loop {
        if state.t >= t_end * (1.0 - 1e-14) {
            report.verdict = Verdict::TEndReached;
            break;
        }
        if report.steps >= config.stop.max_steps {
            report.verdict = Verdict::StepLimit;
            break;
        }
        let mut dt = step_size(&state, &config.dt).min(t_end - state.t);
        if let Some(nb) = next_bp {
            if nb > state.t {
                dt = dt.min(nb - state.t);
            }
        }
        let was_nonconvex = state.metrics.min_kappa <= 0.0;
        let (mut next, used, halvings) = match advance(&state, dt, config) {
            Ok(x) => x,
            Err(FlowError::StepRejected { .. }) => {
                report.verdict = Verdict::Singular;
                report.singular_cause = Some(SingularCause::StepRejection);
                break;
            }
            Err(e) => return Err(e),
        };
        report.rejected_halvings += halvings;
        report.steps += 1;
        if was_nonconvex {
            report.t_w_measured += used;
        }
        if let Some(sym) = config.symmetry {
            if let Some(period) = sym.project_every {
                if report.steps.is_multiple_of(period) {
                    let curve = symmetry::symmetrize(&next.curve, sym.m, sym.i)?;
                    next = FlowState {
                        t: next.t,
                        metrics: curve.metrics()?,
                        velocity: velocity(&curve)?,
                        curve,
                    };
                }
            }
        }
        let prev_length = state.metrics.length;
        state = next;
        if let Some(nb) = next_bp {
            if state.t >= nb * (1.0 - 1e-12) {
                state.t = state.t.max(nb);
            }
        }
        monitor(&state, &mut report, prev_length);

        let m = &state.metrics;
        let mut stop = None;
        if m.bending_energy > config.stop.bending_energy_threshold * m0.bending_energy {
            stop = Some((Verdict::Singular, Some(SingularCause::BendingEnergy)));
        } else if config
            .stop
            .kosc_blow_threshold
            .is_some_and(|th| m.k_osc > th)
        {
            stop = Some((Verdict::Singular, Some(SingularCause::OscillationBlowUp)));
        } else if m.rotation_number != n0 {
            stop = Some((Verdict::Singular, Some(SingularCause::RotationNumberLost)));
        } else if m.k_osc < config.stop.convergence_kosc
            && state.velocity.max_speed() * m.length * (m.length / state.curve.len() as f64).powi(2)
                < config.stop.convergence_velocity
        {
            stop = Some((Verdict::Converged, None));
        }

        let bp_due = next_bp.is_some_and(|nb| state.t >= nb);
        if bp_due || report.steps.is_multiple_of(config.sample_stride) || stop.is_some() {
            sample(&state, &mut report, bp_due)?;
            if bp_due {
                if let (Some(iv), Some(nb)) = (config.bp_interval, next_bp.as_mut()) {
                    while *nb <= state.t {
                        *nb += iv;
                    }
                }
            }
        }
        if let Some(stride) = config.frame_stride {
            if report.steps.is_multiple_of(stride) {
                report.frames.push((state.t, state.curve.clone()));
            }
        }
        if let Some((verdict, cause)) = stop {
            report.verdict = verdict;
            report.singular_cause = cause;
            break;
        }
    }
    if report.series.last().is_none_or(|s| s.t < state.t) {
        sample(&state, &mut report, false)?;
    }
    if config.frame_stride.is_some() && report.frames.last().is_none_or(|f| f.0 < state.t) {
        report.frames.push((state.t, state.curve.clone()));
    }
    if report.verdict == Verdict::Singular {
        report.t_m_estimate = estimate_singular_time(&report.series);
    }
    let centroid = state.curve.centroid();
    report.limit_radius = state
        .curve
        .vertices()
        .iter()
        .map(|v| (*v - centroid).norm())
        .sum::<f64>()
        / state.curve.len() as f64;
    report.t_final = state.t;
    report.final_metrics = state.metrics.clone();
    report.final_max_speed = state.velocity.max_speed();
    if report.wheeler_max_excess == f64::NEG_INFINITY {
        report.wheeler_max_excess = 0.0;
    }
    report.final_curve = Some(state.curve);
    Ok(report)
}

/// `(L₀⁴ − (4πnA₀)²)/(16π²n²)`; zero when `n = 0`.
pub fn waiting_time_bound(length: f64, area: f64, n: i64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nn = n as f64;
    (length.powi(4) - (4.0 * PI * nn * area).powi(2)) / (16.0 * PI * PI * nn * nn)
}

/// Measured non-convex time and its bound; the bound uses `spec.n` when
/// given and the initial rotation number otherwise.
pub fn waiting_time(report: &FlowReport, spec: Option<SymmetrySpec>) -> (f64, f64) {
    let n = spec.map_or(report.initial.rotation_number, |s| s.n);
    (
        report.t_w_measured,
        waiting_time_bound(report.initial.length, report.initial.signed_area, n),
    )
}

/// Extrapolates `(∫κ²)^{-4}`, linear in `T − t` for a shrinking self-similar
/// loop, to zero from the last samples.
fn estimate_singular_time(series: &[Sample]) -> Option<f64> {
    let tail: Vec<&Sample> = series.iter().rev().take(6).collect();
    if tail.len() < 3 {
        return None;
    }
    let pts: Vec<(f64, f64)> = tail.iter().map(|s| (s.t, s.bending.powi(-4))).collect();
    let n = pts.len() as f64;
    let (mt, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    let t = mt - my / slope;
    t.is_finite().then_some(t.max(series.last()?.t))
}

pub fn series_to_csv(series: &[Sample]) -> String {
    let mut out =
        String::from("t,L,A,N,kosc,bending,min_kappa,max_kappa,sym_defect,bp_area,bp_error\n");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for s in series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            s.length,
            s.area,
            s.rotation,
            s.kosc,
            s.bending,
            s.min_kappa,
            s.max_kappa,
            opt(s.sym_defect),
            opt(s.bp_area),
            opt(s.bp_error)
        );
    }
    out
}
