//! Rotational symmetry `γ(x + 1/m) = R_{2πi/m} γ(x)`, the index `i_{n,m}`, and
//! curves built from symmetric pieces.
//!
//! On a closed polygon with `M` vertices the parameter shift `1/m` is the
//! vertex shift `M/m`, so every check here requires `m` to divide `M`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, DiscreteCurve};
use crate::geometry::{Rotation, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "fundamental piece not compatible with (m={m}, i={i}): endpoint mismatch {mismatch:.3e}"
    )]
    Incompatible { m: u32, i: u32, mismatch: f64 },
    #[error("vertex count {vertices} is not divisible by m={m}; resample first")]
    NotDivisible { vertices: usize, m: u32 },
    #[error("(n={n}, m={m}) is in the attainment regime 1 <= n <= m; no vanishing loops needed")]
    AttainmentRegime { n: i64, m: u32 },
    #[error("too coarse: {0}")]
    TooCoarse(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

pub type Result<T> = std::result::Result<T, SymmetryError>;

/// Rotation number `n`, symmetry order `m`, and the induced phase index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetrySpec {
    pub n: i64,
    pub m: u32,
    pub i: u32,
}

impl SymmetrySpec {
    pub fn new(n: i64, m: u32) -> Result<Self> {
        let i = index_i(n, m as i64)?;
        Ok(SymmetrySpec { n, m, i })
    }

    /// Half-line angle `2πi/m` of the reduced free-boundary problem.
    pub fn theta(&self) -> f64 {
        TAU * self.i as f64 / self.m as f64
    }

    /// True when the sharp bound is attained, i.e. `1 <= n <= m`.
    pub fn is_attainable(&self) -> bool {
        1 <= self.n && self.n <= self.m as i64
    }
}

/// `i_{n,m} = n + m − m⌈n/m⌉`, the representative of `n mod m` in `{1,…,m}`.
pub fn index_i(n: i64, m: i64) -> Result<u32> {
    if m <= 0 {
        return Err(SymmetryError::InvalidArgument(format!(
            "symmetry order must be positive, got {m}"
        )));
    }
    let ceil = -((-n).div_euclid(m));
    Ok((n + m - m * ceil) as u32)
}

/// `n`-times counterclockwise covered circle of radius `radius` with
/// `vertices` equally spaced points.
pub fn covered_circle(n: u32, radius: f64, vertices: usize) -> Result<DiscreteCurve> {
    if n == 0 || !(radius > 0.0) {
        return Err(SymmetryError::InvalidArgument(format!(
            "need n >= 1 and radius > 0, got n={n}, radius={radius}"
        )));
    }
    if vertices < 3 * n as usize {
        return Err(SymmetryError::TooCoarse(format!(
            "{vertices} vertices for {n} turns; need at least {}",
            3 * n
        )));
    }
    Ok(crate::shapes::covered_circle_unchecked(n, radius, vertices))
}

/// Closes an open fundamental piece by applying `R_{2πik/m}` for `k = 0..m`.
///
/// The piece's last vertex must equal `R_{2πi/m}` of its first one; it is
/// dropped from each copy.
pub fn make_symmetric(fundamental: &DiscreteCurve, m: u32, i: u32) -> Result<DiscreteCurve> {
    if fundamental.is_closed() {
        return Err(CurveError::NotOpen.into());
    }
    if m == 0 || i == 0 || i > m {
        return Err(SymmetryError::InvalidArgument(format!(
            "need m >= 1 and 1 <= i <= m, got m={m}, i={i}"
        )));
    }
    let v = fundamental.vertices();
    let step = Rotation::fraction_of_turn(i as i64, m as i64);
    let mismatch = (step.apply(v[0]) - *v.last().unwrap()).norm();
    if mismatch > 1e-9 * fundamental.length() {
        return Err(SymmetryError::Incompatible { m, i, mismatch });
    }
    let piece = &v[..v.len() - 1];
    let mut out = Vec::with_capacity(piece.len() * m as usize);
    for k in 0..m {
        let r = Rotation::fraction_of_turn((i * k) as i64, m as i64);
        out.extend(piece.iter().map(|&p| r.apply(p)));
    }
    Ok(DiscreteCurve::closed(out)?)
}

/// Outcome of [`check_symmetry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    pub index: Option<u32>,
    /// Smallest relative defect over `i ∈ {1..m}`.
    pub defect: f64,
    pub best_index: u32,
}

/// `max_k |γ_{k+M/m} − R_{2πi/m} γ_k|` divided by the curve diameter.
pub fn symmetry_defect(curve: &DiscreteCurve, m: u32, i: u32) -> Result<f64> {
    let diameter = curve.diameter();
    Ok(raw_defect(curve, m, i)? / diameter)
}

pub(crate) fn raw_defect(curve: &DiscreteCurve, m: u32, i: u32) -> Result<f64> {
    if !curve.is_closed() {
        return Err(CurveError::NotClosed.into());
    }
    let v = curve.vertices();
    if m == 0 || !v.len().is_multiple_of(m as usize) {
        return Err(SymmetryError::NotDivisible {
            vertices: v.len(),
            m,
        });
    }
    let shift = v.len() / m as usize;
    let r = Rotation::fraction_of_turn(i as i64, m as i64);
    Ok((0..v.len())
        .map(|k| (v[(k + shift) % v.len()] - r.apply(v[k])).norm())
        .fold(0.0, f64::max))
}

/// Tests `(m, i)`-symmetry for every `i ∈ {1..m}` with tolerance relative to
/// the curve diameter.
pub fn check_symmetry(curve: &DiscreteCurve, m: u32, tol: f64) -> Result<SymmetryCheck> {
    if m == 0 {
        return Err(SymmetryError::InvalidArgument("m must be positive".into()));
    }
    let diameter = curve.diameter();
    let mut best = (f64::INFINITY, 1);
    for i in 1..=m {
        let d = raw_defect(curve, m, i)? / diameter;
        if d < best.0 {
            best = (d, i);
        }
    }
    let symmetric = best.0 <= tol;
    Ok(SymmetryCheck {
        symmetric,
        index: symmetric.then_some(best.1),
        defect: best.0,
        best_index: best.1,
    })
}

/// Projects onto `(m, i)`-symmetric curves by averaging each orbit.
pub fn symmetrize(curve: &DiscreteCurve, m: u32, i: u32) -> Result<DiscreteCurve> {
    if !curve.is_closed() {
        return Err(CurveError::NotClosed.into());
    }
    let v = curve.vertices();
    if m == 0 || !v.len().is_multiple_of(m as usize) {
        return Err(SymmetryError::NotDivisible {
            vertices: v.len(),
            m,
        });
    }
    if m == 1 {
        return Ok(curve.clone());
    }
    let shift = v.len() / m as usize;
    let rotations: Vec<Rotation> = (0..m)
        .map(|j| Rotation::fraction_of_turn((i * j) as i64, m as i64))
        .collect();
    let mut out = vec![Vec2::ZERO; v.len()];
    for k in 0..shift {
        let mean = (0..m as usize).fold(Vec2::ZERO, |acc, j| {
            acc + rotations[j].inverse().apply(v[k + j * shift])
        }) / m as f64;
        for (j, r) in rotations.iter().enumerate() {
            out[k + j * shift] = r.apply(mean);
        }
    }
    Ok(DiscreteCurve::closed(out)?)
}

/// Resolution of [`vanishing_loop_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopResolution {
    /// Vertices per full turn of the underlying unit circle.
    pub circle_vertices: usize,
    /// Vertices per traversal of one small loop.
    pub loop_vertices: usize,
}

impl Default for LoopResolution {
    fn default() -> Self {
        LoopResolution {
            circle_vertices: 1024,
            loop_vertices: 64,
        }
    }
}

pub fn vanishing_loop_curve(n: i64, m: u32, loop_radius: f64) -> Result<DiscreteCurve> {
    vanishing_loop_curve_with(n, m, loop_radius, LoopResolution::default())
}

/// `(m, i_{n,m})`-symmetric curve of rotation number `n` for `n ∉ [1, m]`.
///
/// Each period is an arc of angle `2πi/m` of the unit circle with
/// `⌈n/m⌉ − 1` small loops of radius `loop_radius` grafted at its start
/// (clockwise when negative). The loops are tangent to the arc, so the splice
/// is C¹; each contributes `±2π` of turning and `±π·loop_radius²` of area.
pub fn vanishing_loop_curve_with(
    n: i64,
    m: u32,
    loop_radius: f64,
    res: LoopResolution,
) -> Result<DiscreteCurve> {
    let spec = SymmetrySpec::new(n, m)?;
    if spec.is_attainable() {
        return Err(SymmetryError::AttainmentRegime { n, m });
    }
    if !(loop_radius > 0.0 && loop_radius < 0.5) {
        return Err(SymmetryError::InvalidArgument(format!(
            "loop radius must lie in (0, 0.5), got {loop_radius}"
        )));
    }
    let ceil = -((-n).div_euclid(m as i64));
    let loops = ceil - 1;
    let start = Vec2::new(1.0, 0.0);
    let mut piece = vec![start];

    let loop_steps = res.loop_vertices * loops.unsigned_abs() as usize;
    let (center, sense, phase) = if loops > 0 {
        (Vec2::new(1.0 - loop_radius, 0.0), 1.0, 0.0)
    } else {
        (
            Vec2::new(1.0 + loop_radius, 0.0),
            -1.0,
            std::f64::consts::PI,
        )
    };
    let dpsi = TAU / res.loop_vertices as f64;
    for k in 1..loop_steps {
        piece.push(center + Vec2::from_angle(phase + sense * dpsi * k as f64) * loop_radius);
    }

    let sweep = spec.theta();
    let arc_steps =
        ((res.circle_vertices as f64 * spec.i as f64 / m as f64).ceil() as usize).max(3);
    for k in 1..=arc_steps {
        piece.push(Vec2::from_angle(sweep * k as f64 / arc_steps as f64));
    }
    let last = piece.len() - 1;
    piece[last] = Rotation::fraction_of_turn(spec.i as i64, m as i64).apply(start);
    let fundamental = DiscreteCurve::open(piece)?;
    make_symmetric(&fundamental, m, spec.i)
}
