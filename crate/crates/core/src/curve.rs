//! Polygonal representation of planar curves and their integral functionals.
//!
//! A [`DiscreteCurve`] is an ordered list of vertices, either closed (the last
//! vertex connects back to the first) or open. Curvature is measured by the
//! turning angle at a vertex divided by the mean length of its two edges, so
//! the total turning of a closed polygon is an exact multiple of `2π` and the
//! rotation number is exact on polygons.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{turning_angle, Rotation, Vec2};

/// Residual above which a rotation number is refused.
pub const ROTATION_RESIDUAL_LIMIT: f64 = 0.01;

/// Relative size of `A/L²` below which the area counts as zero.
pub const AREA_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("{kind} curve needs at least {required} vertices, found {found}")]
    TooFewVertices {
        kind: &'static str,
        required: usize,
        found: usize,
    },
    #[error("degenerate edge starting at vertex {index} (zero length)")]
    DegenerateEdge { index: usize },
    #[error("non-finite coordinate at vertex {index}")]
    NonFinite { index: usize },
    #[error("operation requires a closed curve")]
    NotClosed,
    #[error("operation requires an open curve")]
    NotOpen,
    #[error("curve too coarse to classify: rotation residual {residual:.3e}")]
    TooCoarse { residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CurveError>;

/// Ordered polygon representing an immersed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    vertices: Vec<Vec2>,
    closed: bool,
}

impl DiscreteCurve {
    /// Validates vertex count, finiteness, and strictly positive edge lengths.
    pub fn new(vertices: Vec<Vec2>, closed: bool) -> Result<Self> {
        let required = if closed { 3 } else { 2 };
        if vertices.len() < required {
            return Err(CurveError::TooFewVertices {
                kind: if closed { "closed" } else { "open" },
                required,
                found: vertices.len(),
            });
        }
        if let Some(index) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(CurveError::NonFinite { index });
        }
        let curve = DiscreteCurve { vertices, closed };
        for k in 0..curve.edge_count() {
            if curve.edge(k).norm() <= 0.0 {
                return Err(CurveError::DegenerateEdge { index: k });
            }
        }
        Ok(curve)
    }

    pub fn closed(vertices: Vec<Vec2>) -> Result<Self> {
        Self::new(vertices, true)
    }

    pub fn open(vertices: Vec<Vec2>) -> Result<Self> {
        Self::new(vertices, false)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(vertices: Vec<Vec2>, closed: bool) -> Self {
        DiscreteCurve { vertices, closed }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vec2> {
        self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Vector from vertex `k` to its successor.
    #[inline]
    pub fn edge(&self, k: usize) -> Vec2 {
        let n = self.vertices.len();
        self.vertices[(k + 1) % n] - self.vertices[k]
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.edge_count())
            .map(|k| self.edge(k).norm())
            .collect()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn length(&self) -> f64 {
        (0..self.edge_count()).map(|k| self.edge(k).norm()).sum()
    }

    /// Shoelace area of a closed curve, positive for counterclockwise loops.
    pub fn signed_area(&self) -> Result<f64> {
        if !self.closed {
            return Err(CurveError::NotClosed);
        }
        Ok(self.sector_area())
    }

    /// `½∫ γ × ∂γ` over the parameter interval, measured from the origin.
    ///
    /// For closed curves this is the signed area. For open curves it is the
    /// area swept by the segment from the origin to the moving point.
    pub fn sector_area(&self) -> f64 {
        let v = &self.vertices;
        0.5 * (0..self.edge_count())
            .map(|k| v[k].cross(v[(k + 1) % v.len()]))
            .sum::<f64>()
    }

    /// Signed turning angle at every vertex that has two incident edges.
    ///
    /// Closed curves return one angle per vertex; open curves return the
    /// angles at interior vertices `1..len-1`.
    pub fn turning_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        if self.closed {
            (0..n)
                .map(|k| turning_angle(self.edge((k + n - 1) % n), self.edge(k)))
                .collect()
        } else {
            (1..n - 1)
                .map(|k| turning_angle(self.edge(k - 1), self.edge(k)))
                .collect()
        }
    }

    /// Discrete signed curvature and its quadrature weights.
    pub fn curvature_profile(&self) -> Result<CurvatureProfile> {
        let n = self.vertices.len();
        let lengths = self.edge_lengths();
        if let Some(index) = lengths.iter().position(|&l| !(l > 0.0)) {
            return Err(CurveError::DegenerateEdge { index });
        }
        let turning = self.turning_angles();
        let weights: Vec<f64> = if self.closed {
            (0..n)
                .map(|k| 0.5 * (lengths[(k + n - 1) % n] + lengths[k]))
                .collect()
        } else {
            (1..n - 1)
                .map(|k| 0.5 * (lengths[k - 1] + lengths[k]))
                .collect()
        };
        let kappa = turning
            .iter()
            .zip(&weights)
            .map(|(phi, w)| phi / w)
            .collect();
        Ok(CurvatureProfile {
            kappa,
            weights,
            turning,
        })
    }

    /// Total turning over `2π`, rounded, with the rounding residual.
    pub fn rotation_number(&self) -> Result<RotationNumber> {
        if !self.closed {
            return Err(CurveError::NotClosed);
        }
        let total: f64 = self.turning_angles().iter().sum::<f64>() / TAU;
        let value = total.round();
        let residual = (total - value).abs();
        if residual >= ROTATION_RESIDUAL_LIMIT {
            return Err(CurveError::TooCoarse { residual });
        }
        Ok(RotationNumber {
            value: value as i64,
            residual,
        })
    }

    pub fn iso_ratio(&self) -> Result<IsoRatio> {
        Ok(IsoRatio::from_length_area(
            self.length(),
            self.signed_area()?,
        ))
    }

    /// `L·∫(κ−κ̄)² ds`.
    pub fn k_osc(&self) -> Result<f64> {
        if !self.closed {
            return Err(CurveError::NotClosed);
        }
        Ok(self.curvature_profile()?.k_osc())
    }

    pub fn metrics(&self) -> Result<CurveMetrics> {
        CurveMetrics::compute(self)
    }

    /// Resamples at `count` vertices equally spaced in arclength along this
    /// polygon, starting at vertex 0.
    pub fn reparameterize(&self, count: usize) -> Result<DiscreteCurve> {
        let required = if self.closed { 3 } else { 2 };
        if count < required {
            return Err(CurveError::TooFewVertices {
                kind: if self.closed { "closed" } else { "open" },
                required,
                found: count,
            });
        }
        let param = ArclengthParam::new(self);
        let total = param.length();
        let spacing = if self.closed {
            total / count as f64
        } else {
            total / (count - 1) as f64
        };
        let mut out: Vec<Vec2> = (0..count)
            .map(|j| param.point_at(j as f64 * spacing))
            .collect();
        if !self.closed {
            out[count - 1] = *self.vertices.last().unwrap();
        }
        DiscreteCurve::new(out, self.closed)
    }

    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> DiscreteCurve {
        DiscreteCurve {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            closed: self.closed,
        }
    }

    /// Dilation about the origin.
    pub fn scaled(&self, factor: f64) -> DiscreteCurve {
        self.map(|v| v * factor)
    }

    pub fn translated(&self, offset: Vec2) -> DiscreteCurve {
        self.map(|v| v + offset)
    }

    pub fn rotated(&self, angle: f64) -> DiscreteCurve {
        let r = Rotation::new(angle);
        self.map(|v| r.apply(v))
    }

    /// Mirror image across the x-axis.
    pub fn reflected(&self) -> DiscreteCurve {
        self.map(|v| Vec2::new(v.x, -v.y))
    }

    /// Same trace traversed backwards.
    pub fn reversed(&self) -> DiscreteCurve {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        if self.closed {
            vertices.rotate_right(1);
        }
        DiscreteCurve {
            vertices,
            closed: self.closed,
        }
    }

    /// Cyclic relabelling so that vertex `shift` becomes vertex 0.
    pub fn shifted(&self, shift: usize) -> Result<DiscreteCurve> {
        if !self.closed {
            return Err(CurveError::NotClosed);
        }
        let mut vertices = self.vertices.clone();
        vertices.rotate_left(shift % self.vertices.len());
        Ok(DiscreteCurve {
            vertices,
            closed: true,
        })
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self.vertices.iter().fold(Vec2::ZERO, |acc, &v| acc + v);
        sum / self.vertices.len() as f64
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max((v[i] - v[j]).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }
}

/// Piecewise-linear arclength parameterization of a polygon.
#[derive(Debug, Clone)]
pub struct ArclengthParam<'a> {
    curve: &'a DiscreteCurve,
    cumulative: Vec<f64>,
}

impl<'a> ArclengthParam<'a> {
    pub fn new(curve: &'a DiscreteCurve) -> Self {
        let mut cumulative = Vec::with_capacity(curve.edge_count() + 1);
        let mut s = 0.0;
        cumulative.push(0.0);
        for k in 0..curve.edge_count() {
            s += curve.edge(k).norm();
            cumulative.push(s);
        }
        ArclengthParam { curve, cumulative }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arclength of vertex `k` from vertex 0.
    pub fn vertex_arclength(&self, k: usize) -> f64 {
        self.cumulative[k]
    }

    /// Point at arclength `s`; wraps around for closed curves and clamps for
    /// open ones.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let total = self.length();
        let s = if self.curve.closed {
            s.rem_euclid(total)
        } else {
            s.clamp(0.0, total)
        };
        let edges = self.curve.edge_count();
        let k = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(k) => k.min(edges - 1),
            Err(k) => (k - 1).min(edges - 1),
        };
        let start = self.curve.vertices[k];
        let edge = self.curve.edge(k);
        let len = self.cumulative[k + 1] - self.cumulative[k];
        let frac = ((s - self.cumulative[k]) / len).clamp(0.0, 1.0);
        if frac == 0.0 {
            start
        } else {
            start + edge * frac
        }
    }
}

/// Per-vertex signed curvature with quadrature weights `Δs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub kappa: Vec<f64>,
    pub weights: Vec<f64>,
    pub turning: Vec<f64>,
}

impl CurvatureProfile {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫κ ds`, the total turning.
    pub fn total_curvature(&self) -> f64 {
        self.turning.iter().sum()
    }

    /// `∫κ² ds`.
    pub fn bending_energy(&self) -> f64 {
        self.kappa
            .iter()
            .zip(&self.weights)
            .map(|(k, w)| k * k * w)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.total_curvature() / self.total_weight()
    }

    pub fn k_osc(&self) -> f64 {
        let mean = self.mean();
        let length = self.total_weight();
        length
            * self
                .kappa
                .iter()
                .zip(&self.weights)
                .map(|(k, w)| (k - mean) * (k - mean) * w)
                .sum::<f64>()
    }

    pub fn min(&self) -> f64 {
        self.kappa.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, k| m.max(k.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    pub value: i64,
    pub residual: f64,
}

/// Isoperimetric ratio `L²/(4πA)`, infinite when `A ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsoRatio {
    Finite(f64),
    Infinite,
}

impl IsoRatio {
    /// Areas within round-off of zero (`|A| <= 1e-12·L²`) take the infinite
    /// branch, so a symmetric figure-eight is not reported as a huge float.
    pub fn from_length_area(length: f64, area: f64) -> Self {
        if area > AREA_ROUNDOFF * length * length {
            IsoRatio::Finite(length * length / (4.0 * PI * area))
        } else {
            IsoRatio::Infinite
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, IsoRatio::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            IsoRatio::Finite(v) => Some(v),
            IsoRatio::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite branch.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl std::fmt::Display for IsoRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IsoRatio::Finite(v) => write!(f, "{v}"),
            IsoRatio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for IsoRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IsoRatio::Finite(v) => s.serialize_f64(*v),
            IsoRatio::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for IsoRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(IsoRatio::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(IsoRatio::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad iso ratio {t:?}"))),
        }
    }
}

/// The functional bundle of one closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetrics {
    pub length: f64,
    pub signed_area: f64,
    pub rotation_number: i64,
    pub rotation_residual: f64,
    pub iso_ratio: IsoRatio,
    /// `2πN/L`.
    pub kappa_bar: f64,
    pub k_osc: f64,
    /// `∫κ² ds`.
    pub bending_energy: f64,
    pub min_kappa: f64,
    pub max_abs_kappa: f64,
}

impl CurveMetrics {
    pub fn compute(curve: &DiscreteCurve) -> Result<Self> {
        let profile = curve.curvature_profile()?;
        Self::from_profile(curve, &profile)
    }

    pub(crate) fn from_profile(curve: &DiscreteCurve, profile: &CurvatureProfile) -> Result<Self> {
        if !curve.is_closed() {
            return Err(CurveError::NotClosed);
        }
        let length = curve.length();
        let signed_area = curve.sector_area();
        let rotation = curve.rotation_number()?;
        Ok(CurveMetrics {
            length,
            signed_area,
            rotation_number: rotation.value,
            rotation_residual: rotation.residual,
            iso_ratio: IsoRatio::from_length_area(length, signed_area),
            kappa_bar: TAU * rotation.value as f64 / length,
            k_osc: profile.k_osc(),
            bending_energy: profile.bending_energy(),
            min_kappa: profile.min(),
            max_abs_kappa: profile.max_abs(),
        })
    }

    /// `L·∫κ² − 4π²N²`, which equals `k_osc` for closed curves.
    pub fn k_osc_identity(&self) -> f64 {
        let n = self.rotation_number as f64;
        self.length * self.bending_energy - 4.0 * PI * PI * n * n
    }
}
