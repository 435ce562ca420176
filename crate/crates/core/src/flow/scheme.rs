//! Spatial operators and the linearly implicit step.

use serde::{Deserialize, Serialize};

use crate::banded::{CyclicBandedLu, LinalgError};
use crate::curve::DiscreteCurve;
use crate::geometry::{turning_angle, Vec2};

use super::FlowError;

/// Normal speed `V = −∂²_s κ` and the vertex velocity realizing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub kappa: Vec<f64>,
    pub normal_speed: Vec<f64>,
    /// `ν_k = R(π/2)·d_k/|d_k|` with the chord `d_k = p_{k+1} − p_{k−1}`.
    pub normals: Vec<Vec2>,
    /// `V_k·ν_k·(ℓ_{k−1} + ℓ_k)/|d_k|`; the factor makes `dA/dt` vanish
    /// exactly for the semi-discrete system.
    pub vertex_velocity: Vec<Vec2>,
}

impl Velocity {
    pub fn max_speed(&self) -> f64 {
        self.normal_speed.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) struct Spacing {
    pub edge: Vec<f64>,
    /// Dual lengths `Δs_k = (ℓ_{k−1} + ℓ_k)/2`.
    pub dual: Vec<f64>,
}

pub(crate) fn spacing(p: &[Vec2]) -> Result<Spacing, FlowError> {
    let n = p.len();
    let edge: Vec<f64> = (0..n).map(|k| (p[(k + 1) % n] - p[k]).norm()).collect();
    if let Some(index) = edge.iter().position(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(FlowError::DegenerateSpacing { index });
    }
    let dual = (0..n)
        .map(|k| 0.5 * (edge[(k + n - 1) % n] + edge[k]))
        .collect();
    Ok(Spacing { edge, dual })
}

/// Conservative second difference `[(f_{k+1}−f_k)/ℓ_k − (f_k−f_{k−1})/ℓ_{k−1}]/Δs_k`.
/// Its `Δs`-weighted sum telescopes to zero.
pub(crate) fn second_difference(f: &[f64], sp: &Spacing) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|k| {
            let (prev, next) = ((k + n - 1) % n, (k + 1) % n);
            ((f[next] - f[k]) / sp.edge[k] - (f[k] - f[prev]) / sp.edge[prev]) / sp.dual[k]
        })
        .collect()
}

pub fn velocity(curve: &DiscreteCurve) -> Result<Velocity, FlowError> {
    if !curve.is_closed() {
        return Err(FlowError::InvalidInit("curve must be closed".into()));
    }
    velocity_of(curve.vertices())
}

pub(crate) fn velocity_of(p: &[Vec2]) -> Result<Velocity, FlowError> {
    let n = p.len();
    let sp = spacing(p)?;
    let kappa: Vec<f64> = (0..n)
        .map(|k| {
            let prev = (k + n - 1) % n;
            turning_angle(p[k] - p[prev], p[(k + 1) % n] - p[k]) / sp.dual[k]
        })
        .collect();
    let normal_speed: Vec<f64> = second_difference(&kappa, &sp)
        .into_iter()
        .map(|x| -x)
        .collect();
    let mut normals = Vec::with_capacity(n);
    let mut vertex_velocity = Vec::with_capacity(n);
    for k in 0..n {
        let d = p[(k + 1) % n] - p[(k + n - 1) % n];
        let dn = d.norm();
        if !(dn > 0.0) {
            return Err(FlowError::DegenerateSpacing { index: k });
        }
        let nu = d.perp() / dn;
        normals.push(nu);
        vertex_velocity.push(nu * (normal_speed[k] * 2.0 * sp.dual[k] / dn));
    }
    Ok(Velocity {
        kappa,
        normal_speed,
        normals,
        vertex_velocity,
    })
}

/// Linearly implicit Euler update: the normal speed is filtered through
/// `(I + dt·D⁴)V' = V` and vertices move by `dt·V'` along the chord normals.
/// The operator's `Δs`-weighted column sums are those of `I`, so `Σ V'·Δs =
/// Σ V·Δs = 0` and the update is area neutral to first order.
pub(crate) fn implicit_update(p: &[Vec2], vel: &Velocity, dt: f64) -> Result<Vec<Vec2>, FlowError> {
    let n = p.len();
    let sp = spacing(p)?;
    let lu = implicit_operator(&sp, dt)?;
    let filtered = lu.solve(&vel.normal_speed)?;
    let next: Vec<Vec2> = (0..n)
        .map(|k| {
            let dn = (p[(k + 1) % n] - p[(k + n - 1) % n]).norm();
            p[k] + vel.normals[k] * (dt * filtered[k] * 2.0 * sp.dual[k] / dn)
        })
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::DegenerateSpacing { index: 0 });
    }
    Ok(next)
}

/// Factorization of `I + dt·D²∘D²` for the current spacing.
pub(crate) fn implicit_operator(sp: &Spacing, dt: f64) -> Result<CyclicBandedLu, LinalgError> {
    let n = sp.edge.len();
    // rows of D²: a_k at k−1, b_k at k, c_k at k+1
    let a: Vec<f64> = (0..n)
        .map(|k| 1.0 / (sp.edge[(k + n - 1) % n] * sp.dual[k]))
        .collect();
    let c: Vec<f64> = (0..n).map(|k| 1.0 / (sp.edge[k] * sp.dual[k])).collect();
    let b: Vec<f64> = (0..n).map(|k| -(a[k] + c[k])).collect();
    let at = |k: isize| ((k % n as isize) + n as isize) as usize % n;
    CyclicBandedLu::new(n, 2, |k, o| {
        let ki = k as isize;
        let (km, kp) = (at(ki - 1), at(ki + 1));
        let d4 = match o {
            -2 => a[k] * a[km],
            -1 => a[k] * b[km] + b[k] * a[k],
            0 => a[k] * c[km] + b[k] * b[k] + c[k] * a[kp],
            1 => b[k] * c[k] + c[k] * b[kp],
            2 => c[k] * c[kp],
            _ => 0.0,
        };
        dt * d4 + if o == 0 { 1.0 } else { 0.0 }
    })
}

/// How vertices are respaced after each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Redistribution {
    None,
    /// Equal edge lengths.
    Arclength {
        sweeps: usize,
    },
    /// Edge length proportional to `1/((1−β) + β|κ|/mean|κ|)`.
    Curvature {
        beta: f64,
        sweeps: usize,
    },
}

impl Default for Redistribution {
    fn default() -> Self {
        Redistribution::Arclength { sweeps: 2 }
    }
}

/// Red-black sweeps sliding each vertex along its chord `p_{k+1} − p_{k−1}`.
/// A slide keeps the triangle on that chord at constant area, so the signed
/// area is unchanged; requires an even vertex count.
pub(crate) fn redistribute(p: &mut [Vec2], mode: Redistribution) {
    let (sweeps, beta) = match mode {
        Redistribution::None => return,
        Redistribution::Arclength { sweeps } => (sweeps, 0.0),
        Redistribution::Curvature { beta, sweeps } => (sweeps, beta),
    };
    let n = p.len();
    let weights: Option<Vec<f64>> = (beta > 0.0).then(|| {
        let edge: Vec<f64> = (0..n).map(|k| (p[(k + 1) % n] - p[k]).norm()).collect();
        let kabs: Vec<f64> = (0..n)
            .map(|k| {
                let prev = (k + n - 1) % n;
                let ds = 0.5 * (edge[prev] + edge[k]);
                turning_angle(p[k] - p[prev], p[(k + 1) % n] - p[k]).abs() / ds
            })
            .collect();
        let length: f64 = edge.iter().sum();
        let mean = (0..n)
            .map(|k| kabs[k] * 0.5 * (edge[(k + n - 1) % n] + edge[k]))
            .sum::<f64>()
            / length;
        let vertex: Vec<f64> = kabs
            .iter()
            .map(|k| (1.0 - beta) + beta * k / mean.max(f64::MIN_POSITIVE))
            .collect();
        // edge k joins vertices k and k+1
        (0..n)
            .map(|k| 0.5 * (vertex[k] + vertex[(k + 1) % n]))
            .collect()
    });
    for _ in 0..sweeps {
        for parity in 0..2 {
            for k in (parity..n).step_by(2) {
                let (prev, next) = ((k + n - 1) % n, (k + 1) % n);
                let u = p[k] - p[prev];
                let v = p[next] - p[k];
                let d = u + v;
                let dd = d.norm_squared();
                if !(dd > 0.0) {
                    continue;
                }
                let (w1, w2) = match &weights {
                    Some(w) => (w[prev] * w[prev], w[k] * w[k]),
                    None => (1.0, 1.0),
                };
                // root of w1|u + αd|² − w2|v − αd|², by Newton from α = 0
                let f =
                    |al: f64| w1 * (u + d * al).norm_squared() - w2 * (v - d * al).norm_squared();
                let fp = |al: f64| 2.0 * (w1 * (u + d * al).dot(d) + w2 * (v - d * al).dot(d));
                let mut alpha = 0.0;
                for _ in 0..3 {
                    let slope = fp(alpha);
                    if !(slope.abs() > 0.0) {
                        break;
                    }
                    alpha -= f(alpha) / slope;
                }
                let limit = 0.25 * u.norm().min(v.norm()) / dd.sqrt();
                let alpha = alpha.clamp(-limit, limit);
                if alpha.is_finite() {
                    p[k] += d * alpha;
                }
            }
        }
    }
}
