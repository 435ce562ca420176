//! Length minimization at fixed area for open curves whose endpoints sit on
//! the half-lines `{λv₀}` and `{λv_θ}` at a common distance `λ` from the
//! origin.
//!
//! Area is the sector area `½Σ p_k × p_{k+1}`; the two radial segments back
//! to the origin contribute nothing, so this is the area enclosed by the curve
//! and the half-lines. The continuous minimizer is the arc of angle `θ`
//! centered at the origin, of length `√(2θA)`. With `M` edges the discrete
//! minimizer is the regular inscribed arc, `L² = 4M·tan(θ/2M)·A`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{solve_dense, BandedMatrix, LinalgError};
use crate::curve::{CurveError, DiscreteCurve};
use crate::geometry::Vec2;
use crate::symmetry::{check_symmetry, SymmetryError, SymmetrySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimizeError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("curve is not admissible: {0}")]
    Inadmissible(String),
    #[error("no convergence after {iterations} iterations, residual {residual:.3e}")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("line search stalled at iteration {iteration}, residual {residual:.3e}")]
    Stalled {
        iteration: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

impl MinimizeError {
    /// True for failures of the iteration itself rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MinimizeError::NotConverged { .. }
                | MinimizeError::Stalled { .. }
                | MinimizeError::Linalg(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, MinimizeError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryProblem {
    pub theta: f64,
    #[serde(default = "default_area")]
    pub area_target: f64,
}

fn default_area() -> f64 {
    1.0
}

impl FreeBoundaryProblem {
    pub fn new(theta: f64, area_target: f64) -> Result<Self> {
        let p = FreeBoundaryProblem { theta, area_target };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= TAU) {
            return Err(MinimizeError::InvalidProblem(format!(
                "theta must lie in (0, 2π], got {}",
                self.theta
            )));
        }
        if !(self.area_target > 0.0 && self.area_target.is_finite()) {
            return Err(MinimizeError::InvalidProblem(format!(
                "area target must be positive, got {}",
                self.area_target
            )));
        }
        Ok(())
    }

    pub fn v0(&self) -> Vec2 {
        Vec2::new(1.0, 0.0)
    }

    pub fn v_theta(&self) -> Vec2 {
        if self.theta == TAU {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::from_angle(self.theta)
        }
    }

    pub fn is_full_turn(&self) -> bool {
        self.theta == TAU
    }

    /// `√(2θA)`, the length of the optimal arc.
    pub fn optimal_length(&self) -> f64 {
        (2.0 * self.theta * self.area_target).sqrt()
    }

    /// Length of the regular inscribed arc with `edges` edges.
    pub fn discrete_optimal_length(&self, edges: usize) -> f64 {
        let m = edges as f64;
        (4.0 * m * (self.theta / (2.0 * m)).tan() * self.area_target).sqrt()
    }

    /// Arc of central angle `θ + 2π(winding − 1)` scaled to the target area,
    /// with `edges` edges. A nonzero `perturbation` adds a radial bump and
    /// uneven vertex spacing that keep the endpoints admissible.
    pub fn initial_arc(&self, edges: usize, winding: u32, perturbation: f64) -> DiscreteCurve {
        let sweep = self.theta + TAU * (winding.max(1) - 1) as f64;
        let pts: Vec<Vec2> = (0..=edges)
            .map(|k| {
                let s = k as f64 / edges as f64;
                let bump = (PI * s).sin() * (1.0 + 0.5 * (3.0 * PI * s).cos());
                let shifted = s + perturbation * 0.2 * (TAU * s).sin() / TAU;
                Vec2::from_angle(sweep * shifted) * (1.0 + perturbation * bump)
            })
            .collect();
        let mut pts = pts;
        pts[edges] = self.v_theta() * pts[0].norm();
        let curve = DiscreteCurve::from_parts_unchecked(pts, false);
        let scale = (self.area_target / curve.sector_area()).sqrt();
        curve.scaled(scale)
    }

    /// Checks the endpoint constraints with tolerance `tol·L`.
    pub fn check_admissible(&self, curve: &DiscreteCurve, tol: f64) -> Result<()> {
        if curve.is_closed() {
            return Err(MinimizeError::Inadmissible("curve must be open".into()));
        }
        let v = curve.vertices();
        let scale = tol * curve.length();
        let (p0, p1) = (v[0], *v.last().unwrap());
        let (v0, vt) = (self.v0(), self.v_theta());
        if p0.cross(v0).abs() > scale || p0.dot(v0) < -scale {
            return Err(MinimizeError::Inadmissible(format!(
                "first vertex ({}, {}) is off the half-line at angle 0",
                p0.x, p0.y
            )));
        }
        if p1.cross(vt).abs() > scale || p1.dot(vt) < -scale {
            return Err(MinimizeError::Inadmissible(format!(
                "last vertex ({}, {}) is off the half-line at angle {}",
                p1.x, p1.y, self.theta
            )));
        }
        if (p0.norm() - p1.norm()).abs() > scale {
            return Err(MinimizeError::Inadmissible(format!(
                "endpoint radii differ: {} vs {}",
                p0.norm(),
                p1.norm()
            )));
        }
        Ok(())
    }
}

/// Exact derivative of the polygon length along a per-vertex perturbation.
pub fn first_variation_length(curve: &DiscreteCurve, perturbation: &[Vec2]) -> f64 {
    length_gradient(curve)
        .iter()
        .zip(perturbation)
        .map(|(g, p)| g.dot(*p))
        .sum()
}

/// Exact derivative of the signed (closed) or sector (open) area along a
/// per-vertex perturbation.
pub fn first_variation_area(curve: &DiscreteCurve, perturbation: &[Vec2]) -> f64 {
    area_gradient(curve)
        .iter()
        .zip(perturbation)
        .map(|(g, p)| g.dot(*p))
        .sum()
}

/// `∂L/∂p_k = t_{k−1} − t_k` with unit edge tangents `t`.
pub fn length_gradient(curve: &DiscreteCurve) -> Vec<Vec2> {
    let n = curve.len();
    let edges = curve.edge_count();
    let tangents: Vec<Vec2> = (0..edges).map(|k| curve.edge(k).normalized()).collect();
    (0..n)
        .map(|k| {
            let before = if k > 0 {
                tangents[k - 1]
            } else if curve.is_closed() {
                tangents[edges - 1]
            } else {
                Vec2::ZERO
            };
            let after = if k < edges { tangents[k] } else { Vec2::ZERO };
            before - after
        })
        .collect()
}

/// `∂A/∂p_k = ½·R(−π/2)(p_{k+1} − p_{k−1})`, with missing neighbours taken
/// as the origin on open curves.
pub fn area_gradient(curve: &DiscreteCurve) -> Vec<Vec2> {
    let v = curve.vertices();
    let n = v.len();
    (0..n)
        .map(|k| {
            let prev = if k > 0 {
                v[k - 1]
            } else if curve.is_closed() {
                v[n - 1]
            } else {
                Vec2::ZERO
            };
            let next = if k + 1 < n {
                v[k + 1]
            } else if curve.is_closed() {
                v[0]
            } else {
                Vec2::ZERO
            };
            (next - prev).perp() * -0.5
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    /// Edge count of the discretization.
    pub vertices: usize,
    /// Stationarity tolerance relative to length.
    pub tol: f64,
    pub max_iters: usize,
    /// Cap on extra Newton steps after `tol` is met, taken until the step
    /// drops below `1e-10·L`.
    pub polish_iters: usize,
    /// Initial arcs of angle `θ + 2π(j − 1)` for `j = 1..=windings`.
    pub windings: u32,
    /// Relative amplitude of the initial-arc perturbation.
    pub perturbation: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            vertices: 512,
            tol: 1e-8,
            max_iters: 200,
            polish_iters: 10,
            windings: 3,
            perturbation: 0.05,
        }
    }
}

/// Certificate data at a stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub grad_length: Vec<Vec2>,
    pub grad_area: Vec<Vec2>,
    /// Least-squares `μ` in `∇L + μ∇A ≈ 0` over the free directions.
    pub multiplier: f64,
    /// `‖∇L + μ∇A‖` over the free directions.
    pub stationarity_residual: f64,
    /// `|t(0)·v₀ − t(1)·v_θ|` with unit end tangents.
    pub boundary_defect: f64,
    pub iterations: usize,
    pub remeshes: usize,
    pub residual_history: Vec<f64>,
}

struct Iterate<'a> {
    problem: &'a FreeBoundaryProblem,
    lambda: f64,
    pts: Vec<Vec2>,
}

impl<'a> Iterate<'a> {
    fn from_curve(problem: &'a FreeBoundaryProblem, curve: &DiscreteCurve) -> Self {
        let v = curve.vertices();
        let lambda = 0.5 * (v[0].norm() + v.last().unwrap().norm());
        let mut it = Iterate {
            problem,
            lambda,
            pts: v.to_vec(),
        };
        it.sync_endpoints();
        it
    }

    fn edges(&self) -> usize {
        self.pts.len() - 1
    }

    fn sync_endpoints(&mut self) {
        let m = self.edges();
        self.pts[0] = self.problem.v0() * self.lambda;
        self.pts[m] = self.problem.v_theta() * self.lambda;
    }

    fn curve(&self) -> DiscreteCurve {
        DiscreteCurve::from_parts_unchecked(self.pts.clone(), false)
    }

    fn length(&self) -> f64 {
        self.pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    fn area(&self) -> f64 {
        0.5 * self.pts.windows(2).map(|w| w[0].cross(w[1])).sum::<f64>()
    }

    fn rescale_to_target(&mut self) -> bool {
        let a = self.area();
        if !(a > 0.0) {
            return false;
        }
        let s = (self.problem.area_target / a).sqrt();
        self.lambda *= s;
        for p in &mut self.pts {
            *p = *p * s;
        }
        self.sync_endpoints();
        true
    }

    /// Gradients in `z = (λ, p_1, …, p_{M−1})`, flattened with `λ` last.
    fn reduced(&self, full: &[Vec2]) -> Vec<f64> {
        let m = self.edges();
        let mut out = Vec::with_capacity(2 * m - 1);
        for p in &full[1..m] {
            out.push(p.x);
            out.push(p.y);
        }
        out.push(full[0].dot(self.problem.v0()) + full[m].dot(self.problem.v_theta()));
        out
    }
}

fn edge_hessian(e: Vec2) -> [[f64; 2]; 2] {
    let l = e.norm();
    let t = e / l;
    [
        [(1.0 - t.x * t.x) / l, -t.x * t.y / l],
        [-t.x * t.y / l, (1.0 - t.y * t.y) / l],
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lagrangian Hessian `∇²L + μ∇²A + δI` split into the banded interior
/// block, the `λ` coupling column and the `λλ` entry.
fn lagrangian_hessian(it: &Iterate, mu: f64, delta: f64) -> (BandedMatrix, Vec<f64>, f64) {
    let m = it.edges();
    let n = 2 * (m - 1);
    let (v0, vt) = (it.problem.v0(), it.problem.v_theta());
    let mut b = BandedMatrix::zeros(n, 3, 3);
    let mut c = vec![0.0; n];
    let mut w = delta;
    // ½J with J = [[0, 1], [−1, 0]] is the area block ∂²A/∂p_k∂p_{k+1}
    let ja = [[0.0, 0.5 * mu], [-0.5 * mu, 0.0]];
    for k in 0..m {
        let h = edge_hessian(it.pts[k + 1] - it.pts[k]);
        // mixed block between vertex k (rows) and k+1 (cols)
        let mixed = [
            [-h[0][0] + ja[0][0], -h[0][1] + ja[0][1]],
            [-h[1][0] + ja[1][0], -h[1][1] + ja[1][1]],
        ];
        let a_int = k >= 1;
        let b_int = k < m - 1;
        if a_int {
            let r = 2 * (k - 1);
            for i in 0..2 {
                for j in 0..2 {
                    b.add(r + i, r + j, h[i][j]);
                }
            }
        } else {
            w +=
                v0.x * (h[0][0] * v0.x + h[0][1] * v0.y) + v0.y * (h[1][0] * v0.x + h[1][1] * v0.y);
        }
        if b_int {
            let r = 2 * k;
            for i in 0..2 {
                for j in 0..2 {
                    b.add(r + i, r + j, h[i][j]);
                }
            }
        } else {
            w +=
                vt.x * (h[0][0] * vt.x + h[0][1] * vt.y) + vt.y * (h[1][0] * vt.x + h[1][1] * vt.y);
        }
        match (a_int, b_int) {
            (true, true) => {
                let (r, s) = (2 * (k - 1), 2 * k);
                for i in 0..2 {
                    for j in 0..2 {
                        b.add(r + i, s + j, mixed[i][j]);
                        b.add(s + j, r + i, mixed[i][j]);
                    }
                }
            }
            (false, true) => {
                // λ·v₀ against vertex 1
                let s = 2 * k;
                for j in 0..2 {
                    c[s + j] += v0.x * mixed[0][j] + v0.y * mixed[1][j];
                }
            }
            (true, false) => {
                // vertex M−1 against λ·v_θ
                let r = 2 * (k - 1);
                for i in 0..2 {
                    c[r + i] += mixed[i][0] * vt.x + mixed[i][1] * vt.y;
                }
            }
            (false, false) => {
                // single edge; unreachable for edges >= 2
                w += 2.0
                    * (v0.x * (mixed[0][0] * vt.x + mixed[0][1] * vt.y)
                        + v0.y * (mixed[1][0] * vt.x + mixed[1][1] * vt.y));
            }
        }
    }
    for i in 0..n {
        b.add(i, i, delta);
    }
    (b, c, w)
}

/// Solves the equality-constrained Newton system for `Δz`.
fn kkt_step(
    it: &Iterate,
    g: &[f64],
    a: &[f64],
    mu: f64,
    delta: f64,
) -> std::result::Result<Vec<f64>, LinalgError> {
    let n = g.len() - 1;
    let (b, c, w) = lagrangian_hessian(it, mu, delta);
    let lu = b.factor()?;
    let (gi, gl) = (&g[..n], g[n]);
    let (ai, al) = (&a[..n], a[n]);
    let yg = lu.solve(gi)?;
    let yc = lu.solve(&c)?;
    let ya = lu.solve(ai)?;
    let residual_area = it.area() - it.problem.area_target;
    let s = [
        w - dot(&c, &yc),
        al - dot(&c, &ya),
        al - dot(ai, &yc),
        -dot(ai, &ya),
    ];
    let rhs = [-gl + dot(&c, &yg), -residual_area + dot(ai, &yg)];
    let sol = solve_dense(2, &s, &rhs)?;
    let (dl, nu) = (sol[0], sol[1]);
    let mut dz: Vec<f64> = (0..n).map(|k| -yg[k] - yc[k] * dl - ya[k] * nu).collect();
    dz.push(dl);
    Ok(dz)
}

fn multiplier_and_residual(g: &[f64], a: &[f64]) -> (f64, f64) {
    let mu = -dot(g, a) / dot(a, a);
    let r = g
        .iter()
        .zip(a)
        .map(|(x, y)| (x + mu * y).powi(2))
        .sum::<f64>()
        .sqrt();
    (mu, r)
}

/// Relative slack in the length-decrease test. Near the optimum length
/// changes by the square of the residual, below the rounding error of the
/// length sum itself.
pub const LENGTH_ROUNDOFF: f64 = 1e-14;

const STEP_TOL: f64 = 1e-10;

/// Newton iteration on the Lagrangian with Levenberg–Marquardt damping,
/// area restored by rescaling about the origin after every step. A step is
/// accepted only if it keeps `λ ≥ 0` and does not increase length.
pub fn minimize_open(
    problem: &FreeBoundaryProblem,
    init: &DiscreteCurve,
    opts: &MinimizeOptions,
) -> Result<(DiscreteCurve, VariationReport)> {
    problem.validate()?;
    if init.len() < 4 {
        return Err(MinimizeError::InvalidProblem(format!(
            "need at least 3 edges, got {}",
            init.edge_count()
        )));
    }
    problem.check_admissible(init, 1e-6)?;
    if !(init.sector_area() > 0.0) {
        return Err(MinimizeError::Inadmissible(
            "initial curve must enclose positive area".into(),
        ));
    }
    let mut it = Iterate::from_curve(problem, init);
    it.rescale_to_target();
    let edges = it.edges();

    let mut history = Vec::new();
    let mut length = it.length();
    let diag_scale = edges as f64 / length;
    // the floor keeps the system solvable along the rigid null directions of
    // the full-turn problem
    let delta_floor = 1e-12 * diag_scale;
    let mut delta = 1e-6 * diag_scale;
    let mut remeshes = 0;
    let mut polish = 0;
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;

    loop {
        let curve = it.curve();
        let g = it.reduced(&length_gradient(&curve));
        let a = it.reduced(&area_gradient(&curve));
        let (mu, residual) = multiplier_and_residual(&g, &a);
        history.push(residual / length);
        if !residual.is_finite() {
            return Err(MinimizeError::NotConverged {
                iterations,
                residual,
                history,
            });
        }
        let stationary = residual <= opts.tol * length;
        if stationary {
            // slow tangential modes barely show in the residual, so polish
            // until the Newton step itself is negligible
            if last_step <= STEP_TOL * length || polish >= opts.polish_iters {
                break;
            }
            polish += 1;
        }
        if iterations >= opts.max_iters {
            if stationary {
                break;
            }
            return Err(MinimizeError::NotConverged {
                iterations,
                residual: residual / length,
                history,
            });
        }
        iterations += 1;

        let mut accepted = false;
        for _ in 0..60 {
            let dz = match kkt_step(&it, &g, &a, mu, delta) {
                Ok(dz) => dz,
                Err(_) => {
                    delta *= 8.0;
                    continue;
                }
            };
            let mut trial = Iterate {
                problem,
                lambda: it.lambda + dz[dz.len() - 1],
                pts: it.pts.clone(),
            };
            for k in 1..edges {
                trial.pts[k] += Vec2::new(dz[2 * (k - 1)], dz[2 * (k - 1) + 1]);
            }
            trial.sync_endpoints();
            let ok = trial.lambda >= 0.0
                && trial.rescale_to_target()
                && trial.pts.windows(2).all(|w| w[1] != w[0]);
            let trial_length = if ok { trial.length() } else { f64::INFINITY };
            if ok && trial_length <= length * (1.0 + LENGTH_ROUNDOFF) {
                last_step = dz.iter().map(|x| x * x).sum::<f64>().sqrt();
                it = trial;
                length = trial_length.min(length);
                delta = (delta * 0.1).max(delta_floor);
                accepted = true;
                break;
            }
            delta *= 8.0;
        }
        if !accepted {
            if stationary {
                break;
            }
            return Err(MinimizeError::Stalled {
                iteration: iterations,
                residual: residual / length,
                history,
            });
        }

        let min_edge = it
            .pts
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(f64::INFINITY, f64::min);
        if min_edge < 0.05 * length / edges as f64 {
            let remeshed = it.curve().reparameterize(edges + 1)?;
            it = Iterate::from_curve(problem, &remeshed);
            it.rescale_to_target();
            length = it.length();
            remeshes += 1;
            last_step = f64::INFINITY;
            polish = 0;
        }
    }

    let curve = it.curve();
    let grad_length = length_gradient(&curve);
    let grad_area = area_gradient(&curve);
    let (multiplier, residual) =
        multiplier_and_residual(&it.reduced(&grad_length), &it.reduced(&grad_area));
    let (t0, t1) = end_tangents(&curve);
    let report = VariationReport {
        grad_length,
        grad_area,
        multiplier,
        stationarity_residual: residual,
        boundary_defect: (t0.dot(problem.v0()) - t1.dot(problem.v_theta())).abs(),
        iterations,
        remeshes,
        residual_history: history,
    };
    Ok((curve, report))
}

/// Unit tangents at both ends from the circle through the first (last)
/// three vertices; exact for circular arcs.
pub fn end_tangents(curve: &DiscreteCurve) -> (Vec2, Vec2) {
    let v = curve.vertices();
    let n = v.len();
    let start = circle_tangent(v[0], v[1], v[2]);
    let end = -circle_tangent(v[n - 1], v[n - 2], v[n - 3]);
    (start, end)
}

/// Tangent at `a` of the circle through `a, b, c`, oriented toward `b`.
fn circle_tangent(a: Vec2, b: Vec2, c: Vec2) -> Vec2 {
    let (ab, ac) = (b - a, c - a);
    let d = 2.0 * ab.cross(ac);
    if d.abs() <= 1e-14 * ab.norm() * ac.norm() {
        return ab.normalized();
    }
    // circumcenter relative to a
    let o = Vec2::new(
        ac.y * ab.norm_squared() - ab.y * ac.norm_squared(),
        ab.x * ac.norm_squared() - ac.x * ab.norm_squared(),
    ) / d;
    let t = (-o).perp().normalized();
    if t.dot(ab) < 0.0 {
        -t
    } else {
        t
    }
}

/// Margin and equality-case defects for an open curve in the sector class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub theta: f64,
    pub length: f64,
    pub area: f64,
    /// `L² − 2θA`.
    pub margin: f64,
    /// `max |κ − κ̄| / |κ̄|` over interior vertices.
    pub kappa_spread: f64,
    pub glue_defect: f64,
    /// Omitted at `θ = 2π`, where the endpoint is free on the circle.
    pub perp_defect: Option<f64>,
}

/// Evaluates the sharp sector inequality `L² ≥ 2θA` and the defects that
/// vanish in its equality case.
pub fn verify_sector_inequality(
    curve: &DiscreteCurve,
    problem: &FreeBoundaryProblem,
) -> Result<SectorReport> {
    problem.validate()?;
    if curve.len() < 4 {
        return Err(MinimizeError::Inadmissible("need at least 3 edges".into()));
    }
    problem.check_admissible(curve, 1e-8)?;
    let length = curve.length();
    let area = curve.sector_area();
    let profile = curve.curvature_profile()?;
    let mean = profile.mean();
    let kappa_spread = profile
        .kappa
        .iter()
        .map(|k| (k - mean).abs())
        .fold(0.0, f64::max)
        / mean.abs();
    let (t0, t1) = end_tangents(curve);
    Ok(SectorReport {
        theta: problem.theta,
        length,
        area,
        margin: length * length - 2.0 * problem.theta * area,
        kappa_spread,
        glue_defect: (t0.dot(problem.v0()) - t1.dot(problem.v_theta())).abs(),
        perp_defect: (!problem.is_full_turn()).then(|| t0.dot(problem.v0()).abs()),
    })
}

/// Result of one initial winding in [`solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingCandidate {
    pub winding: u32,
    pub length: Option<f64>,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub theta: f64,
    pub area_target: f64,
    pub edges: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub optimal_length: f64,
    pub discrete_optimal_length: f64,
    pub margin: f64,
    pub kappa_spread: f64,
    pub glue_defect: f64,
    pub perp_defect: Option<f64>,
    pub multiplier: f64,
    pub stationarity_residual: f64,
    pub iters: usize,
    pub best_winding: u32,
    pub candidates: Vec<WindingCandidate>,
    pub residual_history: Vec<f64>,
}

/// Minimizes from perturbed arcs of each winding `1..=opts.windings` and
/// keeps the shortest result.
pub fn solve(
    problem: &FreeBoundaryProblem,
    opts: &MinimizeOptions,
) -> Result<(DiscreteCurve, VariationReport, MinimizeReport)> {
    problem.validate()?;
    if opts.vertices < 3 {
        return Err(MinimizeError::InvalidProblem(format!(
            "need at least 3 edges, got {}",
            opts.vertices
        )));
    }
    let mut candidates = Vec::new();
    let mut best: Option<(u32, DiscreteCurve, VariationReport)> = None;
    let mut first_error = None;
    for j in 1..=opts.windings.max(1) {
        let init = problem.initial_arc(opts.vertices, j, opts.perturbation);
        match minimize_open(problem, &init, opts) {
            Ok((curve, report)) => {
                let length = curve.length();
                candidates.push(WindingCandidate {
                    winding: j,
                    length: Some(length),
                    iterations: report.iterations,
                    error: None,
                });
                // a higher winding must be shorter beyond round-off to win
                if best
                    .as_ref()
                    .is_none_or(|(_, c, _)| length < c.length() * (1.0 - 1e-12))
                {
                    best = Some((j, curve, report));
                }
            }
            Err(e) => {
                candidates.push(WindingCandidate {
                    winding: j,
                    length: None,
                    iterations: 0,
                    error: Some(e.to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    let Some((best_winding, curve, variation)) = best else {
        return Err(first_error.expect("at least one winding is tried"));
    };
    let sector = verify_sector_inequality(&curve, problem)?;
    let report = MinimizeReport {
        theta: problem.theta,
        area_target: problem.area_target,
        edges: opts.vertices,
        length: sector.length,
        area: sector.area,
        optimal_length: problem.optimal_length(),
        discrete_optimal_length: problem.discrete_optimal_length(opts.vertices),
        margin: sector.margin,
        kappa_spread: sector.kappa_spread,
        glue_defect: sector.glue_defect,
        perp_defect: sector.perp_defect,
        multiplier: variation.multiplier,
        stationarity_residual: variation.stationarity_residual,
        iters: variation.iterations,
        best_winding,
        candidates,
        residual_history: variation.residual_history.clone(),
    };
    Ok((curve, variation, report))
}

/// Margins of `I ≥ i_{n,m}` on a closed symmetric curve and of the period
/// inequality `2(2πi/m)·A(γ|_m) ≤ L(γ|_m)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricIsoReport {
    pub spec: SymmetrySpec,
    pub iso_ratio: crate::curve::IsoRatio,
    /// `I − i`, infinite on the infinite branch.
    pub iso_margin: f64,
    pub period_length: f64,
    pub period_area: f64,
    /// `L(γ|_m)² − 2(2πi/m)·A(γ|_m)`.
    pub period_margin: f64,
    /// `max_k ||p_k| − r̄| / r̄` about the origin.
    pub radial_defect: f64,
    pub equality: bool,
}

/// Radial deviation below which a curve counts as a covered circle for the
/// equality flag.
pub const EQUALITY_RADIAL_TOL: f64 = 1e-6;
/// Isoperimetric margin below which equality is flagged.
pub const EQUALITY_ISO_TOL: f64 = 1e-3;

pub fn verify_symmetric_isoperimetric(
    curve: &DiscreteCurve,
    spec: SymmetrySpec,
) -> Result<SymmetricIsoReport> {
    let check = check_symmetry(curve, spec.m, 1e-8)?;
    if check.index != Some(spec.i) && !(spec.m == 1 && check.symmetric) {
        return Err(MinimizeError::Inadmissible(format!(
            "curve is not ({}, {})-symmetric (best index {}, defect {:.3e})",
            spec.m, spec.i, check.best_index, check.defect
        )));
    }
    let n = curve.rotation_number()?.value;
    if n != spec.n {
        return Err(MinimizeError::Inadmissible(format!(
            "rotation number is {n}, expected {}",
            spec.n
        )));
    }
    let iso = curve.iso_ratio()?;
    let v = curve.vertices();
    let period = v.len() / spec.m as usize;
    let piece: Vec<Vec2> = (0..=period).map(|k| v[k % v.len()]).collect();
    let piece = DiscreteCurve::from_parts_unchecked(piece, false);
    let period_length = piece.length();
    let period_area = piece.sector_area();
    let radii: Vec<f64> = v.iter().map(|p| p.norm()).collect();
    let mean_r = radii.iter().sum::<f64>() / radii.len() as f64;
    let radial_defect = radii.iter().map(|r| (r - mean_r).abs()).fold(0.0, f64::max) / mean_r;
    let iso_margin = iso.as_f64() - spec.i as f64;
    Ok(SymmetricIsoReport {
        spec,
        iso_ratio: iso,
        iso_margin,
        period_length,
        period_area,
        period_margin: period_length * period_length
            - 2.0 * (TAU * spec.i as f64 / spec.m as f64) * period_area,
        radial_defect,
        equality: radial_defect <= EQUALITY_RADIAL_TOL && iso_margin.abs() <= EQUALITY_ISO_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::symmetry::{covered_circle, vanishing_loop_curve};
    use rand::{Rng, SeedableRng};

    fn central_difference(f: impl Fn(f64) -> f64, eps: f64) -> f64 {
        (f(eps) - f(-eps)) / (2.0 * eps)
    }

    fn perturbed(curve: &DiscreteCurve, phi: &[Vec2], eps: f64) -> DiscreteCurve {
        let pts = curve
            .vertices()
            .iter()
            .zip(phi)
            .map(|(p, q)| *p + *q * eps)
            .collect();
        DiscreteCurve::from_parts_unchecked(pts, curve.is_closed())
    }

    #[test]
    fn segment_examples() {
        let seg = DiscreteCurve::open((0..=20).map(|k| Vec2::new(k as f64 / 20.0, 0.0)).collect())
            .unwrap();
        let bump: Vec<Vec2> = seg
            .vertices()
            .iter()
            .map(|p| Vec2::new(p.x * (1.0 - p.x), 0.0))
            .collect();
        assert!(first_variation_length(&seg, &bump).abs() < 1e-15);
        let stretch: Vec<Vec2> = seg.vertices().iter().map(|p| Vec2::new(p.x, 0.0)).collect();
        assert!((first_variation_length(&seg, &stretch) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn area_variation_examples() {
        let c = shapes::regular_polygon(256, 1.0);
        let zero = vec![Vec2::ZERO; 256];
        assert_eq!(first_variation_area(&c, &zero), 0.0);
        let normal: Vec<Vec2> = c.vertices().iter().map(|p| p.normalized()).collect();
        let want = central_difference(|e| perturbed(&c, &normal, e).signed_area().unwrap(), 1e-4);
        let got = first_variation_area(&c, &normal);
        assert!((got - want).abs() < 1e-9);
        assert!((got - TAU).abs() < 1e-3);
        // translation: the closed-curve area is translation invariant
        let shift = vec![Vec2::new(0.3, -0.7); 256];
        assert!(first_variation_area(&c, &shift).abs() < 1e-13);
    }

    #[test]
    fn variations_match_central_differences_on_random_open_curves() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.gen_range(5..40);
            let pts: Vec<Vec2> = (0..n)
                .map(|k| {
                    Vec2::new(
                        k as f64 + rng.gen_range(-0.3..0.3),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let c = DiscreteCurve::open(pts).unwrap();
            let phi: Vec<Vec2> = (0..n)
                .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let dl = first_variation_length(&c, &phi);
            let fd = central_difference(|e| perturbed(&c, &phi, e).length(), 1e-5);
            assert!((dl - fd).abs() < 1e-7 * (1.0 + dl.abs()));
            let da = first_variation_area(&c, &phi);
            let fd = central_difference(|e| perturbed(&c, &phi, e).sector_area(), 1e-3);
            assert!((da - fd).abs() < 1e-10 * (1.0 + da.abs()));
        }
    }

    #[test]
    fn problem_validation() {
        assert!(FreeBoundaryProblem::new(0.0, 1.0).is_err());
        assert!(FreeBoundaryProblem::new(7.0, 1.0).is_err());
        assert!(FreeBoundaryProblem::new(1.0, 0.0).is_err());
        assert!(FreeBoundaryProblem::new(TAU, 1.0).is_ok());
    }

    #[test]
    fn initial_arc_is_admissible() {
        for &theta in &[PI / 3.0, PI, TAU] {
            let p = FreeBoundaryProblem::new(theta, 1.0).unwrap();
            for j in 1..=3 {
                let c = p.initial_arc(64, j, 0.05);
                p.check_admissible(&c, 1e-12).unwrap();
                assert!((c.sector_area() - 1.0).abs() < 1e-12);
            }
            let c = p.initial_arc(64, 1, 0.0);
            assert!((c.length() - p.discrete_optimal_length(64)).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_sector_converges_to_arc() {
        let p = FreeBoundaryProblem::new(PI / 2.0, 1.0).unwrap();
        let opts = MinimizeOptions {
            vertices: 128,
            ..Default::default()
        };
        let init = p.initial_arc(128, 1, 0.1);
        let (c, rep) = minimize_open(&p, &init, &opts).unwrap();
        assert!((c.length() - p.discrete_optimal_length(128)).abs() < 1e-10);
        assert!(rep.stationarity_residual < 1e-8 * c.length());
        for w in rep.residual_history.windows(2) {
            assert!(w[1].is_finite());
        }
        let sector = verify_sector_inequality(&c, &p).unwrap();
        assert!(sector.kappa_spread < 1e-8);
        assert!(sector.glue_defect < 1e-8);
        assert!(sector.perp_defect.unwrap() < 1e-8);
        // inscribed radius: A = ½·M·r²·sin(θ/M)
        let r = (2.0 / (128.0 * (p.theta / 128.0).sin())).sqrt();
        for v in c.vertices() {
            assert!((v.norm() - r).abs() < 1e-6);
        }
    }

    #[test]
    fn scaling_equivariance() {
        let opts = MinimizeOptions {
            vertices: 96,
            windings: 1,
            ..Default::default()
        };
        let p1 = FreeBoundaryProblem::new(2.0, 1.0).unwrap();
        let p4 = FreeBoundaryProblem::new(2.0, 4.0).unwrap();
        let (c1, _, _) = solve(&p1, &opts).unwrap();
        let (c4, _, _) = solve(&p4, &opts).unwrap();
        assert!((c4.length() - 2.0 * c1.length()).abs() < 1e-9);
        for (a, b) in c1.vertices().iter().zip(c4.vertices()) {
            assert!((*a * 2.0 - *b).norm() < 1e-7);
        }
    }

    #[test]
    fn rejects_inadmissible_curves() {
        // half circle through the origin joining (1, 0) to (0, −2)
        let p = FreeBoundaryProblem::new(1.5 * PI, 1.0).unwrap();
        let center = Vec2::new(0.5, -1.0);
        let start = (Vec2::new(1.0, 0.0) - center).angle();
        let c = shapes::circular_arc(center.norm(), start, PI, 65).translated(center);
        assert!(c.vertices().iter().any(|v| v.norm() < 0.05));
        assert!(matches!(
            verify_sector_inequality(&c, &p),
            Err(MinimizeError::Inadmissible(_))
        ));
    }

    #[test]
    fn exact_arc_is_equality_case() {
        let p = FreeBoundaryProblem::new(PI, 1.0).unwrap();
        let r = (2.0 / PI).sqrt();
        let c = shapes::circular_arc(r, 0.0, PI, 2001);
        let rep = verify_sector_inequality(&c, &p).unwrap();
        assert!(rep.kappa_spread < 1e-8);
        assert!(rep.glue_defect < 1e-8);
        assert!(rep.perp_defect.unwrap() < 1e-8);
        assert!(rep.margin >= 0.0 && rep.margin < 1e-5);
    }

    #[test]
    fn random_admissible_curves_have_positive_margin() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let theta = rng.gen_range(0.2..TAU);
            let p = FreeBoundaryProblem::new(theta, 1.0).unwrap();
            let n = rng.gen_range(8..60);
            let amps: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let pts: Vec<Vec2> = (0..=n)
                .map(|k| {
                    let s = k as f64 / n as f64;
                    let bump: f64 = amps
                        .iter()
                        .enumerate()
                        .map(|(q, a)| a * ((q + 1) as f64 * PI * s).sin())
                        .sum();
                    Vec2::from_angle(theta * s) * (1.0 + bump)
                })
                .collect();
            let mut pts = pts;
            pts[n] = p.v_theta();
            let c = DiscreteCurve::open(pts).unwrap();
            if c.sector_area() <= 0.0 {
                continue;
            }
            let rep = verify_sector_inequality(&c, &p).unwrap();
            assert!(rep.margin > 0.0);
        }
    }

    #[test]
    fn symmetric_iso_reports() {
        let c = covered_circle(2, 1.0, 1024).unwrap();
        let rep = verify_symmetric_isoperimetric(&c, SymmetrySpec::new(2, 4).unwrap()).unwrap();
        assert!(rep.iso_margin.abs() < 1e-4);
        assert!(rep.equality);
        // polygon defect of order (θ/2M)²
        assert!(rep.period_margin >= 0.0 && rep.period_margin < 1e-3);

        let star = shapes::perturbed_covered_circle(3, 3, 0.05, 1.0, 900);
        let rep = verify_symmetric_isoperimetric(&star, SymmetrySpec::new(3, 3).unwrap()).unwrap();
        assert!(rep.iso_margin > 0.0);
        assert!(!rep.equality);

        let spec = SymmetrySpec::new(4, 2).unwrap();
        let mut prev = f64::INFINITY;
        for &r in &[0.1, 0.01] {
            let c = vanishing_loop_curve(4, 2, r).unwrap();
            let rep = verify_symmetric_isoperimetric(&c, spec).unwrap();
            assert!(rep.iso_margin > 0.0 && rep.iso_margin < prev);
            assert!(!rep.equality);
            prev = rep.iso_margin;
        }

        assert!(matches!(
            verify_symmetric_isoperimetric(&star, SymmetrySpec::new(3, 2).unwrap()),
            Err(MinimizeError::Symmetry(_)) | Err(MinimizeError::Inadmissible(_))
        ));
    }
}
