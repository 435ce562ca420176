//! Generators for the test curves used throughout the crate.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::curve::DiscreteCurve;
use crate::geometry::Vec2;

/// Counterclockwise regular polygon inscribed in the circle of radius `radius`.
pub fn regular_polygon(vertices: usize, radius: f64) -> DiscreteCurve {
    covered_circle_unchecked(1, radius, vertices)
}

/// `vertices` equally spaced points tracing the circle of radius `radius`
/// `turns` times counterclockwise. No coarseness check.
pub fn covered_circle_unchecked(turns: u32, radius: f64, vertices: usize) -> DiscreteCurve {
    let step = TAU * turns as f64 / vertices as f64;
    let pts = (0..vertices)
        .map(|k| Vec2::from_angle(step * k as f64) * radius)
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// Ellipse with semi-axes `a` (x) and `b` (y), sampled uniformly in the
/// angular parameter.
pub fn ellipse(a: f64, b: f64, vertices: usize) -> DiscreteCurve {
    let pts = (0..vertices)
        .map(|k| {
            let t = TAU * k as f64 / vertices as f64;
            Vec2::new(a * t.cos(), b * t.sin())
        })
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// Open circular arc of `vertices` points, counterclockwise from `start`
/// through `sweep` radians, centered at the origin.
pub fn circular_arc(radius: f64, start: f64, sweep: f64, vertices: usize) -> DiscreteCurve {
    let pts = (0..vertices)
        .map(|k| Vec2::from_angle(start + sweep * k as f64 / (vertices - 1) as f64) * radius)
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, false)
}

/// Lemniscate of Gerono scaled so each lobe encloses `lobe_area`. The right
/// lobe runs counterclockwise and the left one clockwise.
pub fn figure_eight(vertices: usize, lobe_area: f64) -> DiscreteCurve {
    // each lobe of (cos t, sin t cos t) has area 2/3
    let scale = (1.5 * lobe_area).sqrt();
    let pts = (0..vertices)
        .map(|k| {
            let t = TAU * k as f64 / vertices as f64;
            Vec2::new(t.cos(), t.sin() * t.cos()) * scale
        })
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// Limaçon `r = b + a cos t` sampled uniformly in `t`. For `a > b > 0` it has
/// a small inner loop and rotation number 2.
pub fn limacon(a: f64, b: f64, vertices: usize) -> DiscreteCurve {
    let pts = (0..vertices)
        .map(|k| {
            let t = TAU * k as f64 / vertices as f64;
            Vec2::from_angle(t) * (b + a * t.cos())
        })
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// `turns`-times covered circle of radius `radius` with the radial
/// perturbation `1 + amplitude·cos(2π·symmetry·x)` in the curve parameter
/// `x = k/vertices`. The result is `(symmetry, i)`-th rotationally symmetric
/// whenever `vertices` is a multiple of `symmetry`.
pub fn perturbed_covered_circle(
    turns: u32,
    symmetry: u32,
    amplitude: f64,
    radius: f64,
    vertices: usize,
) -> DiscreteCurve {
    let pts = (0..vertices)
        .map(|k| {
            let x = k as f64 / vertices as f64;
            let r = radius * (1.0 + amplitude * (TAU * symmetry as f64 * x).cos());
            Vec2::from_angle(TAU * turns as f64 * x) * r
        })
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// Unit circle plus random Fourier modes of order `2..=modes` in both
/// coordinates, amplitudes decaying like `k⁻²`.
pub fn random_smooth_closed<R: Rng>(rng: &mut R, vertices: usize, modes: usize) -> DiscreteCurve {
    let coeffs: Vec<[f64; 4]> = (2..=modes.max(2))
        .map(|k| {
            let amp = 0.6 / (k * k) as f64;
            [
                rng.gen_range(-amp..amp),
                rng.gen_range(-amp..amp),
                rng.gen_range(-amp..amp),
                rng.gen_range(-amp..amp),
            ]
        })
        .collect();
    let pts = (0..vertices)
        .map(|j| {
            let t = TAU * j as f64 / vertices as f64;
            let mut p = Vec2::from_angle(t);
            for (idx, c) in coeffs.iter().enumerate() {
                let k = (idx + 2) as f64;
                let (s, co) = (k * t).sin_cos();
                p += Vec2::new(c[0] * co + c[1] * s, c[2] * co + c[3] * s);
            }
            p
        })
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// Star-shaped polygon with random radii in `[0.5, 1.5)` at jittered angles.
pub fn random_polygon<R: Rng>(rng: &mut R, vertices: usize) -> DiscreteCurve {
    let pts = (0..vertices)
        .map(|k| {
            let t = (k as f64 + rng.gen_range(0.0..0.8)) * TAU / vertices as f64;
            Vec2::from_angle(t) * rng.gen_range(0.5..1.5)
        })
        .collect();
    DiscreteCurve::from_parts_unchecked(pts, true)
}

/// Circle of area `area` traversed `turns` times.
pub fn radius_for_area(area: f64, turns: u32) -> f64 {
    (area / (PI * turns as f64)).sqrt()
}
