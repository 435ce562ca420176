//! Winding numbers on a sample lattice and the squared-winding area `∫w²`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveError, DiscreteCurve, Result};
use crate::geometry::{turning_angle, Vec2};

/// Integer winding numbers sampled on a square lattice.
///
/// Samples closer than half a cell to the polygon are indeterminate and carry
/// no value; they are excluded from `bp_area`. `error_estimate` bounds the
/// squared-winding mass those samples could have carried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingField {
    /// Center of sample `(0, 0)`.
    pub origin: Vec2,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `values[j * nx + i]`; `None` marks indeterminate samples.
    pub values: Vec<Option<i32>>,
    /// `Σ w²·h²` over determinate samples.
    pub bp_area: f64,
    pub indeterminate: usize,
    pub error_estimate: f64,
}

impl WindingField {
    pub fn sample_point(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.spacing, j as f64 * self.spacing)
    }

    pub fn value(&self, i: usize, j: usize) -> Option<i32> {
        self.values[j * self.nx + i]
    }

    pub fn max_abs_winding(&self) -> i32 {
        self.values
            .iter()
            .flatten()
            .map(|w| w.abs())
            .max()
            .unwrap_or(0)
    }
}

/// Winding number of a closed polygon around `p` by summed subtended angles.
pub fn winding_number(curve: &DiscreteCurve, p: Vec2) -> i32 {
    let v = curve.vertices();
    let n = v.len();
    let total: f64 = (0..n)
        .map(|k| turning_angle(v[k] - p, v[(k + 1) % n] - p))
        .sum();
    (total / TAU).round() as i32
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn distance_to_polygon(curve: &DiscreteCurve, p: Vec2) -> f64 {
    let v = curve.vertices();
    let n = v.len();
    (0..n)
        .map(|k| segment_distance(p, v[k], v[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn winding_field(curve: &DiscreteCurve, spacing: f64) -> Result<WindingField> {
    if !curve.is_closed() {
        return Err(CurveError::NotClosed);
    }
    if !(spacing > 0.0) {
        return Err(CurveError::InvalidArgument(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    let (lo, hi) = curve.bounding_box();
    let origin = lo - Vec2::new(spacing, spacing);
    let nx = ((hi.x - lo.x) / spacing).ceil() as usize + 3;
    let ny = ((hi.y - lo.y) / spacing).ceil() as usize + 3;
    let band = 0.5 * spacing;

    let values: Vec<Option<i32>> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..nx).map(move |i| {
                let p = origin + Vec2::new(i as f64 * spacing, j as f64 * spacing);
                if p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y {
                    return Some(0);
                }
                if distance_to_polygon(curve, p) < band {
                    None
                } else {
                    Some(winding_number(curve, p))
                }
            })
        })
        .collect();

    let cell = spacing * spacing;
    let bp_area = values
        .iter()
        .flatten()
        .map(|&w| (w as f64) * (w as f64) * cell)
        .sum();
    let indeterminate = values.iter().filter(|v| v.is_none()).count();
    let w_max = values
        .iter()
        .flatten()
        .map(|w| w.abs())
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    Ok(WindingField {
        origin,
        spacing,
        nx,
        ny,
        values,
        bp_area,
        indeterminate,
        error_estimate: indeterminate as f64 * cell * w_max * w_max,
    })
}

/// `∫w²` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpEstimate {
    pub area: f64,
    /// `|Q_h − Q_{2h}|` between the row quadratures at spacing `h` and `2h`.
    pub error: f64,
}

/// `∫w²` along one horizontal line, exact for the polygon: `w` is constant
/// between crossings.
fn row_integral(v: &[Vec2], y: f64, crossings: &mut Vec<(f64, i32)>) -> f64 {
    let n = v.len();
    crossings.clear();
    for k in 0..n {
        let (a, b) = (v[k], v[(k + 1) % n]);
        // half-open in y so a vertex on the line is counted once
        let dir = if a.y <= y && b.y > y {
            1
        } else if b.y <= y && a.y > y {
            -1
        } else {
            continue;
        };
        let x = a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
        crossings.push((x, dir));
    }
    crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
    // far left every crossing lies to the right and w = Σ dir = 0; passing an
    // upward crossing lowers w by one
    let mut w = 0i32;
    let mut total = 0.0;
    for pair in crossings.windows(2) {
        w -= pair[0].1;
        total += (w * w) as f64 * (pair[1].0 - pair[0].0);
    }
    total
}

fn row_quadrature(curve: &DiscreteCurve, rows: usize) -> f64 {
    let (lo, hi) = curve.bounding_box();
    let h = (hi.y - lo.y) / rows as f64;
    let v = curve.vertices();
    (0..rows)
        .into_par_iter()
        .map_init(Vec::new, |buf, j| {
            row_integral(v, lo.y + (j as f64 + 0.5) * h, buf)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        * h
}

/// `∫w²` by the midpoint rule over horizontal lines at most `spacing` apart,
/// each integrated exactly.
pub fn banchoff_pohl_area(curve: &DiscreteCurve, spacing: f64) -> Result<BpEstimate> {
    if !curve.is_closed() {
        return Err(CurveError::NotClosed);
    }
    if !(spacing > 0.0) {
        return Err(CurveError::InvalidArgument(format!(
            "line spacing must be positive, got {spacing}"
        )));
    }
    let (lo, hi) = curve.bounding_box();
    let height = hi.y - lo.y;
    if !(height > 0.0) {
        return Ok(BpEstimate {
            area: 0.0,
            error: 0.0,
        });
    }
    let half = ((height / spacing / 2.0).ceil() as usize).max(1);
    let fine = row_quadrature(curve, 2 * half);
    let coarse = row_quadrature(curve, half);
    Ok(BpEstimate {
        area: fine,
        error: (fine - coarse).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use std::f64::consts::PI;

    #[test]
    fn unit_disk() {
        let c = shapes::regular_polygon(512, 1.0);
        let f = winding_field(&c, 0.01).unwrap();
        assert!((f.bp_area - PI).abs() < 0.02 * PI, "{}", f.bp_area);
        assert!(f.values.iter().flatten().all(|&w| w == 0 || w == 1));
    }

    #[test]
    fn doubly_covered_disk() {
        let c = shapes::covered_circle_unchecked(2, 1.0, 1024);
        let f = winding_field(&c, 0.01).unwrap();
        assert!(
            (f.bp_area - 4.0 * PI).abs() < 0.02 * 4.0 * PI,
            "{}",
            f.bp_area
        );
        assert_eq!(f.max_abs_winding(), 2);
    }

    #[test]
    fn zero_outside_bounding_box() {
        let c = shapes::ellipse(2.0, 0.7, 200).translated(Vec2::new(3.0, -1.0));
        let f = winding_field(&c, 0.05).unwrap();
        let (lo, hi) = c.bounding_box();
        for j in 0..f.ny {
            for i in 0..f.nx {
                let p = f.sample_point(i, j);
                if p.x < lo.x - f.spacing
                    || p.x > hi.x + f.spacing
                    || p.y < lo.y - f.spacing
                    || p.y > hi.y + f.spacing
                {
                    assert_eq!(f.value(i, j), Some(0));
                }
            }
        }
        // border samples lie outside the inflated box edge
        assert_eq!(f.value(0, 0), Some(0));
    }

    #[test]
    fn clockwise_loop_has_negative_winding() {
        let c = shapes::regular_polygon(64, 1.0).reversed();
        assert_eq!(winding_number(&c, Vec2::ZERO), -1);
        assert_eq!(winding_number(&c, Vec2::new(3.0, 0.0)), 0);
    }

    #[test]
    fn figure_eight_lobes() {
        // brute-force oracle: each lobe has |w| = 1 on its interior, so ∫w² is
        // the total unsigned lobe area, 2·1
        let c = shapes::figure_eight(1024, 1.0);
        let f = winding_field(&c, 0.005).unwrap();
        assert!((f.bp_area - 2.0).abs() < 0.02 * 2.0, "{}", f.bp_area);
        let right = winding_number(&c, Vec2::new(0.6, 0.0));
        let left = winding_number(&c, Vec2::new(-0.6, 0.0));
        assert_eq!((right, left), (1, -1));
    }

    #[test]
    fn scanline_area_matches_shoelace() {
        let c = shapes::ellipse(1.5, 0.6, 300).rotated(0.3);
        let e = banchoff_pohl_area(&c, 1e-3).unwrap();
        let a = c.signed_area().unwrap();
        assert!((e.area - a).abs() < 1e-4, "{} {}", e.area, a);
        assert!((e.area - a).abs() <= e.error, "{} {}", e.area - a, e.error);
        let d = shapes::covered_circle_unchecked(2, 1.0, 512);
        let e = banchoff_pohl_area(&d, 1e-3).unwrap();
        assert!((e.area - 2.0 * d.signed_area().unwrap()).abs() <= e.error);
        // orientation only flips the sign of w
        let r = c.reversed();
        let er = banchoff_pohl_area(&r, 1e-3).unwrap();
        assert!((er.area - banchoff_pohl_area(&c, 1e-3).unwrap().area).abs() < 1e-12);
    }

    #[test]
    fn scanline_figure_eight_is_total_lobe_area() {
        // the vertex at parameter π/2 is the crossing; one lobe is the arc
        // from −π/2 to π/2
        let m = 1024;
        let c = shapes::figure_eight(m, 1.0);
        let v = c.vertices();
        let lobe: Vec<Vec2> = (0..=m / 2).map(|k| v[(k + 3 * m / 4) % m]).collect();
        let lobe_area: f64 = (0..lobe.len())
            .map(|k| lobe[k].cross(lobe[(k + 1) % lobe.len()]))
            .sum::<f64>()
            .abs()
            / 2.0;
        let e = banchoff_pohl_area(&c, 1e-3).unwrap();
        assert!(
            (e.area - 2.0 * lobe_area).abs() < 1e-4,
            "{} {}",
            e.area,
            lobe_area
        );
        assert!((e.area - 2.0 * lobe_area).abs() <= e.error);
        let f = winding_field(&c, 0.005).unwrap();
        assert!((f.bp_area - e.area).abs() < f.error_estimate);
    }

    #[test]
    fn rejects_bad_spacing() {
        let c = shapes::regular_polygon(8, 1.0);
        assert!(winding_field(&c, 0.0).is_err());
        assert!(winding_field(&c, f64::NAN).is_err());
        assert!(banchoff_pohl_area(&c, -1.0).is_err());
    }
}
