//! Builds `(m, i)`-symmetric curves from a fundamental arc and checks that
//! the symmetry is detected with the right index.

use std::f64::consts::TAU;

use curveflow::symmetry::{self, check_symmetry, index_i};
use curveflow::{DiscreteCurve, Vec2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("i_(n,m) table, n = -3..=6 across, m = 1..=5 down");
    for m in 1..=5i64 {
        let row: Vec<String> = (-3..=6i64)
            .map(|n| {
                index_i(n, m)
                    .map(|i| i.to_string())
                    .unwrap_or_else(|_| "-".into())
            })
            .collect();
        println!("m={m}: {}", row.join(" "));
    }

    let (m, i) = (5u32, 2u32);
    let per = 40;
    let fundamental: Vec<Vec2> = (0..=per)
        .map(|k| {
            let t = k as f64 / per as f64;
            let phi = TAU * i as f64 / m as f64 * t;
            Vec2::from_angle(phi) * (1.0 + 0.2 * (TAU * t).sin())
        })
        .collect();
    let curve = symmetry::make_symmetric(&DiscreteCurve::open(fundamental)?, m, i)?;
    let check = check_symmetry(&curve, m, 1e-10)?;
    println!(
        "built (m, i) = ({m}, {i}): detected index {:?}, defect {:.2e}, rotation number {}",
        check.index,
        check.defect,
        curve.rotation_number()?.value
    );
    Ok(())
}
