//! Length, area, rotation number, isoperimetric ratio and `K_osc` of a few
//! standard curves.

use curveflow::shapes;
use curveflow::{DiscreteCurve, IsoRatio};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curves: Vec<(&str, DiscreteCurve)> = vec![
        ("circle", shapes::regular_polygon(512, 1.0)),
        ("ellipse 2x1", shapes::ellipse(2.0, 1.0, 512)),
        (
            "3-covered circle",
            shapes::covered_circle_unchecked(3, 1.0, 1536),
        ),
        ("limacon a=1 b=0.75", shapes::limacon(1.0, 0.75, 512)),
        ("figure eight", shapes::figure_eight(512, 1.0)),
    ];
    println!(
        "{:<20} {:>10} {:>10} {:>3} {:>10} {:>10}",
        "curve", "L", "A", "N", "I", "K_osc"
    );
    for (name, c) in curves {
        let m = c.metrics()?;
        let iso = match m.iso_ratio {
            IsoRatio::Infinite => "inf".to_string(),
            r => format!("{:.6}", r.as_f64()),
        };
        println!(
            "{name:<20} {:>10.6} {:>10.6} {:>3} {iso:>10} {:>10.3e}",
            m.length, m.signed_area, m.rotation_number, m.k_osc
        );
    }
    Ok(())
}
