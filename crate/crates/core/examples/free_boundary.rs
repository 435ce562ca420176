//! Minimizes length among arcs enclosing unit area in a sector of angle
//! `θ` with ends on the two boundary rays, and compares with `sqrt(2θA)`.

use curveflow::minimize::{solve, FreeBoundaryProblem, MinimizeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = MinimizeOptions {
        vertices: 256,
        ..MinimizeOptions::default()
    };
    println!(
        "{:>8} {:>12} {:>12} {:>10} {:>8}",
        "theta", "L", "sqrt(2θA)", "margin", "winding"
    );
    for theta in [0.5, 1.0, 2.0, 3.0, 4.5, 6.0] {
        let problem = FreeBoundaryProblem::new(theta, 1.0)?;
        let (_, _, report) = solve(&problem, &opts)?;
        println!(
            "{theta:>8} {:>12.8} {:>12.8} {:>10.2e} {:>8}",
            report.length, report.optimal_length, report.margin, report.best_winding
        );
    }
    Ok(())
}
