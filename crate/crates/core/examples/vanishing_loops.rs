//! Outside `1 <= n <= m` the symmetric isoperimetric bound is approached but
//! not attained: curves with shrinking loops have `I` tending to `i_{n,m}`.

use curveflow::minimize::verify_symmetric_isoperimetric;
use curveflow::symmetry::{vanishing_loop_curve, SymmetrySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (n, m) in [(5i64, 2u32), (7, 3), (-1, 3)] {
        let spec = SymmetrySpec::new(n, m)?;
        println!("n={n} m={m} i={}", spec.i);
        for r in [0.2, 0.1, 0.05, 0.025] {
            let c = vanishing_loop_curve(n, m, r)?;
            let rep = verify_symmetric_isoperimetric(&c, spec)?;
            println!(
                "  loop radius {r:<6} I = {:.6}  I - i = {:.3e}",
                rep.iso_ratio.as_f64(),
                rep.iso_margin
            );
        }
    }
    Ok(())
}
