//! A perturbed doubly covered circle under curve diffusion flow converges to
//! a doubly covered round circle of the same area.

use curveflow::experiments::{self, Outcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = experiments::load_config(None, &["preset=stable-nm".into()])?;
    let Outcome::Flow(f) = experiments::compute(&cfg)? else {
        unreachable!()
    };
    let r = &f.report;
    for s in r.series.iter().step_by(10) {
        println!(
            "t={:<10.5} L={:.8} A={:.8} K_osc={:.3e}",
            s.t, s.length, s.area, s.kosc
        );
    }
    println!(
        "{:?} at t={:.4} after {} steps; radius {:.7} (expected {:.7}); area drift {:.2e}",
        r.verdict,
        r.t_final,
        r.steps,
        r.limit_radius,
        r.expected_radius.unwrap_or(f64::NAN),
        r.area_drift
    );
    println!(
        "max symmetry defect {:.2e}",
        r.max_sym_defect.unwrap_or(0.0)
    );
    Ok(())
}
