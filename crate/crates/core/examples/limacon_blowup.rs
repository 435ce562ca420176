//! The inner loop of a limaçon shrinks to a point in finite time while the
//! bending energy blows up.

use curveflow::experiments::{self, Outcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = experiments::load_config(None, &["preset=limacon".into()])?;
    let Outcome::Flow(f) = experiments::compute(&cfg)? else {
        unreachable!()
    };
    let r = &f.report;
    for s in r.series.iter().step_by(20) {
        println!(
            "t={:.9e} bending={:.4e} max|κ|={:.3e}",
            s.t, s.bending, s.max_kappa
        );
    }
    println!(
        "{:?} ({:?}) at t={:.9e}, extrapolated singular time {:?}, area drift {:.2e}",
        r.verdict, r.singular_cause, r.t_final, r.t_m_estimate, r.area_drift
    );
    Ok(())
}
