//! A figure-eight has zero signed area. The integral of the squared winding
//! number still decreases along the flow.

use curveflow::experiments::{self, Outcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = experiments::load_config(None, &["preset=figure-eight".into()])?;
    let Outcome::Flow(f) = experiments::compute(&cfg)? else {
        unreachable!()
    };
    for s in f.report.series.iter().filter(|s| s.bp_area.is_some()) {
        println!(
            "t={:.3} A={:+.2e} ∫w²={:.6} ± {:.1e}",
            s.t,
            s.area,
            s.bp_area.unwrap_or(f64::NAN),
            s.bp_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
