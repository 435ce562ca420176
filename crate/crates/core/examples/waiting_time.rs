//! A non-convex symmetric flower on the doubly covered circle becomes
//! locally convex before a computable time.

use curveflow::experiments::{self, Outcome};
use curveflow::flow;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = experiments::load_config(None, &["preset=waiting-time".into()])?;
    let Outcome::Flow(f) = experiments::compute(&cfg)? else {
        unreachable!()
    };
    let r = &f.report;
    let (t_w, bound) = flow::waiting_time(r, None);
    println!("initial min κ = {:.4}", r.initial.min_kappa);
    println!("locally convex from t = {t_w:.5}, bound {bound:.4}");
    println!(
        "{:?} at t={:.4}, area drift {:.2e}",
        r.verdict, r.t_final, r.area_drift
    );
    Ok(())
}
