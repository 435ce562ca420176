use std::f64::consts::TAU;

use curveflow::flow::{
    self, DtPolicy, FlowConfig, FlowState, Integrator, Redistribution, StopCriteria,
    SymmetryOptions, Verdict,
};
use curveflow::shapes;
use curveflow::symmetry;
use curveflow::{DiscreteCurve, Vec2};

fn fixed(dt: f64, integrator: Integrator) -> FlowConfig {
    FlowConfig {
        dt: DtPolicy::Fixed { dt },
        integrator,
        redistribution: Redistribution::None,
        ..FlowConfig::default()
    }
}

fn advance(curve: &DiscreteCurve, cfg: &FlowConfig, steps: usize) -> FlowState {
    let mut s = FlowState::new(curve.clone()).unwrap();
    for _ in 0..steps {
        s = flow::step(&s, cfg).unwrap();
    }
    s
}

fn max_dist(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (*p - *q).norm())
        .fold(0.0, f64::max)
}

/// Explicit Euler on `γ_t = −κ_ss·n_in` with Menger curvature and a
/// non-uniform second difference.
fn explicit_oracle(curve: &DiscreteCurve, dt: f64, steps: usize) -> Vec<Vec2> {
    let mut p = curve.vertices().to_vec();
    let m = p.len();
    for _ in 0..steps {
        let h: Vec<f64> = (0..m).map(|k| (p[(k + 1) % m] - p[k]).norm()).collect();
        let kappa: Vec<f64> = (0..m)
            .map(|k| {
                let (a, b, c) = (p[(k + m - 1) % m], p[k], p[(k + 1) % m]);
                let cross = (b - a).cross(c - b);
                2.0 * cross / ((b - a).norm() * (c - b).norm() * (c - a).norm())
            })
            .collect();
        let next: Vec<Vec2> = (0..m)
            .map(|k| {
                let (hl, hr) = (h[(k + m - 1) % m], h[k]);
                let kss = 2.0 / (hl + hr)
                    * ((kappa[(k + 1) % m] - kappa[k]) / hr
                        - (kappa[k] - kappa[(k + m - 1) % m]) / hl);
                let d = p[(k + 1) % m] - p[(k + m - 1) % m];
                let inward = Vec2::new(-d.y, d.x) / d.norm();
                p[k] - inward * (kss * dt)
            })
            .collect();
        p = next;
    }
    p
}

#[test]
fn implicit_euler_tracks_explicit_oracle_and_kosc_decreases() {
    let curve = shapes::ellipse(1.2, 1.0, 64);
    let dt = 8e-5;
    let cfg = fixed(dt, Integrator::Euler);
    let mut s = FlowState::new(curve.clone()).unwrap();
    let mut prev = s.metrics.k_osc;
    for _ in 0..100 {
        s = flow::step(&s, &cfg).unwrap();
        assert!(s.metrics.k_osc < prev);
        prev = s.metrics.k_osc;
    }
    let oracle = DiscreteCurve::closed(explicit_oracle(&curve, dt / 16.0, 1600)).unwrap();
    let k_oracle = oracle.k_osc().unwrap();
    let k0 = curve.k_osc().unwrap();
    assert!(k_oracle < k0);
    let d = max_dist(&s.curve, &oracle);
    // both are first order in time and second order in space at h ≈ 0.11
    assert!(d < 2e-3, "distance to oracle {d:e}");
    assert!(
        (s.metrics.k_osc - k_oracle).abs() < 0.05 * (k0 - k_oracle),
        "{} vs {k_oracle}",
        s.metrics.k_osc
    );
}

fn terminal_discrepancies(integrator: Integrator) -> Vec<f64> {
    let curve = shapes::perturbed_covered_circle(2, 4, 0.03, 1.0, 256);
    let t = 0.05;
    let runs: Vec<DiscreteCurve> = [4e-4, 2e-4, 1e-4, 5e-5]
        .iter()
        .map(|&dt| advance(&curve, &fixed(dt, integrator), (t / dt).round() as usize).curve)
        .collect();
    runs.windows(2).map(|w| max_dist(&w[0], &w[1])).collect()
}

#[test]
fn halving_dt_converges_at_first_and_second_order() {
    let euler = terminal_discrepancies(Integrator::Euler);
    let extra = terminal_discrepancies(Integrator::Extrapolated);
    for w in euler.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 0.95, "Euler orders {euler:?}");
    }
    for w in extra.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.9, "extrapolated orders {extra:?}");
    }
}

#[test]
fn parabolic_scaling_is_exact_for_lambda_two() {
    let curve = shapes::perturbed_covered_circle(1, 3, 0.1, 1.0, 96);
    let dt = 1e-4;
    let a = advance(&curve, &fixed(dt, Integrator::Extrapolated), 50).curve;
    let b = advance(
        &curve.scaled(2.0),
        &fixed(16.0 * dt, Integrator::Extrapolated),
        50,
    )
    .curve;
    let d = max_dist(&a.scaled(2.0), &b);
    assert!(d < 1e-12, "{d:e}");
}

#[test]
fn symmetry_survives_without_projection() {
    let (n, m) = (2u32, 4u32);
    let i = symmetry::index_i(n as i64, m as i64).unwrap();
    let curve = shapes::perturbed_covered_circle(n, m, 0.03, 1.0, 512);
    let cfg = FlowConfig {
        symmetry: Some(SymmetryOptions {
            m,
            i,
            project_every: None,
        }),
        sample_stride: 10,
        stop: StopCriteria {
            t_end: 0.5,
            ..StopCriteria::default()
        },
        ..FlowConfig::default()
    };
    let r = flow::run(&curve, &cfg).unwrap();
    let defect = r.max_sym_defect.unwrap();
    assert!(defect <= 1e-4, "{defect:e}");
    let end = symmetry::symmetry_defect(r.final_curve.as_ref().unwrap(), m, i).unwrap();
    assert!(end <= 1e-4);
}

#[test]
fn covered_circles_stay_put_for_ten_thousand_steps() {
    for n in [1u32, 2, 3] {
        let c = symmetry::covered_circle(n, 1.0, 128 * n as usize).unwrap();
        let s = advance(&c, &fixed(1e-3, Integrator::Euler), 10_000);
        let r: Vec<f64> = s.curve.vertices().iter().map(|v| v.norm()).collect();
        let spread =
            r.iter().cloned().fold(0.0, f64::max) - r.iter().cloned().fold(f64::INFINITY, f64::min);
        let moved = max_dist(&c, &s.curve);
        assert!(
            spread < 1e-11 && moved < 1e-10,
            "n={n}: spread {spread:e}, moved {moved:e}"
        );
        assert_eq!(s.metrics.rotation_number, n as i64);
    }
}

#[test]
fn nonconvex_flower_becomes_convex_within_the_bound() {
    let (n, m) = (2u32, 8u32);
    let curve = shapes::perturbed_covered_circle(n, m, 0.1, 1.0, 512);
    assert!(curve.metrics().unwrap().min_kappa < 0.0);
    let cfg = FlowConfig {
        sample_stride: 1,
        stop: StopCriteria {
            t_end: 1.0,
            ..StopCriteria::default()
        },
        ..FlowConfig::default()
    };
    let r = flow::run(&curve, &cfg).unwrap();
    let spec = symmetry::SymmetrySpec::new(n as i64, m).unwrap();
    let (t_w, bound) = flow::waiting_time(&r, Some(spec));
    assert!(t_w > 0.0 && t_w <= bound, "T_W {t_w} bound {bound}");
    assert!(r.series.last().unwrap().min_kappa > 0.0);
    assert!(r.area_drift < 1e-4, "{}", r.area_drift);

    // on a covered circle the bound vanishes up to the O(M⁻²) polygon error
    let mut bounds = Vec::new();
    for vertices in [512, 1024] {
        let circle = symmetry::covered_circle(n, 1.0, vertices).unwrap();
        let short = FlowConfig {
            vertices,
            stop: StopCriteria {
                t_end: 0.1,
                ..StopCriteria::default()
            },
            ..cfg
        };
        let r = flow::run(&circle, &short).unwrap();
        let (t_w, bound) = flow::waiting_time(&r, Some(spec));
        assert_eq!(t_w, 0.0);
        let scale = r.initial.length.powi(4) / (TAU * TAU * 4.0 * (n * n) as f64);
        assert!(bound >= 0.0 && bound < 1e-3 * scale, "{bound:e}");
        bounds.push(bound);
    }
    let ratio = bounds[0] / bounds[1];
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn loop_pinch_is_singular() {
    let c = shapes::limacon(1.0, 0.75, 256);
    let cfg = FlowConfig {
        vertices: 256,
        redistribution: Redistribution::Curvature {
            beta: 0.9,
            sweeps: 2,
        },
        dt: DtPolicy::Adaptive {
            dt_max: 1e-2,
            safety_h4: 1e6,
            safety_curvature: 0.02,
        },
        stop: StopCriteria {
            t_end: 1.0,
            bending_energy_threshold: 20.0,
            min_edge_fraction: 1e-7,
            ..StopCriteria::default()
        },
        sample_stride: 50,
        ..FlowConfig::default()
    };
    let r = flow::run(&c, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Singular);
    assert!(r.final_metrics.bending_energy > 20.0 * r.initial.bending_energy);
    assert!(r.t_final < 2.5e-4 && r.t_final > 2.0e-4, "{}", r.t_final);
    assert!(r.area_drift < 1e-5);
}

#[test]
fn rotating_the_input_rotates_the_output() {
    let c = shapes::ellipse(1.5, 1.0, 100);
    let angle = 0.3 * TAU;
    let cfg = fixed(1e-4, Integrator::Extrapolated);
    let a = advance(&c, &cfg, 20).curve.rotated(angle);
    let b = advance(&c.rotated(angle), &cfg, 20).curve;
    assert!(max_dist(&a, &b) < 1e-12);
}
