//! Acceptance suite. Every test prints one `PASS`/`FAIL` line for its
//! criterion and then asserts it. Tolerances are pinned here.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvkit::analysis::{
    develop, envelope_chart_of_parallel, euclidean_total_curvature, gauss_bonnet_check, total_intrinsic_curvature,
};
use curvkit::bv::{decompose, energy_functional, tantrix_series};
use curvkit::curve::generators::{
    cantor_graph, chart_smooth, flat_square, geodesic_polygon, octant_triangle, parallel, wavy_sphere_curve,
};
use curvkit::curve::{darboux_frame, SampledCurve};
use curvkit::numeric::{dot, norm};
use curvkit::polygonal::{geodesic_polygonal_tc, inscribe, rotation_of, RefinementStrategy};
use curvkit::surface::{max_speed_defect, ChartPoint, SurfaceChart};
use curvkit::transport::{
    geodesic_curvature, transport_curve, transport_identity_check, CurvatureBackend, TransportBackend,
};

const PARALLELS: [(&str, f64); 3] = [("pi/6", FRAC_PI_6), ("pi/4", FRAC_PI_4), ("pi/3", FRAC_PI_3)];

const TC_TOL: f64 = 1e-3;
const TC_WALL: Duration = Duration::from_secs(10);
const GAP_SMOOTH: f64 = 1e-3;
const GAP_POLYGON: f64 = 1e-6;
const GAP_CANTOR: f64 = 2e-2;
const THETA_TOL: f64 = 1e-6;
const DRIFT_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-7;
const CANTOR_TOL: f64 = 1e-2;
const GB_CURVED: f64 = 1e-4;
const GB_FLAT: f64 = 1e-6;
const DEV_POINT: f64 = 1e-6;
const DEV_TC: f64 = 1e-4;
const CROSS_CHART_GAP: f64 = 1e-3;
const LIMIT_AGREEMENT: f64 = 2e-3;
const POLY_IDENTITY: f64 = 1e-4;
const PROPERTY_WALL: Duration = Duration::from_secs(60);

fn verdict(criterion: &str, ok: bool, detail: String) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

fn uniform(curve: &SampledCurve, n: usize) -> Vec<f64> {
    (0..n).map(|i| curve.length * i as f64 / n as f64).collect()
}

#[test]
fn parallel_family_tc() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, t0) in PARALLELS {
        let start = Instant::now();
        let r = parallel(t0, 4096).and_then(|c| total_intrinsic_curvature(&c, &RefinementStrategy::default()));
        let wall = start.elapsed();
        match r {
            Ok(r) => {
                let err = (r.estimate - TAU * t0.cos()).abs();
                ok &= err <= TC_TOL && wall < TC_WALL && r.refinement.rows.len() == 6;
                detail.push(format!("{label} err={err:.2e} rows={} wall={:.2}s", r.refinement.rows.len(), wall.as_secs_f64()));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{label} error {e}"));
            }
        }
    }
    verdict(
        &format!("parallel family TC (tol {TC_TOL:e}, wall < {}s)", TC_WALL.as_secs()),
        ok,
        detail.join("; "),
    );
}

#[test]
fn representation_theorem() {
    let mut worst_smooth: f64 = 0.0;
    for (_, t0) in PARALLELS {
        let r = total_intrinsic_curvature(&parallel(t0, 4096).unwrap(), &RefinementStrategy::default()).unwrap();
        worst_smooth = worst_smooth.max(r.equality_gap);
    }
    let sphere = SurfaceChart::sphere();
    let quad = [
        ChartPoint::new(0.5, 0.0),
        ChartPoint::new(0.9, 1.4),
        ChartPoint::new(0.7, 2.9),
        ChartPoint::new(1.1, 4.6),
    ];
    let mut worst_poly: f64 = 0.0;
    for c in [octant_triangle(2048).unwrap(), geodesic_polygon(&sphere, &quad, true, 2048).unwrap()] {
        let r = total_intrinsic_curvature(&c, &RefinementStrategy::default()).unwrap();
        worst_poly = worst_poly.max(r.equality_gap);
    }
    let cantor = cantor_graph(8, 2048).unwrap();
    let gap_cantor = (euclidean_total_curvature(&cantor).unwrap() - energy_functional(&cantor).unwrap().total).abs();
    verdict(
        &format!("representation theorem (parallels {GAP_SMOOTH:e}, polygons {GAP_POLYGON:e}, cantor {GAP_CANTOR:e})"),
        worst_smooth <= GAP_SMOOTH && worst_poly <= GAP_POLYGON && gap_cantor <= GAP_CANTOR,
        format!("parallels {worst_smooth:.2e}, polygons {worst_poly:.2e}, cantor {gap_cantor:.2e}"),
    );
}

#[test]
fn transport_exactness() {
    let c = parallel(FRAC_PI_3, 4096).unwrap();
    let (st, series) = transport_curve(&c, c.tangents[0], TransportBackend::SphereFrame).unwrap();
    let theta_err = series
        .value_list()
        .iter()
        .zip(&c.grid)
        .map(|(t, s)| (t - s / 3f64.sqrt()).abs())
        .fold(0.0, f64::max);
    let (cov, _) = transport_curve(&c, c.tangents[0], TransportBackend::Covariant).unwrap();
    let drift = st.max_norm_drift().max(cov.max_norm_drift());
    let identity = transport_identity_check(&st, &c).unwrap();
    verdict(
        &format!("transport exactness (theta {THETA_TOL:e}, drift {DRIFT_TOL:e}, identity {IDENTITY_TOL:e})"),
        theta_err <= THETA_TOL && drift <= DRIFT_TOL && identity <= IDENTITY_TOL,
        format!("theta {theta_err:.2e}, drift {drift:.2e}, identity {identity:.2e}"),
    );
}

#[test]
fn cantor_curve() {
    let errs: Vec<f64> = (5..=8)
        .map(|d| (euclidean_total_curvature(&cantor_graph(d, 2048).unwrap()).unwrap() - FRAC_PI_4).abs())
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    verdict(
        &format!("cantor curve (depth 8 within {CANTOR_TOL:e}, error decreasing over depths 5..8)"),
        errs[3] <= CANTOR_TOL && decreasing,
        format!("errors {:?}", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()),
    );
}

#[test]
fn gauss_bonnet() {
    let mut detail = Vec::new();
    let mut ok = true;
    for (label, t0) in PARALLELS {
        let r = gauss_bonnet_check(&parallel(t0, 4096).unwrap()).unwrap();
        ok &= r.residual <= GB_CURVED;
        detail.push(format!("cap {label} {:.2e}", r.residual));
    }
    let r = gauss_bonnet_check(&octant_triangle(4096).unwrap()).unwrap();
    ok &= r.residual <= GB_CURVED;
    detail.push(format!("octant {:.2e}", r.residual));
    let r = gauss_bonnet_check(&flat_square([2.0, 0.5], 0.2, 1024).unwrap()).unwrap();
    ok &= r.residual <= GB_FLAT;
    detail.push(format!("flat square {:.2e}", r.residual));
    verdict(&format!("gauss-bonnet (curved {GB_CURVED:e}, flat {GB_FLAT:e})"), ok, detail.join("; "));
}

#[test]
fn development() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, t0) in PARALLELS {
        let e = envelope_chart_of_parallel(t0, 4096).unwrap();
        let d = develop(&e.curve).unwrap();
        let point_err = d
            .points
            .iter()
            .zip(&d.grid)
            .map(|(p, s)| {
                let phi = s / t0.tan();
                (p.r - e.radius * phi.cos()).hypot(p.phi - e.radius * phi.sin())
            })
            .fold(0.0, f64::max);
        let integral = energy_functional(&e.curve).unwrap().total;
        let tc_err = (euclidean_total_curvature(&d).unwrap() - integral).abs();
        ok &= point_err <= DEV_POINT && tc_err <= DEV_TC;
        detail.push(format!("{label} point {point_err:.2e} tc {tc_err:.2e}"));
    }
    let sphere = parallel(FRAC_PI_3, 4096).unwrap();
    let env = envelope_chart_of_parallel(FRAC_PI_3, 4096).unwrap();
    let eight = |c: &SampledCurve| rotation_of(&inscribe(c, &uniform(c, 8)).unwrap()).unwrap();
    let gap8 = (eight(&sphere) - eight(&env.curve)).abs();
    let lim_sphere = total_intrinsic_curvature(&sphere, &RefinementStrategy::default()).unwrap().estimate;
    let lim_env = total_intrinsic_curvature(&env.curve, &RefinementStrategy::default()).unwrap().estimate;
    let agreement = (lim_sphere - lim_env).abs();
    ok &= gap8 > CROSS_CHART_GAP && agreement <= LIMIT_AGREEMENT;
    detail.push(format!("n=8 gap {gap8:.3e}, limits differ by {agreement:.2e}"));
    verdict(
        &format!(
            "development (pointwise {DEV_POINT:e}, tc {DEV_TC:e}, n=8 gap > {CROSS_CHART_GAP:e}, limits {LIMIT_AGREEMENT:e})"
        ),
        ok,
        detail.join("; "),
    );
}

#[test]
fn monotonicity_failure() {
    let counts = [4usize, 8, 16, 32, 64, 128, 256];
    let c = parallel(FRAC_PI_3, 4096).unwrap();
    let sphere: Vec<f64> = counts
        .iter()
        .map(|&n| rotation_of(&inscribe(&c, &uniform(&c, n)).unwrap()).unwrap())
        .collect();
    let arc = chart_smooth(&SurfaceChart::flat_polar(), "2", "t", 0.0, 2.0, 4096).unwrap();
    let flat: Vec<f64> = counts
        .iter()
        .map(|&n| {
            let mut p = uniform(&arc, n);
            p.push(arc.length);
            rotation_of(&inscribe(&arc, &p).unwrap()).unwrap()
        })
        .collect();
    let nonincreasing = sphere.windows(2).all(|w| w[1] <= w[0]);
    let above = sphere.iter().all(|&r| r > PI);
    let nondecreasing = flat.windows(2).all(|w| w[1] >= w[0]);
    verdict(
        "monotonicity failure (sphere nonincreasing and > pi for n <= 256, flat nondecreasing)",
        nonincreasing && above && nondecreasing,
        format!(
            "sphere n=4 {:.6} .. n=256 {:.6}; flat n=4 {:.6} .. n=256 {:.6}",
            sphere[0], sphere[6], flat[0], flat[6]
        ),
    );
}

#[test]
fn sphere_polygonal_identity() {
    let c = wavy_sphere_curve(4096).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..200 {
        if checked == 20 {
            break;
        }
        let n = rng.gen_range(4..48);
        let mut part: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..c.length)).collect();
        part.push(0.0);
        part.sort_by(f64::total_cmp);
        let Ok(p) = inscribe(&c, &part) else { continue };
        let tc = geodesic_polygonal_tc(&p, 256).unwrap();
        worst = worst.max((tc - (rotation_of(&p).unwrap() + p.length())).abs());
        checked += 1;
    }
    verdict(
        &format!("sphere polygonal identity (20 random polygonals, tol {POLY_IDENTITY:e})"),
        checked == 20 && worst <= POLY_IDENTITY,
        format!("{checked} polygonals, worst {worst:.2e}"),
    );
}

/// Deterministic sweep of each property family at its module tolerance.
#[test]
fn property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sphere = SurfaceChart::sphere();
    let mut failures = Vec::new();

    // frame orthonormality
    for _ in 0..8 {
        let (a, b, k) = (rng.gen_range(0.5..2.0), rng.gen_range(0.0..0.3), rng.gen_range(1..5));
        let c = chart_smooth(&sphere, &format!("{a} + {b} * sin({k} * t)"), "t", 0.0, TAU, 512).unwrap();
        let bad = darboux_frame(&c).nodes.iter().any(|f| {
            [f.t, f.n, f.u].iter().any(|v| (norm(*v) - 1.0).abs() > 1e-12)
                || dot(f.t, f.n).abs() > 1e-12
                || dot(f.t, f.u).abs() > 1e-12
                || dot(f.n, f.u).abs() > 1e-12
        });
        if bad {
            failures.push("frame orthonormality");
        }
    }

    // unit-speed geodesics
    let custom = SurfaceChart::custom("(0.5 + 0.2*cos(phi)) * sinh(r)^2", 0.05, 3.0).unwrap();
    for _ in 0..16 {
        let p = ChartPoint::new(rng.gen_range(0.4..2.7), rng.gen_range(-PI..PI));
        let ang: f64 = rng.gen_range(-PI..PI);
        for chart in [&sphere, &custom] {
            let dir = chart.from_orthonormal(p, [ang.cos(), ang.sin()]);
            if let Ok(arc) = chart.geodesic_shoot(p, dir, 0.3, Some(0.3 / 256.0)) {
                if max_speed_defect(chart, &arc) > 1e-9 {
                    failures.push("unit-speed geodesics");
                }
            }
        }
    }

    // Christoffel finite differences
    for _ in 0..16 {
        let (a, b, cc) = (rng.gen_range(0.2..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.0..0.5));
        let chart = SurfaceChart::custom(&format!("({a}*sin(r) + {b}*r)^2 * (1 + {cc}*cos(phi))"), 0.01, 3.0).unwrap();
        let (r, phi) = (rng.gen_range(0.3..2.5), rng.gen_range(-PI..PI));
        let h = 1e-5;
        let gm = |r: f64, p: f64| chart.metric_at(ChartPoint::new(r, p)).unwrap();
        let g0 = gm(r, phi);
        let g_r = (gm(r + h, phi) - gm(r - h, phi)) / (2.0 * h);
        let g_p = (gm(r, phi + h) - gm(r, phi - h)) / (2.0 * h);
        let ch = chart.christoffel_at(ChartPoint::new(r, phi)).unwrap();
        let scale = 1.0 + g_r.abs() / g0 + g_p.abs() / g0;
        let worst = (ch.g1_22 + g_r / 2.0)
            .abs()
            .max((ch.g2_12 - g_r / (2.0 * g0)).abs())
            .max((ch.g2_22 - g_p / (2.0 * g0)).abs());
        if worst > 1e-6 * scale {
            failures.push("christoffel finite differences");
        }
    }

    // cross-backend geodesic curvature
    for (_, t0) in PARALLELS {
        let c = parallel(t0, 4096).unwrap();
        let chart = geodesic_curvature(&c, CurvatureBackend::ChartFormula).unwrap();
        let sph = geodesic_curvature(&c, CurvatureBackend::SphereFormula).unwrap();
        let dot_theta = geodesic_curvature(&c, CurvatureBackend::ThetaDot).unwrap();
        let a = chart.iter().zip(&sph).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let b = chart.iter().zip(&dot_theta).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if a > 1e-9 || b > 1e-4 {
            failures.push("cross-backend curvature");
        }
    }

    // decompose cross-check
    for c in [
        parallel(FRAC_PI_4, 2048).unwrap(),
        wavy_sphere_curve(2048).unwrap(),
        octant_triangle(2048).unwrap(),
        cantor_graph(8, 2048).unwrap(),
    ] {
        match decompose(&tantrix_series(&c).unwrap()) {
            Ok(b) if (b.total - (b.ac + b.jump + b.cantor)).abs() <= 1e-6_f64.max(1e-3 * b.total) => {}
            _ => failures.push("decompose cross-check"),
        }
    }

    let wall = start.elapsed();
    failures.dedup();
    verdict(
        &format!("property suites (module tolerances, wall < {}s)", PROPERTY_WALL.as_secs()),
        failures.is_empty() && wall < PROPERTY_WALL,
        format!("failures {failures:?}, wall {:.2}s", wall.as_secs_f64()),
    );
}
