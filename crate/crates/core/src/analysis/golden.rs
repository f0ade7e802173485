//! Reference checks with closed-form answers, run by `curvkit verify`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{develop, envelope_chart_of_parallel, euclidean_total_curvature, gauss_bonnet_check, total_intrinsic_curvature};
use crate::bv::energy_functional;
use crate::curve::generators::{cantor_graph, flat_square, octant_triangle, parallel};
use crate::error::Result;
use crate::polygonal::{inscribe, rotation_of, RefinementStrategy};
use crate::transport::{transport_identity_check, transport_smooth, TransportBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// Passes when `|value − expected| ≤ tolerance`.
    AbsDiff,
    /// Passes when `value > expected`.
    GreaterThan,
}

impl Comparison {
    pub fn as_str(&self) -> &'static str {
        match self {
            Comparison::AbsDiff => "abs-diff",
            Comparison::GreaterThan => "greater-than",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    pub error: Option<String>,
}

impl GoldenCheck {
    fn new(name: &str, value: Result<f64>, expected: f64, tolerance: f64) -> Self {
        Self::build(name, value, expected, tolerance, Comparison::AbsDiff)
    }

    fn greater_than(name: &str, value: Result<f64>, bound: f64) -> Self {
        Self::build(name, value, bound, 0.0, Comparison::GreaterThan)
    }

    fn build(name: &str, value: Result<f64>, expected: f64, tolerance: f64, comparison: Comparison) -> Self {
        let (value, error) = match value {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let passed = match comparison {
            Comparison::GreaterThan => value > expected,
            Comparison::AbsDiff => (value - expected).abs() <= tolerance,
        };
        GoldenCheck {
            name: name.into(),
            value,
            expected,
            tolerance,
            comparison,
            passed,
            error,
        }
    }
}

type Job = Box<dyn Fn(usize) -> GoldenCheck + Send + Sync>;

fn jobs() -> Vec<Job> {
    let mut out: Vec<Job> = Vec::new();
    for (label, t0) in [("pi/6", FRAC_PI_6), ("pi/4", FRAC_PI_4), ("pi/3", FRAC_PI_3)] {
        out.push(Box::new(move |n| {
            let v = parallel(t0, n).and_then(|c| total_intrinsic_curvature(&c, &RefinementStrategy::default()));
            GoldenCheck::new(&format!("tc parallel {label}"), v.map(|r| r.estimate), TAU * t0.cos(), 1e-3)
        }));
        out.push(Box::new(move |n| {
            let v = parallel(t0, n).and_then(|c| gauss_bonnet_check(&c));
            GoldenCheck::new(&format!("gauss-bonnet cap {label}"), v.map(|r| r.residual), 0.0, 1e-4)
        }));
    }
    out.push(Box::new(|n| {
        let v = parallel(FRAC_PI_3, n).and_then(|c| {
            let (_, series) = transport_smooth(&c, c.tangents[0], TransportBackend::SphereFrame)?;
            Ok(series
                .value_list()
                .iter()
                .zip(&c.grid)
                .map(|(t, s)| (t - s / 3f64.sqrt()).abs())
                .fold(0.0, f64::max))
        });
        GoldenCheck::new("transport angle parallel pi/3", v, 0.0, 1e-6)
    }));
    out.push(Box::new(|n| {
        let v = parallel(FRAC_PI_3, n).and_then(|c| {
            let (st, _) = transport_smooth(&c, c.tangents[0], TransportBackend::SphereFrame)?;
            transport_identity_check(&st, &c)
        });
        GoldenCheck::new("transport identity parallel pi/3", v, 0.0, 1e-7)
    }));
    out.push(Box::new(|n| {
        let v = parallel(FRAC_PI_3, n).and_then(|c| energy_functional(&c));
        GoldenCheck::new("energy parallel pi/3", v.map(|b| b.total), PI, 1e-6)
    }));
    out.push(Box::new(|n| {
        let v = octant_triangle(n).and_then(|c| total_intrinsic_curvature(&c, &RefinementStrategy::default()));
        GoldenCheck::new("tc octant triangle", v.map(|r| r.estimate), 1.5 * PI, 1e-6)
    }));
    out.push(Box::new(|n| {
        let v = octant_triangle(n).and_then(|c| gauss_bonnet_check(&c));
        GoldenCheck::new("gauss-bonnet octant area", v.map(|r| r.area_integral), FRAC_PI_2, 1e-4)
    }));
    out.push(Box::new(|n| {
        let v = flat_square([2.0, 0.5], 0.2, n).and_then(|c| gauss_bonnet_check(&c));
        GoldenCheck::new("gauss-bonnet flat square", v.map(|r| r.residual), 0.0, 1e-6)
    }));
    out.push(Box::new(|n| {
        let v = cantor_graph(8, n).and_then(|c| euclidean_total_curvature(&c));
        GoldenCheck::new("euclidean tc cantor graph depth 8", v, FRAC_PI_4, 1e-2)
    }));
    out.push(Box::new(|n| {
        let v = envelope_chart_of_parallel(FRAC_PI_3, n).and_then(|e| {
            let d = develop(&e.curve)?;
            euclidean_total_curvature(&d)
        });
        GoldenCheck::new("developed parallel pi/3 tc", v, PI, 1e-4)
    }));
    out.push(Box::new(|n| {
        let v = (|| {
            let sphere = parallel(FRAC_PI_3, n)?;
            let env = envelope_chart_of_parallel(FRAC_PI_3, n)?;
            let part = |l: f64| (0..8).map(|i| l * i as f64 / 8.0).collect::<Vec<_>>();
            let a = rotation_of(&inscribe(&sphere, &part(sphere.length))?)?;
            let b = rotation_of(&inscribe(&env.curve, &part(env.curve.length))?)?;
            Ok(a - b)
        })();
        GoldenCheck::greater_than("cross-chart rotation gap n=8", v, 1e-3)
    }));
    out
}

/// Runs every reference check at the given grid size.
pub fn golden_suite(nodes: usize) -> Vec<GoldenCheck> {
    jobs().par_iter().map(|job| job(nodes)).collect()
}
