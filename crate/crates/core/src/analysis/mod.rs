//! Total intrinsic curvature by refinement, Euclidean total curvature, the
//! representation-theorem gap, Gauss–Bonnet residuals and developments.

mod develop;
mod gauss_bonnet;
mod golden;

pub use develop::{develop, envelope_chart_of_parallel, EnvelopeParallel};
pub use gauss_bonnet::{enclosed_curvature_integral, gauss_bonnet_check, GaussBonnetReport};
pub use golden::{golden_suite, Comparison, GoldenCheck};

use serde::{Deserialize, Serialize};

use crate::bv::{energy_functional, BVBreakdown};
use crate::curve::SampledCurve;
use crate::error::{GeomError, Result};
use crate::polygonal::{euclidean_rotation_of, refinement_report, RefinementReport, RefinementStrategy};

/// Relative size below which successive row differences count as zero.
const FLAT_ROWS: f64 = 1e-12;
/// Smallest fitted order accepted for extrapolation.
const MIN_ORDER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// `R = T + C·μ^p` fitted through the last three rows.
    Extrapolated,
    LastRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub estimate: f64,
    pub method: EstimateMethod,
    pub order: Option<f64>,
    pub low_confidence: bool,
    /// False when the last rows oscillate instead of settling.
    pub converged: bool,
}

/// Extrapolates `(modulus, rotation)` rows to modulus zero.
pub fn extrapolate(rows: &[(f64, f64)]) -> Extrapolation {
    let last = rows.last().map_or(f64::NAN, |r| r.1);
    let plain = |low_confidence, converged| Extrapolation {
        estimate: last,
        method: EstimateMethod::LastRow,
        order: None,
        low_confidence,
        converged,
    };
    if rows.len() < 3 {
        return plain(true, true);
    }
    let [(m1, r1), (m2, r2), (m3, r3)] = [rows[rows.len() - 3], rows[rows.len() - 2], rows[rows.len() - 1]];
    let scale = r3.abs().max(1.0);
    let (d1, d2) = (r1 - r2, r2 - r3);
    if d1.abs() <= FLAT_ROWS * scale && d2.abs() <= FLAT_ROWS * scale {
        return plain(false, true);
    }
    if d2.abs() <= FLAT_ROWS * scale {
        return plain(false, true);
    }
    if d1 * d2 < 0.0 {
        return plain(true, false);
    }
    if !(m1 > m2 && m2 > m3 && m3 > 0.0) {
        return plain(true, true);
    }
    let q = d1 / d2;
    let f = |p: f64| (m1.powf(p) - m2.powf(p)) / (m2.powf(p) - m3.powf(p)) - q;
    let (mut lo, mut hi) = (0.1, 8.0);
    if f(lo) * f(hi) > 0.0 {
        return plain(true, true);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let p = 0.5 * (lo + hi);
    if p < MIN_ORDER {
        return Extrapolation {
            order: Some(p),
            ..plain(true, true)
        };
    }
    let c = d2 / (m2.powf(p) - m3.powf(p));
    Extrapolation {
        estimate: r3 - c * m3.powf(p),
        method: EstimateMethod::Extrapolated,
        order: Some(p),
        low_confidence: false,
        converged: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TCReport {
    pub refinement: RefinementReport,
    pub estimate: f64,
    pub extrapolation: Extrapolation,
    pub energy: BVBreakdown,
    pub equality_gap: f64,
    pub warnings: Vec<String>,
}

/// Rotations of inscribed polygonals along the schedule, extrapolated to
/// zero modulus. Curves with singular pieces get the knot partition as a
/// final row, and its rotation is reported without extrapolation.
pub fn total_intrinsic_curvature(curve: &SampledCurve, strategy: &RefinementStrategy) -> Result<TCReport> {
    let singular = curve.has_singular();
    let extra = if singular {
        let mut knots = curve.breakpoints();
        if curve.closed {
            knots.pop();
        }
        vec![knots]
    } else {
        Vec::new()
    };
    let refinement = refinement_report(curve, strategy, extra)?;
    if refinement.rows.len() < 3 && !singular {
        return Err(GeomError::InvalidInput(format!(
            "the schedule must produce at least 3 rows, got {}",
            refinement.rows.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = refinement.rows.iter().map(|r| (r.modulus, r.rotation)).collect();
    let mut warnings = Vec::new();
    let extrapolation = if singular {
        Extrapolation {
            estimate: pairs[pairs.len() - 1].1,
            method: EstimateMethod::LastRow,
            order: None,
            low_confidence: false,
            converged: true,
        }
    } else {
        extrapolate(&pairs)
    };
    if !extrapolation.converged {
        warnings.push("rotation rows oscillate; reporting the last row".to_string());
    } else if extrapolation.low_confidence {
        warnings.push("no usable convergence order; reporting the last row".to_string());
    }
    let energy = energy_functional(curve)?;
    Ok(TCReport {
        estimate: extrapolation.estimate,
        equality_gap: (extrapolation.estimate - energy.total).abs(),
        refinement,
        extrapolation,
        energy,
        warnings,
    })
}

/// Parameters of a chord polyline: every `stride`-th grid node on ordinary
/// pieces plus all breakpoints. Singular pieces only contribute their knots,
/// the points known exactly on the curve.
fn chord_params(curve: &SampledCurve, stride: usize) -> Vec<f64> {
    let mut out = curve.breakpoints();
    for (i, &s) in curve.grid.iter().enumerate().step_by(stride) {
        if !curve.pieces[curve.piece_map[i]].is_singular() {
            out.push(s);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn chord_rotation(curve: &SampledCurve, stride: usize) -> Result<f64> {
    let chart = &curve.chart;
    let mut params = chord_params(curve, stride);
    if curve.closed {
        params.pop();
    }
    let pts: Vec<_> = params
        .iter()
        .map(|&s| {
            let p = if s >= curve.length { curve.jet_left(s).point } else { curve.point_at(s) };
            chart.embed(p).expect("chart has an embedding")
        })
        .collect();
    euclidean_rotation_of(&pts, curve.closed)
}

/// Total curvature of the embedded curve: rotations of nested inscribed
/// chord polylines, extrapolated in the chord spacing.
pub fn euclidean_total_curvature(curve: &SampledCurve) -> Result<f64> {
    let chart = &curve.chart;
    if !chart.has_embedding() {
        return Err(GeomError::Unsupported(format!("the {} chart has no embedding", chart.name())));
    }
    let rows = [4usize, 2, 1]
        .iter()
        .map(|&k| Ok((k as f64 * curve.spacing(), chord_rotation(curve, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate(&rows).estimate)
}
