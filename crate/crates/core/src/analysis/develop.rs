//! Planar development of curves on flat charts.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::curve::{arc_length_param, CurvePiece, SampledCurve, SmoothPiece};
use crate::error::{GeomError, Result};
use crate::surface::{ChartKind, SurfaceChart};

/// Unrolls a curve on a flat chart into the plane by
/// `(r, φ) ↦ r(cos φ, sin φ)`. Arc length and geodesic curvature are kept.
pub fn develop(curve: &SampledCurve) -> Result<SampledCurve> {
    let chart = &curve.chart;
    match &chart.kind {
        ChartKind::Plane => Ok(curve.clone()),
        ChartKind::FlatPolar => {
            let pieces = curve
                .pieces
                .iter()
                .map(|p| CurvePiece::Developed {
                    inner: Box::new(p.clone()),
                    chart: chart.clone(),
                })
                .collect();
            arc_length_param(&SurfaceChart::plane(), pieces, curve.n())
        }
        ChartKind::Sphere => Err(GeomError::NonZeroCurvature { k: 1.0 }),
        ChartKind::Custom(_) => {
            for p in &curve.points {
                let k = chart.gauss_curvature_at(*p)?;
                if k.abs() > 1e-9 {
                    return Err(GeomError::NonZeroCurvature { k });
                }
            }
            Err(GeomError::Unsupported(
                "development is implemented for flat-polar and plane charts".into(),
            ))
        }
    }
}

/// A parallel re-expressed on the flat envelope of the sphere's tangent
/// planes along it.
#[derive(Debug, Clone)]
pub struct EnvelopeParallel {
    pub theta0: f64,
    /// Cone chart with angular period `2π cos θ₀`.
    pub chart: SurfaceChart,
    /// `r ≡ tan θ₀`, `φ(s) = cot θ₀ · s`, `s ∈ [0, 2π sin θ₀]`.
    pub curve: SampledCurve,
    pub radius: f64,
}

/// The tangent planes along the parallel of colatitude `θ₀` envelope a cone;
/// unrolled around its apex it is a flat polar chart of angular period
/// `2π cos θ₀` on which the parallel is the circle `r = tan θ₀`.
pub fn envelope_chart_of_parallel(theta0: f64, n: usize) -> Result<EnvelopeParallel> {
    if (theta0 - FRAC_PI_2).abs() < 1e-12 {
        return Err(GeomError::InvalidInput(
            "the equator is a geodesic: its tangent planes envelope a cylinder, not a cone".into(),
        ));
    }
    if !(theta0 > 0.0 && theta0 < FRAC_PI_2) {
        return Err(GeomError::InvalidInput(format!(
            "colatitude must lie in (0, π/2) for the envelope chart, got {theta0}"
        )));
    }
    let (radius, cot) = (theta0.tan(), 1.0 / theta0.tan());
    let length = TAU * theta0.sin();
    let chart = SurfaceChart::cone(TAU * theta0.cos());
    let piece = SmoothPiece::new(&chart, &radius.to_string(), &format!("{cot} * t"), 0.0, length)?;
    let curve = arc_length_param(&chart, vec![CurvePiece::Smooth(piece)], n)?;
    Ok(EnvelopeParallel {
        theta0,
        chart,
        curve,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::generators::*;
    use crate::surface::ChartPoint;
    use crate::transport::{geodesic_curvature, CurvatureBackend};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn envelope_of_quarter_parallel() {
        let e = envelope_chart_of_parallel(FRAC_PI_4, 512).unwrap();
        assert_abs_diff_eq!(e.radius, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.curve.length, PI * 2f64.sqrt(), epsilon = 1e-10);
        assert!(e.curve.closed);
        for k in geodesic_curvature(&e.curve, CurvatureBackend::ChartFormula).unwrap() {
            assert_abs_diff_eq!(k, 1.0, epsilon = 1e-9);
        }
        assert!(envelope_chart_of_parallel(FRAC_PI_2, 512).is_err());
        assert!(envelope_chart_of_parallel(0.0, 512).is_err());
    }

    #[test]
    fn developed_parallel_is_an_open_circle_arc() {
        let e = envelope_chart_of_parallel(FRAC_PI_3, 1024).unwrap();
        let d = develop(&e.curve).unwrap();
        assert!(!d.closed);
        assert_abs_diff_eq!(d.length, e.curve.length, epsilon = 1e-12);
        for (p, s) in d.points.iter().zip(&d.grid) {
            let phi = s / FRAC_PI_3.tan();
            assert_abs_diff_eq!(p.r, e.radius * phi.cos(), epsilon = 1e-9);
            assert_abs_diff_eq!(p.phi, e.radius * phi.sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn flat_geodesic_develops_to_segment() {
        let chart = SurfaceChart::flat_polar();
        let c = geodesic_polygon(&chart, &[ChartPoint::new(1.0, 0.0), ChartPoint::new(1.0, 1.0)], false, 128).unwrap();
        let d = develop(&c).unwrap();
        for k in geodesic_curvature(&d, CurvatureBackend::ChartFormula).unwrap() {
            assert_abs_diff_eq!(k, 0.0, epsilon = 1e-12);
        }
        assert!(matches!(develop(&parallel(1.0, 128).unwrap()), Err(GeomError::NonZeroCurvature { .. })));
    }
}
