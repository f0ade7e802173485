//! Gauss–Bonnet for simple closed curves bounding a disc inside a chart.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::curve::SampledCurve;
use crate::error::{GeomError, Result};
use crate::numeric::{adaptive_simpson, gauss_legendre8};
use crate::surface::{ChartKind, SurfaceChart};
use crate::transport::{transport_curve, TransportBackend};

/// Angular panels of the outer quadrature.
const SWEEP_PANELS: usize = 512;
const SWEEP_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetReport {
    /// `∫_U K dA` over the enclosed region.
    pub area_integral: f64,
    /// `Θ(L−) − Θ(0+)`, interior corner jumps included.
    pub theta_span: f64,
    /// Signed turning angle at the closing point.
    pub alpha: f64,
    pub residual: f64,
}

/// Chart-plane trace through the grid nodes and piece junctions, without
/// the repeated closing point. Nodes that nearly coincide with a junction
/// are merged into it.
fn trace(curve: &SampledCurve) -> Vec<[f64; 2]> {
    let tol = 1e-9 * curve.spacing();
    let mut params: Vec<f64> = curve
        .grid
        .iter()
        .filter(|&&s| curve.offsets.iter().all(|o| (o - s).abs() > tol))
        .chain(&curve.offsets)
        .copied()
        .collect();
    params.sort_by(f64::total_cmp);
    params.dedup();
    params.pop();
    params.iter().map(|&s| curve.chart.chart_plane(curve.point_at(s))).collect()
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn d2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [b[0] - a[0], b[1] - a[1]]
}

fn signed_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| cross2(pts[i], pts[(i + 1) % n])).sum::<f64>()
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test; touching counts.
fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let o1 = cross2(d2(a, b), d2(a, c));
    let o2 = cross2(d2(a, b), d2(a, d));
    let o3 = cross2(d2(c, d), d2(c, a));
    let o4 = cross2(d2(c, d), d2(c, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// First pair of non-adjacent crossing segments, found by sweeping boxes
/// sorted by their left edge.
fn self_intersection(pts: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = pts.len();
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |i: usize| seg(i).0[0].min(seg(i).1[0]);
    let hi = |i: usize| seg(i).0[0].max(seg(i).1[0]);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if lo(j) > hi(i) {
                break;
            }
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_cross(a, b, c, d) {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// Whether the origin is inside the closed polygon (even-odd rule).
fn encloses_origin(pts: &[[f64; 2]]) -> bool {
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a[1] > 0.0) != (b[1] > 0.0) {
            let x = a[0] + (0.0 - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x > 0.0 {
                inside = !inside;
            }
        }
    }
    inside
}

/// Radii where the ray at angle φ leaves or enters the polygon, sorted.
fn ray_crossings(pts: &[[f64; 2]], phi: f64) -> Vec<f64> {
    let d = [phi.cos(), phi.sin()];
    let n = pts.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let (ca, cb) = (cross2(d, a), cross2(d, b));
        if (ca > 0.0) != (cb > 0.0) {
            let t = ca / (ca - cb);
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let rho = p[0] * d[0] + p[1] * d[1];
            if rho > 0.0 {
                out.push(rho);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Intervals inside the region along a ray, from sorted crossings.
fn inside_intervals(crossings: &[f64], from_zero: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut it = crossings.iter().copied();
    if from_zero {
        if let Some(first) = it.next() {
            out.push((0.0, first));
        }
    }
    let rest: Vec<f64> = it.collect();
    for w in rest.chunks_exact(2) {
        out.push((w[0], w[1]));
    }
    out
}

fn sweep(f: impl Fn(f64) -> f64 + Sync, a: f64, b: f64) -> f64 {
    let h = (b - a) / SWEEP_PANELS as f64;
    (0..SWEEP_PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            adaptive_simpson(&f, lo, lo + h, SWEEP_TOL / SWEEP_PANELS as f64, 12)
        })
        .sum()
}

/// `∫_U K dA` over the region bounded by the closed chart-plane polygon.
pub fn enclosed_curvature_integral(chart: &SurfaceChart, pts: &[[f64; 2]]) -> Result<f64> {
    match &chart.kind {
        ChartKind::FlatPolar | ChartKind::Plane => return Ok(0.0),
        _ => {}
    }
    let from_zero = encloses_origin(pts);
    if from_zero && chart.r_lo > 0.0 && !matches!(chart.kind, ChartKind::Sphere) {
        return Err(GeomError::RegionOutsideChart(format!(
            "the enclosed region contains r = 0, below the chart's lower radius {}",
            chart.r_lo
        )));
    }
    let density = |r: f64, phi: f64| {
        let m = chart.metric_jet_unchecked(r, phi);
        let sg = m.g.sqrt();
        if sg == 0.0 {
            return 0.0;
        }
        let k = -m.g_rr / (2.0 * m.g) + m.g_r * m.g_r / (4.0 * m.g * m.g);
        k * sg
    };
    let radial = |phi: f64| {
        inside_intervals(&ray_crossings(pts, phi), from_zero)
            .iter()
            .map(|&(a, b)| gauss_legendre8(|r| density(r, phi), a, b, 2))
            .sum::<f64>()
    };
    Ok(sweep(radial, 0.0, TAU))
}

/// Checks `∫_U K dA = 2π − (Θ(L−) − Θ(0+)) − α` for a positively oriented
/// simple closed curve. The region is the one on the left of the curve in
/// the chart picture.
pub fn gauss_bonnet_check(curve: &SampledCurve) -> Result<GaussBonnetReport> {
    let chart = &curve.chart;
    if !curve.closed {
        return Err(GeomError::InvalidInput("Gauss–Bonnet needs a closed curve".into()));
    }
    if let (ChartKind::FlatPolar, Some(per)) = (&chart.kind, chart.phi_period) {
        if (per - TAU).abs() > 1e-12 {
            return Err(GeomError::Unsupported(
                "enclosed regions on a cone chart with angular period other than 2π".into(),
            ));
        }
    }
    let pts = trace(curve);
    if let Some((first, second)) = self_intersection(&pts) {
        return Err(GeomError::SelfIntersection { first, second });
    }
    if signed_area(&pts) <= 0.0 {
        return Err(GeomError::InvalidInput(
            "curve is negatively oriented; traverse it counterclockwise".into(),
        ));
    }
    for p in &curve.points {
        chart.check(*p)?;
    }
    let area_integral = enclosed_curvature_integral(chart, &pts)?;
    let x0 = curve.pieces[0].jet(chart, 0.0).vel;
    let (_, series) = transport_curve(curve, x0, TransportBackend::default_for(chart))?;
    let values = series.value_list();
    let theta_span = values[values.len() - 1] - values[0];
    let alpha = curve.junction.map_or(0.0, |j| j.turn);
    Ok(GaussBonnetReport {
        area_integral,
        theta_span,
        alpha,
        residual: (area_integral - (TAU - theta_span - alpha)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::generators::*;
    use crate::surface::ChartPoint;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn cap_and_octant() {
        let c = parallel(FRAC_PI_3, 2048).unwrap();
        let r = gauss_bonnet_check(&c).unwrap();
        assert_abs_diff_eq!(r.area_integral, TAU * (1.0 - FRAC_PI_3.cos()), epsilon = 1e-5);
        assert!(r.residual <= 1e-4);
        let t = octant_triangle(2048).unwrap();
        let r = gauss_bonnet_check(&t).unwrap();
        assert_abs_diff_eq!(r.area_integral, FRAC_PI_2, epsilon = 1e-5);
        assert_abs_diff_eq!(r.alpha, FRAC_PI_2, epsilon = 1e-12);
        assert!(r.residual <= 1e-4);
    }

    #[test]
    fn flat_square_and_orientation() {
        let sq = flat_square([2.0, 0.5], 0.1, 512).unwrap();
        let r = gauss_bonnet_check(&sq).unwrap();
        assert!(r.residual <= 1e-6, "{r:?}");
        let chart = SurfaceChart::flat_polar();
        let cw: Vec<ChartPoint> = [[1.0, 0.0], [1.0, 0.3], [1.2, 0.3]]
            .iter()
            .map(|p| ChartPoint::new(p[0], p[1]))
            .collect();
        let tri = geodesic_polygon(&chart, &cw, true, 256).unwrap();
        assert!(signed_area(&trace(&tri)) < 0.0);
        assert!(matches!(gauss_bonnet_check(&tri), Err(GeomError::InvalidInput(_))));
    }

    #[test]
    fn figure_eight_is_rejected() {
        let c = chart_smooth(&SurfaceChart::plane(), "sin(t)", "sin(t) * cos(t)", 0.0, TAU, 512).unwrap();
        assert!(matches!(gauss_bonnet_check(&c), Err(GeomError::SelfIntersection { .. })));
    }

    #[test]
    fn ray_intervals() {
        let sq = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        assert!(encloses_origin(&sq));
        let c = ray_crossings(&sq, 0.0);
        assert_eq!(inside_intervals(&c, true), vec![(0.0, 1.0)]);
        let off = [[2.0, -1.0], [4.0, -1.0], [4.0, 1.0], [2.0, 1.0]];
        assert!(!encloses_origin(&off));
        assert_eq!(inside_intervals(&ray_crossings(&off, 0.0), false), vec![(2.0, 4.0)]);
    }
}
