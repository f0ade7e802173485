//! Ready-made test curves.

use std::f64::consts::{PI, TAU};

use crate::curve::cantor::CantorPiece;
use crate::curve::{arc_length_param, CurvePiece, SampledCurve, SmoothPiece};
use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::surface::{ChartPoint, SurfaceChart};

fn check_colatitude(theta0: f64) -> Result<()> {
    if !(theta0 > 0.0 && theta0 < PI) {
        return Err(GeomError::InvalidInput(format!(
            "colatitude must lie strictly between 0 and π (radians), got {theta0}"
        )));
    }
    Ok(())
}

/// Parallel of colatitude `θ₀` on the unit sphere, traversed with increasing φ.
pub fn parallel(theta0: f64, n: usize) -> Result<SampledCurve> {
    check_colatitude(theta0)?;
    let chart = SurfaceChart::sphere();
    chart.check(ChartPoint::new(theta0, 0.0))?;
    let piece = SmoothPiece::from_exprs(
        &chart,
        Expr::Num(theta0),
        Expr::parse("t")?,
        theta0.to_string(),
        "t".into(),
        0.0,
        TAU,
    )?;
    arc_length_param(&chart, vec![CurvePiece::Smooth(piece)], n)
}

/// Curve `r(t), φ(t)` given by expressions.
pub fn chart_smooth(chart: &SurfaceChart, r: &str, phi: &str, t0: f64, t1: f64, n: usize) -> Result<SampledCurve> {
    let piece = SmoothPiece::new(chart, r, phi, t0, t1)?;
    arc_length_param(chart, vec![CurvePiece::Smooth(piece)], n)
}

/// Geodesic polygon through the given vertices. With `closed` the last
/// vertex is joined back to the first.
pub fn geodesic_polygon(chart: &SurfaceChart, vertices: &[ChartPoint], closed: bool, n: usize) -> Result<SampledCurve> {
    if vertices.len() < 2 {
        return Err(GeomError::InvalidInput("a polygon needs at least two vertices".into()));
    }
    let mut pts = vertices.to_vec();
    if closed && !chart.same_point(pts[0], pts[pts.len() - 1], 1e-12) {
        pts.push(pts[0]);
    }
    let mut pieces = Vec::with_capacity(pts.len() - 1);
    for (i, w) in pts.windows(2).enumerate() {
        let arc = chart.geodesic_connect(w[0], w[1]).map_err(|e| GeomError::Connection {
            index: i,
            source: Box::new(e),
        })?;
        if arc.length == 0.0 {
            return Err(GeomError::RepeatedVertex { index: i + 1 });
        }
        pieces.push(CurvePiece::Geodesic(arc));
    }
    arc_length_param(chart, pieces, n)
}

/// Geodesic triangle with three right angles, centred on the north pole and
/// traversed counterclockwise.
pub fn octant_triangle(n: usize) -> Result<SampledCurve> {
    let r = (1.0 / 3f64.sqrt()).acos();
    let v: Vec<ChartPoint> = (0..3).map(|k| ChartPoint::new(r, k as f64 * TAU / 3.0)).collect();
    geodesic_polygon(&SurfaceChart::sphere(), &v, true, n)
}

/// Counterclockwise square with the given centre and side on a flat polar
/// chart.
pub fn flat_square(center: [f64; 2], side: f64, n: usize) -> Result<SampledCurve> {
    let h = side / 2.0;
    let corners = [[h, -h], [h, h], [-h, h], [-h, -h]];
    let v: Vec<ChartPoint> = corners
        .iter()
        .map(|c| {
            let (x, y) = (center[0] + c[0], center[1] + c[1]);
            ChartPoint::new(x.hypot(y), y.atan2(x))
        })
        .collect();
    geodesic_polygon(&SurfaceChart::flat_polar(), &v, true, n)
}

/// Planar graph of the integral of the Cantor function at triadic depth `k`.
pub fn cantor_graph(depth: u32, n: usize) -> Result<SampledCurve> {
    if depth == 0 || depth > 14 {
        return Err(GeomError::InvalidInput(format!("Cantor depth must be in 1..=14, got {depth}")));
    }
    arc_length_param(&SurfaceChart::plane(), vec![CurvePiece::Cantor(CantorPiece::new(depth))], n)
}

/// Counterclockwise circle of the given radius in the plane.
pub fn planar_circle(radius: f64, n: usize) -> Result<SampledCurve> {
    if !(radius > 0.0) {
        return Err(GeomError::InvalidInput("radius must be positive".into()));
    }
    let chart = SurfaceChart::plane();
    chart_smooth(&chart, &format!("{radius} * cos(t)"), &format!("{radius} * sin(t)"), 0.0, TAU, n)
}

/// Closed sphere curve `r = 1 + 0.2 sin 3t`, `φ = t`.
pub fn wavy_sphere_curve(n: usize) -> Result<SampledCurve> {
    chart_smooth(&SurfaceChart::sphere(), "1 + 0.2 * sin(3*t)", "t", 0.0, TAU, n)
}
