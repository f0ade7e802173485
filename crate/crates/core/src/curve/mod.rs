//! Arc-length parameterized curves on a chart.
//!
//! A curve is a chain of pieces sampled on a uniform arc-length grid.
//! Tangents come from piece derivatives. Where consecutive pieces meet at an
//! angle the curve stores a [`JumpRecord`] with both one-sided tangents; the
//! closing corner of a closed curve is kept apart in `junction`.

pub mod cantor;
pub mod generators;
mod pieces;

pub use pieces::{CurvePiece, Jet, SmoothPiece};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numeric::{cross, signed_angle_2d, Vec3};
use crate::surface::{ChartPoint, SurfaceChart, TangentVector};

/// Corners with turning angle below this are treated as smooth.
pub const JUMP_THRESHOLD: f64 = 1e-9;
/// Largest allowed gap between consecutive pieces.
pub const GAP_TOLERANCE: f64 = 1e-8;
pub const MIN_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub s: f64,
    pub point: ChartPoint,
    pub left: TangentVector,
    pub right: TangentVector,
    /// Signed turning angle from `left` to `right` in the orthonormal frame.
    pub turn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub chart: SurfaceChart,
    pub pieces: Vec<CurvePiece>,
    /// Arc length where each piece starts, plus the total length at the end.
    pub offsets: Vec<f64>,
    pub length: f64,
    pub closed: bool,
    pub grid: Vec<f64>,
    pub points: Vec<ChartPoint>,
    /// Unit tangents; right limits at interior jumps, left limit at `s = L`.
    pub tangents: Vec<TangentVector>,
    pub jumps: Vec<JumpRecord>,
    /// Closing corner at `s = 0 ≡ L` of a closed curve.
    pub junction: Option<JumpRecord>,
    pub piece_map: Vec<usize>,
}

/// Builds a uniformly sampled curve with `n` intervals from a chain of pieces.
pub fn arc_length_param(chart: &SurfaceChart, pieces: Vec<CurvePiece>, n: usize) -> Result<SampledCurve> {
    if n < MIN_NODES {
        return Err(GeomError::InvalidInput(format!(
            "at least {MIN_NODES} grid intervals are required, got {n}"
        )));
    }
    if pieces.is_empty() {
        return Err(GeomError::InvalidInput("a curve needs at least one piece".into()));
    }
    for p in &pieces {
        p.validate(chart)?;
    }
    let mut offsets = Vec::with_capacity(pieces.len() + 1);
    let mut acc = 0.0;
    offsets.push(0.0);
    for p in &pieces {
        acc += p.length();
        offsets.push(acc);
    }
    let length = acc;
    if !(length > 0.0) {
        return Err(GeomError::InvalidInput("curve has zero length".into()));
    }

    let mut jumps = Vec::new();
    for k in 0..pieces.len() - 1 {
        let left = pieces[k].jet(chart, pieces[k].length());
        let right = pieces[k + 1].jet(chart, 0.0);
        let gap = chart.chart_gap(left.point, right.point);
        if !(gap <= GAP_TOLERANCE) {
            return Err(GeomError::Gap { index: k, gap });
        }
        if let Some(j) = corner(chart, offsets[k + 1], right.point, left.vel, right.vel) {
            jumps.push(j);
        }
    }
    let first = pieces[0].jet(chart, 0.0);
    let last = pieces[pieces.len() - 1].jet(chart, pieces[pieces.len() - 1].length());
    let closed = chart.same_point(first.point, last.point, GAP_TOLERANCE);
    let junction = if closed {
        corner(chart, 0.0, first.point, last.vel, first.vel)
    } else {
        None
    };

    let mut curve = SampledCurve {
        chart: chart.clone(),
        pieces,
        offsets,
        length,
        closed,
        grid: Vec::with_capacity(n + 1),
        points: Vec::with_capacity(n + 1),
        tangents: Vec::with_capacity(n + 1),
        jumps,
        junction,
        piece_map: Vec::with_capacity(n + 1),
    };
    for i in 0..=n {
        let s = if i == n { length } else { length * i as f64 / n as f64 };
        let (k, local) = curve.locate(s);
        let jet = curve.pieces[k].jet(chart, local);
        chart.check(jet.point)?;
        curve.grid.push(s);
        curve.points.push(jet.point);
        curve.tangents.push(jet.vel);
        curve.piece_map.push(k);
    }
    Ok(curve)
}

fn corner(
    chart: &SurfaceChart,
    s: f64,
    point: ChartPoint,
    left: TangentVector,
    right: TangentVector,
) -> Option<JumpRecord> {
    let turn = signed_angle_2d(chart.to_orthonormal(point, left), chart.to_orthonormal(point, right));
    (turn.abs() > JUMP_THRESHOLD).then_some(JumpRecord {
        s,
        point,
        left,
        right,
        turn,
    })
}

impl SampledCurve {
    pub fn n(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n() as f64
    }

    /// Piece index and local parameter; right-continuous except at `s = L`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length);
        let last = self.pieces.len() - 1;
        let k = self.offsets[1..].partition_point(|&o| o <= s).min(last);
        (k, (s - self.offsets[k]).clamp(0.0, self.pieces[k].length()))
    }

    /// Like [`locate`](Self::locate) but left-continuous except at `s = 0`.
    pub fn locate_left(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length);
        let k = self.offsets[1..].partition_point(|&o| o < s).min(self.pieces.len() - 1);
        (k, (s - self.offsets[k]).clamp(0.0, self.pieces[k].length()))
    }

    pub fn jet(&self, s: f64) -> Jet {
        let (k, local) = self.locate(s);
        self.pieces[k].jet(&self.chart, local)
    }

    pub fn jet_left(&self, s: f64) -> Jet {
        let (k, local) = self.locate_left(s);
        self.pieces[k].jet(&self.chart, local)
    }

    pub fn point_at(&self, s: f64) -> ChartPoint {
        self.jet(s).point
    }

    pub fn has_singular(&self) -> bool {
        self.pieces.iter().any(|p| p.is_singular())
    }

    /// Interior jumps followed by the junction, if any.
    pub fn all_jumps(&self) -> impl Iterator<Item = &JumpRecord> {
        self.jumps.iter().chain(self.junction.iter())
    }

    /// Piece junctions (including 0 and L) and interior knots of singular
    /// pieces, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = self.offsets.clone();
        for (k, p) in self.pieces.iter().enumerate() {
            out.extend(p.interior_breakpoints().into_iter().map(|s| s + self.offsets[k]));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Piece junctions only, including 0 and L.
    pub fn junction_params(&self) -> Vec<f64> {
        self.offsets.clone()
    }

    /// Nearest grid node or breakpoint to `s`.
    pub fn snap(&self, s: f64, breakpoints: &[f64]) -> f64 {
        let s = s.clamp(0.0, self.length);
        let h = self.spacing();
        let i = (s / h).round() as usize;
        let mut best = self.grid[i.min(self.n())];
        let j = breakpoints.partition_point(|&b| b < s);
        for cand in [j.checked_sub(1), Some(j)].into_iter().flatten() {
            if let Some(&b) = breakpoints.get(cand) {
                if (b - s).abs() < (best - s).abs() {
                    best = b;
                }
            }
        }
        best
    }

    /// Embedded point, if the chart has an embedding.
    pub fn embedded_point(&self, s: f64) -> Option<Vec3> {
        self.chart.embed(self.point_at(s))
    }

    /// Intrinsic unit conormal `(−√g φ̇, ṙ/√g)` in coordinate components.
    pub fn intrinsic_conormal(&self, p: ChartPoint, v: TangentVector) -> TangentVector {
        let g = self.chart.metric_jet_unchecked(p.r, p.phi).g;
        let sg = g.sqrt();
        TangentVector::new(-sg * v.dphi, v.dr / sg)
    }
}

/// Unit tangent in R³: through the embedding when there is one, otherwise
/// the orthonormal-frame components padded with zero.
pub fn tangent_vector_3d(chart: &SurfaceChart, p: ChartPoint, v: TangentVector) -> Vec3 {
    match chart.push_forward(p, v) {
        Some(w) => w,
        None => {
            let e = chart.to_orthonormal(p, v);
            [e[0], e[1], 0.0]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TantrixJump {
    pub s: f64,
    pub left: Vec3,
    pub right: Vec3,
    /// Great-circle distance between the one-sided tangents.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tantrix {
    pub s: Vec<f64>,
    pub values: Vec<Vec3>,
    pub jumps: Vec<TantrixJump>,
    pub junction: Option<TantrixJump>,
}

pub fn tantrix_of(curve: &SampledCurve) -> Tantrix {
    let chart = &curve.chart;
    let values = curve
        .points
        .iter()
        .zip(&curve.tangents)
        .map(|(p, v)| tangent_vector_3d(chart, *p, *v))
        .collect();
    let to_jump = |j: &JumpRecord| {
        let left = tangent_vector_3d(chart, j.point, j.left);
        let right = tangent_vector_3d(chart, j.point, j.right);
        TantrixJump {
            s: j.s,
            left,
            right,
            angle: crate::numeric::angle_between(left, right),
        }
    };
    Tantrix {
        s: curve.grid.clone(),
        values,
        jumps: curve.jumps.iter().map(to_jump).collect(),
        junction: curve.junction.as_ref().map(to_jump),
    }
}

/// Darboux frame `(t, n, u)` with `u = n × t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub t: Vec3,
    pub n: Vec3,
    pub u: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxFrames {
    pub nodes: Vec<FrameSample>,
    /// Frames for both one-sided tangents at each jump (junction last).
    pub jumps: Vec<(f64, FrameSample, FrameSample)>,
}

pub fn frame_at(chart: &SurfaceChart, p: ChartPoint, v: TangentVector) -> FrameSample {
    match chart.normal(p) {
        Some(n) => {
            let t = tangent_vector_3d(chart, p, v);
            FrameSample { t, n, u: cross(n, t) }
        }
        None => {
            let e = chart.to_orthonormal(p, v);
            FrameSample {
                t: [e[0], e[1], 0.0],
                n: [0.0, 0.0, 1.0],
                u: [-e[1], e[0], 0.0],
            }
        }
    }
}

/// Frames along the curve. Charts without an embedding get the intrinsic
/// frame in orthonormal components with `n = e₃`.
pub fn darboux_frame(curve: &SampledCurve) -> DarbouxFrames {
    let chart = &curve.chart;
    DarbouxFrames {
        nodes: curve
            .points
            .iter()
            .zip(&curve.tangents)
            .map(|(p, v)| frame_at(chart, *p, *v))
            .collect(),
        jumps: curve
            .all_jumps()
            .map(|j| (j.s, frame_at(chart, j.point, j.left), frame_at(chart, j.point, j.right)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, PI};

    #[test]
    fn parallel_length_and_tantrix() {
        let c = parallel(FRAC_PI_3, 256).unwrap();
        assert_abs_diff_eq!(c.length, PI * 3f64.sqrt(), epsilon = 1e-12);
        assert!(c.closed);
        assert!(c.jumps.is_empty() && c.junction.is_none());
        let t = tantrix_of(&c);
        for (s, v) in t.s.iter().zip(&t.values) {
            let phi = s / FRAC_PI_3.sin();
            assert_abs_diff_eq!(v[0], -phi.sin(), epsilon = 1e-9);
            assert_abs_diff_eq!(v[1], phi.cos(), epsilon = 1e-9);
            assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-12);
        }
        let f = darboux_frame(&c);
        for (frame, p) in f.nodes.iter().zip(&c.points) {
            // u = −e_θ
            let (cr, sr) = (p.r.cos(), p.r.sin());
            let e_theta = [cr * p.phi.cos(), cr * p.phi.sin(), -sr];
            for k in 0..3 {
                assert_abs_diff_eq!(frame.u[k], -e_theta[k], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn geodesic_piece_grid() {
        let chart = SurfaceChart::sphere();
        let arc = chart
            .geodesic_connect(ChartPoint::new(1.0, 0.0), ChartPoint::new(1.0 + 1.0, 0.0))
            .unwrap();
        let c = arc_length_param(&chart, vec![CurvePiece::Geodesic(arc)], 100).unwrap();
        assert_abs_diff_eq!(c.length, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.spacing(), 0.01, epsilon = 1e-15);
        assert!(!c.closed);
    }

    #[test]
    fn polygon_jumps_at_vertices() {
        let c = octant_triangle(300).unwrap();
        assert_eq!(c.jumps.len(), 2);
        let j = c.junction.unwrap();
        assert_abs_diff_eq!(j.turn, PI / 2.0, epsilon = 1e-12);
        for jr in &c.jumps {
            assert_abs_diff_eq!(jr.turn, PI / 2.0, epsilon = 1e-12);
        }
        let t = tantrix_of(&c);
        for tj in &t.jumps {
            assert_abs_diff_eq!(tj.angle, PI / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gap_is_reported() {
        let chart = SurfaceChart::plane();
        let a = chart.geodesic_connect(ChartPoint::new(0.0, 0.0), ChartPoint::new(1.0, 0.0)).unwrap();
        let b = chart.geodesic_connect(ChartPoint::new(1.0, 0.5), ChartPoint::new(2.0, 0.5)).unwrap();
        let err = arc_length_param(&chart, vec![CurvePiece::Geodesic(a), CurvePiece::Geodesic(b)], 64).unwrap_err();
        assert!(matches!(err, GeomError::Gap { index: 0, .. }));
    }

    #[test]
    fn straight_segment_has_constant_tantrix() {
        let chart = SurfaceChart::plane();
        let c = chart_smooth(&chart, "1 + 2*t", "3*t", 0.0, 1.0, 64).unwrap();
        let t = tantrix_of(&c);
        assert!(t.jumps.is_empty());
        for v in &t.values {
            assert_abs_diff_eq!(v[0], 2.0 / 13f64.sqrt(), epsilon = 1e-12);
        }
    }
}
