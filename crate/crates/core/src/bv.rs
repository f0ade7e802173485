//! One-dimensional BV functions given with their structure: smooth
//! segments, jump records and singular segments whose Cantor mass is known.

use serde::{Deserialize, Serialize};

use crate::curve::{tangent_vector_3d, CurvePiece, SampledCurve};
use crate::error::{GeomError, Result};
use crate::numeric::{add, compensated_sum, derivative_samples, great_circle_distance, norm, normalize, scale, simpson_samples, sub, Vec3};
use crate::surface::SurfaceChart;
use crate::transport::kappa_chart_formula;

/// Tolerance on `|value| = 1` for sphere-valued series.
const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    GreatCircle,
}

impl Metric {
    pub fn distance(self, a: Vec3, b: Vec3) -> f64 {
        match self {
            Metric::Euclidean => norm(sub(a, b)),
            Metric::GreatCircle => great_circle_distance(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Smooth,
    Singular,
}

/// Equally spaced samples over `[s0, s0 + h·(len − 1)]`, including both
/// one-sided end values.
#[derive(Debug, Clone, PartialEq)]
pub struct BvSegment {
    pub s0: f64,
    pub h: f64,
    pub values: Vec<Vec3>,
    /// Exact derivatives at the samples, when known.
    pub rates: Option<Vec<Vec3>>,
    pub kind: SegmentKind,
    /// Declared Cantor mass of a singular segment.
    pub singular_mass: f64,
}

impl BvSegment {
    pub fn smooth(s0: f64, h: f64, values: Vec<Vec3>) -> Self {
        BvSegment {
            s0,
            h,
            values,
            rates: None,
            kind: SegmentKind::Smooth,
            singular_mass: 0.0,
        }
    }

    pub fn scalar(s0: f64, h: f64, values: &[f64]) -> Self {
        Self::smooth(s0, h, values.iter().map(|&v| [v, 0.0, 0.0]).collect())
    }

    pub fn singular(s0: f64, h: f64, values: Vec<Vec3>, mass: f64) -> Self {
        BvSegment {
            kind: SegmentKind::Singular,
            singular_mass: mass,
            ..Self::smooth(s0, h, values)
        }
    }

    pub fn end(&self) -> f64 {
        self.s0 + self.h * (self.values.len() - 1) as f64
    }

    /// `∫|u'|` by composite Simpson on the rates, differentiating the
    /// samples when no rates are given.
    pub fn ac_variation(&self) -> f64 {
        let speeds: Vec<f64> = match &self.rates {
            Some(r) => r.iter().map(|v| norm(*v)).collect(),
            None => {
                let cols: Vec<Vec<f64>> = (0..3)
                    .map(|c| {
                        let comp: Vec<f64> = self.values.iter().map(|v| v[c]).collect();
                        derivative_samples(&comp, self.h)
                    })
                    .collect();
                (0..self.values.len())
                    .map(|i| norm([cols[0][i], cols[1][i], cols[2][i]]))
                    .collect()
            }
        };
        simpson_samples(&speeds, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvJump {
    pub s: f64,
    pub left: Vec3,
    pub right: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvSeries {
    pub segments: Vec<BvSegment>,
    /// Jumps between consecutive segments, in order.
    pub jumps: Vec<BvJump>,
    /// Jump at the basepoint of a closed curve.
    pub closing_jump: Option<BvJump>,
    /// Metric for jump distances and partition sums.
    pub metric: Metric,
}

impl BvSeries {
    fn check(&self) -> Result<()> {
        if self.segments.is_empty() || self.segments.iter().any(|s| s.values.is_empty()) {
            return Err(GeomError::InvalidInput("a BV series needs non-empty segments".into()));
        }
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        let all_values = self
            .segments
            .iter()
            .flat_map(|s| s.values.iter())
            .chain(self.jumps.iter().chain(&self.closing_jump).flat_map(|j| [&j.left, &j.right]));
        for v in all_values {
            if !finite(v) {
                return Err(GeomError::InvalidInput("non-finite value in BV series".into()));
            }
            if self.metric == Metric::GreatCircle && (norm(*v) - 1.0).abs() > UNIT_TOLERANCE {
                return Err(GeomError::InvalidInput(format!(
                    "great-circle metric needs unit values, got norm {}",
                    norm(*v)
                )));
            }
        }
        Ok(())
    }

    fn all_jumps(&self) -> impl Iterator<Item = &BvJump> {
        self.jumps.iter().chain(&self.closing_jump)
    }

    pub fn singular_total(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Singular)
            .map(|s| s.singular_mass)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BVBreakdown {
    pub ac: f64,
    pub jump: f64,
    pub cantor: f64,
    pub total: f64,
}

impl BVBreakdown {
    pub fn new(ac: f64, jump: f64, cantor: f64) -> Self {
        BVBreakdown {
            ac,
            jump,
            cantor,
            total: ac + jump + cantor,
        }
    }
}

/// Essential variation: quadrature of `|u'|` on smooth segments, metric
/// distance across every jump, declared mass on singular segments.
pub fn essential_variation(series: &BvSeries, metric: Metric) -> Result<f64> {
    let series = BvSeries {
        metric,
        ..series.clone()
    };
    series.check()?;
    let ac: f64 = series
        .segments
        .iter()
        .filter(|s| s.kind == SegmentKind::Smooth)
        .map(BvSegment::ac_variation)
        .fold(0.0, |a, b| a + b);
    let jump: f64 = series.all_jumps().map(|j| metric.distance(j.left, j.right)).fold(0.0, |a, b| a + b);
    Ok(ac + jump + series.singular_total())
}

/// Partition-sum variation over every `stride`-th sample of each segment
/// (segment ends always kept), plus the jumps.
pub fn partition_variation(series: &BvSeries, stride: usize) -> Result<f64> {
    series.check()?;
    let stride = stride.max(1);
    let m = series.metric;
    let mut terms = Vec::new();
    let mut prev: Option<Vec3> = None;
    for seg in &series.segments {
        let last = seg.values.len() - 1;
        let mut idx: Vec<usize> = (0..=last).step_by(stride).collect();
        if *idx.last().unwrap() != last {
            idx.push(last);
        }
        if let Some(p) = prev {
            terms.push(m.distance(p, seg.values[0]));
        }
        terms.extend(idx.windows(2).map(|w| m.distance(seg.values[w[0]], seg.values[w[1]])));
        prev = Some(seg.values[last]);
    }
    if let Some(j) = &series.closing_jump {
        terms.push(m.distance(j.left, j.right));
    }
    // compensated so that equal sums at different levels stay ordered
    Ok(compensated_sum(terms))
}

/// Partition sums at strides `2^(levels−1), …, 2, 1`; nondecreasing for
/// nested partitions.
pub fn partition_levels(series: &BvSeries, levels: usize) -> Result<Vec<f64>> {
    (0..levels)
        .rev()
        .map(|j| partition_variation(series, 1 << j))
        .collect()
}

/// AC/jump/Cantor split of the variation, cross-checked against the
/// finest partition sum.
pub fn decompose(series: &BvSeries) -> Result<BVBreakdown> {
    series.check()?;
    let ac = series
        .segments
        .iter()
        .filter(|s| s.kind == SegmentKind::Smooth)
        .map(BvSegment::ac_variation)
        .fold(0.0, |a, b| a + b);
    let jump = series.all_jumps().map(|j| series.metric.distance(j.left, j.right)).fold(0.0, |a, b| a + b);
    let out = BVBreakdown::new(ac, jump, series.singular_total());
    let measured = partition_variation(series, 1)?;
    let residual = (measured - out.total).abs();
    let tolerance = (1e-3 * out.total.max(measured)).max(1e-6);
    if residual > tolerance {
        return Err(GeomError::InconsistentStructure { residual, tolerance });
    }
    Ok(out)
}

/// Samples per piece: about `n·len/L`, even, at least 16.
fn piece_samples(curve: &SampledCurve, len: f64) -> usize {
    let m = ((curve.n() as f64 * len / curve.length).round() as usize).max(16);
    m + m % 2
}

fn tantrix_rate(chart: &SurfaceChart, jet: &crate::curve::Jet) -> Option<Vec3> {
    let j = chart.embed_jet(jet.point)?;
    let (r1, p1, r2, p2) = (jet.vel.dr, jet.vel.dphi, jet.acc.dr, jet.acc.dphi);
    let mut w = add(scale(j[1], r2), scale(j[2], p2));
    w = add(w, scale(j[3], r1 * r1));
    w = add(w, scale(j[4], 2.0 * r1 * p1));
    Some(add(w, scale(j[5], p1 * p1)))
}

/// Tantrix as a sphere-valued BV series: one segment per piece, jumps at the
/// corners, Cantor pieces as singular segments.
pub fn tantrix_series(curve: &SampledCurve) -> Result<BvSeries> {
    let chart = &curve.chart;
    let unit = |jet: &crate::curve::Jet| normalize(tangent_vector_3d(chart, jet.point, jet.vel));
    let mut segments = Vec::with_capacity(curve.pieces.len());
    for (k, piece) in curve.pieces.iter().enumerate() {
        let len = piece.length();
        let m = piece_samples(curve, len);
        let h = len / m as f64;
        let jets: Vec<_> = (0..=m).map(|i| piece.jet(chart, i as f64 * h)).collect();
        let values: Vec<Vec3> = jets.iter().map(unit).collect();
        let seg = if piece.is_singular() {
            BvSegment::singular(curve.offsets[k], h, values, piece.singular_mass())
        } else {
            let rates = if chart.has_embedding() {
                jets.iter().map(|j| tantrix_rate(chart, j)).collect::<Option<Vec<_>>>()
            } else {
                None
            };
            BvSegment {
                rates,
                ..BvSegment::smooth(curve.offsets[k], h, values)
            }
        };
        segments.push(seg);
    }
    let to_jump = |j: &crate::curve::JumpRecord| BvJump {
        s: j.s,
        left: normalize(tangent_vector_3d(chart, j.point, j.left)),
        right: normalize(tangent_vector_3d(chart, j.point, j.right)),
    };
    // only corners between pieces separate segments; record them in order
    let mut jumps = Vec::new();
    for k in 1..curve.pieces.len() {
        let s = curve.offsets[k];
        let left = segments[k - 1].values.last().copied().unwrap();
        let right = segments[k].values[0];
        match curve.jumps.iter().find(|j| j.s == s) {
            Some(j) => jumps.push(to_jump(j)),
            None if great_circle_distance(left, right) > 0.0 => jumps.push(BvJump { s, left, right }),
            None => {}
        }
    }
    Ok(BvSeries {
        segments,
        jumps,
        closing_jump: curve.junction.as_ref().map(to_jump),
        metric: Metric::GreatCircle,
    })
}

/// `F(τ) = ∫|κ_g| ds + |D^C τ| + Σ d(τ(s+), τ(s−))`. The tangential rate
/// `τ̇·u` is the geodesic curvature, integrated per smooth piece; corner
/// distances are the absolute turning angles, the closing corner included.
pub fn energy_functional(curve: &SampledCurve) -> Result<BVBreakdown> {
    let chart = &curve.chart;
    let mut ac = 0.0;
    let mut cantor = 0.0;
    for piece in &curve.pieces {
        match piece {
            _ if piece.is_singular() => cantor += piece.singular_mass(),
            CurvePiece::Geodesic(_) => {}
            _ => {
                let len = piece.length();
                let m = piece_samples(curve, len);
                let h = len / m as f64;
                let k: Vec<f64> = (0..=m)
                    .map(|i| kappa_chart_formula(chart, &piece.jet(chart, i as f64 * h)).abs())
                    .collect();
                ac += simpson_samples(&k, h);
            }
        }
    }
    let jump = curve.all_jumps().map(|j| j.turn.abs()).fold(0.0, |a, b| a + b);
    Ok(BVBreakdown::new(ac, jump, cantor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::cantor::CantorPiece;
    use crate::curve::generators::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI, TAU};

    #[test]
    fn scalar_step() {
        let series = BvSeries {
            segments: vec![BvSegment::scalar(0.0, 0.1, &[0.0; 11]), BvSegment::scalar(1.0, 0.1, &[2.5; 11])],
            jumps: vec![BvJump { s: 1.0, left: [0.0; 3], right: [2.5, 0.0, 0.0] }],
            closing_jump: None,
            metric: Metric::Euclidean,
        };
        assert_eq!(essential_variation(&series, Metric::Euclidean).unwrap(), 2.5);
        assert_eq!(decompose(&series).unwrap(), BVBreakdown::new(0.0, 2.5, 0.0));
        assert!(essential_variation(&series, Metric::GreatCircle).is_err());
    }

    #[test]
    fn cantor_function_partition_sum() {
        let c = CantorPiece::new(8);
        let series = BvSeries {
            segments: vec![BvSegment::scalar(0.0, 1.0 / c.cells() as f64, &c.v)],
            jumps: vec![],
            closing_jump: None,
            metric: Metric::Euclidean,
        };
        assert_abs_diff_eq!(partition_variation(&series, 1).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn parallel_tantrix_is_smooth() {
        let c = parallel(FRAC_PI_3, 1024).unwrap();
        let t = tantrix_series(&c).unwrap();
        let b = decompose(&t).unwrap();
        assert_abs_diff_eq!(b.ac, TAU, epsilon = 1e-8);
        assert_eq!((b.jump, b.cantor), (0.0, 0.0));
        let e = essential_variation(&t, Metric::Euclidean).unwrap();
        let g = essential_variation(&t, Metric::GreatCircle).unwrap();
        assert_eq!(e, g);
    }

    #[test]
    fn octant_tantrix_and_energy() {
        let c = octant_triangle(900).unwrap();
        let b = decompose(&tantrix_series(&c).unwrap()).unwrap();
        // great-circle arcs: |τ̇| = 1, so the AC part is the length 3π/2
        assert_abs_diff_eq!(b.ac, 1.5 * PI, epsilon = 1e-8);
        assert_abs_diff_eq!(b.jump, 1.5 * PI, epsilon = 1e-12);
        let f = energy_functional(&c).unwrap();
        assert_eq!(f.ac, 0.0);
        assert_abs_diff_eq!(f.jump, 1.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn cantor_graph_decomposition() {
        let c = cantor_graph(8, 4096).unwrap();
        let b = decompose(&tantrix_series(&c).unwrap()).unwrap();
        assert_eq!((b.ac, b.jump), (0.0, 0.0));
        assert_abs_diff_eq!(b.cantor, FRAC_PI_4, epsilon = 1e-2);
    }

    #[test]
    fn mislabelled_structure_is_rejected() {
        let c = cantor_graph(5, 1024).unwrap();
        let mut t = tantrix_series(&c).unwrap();
        t.segments[0].singular_mass = 0.1;
        assert!(matches!(decompose(&t), Err(GeomError::InconsistentStructure { .. })));
    }

    #[test]
    fn parallel_energy() {
        let c = parallel(FRAC_PI_3, 1024).unwrap();
        let f = energy_functional(&c).unwrap();
        assert_abs_diff_eq!(f.ac, PI, epsilon = 1e-10);
        assert_eq!(f.total, f.ac);
        let var = essential_variation(&tantrix_series(&c).unwrap(), Metric::GreatCircle).unwrap();
        assert!(f.total <= var);
    }
}
