//! Geodesic polygonals inscribed in curves, their rotation, and refinement
//! schedules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{tangent_vector_3d, SampledCurve};
use crate::error::{GeomError, Result};
use crate::numeric::{angle_between, great_circle_distance, normalize, signed_angle_2d, sub, Vec3};
use crate::surface::{ChartPoint, GeodesicArc, SurfaceChart};

/// Largest number of samples per arc used for the modulus.
pub const MODULUS_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub s: f64,
    pub point: ChartPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPolygonal {
    pub chart: SurfaceChart,
    pub vertices: Vec<Vertex>,
    /// `arcs[i]` joins vertex `i` to vertex `i + 1` (to vertex 0 for the
    /// closing arc of a closed polygonal).
    pub arcs: Vec<GeodesicArc>,
    pub closed: bool,
    /// Length of the source curve, used for the closing gap in `mesh_of`.
    pub curve_length: f64,
}

impl GeodesicPolygonal {
    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn length(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum()
    }

    /// Parameter intervals `[sᵢ, sᵢ₊₁]` cut by consecutive vertices; the
    /// closing interval of a closed polygonal ends at `L`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let n = self.vertices.len();
        let mut out: Vec<(f64, f64)> = self.vertices.windows(2).map(|w| (w[0].s, w[1].s)).collect();
        if self.closed {
            out.push((self.vertices[n - 1].s, self.curve_length));
        }
        out
    }
}

/// Normalizes a partition for `curve`: snaps to grid nodes or breakpoints,
/// adds the basepoint (and the endpoint of an open curve), and checks
/// strict monotonicity.
pub fn normalize_partition(curve: &SampledCurve, partition: &[f64]) -> Result<Vec<f64>> {
    let l = curve.length;
    let bps = curve.breakpoints();
    let mut out: Vec<f64> = Vec::with_capacity(partition.len() + 2);
    for (i, &s) in partition.iter().enumerate() {
        if !(s >= -1e-12 * l && s <= l * (1.0 + 1e-12)) {
            return Err(GeomError::InvalidInput(format!(
                "partition point {i} = {s} lies outside [0, {l}]"
            )));
        }
        if i > 0 && !(s > partition[i - 1]) {
            return Err(GeomError::InvalidInput(format!(
                "partition must be strictly increasing (index {i})"
            )));
        }
        out.push(curve.snap(s, &bps));
    }
    if out.first() != Some(&0.0) {
        out.insert(0, 0.0);
    }
    if curve.closed {
        while out.len() > 1 && *out.last().unwrap() >= l {
            out.pop();
        }
    } else if *out.last().unwrap() < l {
        out.push(l);
    }
    for i in 1..out.len() {
        if !(out[i] > out[i - 1]) {
            return Err(GeomError::InvalidInput(format!(
                "partition points {} and {} collapse onto the same curve node",
                i - 1,
                i
            )));
        }
    }
    if out.len() < 2 {
        return Err(GeomError::InvalidInput("partition needs at least two distinct points".into()));
    }
    Ok(out)
}

/// Inscribes the geodesic polygonal through the curve points at the
/// (snapped) partition parameters.
pub fn inscribe(curve: &SampledCurve, partition: &[f64]) -> Result<GeodesicPolygonal> {
    let params = normalize_partition(curve, partition)?;
    let chart = &curve.chart;
    let vertices: Vec<Vertex> = params
        .iter()
        .map(|&s| Vertex {
            s,
            point: if s >= curve.length { curve.jet_left(s).point } else { curve.point_at(s) },
        })
        .collect();
    let n = vertices.len();
    let pairs: Vec<(usize, usize)> = if curve.closed {
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    } else {
        (0..n - 1).map(|i| (i, i + 1)).collect()
    };
    let arcs = pairs
        .par_iter()
        .map(|&(i, j)| {
            chart
                .geodesic_connect(vertices[i].point, vertices[j].point)
                .map_err(|e| GeomError::Connection {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicPolygonal {
        chart: chart.clone(),
        vertices,
        arcs,
        closed: curve.closed,
        curve_length: curve.length,
    })
}

pub fn mesh_of(poly: &GeodesicPolygonal) -> f64 {
    poly.intervals().iter().map(|(a, b)| b - a).fold(0.0, f64::max)
}

/// Number of samples used for the diameter of the curve arc over `[a, b]`.
pub fn arc_sample_count(curve: &SampledCurve, a: f64, b: f64) -> usize {
    let nodes = ((b - a) / curve.spacing()).round() as usize + 1;
    nodes.clamp(2, MODULUS_SAMPLES)
}

/// Subsampled geodesic diameter of the curve arc over `[a, b]`.
pub fn arc_diameter(curve: &SampledCurve, a: f64, b: f64) -> Result<f64> {
    let m = arc_sample_count(curve, a, b);
    let pts: Vec<ChartPoint> = (0..m)
        .map(|k| {
            let s = a + (b - a) * k as f64 / (m - 1) as f64;
            if k == m - 1 {
                curve.jet_left(s).point
            } else {
                curve.point_at(s)
            }
        })
        .collect();
    let mut best: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            best = best.max(curve.chart.geodesic_distance(pts[i], pts[j])?);
        }
    }
    Ok(best)
}

/// Largest subsampled geodesic diameter over the arcs cut by the vertices.
pub fn modulus_of(curve: &SampledCurve, poly: &GeodesicPolygonal) -> Result<f64> {
    let ds = poly
        .intervals()
        .par_iter()
        .map(|&(a, b)| arc_diameter(curve, a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(ds.into_iter().fold(0.0, f64::max))
}

/// Signed turning angles at the corners, in the order of the vertices. For a
/// closed polygonal the corner at vertex 0 comes last.
pub fn signed_turning(poly: &GeodesicPolygonal) -> Result<Vec<f64>> {
    let chart = &poly.chart;
    for (i, a) in poly.arcs.iter().enumerate() {
        if a.length == 0.0 {
            return Err(GeomError::DegenerateCorner { index: i });
        }
    }
    let n = poly.arcs.len();
    let mut corners: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    if poly.closed {
        corners.push((n - 1, 0));
    }
    Ok(corners
        .iter()
        .map(|&(i, j)| {
            let (inc, out) = (&poly.arcs[i], &poly.arcs[j]);
            let p = out.start;
            signed_angle_2d(
                chart.to_orthonormal(p, inc.end_direction),
                chart.to_orthonormal(p, out.direction),
            )
        })
        .collect())
}

/// Rotation `κ_M(P)`: sum of the absolute turning angles.
pub fn rotation_of(poly: &GeodesicPolygonal) -> Result<f64> {
    Ok(signed_turning(poly)?.iter().map(|a| a.abs()).sum())
}

/// Sum of exterior angles of a polyline in R³.
pub fn euclidean_rotation_of(points: &[Vec3], closed: bool) -> Result<f64> {
    let n = points.len();
    let mut segs = Vec::with_capacity(n);
    let count = if closed { n } else { n.saturating_sub(1) };
    for i in 0..count {
        let d = sub(points[(i + 1) % n], points[i]);
        if d.iter().all(|x| *x == 0.0) {
            return Err(GeomError::RepeatedVertex { index: (i + 1) % n });
        }
        segs.push(d);
    }
    let mut total = 0.0;
    for w in segs.windows(2) {
        total += angle_between(w[0], w[1]);
    }
    if closed && segs.len() > 1 {
        total += angle_between(segs[segs.len() - 1], segs[0]);
    }
    Ok(total)
}

/// Embedded vertices of the polygonal, if the chart has an embedding.
pub fn chord_polyline(poly: &GeodesicPolygonal) -> Option<Vec<Vec3>> {
    poly.vertices.iter().map(|v| poly.chart.embed(v.point)).collect()
}

/// Euclidean total curvature of the embedded geodesic polygonal itself:
/// partition sums of the tantrix along each arc plus the corner angles.
pub fn geodesic_polygonal_tc(poly: &GeodesicPolygonal, samples_per_arc: usize) -> Result<f64> {
    let chart = &poly.chart;
    if !chart.has_embedding() {
        return Err(GeomError::Unsupported(format!(
            "the {} chart has no embedding",
            chart.name()
        )));
    }
    let m = samples_per_arc.max(2);
    let mut total = 0.0;
    let mut ends: Vec<(Vec3, Vec3)> = Vec::with_capacity(poly.arcs.len());
    for (i, arc) in poly.arcs.iter().enumerate() {
        if arc.length == 0.0 {
            return Err(GeomError::DegenerateCorner { index: i });
        }
        let tan: Vec<Vec3> = arc
            .samples(chart, m)
            .iter()
            .map(|(_, p, v)| normalize(tangent_vector_3d(chart, *p, *v)))
            .collect();
        total += tan.windows(2).map(|w| great_circle_distance(w[0], w[1])).sum::<f64>();
        ends.push((tan[0], tan[tan.len() - 1]));
    }
    let n = ends.len();
    for i in 1..n {
        total += angle_between(ends[i - 1].1, ends[i].0);
    }
    if poly.closed {
        total += angle_between(ends[n - 1].1, ends[0].0);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RefinementStrategy {
    UniformDoubling { initial: usize, rounds: usize },
    ModulusTargets { targets: Vec<f64> },
    RandomNested { initial: usize, rounds: usize, seed: u64 },
}

impl Default for RefinementStrategy {
    fn default() -> Self {
        RefinementStrategy::UniformDoubling { initial: 4, rounds: 6 }
    }
}

fn uniform_params(curve: &SampledCurve, n: usize) -> Vec<f64> {
    let l = curve.length;
    let mut out: Vec<f64> = (0..n).map(|i| l * i as f64 / n as f64).collect();
    if !curve.closed {
        out.push(l);
    }
    out
}

fn merge_params(curve: &SampledCurve, mut params: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    let bps = curve.breakpoints();
    params.extend_from_slice(extra);
    let mut snapped: Vec<f64> = params.into_iter().map(|s| curve.snap(s, &bps)).collect();
    snapped.sort_by(f64::total_cmp);
    snapped.dedup();
    if curve.closed {
        snapped.retain(|&s| s < curve.length);
    }
    snapped
}

/// Sequence of nested partitions with decreasing mesh. Piece junctions are
/// always included so polygonal source curves are inscribed at their corners.
pub fn refinement_schedule(curve: &SampledCurve, strategy: &RefinementStrategy) -> Result<Vec<Vec<f64>>> {
    let junctions = curve.junction_params();
    match strategy {
        RefinementStrategy::UniformDoubling { initial, rounds } => {
            if *initial < 1 || *rounds < 1 {
                return Err(GeomError::InvalidInput("uniform doubling needs initial >= 1 and rounds >= 1".into()));
            }
            let finest = initial << (rounds - 1);
            if finest > curve.n() {
                return Err(GeomError::ResolutionLimit {
                    target: curve.length / finest as f64,
                    achieved: curve.spacing(),
                });
            }
            Ok((0..*rounds)
                .map(|j| merge_params(curve, uniform_params(curve, initial << j), &junctions))
                .collect())
        }
        RefinementStrategy::RandomNested { initial, rounds, seed } => {
            if *initial < 1 || *rounds < 1 {
                return Err(GeomError::InvalidInput("random refinement needs initial >= 1 and rounds >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut current = merge_params(curve, uniform_params(curve, *initial), &junctions);
            let mut out = vec![current.clone()];
            let bps = curve.breakpoints();
            for _ in 1..*rounds {
                let mut next = current.clone();
                let mut ends = current.clone();
                ends.push(curve.length);
                for w in ends.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b - a < 1e-15 {
                        continue;
                    }
                    let s = curve.snap(rng.gen_range(a + 0.25 * (b - a)..=b - 0.25 * (b - a)), &bps);
                    if !(s > a && s < b) {
                        return Err(GeomError::ResolutionLimit {
                            target: 0.5 * (b - a),
                            achieved: curve.spacing(),
                        });
                    }
                    next.push(s);
                }
                next.sort_by(f64::total_cmp);
                next.dedup();
                if !curve.closed && next.last() != Some(&curve.length) {
                    next.push(curve.length);
                }
                current = next;
                out.push(current.clone());
            }
            Ok(out)
        }
        RefinementStrategy::ModulusTargets { targets } => {
            let mut current = merge_params(curve, uniform_params(curve, 4), &junctions);
            let bps = curve.breakpoints();
            let mut out = Vec::with_capacity(targets.len());
            for &target in targets {
                if !(target > 0.0) {
                    return Err(GeomError::InvalidInput(format!("modulus target {target} must be positive")));
                }
                loop {
                    let mut ends = current.clone();
                    if curve.closed || ends.last() != Some(&curve.length) {
                        ends.push(curve.length);
                    }
                    let mut inserted = Vec::new();
                    for w in ends.windows(2) {
                        let (a, b) = (w[0], w[1]);
                        let d = arc_diameter(curve, a, b)?;
                        if d > target {
                            let s = curve.snap(0.5 * (a + b), &bps);
                            if !(s > a && s < b) {
                                return Err(GeomError::ResolutionLimit { target, achieved: d });
                            }
                            inserted.push(s);
                        }
                    }
                    if inserted.is_empty() {
                        break;
                    }
                    current.extend(inserted);
                    current.sort_by(f64::total_cmp);
                    current.dedup();
                }
                out.push(current.clone());
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    /// Number of arcs.
    pub n: usize,
    pub mesh: f64,
    pub modulus: f64,
    pub rotation: f64,
    /// Rotation of the embedded chord polyline, when the chart is embedded.
    pub euclid_rotation: Option<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub rows: Vec<RefinementRow>,
    pub strategy: RefinementStrategy,
    /// Samples per arc used for the subsampled modulus (upper limit).
    pub modulus_samples: usize,
}

pub fn refinement_row(curve: &SampledCurve, partition: &[f64]) -> Result<RefinementRow> {
    let poly = inscribe(curve, partition)?;
    let euclid_rotation = match chord_polyline(&poly) {
        Some(pts) => Some(euclidean_rotation_of(&pts, poly.closed)?),
        None => None,
    };
    Ok(RefinementRow {
        n: poly.n_arcs(),
        mesh: mesh_of(&poly),
        modulus: modulus_of(curve, &poly)?,
        rotation: rotation_of(&poly)?,
        euclid_rotation,
        length: poly.length(),
    })
}

pub fn refinement_report(
    curve: &SampledCurve,
    strategy: &RefinementStrategy,
    extra_partitions: Vec<Vec<f64>>,
) -> Result<RefinementReport> {
    let mut partitions = refinement_schedule(curve, strategy)?;
    partitions.extend(extra_partitions);
    let rows = partitions
        .par_iter()
        .map(|p| refinement_row(curve, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(RefinementReport {
        rows,
        strategy: strategy.clone(),
        modulus_samples: MODULUS_SAMPLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::generators::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

    #[test]
    fn four_vertices_on_parallel() {
        let c = parallel(FRAC_PI_3, 256).unwrap();
        let part: Vec<f64> = (0..4).map(|i| c.length * i as f64 / 4.0).collect();
        let p = inscribe(&c, &part).unwrap();
        assert!(p.closed);
        assert_eq!(p.n_arcs(), 4);
        for a in &p.arcs {
            assert!(a.length < c.length / 4.0);
        }
        assert_abs_diff_eq!(mesh_of(&p), c.length / 4.0, epsilon = 1e-12);
        let r = rotation_of(&p).unwrap();
        assert!(r > PI);
    }

    #[test]
    fn polygon_inscribed_at_own_vertices_is_fixed_point() {
        let c = octant_triangle(300).unwrap();
        let p = inscribe(&c, &c.offsets[..3]).unwrap();
        for (a, piece) in p.arcs.iter().zip(&c.pieces) {
            let crate::curve::CurvePiece::Geodesic(orig) = piece else { panic!() };
            assert_abs_diff_eq!(a.direction.dr, orig.direction.dr, epsilon = 1e-12);
            assert_abs_diff_eq!(a.direction.dphi, orig.direction.dphi, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(rotation_of(&p).unwrap(), 1.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn flat_square_rotation() {
        let c = flat_square([2.0, 0.0], 0.2, 400).unwrap();
        let p = inscribe(&c, &c.offsets[..4]).unwrap();
        assert_abs_diff_eq!(rotation_of(&p).unwrap(), TAU, epsilon = 1e-12);
        let sq = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert_abs_diff_eq!(euclidean_rotation_of(&sq, true).unwrap(), TAU, epsilon = 1e-12);
        let rep = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(matches!(euclidean_rotation_of(&rep, false), Err(GeomError::RepeatedVertex { index: 1 })));
    }

    #[test]
    fn modulus_of_great_circle_arc() {
        let chart = SurfaceChart::sphere();
        let c = geodesic_polygon(
            &chart,
            &[ChartPoint::new(FRAC_PI_2, 0.0), ChartPoint::new(FRAC_PI_2, 2.0)],
            false,
            512,
        )
        .unwrap();
        let p = inscribe(&c, &[0.0, c.length]).unwrap();
        assert_abs_diff_eq!(modulus_of(&c, &p).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_schedule_counts() {
        let c = parallel(FRAC_PI_3, 256).unwrap();
        let parts = refinement_schedule(&c, &RefinementStrategy::UniformDoubling { initial: 4, rounds: 5 }).unwrap();
        let counts: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        assert_eq!(counts, vec![4, 8, 16, 32, 64]);
        for w in parts.windows(2) {
            assert!(w[0].iter().all(|s| w[1].contains(s)));
        }
    }

    #[test]
    fn modulus_targets_are_met() {
        let c = parallel(FRAC_PI_3, 1024).unwrap();
        let targets = vec![0.5, 0.25];
        let parts = refinement_schedule(&c, &RefinementStrategy::ModulusTargets { targets: targets.clone() }).unwrap();
        for (p, t) in parts.iter().zip(&targets) {
            let poly = inscribe(&c, p).unwrap();
            assert!(modulus_of(&c, &poly).unwrap() <= *t);
        }
        let err = refinement_schedule(&c, &RefinementStrategy::ModulusTargets { targets: vec![1e-5] });
        assert!(matches!(err, Err(GeomError::ResolutionLimit { .. })));
    }

    #[test]
    fn random_schedule_is_nested_and_reproducible() {
        let c = parallel(FRAC_PI_3, 4096).unwrap();
        let st = RefinementStrategy::RandomNested { initial: 4, rounds: 5, seed: 7 };
        let a = refinement_schedule(&c, &st).unwrap();
        let b = refinement_schedule(&c, &st).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[0].iter().all(|s| w[1].contains(s)));
            assert_eq!(w[1].len(), 2 * w[0].len());
        }
    }
}
