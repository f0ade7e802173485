//! Parallel transport along curves and the transport angle Θ.
//!
//! `Θ(s)` is the signed angle from the transported unit field `X` to the
//! tangent `τ`, measured in the orthonormal frame `(∂_r, ∂_φ/√g)` with
//! counterclockwise positive. On smooth stretches `Θ̇ = κ_g`; at a corner Θ
//! jumps by the signed turning angle of τ.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::curve::{Jet, SampledCurve};
use crate::error::{GeomError, Result};
use crate::numeric::{derivative_samples, rk4_step, signed_angle_2d, wrap_pi};
use crate::polygonal::{signed_turning, GeodesicPolygonal};
use crate::surface::{ChartKind, SurfaceChart, TangentVector};

/// Components of `X` in the orthonormal frame (on the sphere `e_θ`, `e_φ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportState {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSeries {
    pub grid: Vec<f64>,
    pub states: Vec<TransportState>,
}

impl TransportSeries {
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|x| (x.alpha * x.alpha + x.beta * x.beta - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// An angle stored as a principal value in (−π, π] plus whole turns, so
/// re-lifting never perturbs its cosine and sine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedAngle {
    pub principal: f64,
    pub turns: i64,
}

impl LiftedAngle {
    pub fn value(&self) -> f64 {
        self.principal + TAU * self.turns as f64
    }

    /// Lift of `principal` closest to `near`.
    pub fn near(principal: f64, near: f64) -> Self {
        LiftedAngle {
            principal,
            turns: ((near - principal) / TAU).round() as i64,
        }
    }

    pub fn from_value(x: f64) -> Self {
        Self::near(wrap_pi(x), x)
    }

    /// Cosine and sine from the principal value, independent of the lift.
    pub fn cos_sin(&self) -> (f64, f64) {
        (self.principal.cos(), self.principal.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleJump {
    pub s: f64,
    pub minus: f64,
    pub plus: f64,
    /// Signed turn as computed, free of the rounding in `plus − minus`.
    pub turn: f64,
}

impl AngleJump {
    pub fn new(s: f64, minus: f64, turn: f64) -> Self {
        AngleJump { s, minus, plus: minus + turn, turn }
    }

    pub fn size(&self) -> f64 {
        self.turn
    }
}

/// Sampled BV angle function.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries {
    pub grid: Vec<f64>,
    /// Continuous representative between jumps; right limit at a jump node,
    /// left limit at the last node.
    pub values: Vec<LiftedAngle>,
    pub jumps: Vec<AngleJump>,
    /// Cantor-part mass and the parameter intervals that carry it.
    pub singular_total: Option<f64>,
    pub singular_intervals: Vec<(f64, f64)>,
    /// Signed jump at the closing point `s = 0 ≡ L` of a closed curve.
    pub closing_jump: Option<f64>,
}

/// Variation of an angle series split by structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleVariation {
    pub ac: f64,
    pub jump: f64,
    pub cantor: f64,
}

impl AngleVariation {
    pub fn total(&self) -> f64 {
        self.ac + self.jump + self.cantor
    }
}

impl AngleSeries {
    pub fn value_list(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.value()).collect()
    }

    /// Evaluation between nodes by linear interpolation on each side of any
    /// jump; right-continuous at jumps.
    pub fn value_at(&self, s: f64) -> f64 {
        let g = &self.grid;
        let n = g.len() - 1;
        let i = g.partition_point(|&x| x <= s).saturating_sub(1).min(n - 1);
        let (a, b) = (g[i], g[i + 1]);
        let va = self.values[i].value();
        let mut vb = self.values[i + 1].value();
        let k = self.jumps.partition_point(|j| j.s <= a);
        if let Some(j) = self.jumps.get(k) {
            if j.s < b {
                return if s < j.s {
                    lerp(a, va, j.s, j.minus, s)
                } else {
                    lerp(j.s, j.plus, b, vb, s)
                };
            }
            if j.s == b && i + 1 < n {
                vb = j.minus;
            }
        }
        lerp(a, va, b, vb, s)
    }

    fn in_singular(&self, a: f64, b: f64) -> bool {
        self.singular_intervals.iter().any(|&(lo, hi)| a >= lo && b <= hi)
    }

    /// Total variation split into absolutely continuous, jump and Cantor
    /// parts. The absolutely continuous part is a partition sum over the
    /// grid outside singular intervals.
    pub fn variation(&self) -> AngleVariation {
        let mut ac = 0.0;
        let mut k = 0;
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            if self.in_singular(a, b) {
                while k < self.jumps.len() && self.jumps[k].s < b {
                    k += 1;
                }
                continue;
            }
            let mut left_v = self.values[i].value();
            while k < self.jumps.len() && self.jumps[k].s < b {
                let j = self.jumps[k];
                if j.s > a {
                    ac += (j.minus - left_v).abs();
                    left_v = j.plus;
                }
                k += 1;
            }
            let mut right_v = self.values[i + 1].value();
            if let Some(j) = self.jumps.get(k) {
                if j.s == b && i + 1 < self.grid.len() - 1 {
                    right_v = j.minus;
                }
            }
            ac += (right_v - left_v).abs();
        }
        let jump = self.jumps.iter().map(|j| j.size().abs()).fold(0.0, |a, b| a + b)
            + self.closing_jump.map_or(0.0, f64::abs);
        AngleVariation {
            ac,
            jump,
            cantor: self.singular_total.unwrap_or(0.0),
        }
    }
}

fn lerp(a: f64, va: f64, b: f64, vb: f64, s: f64) -> f64 {
    if b == a {
        return vb;
    }
    va + (vb - va) * (s - a) / (b - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportBackend {
    /// `α̇ = cos θ φ̇ β`, `β̇ = −cos θ φ̇ α` in the sphere frame.
    SphereFrame,
    /// Covariant constancy in coordinate components with the Christoffel
    /// symbols of the chart.
    Covariant,
}

impl TransportBackend {
    pub fn default_for(chart: &SurfaceChart) -> Self {
        if matches!(chart.kind, ChartKind::Sphere) {
            TransportBackend::SphereFrame
        } else {
            TransportBackend::Covariant
        }
    }
}

fn unit_check(chart: &SurfaceChart, jet: &Jet, x0: TangentVector) -> Result<()> {
    let norm = chart.speed(jet.point, x0);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(GeomError::InvalidInput(format!(
            "initial vector must have unit length, got {norm}"
        )));
    }
    Ok(())
}

/// Largest rotation of the transported field per RK4 step. The norm drift
/// is set by this bound rather than by the grid; 0.002 keeps it near 1e-12
/// even where the Christoffel terms blow up close to the pole.
const MAX_STEP_ROTATION: f64 = 0.002;

/// Bound on how fast the transported field turns in coordinates, plus the
/// rate at which the curve itself bends, which drives the coefficients.
fn rotation_rate(chart: &SurfaceChart, jet: &Jet) -> f64 {
    let m = chart.metric_jet_unchecked(jet.point.r, jet.point.phi);
    let sg = m.g.sqrt();
    let turning = (m.g_r.abs() * (jet.vel.dr.abs() + sg * jet.vel.dphi.abs()) + m.g_phi.abs() * jet.vel.dphi.abs())
        / (2.0 * m.g);
    turning + jet.acc.dr.hypot(sg * jet.acc.dphi)
}

fn sphere_rhs(jet: &Jet, y: &[f64; 2]) -> [f64; 2] {
    let w = jet.point.r.cos() * jet.vel.dphi;
    [w * y[1], -w * y[0]]
}

fn covariant_rhs(chart: &SurfaceChart, jet: &Jet, y: &[f64; 2]) -> [f64; 2] {
    let m = chart.metric_jet_unchecked(jet.point.r, jet.point.phi);
    let (rd, pd) = (jet.vel.dr, jet.vel.dphi);
    [
        0.5 * m.g_r * pd * y[1],
        -(m.g_r / (2.0 * m.g)) * (rd * y[1] + pd * y[0]) - (m.g_phi / (2.0 * m.g)) * pd * y[1],
    ]
}

/// Orthonormal components of the transported field from the backend state.
fn state_to_frame(chart: &SurfaceChart, backend: TransportBackend, jet: &Jet, y: &[f64; 2]) -> [f64; 2] {
    match backend {
        TransportBackend::SphereFrame => *y,
        TransportBackend::Covariant => chart.to_orthonormal(jet.point, TangentVector::new(y[0], y[1])),
    }
}

fn principal_theta(chart: &SurfaceChart, x: [f64; 2], jet: &Jet) -> f64 {
    signed_angle_2d(x, chart.to_orthonormal(jet.point, jet.vel))
}

/// Parallel transport along a curve with corners and singular pieces.
///
/// `X` is continuous at corners, so Θ jumps there by the signed turning
/// angle of τ. The initial angle is measured against `τ(0+)`.
pub fn transport_curve(
    curve: &SampledCurve,
    x0: TangentVector,
    backend: TransportBackend,
) -> Result<(TransportSeries, AngleSeries)> {
    let chart = &curve.chart;
    if backend == TransportBackend::SphereFrame && !matches!(chart.kind, ChartKind::Sphere) {
        return Err(GeomError::Unsupported(
            "the sphere-frame transport backend needs the sphere chart".into(),
        ));
    }
    let first = curve.pieces[0].jet(chart, 0.0);
    unit_check(chart, &first, x0)?;

    let n = curve.n();
    let mut states = vec![TransportState { alpha: 0.0, beta: 0.0 }; n + 1];
    let mut values = vec![LiftedAngle { principal: 0.0, turns: 0 }; n + 1];
    let mut jumps = Vec::new();
    let mut singular_intervals = Vec::new();
    let mut singular_total = 0.0;

    let mut y = match backend {
        TransportBackend::SphereFrame => chart.to_orthonormal(first.point, x0),
        TransportBackend::Covariant => [x0.dr, x0.dphi],
    };
    let x = state_to_frame(chart, backend, &first, &y);
    let mut theta = principal_theta(chart, x, &first);

    let mut node = 0usize;
    for (k, piece) in curve.pieces.iter().enumerate() {
        let offset = curve.offsets[k];
        let len = piece.length();
        if piece.is_singular() {
            singular_intervals.push((offset, offset + len));
            singular_total += piece.singular_mass();
        }
        let start = piece.jet(chart, 0.0);
        if k > 0 {
            // corner: Θ jumps by the turn of τ
            let prev = &curve.pieces[k - 1];
            let left = prev.jet(chart, prev.length());
            let turn = signed_angle_2d(
                chart.to_orthonormal(start.point, left.vel),
                chart.to_orthonormal(start.point, start.vel),
            );
            if turn.abs() > crate::curve::JUMP_THRESHOLD {
                jumps.push(AngleJump::new(offset, theta, turn));
            }
            theta += turn;
        }
        // step points: piece start, nodes inside the piece, piece end
        let mut points: Vec<(f64, Option<usize>)> = Vec::new();
        points.push((0.0, None));
        while node <= n && (curve.piece_map[node] == k) {
            let local = (curve.grid[node] - offset).clamp(0.0, len);
            if local == 0.0 {
                points[0].1 = Some(node);
            } else {
                points.push((local, Some(node)));
            }
            node += 1;
        }
        if points.last().unwrap().0 < len {
            points.push((len, None));
        }
        if let Some(i) = points[0].1 {
            record(chart, backend, &start, &y, theta, i, &mut states, &mut values);
        }
        for w in points.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let rhs = |s: f64, y: &[f64; 2]| {
                let jet = piece.jet(chart, s);
                match backend {
                    TransportBackend::SphereFrame => sphere_rhs(&jet, y),
                    TransportBackend::Covariant => covariant_rhs(chart, &jet, y),
                }
            };
            let jet = piece.jet(chart, b);
            let rate = rotation_rate(chart, &piece.jet(chart, a)).max(rotation_rate(chart, &jet));
            let m = ((rate * (b - a) / MAX_STEP_ROTATION).ceil() as usize).clamp(1, 1024);
            let h = (b - a) / m as f64;
            for k in 0..m {
                let s0 = if k == 0 { a } else { a + k as f64 * h };
                let step = if k + 1 == m { b - s0 } else { h };
                y = rk4_step(&rhs, s0, &y, step);
            }
            let x = state_to_frame(chart, backend, &jet, &y);
            let p = principal_theta(chart, x, &jet);
            theta += wrap_pi(p - wrap_pi(theta));
            if let Some(i) = w[1].1 {
                record(chart, backend, &jet, &y, theta, i, &mut states, &mut values);
            }
        }
    }
    if node <= n {
        return Err(GeomError::InvalidInput("grid nodes not covered by the curve pieces".into()));
    }
    let closing_jump = curve.junction.map(|j| j.turn);
    let series = AngleSeries {
        grid: curve.grid.clone(),
        values,
        jumps,
        singular_total: (!singular_intervals.is_empty()).then_some(singular_total),
        singular_intervals,
        closing_jump,
    };
    Ok((
        TransportSeries {
            grid: curve.grid.clone(),
            states,
        },
        series,
    ))
}

#[allow(clippy::too_many_arguments)]
fn record(
    chart: &SurfaceChart,
    backend: TransportBackend,
    jet: &Jet,
    y: &[f64; 2],
    theta: f64,
    i: usize,
    states: &mut [TransportState],
    values: &mut [LiftedAngle],
) {
    let x = state_to_frame(chart, backend, jet, y);
    states[i] = TransportState { alpha: x[0], beta: x[1] };
    values[i] = LiftedAngle::near(principal_theta(chart, x, jet), theta);
}

/// Transport along a curve without interior corners.
pub fn transport_smooth(
    curve: &SampledCurve,
    x0: TangentVector,
    backend: TransportBackend,
) -> Result<(TransportSeries, AngleSeries)> {
    if !curve.jumps.is_empty() {
        return Err(GeomError::InvalidInput(format!(
            "curve has {} interior corners; use transport_curve or transport_polygonal",
            curve.jumps.len()
        )));
    }
    transport_curve(curve, x0, backend)
}

/// Angle series of a geodesic polygonal on the curve parameter grid: Θ is
/// constant on each arc (parameterized with constant speed over its vertex
/// interval) and jumps by the signed turning angle at each vertex.
pub fn transport_polygonal(poly: &GeodesicPolygonal, x0: TangentVector, grid: &[f64]) -> Result<AngleSeries> {
    let chart = &poly.chart;
    let turns = signed_turning(poly)?;
    let first = &poly.arcs[0];
    let norm = chart.speed(first.start, x0);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(GeomError::InvalidInput(format!(
            "initial vector must have unit length, got {norm}"
        )));
    }
    let theta0 = signed_angle_2d(
        chart.to_orthonormal(first.start, x0),
        chart.to_orthonormal(first.start, first.direction),
    );
    let n_arcs = poly.arcs.len();
    let mut arc_theta = Vec::with_capacity(n_arcs);
    let mut theta = theta0;
    arc_theta.push(LiftedAngle::from_value(theta));
    for &turn in &turns[..n_arcs - 1] {
        theta += turn;
        arc_theta.push(LiftedAngle::from_value(theta));
    }
    // jump ends are the stored values, so the series has no spurious ac part
    let jumps = (1..n_arcs)
        .map(|k| AngleJump {
            s: poly.vertices[k].s,
            minus: arc_theta[k - 1].value(),
            plus: arc_theta[k].value(),
            turn: turns[k - 1],
        })
        .collect();
    let starts: Vec<f64> = poly.vertices.iter().map(|v| v.s).take(n_arcs).collect();
    let last = grid.len() - 1;
    let values = grid
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let k = if i == last {
                n_arcs - 1
            } else {
                starts.partition_point(|&x| x <= s).saturating_sub(1)
            };
            arc_theta[k]
        })
        .collect();
    Ok(AngleSeries {
        grid: grid.to_vec(),
        values,
        jumps,
        singular_total: None,
        singular_intervals: Vec::new(),
        closing_jump: poly.closed.then(|| turns[turns.len() - 1]),
    })
}

/// Replaces every jump by its representative in (−π, π]; an exact jump of
/// π becomes +π. Values after a jump move by whole turns only.
pub fn optimal_lift(series: &AngleSeries) -> AngleSeries {
    let mut out = series.clone();
    let mut shift: i64 = 0;
    let mut new_jumps = Vec::with_capacity(series.jumps.len());
    let mut k = 0;
    for (i, &s) in series.grid.iter().enumerate() {
        while k < series.jumps.len() && series.jumps[k].s <= s && !(i == series.grid.len() - 1 && series.jumps[k].s == s) {
            let j = series.jumps[k];
            let minus = j.minus + TAU * shift as f64;
            let d = j.size();
            let reduced = wrap_pi(d);
            shift += ((reduced - d) / TAU).round() as i64;
            if reduced != 0.0 {
                new_jumps.push(AngleJump::new(j.s, minus, reduced));
            }
            k += 1;
        }
        out.values[i].turns += shift;
    }
    out.jumps = new_jumps;
    out.closing_jump = series.closing_jump.map(wrap_pi);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureBackend {
    /// Numerical derivative of the transport angle.
    ThetaDot,
    /// Closed form in chart coordinates.
    ChartFormula,
    /// Closed form in sphere coordinates `(θ, φ)`.
    SphereFormula,
}

/// `κ_g = √g[(ṙφ̈ − φ̇r̈) + ½(g_r φ̇³ + 2(g_r/g) ṙ²φ̇ + (g_φ/g) ṙφ̇²)]`.
pub fn kappa_chart_formula(chart: &SurfaceChart, jet: &Jet) -> f64 {
    let m = chart.metric_jet_unchecked(jet.point.r, jet.point.phi);
    let (r1, p1, r2, p2) = (jet.vel.dr, jet.vel.dphi, jet.acc.dr, jet.acc.dphi);
    m.g.sqrt()
        * ((r1 * p2 - p1 * r2)
            + 0.5 * (m.g_r * p1.powi(3) + 2.0 * (m.g_r / m.g) * r1 * r1 * p1 + (m.g_phi / m.g) * r1 * p1 * p1))
}

/// `κ_g = sin θ(φ̈θ̇ − θ̈φ̇) + cos θ φ̇(sin²θ φ̇² + 2θ̇²)`.
pub fn kappa_sphere_formula(jet: &Jet) -> f64 {
    let (t1, p1, t2, p2) = (jet.vel.dr, jet.vel.dphi, jet.acc.dr, jet.acc.dphi);
    let (s, c) = jet.point.r.sin_cos();
    s * (p2 * t1 - t2 * p1) + c * p1 * (s * s * p1 * p1 + 2.0 * t1 * t1)
}

/// Node jets: right limits at interior corners, left limit at `s = L`.
pub fn node_jets(curve: &SampledCurve) -> Vec<Jet> {
    let n = curve.n();
    curve
        .grid
        .iter()
        .enumerate()
        .map(|(i, &s)| if i == n { curve.jet_left(s) } else { curve.jet(s) })
        .collect()
}

/// Index runs of grid nodes separated by interior jumps.
fn smooth_runs(grid: &[f64], jump_s: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for &s in jump_s {
        let end = grid.partition_point(|&x| x < s);
        if end > start {
            runs.push((start, end));
        }
        start = end;
    }
    if start < grid.len() {
        runs.push((start, grid.len()));
    }
    runs
}

/// Geodesic curvature at every grid node.
pub fn geodesic_curvature(curve: &SampledCurve, backend: CurvatureBackend) -> Result<Vec<f64>> {
    let chart = &curve.chart;
    match backend {
        CurvatureBackend::ChartFormula => Ok(node_jets(curve).iter().map(|j| kappa_chart_formula(chart, j)).collect()),
        CurvatureBackend::SphereFormula => {
            if !matches!(chart.kind, ChartKind::Sphere) {
                return Err(GeomError::Unsupported(format!(
                    "the sphere formula needs the sphere chart, not {}",
                    chart.name()
                )));
            }
            Ok(node_jets(curve).iter().map(kappa_sphere_formula).collect())
        }
        CurvatureBackend::ThetaDot => {
            let first = curve.pieces[0].jet(chart, 0.0);
            let (_, series) = transport_curve(curve, first.vel, TransportBackend::default_for(chart))?;
            let vals = series.value_list();
            let jump_s: Vec<f64> = series.jumps.iter().map(|j| j.s).collect();
            let h = curve.spacing();
            let mut out = vec![0.0; vals.len()];
            for (a, b) in smooth_runs(&curve.grid, &jump_s) {
                let d = derivative_samples(&vals[a..b], h);
                out[a..b].copy_from_slice(&d);
            }
            Ok(out)
        }
    }
}

/// Largest residual of `α̇β − αβ̇ = cos θ φ̇` over the grid, with α̇, β̇ from
/// fourth-order differences.
pub fn transport_identity_check(series: &TransportSeries, curve: &SampledCurve) -> Result<f64> {
    if !matches!(curve.chart.kind, ChartKind::Sphere) {
        return Err(GeomError::Unsupported("the transport identity is stated on the sphere chart".into()));
    }
    let jets = node_jets(curve);
    let jump_s: Vec<f64> = curve.jumps.iter().map(|j| j.s).collect();
    let h = curve.spacing();
    let alpha: Vec<f64> = series.states.iter().map(|x| x.alpha).collect();
    let beta: Vec<f64> = series.states.iter().map(|x| x.beta).collect();
    let mut worst: f64 = 0.0;
    for (a, b) in smooth_runs(&curve.grid, &jump_s) {
        let da = derivative_samples(&alpha[a..b], h);
        let db = derivative_samples(&beta[a..b], h);
        for i in a..b {
            let lhs = da[i - a] * beta[i] - alpha[i] * db[i - a];
            let rhs = jets[i].point.r.cos() * jets[i].vel.dphi;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// L¹ distance of two angle series over their common parameter range.
pub fn l1_distance(a: &AngleSeries, b: &AngleSeries) -> f64 {
    let mut cuts: Vec<f64> = a.grid.iter().chain(b.grid.iter()).copied().collect();
    cuts.extend(a.jumps.iter().map(|j| j.s));
    cuts.extend(b.jumps.iter().map(|j| j.s));
    let lo = a.grid[0].max(b.grid[0]);
    let hi = a.grid[a.grid.len() - 1].min(b.grid[b.grid.len() - 1]);
    cuts.retain(|&s| s >= lo && s <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (a.value_at(m) - b.value_at(m)).abs() * (w[1] - w[0])
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::generators::*;
    use crate::polygonal::{inscribe, rotation_of};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn parallel_angle_is_linear() {
        let c = parallel(FRAC_PI_3, 4096).unwrap();
        let x0 = c.tangents[0];
        for backend in [TransportBackend::SphereFrame, TransportBackend::Covariant] {
            let (st, series) = transport_smooth(&c, x0, backend).unwrap();
            let err = series
                .value_list()
                .iter()
                .zip(&c.grid)
                .map(|(v, s)| (v - s / 3f64.sqrt()).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "{backend:?}: {err}");
            assert!(st.max_norm_drift() < 1e-12);
        }
    }

    #[test]
    fn great_circle_keeps_its_tangent() {
        let c = parallel(FRAC_PI_2, 512).unwrap();
        let (_, series) = transport_smooth(&c, c.tangents[0], TransportBackend::SphereFrame).unwrap();
        for v in series.value_list() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_field_breaks_identity() {
        let c = parallel(FRAC_PI_3, 512).unwrap();
        let frozen = TransportSeries {
            grid: c.grid.clone(),
            states: vec![TransportState { alpha: 0.0, beta: 1.0 }; c.grid.len()],
        };
        let res = transport_identity_check(&frozen, &c).unwrap();
        assert_abs_diff_eq!(res, FRAC_PI_3.cos() / FRAC_PI_3.sin(), epsilon = 1e-12);
    }

    #[test]
    fn polygonal_variation_equals_rotation() {
        let c = parallel(FRAC_PI_3, 1024).unwrap();
        let part: Vec<f64> = (0..16).map(|i| c.length * i as f64 / 16.0).collect();
        let p = inscribe(&c, &part).unwrap();
        let series = transport_polygonal(&p, c.tangents[0], &c.grid).unwrap();
        let v = series.variation();
        assert_eq!(v.jump, rotation_of(&p).unwrap());
        assert_eq!(v.ac, 0.0);
    }

    #[test]
    fn octant_holonomy() {
        let c = octant_triangle(600).unwrap();
        let p = inscribe(&c, &c.offsets[..3]).unwrap();
        let series = transport_polygonal(&p, p.arcs[0].direction, &c.grid).unwrap();
        let span = series.value_list().last().unwrap() - series.value_list()[0];
        assert_abs_diff_eq!(span + series.closing_jump.unwrap(), 1.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn lifting_reduces_jumps() {
        let grid: Vec<f64> = (0..=4).map(|i| i as f64).collect();
        let series = AngleSeries {
            grid: grid.clone(),
            values: [0.0, 0.0, 1.5 * PI, 1.5 * PI + FRAC_PI_3, 1.5 * PI + FRAC_PI_3 + TAU]
                .iter()
                .map(|&x| LiftedAngle::from_value(x))
                .collect(),
            jumps: vec![
                AngleJump::new(1.5, 0.0, 1.5 * PI),
                AngleJump::new(2.5, 1.5 * PI, FRAC_PI_3),
                AngleJump::new(3.5, 1.5 * PI + FRAC_PI_3, TAU),
            ],
            singular_total: None,
            singular_intervals: vec![],
            closing_jump: Some(PI),
        };
        let lifted = optimal_lift(&series);
        let sizes: Vec<f64> = lifted.jumps.iter().map(|j| j.size()).collect();
        assert_eq!(sizes.len(), 2);
        assert_abs_diff_eq!(sizes[0], -FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(sizes[1], FRAC_PI_3, epsilon = 1e-12);
        assert_eq!(lifted.closing_jump, Some(PI));
        for (a, b) in series.values.iter().zip(&lifted.values) {
            assert_eq!(a.principal.to_bits(), b.principal.to_bits());
        }
    }

    #[test]
    fn curvature_backends_on_parallel() {
        let c = parallel(FRAC_PI_4, 2048).unwrap();
        for b in [CurvatureBackend::ChartFormula, CurvatureBackend::SphereFormula, CurvatureBackend::ThetaDot] {
            for k in geodesic_curvature(&c, b).unwrap() {
                assert_abs_diff_eq!(k, 1.0, epsilon = 1e-6);
            }
        }
        let flat = planar_circle(2.0, 256).unwrap();
        assert!(geodesic_curvature(&flat, CurvatureBackend::SphereFormula).is_err());
        for k in geodesic_curvature(&flat, CurvatureBackend::ChartFormula).unwrap() {
            assert_abs_diff_eq!(k, 0.5, epsilon = 1e-9);
        }
    }
}
