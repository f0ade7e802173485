//! Surfaces described by a single chart in geodesic polar coordinates,
//! `ds² = dr² + g(r, φ) dφ²`, plus the Euclidean plane as a Cartesian chart.
//!
//! Tangent vectors are stored in coordinate components `(dr, dφ)`. Most
//! angle computations use the g-orthonormal frame `e₁ = ∂_r`,
//! `e₂ = ∂_φ / √g`, in which a vector has components `(dr, √g·dφ)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::expr::{Env, Expr, Var};
use crate::numeric::{self, cross, dot, normalize, rk4_step, scale, Vec3};

/// Closest approach to the chart pole allowed for curve evaluation.
pub const DEFAULT_R_MIN: f64 = 1e-3;
/// Metric values below this are treated as degenerate.
pub const G_MIN: f64 = 1e-14;
/// The sphere connection refuses pairs at least this far apart.
pub const SPHERE_INJECTIVITY_GUARD: f64 = 0.9 * PI;
/// RK4 step counts over the shooting reach, coarse to fine. The last stage
/// also fixes the step of the returned arc, so the root and the arc share
/// one discretization.
const SHOOT_STAGES: [usize; 3] = [128, 1024, 8192];
/// Largest `h·|Γ|` per geodesic RK4 sub-step.
const GEODESIC_STEP_RATE: f64 = 0.05;
/// Initial directions tried by the coarse shooting scan.
const SHOOT_SCAN: usize = 64;
/// Largest coarse closest-approach distance accepted as a root.
const SHOOT_ROOT_GAP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub r: f64,
    pub phi: f64,
}

impl ChartPoint {
    pub fn new(r: f64, phi: f64) -> Self {
        ChartPoint { r, phi }
    }
}

/// Coordinate components of a tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub dr: f64,
    pub dphi: f64,
}

impl TangentVector {
    pub fn new(dr: f64, dphi: f64) -> Self {
        TangentVector { dr, dphi }
    }
}

/// g and the partial derivatives used by the curvature formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: f64,
    pub g_r: f64,
    pub g_phi: f64,
    pub g_rr: f64,
}

/// The non-trivial Christoffel symbols `(Γ¹₂₂, Γ²₁₂, Γ²₂₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel {
    pub g1_22: f64,
    pub g2_12: f64,
    pub g2_22: f64,
}

/// A user metric `g(r, φ)` with symbolic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomMetric {
    pub source: String,
    g: Expr,
    g_r: Expr,
    g_phi: Expr,
    g_rr: Expr,
}

impl CustomMetric {
    pub fn parse(source: &str) -> Result<Self> {
        let g = Expr::parse_with_vars(source, &[Var::R, Var::Phi])?;
        let g_r = g.diff(Var::R);
        let g_phi = g.diff(Var::Phi);
        let g_rr = g_r.diff(Var::R);
        Ok(CustomMetric {
            source: source.to_string(),
            g,
            g_r,
            g_phi,
            g_rr,
        })
    }

    fn jet(&self, r: f64, phi: f64) -> MetricJet {
        let env = Env::chart(r, phi);
        MetricJet {
            g: self.g.eval(&env),
            g_r: self.g_r.eval(&env),
            g_phi: self.g_phi.eval(&env),
            g_rr: self.g_rr.eval(&env),
        }
    }

    pub fn depends_on_phi(&self) -> bool {
        self.g.depends_on(Var::Phi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChartKind {
    /// Unit sphere, `g = sin² r`, r the colatitude.
    Sphere,
    /// Flat metric `g = r²`. With an angular period other than 2π this is a
    /// cone unrolled around its apex.
    FlatPolar,
    /// Euclidean plane in Cartesian coordinates: `r` is x, `phi` is y, g ≡ 1.
    Plane,
    Custom(CustomMetric),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceChart {
    pub kind: ChartKind,
    /// Closed validity interval for r.
    pub r_lo: f64,
    pub r_hi: f64,
    /// Period of φ, `None` for the Cartesian plane.
    pub phi_period: Option<f64>,
    /// Bound c_M in `TC(P) ≤ κ_M(P) + c_M·L(P)` for embedded charts.
    pub c_m: f64,
}

impl SurfaceChart {
    pub fn sphere() -> Self {
        SurfaceChart {
            kind: ChartKind::Sphere,
            r_lo: DEFAULT_R_MIN,
            r_hi: PI - DEFAULT_R_MIN,
            phi_period: Some(TAU),
            c_m: 1.0,
        }
    }

    pub fn flat_polar() -> Self {
        Self::cone(TAU)
    }

    /// Flat polar chart whose angular coordinate has the given period.
    pub fn cone(period: f64) -> Self {
        SurfaceChart {
            kind: ChartKind::FlatPolar,
            r_lo: DEFAULT_R_MIN,
            r_hi: f64::INFINITY,
            phi_period: Some(period),
            c_m: 0.0,
        }
    }

    pub fn plane() -> Self {
        SurfaceChart {
            kind: ChartKind::Plane,
            r_lo: f64::NEG_INFINITY,
            r_hi: f64::INFINITY,
            phi_period: None,
            c_m: 0.0,
        }
    }

    pub fn custom(g: &str, r_lo: f64, r_hi: f64) -> Result<Self> {
        if !(r_lo >= 0.0 && r_hi > r_lo) {
            return Err(GeomError::InvalidInput(format!(
                "custom chart needs 0 <= r_lo < r_hi, got [{r_lo}, {r_hi}]"
            )));
        }
        Ok(SurfaceChart {
            kind: ChartKind::Custom(CustomMetric::parse(g)?),
            r_lo,
            r_hi,
            phi_period: Some(TAU),
            c_m: 1.0,
        })
    }

    pub fn with_r_min(mut self, r_min: f64) -> Self {
        if matches!(self.kind, ChartKind::Sphere) {
            self.r_hi = PI - r_min;
        }
        self.r_lo = r_min;
        self
    }

    pub fn with_c_m(mut self, c_m: f64) -> Self {
        self.c_m = c_m;
        self
    }

    pub fn is_polar(&self) -> bool {
        !matches!(self.kind, ChartKind::Plane)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ChartKind::Sphere => "sphere",
            ChartKind::FlatPolar => "flat-polar",
            ChartKind::Plane => "plane",
            ChartKind::Custom(_) => "custom-polar",
        }
    }

    pub fn check(&self, p: ChartPoint) -> Result<()> {
        let ok = p.r.is_finite() && p.phi.is_finite() && p.r >= self.r_lo && p.r <= self.r_hi;
        if ok {
            Ok(())
        } else {
            Err(GeomError::OutOfChart {
                r: p.r,
                phi: p.phi,
                lo: self.r_lo,
                hi: self.r_hi,
            })
        }
    }

    /// Metric jet without the validity check; used inside integrators.
    pub fn metric_jet_unchecked(&self, r: f64, phi: f64) -> MetricJet {
        match &self.kind {
            ChartKind::Sphere => {
                let (s, c) = r.sin_cos();
                MetricJet {
                    g: s * s,
                    g_r: 2.0 * s * c,
                    g_phi: 0.0,
                    g_rr: 2.0 * (c * c - s * s),
                }
            }
            ChartKind::FlatPolar => MetricJet {
                g: r * r,
                g_r: 2.0 * r,
                g_phi: 0.0,
                g_rr: 2.0,
            },
            ChartKind::Plane => MetricJet {
                g: 1.0,
                g_r: 0.0,
                g_phi: 0.0,
                g_rr: 0.0,
            },
            ChartKind::Custom(m) => m.jet(r, phi),
        }
    }

    pub fn metric_jet(&self, p: ChartPoint) -> Result<MetricJet> {
        self.check(p)?;
        Ok(self.metric_jet_unchecked(p.r, p.phi))
    }

    pub fn metric_at(&self, p: ChartPoint) -> Result<f64> {
        Ok(self.metric_jet(p)?.g)
    }

    fn nondegenerate(&self, p: ChartPoint) -> Result<MetricJet> {
        let m = self.metric_jet(p)?;
        if m.g < G_MIN || !m.g.is_finite() {
            return Err(GeomError::DegenerateMetric { r: p.r, g: m.g });
        }
        Ok(m)
    }

    pub fn christoffel_at(&self, p: ChartPoint) -> Result<Christoffel> {
        let m = self.nondegenerate(p)?;
        Ok(christoffel(&m))
    }

    /// `K = −(√g)_rr / √g`.
    pub fn gauss_curvature_at(&self, p: ChartPoint) -> Result<f64> {
        let m = self.nondegenerate(p)?;
        Ok(gauss_curvature(&m))
    }

    /// g-inner product of two tangent vectors at `p`.
    pub fn inner(&self, p: ChartPoint, a: TangentVector, b: TangentVector) -> f64 {
        let g = self.metric_jet_unchecked(p.r, p.phi).g;
        a.dr * b.dr + g * a.dphi * b.dphi
    }

    pub fn speed(&self, p: ChartPoint, v: TangentVector) -> f64 {
        self.inner(p, v, v).sqrt()
    }

    /// Components in the orthonormal frame `(∂_r, ∂_φ/√g)`.
    pub fn to_orthonormal(&self, p: ChartPoint, v: TangentVector) -> [f64; 2] {
        let g = self.metric_jet_unchecked(p.r, p.phi).g;
        [v.dr, g.sqrt() * v.dphi]
    }

    pub fn from_orthonormal(&self, p: ChartPoint, e: [f64; 2]) -> TangentVector {
        let g = self.metric_jet_unchecked(p.r, p.phi).g;
        TangentVector::new(e[0], e[1] / g.sqrt())
    }

    pub fn normalize(&self, p: ChartPoint, v: TangentVector) -> TangentVector {
        let s = self.speed(p, v);
        TangentVector::new(v.dr / s, v.dphi / s)
    }

    /// Position in the flat picture of the chart: `(r cos φ, r sin φ)` for
    /// polar charts and `(x, y)` for the plane.
    pub fn chart_plane(&self, p: ChartPoint) -> [f64; 2] {
        if self.is_polar() {
            let (s, c) = p.phi.sin_cos();
            [p.r * c, p.r * s]
        } else {
            [p.r, p.phi]
        }
    }

    /// Reduces an angular difference to the symmetric range of the period.
    pub fn reduce_dphi(&self, dphi: f64) -> f64 {
        match self.phi_period {
            Some(per) => {
                let mut y = dphi.rem_euclid(per);
                if y > per / 2.0 {
                    y -= per;
                }
                y
            }
            None => dphi,
        }
    }

    /// Whether two chart points coincide up to the angular period.
    pub fn same_point(&self, p: ChartPoint, q: ChartPoint, tol: f64) -> bool {
        let m = self.metric_jet_unchecked(q.r, q.phi).g.max(0.0);
        let dphi = self.reduce_dphi(q.phi - p.phi);
        ((q.r - p.r).powi(2) + m * dphi * dphi).sqrt() <= tol
    }

    pub fn has_embedding(&self) -> bool {
        match self.kind {
            ChartKind::Sphere | ChartKind::Plane => true,
            ChartKind::FlatPolar => self.cone_ratio().is_some(),
            ChartKind::Custom(_) => false,
        }
    }

    /// `sin` of the cone half-angle: period / 2π for flat polar charts with
    /// period at most 2π.
    fn cone_ratio(&self) -> Option<f64> {
        match (&self.kind, self.phi_period) {
            (ChartKind::FlatPolar, Some(per)) if per <= TAU + 1e-12 => Some((per / TAU).min(1.0)),
            _ => None,
        }
    }

    /// Embedding `F` and its first and second partial derivatives
    /// `(F, F_r, F_φ, F_rr, F_rφ, F_φφ)`.
    pub fn embed_jet(&self, p: ChartPoint) -> Option<[Vec3; 6]> {
        match self.kind {
            ChartKind::Sphere => {
                let (sr, cr) = p.r.sin_cos();
                let (sp, cp) = p.phi.sin_cos();
                Some([
                    [sr * cp, sr * sp, cr],
                    [cr * cp, cr * sp, -sr],
                    [-sr * sp, sr * cp, 0.0],
                    [-sr * cp, -sr * sp, -cr],
                    [-cr * sp, cr * cp, 0.0],
                    [-sr * cp, -sr * sp, 0.0],
                ])
            }
            ChartKind::Plane => Some([
                [p.r, p.phi, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0; 3],
                [0.0; 3],
                [0.0; 3],
            ]),
            ChartKind::FlatPolar => {
                // cone with apex at the origin: radius r·c, height −r·√(1−c²)
                let c = self.cone_ratio()?;
                let h = (1.0 - c * c).max(0.0).sqrt();
                let psi = p.phi / c;
                let (sp, cp) = psi.sin_cos();
                let r = p.r;
                Some([
                    [r * c * cp, r * c * sp, -r * h],
                    [c * cp, c * sp, -h],
                    [-r * sp, r * cp, 0.0],
                    [0.0; 3],
                    [-sp, cp, 0.0],
                    [-r * cp / c, -r * sp / c, 0.0],
                ])
            }
            ChartKind::Custom(_) => None,
        }
    }

    pub fn embed(&self, p: ChartPoint) -> Option<Vec3> {
        self.embed_jet(p).map(|j| j[0])
    }

    /// Unit normal `F_r × F_φ / |F_r × F_φ|`.
    pub fn normal(&self, p: ChartPoint) -> Option<Vec3> {
        self.embed_jet(p).map(|j| normalize(cross(j[1], j[2])))
    }

    /// Pushforward of a tangent vector through the embedding.
    pub fn push_forward(&self, p: ChartPoint, v: TangentVector) -> Option<Vec3> {
        self.embed_jet(p)
            .map(|j| numeric::add(scale(j[1], v.dr), scale(j[2], v.dphi)))
    }

    /// Inverse of the sphere embedding, with φ chosen closest to `phi_near`.
    fn sphere_chart(x: Vec3, phi_near: f64) -> ChartPoint {
        let r = x[0].hypot(x[1]).atan2(x[2]);
        let phi = x[1].atan2(x[0]);
        let phi = phi_near + numeric::wrap_pi(phi - phi_near);
        ChartPoint::new(r, phi)
    }

    /// Sphere tangent vector in chart components.
    fn sphere_tangent(p: ChartPoint, v: Vec3) -> TangentVector {
        let (sr, cr) = p.r.sin_cos();
        let (sp, cp) = p.phi.sin_cos();
        let e_theta = [cr * cp, cr * sp, -sr];
        let e_phi = [-sp, cp, 0.0];
        TangentVector::new(dot(v, e_theta), dot(v, e_phi) / sr)
    }

    /// Right-hand side of the geodesic equations for the state `(r, φ, ṙ, φ̇)`.
    pub fn geodesic_rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let m = self.metric_jet_unchecked(y[0], y[1]);
        let (rd, pd) = (y[2], y[3]);
        [
            rd,
            pd,
            0.5 * m.g_r * pd * pd,
            -(2.0 * m.g_r * rd * pd + m.g_phi * pd * pd) / (2.0 * m.g),
        ]
    }

    /// Integrates the geodesic equations with fixed-step RK4.
    /// `step` defaults to `length / 1024`.
    pub fn geodesic_shoot(
        &self,
        start: ChartPoint,
        dir: TangentVector,
        length: f64,
        step: Option<f64>,
    ) -> Result<GeodesicArc> {
        self.check(start)?;
        if !(length >= 0.0 && length.is_finite()) {
            return Err(GeomError::InvalidInput(format!("arc length {length} must be finite and >= 0")));
        }
        let speed = self.speed(start, dir);
        if (speed - 1.0).abs() > 1e-6 {
            return Err(GeomError::InvalidInput(format!(
                "initial direction must be unit length, got |v| = {speed}"
            )));
        }
        let dir = TangentVector::new(dir.dr / speed, dir.dphi / speed);
        if length == 0.0 {
            return Ok(GeodesicArc::point(start, dir));
        }
        let h0 = step.unwrap_or(length / 1024.0);
        if !(h0 > 0.0) {
            return Err(GeomError::InvalidInput("integration step must be positive".into()));
        }
        let n = (length / h0).ceil().max(1.0) as usize;
        let h = length / n as f64;
        let mut states = Vec::with_capacity(n + 1);
        let mut y = [start.r, start.phi, dir.dr, dir.dphi];
        states.push(y);
        for i in 0..n {
            y = self.geodesic_advance(y, h);
            let p = ChartPoint::new(y[0], y[1]);
            if self.check(p).is_err() || !y.iter().all(|v| v.is_finite()) {
                return Err(GeomError::TruncatedArc {
                    exit: (i + 1) as f64 * h,
                });
            }
            states.push(y);
        }
        let last = states[n];
        Ok(GeodesicArc {
            start,
            direction: dir,
            end: ChartPoint::new(last[0], last[1]),
            end_direction: TangentVector::new(last[2], last[3]),
            length,
            backend: ArcBackend::Shot { step: h, states },
        })
    }

    /// Minimal geodesic from `p` to `q`.
    ///
    /// The sphere, flat polar charts and the plane use closed forms; custom
    /// charts fall back to [`SurfaceChart::connect_by_shooting`].
    pub fn geodesic_connect(&self, p: ChartPoint, q: ChartPoint) -> Result<GeodesicArc> {
        self.check(p)?;
        self.check(q)?;
        match self.kind {
            ChartKind::Sphere => self.connect_sphere(p, q, true),
            ChartKind::FlatPolar => self.connect_unrolled(p, q),
            ChartKind::Plane => Ok(connect_plane(p, q)),
            ChartKind::Custom(_) => self.connect_by_shooting(p, q),
        }
    }

    /// Length of the minimal geodesic from `p` to `q`.
    pub fn geodesic_distance(&self, p: ChartPoint, q: ChartPoint) -> Result<f64> {
        match self.kind {
            ChartKind::Sphere => {
                let (a, b) = (self.embed(p).unwrap(), self.embed(q).unwrap());
                Ok(numeric::angle_between(a, b))
            }
            ChartKind::FlatPolar => {
                let dphi = self.reduce_dphi(q.phi - p.phi);
                if dphi.abs() >= PI {
                    // through the apex
                    return Ok(p.r + q.r);
                }
                Ok((p.r * p.r + q.r * q.r - 2.0 * p.r * q.r * dphi.cos()).max(0.0).sqrt())
            }
            ChartKind::Plane => Ok((q.r - p.r).hypot(q.phi - p.phi)),
            ChartKind::Custom(_) => {
                if self.same_point(p, q, 1e-14) {
                    return Ok(0.0);
                }
                Ok(self.connect_by_shooting(p, q)?.length)
            }
        }
    }

    fn connect_sphere(&self, p: ChartPoint, q: ChartPoint, guard: bool) -> Result<GeodesicArc> {
        let a = self.embed(p).unwrap();
        let b = self.embed(q).unwrap();
        let d = numeric::angle_between(a, b);
        if guard && d >= SPHERE_INJECTIVITY_GUARD {
            return Err(GeomError::IllConditioned {
                distance: d,
                bound: SPHERE_INJECTIVITY_GUARD,
            });
        }
        if d == 0.0 {
            return Ok(GeodesicArc::point(p, TangentVector::new(1.0, 0.0)));
        }
        let t = normalize(numeric::sub(b, scale(a, dot(a, b))));
        let arc = SphereArc { a, t, phi0: p.phi };
        let (end, end_dir) = arc.eval(d);
        Ok(GeodesicArc {
            start: p,
            direction: Self::sphere_tangent(p, t),
            end,
            end_direction: end_dir,
            length: d,
            backend: ArcBackend::Sphere(arc),
        })
    }

    fn connect_unrolled(&self, p: ChartPoint, q: ChartPoint) -> Result<GeodesicArc> {
        let dphi = self.reduce_dphi(q.phi - p.phi);
        if dphi.abs() >= PI - 1e-12 {
            return Err(GeomError::IllConditioned {
                distance: p.r + q.r,
                bound: PI,
            });
        }
        // work in the plane developed around p, with p on the positive x axis
        let a = [p.r, 0.0];
        let b = [q.r * dphi.cos(), q.r * dphi.sin()];
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        if len == 0.0 {
            return Ok(GeodesicArc::point(p, TangentVector::new(1.0, 0.0)));
        }
        let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        // closest approach to the apex
        let t_star = (-(a[0] * u[0] + a[1] * u[1])).clamp(0.0, len);
        let closest = (a[0] + t_star * u[0]).hypot(a[1] + t_star * u[1]);
        if closest < self.r_lo {
            return Err(GeomError::OutOfChart {
                r: closest,
                phi: p.phi,
                lo: self.r_lo,
                hi: self.r_hi,
            });
        }
        let arc = UnrolledArc { a, u, phi0: p.phi };
        let (_, dir) = arc.eval(0.0);
        let (_, end_dir) = arc.eval(len);
        Ok(GeodesicArc {
            start: p,
            direction: dir,
            end: ChartPoint::new(q.r, p.phi + dphi),
            end_direction: end_dir,
            length: len,
            backend: ArcBackend::Unrolled(arc),
        })
    }

    /// Two-point connection by shooting on the initial direction angle.
    ///
    /// The miss function is the signed cross-track distance of `q` from the
    /// shot geodesic at its closest approach. A coarse scan over all initial
    /// directions brackets every sign change; those that are true roots are
    /// refined with safeguarded secant steps and the shortest connection is
    /// kept, then polished at finer integration steps.
    pub fn connect_by_shooting(&self, p: ChartPoint, q: ChartPoint) -> Result<GeodesicArc> {
        self.check(p)?;
        self.check(q)?;
        let m_q = self.metric_jet_unchecked(q.r, q.phi);
        if m_q.g < G_MIN {
            return Err(GeomError::DegenerateMetric { r: q.r, g: m_q.g });
        }
        if self.same_point(p, q, 1e-14) {
            return Ok(GeodesicArc::point(p, TangentVector::new(1.0, 0.0)));
        }
        let (psi0, guess_len) = self.flat_guess(p, q);
        let reach = 1.6 * guess_len.max(1e-3) + 0.5;
        let mut iterations = 0;
        let coarse = |psi: f64| self.shot_miss(p, q, psi, reach, SHOOT_STAGES[0]);
        let angles: Vec<f64> = (0..=SHOOT_SCAN)
            .map(|k| psi0 - PI + TAU * k as f64 / SHOOT_SCAN as f64)
            .collect();
        let scan: Vec<f64> = angles.iter().map(|&a| coarse(a).cross).collect();
        let mut best: Option<(f64, f64)> = None;
        for k in 0..SHOOT_SCAN {
            let (fa, fb) = (scan[k], scan[k + 1]);
            if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
                continue;
            }
            let (root, its, _) = refine_root(&coarse, angles[k], angles[k + 1], 1e-13);
            iterations += its;
            let m = coarse(root);
            // a sign flip where the closest approach jumps is not a root
            if m.gap > SHOOT_ROOT_GAP {
                continue;
            }
            if let Some(len) = m.length {
                if best.map_or(true, |(l, _)| len < l) {
                    best = Some((len, root));
                }
            }
        }
        let Some((_, mut psi)) = best else {
            return Err(GeomError::ConnectionFailure {
                iterations,
                miss: f64::NAN,
            });
        };
        let mut last_miss = f64::INFINITY;
        for &steps in &SHOOT_STAGES[1..] {
            let miss = |psi: f64| self.shot_miss(p, q, psi, reach, steps);
            let (lo, hi) = bracket(&miss, psi, 1e-4).ok_or(GeomError::ConnectionFailure {
                iterations,
                miss: f64::NAN,
            })?;
            let (root, its, m) = refine_root(&miss, lo, hi, 1e-13);
            iterations += its;
            psi = root;
            last_miss = m;
        }
        let fine = SHOOT_STAGES[SHOOT_STAGES.len() - 1];
        let shot = self.shot_miss(p, q, psi, reach, fine);
        let Some(len) = shot.length else {
            return Err(GeomError::ConnectionFailure {
                iterations,
                miss: last_miss,
            });
        };
        let dir = self.from_orthonormal(p, [psi.cos(), psi.sin()]);
        let arc = self.geodesic_shoot(p, dir, len, Some(reach / fine as f64))?;
        let miss = self.chart_gap(arc.end, q);
        if miss > 1e-8 {
            return Err(GeomError::ConnectionFailure { iterations, miss });
        }
        Ok(arc)
    }

    /// Local chart distance from `a` to `b` measured with the metric at `b`.
    pub fn chart_gap(&self, a: ChartPoint, b: ChartPoint) -> f64 {
        let g = self.metric_jet_unchecked(b.r, b.phi).g.max(0.0);
        let dphi = self.reduce_dphi(b.phi - a.phi);
        ((b.r - a.r).powi(2) + g * dphi * dphi).sqrt()
    }

    /// Initial direction angle (orthonormal frame at p) and length of the
    /// straight chord in the chart picture.
    fn flat_guess(&self, p: ChartPoint, q: ChartPoint) -> (f64, f64) {
        if self.is_polar() {
            let dphi = self.reduce_dphi(q.phi - p.phi);
            let b = [q.r * dphi.cos() - p.r, q.r * dphi.sin()];
            // at p the radial direction is x, the angular direction is y
            (b[1].atan2(b[0]), b[0].hypot(b[1]))
        } else {
            let b = [q.r - p.r, q.phi - p.phi];
            (b[1].atan2(b[0]), b[0].hypot(b[1]))
        }
    }

    /// One step of length `h` along a geodesic, split into RK4 sub-steps
    /// where the polar Christoffel terms grow near a degenerate point.
    fn geodesic_advance(&self, y: [f64; 4], h: f64) -> [f64; 4] {
        let f = |_s: f64, y: &[f64; 4]| self.geodesic_rhs(y);
        let m = self.metric_jet_unchecked(y[0], y[1]);
        let rate = (m.g_r.abs() + m.g_phi.abs()) / (2.0 * m.g);
        let k = if rate.is_finite() {
            ((h * rate / GEODESIC_STEP_RATE).ceil() as usize).clamp(1, 256)
        } else {
            1
        };
        let mut y = y;
        for _ in 0..k {
            y = rk4_step(&f, 0.0, &y, h / k as f64);
        }
        y
    }

    fn shot_miss(&self, p: ChartPoint, q: ChartPoint, psi: f64, reach: f64, steps: usize) -> Miss {
        let h = reach / steps as f64;
        let g0 = self.metric_jet_unchecked(p.r, p.phi).g;
        let mut y = [p.r, p.phi, psi.cos(), psi.sin() / g0.sqrt()];
        let f = |_s: f64, y: &[f64; 4]| self.geodesic_rhs(y);
        let mut track = vec![(self.chart_gap(ChartPoint::new(y[0], y[1]), q), y)];
        for _ in 0..steps {
            y = self.geodesic_advance(y, h);
            if self.check(ChartPoint::new(y[0], y[1])).is_err() || !y.iter().all(|v| v.is_finite()) {
                break;
            }
            track.push((self.chart_gap(ChartPoint::new(y[0], y[1]), q), y));
        }
        // the earliest approach that is as close as the best one, up to the
        // sampling resolution; a closed geodesic passes q again later
        let best = track.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
        let k = (0..track.len())
            .find(|&i| {
                let d = track[i].0;
                let local = (i == 0 || track[i - 1].0 >= d) && track.get(i + 1).map_or(true, |t| t.0 >= d);
                local && d <= best + h
            })
            .unwrap_or(0);
        let mut st = track[k].1;
        let mut s = k as f64 * h;
        // along-track Newton: move to the foot of the perpendicular from q
        for _ in 0..4 {
            let at = ChartPoint::new(st[0], st[1]);
            let m = self.metric_jet_unchecked(q.r, q.phi);
            let w = [q.r - at.r, self.reduce_dphi(q.phi - at.phi)];
            let along = st[2] * w[0] + m.g * st[3] * w[1];
            if along.abs() < 1e-15 {
                break;
            }
            let next = rk4_step(&f, 0.0, &st, along);
            if self.check(ChartPoint::new(next[0], next[1])).is_err() {
                break;
            }
            st = next;
            s += along;
        }
        let m = self.metric_jet_unchecked(q.r, q.phi);
        let sg = m.g.max(0.0).sqrt();
        let w = [q.r - st[0], sg * self.reduce_dphi(q.phi - st[1])];
        let v = [st[2], sg * st[3]];
        let cross = v[0] * w[1] - v[1] * w[0];
        Miss {
            cross,
            gap: w[0].hypot(w[1]),
            length: if s > 0.0 { Some(s) } else { None },
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Miss {
    cross: f64,
    gap: f64,
    length: Option<f64>,
}

fn bracket(miss: &impl Fn(f64) -> Miss, center: f64, initial: f64) -> Option<(f64, f64)> {
    let f0 = miss(center).cross;
    if f0 == 0.0 {
        return Some((center, center));
    }
    let mut d = initial;
    while d < PI / 2.0 {
        for cand in [center + d, center - d] {
            let f = miss(cand).cross;
            if f.is_finite() && f.signum() != f0.signum() {
                return Some(if cand > center { (center, cand) } else { (cand, center) });
            }
        }
        d *= 2.0;
    }
    None
}

/// Illinois-style regula falsi with a bisection safeguard.
fn refine_root(miss: &impl Fn(f64) -> Miss, mut a: f64, mut b: f64, tol: f64) -> (f64, usize, f64) {
    if a == b {
        return (a, 0, 0.0);
    }
    let mut fa = miss(a).cross;
    let mut fb = miss(b).cross;
    let mut side = 0i8;
    let mut x = a;
    let mut fx = fa;
    for it in 0..200 {
        x = (a * fb - b * fa) / (fb - fa);
        if !x.is_finite() || x <= a.min(b) || x >= a.max(b) {
            x = 0.5 * (a + b);
        }
        fx = miss(x).cross;
        if fx.abs() < tol || (b - a).abs() < 1e-15 {
            return (x, it + 1, fx);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
    }
    (x, 200, fx)
}

fn christoffel(m: &MetricJet) -> Christoffel {
    Christoffel {
        g1_22: -m.g_r / 2.0,
        g2_12: m.g_r / (2.0 * m.g),
        g2_22: m.g_phi / (2.0 * m.g),
    }
}

fn gauss_curvature(m: &MetricJet) -> f64 {
    // (√g)_rr / √g = g_rr/(2g) − g_r²/(4g²)
    -(m.g_rr / (2.0 * m.g) - m.g_r * m.g_r / (4.0 * m.g * m.g))
}

fn connect_plane(p: ChartPoint, q: ChartPoint) -> GeodesicArc {
    let d = [q.r - p.r, q.phi - p.phi];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return GeodesicArc::point(p, TangentVector::new(1.0, 0.0));
    }
    let u = TangentVector::new(d[0] / len, d[1] / len);
    GeodesicArc {
        start: p,
        direction: u,
        end: q,
        end_direction: u,
        length: len,
        backend: ArcBackend::Line,
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SphereArc {
    a: Vec3,
    t: Vec3,
    phi0: f64,
}

impl SphereArc {
    fn eval(&self, s: f64) -> (ChartPoint, TangentVector) {
        let (ss, cs) = s.sin_cos();
        let x = numeric::add(scale(self.a, cs), scale(self.t, ss));
        let v = numeric::add(scale(self.a, -ss), scale(self.t, cs));
        let p = SurfaceChart::sphere_chart(x, self.phi0);
        (p, SurfaceChart::sphere_tangent(p, v))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct UnrolledArc {
    a: [f64; 2],
    u: [f64; 2],
    phi0: f64,
}

impl UnrolledArc {
    fn eval(&self, s: f64) -> (ChartPoint, TangentVector) {
        let x = [self.a[0] + s * self.u[0], self.a[1] + s * self.u[1]];
        let r = x[0].hypot(x[1]);
        let phi = self.phi0 + x[1].atan2(x[0]);
        let dr = (x[0] * self.u[0] + x[1] * self.u[1]) / r;
        let dphi = (x[0] * self.u[1] - x[1] * self.u[0]) / (r * r);
        (ChartPoint::new(r, phi), TangentVector::new(dr, dphi))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ArcBackend {
    Point,
    Sphere(SphereArc),
    Unrolled(UnrolledArc),
    Line,
    Shot { step: f64, states: Vec<[f64; 4]> },
}

/// A unit-speed geodesic arc.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicArc {
    pub start: ChartPoint,
    /// Unit initial tangent, `ṙ² + g φ̇² = 1`.
    pub direction: TangentVector,
    pub end: ChartPoint,
    pub end_direction: TangentVector,
    pub length: f64,
    backend: ArcBackend,
}

impl GeodesicArc {
    fn point(p: ChartPoint, dir: TangentVector) -> Self {
        GeodesicArc {
            start: p,
            direction: dir,
            end: p,
            end_direction: dir,
            length: 0.0,
            backend: ArcBackend::Point,
        }
    }

    /// Point and unit tangent at arc length `s ∈ [0, length]`.
    pub fn eval(&self, chart: &SurfaceChart, s: f64) -> (ChartPoint, TangentVector) {
        let s = s.clamp(0.0, self.length);
        match &self.backend {
            ArcBackend::Point => (self.start, self.direction),
            ArcBackend::Sphere(arc) => {
                if s == self.length {
                    return (self.end, self.end_direction);
                }
                arc.eval(s)
            }
            ArcBackend::Unrolled(arc) => {
                let (p, v) = arc.eval(s);
                if s == self.length {
                    return (self.end, v);
                }
                (p, v)
            }
            ArcBackend::Line => {
                let (u, p) = (self.direction, self.start);
                (ChartPoint::new(p.r + s * u.dr, p.phi + s * u.dphi), u)
            }
            ArcBackend::Shot { step, states } => {
                let k = ((s / step).floor() as usize).min(states.len() - 1);
                let rem = s - k as f64 * step;
                let y = if rem > 0.0 {
                    rk4_step(&|_s, y: &[f64; 4]| chart.geodesic_rhs(y), 0.0, &states[k], rem)
                } else {
                    states[k]
                };
                (ChartPoint::new(y[0], y[1]), TangentVector::new(y[2], y[3]))
            }
        }
    }

    /// `n + 1` evenly spaced samples `(s, point, tangent)` along the arc.
    pub fn samples(&self, chart: &SurfaceChart, n: usize) -> Vec<(f64, ChartPoint, TangentVector)> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let s = self.length * i as f64 / n as f64;
                let (p, v) = self.eval(chart, s);
                (s, p, v)
            })
            .collect()
    }

    /// Dense trace of the integrator, if the arc was obtained by shooting.
    pub fn integrator_states(&self) -> Option<&[[f64; 4]]> {
        match &self.backend {
            ArcBackend::Shot { states, .. } => Some(states),
            _ => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.backend, ArcBackend::Shot { .. })
    }
}

/// Unit-speed defect `|ṙ² + g φ̇² − 1|` over the integrator trace.
pub fn max_speed_defect(chart: &SurfaceChart, arc: &GeodesicArc) -> f64 {
    match arc.integrator_states() {
        Some(states) => states
            .iter()
            .map(|y| (chart.speed(ChartPoint::new(y[0], y[1]), TangentVector::new(y[2], y[3])) - 1.0).abs())
            .fold(0.0, f64::max),
        None => arc
            .samples(chart, 64)
            .iter()
            .map(|(_, p, v)| (chart.speed(*p, *v) - 1.0).abs())
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn metric_values() {
        let s = SurfaceChart::sphere();
        assert_abs_diff_eq!(s.metric_at(ChartPoint::new(FRAC_PI_2, 0.3)).unwrap(), 1.0, epsilon = 1e-15);
        assert!(s.metric_at(ChartPoint::new(0.0, 0.0)).is_err());
        let f = SurfaceChart::flat_polar();
        assert_eq!(f.metric_at(ChartPoint::new(2.0, 1.0)).unwrap(), 4.0);
        let g = s.with_r_min(1e-9).metric_at(ChartPoint::new(1e-8, 0.0)).unwrap();
        assert!(g < 1e-15);
    }

    #[test]
    fn christoffel_values() {
        let s = SurfaceChart::sphere();
        let c = s.christoffel_at(ChartPoint::new(PI / 4.0, 0.0)).unwrap();
        assert_abs_diff_eq!(c.g1_22, -0.5, epsilon = 1e-15);
        let c = s.christoffel_at(ChartPoint::new(FRAC_PI_2, 0.0)).unwrap();
        assert_abs_diff_eq!(c.g2_12, 0.0, epsilon = 1e-15);
        let f = SurfaceChart::flat_polar();
        let c = f.christoffel_at(ChartPoint::new(3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(c.g1_22, -3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.g2_12, 1.0 / 3.0, epsilon = 1e-15);
        let tiny = SurfaceChart::custom("r^8", 0.0, 1.0).unwrap();
        assert!(matches!(
            tiny.christoffel_at(ChartPoint::new(1e-3, 0.0)),
            Err(GeomError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn gauss_curvature_values() {
        let p = ChartPoint::new(0.8, 1.1);
        assert_abs_diff_eq!(SurfaceChart::sphere().gauss_curvature_at(p).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(SurfaceChart::flat_polar().gauss_curvature_at(p).unwrap(), 0.0, epsilon = 1e-12);
        let h = SurfaceChart::custom("sinh(r)^2", 0.0, 5.0).unwrap();
        assert_abs_diff_eq!(h.gauss_curvature_at(p).unwrap(), -1.0, epsilon = 1e-12);
        let c = SurfaceChart::custom("sin(r)^2", 0.0, 3.0).unwrap();
        assert_abs_diff_eq!(c.gauss_curvature_at(p).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn meridian_shoot() {
        let s = SurfaceChart::sphere();
        let start = ChartPoint::new(FRAC_PI_2, 0.0);
        // heading south: the arc leaves the validity interval before r = π
        let err = s
            .geodesic_shoot(start, TangentVector::new(1.0, 0.0), FRAC_PI_2, None)
            .unwrap_err();
        match err {
            GeomError::TruncatedArc { exit } => {
                assert!((exit - (FRAC_PI_2 - DEFAULT_R_MIN)).abs() < 2.0 * FRAC_PI_2 / 1024.0)
            }
            e => panic!("unexpected {e:?}"),
        }
        let arc = s
            .geodesic_shoot(start, TangentVector::new(1.0, 0.0), FRAC_PI_2 - 0.01, None)
            .unwrap();
        assert_abs_diff_eq!(arc.end.r, PI - 0.01, epsilon = 1e-12);
        for y in arc.integrator_states().unwrap() {
            assert_abs_diff_eq!(y[2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_shoot_is_straight() {
        let f = SurfaceChart::flat_polar();
        let start = ChartPoint::new(1.0, 0.0);
        let dir = f.from_orthonormal(start, [0.6f64.cos(), 0.6f64.sin()]);
        let arc = f.geodesic_shoot(start, dir, 2.0, None).unwrap();
        let p0 = f.chart_plane(start);
        let u = [0.6f64.cos(), 0.6f64.sin()];
        for (i, y) in arc.integrator_states().unwrap().iter().enumerate() {
            let x = f.chart_plane(ChartPoint::new(y[0], y[1]));
            let s = 2.0 * i as f64 / 1024.0;
            assert!((x[0] - p0[0] - s * u[0]).abs() < 1e-10);
            assert!((x[1] - p0[1] - s * u[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn connect_examples() {
        let s = SurfaceChart::sphere();
        let a = s.geodesic_connect(ChartPoint::new(FRAC_PI_2, 0.0), ChartPoint::new(FRAC_PI_2, 1.0)).unwrap();
        assert_abs_diff_eq!(a.length, 1.0, epsilon = 1e-14);
        for eps in [1e-1, 1e-2, 1e-3] {
            let a = s.geodesic_connect(ChartPoint::new(eps, 0.7), ChartPoint::new(FRAC_PI_2, 0.0)).unwrap();
            assert_abs_diff_eq!(a.length, (eps.sin() * 0.7f64.cos()).acos(), epsilon = 1e-12);
            assert!((a.length - FRAC_PI_2).abs() <= eps);
        }
        let f = SurfaceChart::flat_polar();
        let a = f.geodesic_connect(ChartPoint::new(1.0, 0.0), ChartPoint::new(1.0, FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(a.length, 2f64.sqrt(), epsilon = 1e-14);
        let far = s.geodesic_connect(ChartPoint::new(0.1, 0.0), ChartPoint::new(PI - 0.1, 0.0));
        assert!(matches!(far, Err(GeomError::IllConditioned { .. })));
        assert_eq!(s.geodesic_distance(ChartPoint::new(0.4, 0.4), ChartPoint::new(0.4, 0.4)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            s.geodesic_distance(ChartPoint::new(FRAC_PI_2, 0.1), ChartPoint::new(FRAC_PI_2, 0.3)).unwrap(),
            0.2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn analytic_arc_end_matches_target() {
        let s = SurfaceChart::sphere();
        let p = ChartPoint::new(0.7, 6.1);
        let q = ChartPoint::new(1.1, 0.4);
        let a = s.geodesic_connect(p, q).unwrap();
        let (e, v) = a.eval(&s, a.length);
        assert!(s.same_point(e, q, 1e-12));
        assert_abs_diff_eq!(s.speed(e, v), 1.0, epsilon = 1e-12);
        let (m, _) = a.eval(&s, 0.5 * a.length);
        assert!(m.phi > 6.1, "phi continues past 2π: {}", m.phi);
    }

    #[test]
    fn shooting_matches_sphere() {
        let s = SurfaceChart::sphere();
        let p = ChartPoint::new(0.9, 0.2);
        let q = ChartPoint::new(1.4, 1.3);
        let exact = s.geodesic_distance(p, q).unwrap();
        let shot = s.connect_by_shooting(p, q).unwrap();
        assert_abs_diff_eq!(shot.length, exact, epsilon = 1e-9);
        let analytic = s.geodesic_connect(p, q).unwrap();
        assert_abs_diff_eq!(shot.direction.dr, analytic.direction.dr, epsilon = 1e-8);
        assert_abs_diff_eq!(shot.direction.dphi, analytic.direction.dphi, epsilon = 1e-8);
    }

    #[test]
    fn cone_embedding_is_isometric() {
        let c = SurfaceChart::cone(TAU * 0.5);
        let p = ChartPoint::new(1.3, 0.7);
        let j = c.embed_jet(p).unwrap();
        assert_abs_diff_eq!(dot(j[1], j[1]), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dot(j[2], j[2]), c.metric_at(p).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(dot(j[1], j[2]), 0.0, epsilon = 1e-14);
        assert!(SurfaceChart::cone(7.0).embed(p).is_none());
    }
}
