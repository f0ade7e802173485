use crate::curve::cantor::CantorPiece;
use crate::error::{GeomError, Result};
use crate::expr::{Env, Expr, Var};
use crate::numeric::gauss_legendre5;
use crate::surface::{ChartKind, ChartPoint, GeodesicArc, SurfaceChart, TangentVector};

/// Position, velocity and acceleration with respect to arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub point: ChartPoint,
    pub vel: TangentVector,
    pub acc: TangentVector,
}

const TABLE_PANELS: usize = 512;

/// Chart coordinates given as expressions in a parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPiece {
    pub r_src: String,
    pub phi_src: String,
    pub t0: f64,
    pub t1: f64,
    exprs: [Expr; 6],
    /// Cumulative arc length at `TABLE_PANELS + 1` equally spaced parameters.
    table: Vec<f64>,
}

impl SmoothPiece {
    pub fn new(chart: &SurfaceChart, r: &str, phi: &str, t0: f64, t1: f64) -> Result<Self> {
        let re = Expr::parse_with_vars(r, &[Var::T])?;
        let pe = Expr::parse_with_vars(phi, &[Var::T])?;
        Self::from_exprs(chart, re, pe, r.to_string(), phi.to_string(), t0, t1)
    }

    pub fn from_exprs(
        chart: &SurfaceChart,
        r: Expr,
        phi: Expr,
        r_src: String,
        phi_src: String,
        t0: f64,
        t1: f64,
    ) -> Result<Self> {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(GeomError::InvalidInput(format!(
                "parameter interval [{t0}, {t1}] must be nonempty and finite"
            )));
        }
        let r_t = r.diff(Var::T);
        let p_t = phi.diff(Var::T);
        let r_tt = r_t.diff(Var::T);
        let p_tt = p_t.diff(Var::T);
        let mut piece = SmoothPiece {
            r_src,
            phi_src,
            t0,
            t1,
            exprs: [r, phi, r_t, p_t, r_tt, p_tt],
            table: Vec::new(),
        };
        let h = (t1 - t0) / TABLE_PANELS as f64;
        let mut table = Vec::with_capacity(TABLE_PANELS + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 0..TABLE_PANELS {
            let a = t0 + k as f64 * h;
            for t in [a, a + 0.5 * h] {
                let sp = piece.speed(chart, t);
                if !(sp > 1e-12) || !sp.is_finite() {
                    return Err(GeomError::InvalidInput(format!(
                        "curve speed vanishes or is undefined at t = {t}"
                    )));
                }
            }
            acc += gauss_legendre5(|t| piece.speed(chart, t), a, a + h);
            table.push(acc);
        }
        piece.table = table;
        Ok(piece)
    }

    fn raw(&self, t: f64) -> [f64; 6] {
        let env = Env::param(t);
        let mut out = [0.0; 6];
        for (o, e) in out.iter_mut().zip(self.exprs.iter()) {
            *o = e.eval(&env);
        }
        out
    }

    fn speed(&self, chart: &SurfaceChart, t: f64) -> f64 {
        let d = self.raw(t);
        let g = chart.metric_jet_unchecked(d[0], d[1]).g;
        (d[2] * d[2] + g * d[3] * d[3]).sqrt()
    }

    pub fn length(&self) -> f64 {
        *self.table.last().unwrap()
    }

    /// Parameter value at arc length `s`.
    pub fn param_at(&self, chart: &SurfaceChart, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let h = (self.t1 - self.t0) / TABLE_PANELS as f64;
        let k = self.table.partition_point(|&x| x <= s).saturating_sub(1).min(TABLE_PANELS - 1);
        let a = self.t0 + k as f64 * h;
        let ds = s - self.table[k];
        if ds == 0.0 {
            return a;
        }
        let mut t = a + ds / self.speed(chart, a);
        for _ in 0..20 {
            t = t.clamp(a, a + h);
            let f = gauss_legendre5(|x| self.speed(chart, x), a, t) - ds;
            let step = f / self.speed(chart, t);
            t -= step;
            if step.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t.clamp(a, a + h)
    }

    pub fn jet(&self, chart: &SurfaceChart, s: f64) -> Jet {
        let t = self.param_at(chart, s);
        let [r, phi, rt, pt, rtt, ptt] = self.raw(t);
        let m = chart.metric_jet_unchecked(r, phi);
        let sigma = (rt * rt + m.g * pt * pt).sqrt();
        let g_t = m.g_r * rt + m.g_phi * pt;
        let sigma_t = (rt * rtt + 0.5 * g_t * pt * pt + m.g * pt * ptt) / sigma;
        let k = sigma_t / sigma;
        Jet {
            point: ChartPoint::new(r, phi),
            vel: TangentVector::new(rt / sigma, pt / sigma),
            acc: TangentVector::new((rtt - k * rt) / (sigma * sigma), (ptt - k * pt) / (sigma * sigma)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurvePiece {
    Smooth(SmoothPiece),
    Geodesic(GeodesicArc),
    /// Planar graph of the integral of the Cantor function.
    Cantor(CantorPiece),
    /// A flat-polar piece mapped to Cartesian coordinates by
    /// `(r, φ) ↦ (r cos φ, r sin φ)`.
    Developed {
        inner: Box<CurvePiece>,
        chart: SurfaceChart,
    },
}

impl CurvePiece {
    pub fn length(&self) -> f64 {
        match self {
            CurvePiece::Smooth(p) => p.length(),
            CurvePiece::Geodesic(a) => a.length,
            CurvePiece::Cantor(c) => c.length(),
            CurvePiece::Developed { inner, .. } => inner.length(),
        }
    }

    pub fn is_singular(&self) -> bool {
        match self {
            CurvePiece::Cantor(_) => true,
            CurvePiece::Developed { inner, .. } => inner.is_singular(),
            _ => false,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CurvePiece::Smooth(_) => "smooth",
            CurvePiece::Geodesic(_) => "geodesic",
            CurvePiece::Cantor(_) => "singular",
            CurvePiece::Developed { inner, .. } => inner.kind_name(),
        }
    }

    /// Checks that the piece can live on the chart.
    pub fn validate(&self, chart: &SurfaceChart) -> Result<()> {
        match self {
            CurvePiece::Cantor(_) if !matches!(chart.kind, ChartKind::Plane) => Err(GeomError::Unsupported(
                "Cantor graph pieces are planar and need the plane chart".into(),
            )),
            CurvePiece::Developed { .. } if !matches!(chart.kind, ChartKind::Plane) => Err(
                GeomError::Unsupported("developed pieces live on the plane chart".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Arc-length jet at local parameter `s ∈ [0, length]`.
    pub fn jet(&self, chart: &SurfaceChart, s: f64) -> Jet {
        match self {
            CurvePiece::Smooth(p) => p.jet(chart, s),
            CurvePiece::Geodesic(a) => {
                let (p, v) = a.eval(chart, s);
                let y = chart.geodesic_rhs(&[p.r, p.phi, v.dr, v.dphi]);
                Jet {
                    point: p,
                    vel: v,
                    acc: TangentVector::new(y[2], y[3]),
                }
            }
            CurvePiece::Cantor(c) => {
                let (t, v, m) = c.locate(s);
                let q = 1.0 + v * v;
                let w = q.sqrt();
                let k = m / (q * q);
                Jet {
                    point: ChartPoint::new(t, c.height(t)),
                    vel: TangentVector::new(1.0 / w, v / w),
                    acc: TangentVector::new(-v * k, k),
                }
            }
            CurvePiece::Developed { inner, chart: flat } => {
                let j = inner.jet(flat, s);
                let (r, phi) = (j.point.r, j.point.phi);
                let (sp, cp) = phi.sin_cos();
                let (r1, p1, r2, p2) = (j.vel.dr, j.vel.dphi, j.acc.dr, j.acc.dphi);
                let radial = [cp, sp];
                let angular = [-sp, cp];
                let v = [r1 * radial[0] + r * p1 * angular[0], r1 * radial[1] + r * p1 * angular[1]];
                let a_rad = r2 - r * p1 * p1;
                let a_ang = 2.0 * r1 * p1 + r * p2;
                let a = [a_rad * radial[0] + a_ang * angular[0], a_rad * radial[1] + a_ang * angular[1]];
                Jet {
                    point: ChartPoint::new(r * cp, r * sp),
                    vel: TangentVector::new(v[0], v[1]),
                    acc: TangentVector::new(a[0], a[1]),
                }
            }
        }
    }

    /// Structural breakpoints strictly inside the piece (local arc length).
    pub fn interior_breakpoints(&self) -> Vec<f64> {
        match self {
            CurvePiece::Cantor(c) => c.s[1..c.s.len() - 1].to_vec(),
            CurvePiece::Developed { inner, .. } => inner.interior_breakpoints(),
            _ => Vec::new(),
        }
    }

    /// Tangent-angle variation carried by a singular piece.
    pub fn singular_mass(&self) -> f64 {
        match self {
            CurvePiece::Cantor(c) => c.singular_mass(),
            CurvePiece::Developed { inner, .. } => inner.singular_mass(),
            _ => 0.0,
        }
    }
}
