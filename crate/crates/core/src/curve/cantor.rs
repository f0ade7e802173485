//! The Cantor–Vitali function and the planar graph curve built from it.
//!
//! At triadic depth `k` the function is known exactly at the knots
//! `tᵢ = i / 3ᵏ`. Between knots it is interpolated linearly, so on each cell
//! the graph `(t, u(t))`, `u = ∫v`, has a closed-form arc length.

/// Exact Cantor value at `i / 3^depth`.
pub fn cantor_knot_value(i: u64, depth: u32) -> f64 {
    let n = 3u64.pow(depth);
    assert!(i <= n, "knot index out of range");
    if i == n {
        return 1.0;
    }
    let mut digits = Vec::with_capacity(depth as usize);
    let mut x = i;
    for _ in 0..depth {
        digits.push(x % 3);
        x /= 3;
    }
    digits.reverse();
    let mut value = 0.0;
    let mut w = 0.5;
    for d in digits {
        match d {
            0 => {}
            1 => return value + w,
            _ => value += w,
        }
        w *= 0.5;
    }
    value
}

/// Cantor function at an arbitrary point of [0, 1], from up to 60 ternary digits.
pub fn cantor_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut x = x;
    let mut value = 0.0;
    let mut w = 0.5;
    for _ in 0..60 {
        x *= 3.0;
        let d = x.floor();
        x -= d;
        if d >= 2.0 {
            value += w;
        } else if d >= 1.0 {
            return value + w;
        }
        w *= 0.5;
    }
    value
}

/// `∫ √(1+v²) dv`.
fn length_primitive(v: f64) -> f64 {
    0.5 * (v * (1.0 + v * v).sqrt() + v.asinh())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorPiece {
    pub depth: u32,
    /// Knot parameters `i / 3ᵏ`.
    pub t: Vec<f64>,
    /// Cantor values at the knots.
    pub v: Vec<f64>,
    /// `u(tᵢ) = ∫₀^{tᵢ} v` for the interpolated v (exact at the knots).
    pub u: Vec<f64>,
    /// Arc length at the knots.
    pub s: Vec<f64>,
}

impl CantorPiece {
    pub fn new(depth: u32) -> Self {
        let n = 3u64.pow(depth) as usize;
        let dt = 1.0 / n as f64;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let v: Vec<f64> = (0..=n).map(|i| cantor_knot_value(i as u64, depth)).collect();
        let mut u = vec![0.0; n + 1];
        let mut s = vec![0.0; n + 1];
        for i in 0..n {
            u[i + 1] = u[i] + 0.5 * (v[i] + v[i + 1]) * dt;
            s[i + 1] = s[i] + cell_length(v[i], v[i + 1], dt);
        }
        CantorPiece { depth, t, v, u, s }
    }

    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn cells(&self) -> usize {
        self.t.len() - 1
    }

    fn cell_of(&self, s: f64) -> usize {
        let i = self.s.partition_point(|&x| x <= s);
        i.saturating_sub(1).min(self.cells() - 1)
    }

    /// Parameter t, slope v and slope rate dv/dt at arc length `s`.
    pub fn locate(&self, s: f64) -> (f64, f64, f64) {
        let s = s.clamp(0.0, self.length());
        let i = self.cell_of(s);
        let dt = self.t[i + 1] - self.t[i];
        let (v0, v1) = (self.v[i], self.v[i + 1]);
        let m = (v1 - v0) / dt;
        let ds = s - self.s[i];
        if m == 0.0 {
            let t = self.t[i] + ds / (1.0 + v0 * v0).sqrt();
            return (t, v0, 0.0);
        }
        // solve F(v) = F(v0) + m·ds for v in [v0, v1]
        let target = length_primitive(v0) + m * ds;
        let mut v = v0 + m * ds / (1.0 + v0 * v0).sqrt();
        for _ in 0..30 {
            let f = length_primitive(v) - target;
            let step = f / (1.0 + v * v).sqrt();
            v -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let v = v.clamp(v0.min(v1), v0.max(v1));
        (self.t[i] + (v - v0) / m, v, m)
    }

    /// Height `u(t)` on the interpolated graph.
    pub fn height(&self, t: f64) -> f64 {
        let n = self.cells();
        let i = ((t * n as f64).floor() as usize).min(n - 1);
        let dt = self.t[i + 1] - self.t[i];
        let m = (self.v[i + 1] - self.v[i]) / dt;
        let x = t - self.t[i];
        self.u[i] + self.v[i] * x + 0.5 * m * x * x
    }

    /// Tangent direction angles `atan vᵢ` at the knots.
    pub fn knot_angles(&self) -> Vec<f64> {
        self.v.iter().map(|v| v.atan()).collect()
    }

    /// Total variation of the tangent angle, carried as the singular mass.
    pub fn singular_mass(&self) -> f64 {
        self.knot_angles().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }
}

fn cell_length(v0: f64, v1: f64, dt: f64) -> f64 {
    if v0 == v1 {
        (1.0 + v0 * v0).sqrt() * dt
    } else {
        let m = (v1 - v0) / dt;
        (length_primitive(v1) - length_primitive(v0)) / m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_values() {
        assert_eq!(cantor_knot_value(0, 3), 0.0);
        assert_eq!(cantor_knot_value(27, 3), 1.0);
        assert_eq!(cantor_knot_value(9, 3), 0.5);
        assert_eq!(cantor_knot_value(18, 3), 0.5);
        assert_eq!(cantor_knot_value(3, 3), 0.25);
        assert_eq!(cantor_knot_value(6, 3), 0.25);
        assert_eq!(cantor_knot_value(2, 3), 0.125);
        for i in 0..=81u64 {
            let a = cantor_knot_value(i, 4);
            let b = cantor_function(i as f64 / 81.0);
            assert!((a - b).abs() < 1e-9, "i={i}: {a} vs {b}");
        }
    }

    #[test]
    fn graph_piece_is_consistent() {
        let c = CantorPiece::new(5);
        assert!((c.u.last().unwrap() - 0.5).abs() < 1e-14);
        assert!((c.singular_mass() - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        for k in [0usize, 17, 100, 242] {
            let (t, _, _) = c.locate(c.s[k]);
            assert!((t - c.t[k]).abs() < 1e-12);
        }
        // midpoint of a rising cell
        let (t, v, _) = c.locate(0.5 * (c.s[1] + c.s[2]));
        assert!(t > c.t[1] && t < c.t[2]);
        assert!(v >= c.v[1] && v <= c.v[2]);
    }
}
