//! Small numerical helpers shared across modules: 3-vectors, angle
//! reduction, a fixed-step RK4 stepper and quadrature rules.

use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Angle between two nonzero vectors, stable near 0 and π.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Great-circle distance between unit vectors. The atan2 form keeps full
/// precision for nearby vectors, where the arccos of the inner product
/// loses about half the digits and can break partition monotonicity.
pub fn great_circle_distance(a: Vec3, b: Vec3) -> f64 {
    angle_between(a, b)
}

/// Neumaier-compensated sum, accurate to about one ulp of the result.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}

/// Signed angle from `a` to `b` in the plane, in (−π, π].
pub fn signed_angle_2d(a: [f64; 2], b: [f64; 2]) -> f64 {
    let c = a[0] * b[1] - a[1] * b[0];
    let d = a[0] * b[0] + a[1] * b[1];
    c.atan2(d)
}

/// Reduces an angle to (−π, π]; an exact odd multiple of π maps to +π.
pub fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Classical fourth-order Runge–Kutta step for an autonomous-in-form system
/// `y' = f(s, y)`.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    s: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(s, y);
    let y2 = axpy(y, &k1, h / 2.0);
    let k2 = f(s + h / 2.0, &y2);
    let y3 = axpy(y, &k2, h / 2.0);
    let k3 = f(s + h / 2.0, &y3);
    let y4 = axpy(y, &k3, h);
    let k4 = f(s + h, &y4);
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], k: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664_0,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664_0,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    128.0 / 225.0,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Five-point Gauss–Legendre rule on [a, b].
pub fn gauss_legendre5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    GL5_X
        .iter()
        .zip(GL5_W.iter())
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// Eight-point Gauss–Legendre rule on [a, b], composite over `panels` panels.
pub fn gauss_legendre8(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + w * k as f64;
        let (c, h) = (lo + w / 2.0, w / 2.0);
        total += GL8_X
            .iter()
            .zip(GL8_W.iter())
            .map(|(x, wt)| wt * f(c + h * x))
            .sum::<f64>()
            * h;
    }
    total
}

/// Composite Simpson rule for equally spaced samples. With an even number of
/// samples the last interval falls back to a cubic end correction.
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ if n % 2 == 1 => {
            let mut s = values[0] + values[n - 1];
            for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0
        }
        _ => {
            // Simpson 3/8 on the last three intervals, Simpson 1/3 elsewhere.
            let k = n - 4;
            let head = simpson_samples(&values[..=k], h);
            let t = &values[k..];
            head + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3])
        }
    }
}

/// Adaptive Simpson quadrature on [a, b].
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// First derivative of equally spaced samples with fourth-order stencils
/// (one-sided near the ends).
pub fn derivative_samples(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 5 {
        for i in 0..n {
            out[i] = if i == 0 {
                (values[1] - values[0]) / h
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / h
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            };
        }
        return out;
    }
    let v = values;
    for i in 0..n {
        out[i] = if i >= 2 && i + 2 < n {
            (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
        } else if i < 2 {
            let j = i;
            // forward 5-point stencil shifted to start at 0
            let s = [v[0], v[1], v[2], v[3], v[4]];
            forward5(&s, j, h)
        } else {
            let k = n - 1 - i;
            let s = [v[n - 1], v[n - 2], v[n - 3], v[n - 4], v[n - 5]];
            -forward5(&s, k, h)
        };
    }
    out
}

/// Derivative at node `j` (0 or 1) from five samples starting at node 0.
fn forward5(s: &[f64; 5], j: usize, h: f64) -> f64 {
    match j {
        0 => (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) / (12.0 * h),
        _ => (-3.0 * s[0] - 10.0 * s[1] + 18.0 * s[2] - 6.0 * s[3] + s[4]) / (12.0 * h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_pi_ties_to_plus_pi() {
        assert_eq!(wrap_pi(PI), PI);
        assert_eq!(wrap_pi(-PI), PI);
        assert!((wrap_pi(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
        assert_eq!(wrap_pi(2.0 * PI), 0.0);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let f = |_s: f64, y: &[f64; 1]| [y[0]];
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0];
            for i in 0..n {
                y = rk4_step(&f, i as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn quadrature_rules() {
        let exact = 1.0 - 1f64.cos();
        assert!((gauss_legendre5(f64::sin, 0.0, 1.0) - exact).abs() < 1e-10);
        assert!((gauss_legendre8(f64::sin, 0.0, 1.0, 3) - exact).abs() < 1e-14);
        for (n, tol) in [(5usize, 1e-4), (6, 1e-4), (101, 1e-9), (100, 1e-9)] {
            let h = 1.0 / (n - 1) as f64;
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            assert!((simpson_samples(&vals, h) - exact).abs() < tol, "n={n}");
        }
        let v = adaptive_simpson(&|x: f64| x.abs(), -1.0, 2.0, 1e-12, 30);
        assert!((v - 2.5).abs() < 1e-10);
    }

    #[test]
    fn derivative_stencils() {
        let h = 0.01;
        let vals: Vec<f64> = (0..50).map(|i| (i as f64 * h).exp()).collect();
        let d = derivative_samples(&vals, h);
        for (i, di) in d.iter().enumerate() {
            assert!((di - (i as f64 * h).exp()).abs() < 1e-8, "i={i}");
        }
    }
}
