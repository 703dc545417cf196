//! One-dimensional quadrature: adaptive Gauss–Kronrod for smooth integrands
//! and tanh-sinh for integrable endpoint singularities.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    const MAX_INTERVALS: usize = 20_000;
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= tol {
            return Ok(pieces.iter().map(|p| p.2).sum());
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error estimate {total_err:.3e} above tolerance {tol:.1e} after {MAX_INTERVALS} subintervals"
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Quadrature("subinterval collapsed below machine resolution".into()));
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Tanh-sinh integration over `[a, b]`.
///
/// The integrand receives `(x, x − a, b − x)` so that it can evaluate
/// endpoint singularities from the exact distances rather than from `x`.
pub fn tanh_sinh(f: impl Fn(f64, f64, f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        // x = c + half·tanh(π/2 sinh t); distances to the ends computed without cancellation
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let e = (2.0 * u.abs()).exp();
        let near = 2.0 * half / (1.0 + e); // distance to the closer endpoint
        let (x, da, db) = if t < 0.0 {
            (a + near, near, 2.0 * half - near)
        } else {
            (b - near, 2.0 * half - near, near)
        };
        if near <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let v = f(x, da, db);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0) + sum_level(&eval, h, t_max, 1);
    let mut prev = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        sum += sum_level(&eval, h, t_max, 2);
        let cur = sum * h * half;
        if (cur - prev).abs() <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!("tanh-sinh did not reach tolerance {tol:.1e}")))
}

fn sum_level(eval: &impl Fn(f64) -> f64, h: f64, t_max: f64, stride: usize) -> f64 {
    // at level h, stride 2 visits only the new (odd) nodes
    let mut s = 0.0;
    let mut k = 1usize;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        s += eval(t) + eval(-t);
        k += stride;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_and_trig() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn tanh_sinh_handles_inverse_sqrt_endpoints() {
        // ∫₀¹ dx / (π √(x(1−x))) = 1
        let v = tanh_sinh(
            |_, da, db| 1.0 / (std::f64::consts::PI * (da * db).sqrt()),
            0.0,
            1.0,
            1e-12,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}
