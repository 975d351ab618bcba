//! Small numerical helpers shared across modules: Gauss–Legendre rules,
//! golden-section refinement, smooth glue functions, Simpson weights.

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre quadrature of f over [a, b] with n nodes.
pub fn gl_integrate(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Simpson weights for `samples` equally spaced points on [0, 1].
/// `samples` must be odd and >= 3.
pub fn simpson_weights(samples: usize) -> Vec<f64> {
    assert!(samples >= 3 && samples % 2 == 1, "Simpson needs an odd sample count");
    let h = 1.0 / (samples - 1) as f64;
    let mut w = vec![0.0; samples];
    let mut i = 0;
    while i + 2 < samples {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    w
}

/// Golden-section maximization of f on [a, b].
pub fn golden_max(a: f64, b: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// The standard C^infinity glue e^{-1/s} for s > 0, 0 otherwise.
pub fn exp_glue(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth step: 0 for u <= 0, 1 for u >= 1, strictly monotone in between.
/// Symmetric: sstep(u) + sstep(1 - u) = 1.
pub fn sstep(u: f64) -> f64 {
    let a = exp_glue(u);
    let b = exp_glue(1.0 - u);
    a / (a + b)
}

/// Derivative of [`sstep`].
pub fn sstep_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let a = exp_glue(u);
    let b = exp_glue(1.0 - u);
    let da = a / (u * u);
    let db = -b / ((1.0 - u) * (1.0 - u));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Smooth plateau: 1 on [lo1, hi1], 0 outside (lo0, hi0), glued smoothly.
/// Requires lo0 < lo1 <= hi1 < hi0.
pub fn plateau(theta: f64, lo0: f64, lo1: f64, hi1: f64, hi0: f64) -> f64 {
    if theta < lo1 {
        sstep((theta - lo0) / (lo1 - lo0))
    } else if theta > hi1 {
        sstep((hi0 - theta) / (hi0 - hi1))
    } else {
        1.0
    }
}

/// Derivative of [`plateau`] in theta.
pub fn plateau_deriv(theta: f64, lo0: f64, lo1: f64, hi1: f64, hi0: f64) -> f64 {
    if theta < lo1 {
        sstep_deriv((theta - lo0) / (lo1 - lo0)) / (lo1 - lo0)
    } else if theta > hi1 {
        -sstep_deriv((hi0 - theta) / (hi0 - hi1)) / (hi0 - hi1)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_on_polynomials() {
        // 5-point rule integrates degree-9 polynomials exactly.
        let v = gl_integrate(0.0, 1.0, 5, |x| x.powi(9));
        assert!((v - 0.1).abs() < 1e-14);
    }

    #[test]
    fn gl_smooth_integrand() {
        let v = gl_integrate(0.0, std::f64::consts::PI, 24, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let w = simpson_weights(5);
        let s: f64 = w
            .iter()
            .enumerate()
            .map(|(i, wi)| wi * (i as f64 / 4.0).powi(3))
            .sum();
        assert!((s - 0.25).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_cos_max() {
        let (x, v) = golden_max(-1.0, 1.5, 60, f64::cos);
        // location accuracy at a quadratic max is limited to ~sqrt(eps)
        assert!(x.abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sstep_is_symmetric_and_monotone() {
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            assert!((sstep(u) + sstep(1.0 - u) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sstep(-0.5), 0.0);
        assert_eq!(sstep(1.5), 1.0);
    }

    #[test]
    fn sstep_deriv_matches_finite_differences() {
        let h = 1e-6;
        for i in 1..20 {
            let u = i as f64 / 20.0;
            let fd = (sstep(u + h) - sstep(u - h)) / (2.0 * h);
            assert!((sstep_deriv(u) - fd).abs() < 1e-6, "u = {u}");
        }
    }

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(0.0, -2.0, -1.0, 1.0, 2.0), 1.0);
        assert_eq!(plateau(-3.0, -2.0, -1.0, 1.0, 2.0), 0.0);
        assert_eq!(plateau(3.0, -2.0, -1.0, 1.0, 2.0), 0.0);
        let v = plateau(1.5, -2.0, -1.0, 1.0, 2.0);
        assert!(v > 0.0 && v < 1.0);
    }
}
