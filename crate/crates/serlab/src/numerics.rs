//! Shared numerical helpers: Gaussian tail probabilities, adaptive quadrature,
//! compensated summation and log-factorials.

use std::f64::consts::PI;

/// Gaussian tail probability Q(x) = P(N(0,1) > x), via the complementary
/// error function.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Q(x) evaluated through the finite-range integral
/// (1/pi) ∫_0^{pi/2} exp(-x²/(2 sin²φ)) dφ, for x ≥ 0.
///
/// Slower than [`q_function`]; kept as an independent cross-check route.
pub fn q_function_craig(x: f64) -> f64 {
    assert!(x >= 0.0, "craig form requires x >= 0");
    if x == 0.0 {
        return 0.5;
    }
    let f = |phi: f64| {
        let s = phi.sin();
        if s <= 0.0 {
            0.0
        } else {
            (-x * x / (2.0 * s * s)).exp()
        }
    };
    adaptive_simpson(&f, 0.0, PI / 2.0, 1e-13, 40) / PI
}

/// Standard normal pdf with variance `var`.
pub fn gaussian_pdf(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Adaptive Simpson quadrature on [a, b] with relative tolerance `rel_tol`.
///
/// The first few levels always subdivide, so narrow features away from the
/// initial probe points are not silently skipped.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: u32,
) -> f64 {
    const FORCED_LEVELS: u32 = 11;
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        rel_tol,
        max_depth,
        FORCED_LEVELS.min(max_depth),
    )
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
    depth: u32,
    forced: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    let converged = err.abs() <= 15.0 * rel_tol * (left + right).abs().max(1e-300);
    if depth == 0 || (forced == 0 && converged) {
        left + right + err / 15.0
    } else {
        let nf = forced.saturating_sub(1);
        simpson_rec(f, a, m, fa, flm, fm, left, rel_tol, depth - 1, nf)
            + simpson_rec(f, m, b, fm, frm, fb, right, rel_tol, depth - 1, nf)
    }
}

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Table of ln(n!) for n = 0..=n_max.
pub fn ln_factorial_table(n_max: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        t[n] = t[n - 1] + (n as f64).ln();
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(q_function(0.0), 0.5);
    }

    #[test]
    fn q_matches_extended_precision_values() {
        // Frozen from a 50-digit erfc evaluation.
        assert_relative_eq!(
            q_function(1.0),
            0.1586552539314570514147675,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            q_function(5.0),
            2.866515718791939116737523e-7,
            max_relative = 1e-13
        );
    }

    #[test]
    fn q_monotone_and_vanishing() {
        let mut prev = q_function(0.0);
        for i in 1..=100 {
            let x = i as f64 * 0.1;
            let q = q_function(x);
            assert!(q < prev);
            prev = q;
        }
        assert!(q_function(40.0) == 0.0 || q_function(40.0) < 1e-300);
    }

    #[test]
    fn craig_form_agrees_with_erfc_form() {
        for i in 0..=100 {
            let x = i as f64 * 0.1;
            let a = q_function(x);
            let b = q_function_craig(x);
            assert!(
                (a - b).abs() <= 1e-10 * a.max(1e-12),
                "x={x}: erfc={a:e} craig={b:e}"
            );
        }
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let f = |x: f64| 3.0 * x * x;
        assert_relative_eq!(
            adaptive_simpson(&f, 0.0, 2.0, 1e-12, 30),
            8.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn simpson_handles_concentrated_integrand() {
        // Gaussian bump with sigma = 1e-3 inside [0, 1].
        let f = |x: f64| gaussian_pdf(x - 0.3, 1e-6);
        let v = adaptive_simpson(&f, 0.0, 1.0, 1e-10, 60);
        assert_relative_eq!(v, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn ln_factorials() {
        let t = ln_factorial_table(10);
        assert_relative_eq!(t[10], (3628800.0f64).ln(), max_relative = 1e-14);
    }
}
