//! Symmetric alpha-stable densities and their finite Gaussian-mixture
//! approximation.
//!
//! The SαS density has no closed form for general alpha; it is evaluated
//! here by numerical inversion of the characteristic function
//! `exp(-gamma |t|^alpha)`. The mixture approximation exploits the fact
//! that every SαS law is a Gaussian scale mixture: a geometric variance
//! ladder is seeded and then refined against the inverted density.

use crate::gmm::{GmmError, GmmSpec};
use crate::numerics::gaussian_pdf;
use std::f64::consts::PI;

/// SαS density at `x` for characteristic function exp(-gamma |t|^alpha),
/// by Simpson quadrature of the cosine inversion integral.
pub fn sas_pdf(x: f64, alpha: f64, gamma: f64) -> f64 {
    sas_pdf_tabulate(&[x], alpha, gamma)[0]
}

/// Evaluates the SαS density at every point of `xs` sharing one Simpson
/// grid over the characteristic function.
pub fn sas_pdf_tabulate(xs: &[f64], alpha: f64, gamma: f64) -> Vec<f64> {
    assert!(alpha > 0.0 && alpha <= 2.0, "alpha must lie in (0, 2]");
    assert!(gamma > 0.0);
    // exp(-gamma t^alpha) < 1e-323 beyond this point
    let t_max = (745.0 / gamma).powf(1.0 / alpha);
    let x_max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // resolve the fastest cos(xt) oscillation with ~60 points per period
    let n_osc = (60.0 * t_max * x_max / (2.0 * PI)).ceil() as usize;
    let mut n = n_osc.max(40_000);
    n += n % 2;
    let dt = t_max / n as f64;
    // Simpson weights folded into the characteristic-function table.
    let table: Vec<f64> = (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * (-gamma * t.powf(alpha)).exp()
        })
        .collect();
    xs.iter()
        .map(|&x| {
            let x = x.abs();
            let mut acc = 0.0;
            for (i, wv) in table.iter().enumerate() {
                acc += wv * (i as f64 * dt * x).cos();
            }
            (acc * dt / 3.0 / PI).max(0.0)
        })
        .collect()
}

/// Discrete Kullback-Leibler divergence sum f ln(f/g) h between two density
/// tabulations on a symmetric uniform grid represented by its nonnegative
/// half (index 0 is x = 0).
pub fn grid_kl(f: &[f64], g: &[f64], h: f64) -> f64 {
    let mut kl = 0.0;
    for i in 0..f.len() {
        let w = if i == 0 { 1.0 } else { 2.0 };
        if f[i] > 1e-300 {
            kl += w * f[i] * (f[i] / g[i].max(1e-300)).ln();
        }
    }
    kl * h
}

/// Fits a `k`-component zero-mean Gaussian mixture to the SαS density on
/// the amplitude range `[-fit_range, fit_range]`.
///
/// Returns an error if the refined mixture does not improve on the single
/// best Gaussian in KL divergence.
pub fn approximate_sas(
    alpha: f64,
    k: usize,
    fit_range: f64,
    gamma: f64,
) -> Result<GmmSpec, GmmError> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(GmmError::BadParameter {
            name: "alpha",
            value: alpha,
        });
    }
    if k < 2 {
        return Err(GmmError::BadParameter {
            name: "k",
            value: k as f64,
        });
    }
    if !(fit_range > 0.0 && gamma > 0.0) {
        return Err(GmmError::BadParameter {
            name: "fit_range",
            value: fit_range,
        });
    }
    let n = 1501usize;
    let h = fit_range / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let f: Vec<f64> = sas_pdf_tabulate(&xs, alpha, gamma);

    // Relative-error weights, masked where the target is negligibly small.
    let u: Vec<f64> = f
        .iter()
        .map(|&fi| if fi > 1e-12 { 1.0 / (fi * fi) } else { 0.0 })
        .collect();

    // Geometric variance ladder from the core scale to the range scale,
    // ratio capped at 10; tail weights follow the stable scale-mixture decay.
    let s2 = gamma.powf(2.0 / alpha);
    let v_min = 0.03 * s2;
    let v_max = (fit_range / 1.2).powi(2).max(10.0 * s2);
    let ratio = (v_max / v_min).powf(1.0 / (k - 1) as f64).min(10.0);
    let mut vars: Vec<f64> = (0..k).map(|i| v_min * ratio.powi(i as i32)).collect();
    let mut weights: Vec<f64> = vars.iter().map(|v| v.powf(-alpha / 2.0)).collect();
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);

    let comp_tab = |v: f64| -> Vec<f64> { xs.iter().map(|&x| gaussian_pdf(x, v)).collect() };
    let mut tabs: Vec<Vec<f64>> = vars.iter().map(|&v| comp_tab(v)).collect();

    let objective = |weights: &[f64], tabs: &[Vec<f64>]| -> f64 {
        let mut j = 0.0;
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            let g: f64 = weights.iter().zip(tabs).map(|(w, t)| w * t[i]).sum();
            let d = g - f[i];
            j += u[i] * d * d;
        }
        j
    };

    // Multiplicative updates for nonnegative weighted least squares.
    let mult_updates = |weights: &mut Vec<f64>, tabs: &[Vec<f64>], iters: usize| {
        let mut g = vec![0.0; n];
        for _ in 0..iters {
            for gi in g.iter_mut() {
                *gi = 0.0;
            }
            for (w, t) in weights.iter().zip(tabs) {
                for i in 0..n {
                    g[i] += w * t[i];
                }
            }
            for (w, t) in weights.iter_mut().zip(tabs) {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..n {
                    num += t[i] * u[i] * f[i];
                    den += t[i] * u[i] * g[i];
                }
                *w = (*w * num / den.max(1e-300)).max(1e-300);
            }
        }
    };

    mult_updates(&mut weights, &tabs, 4000);

    // Coordinate refinement of each log-variance by golden-section search,
    // with a narrowing window for the final sweeps.
    let golden = 0.618_033_988_749_894_9;
    let mut live: Vec<usize> = (0..k).collect();
    for sweep in 0..15 {
        let window = if sweep < 9 { 1.2 } else { 0.12 };
        if sweep == 12 {
            // Drop numerically dead components and fine-tune the survivors.
            let total: f64 = weights.iter().sum();
            live = (0..weights.len())
                .filter(|&i| weights[i] / total > 1e-9)
                .collect();
            weights = live.iter().map(|&i| weights[i]).collect();
            vars = live.iter().map(|&i| vars[i]).collect();
            tabs = vars.iter().map(|&v| comp_tab(v)).collect();
            live = (0..weights.len()).collect();
        }
        let k = live.len();
        for ci in 0..k {
            let eval = |lv: f64| -> f64 {
                let t_new = comp_tab(lv.exp());
                let mut j = 0.0;
                for i in 0..n {
                    if u[i] == 0.0 {
                        continue;
                    }
                    let mut g = 0.0;
                    for (cj, (w, t)) in weights.iter().zip(&tabs).enumerate() {
                        g += w * if cj == ci { t_new[i] } else { t[i] };
                    }
                    let d = g - f[i];
                    j += u[i] * d * d;
                }
                j
            };
            let (mut a, mut b) = (vars[ci].ln() - window, vars[ci].ln() + window);
            let mut c = b - golden * (b - a);
            let mut d = a + golden * (b - a);
            let (mut fc, mut fd) = (eval(c), eval(d));
            for _ in 0..30 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - golden * (b - a);
                    fc = eval(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + golden * (b - a);
                    fd = eval(d);
                }
            }
            vars[ci] = (0.5 * (a + b)).exp();
            tabs[ci] = comp_tab(vars[ci]);
        }
        mult_updates(&mut weights, &tabs, 800);
    }
    let _ = objective(&weights, &tabs);

    // Normalize to a proper mixture and drop numerically dead components.
    let wsum: f64 = weights.iter().sum();
    let mut pairs: Vec<(f64, f64)> = weights
        .iter()
        .zip(&vars)
        .filter(|(w, _)| **w / wsum > 1e-14)
        .map(|(w, v)| (*w / wsum, *v))
        .collect();
    pairs.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let renorm: f64 = pairs.iter().map(|(w, _)| w).sum();
    let weights: Vec<f64> = pairs.iter().map(|(w, _)| w / renorm).collect();
    let vars: Vec<f64> = pairs.iter().map(|(_, v)| *v).collect();
    let spec = GmmSpec::new(weights, vars)?;

    // Fit-failure criterion: the mixture must beat the single best Gaussian
    // in KL divergence to the inverted density.
    let g_fit: Vec<f64> = xs.iter().map(|&x| spec.pdf(x)).collect();
    let kl_fit = grid_kl(&f, &g_fit, h);
    let mut kl_single = f64::INFINITY;
    for i in 0..60 {
        let v = 0.05 * s2 * (4e4f64).powf(i as f64 / 59.0);
        let g1: Vec<f64> = xs.iter().map(|&x| gaussian_pdf(x, v)).collect();
        kl_single = kl_single.min(grid_kl(&f, &g1, h));
    }
    if kl_fit >= kl_single {
        return Err(GmmError::FitFailed(format!(
            "mixture KL {kl_fit:.3e} does not improve on best single Gaussian {kl_single:.3e}"
        )));
    }
    Ok(spec)
}
