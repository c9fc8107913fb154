//! Component-by-component Gaussian-mixture approximation of a symmetric
//! density (at most four components).
//!
//! The local Gaussian variance implied by two neighbouring samples,
//! sigma_f²(d) = (d_{i+1}² - d_i²) / (2 (ln f_i - ln f_{i+1})), is constant
//! wherever a single mixture component dominates. The fit walks outward from
//! the origin: the background component is taken (or estimated) first, then
//! each knee where the running residual reaches c0 times the reference
//! density spawns a component whose variance is read off the variance
//! function and whose weight matches the density ratio past the knee. A
//! final moment step reconciles the component budget with the target's mass
//! and variance.

use crate::distortion::DiscretePdf;
use crate::gmm::{GmmError, GmmSpec};
use crate::numerics::gaussian_pdf;

/// Local Gaussian variance estimates over the nonnegative half-grid.
#[derive(Debug, Clone)]
pub struct VarianceFunction {
    /// Amplitudes d_i (d_0 = 0).
    pub amplitudes: Vec<f64>,
    /// sigma_f²(d_i); `None` where the density is non-increasing-undefined.
    pub values: Vec<Option<f64>>,
}

impl VarianceFunction {
    /// Median of the defined estimates with index in [lo, hi].
    fn window_median(&self, lo: usize, hi: usize) -> Option<f64> {
        let mut vals: Vec<f64> = self.values[lo..=hi.min(self.values.len() - 1)]
            .iter()
            .flatten()
            .copied()
            .collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(vals[vals.len() / 2])
    }

    fn window_mean(&self, lo: usize, hi: usize) -> Option<f64> {
        let vals: Vec<f64> = self.values[lo..=hi.min(self.values.len() - 1)]
            .iter()
            .flatten()
            .copied()
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Per-point variance estimates from neighbouring density samples.
pub fn variance_function(pdf: &DiscretePdf) -> Result<VarianceFunction, GmmError> {
    let half = pdf.nonneg_half();
    if half.len() < 3 {
        return Err(GmmError::FitFailed("need at least 3 grid points".into()));
    }
    let h = pdf.grid().step();
    let mut amplitudes = Vec::with_capacity(half.len() - 1);
    let mut values = Vec::with_capacity(half.len() - 1);
    for i in 0..half.len() - 1 {
        let d0 = i as f64 * h;
        let d1 = (i + 1) as f64 * h;
        amplitudes.push(d0);
        let (f0, f1) = (half[i], half[i + 1]);
        if f0 > 1e-300 && f1 > 1e-300 && f0 > f1 {
            values.push(Some(0.5 * (d1 * d1 - d0 * d0) / (f0.ln() - f1.ln())));
        } else {
            values.push(None);
        }
    }
    Ok(VarianceFunction { amplitudes, values })
}

/// Local refinement of the per-knee variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceRefinement {
    /// Median of the variance function over (i_k, 2 i_k].
    #[default]
    WindowMedian,
    /// Mean over the same window.
    WindowMean,
    /// Raw value at the knee point.
    None,
}

/// Which Gaussian appears in the denominator of the weight ratio for
/// components three and four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightDenominator {
    /// The component being added (consistent with the component-2 rule).
    #[default]
    NewComponent,
    /// Always the second component.
    SecondComponent,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Knee detection factor: a new component is spawned where the residual
    /// reaches c0 times the reference density.
    pub c0: f64,
    pub refinement: VarianceRefinement,
    pub denominator: WeightDenominator,
    /// Reconcile the impulsive components with the target's mass and
    /// variance when the raw cascade misses the variance by more than 4%.
    pub moment_repair: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            c0: 0.9,
            refinement: VarianceRefinement::WindowMedian,
            denominator: WeightDenominator::NewComponent,
            moment_repair: true,
        }
    }
}

/// Result of the cascade: the fitted mixture plus diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted mixture; variances are in the (real-line) units of the target
    /// density.
    pub mixture: GmmSpec,
    /// Knee amplitudes where components 2.. were spawned.
    pub knees: Vec<f64>,
    /// First amplitude where the target falls below the numeric tolerance.
    pub d_max: f64,
    /// Sum of the raw impulsive weights before renormalization (a fit
    /// quality indicator; 1 means the ratio estimates were consistent).
    pub raw_weight_sum: f64,
}

/// Fit quality of a mixture against a tabulated density.
#[derive(Debug, Clone, Copy)]
pub struct FitReport {
    /// Discrete KL divergence of the target from the fit.
    pub kl: f64,
    /// Largest relative error where the target exceeds 1e-10.
    pub sup_relative_error: f64,
    pub raw_weight_sum: f64,
}

/// Density floor treated as numerically zero when locating d_max.
const D_MAX_TOLERANCE: f64 = 1e-15;

/// Approximates a symmetric normalized density by a mixture of at most four
/// zero-mean Gaussians.
///
/// `white` optionally supplies the background component (weight, variance);
/// when absent it is estimated from the variance function at the origin and
/// the density peak.
pub fn fit_gmm(
    target: &DiscretePdf,
    white: Option<(f64, f64)>,
    opts: &FitOptions,
) -> Result<FitResult, GmmError> {
    let peak = target.values().iter().cloned().fold(0.0, f64::max);
    if target.max_asymmetry() > 1e-6 * peak {
        return Err(GmmError::FitFailed(
            "target density is not symmetric".into(),
        ));
    }
    let mass = target.integral();
    if (mass - 1.0).abs() > 1e-3 {
        return Err(GmmError::FitFailed(format!(
            "target density integrates to {mass}"
        )));
    }
    let h = target.grid().step();
    let half = target.nonneg_half();
    let n = half.len();
    let vf = variance_function(target)?;

    // Total real-line variance of the target (symmetric tabulation).
    let total_var = {
        let mut acc = 0.0;
        for (i, f) in half.iter().enumerate().skip(1) {
            let d = i as f64 * h;
            acc += d * d * f;
        }
        2.0 * acc * h
    };

    let (w1, v1) = match white {
        Some((w, v)) => (w, v),
        None => {
            let v = vf.values[0].ok_or_else(|| {
                GmmError::FitFailed("variance function undefined at origin".into())
            })?;
            (half[0] / gaussian_pdf(0.0, v), v)
        }
    };
    let d_max_idx = half
        .iter()
        .position(|&f| f < D_MAX_TOLERANCE)
        .unwrap_or(n - 1);
    let d_max = d_max_idx as f64 * h;

    // Degenerate fit: the background explains everything.
    if 1.0 - w1 <= 1e-6 {
        return Ok(FitResult {
            mixture: GmmSpec::new(vec![1.0], vec![v1])?,
            knees: vec![],
            d_max,
            raw_weight_sum: 1.0,
        });
    }

    let g1: Vec<f64> = (0..n)
        .map(|i| w1 * gaussian_pdf(i as f64 * h, v1))
        .collect();
    let residual: Vec<f64> = half.iter().zip(&g1).map(|(f, g)| f - g).collect();
    let p_imp = 1.0 - w1;
    let f_di: Vec<f64> = residual.iter().map(|r| r / p_imp).collect();
    let var_imp_target = (total_var - w1 * v1) / p_imp;

    let first_crossing = |r: &[f64], reference: &[f64], start: usize| -> Option<usize> {
        (start..n).find(|&i| reference[i] > 1e-300 && r[i] - opts.c0 * reference[i] >= 0.0)
    };

    // Knee for component two compares against the total density.
    let i2 = first_crossing(&residual, half, 0);
    let (i2, _) = match i2 {
        Some(i) if i < d_max_idx => (i, ()),
        _ => {
            // Two-component closure: all impulsive mass in one Gaussian that
            // preserves the total variance.
            let v2 = var_imp_target.max(1e-300);
            return Ok(FitResult {
                mixture: GmmSpec::new(vec![w1, p_imp], vec![v1, v2])?,
                knees: vec![],
                d_max,
                raw_weight_sum: 1.0,
            });
        }
    };

    let window_variance = |ik: usize| -> Option<f64> {
        match opts.refinement {
            VarianceRefinement::WindowMedian => vf.window_median(ik, 2 * ik),
            VarianceRefinement::WindowMean => vf.window_mean(ik, 2 * ik),
            VarianceRefinement::None => vf.values.get(ik).copied().flatten(),
        }
    };

    let mut knees = vec![i2 as f64 * h];
    let mut within: Vec<(f64, f64)> = Vec::new(); // (weight within impulsive part, variance)
    let eval_weight = |ik: usize, denom_var: f64| -> f64 {
        let ie = ((1.5 * ik as f64).round() as usize)
            .min(d_max_idx.saturating_sub(1))
            .min(n - 1);
        f_di[ie] / gaussian_pdf(ie as f64 * h, denom_var).max(1e-300)
    };

    let v2 = window_variance(i2)
        .ok_or_else(|| GmmError::FitFailed("variance function empty near first knee".into()))?;
    let w2 = eval_weight(i2, v2);
    within.push((w2, v2));

    let mut r: Vec<f64> = (0..n)
        .map(|i| f_di[i] - w2 * gaussian_pdf(i as f64 * h, v2))
        .collect();
    let mut prev = i2;
    for _ in 0..2 {
        let ik = match first_crossing(&r, &f_di, prev) {
            Some(i) if i < d_max_idx => i,
            _ => break,
        };
        let vk = match window_variance(ik) {
            Some(v) => v,
            None => break,
        };
        let denom_var = match opts.denominator {
            WeightDenominator::NewComponent => vk,
            WeightDenominator::SecondComponent => v2,
        };
        let wk = eval_weight(ik, denom_var);
        if !(wk > 0.0) {
            break;
        }
        knees.push(ik as f64 * h);
        within.push((wk, vk));
        for (i, ri) in r.iter_mut().enumerate() {
            *ri -= wk * gaussian_pdf(i as f64 * h, vk);
        }
        prev = ik;
    }

    let raw_weight_sum: f64 = within.iter().map(|(w, _)| w).sum();
    for c in within.iter_mut() {
        c.0 /= raw_weight_sum;
    }

    if opts.moment_repair {
        moment_repair(&mut within, var_imp_target);
    }

    let mut weights = vec![w1];
    let mut variances = vec![v1];
    for (w, v) in &within {
        if *w > 0.0 {
            weights.push(p_imp * w);
            variances.push(*v);
        }
    }
    // Absorb any residual round-off so the weights sum to one exactly.
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    Ok(FitResult {
        mixture: GmmSpec::new(weights, variances)?,
        knees,
        d_max,
        raw_weight_sum,
    })
}

/// Reconciles the impulsive components with the target mass/variance budget
/// when the cascade misses the variance by more than 4%: project the weights
/// onto the two moment constraints when the variances bracket the target,
/// otherwise stretch the last (widest) component's variance.
fn moment_repair(within: &mut Vec<(f64, f64)>, var_target: f64) {
    let current: f64 = within.iter().map(|(w, v)| w * v).sum();
    if (current - var_target).abs() <= 0.04 * var_target {
        return;
    }
    let n = within.len();
    if n == 1 {
        within[0].1 = var_target.max(1e-300);
        return;
    }
    // Least-squares weight shift under sum(w) = 1, sum(w v) = var_target.
    let v: Vec<f64> = within.iter().map(|(_, v)| *v).collect();
    let w0: Vec<f64> = within.iter().map(|(w, _)| *w).collect();
    let sv: f64 = v.iter().sum();
    let svv: f64 = v.iter().map(|x| x * x).sum();
    let det = n as f64 * svv - sv * sv;
    let feasible = if det.abs() > 1e-300 {
        let b1 = 1.0 - w0.iter().sum::<f64>();
        let b2 = var_target - w0.iter().zip(&v).map(|(w, vv)| w * vv).sum::<f64>();
        let lam1 = (svv * b1 - sv * b2) / det;
        let lam2 = (n as f64 * b2 - sv * b1) / det;
        let w_new: Vec<f64> = w0
            .iter()
            .zip(&v)
            .map(|(w, vv)| w + lam1 + lam2 * vv)
            .collect();
        if w_new.iter().all(|w| *w >= 0.0) {
            for (c, w) in within.iter_mut().zip(&w_new) {
                c.0 = *w;
            }
            true
        } else {
            false
        }
    } else {
        false
    };
    if !feasible {
        // Variance budget outside the component hull: keep the cascade
        // weights and stretch the widest component to close the budget.
        let wl = within[n - 1].0;
        if wl > 0.0 {
            let others: f64 = within[..n - 1].iter().map(|(w, v)| w * v).sum();
            let v_new = (var_target - others) / wl;
            if v_new > 0.0 {
                within[n - 1].1 = v_new;
            }
        }
    }
}

/// Fit-quality report of a mixture against a tabulated symmetric density.
pub fn fit_report(target: &DiscretePdf, result: &FitResult) -> FitReport {
    let h = target.grid().step();
    let mut kl = 0.0;
    let mut sup = 0.0f64;
    for (i, &f) in target.values().iter().enumerate() {
        let d = target.grid().amplitude(i);
        let g = result.mixture.pdf(d).max(1e-300);
        if f > 1e-300 {
            kl += f * (f / g).ln();
        }
        if f > 1e-10 {
            sup = sup.max((g - f).abs() / f);
        }
    }
    FitReport {
        kl: kl * h,
        sup_relative_error: sup,
        raw_weight_sum: result.raw_weight_sum,
    }
}
