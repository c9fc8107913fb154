//! End-to-end analytical prediction pipelines: from a noise model and a
//! suppressor to the mixture query the SER predictors consume.
//!
//! Variance bookkeeping: the distortion densities live on the real line, so
//! their variances are per-quadrature; the SER queries use total complex
//! powers. The conversion (a factor of two on the fitted variances) happens
//! here, in one place.

use crate::distortion::{distortion_component_pdfs, DistortionError, DistortionMixture, Grid};
use crate::fitter::{fit_gmm, FitOptions, FitResult};
use crate::gmm::{GmmError, GmmSpec};
use crate::ser::SerQuery;
use crate::suppressor::{bussgang, distortion_mixture, SuppressorSpec};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Gmm(#[from] GmmError),
}

/// Everything the threshold pipeline produced on the way to a query.
#[derive(Debug, Clone)]
pub struct ThresholdPrediction {
    pub alpha: f64,
    pub distortion: DistortionMixture,
    pub fit: FitResult,
    pub query: SerQuery,
}

/// Grid for the distortion densities of a threshold suppressor, sized from
/// the scales that actually appear in the distortion (not the raw received
/// envelope, whose deviation can be orders of magnitude wider).
pub fn distortion_grid(signal_power: f64, noise: &GmmSpec, spec: &SuppressorSpec) -> Grid {
    let sx_dim = (signal_power / 2.0).sqrt();
    let s0_dim = (noise.variances()[0] / 2.0).sqrt();
    let smax_dim = noise
        .variances()
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(noise.variances()[0])
        .sqrt()
        / std::f64::consts::SQRT_2;
    let a_t = spec.thresholds.first().copied().unwrap_or(f64::INFINITY);
    let g_above = match spec.kind {
        crate::suppressor::SuppressorKind::Blanking => 0.0,
        _ => spec.gains.last().copied().unwrap_or(1.0),
    };
    let span = if a_t.is_infinite() {
        10.0 * (sx_dim * sx_dim + smax_dim * smax_dim).sqrt()
    } else {
        (a_t + 12.0 * sx_dim.max(s0_dim))
            .max(10.0 * (sx_dim * sx_dim + s0_dim * s0_dim).sqrt())
            .max(10.0 * (g_above.abs() * smax_dim + sx_dim))
    };
    Grid::new(span, 6000)
}

/// Threshold-suppressor prediction: distortion component densities, their
/// mixture fit, and the resulting per-sample query for the pattern sums.
pub fn threshold_prediction(
    m: usize,
    l: usize,
    signal_power: f64,
    noise: &GmmSpec,
    spec: &SuppressorSpec,
    grid: Option<Grid>,
    fit_opts: &FitOptions,
) -> Result<ThresholdPrediction, PipelineError> {
    let alpha = bussgang(spec, signal_power, noise).alpha;
    let grid = grid.unwrap_or_else(|| distortion_grid(signal_power, noise, spec));
    let distortion = distortion_component_pdfs(noise, spec, alpha, signal_power, &grid)?;
    let total = distortion.total();
    let white = (distortion.weights[0], distortion.variances[0]);
    let fit = fit_gmm(&total, Some(white), fit_opts)?;
    // Real-line variances -> complex powers -> relative variances.
    let gammas: Vec<f64> = fit
        .mixture
        .variances()
        .iter()
        .map(|v| 2.0 * v / signal_power)
        .collect();
    let query = SerQuery::new(m, l, fit.mixture.weights().to_vec(), gammas, alpha);
    Ok(ThresholdPrediction {
        alpha,
        distortion,
        fit,
        query,
    })
}

/// Per-component conditional query for suppressors whose output stays
/// component-wise tractable (genie-aided gains, multi-threshold attenuation,
/// or no suppression at all).
pub fn component_query(
    m: usize,
    l: usize,
    signal_power: f64,
    noise: &GmmSpec,
    spec: &SuppressorSpec,
) -> SerQuery {
    let (alpha, weights, dist_vars) = distortion_mixture(spec, signal_power, noise);
    let gammas: Vec<f64> = dist_vars.iter().map(|v| v / signal_power).collect();
    SerQuery::new(m, l, weights, gammas, alpha)
}

/// Average output SNR of the suppressed link, the quantity the
/// Gaussian-approximation (AWGN-only) and fading predictors consume.
pub fn output_snr(signal_power: f64, noise: &GmmSpec, spec: &SuppressorSpec) -> f64 {
    crate::suppressor::output_snr(spec, signal_power, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ser::{ser_awgn_mqam, ser_kgmm};
    use crate::suppressor::{optimize_threshold, SuppressorKind};
    use approx::assert_relative_eq;

    #[test]
    fn identity_pipeline_reduces_to_unmitigated_query() {
        let noise = GmmSpec::bernoulli_gaussian(0.01, 20.0, -10.0, 1.0).unwrap();
        let q = component_query(4, 256, 1.0, &noise, &SuppressorSpec::none());
        assert_eq!(q.alpha, 1.0);
        for (g, v) in q.gammas.iter().zip(noise.variances()) {
            assert_relative_eq!(*g, *v, max_relative = 1e-12);
        }
        let direct = SerQuery::unmitigated(4, 256, &noise, 1.0);
        assert_relative_eq!(ser_kgmm(&q), ser_kgmm(&direct), max_relative = 1e-12);
    }

    #[test]
    fn gad_component_query_collapses_for_single_component() {
        // One noise component: conditional distortion power equals the
        // Wiener error, so the query reproduces the AWGN SER at the input
        // SNR.
        let noise = GmmSpec::single(0.02).unwrap();
        let spec = SuppressorSpec::genie_aided(1.0, &noise);
        let q = component_query(4, 256, 1.0, &noise, &spec);
        assert_relative_eq!(ser_kgmm(&q), ser_awgn_mqam(50.0, 4), max_relative = 1e-10);
    }

    #[test]
    fn threshold_prediction_consistency() {
        let noise = GmmSpec::bernoulli_gaussian(0.01, 25.0, -10.0, 1.0).unwrap();
        let spec =
            optimize_threshold(SuppressorKind::SingleThresholdAttenuation, 1.0, &noise).unwrap();
        let pred =
            threshold_prediction(4, 256, 1.0, &noise, &spec, None, &FitOptions::default()).unwrap();
        // fitted mixture preserves the distortion variance (real-line units)
        let fit_var = pred.fit.mixture.total_power();
        assert_relative_eq!(
            fit_var,
            pred.distortion.total_variance(),
            max_relative = 0.05
        );
        // query gammas are complex powers relative to the signal
        for (g, v) in pred.query.gammas.iter().zip(pred.fit.mixture.variances()) {
            assert_relative_eq!(*g, 2.0 * v, max_relative = 1e-12);
        }
        let k = pred.fit.mixture.component_count();
        assert!((2..=4).contains(&k), "fitted component count {k}");
        let ser = ser_kgmm(&pred.query);
        assert!(ser > 0.0 && ser < 1.0);
    }
}
