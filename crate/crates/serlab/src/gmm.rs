//! Zero-mean Gaussian mixture noise models.
//!
//! A [`GmmSpec`] holds the component probabilities and variances of a K-term
//! zero-mean Gaussian mixture. Component 0 is the background ("white")
//! component by convention; components 1..K-1 model impulsive events.
//!
//! All variances are total complex powers: a component with variance `v`
//! produces circularly symmetric complex samples with per-quadrature
//! variance `v/2`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::gaussian_pdf;

/// Errors raised by mixture construction and fitting.
#[derive(Debug, thiserror::Error)]
pub enum GmmError {
    #[error("weights must sum to 1 (got {0})")]
    WeightsNotNormalized(f64),
    #[error("weight out of range (0, 1]: {0}")]
    WeightOutOfRange(f64),
    #[error("variance must be positive (got {0})")]
    NonPositiveVariance(f64),
    #[error("mixture needs at least one component")]
    Empty,
    #[error("parameter {name} out of range: {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("mixture fit failed: {0}")]
    FitFailed(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

/// A K-component zero-mean Gaussian mixture (weights + variances).
#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    weights: Vec<f64>,
    variances: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GmmSpecRepr {
    weights: Vec<f64>,
    variances: Vec<f64>,
}

/// One complex noise draw together with the index of the mixture component
/// that generated it (the noise-state information a genie-aided suppressor
/// consumes).
#[derive(Debug, Clone, Copy)]
pub struct NoiseSample {
    pub value: Complex64,
    pub component: usize,
}

impl GmmSpec {
    /// Builds a mixture from raw weights and variances, validating the
    /// invariants (weights in (0, 1] summing to 1, variances positive).
    pub fn new(weights: Vec<f64>, variances: Vec<f64>) -> Result<Self, GmmError> {
        if weights.is_empty() || weights.len() != variances.len() {
            return Err(GmmError::Empty);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GmmError::WeightsNotNormalized(sum));
        }
        for &w in &weights {
            if !(w > 0.0 && w <= 1.0) {
                return Err(GmmError::WeightOutOfRange(w));
            }
        }
        for &v in &variances {
            if !(v > 0.0) {
                return Err(GmmError::NonPositiveVariance(v));
            }
        }
        Ok(Self { weights, variances })
    }

    /// Single Gaussian component of the given variance.
    pub fn single(variance: f64) -> Result<Self, GmmError> {
        Self::new(vec![1.0], vec![variance])
    }

    /// Two-component Bernoulli-Gaussian model: background component at the
    /// given SNR, impulses of probability `p1` at the given SIR.
    ///
    /// `sigma_0² = signal_power / 10^(snr_db/10)`,
    /// `sigma_1² = signal_power / 10^(sir_db/10)`.
    pub fn bernoulli_gaussian(
        p1: f64,
        snr_db: f64,
        sir_db: f64,
        signal_power: f64,
    ) -> Result<Self, GmmError> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(GmmError::BadParameter {
                name: "p1",
                value: p1,
            });
        }
        if !(signal_power > 0.0) {
            return Err(GmmError::BadParameter {
                name: "signal_power",
                value: signal_power,
            });
        }
        let s0 = signal_power / 10f64.powf(snr_db / 10.0);
        let s1 = signal_power / 10f64.powf(sir_db / 10.0);
        Self::new(vec![1.0 - p1, p1], vec![s0, s1])
    }

    /// Middleton Class-A model truncated to `k` components.
    ///
    /// Raw Poisson weights `p_k = e^{-A} A^k / k!` and variances
    /// `sigma_k² = sigma_W² + sigma_I² k/A` are renormalized so that the
    /// weights sum to one and the total mixture power equals the untruncated
    /// power `sigma_W² + sigma_I²`.
    pub fn class_a(
        a: f64,
        snr_db: f64,
        sir_db: f64,
        signal_power: f64,
        k: usize,
    ) -> Result<Self, GmmError> {
        if !(a > 0.0) {
            return Err(GmmError::BadParameter {
                name: "a",
                value: a,
            });
        }
        if k < 2 {
            return Err(GmmError::BadParameter {
                name: "k",
                value: k as f64,
            });
        }
        if !(signal_power > 0.0) {
            return Err(GmmError::BadParameter {
                name: "signal_power",
                value: signal_power,
            });
        }
        let sw = signal_power / 10f64.powf(snr_db / 10.0);
        let si = signal_power / 10f64.powf(sir_db / 10.0);
        let mut weights = Vec::with_capacity(k);
        let mut variances = Vec::with_capacity(k);
        let mut ln_fact = 0.0;
        for kk in 0..k {
            if kk > 0 {
                ln_fact += (kk as f64).ln();
            }
            let p = (-a + kk as f64 * a.ln() - ln_fact).exp();
            weights.push(p);
            variances.push(sw + si * kk as f64 / a);
        }
        let sp: f64 = weights.iter().sum();
        let sv: f64 = weights.iter().zip(&variances).map(|(p, v)| p * v).sum();
        let total = sw + si;
        let var_scale = total * sp / sv;
        for w in &mut weights {
            *w /= sp;
        }
        for v in &mut variances {
            *v *= var_scale;
        }
        // Guard against weights that truncate to exactly 0 in f64.
        let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if keep.len() != weights.len() {
            weights = keep.iter().map(|&i| weights[i]).collect();
            let s: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= s;
            }
            variances = keep.iter().map(|&i| variances[i]).collect();
        }
        Self::new(weights, variances)
    }

    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Total mixture power sum(p_k sigma_k²).
    pub fn total_power(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.variances)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Probability that a sample is impulsive, p_I = sum_{k>=1} p_k.
    pub fn impulse_probability(&self) -> f64 {
        self.weights.iter().skip(1).sum()
    }

    /// Average impulse-event power sigma_I² = sum_{k>=1} p_k sigma_k² / p_I.
    /// Returns 0 when there is no impulsive component.
    pub fn impulsive_power(&self) -> f64 {
        let p_i = self.impulse_probability();
        if p_i <= 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.variances)
            .skip(1)
            .map(|(p, v)| p * v)
            .sum();
        s / p_i
    }

    /// Signal-to-impulsive-noise ratio in dB for the given signal power.
    pub fn sir_db(&self, signal_power: f64) -> f64 {
        10.0 * (signal_power / self.impulsive_power()).log10()
    }

    /// Relative variances gamma_k = sigma_k² / signal_power.
    pub fn relative_variances(&self, signal_power: f64) -> Vec<f64> {
        self.variances.iter().map(|v| v / signal_power).collect()
    }

    /// Collapses components 1..K-1 into a single impulsive component with
    /// matched probability and power, yielding the 2-component approximation.
    pub fn collapse_to_two(&self) -> Result<GmmSpec, GmmError> {
        if self.component_count() <= 2 {
            return Ok(self.clone());
        }
        let p_i = self.impulse_probability();
        GmmSpec::new(
            vec![self.weights[0], p_i],
            vec![self.variances[0], self.impulsive_power()],
        )
    }

    /// Scalar mixture density sum(p_k G(x; sigma_k²)).
    pub fn pdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.variances)
            .map(|(p, v)| p * gaussian_pdf(x, *v))
            .sum()
    }

    /// Draws `n` i.i.d. circular complex samples, recording per-sample
    /// component labels. Deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<NoiseSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        self.sample_into(&mut rng, n, &mut out);
        out
    }

    /// Same as [`Self::sample`] but appends to `out` using the caller's RNG.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, n: usize, out: &mut Vec<NoiseSample>) {
        // Cumulative weights for inverse-CDF component selection.
        let mut cum = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cum.push(acc);
        }
        let sigma_dim: Vec<f64> = self.variances.iter().map(|v| (v / 2.0).sqrt()).collect();
        for _ in 0..n {
            let u: f64 = rng.gen();
            let component = cum.partition_point(|&c| c < u).min(self.weights.len() - 1);
            let s = sigma_dim[component];
            let re = standard_normal(rng) * s;
            let im = standard_normal(rng) * s;
            out.push(NoiseSample {
                value: Complex64::new(re, im),
                component,
            });
        }
    }

    /// Serializes to the plain-text key-value block used by the CLI config
    /// format (exact decimal round-trip).
    pub fn to_config_block(&self) -> String {
        let repr = GmmSpecRepr {
            weights: self.weights.clone(),
            variances: self.variances.clone(),
        };
        toml::to_string(&repr).expect("gmm spec serialization cannot fail")
    }

    /// Parses the key-value block produced by [`Self::to_config_block`].
    pub fn from_config_block(text: &str) -> Result<Self, GmmError> {
        let repr: GmmSpecRepr = toml::from_str(text).map_err(|e| GmmError::Parse(e.to_string()))?;
        Self::new(repr.weights, repr.variances)
    }
}

/// Marsaglia polar method; avoids the trig of Box-Muller.
#[inline]
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        let v: f64 = rng.gen::<f64>() * 2.0 - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bernoulli_gaussian_matches_db_conversions() {
        let g = GmmSpec::bernoulli_gaussian(0.01, 25.0, -10.0, 1.0).unwrap();
        assert_eq!(g.weights(), &[0.99, 0.01]);
        assert_relative_eq!(g.variances()[0], 10f64.powf(-2.5), max_relative = 1e-15);
        assert_relative_eq!(g.variances()[1], 10.0, max_relative = 1e-15);
    }

    #[test]
    fn bernoulli_gaussian_equal_snr_sir() {
        let g = GmmSpec::bernoulli_gaussian(0.5, 20.0, 20.0, 1.0).unwrap();
        assert_eq!(g.variances()[0], g.variances()[1]);
        assert_relative_eq!(g.total_power(), g.variances()[0], max_relative = 1e-15);
    }

    #[test]
    fn bernoulli_gaussian_rejects_bad_inputs() {
        assert!(GmmSpec::bernoulli_gaussian(0.0, 25.0, -10.0, 1.0).is_err());
        assert!(GmmSpec::bernoulli_gaussian(1.0, 25.0, -10.0, 1.0).is_err());
        assert!(GmmSpec::bernoulli_gaussian(0.1, 25.0, -10.0, 0.0).is_err());
    }

    #[test]
    fn sir_round_trip() {
        let g = GmmSpec::bernoulli_gaussian(0.01, 25.0, -17.3, 2.5).unwrap();
        assert_relative_eq!(g.sir_db(2.5), -17.3, epsilon = 1e-9);
    }

    #[test]
    fn class_a_raw_poisson_weights() {
        // Weights proportional to e^{-A} A^k / k! before renormalization;
        // ratios survive the renormalization.
        let g = GmmSpec::class_a(0.1, 25.0, -20.0, 1.0, 4).unwrap();
        let w = g.weights();
        assert_relative_eq!(w[1] / w[0], 0.1, max_relative = 1e-12);
        assert_relative_eq!(w[2] / w[0], 0.005, max_relative = 1e-12);
        let sum: f64 = w.iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn class_a_preserves_total_power() {
        for &(a, k) in &[(0.1, 4usize), (1.0, 10), (0.01, 3)] {
            let g = GmmSpec::class_a(a, 25.0, -20.0, 1.0, k).unwrap();
            let sw = 10f64.powf(-2.5);
            let si = 100.0;
            assert_relative_eq!(g.total_power(), sw + si, epsilon = 1e-10);
            let sum: f64 = g.weights().iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn class_a_rejects_bad_inputs() {
        assert!(GmmSpec::class_a(0.0, 25.0, -20.0, 1.0, 4).is_err());
        assert!(GmmSpec::class_a(0.1, 25.0, -20.0, 1.0, 1).is_err());
    }

    #[test]
    fn pdf_standard_normal_peak() {
        let g = GmmSpec::single(1.0).unwrap();
        assert_relative_eq!(
            g.pdf(0.0),
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn pdf_is_mixture_of_components() {
        let g = GmmSpec::bernoulli_gaussian(0.1, 20.0, -10.0, 1.0).unwrap();
        let expect =
            0.9 * gaussian_pdf(0.0, g.variances()[0]) + 0.1 * gaussian_pdf(0.0, g.variances()[1]);
        assert_relative_eq!(g.pdf(0.0), expect, max_relative = 1e-15);
    }

    #[test]
    fn pdf_normalizes_on_wide_grid() {
        let g = GmmSpec::bernoulli_gaussian(0.05, 15.0, -5.0, 1.0).unwrap();
        let smax = g.variances().iter().cloned().fold(0.0, f64::max).sqrt();
        let span = 12.0 * smax;
        let n = 200_000;
        let h = 2.0 * span / n as f64;
        let mut sum = crate::numerics::KahanSum::new();
        for i in 0..=n {
            sum.add(g.pdf(-span + i as f64 * h));
        }
        assert_relative_eq!(sum.value() * h, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn pdf_is_even() {
        let g = GmmSpec::class_a(0.2, 20.0, -15.0, 1.0, 5).unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.37;
            assert_eq!(g.pdf(x), g.pdf(-x));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let g = GmmSpec::bernoulli_gaussian(0.1, 20.0, -10.0, 1.0).unwrap();
        let a = g.sample(1000, 42);
        let b = g.sample(1000, 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value, y.value);
            assert_eq!(x.component, y.component);
        }
        let c = g.sample(1000, 43);
        assert!(a.iter().zip(&c).any(|(x, y)| x.value != y.value));
    }

    #[test]
    fn sample_label_frequencies_match_weights() {
        let g = GmmSpec::bernoulli_gaussian(0.05, 20.0, -10.0, 1.0).unwrap();
        let n = 1_000_000;
        let samples = g.sample(n, 7);
        let count1 = samples.iter().filter(|s| s.component == 1).count() as f64;
        let p = 0.05;
        let tol = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((count1 / n as f64 - p).abs() < tol);
    }

    #[test]
    fn sample_variance_matches_total_power() {
        let g = GmmSpec::bernoulli_gaussian(0.01, 25.0, -10.0, 1.0).unwrap();
        let n = 1_000_000;
        let samples = g.sample(n, 11);
        let pow: f64 = samples.iter().map(|s| s.value.norm_sqr()).sum::<f64>() / n as f64;
        assert_relative_eq!(pow, g.total_power(), max_relative = 0.01);
    }

    #[test]
    fn class_a_large_a_is_nearly_gaussian() {
        // As A grows the mixture collapses toward a single Gaussian; the
        // excess kurtosis of the samples' real part goes to zero. The
        // theoretical excess at finite A is 3/A * (sigma_I²/sigma_total²)²,
        // so balanced component powers keep the A = 50 check inside 0.05.
        let g = GmmSpec::class_a(50.0, 10.0, 10.0, 1.0, 120).unwrap();
        let n = 1_000_000;
        let samples = g.sample(n, 5);
        let (mut m2, mut m4) = (0.0, 0.0);
        for s in &samples {
            let x = s.value.re;
            m2 += x * x;
            m4 += x * x * x * x;
        }
        m2 /= n as f64;
        m4 /= n as f64;
        let excess = m4 / (m2 * m2) - 3.0;
        assert!(excess.abs() < 0.05, "excess kurtosis {excess}");
    }

    #[test]
    fn config_block_round_trip_exact() {
        let g = GmmSpec::class_a(0.137, 23.1, -31.7, 1.0, 6).unwrap();
        let text = g.to_config_block();
        let back = GmmSpec::from_config_block(&text).unwrap();
        assert_eq!(g, back);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn config_block_round_trips_any_valid_mixture(
            raw in prop::collection::vec((1e-6f64..1.0, 1e-9f64..1e6), 1..8)
        ) {
            let total: f64 = raw.iter().map(|(w, _)| w).sum();
            let weights: Vec<f64> = raw.iter().map(|(w, _)| w / total).collect();
            let variances: Vec<f64> = raw.iter().map(|(_, v)| *v).collect();
            prop_assume!(GmmSpec::new(weights.clone(), variances.clone()).is_ok());
            let spec = GmmSpec::new(weights, variances).unwrap();
            let back = GmmSpec::from_config_block(&spec.to_config_block()).unwrap();
            prop_assert_eq!(spec, back);
        }

        #[test]
        fn pdf_even_and_positive(
            x in -50.0f64..50.0,
            p1 in 1e-6f64..0.999,
            sir in -40.0f64..20.0
        ) {
            let spec = GmmSpec::bernoulli_gaussian(p1, 20.0, sir, 1.0).unwrap();
            prop_assert!(spec.pdf(x) >= 0.0);
            prop_assert_eq!(spec.pdf(x), spec.pdf(-x));
        }
    }
}
