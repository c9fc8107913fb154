//! Sweep configuration: TOML schema for the predict/simulate commands.

use serde::Deserialize;
use serlab::gmm::GmmSpec;
use serlab::sim::ChannelSpec;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub modulation: Modulation,
    #[serde(default)]
    pub channel: Channel,
    pub axis: Axis,
    pub noise: Noise,
    #[serde(default)]
    pub suppressor: Suppressor,
    pub methods: Methods,
    #[serde(default)]
    pub fit: Fit,
    #[serde(default, rename = "curve")]
    pub curves: Vec<Curve>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub order: usize,
    #[serde(default = "default_subcarriers")]
    pub subcarriers: usize,
    #[serde(default = "default_cp")]
    pub cp_len: usize,
}

fn default_subcarriers() -> usize {
    256
}

fn default_cp() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    #[serde(default)]
    pub kind: ChannelKindCfg,
    #[serde(default = "default_taps")]
    pub taps: usize,
    #[serde(default)]
    pub uniform_profile: bool,
    #[serde(default)]
    pub k_factor: f64,
}

fn default_taps() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKindCfg {
    #[default]
    Flat,
    Rayleigh,
    Rician,
}

impl Channel {
    pub fn to_spec(&self) -> ChannelSpec {
        match self.kind {
            ChannelKindCfg::Flat => ChannelSpec::flat(),
            ChannelKindCfg::Rayleigh => {
                if self.uniform_profile {
                    ChannelSpec::rayleigh_uniform(self.taps)
                } else {
                    ChannelSpec::rayleigh(self.taps)
                }
            }
            ChannelKindCfg::Rician => {
                if self.uniform_profile {
                    ChannelSpec::rician_uniform(self.taps, self.k_factor)
                } else {
                    ChannelSpec::rician(self.taps, self.k_factor)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    SirDb,
    SnrDb,
}

impl Axis {
    pub fn points(&self) -> anyhow::Result<Vec<f64>> {
        if !(self.step > 0.0) || self.stop < self.start {
            anyhow::bail!("axis range is empty or step not positive");
        }
        let n = ((self.stop - self.start) / self.step).round() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub model: NoiseModel,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub sir_db: f64,
    pub p1: Option<f64>,
    pub a: Option<f64>,
    pub components: Option<usize>,
    pub alpha: Option<f64>,
    pub fit_range: Option<f64>,
    pub gamma: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub variances: Option<Vec<f64>>,
}

fn default_snr() -> f64 {
    25.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    BernoulliGaussian,
    ClassA,
    Sas,
    Gmm,
}

impl Noise {
    /// Builds the mixture at the given axis point (signal power one).
    pub fn build(&self, snr_db: f64, sir_db: f64) -> anyhow::Result<GmmSpec> {
        Ok(match self.model {
            NoiseModel::BernoulliGaussian => {
                let p1 = self
                    .p1
                    .ok_or_else(|| anyhow::anyhow!("bernoulli_gaussian needs p1"))?;
                GmmSpec::bernoulli_gaussian(p1, snr_db, sir_db, 1.0)?
            }
            NoiseModel::ClassA => {
                let a = self.a.ok_or_else(|| anyhow::anyhow!("class_a needs a"))?;
                let k = self.components.unwrap_or(10);
                GmmSpec::class_a(a, snr_db, sir_db, 1.0, k)?
            }
            NoiseModel::Sas => {
                // scale the unit-dispersion fit so the impulsive part meets
                // the requested SIR, then prepend the background component
                let alpha = self
                    .alpha
                    .ok_or_else(|| anyhow::anyhow!("sas needs alpha"))?;
                let k = self.components.unwrap_or(16);
                let fit_range = self.fit_range.unwrap_or(50.0);
                let gamma = self.gamma.unwrap_or(1.0);
                let p1 = self.p1.ok_or_else(|| anyhow::anyhow!("sas needs p1"))?;
                let base = serlab::sas::approximate_sas(alpha, k, fit_range, gamma)?;
                let target_imp = 1.0 / 10f64.powf(sir_db / 10.0);
                let scale = target_imp / base.total_power();
                let s0 = 1.0 / 10f64.powf(snr_db / 10.0);
                let mut weights = vec![1.0 - p1];
                let mut variances = vec![s0];
                for (w, v) in base.weights().iter().zip(base.variances()) {
                    weights.push(p1 * w);
                    variances.push(v * scale);
                }
                GmmSpec::new(weights, variances)?
            }
            NoiseModel::Gmm => {
                let w = self
                    .weights
                    .clone()
                    .ok_or_else(|| anyhow::anyhow!("gmm needs weights"))?;
                let v = self
                    .variances
                    .clone()
                    .ok_or_else(|| anyhow::anyhow!("gmm needs variances"))?;
                GmmSpec::new(w, v)?
            }
        })
    }

    pub fn supports_sweep(&self) -> bool {
        self.model != NoiseModel::Gmm
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suppressor {
    #[serde(default)]
    pub kind: SuppressorKindCfg,
    /// Absolute envelope threshold; mutually exclusive with
    /// `threshold_sigma_y` and `optimize`.
    pub threshold: Option<f64>,
    /// Threshold in units of the received deviation sigma_y.
    pub threshold_sigma_y: Option<f64>,
    #[serde(default = "default_true")]
    pub optimize: bool,
    /// Explicit bin gains (overrides the posterior-MMSE defaults).
    pub gains: Option<Vec<f64>>,
    /// Thresholds for the multi-threshold kind, as sigma_y multiples.
    pub bas_thresholds: Option<usize>,
    /// Re-derive the device per fading block.
    #[serde(default = "default_true")]
    pub adapt: bool,
}

fn default_true() -> bool {
    true
}

impl Default for Suppressor {
    fn default() -> Self {
        Self {
            kind: SuppressorKindCfg::None,
            threshold: None,
            threshold_sigma_y: None,
            optimize: true,
            gains: None,
            bas_thresholds: None,
            adapt: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SuppressorKindCfg {
    #[default]
    None,
    Blanking,
    Clipping,
    ClipBlank,
    Attenuation,
    Bas,
    Gad,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Methods {
    pub analytic: Vec<Method>,
    #[serde(default)]
    pub simulate: bool,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Awgn,
    Gmm2,
    Kgmm,
    KgmmFit,
    RayleighW,
    RiceW,
    RiceKgmm,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Awgn => "awgn",
            Method::Gmm2 => "gmm2",
            Method::Kgmm => "kgmm",
            Method::KgmmFit => "kgmm_fit",
            Method::RayleighW => "rayleigh_w",
            Method::RiceW => "rice_w",
            Method::RiceKgmm => "rice_kgmm",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Fit {
    pub c0: Option<f64>,
}

/// Per-curve overrides: label plus optional noise/suppressor/channel blocks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub label: String,
    pub noise: Option<Noise>,
    pub suppressor: Option<Suppressor>,
    pub channel: Option<Channel>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: SweepConfig = toml::from_str(text)?;
        if cfg.methods.analytic.is_empty() && !cfg.methods.simulate {
            anyhow::bail!("no methods requested: list analytic methods or enable simulate");
        }
        if cfg.methods.simulate && cfg.methods.budget == 0 {
            anyhow::bail!("simulation budget must be positive");
        }
        cfg.axis.points()?;
        Ok(cfg)
    }

    /// The effective curve list: the top-level blocks when no explicit
    /// curves are given.
    pub fn effective_curves(&self) -> Vec<(String, Noise, Suppressor, Channel)> {
        if self.curves.is_empty() {
            return vec![(
                "ser".to_string(),
                self.noise.clone(),
                self.suppressor.clone(),
                self.channel.clone(),
            )];
        }
        self.curves
            .iter()
            .map(|c| {
                (
                    c.label.clone(),
                    c.noise.clone().unwrap_or_else(|| self.noise.clone()),
                    c.suppressor
                        .clone()
                        .unwrap_or_else(|| self.suppressor.clone()),
                    c.channel.clone().unwrap_or_else(|| self.channel.clone()),
                )
            })
            .collect()
    }
}
