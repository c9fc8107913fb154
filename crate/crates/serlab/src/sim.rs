//! Monte Carlo OFDM link simulator: the independent oracle for every
//! analytical SER prediction in this crate.
//!
//! Pipeline per block: QAM map -> unitary inverse DFT -> (cyclic channel
//! convolution for fading kinds) -> mixture noise -> nonlinear suppressor ->
//! DFT -> zero-forcing equalization -> Bussgang gain compensation ->
//! minimum-distance demap -> error count. Campaigns split across workers by
//! block ranges with per-range deterministic RNG streams, so results do not
//! depend on the thread schedule.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::gmm::{standard_normal, GmmSpec};
use crate::suppressor::{bussgang, optimize_threshold, SuppressorKind, SuppressorSpec};

/// OFDM block parameters.
#[derive(Debug, Clone, Copy)]
pub struct OfdmParams {
    /// Subcarrier count L.
    pub subcarriers: usize,
    /// Square QAM order M.
    pub qam_order: usize,
    /// Cyclic prefix length (must cover the channel memory).
    pub cp_len: usize,
    /// Average transmit power per sample.
    pub signal_power: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            subcarriers: 256,
            qam_order: 4,
            cp_len: 8,
            signal_power: 1.0,
        }
    }
}

/// Channel models for the simulator.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    /// Per-tap average powers, summing to one.
    pub tap_powers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    Flat,
    RayleighBlock,
    /// Line-of-sight factor K_r (LoS power against total scattered power).
    RicianBlock {
        k_factor: f64,
    },
}

impl ChannelSpec {
    pub fn flat() -> Self {
        Self {
            kind: ChannelKind::Flat,
            tap_powers: vec![1.0],
        }
    }

    /// Exponential power profile over `taps` taps, normalized to unit power.
    pub fn rayleigh(taps: usize) -> Self {
        Self {
            kind: ChannelKind::RayleighBlock,
            tap_powers: exp_profile(taps),
        }
    }

    /// Uniform power profile: with as many taps as subcarriers the
    /// frequency-domain fades become independent across subcarriers, the
    /// exact setting of the closed-form fading averages.
    pub fn rayleigh_uniform(taps: usize) -> Self {
        Self {
            kind: ChannelKind::RayleighBlock,
            tap_powers: vec![1.0 / taps as f64; taps],
        }
    }

    /// Rician with a uniform scattered profile.
    pub fn rician_uniform(taps: usize, k_r: f64) -> Self {
        assert!(k_r >= 0.0);
        Self {
            kind: ChannelKind::RicianBlock { k_factor: k_r },
            tap_powers: vec![1.0 / taps as f64; taps],
        }
    }

    /// Rician block fading: LoS component on tap zero with factor `k_r`,
    /// scattered power on an exponential profile.
    pub fn rician(taps: usize, k_r: f64) -> Self {
        assert!(k_r >= 0.0);
        Self {
            kind: ChannelKind::RicianBlock { k_factor: k_r },
            tap_powers: exp_profile(taps),
        }
    }

    pub fn taps(&self) -> usize {
        self.tap_powers.len()
    }
}

fn exp_profile(taps: usize) -> Vec<f64> {
    assert!(taps >= 1);
    let mut p: Vec<f64> = (0..taps).map(|l| (-(l as f64) / 2.0).exp()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// How the campaign derives the suppressor for each block.
#[derive(Debug, Clone)]
pub enum SuppressorPolicy {
    /// Fixed device applied to every block.
    Fixed(SuppressorSpec),
    /// Re-derived per block from the block's effective signal power:
    /// threshold kinds re-run the output-SNR optimization, the genie-aided
    /// and multi-threshold kinds rebuild their gains.
    Adaptive(SuppressorKind),
}

impl SuppressorPolicy {
    fn resolve(&self, signal_power: f64, noise: &GmmSpec) -> SuppressorSpec {
        match self {
            SuppressorPolicy::Fixed(spec) => spec.clone(),
            SuppressorPolicy::Adaptive(kind) => match kind {
                SuppressorKind::None => SuppressorSpec::none(),
                SuppressorKind::GenieAided => SuppressorSpec::genie_aided(signal_power, noise),
                SuppressorKind::MultiThresholdBas => {
                    SuppressorSpec::bas_mmse(10, signal_power, noise)
                        .expect("BAS construction with positive power cannot fail")
                }
                k => optimize_threshold(*k, signal_power, noise)
                    .expect("threshold optimization with positive power cannot fail"),
            },
        }
    }
}

/// Monte Carlo SER estimate with a 95% Wilson confidence half-width.
#[derive(Debug, Clone, Copy)]
pub struct SerEstimate {
    pub errors: u64,
    pub tried: u64,
    /// Blocks dropped for near-singular zero-forcing inversions.
    pub dropped_blocks: u64,
}

impl SerEstimate {
    pub fn ser(&self) -> f64 {
        if self.tried == 0 {
            return 0.0;
        }
        self.errors as f64 / self.tried as f64
    }

    /// Half-width of the 95% Wilson score interval.
    pub fn wilson_half_width(&self) -> f64 {
        if self.tried == 0 {
            return 1.0;
        }
        let n = self.tried as f64;
        let p = self.errors as f64 / n;
        let z = 1.959963984540054_f64;
        let z2 = z * z;
        z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
    }

    /// Wilson interval center (shrinks toward 1/2 for tiny samples).
    pub fn wilson_center(&self) -> f64 {
        if self.tried == 0 {
            return 0.5;
        }
        let n = self.tried as f64;
        let p = self.errors as f64 / n;
        let z2 = 1.959963984540054_f64.powi(2);
        (p + z2 / (2.0 * n)) / (1.0 + z2 / n)
    }
}

/// Gray-coded square-QAM mapper with unit average energy.
#[derive(Debug, Clone)]
pub struct QamMapper {
    m: usize,
    side: usize,
    scale: f64,
    gray_to_level: Vec<usize>,
    level_to_gray: Vec<usize>,
}

impl QamMapper {
    pub fn new(m: usize) -> Self {
        let side = (m as f64).sqrt().round() as usize;
        assert_eq!(side * side, m, "QAM order must be a perfect square");
        assert!(side >= 2);
        // gray(i) = i ^ (i >> 1); invert for demapping
        let gray_of: Vec<usize> = (0..side).map(|i| i ^ (i >> 1)).collect();
        let mut gray_to_level = vec![0; side];
        for (level, &g) in gray_of.iter().enumerate() {
            gray_to_level[g] = level;
        }
        let scale = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
        Self {
            m,
            side,
            scale,
            gray_to_level,
            level_to_gray: gray_of,
        }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    fn level_amp(&self, level: usize) -> f64 {
        (2.0 * level as f64 - (self.side - 1) as f64) * self.scale
    }

    /// Maps symbol indices 0..M to constellation points.
    pub fn modulate(&self, symbols: &[u16]) -> Vec<Complex64> {
        symbols.iter().map(|&s| self.modulate_one(s)).collect()
    }

    #[inline]
    pub fn modulate_one(&self, s: u16) -> Complex64 {
        let s = s as usize;
        debug_assert!(s < self.m);
        let gi = s / self.side;
        let gq = s % self.side;
        Complex64::new(
            self.level_amp(self.gray_to_level[gi]),
            self.level_amp(self.gray_to_level[gq]),
        )
    }

    /// Minimum-distance demapping back to symbol indices.
    pub fn demodulate(&self, points: &[Complex64]) -> Vec<u16> {
        points.iter().map(|&p| self.demodulate_one(p)).collect()
    }

    #[inline]
    pub fn demodulate_one(&self, p: Complex64) -> u16 {
        let axis = |a: f64| -> usize {
            let pos = (a / self.scale + (self.side - 1) as f64) / 2.0;
            (pos.round().max(0.0) as usize).min(self.side - 1)
        };
        let gi = self.level_to_gray[axis(p.re)];
        let gq = self.level_to_gray[axis(p.im)];
        (gi * self.side + gq) as u16
    }

    /// Smallest distance between distinct constellation points.
    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }
}

/// One channel realization: `taps` complex gains.
pub fn realize_channel<R: Rng>(spec: &ChannelSpec, rng: &mut R) -> Vec<Complex64> {
    match spec.kind {
        ChannelKind::Flat => vec![Complex64::new(1.0, 0.0)],
        ChannelKind::RayleighBlock => spec
            .tap_powers
            .iter()
            .map(|&p| {
                let s = (p / 2.0).sqrt();
                Complex64::new(standard_normal(rng) * s, standard_normal(rng) * s)
            })
            .collect(),
        ChannelKind::RicianBlock { k_factor } => {
            let scatter_scale = 1.0 / (1.0 + k_factor);
            let los = (k_factor / (1.0 + k_factor)).sqrt();
            spec.tap_powers
                .iter()
                .enumerate()
                .map(|(l, &p)| {
                    let s = (p * scatter_scale / 2.0).sqrt();
                    let mut h = Complex64::new(standard_normal(rng) * s, standard_normal(rng) * s);
                    if l == 0 {
                        h += Complex64::new(los, 0.0);
                    }
                    h
                })
                .collect()
        }
    }
}

/// Deterministic RNG for a (campaign seed, block-range index) pair.
fn range_rng(seed: u64, range_idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(range_idx.wrapping_add(1));
    rng
}

struct BlockWorkspace {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    symbols: Vec<u16>,
    freq: Vec<Complex64>,
    time: Vec<Complex64>,
    h_freq: Vec<Complex64>,
}

impl BlockWorkspace {
    fn new(l: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fft: planner.plan_fft_forward(l),
            ifft: planner.plan_fft_inverse(l),
            symbols: vec![0; l],
            freq: vec![Complex64::new(0.0, 0.0); l],
            time: vec![Complex64::new(0.0, 0.0); l],
            h_freq: vec![Complex64::new(0.0, 0.0); l],
        }
    }
}

/// Runs `blocks` OFDM blocks and counts symbol errors.
///
/// Deterministic for a given seed regardless of thread count. For fading
/// channels a fresh realization is drawn per block and the suppressor is
/// re-resolved against the block's effective signal power; the genie-aided
/// suppressor receives the true per-sample component labels.
pub fn run_campaign(
    params: &OfdmParams,
    channel: &ChannelSpec,
    noise: &GmmSpec,
    policy: &SuppressorPolicy,
    blocks: u64,
    seed: u64,
) -> SerEstimate {
    assert!(blocks >= 1, "at least one block required");
    assert!(
        channel.kind == ChannelKind::Flat || params.cp_len + 1 >= channel.taps(),
        "cyclic prefix shorter than channel memory"
    );
    let l = params.subcarriers;
    let range_len: u64 = 512;
    let n_ranges = blocks.div_ceil(range_len);

    let totals = (0..n_ranges)
        .into_par_iter()
        .map(|ridx| {
            let mut rng = range_rng(seed, ridx);
            let mut ws = BlockWorkspace::new(l);
            let mapper = QamMapper::new(params.qam_order);
            let n_blocks = range_len.min(blocks - ridx * range_len);
            let mut errors = 0u64;
            let mut tried = 0u64;
            let mut dropped = 0u64;
            let mut noise_buf = Vec::with_capacity(l);
            let flat = channel.kind == ChannelKind::Flat;
            let fixed_spec = if flat {
                Some(policy.resolve(params.signal_power, noise))
            } else {
                None
            };
            let fixed_alpha = fixed_spec
                .as_ref()
                .map(|s| bussgang(s, params.signal_power, noise).alpha);
            let mut kurtosis_logged = false;
            for _ in 0..n_blocks {
                // data symbols -> frequency domain
                for s in ws.symbols.iter_mut() {
                    *s = rng.gen_range(0..params.qam_order) as u16;
                }
                let amp = params.signal_power.sqrt();
                for (f, s) in ws.freq.iter_mut().zip(&ws.symbols) {
                    *f = mapper.modulate_one(*s) * amp;
                }
                // channel realization and frequency response
                let (g_q, spec, alpha) = if flat {
                    ws.h_freq
                        .iter_mut()
                        .for_each(|h| *h = Complex64::new(1.0, 0.0));
                    (1.0, fixed_spec.clone().unwrap(), fixed_alpha.unwrap())
                } else {
                    let taps = realize_channel(channel, &mut rng);
                    if taps.len() <= 16 {
                        for (i, h) in ws.h_freq.iter_mut().enumerate() {
                            *h = Complex64::new(0.0, 0.0);
                            for (m, t) in taps.iter().enumerate() {
                                let phase = -2.0 * std::f64::consts::PI * (i * m) as f64 / l as f64;
                                *h += t * Complex64::from_polar(1.0, phase);
                            }
                        }
                    } else {
                        ws.h_freq
                            .iter_mut()
                            .for_each(|h| *h = Complex64::new(0.0, 0.0));
                        ws.h_freq[..taps.len()].copy_from_slice(&taps);
                        ws.fft.process(&mut ws.h_freq);
                    }
                    let g_q: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
                    let eff = g_q * params.signal_power;
                    let spec = policy.resolve(eff, noise);
                    let alpha = bussgang(&spec, eff, noise).alpha;
                    (g_q, spec, alpha)
                };
                let _ = g_q;
                if ws.h_freq.iter().any(|h| h.norm() < 1e-12) {
                    dropped += 1;
                    continue;
                }
                // time-domain received block: unitary IDFT of diag(h_f) s + noise
                for (t, (f, h)) in ws.time.iter_mut().zip(ws.freq.iter().zip(&ws.h_freq)) {
                    *t = f * h;
                }
                ws.ifft.process(&mut ws.time);
                let unit = 1.0 / (l as f64).sqrt();
                for t in ws.time.iter_mut() {
                    *t *= unit;
                }
                noise_buf.clear();
                noise.sample_into(&mut rng, l, &mut noise_buf);
                if !kurtosis_logged {
                    kurtosis_logged = true;
                    if log::log_enabled!(log::Level::Debug) {
                        let m2: f64 = ws.time.iter().map(|t| t.re * t.re).sum::<f64>() / l as f64;
                        let m4: f64 = ws.time.iter().map(|t| t.re.powi(4)).sum::<f64>() / l as f64;
                        log::debug!(
                            "time-domain excess kurtosis of first block: {:.3}",
                            m4 / (m2 * m2) - 3.0
                        );
                    }
                }
                for (t, ns) in ws.time.iter_mut().zip(&noise_buf) {
                    let y = *t + ns.value;
                    *t = spec
                        .apply(y, Some(ns.component))
                        .expect("labels are always supplied");
                }
                // DFT, zero-forcing, gain compensation, demap
                ws.fft.process(&mut ws.time);
                for (t, h) in ws.time.iter_mut().zip(&ws.h_freq) {
                    *t = *t * unit / (h * alpha);
                }
                for (t, s) in ws.time.iter().zip(&ws.symbols) {
                    if mapper.demodulate_one(t / amp) != *s {
                        errors += 1;
                    }
                }
                tried += l as u64;
            }
            (errors, tried, dropped)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));

    SerEstimate {
        errors: totals.0,
        tried: totals.1,
        dropped_blocks: totals.2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ser::{ser_awgn_mqam, ser_kgmm, ser_rayleigh, SerQuery};
    use approx::assert_relative_eq;

    #[test]
    fn qam_round_trip_all_symbols() {
        for m in [4usize, 16, 64] {
            let mapper = QamMapper::new(m);
            for s in 0..m as u16 {
                let p = mapper.modulate_one(s);
                assert_eq!(mapper.demodulate_one(p), s, "m={m} s={s}");
            }
        }
    }

    #[test]
    fn qam_unit_average_power() {
        for m in [4usize, 16, 64] {
            let mapper = QamMapper::new(m);
            let p: f64 = (0..m as u16)
                .map(|s| mapper.modulate_one(s).norm_sqr())
                .sum::<f64>()
                / m as f64;
            assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qam_min_distance_brute_force() {
        for m in [4usize, 16, 64] {
            let mapper = QamMapper::new(m);
            let pts: Vec<Complex64> = (0..m as u16).map(|s| mapper.modulate_one(s)).collect();
            let mut dmin = f64::INFINITY;
            for i in 0..pts.len() {
                for j in 0..i {
                    dmin = dmin.min((pts[i] - pts[j]).norm());
                }
            }
            assert_relative_eq!(dmin, (6.0 / (m as f64 - 1.0)).sqrt(), max_relative = 1e-12);
            assert_relative_eq!(mapper.min_distance(), dmin, max_relative = 1e-12);
        }
    }

    #[test]
    fn unitary_transform_round_trip() {
        let l = 256;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(l);
        let ifft = planner.plan_fft_inverse(l);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let orig: Vec<Complex64> = (0..l)
            .map(|_| Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng)))
            .collect();
        let mut buf = orig.clone();
        ifft.process(&mut buf);
        let unit = 1.0 / (l as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= unit);
        let p_time: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        let p_freq: f64 = orig.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(p_time, p_freq, max_relative = 1e-10);
        fft.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= unit);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn flat_channel_realization_is_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            realize_channel(&ChannelSpec::flat(), &mut rng),
            vec![Complex64::new(1.0, 0.0)]
        );
    }

    #[test]
    fn rayleigh_channel_power_normalized() {
        let spec = ChannelSpec::rayleigh(8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += realize_channel(&spec, &mut rng)
                .iter()
                .map(|h| h.norm_sqr())
                .sum::<f64>();
        }
        assert_relative_eq!(acc / n as f64, 1.0, max_relative = 0.01);
    }

    #[test]
    fn rician_k_factor_moment_check() {
        // single-tap channel: tap 0 carries all the scattered power, so its
        // line-of-sight to scattered ratio is exactly the K factor
        let spec = ChannelSpec::rician(1, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 200_000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut pow = 0.0;
        for _ in 0..n {
            let h = realize_channel(&spec, &mut rng);
            mean += h[0];
            pow += h[0].norm_sqr();
        }
        mean /= n as f64;
        pow /= n as f64;
        let k_emp = mean.norm_sqr() / (pow - mean.norm_sqr());
        assert_relative_eq!(k_emp, 10.0, max_relative = 0.05);
    }

    #[test]
    fn campaign_deterministic_per_seed() {
        let params = OfdmParams {
            subcarriers: 64,
            qam_order: 4,
            cp_len: 8,
            signal_power: 1.0,
        };
        let noise = GmmSpec::bernoulli_gaussian(0.01, 12.0, -10.0, 1.0).unwrap();
        let policy = SuppressorPolicy::Fixed(SuppressorSpec::none());
        let a = run_campaign(&params, &ChannelSpec::flat(), &noise, &policy, 200, 9);
        let b = run_campaign(&params, &ChannelSpec::flat(), &noise, &policy, 200, 9);
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.tried, b.tried);
    }

    #[test]
    fn awgn_flat_channel_matches_closed_form() {
        let params = OfdmParams {
            subcarriers: 256,
            qam_order: 4,
            cp_len: 0,
            signal_power: 1.0,
        };
        let noise = GmmSpec::single(0.1).unwrap();
        let policy = SuppressorPolicy::Fixed(SuppressorSpec::none());
        let est = run_campaign(&params, &ChannelSpec::flat(), &noise, &policy, 4000, 13);
        let expect = ser_awgn_mqam(10.0, 4);
        assert!(
            (est.ser() - expect).abs() < 3.0 * est.wilson_half_width(),
            "{} vs {expect} (hw {})",
            est.ser(),
            est.wilson_half_width()
        );
    }

    #[test]
    fn noiseless_campaign_has_no_errors() {
        let params = OfdmParams {
            subcarriers: 128,
            qam_order: 16,
            cp_len: 0,
            signal_power: 1.0,
        };
        let noise = GmmSpec::single(1e-20).unwrap();
        let policy = SuppressorPolicy::Fixed(SuppressorSpec::none());
        let est = run_campaign(&params, &ChannelSpec::flat(), &noise, &policy, 800, 21);
        assert_eq!(est.errors, 0);
        assert!(est.tried >= 100_000);
    }

    #[test]
    fn rayleigh_fading_matches_closed_form() {
        let params = OfdmParams {
            subcarriers: 256,
            qam_order: 4,
            cp_len: 255,
            signal_power: 1.0,
        };
        let noise = GmmSpec::single(0.01).unwrap();
        let policy = SuppressorPolicy::Fixed(SuppressorSpec::none());
        let est = run_campaign(
            &params,
            &ChannelSpec::rayleigh_uniform(256),
            &noise,
            &policy,
            4000,
            17,
        );
        let expect = ser_rayleigh(100.0, 4);
        assert!(
            (est.ser() - expect).abs() < 3.0 * est.wilson_half_width(),
            "{} vs {expect}",
            est.ser()
        );
    }

    #[test]
    fn component_label_bookkeeping_matches_weights() {
        let noise = GmmSpec::bernoulli_gaussian(0.03, 20.0, -10.0, 1.0).unwrap();
        let n = 500_000;
        let samples = noise.sample(n, 23);
        let f = samples.iter().filter(|s| s.component == 1).count() as f64 / n as f64;
        let tol = 4.0 * (0.03f64 * 0.97 / n as f64).sqrt();
        assert!((f - 0.03).abs() < tol);
    }

    #[test]
    fn unmitigated_flat_matches_kgmm_prediction() {
        let params = OfdmParams {
            subcarriers: 256,
            qam_order: 4,
            cp_len: 0,
            signal_power: 1.0,
        };
        let policy = SuppressorPolicy::Fixed(SuppressorSpec::none());
        for sir_db in [-30.0, -20.0, -10.0, 0.0, 10.0] {
            let noise = GmmSpec::bernoulli_gaussian(0.01, 15.0, sir_db, 1.0).unwrap();
            let est = run_campaign(&params, &ChannelSpec::flat(), &noise, &policy, 3000, 29);
            let pred = ser_kgmm(&SerQuery::unmitigated(4, 256, &noise, 1.0));
            assert!(
                (est.ser() - pred).abs() < 3.0 * est.wilson_half_width(),
                "sir={sir_db}: sim {} vs pred {pred} (hw {})",
                est.ser(),
                est.wilson_half_width()
            );
        }
    }

    #[test]
    fn unmitigated_bg_reference_point_within_ten_percent() {
        // 1e7 symbols at the reference operating point
        let params = OfdmParams {
            subcarriers: 256,
            qam_order: 4,
            cp_len: 0,
            signal_power: 1.0,
        };
        let noise = GmmSpec::bernoulli_gaussian(0.01, 25.0, -20.0, 1.0).unwrap();
        let pred = ser_kgmm(&SerQuery::unmitigated(4, 256, &noise, 1.0));
        let est = run_campaign(
            &params,
            &ChannelSpec::flat(),
            &noise,
            &SuppressorPolicy::Fixed(SuppressorSpec::none()),
            39_063,
            37,
        );
        assert!(
            (pred / est.ser() - 1.0).abs() < 0.10,
            "prediction {pred} vs simulation {}",
            est.ser()
        );
    }

    #[test]
    fn suppressor_ordering_on_identical_seeds() {
        let params = OfdmParams {
            subcarriers: 256,
            qam_order: 4,
            cp_len: 0,
            signal_power: 1.0,
        };
        let noise = GmmSpec::bernoulli_gaussian(0.01, 25.0, -20.0, 1.0).unwrap();
        let seed = 31;
        let blocks = 1200;
        let run = |policy: SuppressorPolicy| {
            run_campaign(&params, &ChannelSpec::flat(), &noise, &policy, blocks, seed).ser()
        };
        let gad = run(SuppressorPolicy::Adaptive(SuppressorKind::GenieAided));
        let bas = run(SuppressorPolicy::Adaptive(
            SuppressorKind::MultiThresholdBas,
        ));
        let blank = run(SuppressorPolicy::Adaptive(SuppressorKind::Blanking));
        let none = run(SuppressorPolicy::Fixed(SuppressorSpec::none()));
        assert!(gad <= bas + 1e-12, "gad {gad} vs bas {bas}");
        assert!(bas <= blank + 1e-12, "bas {bas} vs blank {blank}");
        assert!(blank <= none, "blank {blank} vs none {none}");
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn qam_round_trip_any_symbol(side_bits in 1usize..4, raw in 0u16..4096) {
            let m = 1usize << (2 * side_bits); // 4, 16, 64
            let mapper = QamMapper::new(m);
            let s = raw % m as u16;
            prop_assert_eq!(mapper.demodulate_one(mapper.modulate_one(s)), s);
        }

        #[test]
        fn wilson_interval_contains_point_estimate(errors in 0u64..1000, extra in 1u64..100000) {
            let est = SerEstimate { errors, tried: errors + extra, dropped_blocks: 0 };
            let hw = est.wilson_half_width();
            prop_assert!(hw >= 0.0 && hw <= 1.0);
            prop_assert!((est.ser() - est.wilson_center()).abs() <= hw + 1e-12);
        }
    }
}
