//! Distortion-noise densities at the output of a single-threshold
//! suppressor.
//!
//! With the received envelope tested against a single threshold, the
//! suppressor output noise d = x_hat - alpha x decomposes into four events:
//! background or impulsive noise, below or above the threshold. Each event's
//! real-part density is computed by numerically integrating the conditioned
//! signal and noise densities and convolving them after the event's gain
//! scalings; the four weighted components assemble the total distortion pdf.
//!
//! All densities here live on the real line: grid variances are
//! per-quadrature (half the complex powers used elsewhere).

use crate::gmm::GmmSpec;
use crate::numerics::{gaussian_pdf, KahanSum};
use crate::suppressor::{SuppressorKind, SuppressorSpec};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Uniform symmetric amplitude grid: points d_i = i*step for i = -m..=m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    step: f64,
    half_points: usize,
}

impl Grid {
    pub fn new(span: f64, half_points: usize) -> Self {
        assert!(span > 0.0 && half_points >= 1);
        Self {
            step: span / half_points as f64,
            half_points,
        }
    }

    /// Default grid for the given per-quadrature received-signal deviation:
    /// +-10 sigma_y with 5000 points per side.
    pub fn default_for(sigma_y_dim: f64) -> Self {
        Self::new(10.0 * sigma_y_dim, 5000)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_points(&self) -> usize {
        self.half_points
    }

    pub fn len(&self) -> usize {
        2 * self.half_points + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Amplitude of grid index i in 0..len (centered at half_points).
    pub fn amplitude(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_points as f64) * self.step
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.amplitude(i))
    }
}

/// A density tabulated on a [`Grid`].
#[derive(Debug, Clone)]
pub struct DiscretePdf {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum DistortionError {
    #[error("variance must be positive")]
    NonPositiveVariance,
    #[error("threshold must be positive")]
    BadThreshold,
    #[error("conditional probability must lie in (0, 1), got {0}")]
    BadProbability(f64),
    #[error("suppressor kind {0:?} has no single-threshold distortion decomposition")]
    UnsupportedKind(SuppressorKind),
}

impl DiscretePdf {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Unconditional zero-mean Gaussian of per-quadrature variance `var`.
    pub fn gaussian(grid: Grid, var: f64) -> Self {
        let values = grid.amplitudes().map(|d| gaussian_pdf(d, var)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Density at the grid point closest to amplitude `d` (linear
    /// interpolation between neighbours, zero outside the grid).
    pub fn value_at(&self, d: f64) -> f64 {
        let pos = d / self.grid.step + self.grid.half_points as f64;
        if pos < 0.0 || pos > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let lo = pos.floor() as usize;
        if lo + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let frac = pos - lo as f64;
        self.values[lo] * (1.0 - frac) + self.values[lo + 1] * frac
    }

    /// Riemann integral sum(values) * step.
    pub fn integral(&self) -> f64 {
        let mut s = KahanSum::new();
        for v in &self.values {
            s.add(*v);
        }
        s.value() * self.grid.step
    }

    /// Second moment sum(d_i² f(d_i)) * step.
    pub fn variance(&self) -> f64 {
        let mut s = KahanSum::new();
        for (i, v) in self.values.iter().enumerate() {
            let d = self.grid.amplitude(i);
            s.add(d * d * v);
        }
        s.value() * self.grid.step
    }

    /// Rescales so the Riemann integral is exactly one.
    pub fn normalize(&mut self) {
        let z = self.integral();
        if z > 0.0 {
            for v in &mut self.values {
                *v /= z;
            }
        }
    }

    /// Largest asymmetry |f(d) - f(-d)| over the grid.
    pub fn max_asymmetry(&self) -> f64 {
        let m = self.grid.half_points;
        (0..=m)
            .map(|i| (self.values[m + i] - self.values[m - i]).abs())
            .fold(0.0, f64::max)
    }

    /// Nonnegative half of the tabulation (index 0 is d = 0).
    pub fn nonneg_half(&self) -> &[f64] {
        &self.values[self.grid.half_points..]
    }

    /// Writes the two-column (amplitude, density) CSV representation.
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "amplitude,density")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.amplitude(i), v)?;
        }
        Ok(())
    }

    /// Reads the two-column CSV representation (uniform symmetric grid).
    pub fn from_csv<R: std::io::BufRead>(r: R) -> std::io::Result<Self> {
        let mut amps = Vec::new();
        let mut vals = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with("amplitude") {
                continue;
            }
            let mut it = t.split(',');
            let bad = || std::io::Error::new(std::io::ErrorKind::InvalidData, "bad csv row");
            let a: f64 = it
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            let v: f64 = it
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            amps.push(a);
            vals.push(v);
        }
        if amps.len() < 5 || amps.len() % 2 == 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "need an odd number of grid points",
            ));
        }
        let m = amps.len() / 2;
        let step = amps[m + 1] - amps[m];
        if step <= 0.0 || amps[m].abs() > 1e-9 * step {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "grid must be uniform and centered at zero",
            ));
        }
        Ok(Self::from_values(
            Grid {
                step,
                half_points: m,
            },
            vals,
        ))
    }
}

/// Event probabilities of the four distortion components for two-component
/// noise: (below, background), (below, impulsive), (above, background),
/// (above, impulsive), with c_k = exp(-A_T²/sigma_yk²) for total received
/// powers sigma_yk².
pub fn region_weights(a_t: f64, p0: f64, sigma_y0_sq: f64, sigma_yi_sq: f64) -> [f64; 4] {
    assert!(a_t > 0.0);
    let c0 = (-a_t * a_t / sigma_y0_sq).exp();
    let c1 = (-a_t * a_t / sigma_yi_sq).exp();
    let p1 = 1.0 - p0;
    [p0 * (1.0 - c0), p1 * (1.0 - c1), p0 * c0, p1 * c1]
}

/// Real-part density of the signal conditioned on the received envelope
/// lying below the threshold, together with the conditioning probability B.
///
/// `sigma_x_sq` and `sigma_n_sq` are per-quadrature variances. The density
/// follows the midpoint-sum realization of the conditioned integral with the
/// erf(sqrt((A_T² - y²)/(2 sigma_y²))) kernel and normalizer
/// B = 1 - exp(-A_T²/(2 sigma_y²)).
pub fn conditional_signal_pdf_below(
    sigma_x_sq: f64,
    sigma_n_sq: f64,
    a_t: f64,
    grid: &Grid,
) -> Result<(DiscretePdf, f64), DistortionError> {
    if !(sigma_x_sq > 0.0 && sigma_n_sq > 0.0) {
        return Err(DistortionError::NonPositiveVariance);
    }
    if !(a_t > 0.0) {
        return Err(DistortionError::BadThreshold);
    }
    let sy2 = sigma_x_sq + sigma_n_sq;
    if a_t.is_infinite() {
        return Ok((DiscretePdf::gaussian(*grid, sigma_x_sq), 1.0));
    }
    let b = 1.0 - (-a_t * a_t / (2.0 * sy2)).exp();
    let h = grid.step();
    let m = grid.half_points();
    let len = grid.len();
    // erf kernel over the envelope-feasible grid points |d_m| <= A_T
    let lo = ((m as f64) - a_t / h).ceil().max(0.0) as usize;
    let hi = ((m as f64) + a_t / h).floor().min((len - 1) as f64) as usize;
    let kernel: Vec<f64> = (lo..=hi)
        .map(|i| {
            let y = grid.amplitude(i);
            libm::erf(((a_t * a_t - y * y).max(0.0) / (2.0 * sy2)).sqrt())
        })
        .collect();
    // noise density over all offsets d_m - d_i; its discrete mass corrects
    // the midpoint sum when the noise is narrow against the grid step
    let fn_off: Vec<f64> = (0..2 * len - 1)
        .map(|j| gaussian_pdf((j as f64 - (len - 1) as f64) * h, sigma_n_sq))
        .collect();
    let noise_mass: f64 = fn_off[(len - 1) / 2..=(len - 1) / 2 + len - 1]
        .iter()
        .sum::<f64>()
        * h;
    let mut values = vec![0.0; len];
    for (i, v) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (kk, kv) in kernel.iter().enumerate() {
            let mslot = lo + kk + (len - 1) - i;
            acc += fn_off[mslot] * kv;
        }
        *v = gaussian_pdf(grid.amplitude(i), sigma_x_sq) / b * h * acc / noise_mass;
    }
    Ok((DiscretePdf::from_values(*grid, values), b))
}

/// Pointwise complement before clamping:
/// (f_uncond - prob_below * f_below) / (1 - prob_below).
pub fn conditional_pdf_above_raw(
    unconditional: &DiscretePdf,
    below: &DiscretePdf,
    prob_below: f64,
) -> Result<Vec<f64>, DistortionError> {
    if !(prob_below > 0.0 && prob_below < 1.0) {
        return Err(DistortionError::BadProbability(prob_below));
    }
    Ok(unconditional
        .values()
        .iter()
        .zip(below.values())
        .map(|(u, b)| (u - prob_below * b) / (1.0 - prob_below))
        .collect())
}

/// Real-part density above the threshold by mutual exclusivity, with
/// negative round-off floored at zero and the result renormalized.
pub fn conditional_pdf_above(
    unconditional: &DiscretePdf,
    below: &DiscretePdf,
    prob_below: f64,
) -> Result<DiscretePdf, DistortionError> {
    let raw = conditional_pdf_above_raw(unconditional, below, prob_below)?;
    let mut pdf =
        DiscretePdf::from_values(below.grid(), raw.into_iter().map(|v| v.max(0.0)).collect());
    pdf.normalize();
    Ok(pdf)
}

/// Density of c * V given the grid density of V. A vanishing scale factor
/// degenerates to a single-bin spike of unit mass.
fn scaled_pdf(pdf: &DiscretePdf, c: f64) -> DiscretePdf {
    let grid = pdf.grid();
    if c.abs() < 1e-300 {
        let mut values = vec![0.0; grid.len()];
        values[grid.half_points()] = 1.0 / grid.step();
        return DiscretePdf::from_values(grid, values);
    }
    let values = grid
        .amplitudes()
        .map(|d| pdf.value_at(d / c) / c.abs())
        .collect();
    DiscretePdf::from_values(grid, values)
}

/// Real-part density of V conditioned on the envelope exceeding the
/// threshold, computed directly through the complementary kernel
/// erfc(sqrt((A_T² - y²)/(2 sigma_y²))) so no near-unit probabilities are
/// subtracted. `sigma_v_sq` is the conditioned variable's per-quadrature
/// variance, `sigma_o_sq` the other addend's.
fn conditional_pdf_above_stable(
    sigma_v_sq: f64,
    sigma_o_sq: f64,
    a_t: f64,
    grid: &Grid,
) -> DiscretePdf {
    let sy2 = sigma_v_sq + sigma_o_sq;
    let h = grid.step();
    let len = grid.len();
    let b_above = (-a_t * a_t / (2.0 * sy2)).exp();
    // complement kernel over all pairwise sums y = d_i + d_j
    let comp: Vec<f64> = (0..2 * len - 1)
        .map(|t| {
            let y = (t as f64 - (len - 1) as f64) * h;
            if y.abs() >= a_t {
                1.0
            } else {
                libm::erfc(((a_t * a_t - y * y) / (2.0 * sy2)).sqrt())
            }
        })
        .collect();
    let f_other: Vec<f64> = (0..len)
        .map(|j| gaussian_pdf(grid.amplitude(j), sigma_o_sq))
        .collect();
    let other_mass: f64 = f_other.iter().sum::<f64>() * h;
    let values: Vec<f64> = (0..len)
        .map(|i| {
            let mut acc = 0.0;
            for (j, fo) in f_other.iter().enumerate() {
                acc += fo * comp[i + j];
            }
            gaussian_pdf(grid.amplitude(i), sigma_v_sq) / b_above * h * acc / other_mass
        })
        .collect();
    DiscretePdf::from_values(*grid, values)
}

/// Density of c * V from an above-threshold tabulation, with the analytic
/// unconditional tail used beyond the tabulated span.
fn scaled_above_pdf(above: &DiscretePdf, b_above: f64, var_dim: f64, c: f64) -> DiscretePdf {
    let grid = above.grid();
    if c.abs() < 1e-300 {
        let mut values = vec![0.0; grid.len()];
        values[grid.half_points()] = 1.0 / grid.step();
        return DiscretePdf::from_values(grid, values);
    }
    let span = grid.step() * grid.half_points() as f64;
    let values = grid
        .amplitudes()
        .map(|d| {
            let u = d / c;
            let v = if u.abs() <= span {
                above.value_at(u)
            } else {
                gaussian_pdf(u, var_dim) / b_above
            };
            v / c.abs()
        })
        .collect();
    DiscretePdf::from_values(grid, values)
}

/// Discrete convolution sum_m a(d_i - d_m) b(d_m) step on the common grid.
pub fn convolve(a: &DiscretePdf, b: &DiscretePdf) -> DiscretePdf {
    assert_eq!(a.grid(), b.grid());
    let grid = a.grid();
    let n = grid.len();
    let center = grid.half_points();
    let av = a.values();
    let bv = b.values();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        // a's index for amplitude d_i - d_m is i - m + center
        let m_lo = (i + center).saturating_sub(n - 1);
        let m_hi = (i + center).min(n - 1);
        let mut acc = 0.0;
        for m in m_lo..=m_hi {
            acc += av[i + center - m] * bv[m];
        }
        *o = acc * grid.step();
    }
    DiscretePdf::from_values(grid, out)
}

/// FFT-accelerated path for [`convolve`]; agrees with the direct sum within
/// round-off and exists purely as an optimization.
pub fn convolve_fft(a: &DiscretePdf, b: &DiscretePdf) -> DiscretePdf {
    assert_eq!(a.grid(), b.grid());
    let grid = a.grid();
    let n = grid.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex64> = a.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fa.resize(size, Complex64::new(0.0, 0.0));
    let mut fb: Vec<Complex64> = b.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fb.resize(size, Complex64::new(0.0, 0.0));
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    ifft.process(&mut fa);
    let scale = grid.step() / size as f64;
    // Full linear convolution index i+m; the centered output picks the
    // window starting at offset half_points (= center + center - center).
    let off = grid.half_points();
    let out: Vec<f64> = (0..n).map(|i| fa[i + off].re * scale).collect();
    DiscretePdf::from_values(grid, out)
}

/// The four-component distortion mixture at a single-threshold suppressor
/// output: component densities, their event weights and variances.
#[derive(Debug, Clone)]
pub struct DistortionMixture {
    /// (below, background), (below, impulsive), (above, background),
    /// (above, impulsive).
    pub components: [DiscretePdf; 4],
    pub weights: [f64; 4],
    /// Real-part variances of the four components.
    pub variances: [f64; 4],
}

impl DistortionMixture {
    /// Weighted total distortion density (normalized).
    pub fn total(&self) -> DiscretePdf {
        let grid = self.components[0].grid();
        let mut values = vec![0.0; grid.len()];
        for (w, c) in self.weights.iter().zip(&self.components) {
            for (o, v) in values.iter_mut().zip(c.values()) {
                *o += w * v;
            }
        }
        let mut pdf = DiscretePdf::from_values(grid, values);
        pdf.normalize();
        pdf
    }

    /// Real-part variance of the total mixture.
    pub fn total_variance(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.variances)
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Computes the four distortion component densities for the given noise
/// mixture and single-threshold suppressor (kinds: none, blanking,
/// single-threshold attenuation), using the Bussgang `alpha` for the signal
/// scaling. Noise mixtures with more than two components are handled by
/// conditioning each component separately and grouping the results into the
/// background/impulsive pairs.
pub fn distortion_component_pdfs(
    noise: &GmmSpec,
    spec: &SuppressorSpec,
    alpha: f64,
    signal_power: f64,
    grid: &Grid,
) -> Result<DistortionMixture, DistortionError> {
    let (a_t, g_below, g_above) = match spec.kind {
        SuppressorKind::None => (f64::INFINITY, 1.0, 1.0),
        SuppressorKind::Blanking => {
            if spec.thresholds.is_empty() {
                (f64::INFINITY, 1.0, 1.0)
            } else {
                (spec.thresholds[0], 1.0, 0.0)
            }
        }
        SuppressorKind::SingleThresholdAttenuation => {
            if spec.thresholds.is_empty() {
                (f64::INFINITY, spec.gains[0], spec.gains[1])
            } else {
                (spec.thresholds[0], spec.gains[0], spec.gains[1])
            }
        }
        k => return Err(DistortionError::UnsupportedKind(k)),
    };
    let sx2_dim = signal_power / 2.0;

    let mut below: Vec<(f64, DiscretePdf)> = Vec::new();
    let mut above: Vec<(f64, DiscretePdf)> = Vec::new();
    for (&p, &v) in noise.weights().iter().zip(noise.variances()) {
        let sn2_dim = v / 2.0;
        let w_above = if a_t.is_infinite() {
            0.0
        } else {
            (-a_t * a_t / (signal_power + v)).exp()
        };
        if a_t.is_infinite() {
            // No conditioning: the signal part degenerates through the
            // (g - alpha) scaling and the noise part stays unconditional.
            let fx = DiscretePdf::gaussian(*grid, sx2_dim);
            let fnn = DiscretePdf::gaussian(*grid, sn2_dim);
            let mut f_b = convolve(
                &scaled_pdf(&fx, g_below - alpha),
                &scaled_pdf(&fnn, g_below),
            );
            f_b.normalize();
            below.push((p, f_b.clone()));
            above.push((0.0, f_b));
            continue;
        }
        let (fx_b, _) = conditional_signal_pdf_below(sx2_dim, sn2_dim, a_t, grid)?;
        let (fn_b, _) = conditional_signal_pdf_below(sn2_dim, sx2_dim, a_t, grid)?;
        let mut f_b = convolve(
            &scaled_pdf(&fx_b, g_below - alpha),
            &scaled_pdf(&fn_b, g_below),
        );
        f_b.normalize();
        let fx_a_tab = conditional_pdf_above_stable(sx2_dim, sn2_dim, a_t, grid);
        let fn_a_tab = conditional_pdf_above_stable(sn2_dim, sx2_dim, a_t, grid);
        let b_above_x = (-a_t * a_t / (signal_power + v)).exp();
        let fx_a = scaled_above_pdf(&fx_a_tab, b_above_x, sx2_dim, g_above - alpha);
        let fn_a = scaled_above_pdf(&fn_a_tab, b_above_x, sn2_dim, g_above);
        let mut f_a = convolve(&fx_a, &fn_a);
        f_a.normalize();
        below.push((p * (1.0 - w_above), f_b));
        above.push((p * w_above, f_a));
    }

    let group = |items: &[(f64, DiscretePdf)]| -> (f64, DiscretePdf) {
        let w: f64 = items.iter().map(|(w, _)| w).sum();
        let mut values = vec![0.0; grid.len()];
        if w > 0.0 {
            for (wi, pdf) in items {
                for (o, v) in values.iter_mut().zip(pdf.values()) {
                    *o += wi / w * v;
                }
            }
        } else {
            values[grid.half_points()] = 1.0 / grid.step();
        }
        (w, DiscretePdf::from_values(*grid, values))
    };

    let (w1, f1) = (below[0].0, below[0].1.clone());
    let (w2, f2) = group(&below[1..]);
    let (w3, f3) = (above[0].0, above[0].1.clone());
    let (w4, f4) = group(&above[1..]);
    let variances = [f1.variance(), f2.variance(), f3.variance(), f4.variance()];
    Ok(DistortionMixture {
        components: [f1, f2, f3, f4],
        weights: [w1, w2, w3, w4],
        variances,
    })
}
