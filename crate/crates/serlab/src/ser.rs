//! Closed-form and semi-closed-form symbol error rate predictors for square
//! M-QAM OFDM over flat, Rayleigh and Rician block-fading channels with
//! Gaussian-mixture noise.
//!
//! The central quantity is the per-block impulse pattern: with L subcarriers
//! and a K-component noise mixture, the number of samples drawn from each
//! component follows a multinomial law, and each pattern sees the AWGN (or
//! fading) kernel at its own SNR. Patterns are enumerated recursively with
//! branch-mass pruning so the sums stay exact to the stated floors.

use crate::gmm::GmmSpec;
use crate::numerics::{adaptive_simpson, ln_factorial_table, q_function, KahanSum};

/// Outer binomial terms (and multinomial subtrees) below this total mass are
/// skipped.
const WEIGHT_FLOOR: f64 = 1e-18;

/// Inputs of the mixture SER predictors.
#[derive(Debug, Clone)]
pub struct SerQuery {
    /// Square QAM constellation size (4, 16, 64, ...).
    pub m: usize,
    /// Number of subcarriers per block.
    pub l: usize,
    /// Per-sample mixture: weights and relative variances
    /// gamma_k = sigma_k²/sigma_x². For mitigated systems these describe the
    /// distortion mixture at the suppressor output.
    pub weights: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Bussgang signal scaling (1 for unmitigated systems).
    pub alpha: f64,
    /// Per-pattern kernel values below this are skipped.
    pub pruning_floor: f64,
}

impl SerQuery {
    pub fn new(m: usize, l: usize, weights: Vec<f64>, gammas: Vec<f64>, alpha: f64) -> Self {
        Self {
            m,
            l,
            weights,
            gammas,
            alpha,
            pruning_floor: 1e-20,
        }
    }

    /// Builds the query from a noise mixture relative to the signal power
    /// (unmitigated reception, alpha = 1).
    pub fn unmitigated(m: usize, l: usize, noise: &GmmSpec, signal_power: f64) -> Self {
        Self::new(
            m,
            l,
            noise.weights().to_vec(),
            noise.relative_variances(signal_power),
            1.0,
        )
    }
}

/// SER of square M-QAM in AWGN at symbol SNR `rho`:
/// 4 q B (1 - q B) with q = (sqrt(M)-1)/sqrt(M), B = Q(sqrt(3 rho/(M-1))).
pub fn ser_awgn_mqam(rho: f64, m: usize) -> f64 {
    assert!(rho >= 0.0, "SNR must be nonnegative");
    let sm = (m as f64).sqrt();
    assert!(
        sm.fract() == 0.0 && m >= 4,
        "M must be a perfect square >= 4"
    );
    let q = (sm - 1.0) / sm;
    let b = q_function((3.0 * rho / (m as f64 - 1.0)).sqrt());
    4.0 * q * b * (1.0 - q * b)
}

/// Two-component mixture SER: binomial average of the AWGN kernel over the
/// per-block impulse count.
pub fn ser_2gmm(query: &SerQuery) -> f64 {
    assert_eq!(
        query.weights.len(),
        2,
        "ser_2gmm requires exactly two components"
    );
    ser_kgmm(query)
}

/// K-component mixture SER with the AWGN kernel.
pub fn ser_kgmm(query: &SerQuery) -> f64 {
    let m = query.m;
    ser_kgmm_with_kernel(query, &|rho| ser_awgn_mqam(rho, m))
}

/// K-component mixture SER with an arbitrary scalar SNR kernel.
pub fn ser_kgmm_with_kernel(query: &SerQuery, kernel: &dyn Fn(f64) -> f64) -> f64 {
    let k = query.weights.len();
    assert_eq!(k, query.gammas.len(), "weights/variances length mismatch");
    let l = query.l;
    let a2 = query.alpha * query.alpha;
    if k == 1 {
        return kernel(a2 / query.gammas[0]).clamp(0.0, 1.0);
    }
    let p0 = query.weights[0];
    let p_i: f64 = query.weights.iter().skip(1).sum();
    let ln_fact = ln_factorial_table(l);
    let q: Vec<f64> = query.weights.iter().skip(1).map(|w| w / p_i).collect();
    let ln_q: Vec<f64> = q.iter().map(|x| x.ln()).collect();
    // Tail sums Q_j = q_j + q_{j+1} + ... for the subtree mass bound.
    let mut tail_q = vec![0.0; k];
    for j in (0..k - 1).rev() {
        tail_q[j] = tail_q[j + 1] + q[j];
    }
    let ln_tail_q: Vec<f64> = tail_q
        .iter()
        .map(|x| if *x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
        .collect();

    let mut total = KahanSum::new();
    for count in 0..=l {
        let w_l = if p_i <= 0.0 {
            if count == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (ln_fact[l] - ln_fact[count] - ln_fact[l - count]
                + (l - count) as f64 * p0.ln()
                + count as f64 * p_i.ln())
            .exp()
        };
        if w_l < WEIGHT_FLOOR {
            continue;
        }
        let base = (l - count) as f64 * query.gammas[0];
        if k == 2 {
            let s = base + count as f64 * query.gammas[1];
            let v = kernel(l as f64 * a2 / s);
            if v >= query.pruning_floor {
                total.add(w_l * v);
            }
            continue;
        }
        // Recursive composition enumeration over impulsive components.
        let mut counts = vec![0usize; k - 1];
        compose(
            &CompositionCtx {
                ln_fact: &ln_fact,
                ln_q: &ln_q,
                ln_tail_q: &ln_tail_q,
                gammas: &query.gammas[1..],
                w_l,
                scale: l as f64 * a2,
                base,
                kernel,
                pruning_floor: query.pruning_floor,
            },
            0,
            count,
            ln_fact[count],
            0.0,
            &mut counts,
            &mut total,
        );
    }
    total.value().clamp(0.0, 1.0)
}

struct CompositionCtx<'a> {
    ln_fact: &'a [f64],
    ln_q: &'a [f64],
    ln_tail_q: &'a [f64],
    gammas: &'a [f64],
    w_l: f64,
    scale: f64,
    base: f64,
    kernel: &'a dyn Fn(f64) -> f64,
    pruning_floor: f64,
}

/// Depth-first enumeration of (l_1, ..., l_{K-1}) with sum fixed; the node
/// mass bound w(l) * multinomial marginal prunes negligible subtrees.
#[allow(clippy::too_many_arguments)]
fn compose(
    ctx: &CompositionCtx<'_>,
    comp: usize,
    remaining: usize,
    ln_coeff: f64,
    ln_partial: f64,
    counts: &mut [usize],
    total: &mut KahanSum,
) {
    let n_comp = ctx.ln_q.len();
    if comp == n_comp - 1 {
        counts[comp] = remaining;
        let ln_w =
            ln_coeff - ctx.ln_fact[remaining] + ln_partial + remaining as f64 * ctx.ln_q[comp];
        let w = ctx.w_l * ln_w.exp();
        if w < WEIGHT_FLOOR {
            return;
        }
        let mut s = ctx.base;
        for (li, g) in counts.iter().zip(ctx.gammas) {
            s += *li as f64 * g;
        }
        let v = (ctx.kernel)(ctx.scale / s);
        if v >= ctx.pruning_floor {
            total.add(w * v);
        }
        return;
    }
    for li in 0..=remaining {
        counts[comp] = li;
        let ln_coeff2 = ln_coeff - ctx.ln_fact[li];
        let ln_partial2 = ln_partial + li as f64 * ctx.ln_q[comp];
        // Subtree mass: coeff * partial * (sum of remaining q)^(remaining').
        let rem = remaining - li;
        let ln_mass = ln_coeff2 - ctx.ln_fact[rem]
            + ctx.ln_fact[rem] // completions carry at most this coefficient mass
            + ln_partial2
            + rem as f64 * ctx.ln_tail_q[comp + 1];
        if ctx.w_l * ln_mass.exp() < WEIGHT_FLOOR {
            continue;
        }
        compose(ctx, comp + 1, rem, ln_coeff2, ln_partial2, counts, total);
    }
}

/// Closed-form SER of square M-QAM over Rayleigh block fading with average
/// symbol SNR `rho_bar`.
pub fn ser_rayleigh(rho_bar: f64, m: usize) -> f64 {
    assert!(rho_bar >= 0.0);
    let mf = m as f64;
    let sm = mf.sqrt();
    let a = (3.0 * rho_bar / (2.0 * (mf - 1.0))).sqrt();
    let mu = a / (1.0 + a * a).sqrt();
    1.0 - 1.0 / mf
        - 2.0 * (sm - 1.0) / mf * mu
        - (4.0 / std::f64::consts::PI) * ((sm - 1.0) / sm).powi(2) * mu * mu.atan()
}

/// Independent quadrature route for the Rayleigh average: the exponential
/// average of the AWGN kernel, integrated panel by panel.
pub fn ser_rayleigh_quadrature(rho_bar: f64, m: usize) -> f64 {
    if rho_bar == 0.0 {
        return ser_awgn_mqam(0.0, m);
    }
    let f = |rho: f64| (-rho / rho_bar).exp() / rho_bar * ser_awgn_mqam(rho, m);
    // The AWGN kernel dies by rho ~ 400 for every supported M; panels keep
    // the adaptive rule honest across the scales of the two factors.
    let edges = [0.0, 1.0, 10.0, 100.0, 400.0];
    let mut acc = 0.0;
    for w in edges.windows(2) {
        acc += adaptive_simpson(&f, w[0], w[1], 1e-10, 48);
    }
    let mut lo = 400.0;
    while lo < 40.0 * rho_bar {
        let hi = (lo * 4.0).min(40.0 * rho_bar);
        acc += adaptive_simpson(&f, lo, hi, 1e-10, 48);
        lo = hi;
    }
    acc
}

/// Modulation-dependent coefficients of the Rician SER expression.
fn rician_coeffs(m: usize) -> Result<(f64, f64, f64), SerError> {
    match m {
        4 => Ok((1.0, 1.0, std::f64::consts::FRAC_PI_4.sin())),
        16 => Ok((0.75, 2.25, 0.1f64.sqrt())),
        _ => Err(SerError::UnsupportedModulation(m)),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SerError {
    #[error("no Rician coefficients for M = {0} (supported: 4, 16)")]
    UnsupportedModulation(usize),
}

/// SER of square M-QAM over Rician block fading with factor `k_r` and
/// average symbol SNR `rho_bar`, by midpoint Riemann sums with `m0` samples.
pub fn ser_rician_w(rho_bar: f64, k_r: f64, m: usize, m0: usize) -> Result<f64, SerError> {
    assert!(k_r >= 0.0 && rho_bar >= 0.0);
    let (a, b, c) = rician_coeffs(m)?;
    let k1 = 1.0 + k_r;
    let h = |theta: f64| {
        let cc = theta.cos().powi(2);
        k1 * cc / (k1 * cc + rho_bar * c * c)
    };
    let integrand = |theta: f64| {
        let ht = h(theta);
        ht * (k_r * ht).exp()
    };
    let midpoint = |lo: f64, hi: f64, n: usize| -> f64 {
        let step = (hi - lo) / n as f64;
        (0..n)
            .map(|i| integrand(lo + (i as f64 + 0.5) * step))
            .sum::<f64>()
            * step
    };
    let i1 = midpoint(0.0, std::f64::consts::FRAC_PI_2, m0);
    let i2 = midpoint(0.0, std::f64::consts::FRAC_PI_4, m0.div_ceil(2));
    Ok(((-k_r).exp() / std::f64::consts::PI * (a * i1 + b * i2)).clamp(0.0, 1.0))
}

/// Mixture SER over Rician fading: the multinomial pattern sum with the
/// Rician kernel at each pattern's SNR.
pub fn ser_rician_kgmm(query: &SerQuery, k_r: f64, m0: usize) -> Result<f64, SerError> {
    rician_coeffs(query.m)?; // fail fast on unsupported M
    let m = query.m;
    Ok(ser_kgmm_with_kernel(query, &move |rho| {
        ser_rician_w(rho, k_r, m, m0).expect("modulation validated above")
    }))
}

/// A swept SER curve: axis values plus one value series per method, with
/// optional simulated estimates and confidence half-widths.
#[derive(Debug, Clone, Default)]
pub struct SerCurve {
    pub axis_name: String,
    pub axis: Vec<f64>,
    /// (method name, SER per axis point)
    pub methods: Vec<(String, Vec<f64>)>,
    pub simulated: Option<Vec<f64>>,
    pub sim_half_width: Option<Vec<f64>>,
}
