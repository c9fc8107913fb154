//! Sweep execution: method dispatch per axis point and CSV assembly.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serlab::fitter::FitOptions;
use serlab::gmm::GmmSpec;
use serlab::pipeline::{component_query, threshold_prediction};
use serlab::ser::{
    ser_2gmm, ser_awgn_mqam, ser_kgmm, ser_rayleigh, ser_rician_kgmm, ser_rician_w, SerCurve,
    SerQuery,
};
use serlab::sim::{run_campaign, OfdmParams, SuppressorPolicy};
use serlab::suppressor::{optimize_threshold, output_snr, SuppressorKind, SuppressorSpec};

use crate::config::{
    AxisName, Channel, ChannelKindCfg, Method, Noise, Suppressor, SuppressorKindCfg, SweepConfig,
};

pub struct SweepOutput {
    /// One labelled curve per effective curve block.
    pub curves: Vec<(String, SerCurve)>,
}

impl SweepOutput {
    fn axis(&self) -> (&str, &[f64]) {
        let c = &self.curves[0].1;
        (&c.axis_name, &c.axis)
    }
}

fn core_kind(cfg: SuppressorKindCfg) -> SuppressorKind {
    match cfg {
        SuppressorKindCfg::None => SuppressorKind::None,
        SuppressorKindCfg::Blanking => SuppressorKind::Blanking,
        SuppressorKindCfg::Clipping => SuppressorKind::Clipping,
        SuppressorKindCfg::ClipBlank => SuppressorKind::ClipBlank,
        SuppressorKindCfg::Attenuation => SuppressorKind::SingleThresholdAttenuation,
        SuppressorKindCfg::Bas => SuppressorKind::MultiThresholdBas,
        SuppressorKindCfg::Gad => SuppressorKind::GenieAided,
    }
}

/// Builds the concrete suppressor for the nominal (unit) signal power.
fn resolve_suppressor(cfg: &Suppressor, noise: &GmmSpec) -> Result<SuppressorSpec> {
    let kind = core_kind(cfg.kind);
    let sigma_y = (1.0 + noise.total_power()).sqrt();
    let threshold = match (cfg.threshold, cfg.threshold_sigma_y) {
        (Some(_), Some(_)) => bail!("give either threshold or threshold_sigma_y, not both"),
        (Some(a), None) => Some(a),
        (None, Some(r)) => Some(r * sigma_y),
        (None, None) => None,
    };
    let spec = match kind {
        SuppressorKind::None => SuppressorSpec::none(),
        SuppressorKind::GenieAided => SuppressorSpec::genie_aided(1.0, noise),
        SuppressorKind::MultiThresholdBas => {
            SuppressorSpec::bas_mmse(cfg.bas_thresholds.unwrap_or(10), 1.0, noise)?
        }
        SuppressorKind::Blanking => match threshold {
            Some(a) => SuppressorSpec::blanking(a)?,
            None if cfg.optimize => optimize_threshold(kind, 1.0, noise)?,
            None => bail!("blanking needs a threshold or optimize = true"),
        },
        SuppressorKind::Clipping => match threshold {
            Some(a) => SuppressorSpec::clipping(a)?,
            None if cfg.optimize => optimize_threshold(kind, 1.0, noise)?,
            None => bail!("clipping needs a threshold or optimize = true"),
        },
        SuppressorKind::ClipBlank => match threshold {
            Some(a) => SuppressorSpec::clip_blank(a, 2.0 * a)?,
            None if cfg.optimize => optimize_threshold(kind, 1.0, noise)?,
            None => bail!("clip_blank needs a threshold or optimize = true"),
        },
        SuppressorKind::SingleThresholdAttenuation => {
            let base = match threshold {
                Some(a) => SuppressorSpec::single_threshold_mmse(a, 1.0, noise)?,
                None if cfg.optimize => optimize_threshold(kind, 1.0, noise)?,
                None => bail!("attenuation needs a threshold or optimize = true"),
            };
            match &cfg.gains {
                Some(g) if g.len() == 2 => {
                    let a = base.thresholds.first().copied().unwrap_or(f64::INFINITY);
                    SuppressorSpec::single_threshold(a, g[0], g[1])?
                }
                Some(_) => bail!("single-threshold attenuation takes two gains"),
                None => base,
            }
        }
    };
    Ok(spec)
}

fn evaluate_method(
    method: Method,
    m: usize,
    l: usize,
    noise: &GmmSpec,
    spec: &SuppressorSpec,
    channel: &Channel,
    fit_opts: &FitOptions,
) -> Result<f64> {
    let k_r = channel.k_factor;
    let m0 = if k_r <= 10.0 { 11 } else { 101 };
    let rho_out = output_snr(spec, 1.0, noise);
    let threshold_query = || -> Result<SerQuery> {
        Ok(threshold_prediction(m, l, 1.0, noise, spec, None, fit_opts)?.query)
    };
    let mixture_query = || -> Result<SerQuery> {
        match spec.kind {
            SuppressorKind::Blanking | SuppressorKind::SingleThresholdAttenuation => {
                threshold_query()
            }
            _ => Ok(component_query(m, l, 1.0, noise, spec)),
        }
    };
    Ok(match method {
        Method::Awgn => ser_awgn_mqam(rho_out, m),
        Method::Gmm2 => {
            if spec.kind != SuppressorKind::None {
                bail!("gmm2 applies to unmitigated reception only");
            }
            ser_2gmm(&SerQuery::unmitigated(m, l, &noise.collapse_to_two()?, 1.0))
        }
        Method::Kgmm => ser_kgmm(&component_query(m, l, 1.0, noise, spec)),
        Method::KgmmFit => ser_kgmm(&threshold_query()?),
        Method::RayleighW => ser_rayleigh(rho_out, m),
        Method::RiceW => {
            if channel.kind != ChannelKindCfg::Rician {
                bail!("rice_w requires a rician channel");
            }
            ser_rician_w(rho_out, k_r, m, m0)?
        }
        Method::RiceKgmm => {
            if channel.kind != ChannelKindCfg::Rician {
                bail!("rice_kgmm requires a rician channel");
            }
            ser_rician_kgmm(&mixture_query()?, k_r, m0)?
        }
    })
}

pub fn run_sweep(
    cfg: &SweepConfig,
    budget_override: Option<u64>,
    seed_override: Option<u64>,
) -> Result<SweepOutput> {
    let axis = cfg.axis.points()?;
    let seed = seed_override.unwrap_or(cfg.seed);
    let budget = budget_override.unwrap_or(cfg.methods.budget);
    if cfg.methods.simulate && budget == 0 {
        bail!("simulation budget must be positive");
    }
    let m = cfg.modulation.order;
    let l = cfg.modulation.subcarriers;
    let fit_opts = FitOptions {
        c0: cfg.fit.c0.unwrap_or(0.9),
        ..FitOptions::default()
    };
    let curves = cfg.effective_curves();
    for (_, noise, _, _) in &curves {
        if !noise.supports_sweep() {
            bail!(
                "explicit gmm noise cannot be swept over {:?}",
                cfg.axis.name
            );
        }
    }

    // (curve, axis-point) jobs evaluated in parallel, then reassembled in
    // deterministic column order.
    struct Job {
        curve: usize,
        point: usize,
        noise: Noise,
        supp: Suppressor,
        chan: Channel,
        snr_db: f64,
        sir_db: f64,
        seed: u64,
    }
    let mut jobs = Vec::new();
    for (ci, (_, noise, supp, chan)) in curves.iter().enumerate() {
        for (pi, &x) in axis.iter().enumerate() {
            let (snr_db, sir_db) = match cfg.axis.name {
                AxisName::SirDb => (noise.snr_db, x),
                AxisName::SnrDb => (x, noise.sir_db),
            };
            jobs.push(Job {
                curve: ci,
                point: pi,
                noise: noise.clone(),
                supp: supp.clone(),
                chan: chan.clone(),
                snr_db,
                sir_db,
                seed: seed
                    .wrapping_add(ci as u64)
                    .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(pi as u64),
            });
        }
    }

    let n_methods = cfg.methods.analytic.len();
    let sim_cols = if cfg.methods.simulate { 2 } else { 0 };
    let results: Vec<Result<(usize, usize, Vec<f64>)>> = jobs
        .par_iter()
        .map(|job| {
            let noise = job.noise.build(job.snr_db, job.sir_db)?;
            let spec = resolve_suppressor(&job.supp, &noise)?;
            let mut vals = Vec::with_capacity(n_methods + sim_cols);
            for &method in &cfg.methods.analytic {
                let v = evaluate_method(method, m, l, &noise, &spec, &job.chan, &fit_opts)
                    .with_context(|| format!("method {}", method.name()))?;
                vals.push(v);
            }
            if cfg.methods.simulate {
                let params = OfdmParams {
                    subcarriers: l,
                    qam_order: m,
                    cp_len: if job.chan.kind == ChannelKindCfg::Flat {
                        0
                    } else {
                        cfg.modulation.cp_len.max(job.chan.taps.saturating_sub(1))
                    },
                    signal_power: 1.0,
                };
                let policy = if job.chan.kind != ChannelKindCfg::Flat && job.supp.adapt {
                    SuppressorPolicy::Adaptive(core_kind(job.supp.kind))
                } else {
                    SuppressorPolicy::Fixed(spec.clone())
                };
                let blocks = budget.div_ceil(l as u64).max(1);
                let est = run_campaign(
                    &params,
                    &job.chan.to_spec(),
                    &noise,
                    &policy,
                    blocks,
                    job.seed,
                );
                vals.push(est.ser());
                vals.push(est.wilson_half_width());
            }
            Ok((job.curve, job.point, vals))
        })
        .collect();

    let axis_name = match cfg.axis.name {
        AxisName::SirDb => "sir_db",
        AxisName::SnrDb => "snr_db",
    };
    let mut sweep_curves: Vec<(String, SerCurve)> = curves
        .iter()
        .map(|(label, _, _, _)| {
            let mut curve = SerCurve {
                axis_name: axis_name.to_string(),
                axis: axis.clone(),
                methods: cfg
                    .methods
                    .analytic
                    .iter()
                    .map(|m| (m.name().to_string(), vec![f64::NAN; axis.len()]))
                    .collect(),
                simulated: None,
                sim_half_width: None,
            };
            if cfg.methods.simulate {
                curve.simulated = Some(vec![f64::NAN; axis.len()]);
                curve.sim_half_width = Some(vec![f64::NAN; axis.len()]);
            }
            (label.clone(), curve)
        })
        .collect();
    let _ = sim_cols;
    for r in results {
        let (ci, pi, vals) = r?;
        let curve = &mut sweep_curves[ci].1;
        for (k, v) in vals.iter().take(n_methods).enumerate() {
            curve.methods[k].1[pi] = *v;
        }
        if cfg.methods.simulate {
            curve.simulated.as_mut().unwrap()[pi] = vals[n_methods];
            curve.sim_half_width.as_mut().unwrap()[pi] = vals[n_methods + 1];
        }
    }
    Ok(SweepOutput {
        curves: sweep_curves,
    })
}

/// Writes the sweep as CSV with `#` header lines.
pub fn write_csv<W: std::io::Write>(
    mut w: W,
    cfg: &SweepConfig,
    config_hash: &str,
    seed: u64,
    out: &SweepOutput,
) -> std::io::Result<()> {
    writeln!(w, "# serlab sweep: {}", cfg.scenario)?;
    writeln!(w, "# config-sha256: {config_hash}")?;
    writeln!(w, "# seed: {seed}")?;
    writeln!(
        w,
        "# modulation: {}-QAM, {} subcarriers; axis and SNR/SIR quantities in dB",
        cfg.modulation.order, cfg.modulation.subcarriers
    )?;
    let (axis_name, axis) = out.axis();
    write!(w, "{axis_name}")?;
    for (label, curve) in &out.curves {
        for (m, _) in &curve.methods {
            write!(w, ",{label}/{m}")?;
        }
        if curve.simulated.is_some() {
            write!(w, ",{label}/sim,{label}/sim_hw")?;
        }
    }
    writeln!(w)?;
    for (i, x) in axis.iter().enumerate() {
        write!(w, "{x}")?;
        for (_, curve) in &out.curves {
            for (_, vals) in &curve.methods {
                write!(w, ",{}", vals[i])?;
            }
            if let (Some(sim), Some(hw)) = (&curve.simulated, &curve.sim_half_width) {
                write!(w, ",{},{}", sim[i], hw[i])?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
