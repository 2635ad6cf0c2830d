//! Simulation experiments comparing the flow against the computed pearling
//! coefficients: growth-rate probes, the onset threshold in `eta_d`, and the
//! saturated tangential period.

use serde::{Deserialize, Serialize};

use crate::bilayer::BilayerData;
use crate::coefficients::alpha0_parts;
use crate::error::{Error, Result};
use crate::operator::SpectralData;
use crate::pearl::pearl_period;
use crate::simulator::{
    init_field, midline_spectrum_of, extract_pearl_metrics, run, Field2D, FchModel, Interface, SimConfig, Transverse,
};

/// Transverse data shared by every run of an experiment.
pub struct Setup<'a> {
    pub bilayer: &'a BilayerData,
    pub spectral: &'a SpectralData,
}

impl Setup<'_> {
    fn start(&self, cfg: &SimConfig) -> Result<(FchModel, Field2D, Interface)> {
        let tr = Transverse::new(self.bilayer, self.spectral, cfg.epsilon, cfg.gamma, cfg.eta_d())?;
        let u0 = init_field(&cfg.init, &tr, cfg)?;
        Ok((FchModel::for_config(self.bilayer.well.clone(), cfg), u0, Interface::for_init(&cfg.init, cfg)))
    }

    fn advance(&self, model: &FchModel, cfg: &SimConfig, u: Field2D, interface: &Interface, span: f64) -> Result<Field2D> {
        let mut c = cfg.clone();
        c.t_end = span;
        c.sample_every = span;
        c.checkpoint_every = None;
        Ok(run(model, &c, u, interface, |_, _| Ok(()))?.field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthProbe {
    pub eta_d: f64,
    /// Largest exponential rate over the perturbed tangential modes.
    pub rate: f64,
    pub mode: usize,
    /// `mean(mu)/eps`, averaged over the start and end of the probe window.
    pub gamma_eff: f64,
}

/// Relaxes the transverse profile for `t_relax`, then measures per-mode
/// growth of the midline modulation over `t_probe`.
pub fn probe_growth(setup: &Setup, cfg: &SimConfig, t_relax: f64, t_probe: f64) -> Result<GrowthProbe> {
    if !(t_relax > 0.0 && t_probe > 0.0) {
        return Err(Error::InvalidArgument("probe windows must be positive".into()));
    }
    let (model, u0, interface) = setup.start(cfg)?;
    let ua = setup.advance(&model, cfg, u0, &interface, t_relax)?;
    let ub = setup.advance(&model, cfg, ua.clone(), &interface, t_probe)?;
    let sa = midline_spectrum_of(&ua, &interface)?;
    let sb = midline_spectrum_of(&ub, &interface)?;
    let top = cfg.perturbation_modes.min(sa.amplitudes.len() - 1);
    // Modes seeded well below the bulk are harmonics slaved to the growing
    // mode; their ratios overstate the linear rate.
    let floor = 1e-3 * sa.amplitudes[1..=top].iter().fold(0.0f64, |m, &v| m.max(v));
    let (mode, rate) = (1..=top)
        .filter(|&k| sa.amplitudes[k] > floor && sb.amplitudes[k] > 0.0)
        .map(|k| (k, (sb.amplitudes[k] / sa.amplitudes[k]).ln() / t_probe))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if mode == 0 {
        return Err(Error::NoInterface);
    }
    let gamma_eff = 0.5 * (model.gamma_eff(&ua) + model.gamma_eff(&ub));
    Ok(GrowthProbe { eta_d: cfg.eta_d(), rate, mode, gamma_eff })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub eta_d_sim: f64,
    pub gamma_eff: f64,
    /// Root of `alpha0(gamma_eff, eta_d)`.
    pub eta_d_theory: f64,
    pub relative_gap: f64,
    pub probes: Vec<GrowthProbe>,
}

/// Bisects in `eta_d` (through `eta2`, with `eta1` fixed) for the sign change
/// of the pearling growth rate and compares with the zero of `alpha0`.
pub fn pearling_threshold(
    setup: &Setup,
    cfg: &SimConfig,
    bracket: (f64, f64),
    tol: f64,
    t_relax: f64,
    t_probe: f64,
) -> Result<ThresholdResult> {
    let probe = |eta_d: f64| {
        let mut c = cfg.clone();
        c.eta2 = c.eta1 - eta_d;
        probe_growth(setup, &c, t_relax, t_probe)
    };
    let (mut lo, mut hi) = bracket;
    let mut probes = vec![probe(lo)?, probe(hi)?];
    if !(probes[0].rate < 0.0 && probes[1].rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bracket does not straddle onset: rates {} at {lo}, {} at {hi}",
            probes[0].rate, probes[1].rate
        )));
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        let p = probe(mid)?;
        if p.rate > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        probes.push(p);
    }
    let eta_d_sim = 0.5 * (lo + hi);
    let near: Vec<&GrowthProbe> = probes.iter().filter(|p| p.eta_d == lo || p.eta_d == hi).collect();
    let gamma_eff = near.iter().map(|p| p.gamma_eff).sum::<f64>() / near.len() as f64;
    let (a_gamma, a_eta) = alpha0_parts(setup.bilayer, setup.spectral)?;
    let eta_d_theory = a_gamma * gamma_eff / a_eta;
    let relative_gap = ((eta_d_sim - eta_d_theory) / eta_d_theory).abs();
    Ok(ThresholdResult { eta_d_sim, gamma_eff, eta_d_theory, relative_gap, probes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturatedPattern {
    pub mode: usize,
    pub period: f64,
    pub amplitude: f64,
    /// `gamma_eff` after the transverse relaxation, before the pattern grows.
    pub gamma_onset: f64,
    pub alpha0_onset: f64,
    pub predicted_period: f64,
    pub relative_error: f64,
}

/// Runs to `cfg.t_end` and compares the final tangential period with `T_p`
/// evaluated at the onset multiplier.
pub fn saturated_pattern(setup: &Setup, cfg: &SimConfig, t_relax: f64) -> Result<SaturatedPattern> {
    if !(t_relax > 0.0 && t_relax < cfg.t_end) {
        return Err(Error::InvalidArgument("t_relax must lie in (0, t_end)".into()));
    }
    let (model, u0, interface) = setup.start(cfg)?;
    let ua = setup.advance(&model, cfg, u0, &interface, t_relax)?;
    let gamma_onset = model.gamma_eff(&ua);
    let ub = setup.advance(&model, cfg, ua, &interface, cfg.t_end - t_relax)?;
    let m = extract_pearl_metrics(&ub, &interface)?;
    let (a_gamma, a_eta) = alpha0_parts(setup.bilayer, setup.spectral)?;
    let alpha0_onset = a_gamma * gamma_onset - a_eta * cfg.eta_d();
    if !(alpha0_onset > 0.0) {
        return Err(Error::NoPearling(alpha0_onset));
    }
    let predicted_period = pearl_period(setup.spectral.lambda0, alpha0_onset, cfg.epsilon);
    Ok(SaturatedPattern {
        mode: m.mode,
        period: m.period,
        amplitude: m.amplitude,
        gamma_onset,
        alpha0_onset,
        predicted_period,
        relative_error: ((m.period - predicted_period) / predicted_period).abs(),
    })
}
