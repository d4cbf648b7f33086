//! Per-channel EPR-pair generation rates of a broadband degenerate source.
//!
//! The source emits an all-Gaussian biphoton state
//!
//! ```text
//! Psi(ws, wi) = sqrt(8 pi sigma / Omega) exp(-(dws + dwi)^2 sigma^2 / 16) exp(-4 (dws - dwi)^2 / Omega^2)
//! ```
//!
//! where `dws`, `dwi` are angular detunings of signal and idler, `sigma` the
//! pump-pulse duration and `Omega` the phase-matching bandwidth. Channel `x`
//! of an `m`-channel plan passes signal detunings within `pi * B_c` of
//! `-2 pi (x - (m+1)/2) B_delta` and idler detunings within `pi * B_c` of
//! `+2 pi (x - (m+1)/2) B_delta`. The heralding efficiency of a channel is
//! the probability mass of `|Psi|^2 / (2 pi)^2` inside that rectangle, and the
//! channel's EPR-pair rate is `eff^2 * r_P / 4`.
//!
//! The rectangle integral is evaluated semi-analytically: the inner
//! integral over the idler detuning is a Gaussian segment written with
//! error functions, and the outer integral is done by composite
//! Gauss-Legendre quadrature with panel doubling until converged.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::GaussLegendre;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Peak per-channel rate (pairs/s) of the 185-channel reference plan.
pub const REFERENCE_PEAK_RATE: f64 = 4584.0;

/// Node count whose pair count the reference plan was sized for.
pub const REFERENCE_NODES: usize = 17;

/// Channels per node pair used when resizing plans, as a ratio over 100.
const CHANNELS_PER_PAIR_PERCENT: usize = 136;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("invalid source parameters: {0}")]
    InvalidSource(String),
    #[error("invalid channel geometry: {0}")]
    InvalidGeometry(String),
    #[error("channel index {index} out of range 1..={m}")]
    ChannelOutOfRange { index: usize, m: usize },
    #[error("quadrature did not converge for channel {index} (last relative change {change:e})")]
    NoConvergence { index: usize, change: f64 },
    #[error("configuration error: {0}")]
    Configuration(String),
}

/// Physical parameters of the EPR-pair source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Pump-pulse duration, seconds.
    pub sigma_p: f64,
    /// Phase-matching bandwidth, rad/s.
    pub omega_pm: f64,
    /// Pump repetition rate, pulses/s.
    pub rep_rate: f64,
    /// Total usable bandwidth, Hz.
    pub band_total: f64,
    /// Center wavelength, m.
    pub center_wavelength: f64,
}

impl SourceParams {
    /// Parameter table values (36 ps pump, 6.37 THz phase matching,
    /// 2.430 THz band at 1550 nm, 2.77e12 pulses/s).
    pub fn table_defaults() -> Self {
        Self {
            sigma_p: 36e-12,
            omega_pm: 2.0 * PI * 6.37e12,
            rep_rate: 2.77e12,
            band_total: 2.430e12,
            center_wavelength: 1550e-9,
        }
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        let positive = [
            ("sigma_p", self.sigma_p),
            ("omega_pm", self.omega_pm),
            ("rep_rate", self.rep_rate),
            ("band_total", self.band_total),
            ("center_wavelength", self.center_wavelength),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpectrumError::InvalidSource(format!("{name} must be positive, got {v}")));
            }
        }
        if self.band_total > self.omega_pm / (2.0 * PI) {
            return Err(SpectrumError::InvalidSource(format!(
                "band {} Hz exceeds the phase-matching bandwidth {} Hz",
                self.band_total,
                self.omega_pm / (2.0 * PI)
            )));
        }
        Ok(())
    }

    pub fn center_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_wavelength
    }
}

/// Channel count, width and spacing of a WDM plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    pub m: usize,
    /// Channel passband width, Hz.
    pub b_c: f64,
    /// Center-frequency spacing, Hz.
    pub b_delta: f64,
}

impl ChannelGeometry {
    /// 185 channels, 11 GHz wide, 13.135 GHz apart.
    pub fn reference() -> Self {
        Self { m: 185, b_c: 11e9, b_delta: 13.135e9 }
    }

    pub fn validate(&self, params: &SourceParams) -> Result<(), SpectrumError> {
        if self.m == 0 {
            return Err(SpectrumError::InvalidGeometry("channel count must be positive".into()));
        }
        if !(self.b_c > 0.0 && self.b_delta > 0.0 && self.b_c.is_finite() && self.b_delta.is_finite()) {
            return Err(SpectrumError::InvalidGeometry("channel width and spacing must be positive".into()));
        }
        if self.b_c > self.b_delta {
            return Err(SpectrumError::InvalidGeometry(format!(
                "channels overlap: width {} Hz > spacing {} Hz",
                self.b_c, self.b_delta
            )));
        }
        let span = self.m as f64 * self.b_delta;
        if span > (params.band_total + self.b_delta) * (1.0 + 1e-12) {
            return Err(SpectrumError::InvalidGeometry(format!(
                "{} channels at {} Hz spacing do not fit a {} Hz band",
                self.m, self.b_delta, params.band_total
            )));
        }
        Ok(())
    }

    /// Signed channel offset `x - (m+1)/2` in units of the spacing (1-based `x`).
    pub fn offset(&self, index: usize) -> f64 {
        index as f64 - (self.m as f64 + 1.0) / 2.0
    }

    fn check_index(&self, index: usize) -> Result<(), SpectrumError> {
        if index == 0 || index > self.m {
            return Err(SpectrumError::ChannelOutOfRange { index, m: self.m });
        }
        Ok(())
    }
}

/// Settings for the outer Gauss-Legendre integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub order: usize,
    pub initial_panels: usize,
    pub rel_tol: f64,
    pub max_doublings: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { order: 16, initial_panels: 2, rel_tol: 1e-13, max_doublings: 10 }
    }
}

/// Heralding efficiency of 1-based channel `channel_index`.
pub fn heralding_efficiency(
    params: &SourceParams,
    geometry: &ChannelGeometry,
    channel_index: usize,
) -> Result<f64, SpectrumError> {
    heralding_efficiency_with(params, geometry, channel_index, &QuadratureSettings::default())
}

pub fn heralding_efficiency_with(
    params: &SourceParams,
    geometry: &ChannelGeometry,
    channel_index: usize,
    settings: &QuadratureSettings,
) -> Result<f64, SpectrumError> {
    params.validate()?;
    geometry.validate(params)?;
    geometry.check_index(channel_index)?;
    let rule = GaussLegendre::new(settings.order);
    efficiency_inner(params, geometry, channel_index, settings, &rule)
}

fn efficiency_inner(
    params: &SourceParams,
    geometry: &ChannelGeometry,
    channel_index: usize,
    settings: &QuadratureSettings,
    rule: &GaussLegendre,
) -> Result<f64, SpectrumError> {
    // |Psi|^2 = (8 pi sigma / Omega) exp(-p (a+b)^2 - q (a-b)^2)
    let p = params.sigma_p * params.sigma_p / 8.0;
    let q = 8.0 / (params.omega_pm * params.omega_pm);
    let s = p + q;
    let root_s = s.sqrt();
    let shrink = 4.0 * p * q / s;
    let tilt = (p - q) / s;

    let half_width = PI * geometry.b_c;
    let shift = 2.0 * PI * geometry.offset(channel_index) * geometry.b_delta;
    let (a_lo, a_hi) = (-shift - half_width, -shift + half_width);
    let (b_lo, b_hi) = (shift - half_width, shift + half_width);

    let prefactor = 8.0 * PI * params.sigma_p / params.omega_pm / (4.0 * PI * PI);
    let inner_scale = 0.5 * (PI / s).sqrt();
    let integrand = |a: f64| {
        let b0 = -tilt * a;
        let inner = inner_scale * erf_diff(root_s * (b_lo - b0), root_s * (b_hi - b0));
        (-shrink * a * a).exp() * inner
    };

    let mut panels = settings.initial_panels.max(1);
    let mut prev = rule.integrate(a_lo, a_hi, panels, integrand);
    let mut change = f64::INFINITY;
    for _ in 0..settings.max_doublings {
        panels *= 2;
        let next = rule.integrate(a_lo, a_hi, panels, integrand);
        change = if next == 0.0 { (next - prev).abs() } else { ((next - prev) / next).abs() };
        prev = next;
        if change <= settings.rel_tol {
            return Ok(prefactor * prev);
        }
    }
    Err(SpectrumError::NoConvergence { index: channel_index, change })
}

/// `erf(y) - erf(x)` without cancellation in the tails.
fn erf_diff(x: f64, y: f64) -> f64 {
    if x > 0.0 && y > 0.0 {
        libm::erfc(x) - libm::erfc(y)
    } else if x < 0.0 && y < 0.0 {
        libm::erfc(-y) - libm::erfc(-x)
    } else {
        libm::erf(y) - libm::erf(x)
    }
}

/// Per-channel generation rates and their center frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub geometry: ChannelGeometry,
    /// EPR-pair rate of each channel, pairs/s.
    pub rates: Vec<f64>,
    /// Signal center frequency of each channel, Hz.
    pub center_freqs: Vec<f64>,
}

impl ChannelPlan {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// The 185-channel plan with the repetition rate calibrated so the peak
    /// channel produces [`REFERENCE_PEAK_RATE`].
    pub fn reference() -> Result<Self, SpectrumError> {
        let mut params = SourceParams::table_defaults();
        let geometry = ChannelGeometry::reference();
        params.rep_rate = calibrate_rep_rate(&params, &geometry, REFERENCE_PEAK_RATE)?;
        channel_rates(&params, &geometry)
    }

    /// Multiplies every rate by `factor`.
    pub fn scaled_by(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.rates.iter_mut().for_each(|r| *r *= factor);
        out
    }

    /// Writes `channel_index,center_freq_hz,center_wavelength_nm,rate_pairs_per_s`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "channel_index,center_freq_hz,center_wavelength_nm,rate_pairs_per_s")?;
        for (i, (rate, freq)) in self.rates.iter().zip(&self.center_freqs).enumerate() {
            let nm = SPEED_OF_LIGHT / freq * 1e9;
            writeln!(out, "{},{:.6},{:.6},{}", i + 1, freq, nm, rate)?;
        }
        Ok(())
    }
}

/// Computes `rates[x] = eff(x)^2 * r_P / 4` for every channel.
pub fn channel_rates(params: &SourceParams, geometry: &ChannelGeometry) -> Result<ChannelPlan, SpectrumError> {
    params.validate()?;
    geometry.validate(params)?;
    let settings = QuadratureSettings::default();
    let rule = GaussLegendre::new(settings.order);
    let nu0 = params.center_frequency();
    let mut rates = Vec::with_capacity(geometry.m);
    let mut center_freqs = Vec::with_capacity(geometry.m);
    // Mirror-image channels share one evaluation so the plan is exactly symmetric.
    let mut effs = vec![0.0; geometry.m];
    for x in 1..=geometry.m.div_ceil(2) {
        let eff = efficiency_inner(params, geometry, x, &settings, &rule)?;
        effs[x - 1] = eff;
        effs[geometry.m - x] = eff;
    }
    for (i, eff) in effs.iter().enumerate() {
        let x = i + 1;
        rates.push(0.25 * eff * eff * params.rep_rate);
        center_freqs.push(nu0 - geometry.offset(x) * geometry.b_delta);
    }
    Ok(ChannelPlan { geometry: *geometry, rates, center_freqs })
}

/// Repetition rate that makes the strongest channel produce `target_peak` pairs/s.
pub fn calibrate_rep_rate(
    params: &SourceParams,
    geometry: &ChannelGeometry,
    target_peak: f64,
) -> Result<f64, SpectrumError> {
    if !(target_peak > 0.0) {
        return Err(SpectrumError::Configuration("target peak rate must be positive".into()));
    }
    let mid = geometry.m.div_ceil(2).max(1);
    let eff = heralding_efficiency(params, geometry, mid)?;
    Ok(target_peak / (0.25 * eff * eff))
}

/// Number of channels used for a network with `n_nodes` nodes:
/// `floor(1.36 * n(n-1)/2)`.
pub fn scaled_channel_count(n_nodes: usize) -> usize {
    crate::pair_count(n_nodes) * CHANNELS_PER_PAIR_PERCENT / 100
}

/// Re-channelizes the band for an `n_nodes` network and rescales the rates
/// so the generated rate per node pair matches `reference`.
///
/// The new plan has `m' = floor(1.36 k')` channels (`k'` the pair count)
/// spaced `band_total / m'` apart, with the reference width-to-spacing ratio.
/// When `n_nodes` has the same pair count as the reference the reference is
/// returned unchanged.
pub fn scaled_plan(
    params: &SourceParams,
    reference: &ChannelPlan,
    kappa_ref: usize,
    n_nodes: usize,
) -> Result<ChannelPlan, SpectrumError> {
    if n_nodes < 3 {
        return Err(SpectrumError::Configuration(format!("need at least 3 nodes, got {n_nodes}")));
    }
    if kappa_ref == 0 || reference.is_empty() {
        return Err(SpectrumError::Configuration("empty reference plan".into()));
    }
    let kappa = crate::pair_count(n_nodes);
    if kappa == kappa_ref {
        return Ok(reference.clone());
    }
    let m = scaled_channel_count(n_nodes);
    if m < kappa {
        return Err(SpectrumError::Configuration(format!(
            "{m} channels cannot serve {kappa} node pairs"
        )));
    }
    let b_delta = params.band_total / m as f64;
    let ratio = reference.geometry.b_c / reference.geometry.b_delta;
    let geometry = ChannelGeometry { m, b_c: b_delta * ratio, b_delta };
    let plan = channel_rates(params, &geometry)?;
    let target_mean = reference.total_rate() / kappa_ref as f64;
    let factor = target_mean / (plan.total_rate() / kappa as f64);
    Ok(plan.scaled_by(factor))
}
