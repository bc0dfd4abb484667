//! Expected behaviour of a plug-and-play fiber link: gains, error rates,
//! session timing and the asymptotic key rate.

use crate::error::{check_unit, domain, Error, Result};
use crate::estimator::{IntensityConfig, ObservedCounts, PerIntensity};
use crate::stats::binary_entropy;

/// Speed of light in fiber, m/s.
const FIBER_LIGHT_SPEED: f64 = 2e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupParams {
    /// Pulses per train.
    pub train_size: f64,
    pub rep_rate_hz: f64,
    pub storage_line_km: f64,
    pub det_eff: f64,
    pub dead_time_s: f64,
    /// Dark-count probability per detector gate.
    pub dark_count: f64,
    pub extra_loss_db: f64,
    pub atten_db_per_km: f64,
    pub visibility: f64,
}

impl Default for SetupParams {
    fn default() -> Self {
        SetupParams {
            train_size: 5e4,
            rep_rate_hz: 3e8,
            storage_line_km: 17.0,
            det_eff: 0.10,
            dead_time_s: 1e-6,
            dark_count: 3e-7,
            extra_loss_db: 5.0,
            atten_db_per_km: 0.2,
            visibility: 0.97,
        }
    }
}

impl SetupParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("setup.train_size", self.train_size),
            ("setup.storage_line_km", self.storage_line_km),
            ("setup.dead_time_s", self.dead_time_s),
            ("setup.extra_loss_db", self.extra_loss_db),
            ("setup.atten_db_per_km", self.atten_db_per_km),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(name, v, ">= 0"));
            }
        }
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(domain("setup.rep_rate_hz", self.rep_rate_hz, "> 0"));
        }
        check_unit("setup.det_eff", self.det_eff)?;
        check_unit("setup.dark_count", self.dark_count)?;
        check_unit("setup.visibility", self.visibility)?;
        Ok(())
    }

    /// Probability of a random detection on an empty pulse (two detectors).
    pub fn background_yield(&self) -> f64 {
        (2.0 * self.dark_count).min(1.0)
    }

    /// Intrinsic optical error probability.
    pub fn detector_error(&self) -> f64 {
        (1.0 - self.visibility) / 2.0
    }

    /// Fraction of wall-clock time spent emitting. A train cannot leave before
    /// the previous one has returned through the storage line.
    pub fn duty_factor(&self) -> f64 {
        let train = self.train_size / self.rep_rate_hz;
        let storage = 2.0 * self.storage_line_km * 1e3 / FIBER_LIGHT_SPEED;
        if train + storage == 0.0 {
            1.0
        } else {
            train / (train + storage)
        }
    }

    /// Pulses per second averaged over the train structure.
    pub fn effective_pulse_rate(&self) -> f64 {
        self.rep_rate_hz * self.duty_factor()
    }
}

/// Expected per-intensity behaviour of the link for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelExpectation {
    pub transmittance: f64,
    /// Gains after dead-time thinning.
    pub gain: PerIntensity<f64>,
    pub qber: PerIntensity<f64>,
    pub sifted_rate: f64,
    pub session_time: f64,
    /// Fraction of signal detections caused by vacuum pulses.
    pub theta0: f64,
    /// Fraction of signal detections caused by single photons.
    pub theta1: f64,
    /// Error rate of single-photon detections.
    pub e1: f64,
    pub dead_time_factor: f64,
}

/// `det_eff * 10^(-(atten * d + extra) / 10)`.
pub fn transmittance(distance_km: f64, setup: &SetupParams) -> Result<f64> {
    check_distance(distance_km)?;
    let loss_db = setup.atten_db_per_km * distance_km + setup.extra_loss_db;
    Ok(setup.det_eff * 10f64.powf(-loss_db / 10.0))
}

fn check_distance(distance_km: f64) -> Result<()> {
    if distance_km >= 0.0 && distance_km.is_finite() {
        Ok(())
    } else {
        Err(domain("distance_km", distance_km, ">= 0"))
    }
}

fn check_intensity(intensity: f64) -> Result<()> {
    if intensity >= 0.0 && intensity.is_finite() {
        Ok(())
    } else {
        Err(domain("intensity", intensity, ">= 0"))
    }
}

fn click_probability(eta: f64, intensity: f64) -> f64 {
    -(-eta * intensity).exp_m1()
}

fn gain_at(eta: f64, intensity: f64, setup: &SetupParams) -> f64 {
    let y0 = setup.background_yield();
    y0 + (1.0 - y0) * click_probability(eta, intensity)
}

fn qber_at(eta: f64, intensity: f64, setup: &SetupParams) -> f64 {
    let q = gain_at(eta, intensity, setup);
    if q == 0.0 {
        return 0.5;
    }
    let y0 = setup.background_yield();
    let e = (0.5 * y0 + setup.detector_error() * click_probability(eta, intensity)) / q;
    e.clamp(0.0, 0.5)
}

fn single_photon_yield(eta: f64, setup: &SetupParams) -> f64 {
    let y0 = setup.background_yield();
    y0 + eta - y0 * eta
}

fn single_photon_error(eta: f64, setup: &SetupParams) -> f64 {
    let y1 = single_photon_yield(eta, setup);
    if y1 == 0.0 {
        return 0.5;
    }
    ((0.5 * setup.background_yield() + setup.detector_error() * eta) / y1).clamp(0.0, 0.5)
}

/// Detection probability per pulse of intensity `intensity`, before dead time.
pub fn expected_gain(intensity: f64, distance_km: f64, setup: &SetupParams) -> Result<f64> {
    check_intensity(intensity)?;
    let eta = transmittance(distance_km, setup)?;
    Ok(gain_at(eta, intensity, setup))
}

/// Error rate of detections at intensity `intensity`; 1/2 when nothing is
/// detected.
pub fn expected_qber(intensity: f64, distance_km: f64, setup: &SetupParams) -> Result<f64> {
    check_intensity(intensity)?;
    let eta = transmittance(distance_km, setup)?;
    Ok(qber_at(eta, intensity, setup))
}

/// Dead-time thinning factor for a detector clicking `rate` times a second.
pub fn dead_time_factor(rate: f64, dead_time_s: f64) -> f64 {
    1.0 / (1.0 + rate * dead_time_s)
}

/// Thinned gains, error rates and photon-number fractions for `cfg`.
/// Session fields are left at zero.
pub fn channel_expectation(
    cfg: &IntensityConfig,
    distance_km: f64,
    setup: &SetupParams,
) -> Result<ChannelExpectation> {
    setup.validate()?;
    let eta = transmittance(distance_km, setup)?;
    for v in cfg.intensities().to_array() {
        check_intensity(v)?;
    }
    let raw = cfg.intensities().map(|a| gain_at(eta, a, setup));
    let p = cfg.probabilities();
    let per_pulse = p.mu * raw.mu + p.nu * raw.nu + p.lambda * raw.lambda;
    let c = dead_time_factor(setup.effective_pulse_rate() * per_pulse, setup.dead_time_s);

    let mu = cfg.mu;
    let y0 = setup.background_yield();
    let (theta0, theta1) = if raw.mu > 0.0 {
        (
            (-mu).exp() * y0 / raw.mu,
            single_photon_yield(eta, setup) * mu * (-mu).exp() / raw.mu,
        )
    } else {
        (0.0, 0.0)
    };

    Ok(ChannelExpectation {
        transmittance: eta,
        gain: raw.map(|q| q * c),
        qber: cfg.intensities().map(|a| qber_at(eta, a, setup)),
        sifted_rate: 0.0,
        session_time: 0.0,
        theta0: theta0.min(1.0),
        theta1: theta1.min(1.0),
        e1: single_photon_error(eta, setup),
        dead_time_factor: c,
    })
}

/// Expected channel behaviour and rounded counts for a session of `n` pulses.
pub fn session_expectation(
    cfg: &IntensityConfig,
    distance_km: f64,
    setup: &SetupParams,
    n: u64,
) -> Result<(ChannelExpectation, ObservedCounts)> {
    if n == 0 {
        return Err(domain("N", 0.0, "N >= 1"));
    }
    let mut ch = channel_expectation(cfg, distance_km, setup)?;
    let total = n as f64;

    let sent_mu = ((cfg.p_mu * total).round() as u64).min(n);
    let sent_nu = ((cfg.p_nu * total).round() as u64).min(n - sent_mu);
    let sent = PerIntensity::new(sent_mu, sent_nu, n - sent_mu - sent_nu);
    let detect = |sent: u64, q: f64| ((sent as f64 * q).round() as u64).min(sent);
    let detected = PerIntensity::new(
        detect(sent.mu, ch.gain.mu),
        detect(sent.nu, ch.gain.nu),
        detect(sent.lambda, ch.gain.lambda),
    );
    let l_ver = ((detected.mu as f64 / 2.0).round() as u64).min(detected.mu);
    let n_err = ((l_ver as f64 * ch.qber.mu).round() as u64).min(l_ver);

    ch.session_time = total / setup.effective_pulse_rate();
    ch.sifted_rate = l_ver as f64 / ch.session_time;
    let counts = ObservedCounts {
        total: n,
        sent,
        detected,
        l_ver,
        n_err,
    };
    Ok((ch, counts))
}

/// Block-size rule: a block closes once either the expected verified key
/// reaches `max_verified_bits` or the session reaches `max_duration_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRule {
    pub max_verified_bits: f64,
    pub max_duration_s: f64,
}

impl Default for BlockRule {
    fn default() -> Self {
        BlockRule {
            max_verified_bits: 16e6,
            max_duration_s: 1800.0,
        }
    }
}

impl BlockRule {
    /// Number of pulses sent in one block.
    pub fn pulses(
        &self,
        cfg: &IntensityConfig,
        distance_km: f64,
        setup: &SetupParams,
    ) -> Result<u64> {
        if !(self.max_verified_bits > 0.0 && self.max_duration_s > 0.0) {
            return Err(Error::Config("block caps must be positive".into()));
        }
        let ch = channel_expectation(cfg, distance_km, setup)?;
        let by_time = (self.max_duration_s * setup.effective_pulse_rate()).floor();
        let bits_per_pulse = cfg.p_mu * ch.gain.mu / 2.0;
        let n = if bits_per_pulse > 0.0 {
            (self.max_verified_bits / bits_per_pulse)
                .ceil()
                .min(by_time)
        } else {
            by_time
        };
        Ok((n as u64).max(1))
    }
}

/// Asymptotic key rate with signal pulses only and exact single-photon
/// parameters. Negative values mean no key.
pub fn theoretical_limit_rate(
    distance_km: f64,
    setup: &SetupParams,
    mu_star: f64,
    f_ec: f64,
) -> Result<f64> {
    if !(mu_star > 0.0 && mu_star.is_finite()) {
        return Err(domain("mu_star", mu_star, "> 0"));
    }
    setup.validate()?;
    let eta = transmittance(distance_km, setup)?;
    let q_raw = gain_at(eta, mu_star, setup);
    if q_raw == 0.0 {
        return Ok(0.0);
    }
    let rate = setup.effective_pulse_rate();
    let q = q_raw * dead_time_factor(rate * q_raw, setup.dead_time_s);
    let r_sift = rate * q / 2.0;
    let kappa1 = (single_photon_yield(eta, setup) * mu_star * (-mu_star).exp() / q_raw).min(1.0);
    let e1 = single_photon_error(eta, setup);
    let e_mu = qber_at(eta, mu_star, setup);
    Ok(r_sift * (kappa1 * (1.0 - binary_entropy(e1)?) - f_ec * binary_entropy(e_mu)?))
}
