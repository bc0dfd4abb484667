//! Decoy-state statistics processing: from per-intensity counts to the
//! single-photon bounds, the secret key length and the total failure
//! probability.
//!
//! Every bound is a one-sided normal-approximation bound at
//! `phi = Phi^{-1}(1 - eps_decoy / a)`. A pipeline run consumes seven of
//! them: the upper bound on the signal gain, two-sided bounds on the decoy
//! and vacuum gains, the single-photon fraction bound and the vacuum-error
//! bound.

use std::fmt;

use crate::error::{check_open_unit, check_unit, domain, Error, Result};
use crate::stats::{binary_entropy, std_normal_upper_quantile};

/// One value per pulse intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PerIntensity<T> {
    pub mu: T,
    pub nu: T,
    pub lambda: T,
}

impl<T: Copy> PerIntensity<T> {
    pub fn new(mu: T, nu: T, lambda: T) -> Self {
        PerIntensity { mu, nu, lambda }
    }

    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> PerIntensity<U> {
        PerIntensity {
            mu: f(self.mu),
            nu: f(self.nu),
            lambda: f(self.lambda),
        }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.mu, self.nu, self.lambda]
    }
}

/// Signal, decoy and vacuum intensities with their emission probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityConfig {
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub p_lambda: f64,
}

impl IntensityConfig {
    /// Builds a configuration with `p_lambda = 1 - p_mu - p_nu` and checks it.
    pub fn new(mu: f64, nu: f64, lambda: f64, p_mu: f64, p_nu: f64) -> Result<Self> {
        let cfg = IntensityConfig {
            mu,
            nu,
            lambda,
            p_mu,
            p_nu,
            p_lambda: 1.0 - p_mu - p_nu,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn intensities(&self) -> PerIntensity<f64> {
        PerIntensity::new(self.mu, self.nu, self.lambda)
    }

    pub fn probabilities(&self) -> PerIntensity<f64> {
        PerIntensity::new(self.p_mu, self.p_nu, self.p_lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mu,
            self.nu,
            self.lambda,
            self.p_mu,
            self.p_nu,
            self.p_lambda,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("intensity values must be finite".into()));
        }
        if self.lambda < 0.0 || self.lambda >= self.nu / 2.0 {
            return Err(Error::Config(format!(
                "need 0 <= lambda < nu/2, got lambda = {}, nu = {}",
                self.lambda, self.nu
            )));
        }
        if self.lambda + self.nu >= self.mu {
            return Err(Error::Config(format!(
                "need lambda + nu < mu, got lambda = {}, nu = {}, mu = {}",
                self.lambda, self.nu, self.mu
            )));
        }
        check_open_unit("p_mu", self.p_mu)?;
        check_open_unit("p_nu", self.p_nu)?;
        check_open_unit("p_lambda", self.p_lambda)?;
        let total = self.p_mu + self.p_nu + self.p_lambda;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "emission probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Failure-probability budget and reconciliation efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub eps_ver: f64,
    pub eps_aut: f64,
    pub eps_pa: f64,
    pub eps_decoy: f64,
    /// Number of simultaneous one-sided bounds sharing `eps_decoy`.
    pub a: u32,
    pub f_ec: f64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        SecurityParams {
            eps_ver: 1e-12,
            eps_aut: 1e-12,
            eps_pa: 1e-12,
            eps_decoy: 1e-12,
            a: 7,
            f_ec: 1.15,
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        check_open_unit("eps_ver", self.eps_ver)?;
        check_open_unit("eps_aut", self.eps_aut)?;
        check_open_unit("eps_pa", self.eps_pa)?;
        if self.a == 0 {
            return Err(domain("a", 0.0, "a >= 1"));
        }
        // eps_decoy only has to leave a per-bound share inside (0, 1).
        check_open_unit("eps_decoy / a", self.eps_decoy / self.a as f64)?;
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(domain("f_ec", self.f_ec, "f_ec >= 1"));
        }
        Ok(())
    }
}

/// Session statistics consumed by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ObservedCounts {
    /// Total pulses sent.
    pub total: u64,
    pub sent: PerIntensity<u64>,
    pub detected: PerIntensity<u64>,
    /// Verified-key length in bits.
    pub l_ver: u64,
    /// Errors corrected in the verified key.
    pub n_err: u64,
}

impl ObservedCounts {
    pub fn validate(&self) -> Result<()> {
        let sent = self.sent.mu + self.sent.nu + self.sent.lambda;
        if sent != self.total {
            return Err(Error::Config(format!(
                "N_mu + N_nu + N_lambda = {sent} differs from N = {}",
                self.total
            )));
        }
        for (name, n, d) in [
            ("mu", self.sent.mu, self.detected.mu),
            ("nu", self.sent.nu, self.detected.nu),
            ("lambda", self.sent.lambda, self.detected.lambda),
        ] {
            if d > n {
                return Err(Error::Config(format!(
                    "n_{name} = {d} exceeds N_{name} = {n}"
                )));
            }
        }
        if self.n_err > self.l_ver {
            return Err(Error::Config(format!(
                "n_err = {} exceeds l_ver = {}",
                self.n_err, self.l_ver
            )));
        }
        if self.l_ver > self.detected.mu {
            return Err(Error::Config(format!(
                "l_ver = {} exceeds n_mu = {}",
                self.l_ver, self.detected.mu
            )));
        }
        Ok(())
    }

    /// Observed QBER of the verified key.
    pub fn qber(&self) -> f64 {
        if self.l_ver == 0 {
            0.0
        } else {
            self.n_err as f64 / self.l_ver as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    /// The lower bound on the single-photon fraction is zero.
    Uncertified,
    /// The key length formula gave a non-positive length.
    NoKey,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::Uncertified => f.write_str("single-photon fraction cannot be certified"),
            AbortReason::NoKey => f.write_str("secret key length is not positive"),
        }
    }
}

/// All intermediate bounds of one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub phi: f64,
    pub q_mu_u: f64,
    pub q_nu_l: f64,
    pub q_nu_u: f64,
    pub q_lambda_l: f64,
    pub q_lambda_u: f64,
    pub y0_l: f64,
    pub q1_l: f64,
    pub theta1_l: f64,
    pub kappa1_l: f64,
    /// Lower bound on the number of errors from vacuum pulses.
    pub upsilon: f64,
    pub e_mu: f64,
    pub e1_u: f64,
    pub leak_ec: f64,
    pub l_sec: i64,
    pub eps_qkd: f64,
    pub abort: Option<AbortReason>,
}

impl EstimateResult {
    pub fn is_abort(&self) -> bool {
        self.abort.is_some()
    }
}

/// `Phi^{-1}(1 - eps_decoy / a)`.
pub fn compute_phi(eps_decoy: f64, a: u32) -> Result<f64> {
    if a == 0 {
        return Err(domain("a", 0.0, "a >= 1"));
    }
    let tail = eps_decoy / a as f64;
    // + 0.0 turns a -0.0 median into 0.0
    Ok(std_normal_upper_quantile(tail)? + 0.0)
}

/// Point estimate `n/N` widened by `phi` standard errors, clamped into
/// `[0, 1]`.
pub fn gain_bounds(n_det: u64, n_sent: u64, phi: f64) -> Result<(f64, f64)> {
    if n_sent == 0 {
        return Err(domain("N_sent", 0.0, "N_sent >= 1"));
    }
    if n_det > n_sent {
        return Err(domain("n_det", n_det as f64, "n_det <= N_sent"));
    }
    check_phi(phi)?;
    let q = n_det as f64 / n_sent as f64;
    let half = phi * (q * (1.0 - q) / n_sent as f64).sqrt();
    Ok(((q - half).clamp(0.0, 1.0), (q + half).clamp(0.0, 1.0)))
}

fn check_phi(phi: f64) -> Result<()> {
    if phi >= 0.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(domain("phi", phi, "phi >= 0"))
    }
}

/// Lower bound on the vacuum yield from the vacuum and decoy gain bounds.
pub fn y0_lower(q_lambda_l: f64, q_nu_u: f64, cfg: &IntensityConfig) -> Result<f64> {
    let (nu, lambda) = (cfg.nu, cfg.lambda);
    if nu <= lambda {
        return Err(domain("nu", nu, "nu > lambda"));
    }
    let num = nu * q_lambda_l * lambda.exp() - lambda * q_nu_u * nu.exp();
    Ok((num / (nu - lambda)).clamp(0.0, 1.0))
}

/// Lower bound on the joint single-photon-and-detected probability of a
/// signal pulse.
pub fn q1_lower(
    q_nu_l: f64,
    q_lambda_u: f64,
    q_mu_u: f64,
    y0_l: f64,
    cfg: &IntensityConfig,
) -> Result<f64> {
    let (mu, nu, lambda) = (cfg.mu, cfg.nu, cfg.lambda);
    let denom = nu * (1.0 - nu / mu) - lambda * (1.0 - lambda / mu);
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::Config(format!(
            "q1 prefactor denominator {denom} is not positive for mu = {mu}, nu = {nu}, lambda = {lambda}"
        )));
    }
    let bracket = q_nu_l * nu.exp()
        - q_lambda_u * lambda.exp()
        - (nu * nu - lambda * lambda) / (mu * mu) * (q_mu_u * mu.exp() - y0_l);
    let q1 = mu * (-mu).exp() / denom * bracket;
    Ok(q1.clamp(0.0, 1.0))
}

/// Lower bound on the realised single-photon fraction of the verified key.
pub fn kappa1_lower(theta1_l: f64, l_ver: u64, phi: f64) -> Result<f64> {
    check_unit("theta1_l", theta1_l)?;
    if l_ver == 0 {
        return Err(domain("l_ver", 0.0, "l_ver >= 1"));
    }
    check_phi(phi)?;
    let spread = phi * (theta1_l * (1.0 - theta1_l) / l_ver as f64).sqrt();
    Ok((theta1_l - spread).clamp(0.0, 1.0))
}

/// Lower bound `upsilon` on the number of errors carried by vacuum pulses.
/// Clamped at zero, which is always a valid bound.
pub fn vacuum_error_lower(n_mu_sent: u64, mu: f64, y0_l: f64, phi: f64) -> Result<f64> {
    if n_mu_sent == 0 {
        return Err(domain("N_mu", 0.0, "N_mu >= 1"));
    }
    check_unit("y0_l", y0_l)?;
    check_phi(phi)?;
    let n = n_mu_sent as f64;
    let q = (-mu).exp() * y0_l / 4.0;
    let bound = n * q - phi * (n * q * (1.0 - q)).sqrt();
    Ok(bound.max(0.0))
}

/// Upper bound on the single-photon error rate.
pub fn e1_upper(n_err: u64, l_ver: u64, upsilon: f64, kappa1_l: f64) -> Result<f64> {
    if l_ver == 0 {
        return Err(domain("l_ver", 0.0, "l_ver >= 1"));
    }
    check_unit("kappa1_l", kappa1_l)?;
    if kappa1_l == 0.0 {
        return Err(Error::Uncertified);
    }
    let l = l_ver as f64;
    Ok(((n_err as f64 / l - upsilon / l) / kappa1_l).clamp(0.0, 1.0))
}

/// Error-correction leakage `f_ec * h(e_mu) * l_ver` in bits.
pub fn leak_ec(f_ec: f64, e_mu: f64, l_ver: u64) -> Result<f64> {
    Ok(f_ec * binary_entropy(e_mu)? * l_ver as f64)
}

/// Final key length, floored. Non-positive values mean the block is
/// discarded.
pub fn secret_key_length(kappa1_l: f64, e1_u: f64, l_ver: u64, leak_ec: f64, eps_pa: f64) -> i64 {
    // h is not monotone past 1/2
    let e1 = e1_u.clamp(0.0, 0.5);
    let h = binary_entropy(e1).unwrap_or(1.0);
    let value = kappa1_l * l_ver as f64 * (1.0 - h) - leak_ec + 5.0 * eps_pa.log2();
    value.floor() as i64
}

/// Total failure probability: the sum of the four component budgets.
pub fn epsilon_total(sec: &SecurityParams) -> f64 {
    sec.eps_ver + sec.eps_aut + sec.eps_pa + sec.eps_decoy
}

/// Runs the full chain with `leak_ec = f_ec * h(e_mu) * l_ver`.
pub fn process_decoy_statistics(
    counts: &ObservedCounts,
    cfg: &IntensityConfig,
    sec: &SecurityParams,
) -> Result<EstimateResult> {
    let leak = leak_ec(sec.f_ec, counts.qber(), counts.l_ver)?;
    process_with_leak(counts, cfg, sec, leak)
}

/// Runs the full chain with a caller-supplied leakage in bits.
pub fn process_with_leak(
    counts: &ObservedCounts,
    cfg: &IntensityConfig,
    sec: &SecurityParams,
    leak_bits: f64,
) -> Result<EstimateResult> {
    counts.validate()?;
    cfg.validate()?;
    sec.validate()?;
    let phi = compute_phi(sec.eps_decoy, sec.a)?;

    let (_, q_mu_u) = gain_bounds(counts.detected.mu, counts.sent.mu, phi)?;
    let (q_nu_l, q_nu_u) = gain_bounds(counts.detected.nu, counts.sent.nu, phi)?;
    let (q_lambda_l, q_lambda_u) = gain_bounds(counts.detected.lambda, counts.sent.lambda, phi)?;

    let y0_l = y0_lower(q_lambda_l, q_nu_u, cfg)?;
    let q1_l = q1_lower(q_nu_l, q_lambda_u, q_mu_u, y0_l, cfg)?;
    let theta1_l = if q_mu_u > 0.0 {
        (q1_l / q_mu_u).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let kappa1_l = kappa1_lower(theta1_l, counts.l_ver, phi)?;
    let upsilon = vacuum_error_lower(counts.sent.mu, cfg.mu, y0_l, phi)?;

    let e_mu = counts.qber();
    let (e1_u, mut abort) = match e1_upper(counts.n_err, counts.l_ver, upsilon, kappa1_l) {
        Ok(e1) => (e1, None),
        Err(Error::Uncertified) => (1.0, Some(AbortReason::Uncertified)),
        Err(e) => return Err(e),
    };
    let l_sec = secret_key_length(kappa1_l, e1_u, counts.l_ver, leak_bits, sec.eps_pa);
    if abort.is_none() && l_sec <= 0 {
        abort = Some(AbortReason::NoKey);
    }

    Ok(EstimateResult {
        phi,
        q_mu_u,
        q_nu_l,
        q_nu_u,
        q_lambda_l,
        q_lambda_u,
        y0_l,
        q1_l,
        theta1_l,
        kappa1_l,
        upsilon,
        e_mu,
        e1_u,
        leak_ec: leak_bits,
        l_sec,
        eps_qkd: epsilon_total(sec),
        abort,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IntensityConfig {
        IntensityConfig::new(0.5, 0.2, 0.01, 0.9, 0.05).unwrap()
    }

    #[test]
    fn phi_examples() {
        let phi = compute_phi(1e-12, 7).unwrap();
        assert!((phi - 7.30).abs() <= 0.01);
        assert_eq!(compute_phi(3.5, 7).unwrap(), 0.0);
        assert!((compute_phi(0.35, 7).unwrap() - 1.644_853_626_951_472_7).abs() < 1e-13);
        assert!(compute_phi(7.0, 7).is_err());
        assert!(compute_phi(8.0, 7).is_err());
        assert!(compute_phi(1e-12, 0).is_err());
    }

    #[test]
    fn gain_bound_examples() {
        assert_eq!(gain_bounds(500, 1_000_000, 0.0).unwrap(), (5e-4, 5e-4));
        assert_eq!(gain_bounds(0, 1000, 7.3).unwrap(), (0.0, 0.0));
        let (lo, hi) = gain_bounds(500, 1_000_000, 7.3).unwrap();
        let half = 7.3 * (5e-4 * 0.9995 / 1e6_f64).sqrt();
        assert!((lo - (5e-4 - half)).abs() < 1e-18);
        assert!((hi - (5e-4 + half)).abs() < 1e-18);
        assert!((lo - 3.368e-4).abs() < 1e-7 && (hi - 6.632e-4).abs() < 1e-7);
        assert!(gain_bounds(1, 0, 1.0).is_err());
        assert!(gain_bounds(5, 4, 1.0).is_err());
        // clamps into [0, 1]
        let (lo, hi) = gain_bounds(1, 2, 10.0).unwrap();
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn y0_examples() {
        assert_eq!(y0_lower(0.0, 1e-3, &cfg()).unwrap(), 0.0);
        let vac = IntensityConfig {
            lambda: 0.0,
            ..cfg()
        };
        assert!((y0_lower(3e-6, 1e-3, &vac).unwrap() - 3e-6).abs() < 1e-20);
        assert_eq!(y0_lower(1e-6, 1e-3, &cfg()).unwrap(), 0.0);
        let bad = IntensityConfig { nu: 0.01, ..cfg() };
        assert!(y0_lower(1e-6, 1e-3, &bad).is_err());
    }

    #[test]
    fn q1_examples() {
        let c = IntensityConfig {
            lambda: 0.0,
            ..cfg()
        };
        let (q_nu_l, q_mu_u) = (4e-4, 1.1e-3);
        let got = q1_lower(q_nu_l, 0.0, q_mu_u, 0.0, &c).unwrap();
        let (mu, nu) = (0.5_f64, 0.2_f64);
        let reduced = mu * (-mu).exp() / (nu * (1.0 - nu / mu))
            * (q_nu_l * nu.exp() - nu * nu / (mu * mu) * q_mu_u * mu.exp());
        assert!((got - reduced).abs() < 1e-18);
        // bracket <= 0 clamps to 0
        assert_eq!(q1_lower(0.0, 1e-3, 1e-3, 0.0, &cfg()).unwrap(), 0.0);
        // mpmath evaluation of the full expression
        let got = q1_lower(4e-4, 5e-5, 1.1e-3, 0.0, &cfg()).unwrap();
        assert!(((got - Q1_ORACLE) / Q1_ORACLE).abs() < 1e-13, "{got:e}");
        let degenerate = IntensityConfig {
            mu: 0.5,
            nu: 0.5,
            ..cfg()
        };
        assert!(q1_lower(4e-4, 5e-5, 1.1e-3, 0.0, &degenerate).is_err());
    }

    // mpmath, 40 digits: mu=0.5, nu=0.2, lambda=0.01, q_nu_l=4e-4,
    // q_lambda_u=5e-5, q_mu_u=1.1e-3, y0_l=0
    const Q1_ORACLE: f64 = 4.089_653_746_073_790_5e-4;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa1_lower(1.0, 123, 9.0).unwrap(), 1.0);
        assert_eq!(kappa1_lower(0.5, 10_000, 0.0).unwrap(), 0.5);
        let got = kappa1_lower(0.47, 100_000, 7.3).unwrap();
        assert!((got - (0.47 - 7.3 * (0.47 * 0.53 / 1e5_f64).sqrt())).abs() < 1e-15);
        assert!((got - 0.45848).abs() < 1e-5);
        assert!(kappa1_lower(0.5, 0, 1.0).is_err());
    }

    #[test]
    fn upsilon_examples() {
        assert_eq!(vacuum_error_lower(100_000_000, 0.5, 0.0, 7.3).unwrap(), 0.0);
        let n = 1e8;
        let got = vacuum_error_lower(100_000_000, 0.5, 6e-7, 0.0).unwrap();
        assert!((got - n * (-0.5_f64).exp() * 6e-7 / 4.0).abs() < 1e-12);
        // fluctuation term dominates: 9.0980 - 7.3 * 3.0163 < 0
        assert_eq!(
            vacuum_error_lower(100_000_000, 0.5, 6e-7, 7.3).unwrap(),
            0.0
        );
        // positive when the mean is large enough
        let big = vacuum_error_lower(100_000_000, 0.5, 1e-4, 7.3).unwrap();
        let q = (-0.5_f64).exp() * 1e-4 / 4.0;
        assert!((big - (n * q - 7.3 * (n * q * (1.0 - q)).sqrt())).abs() < 1e-9);
    }

    #[test]
    fn e1_examples() {
        assert_eq!(e1_upper(300, 10_000, 0.0, 1.0).unwrap(), 0.03);
        assert_eq!(e1_upper(0, 10_000, 0.0, 0.7).unwrap(), 0.0);
        assert!((e1_upper(300, 10_000, 50.0, 0.5).unwrap() - 0.05).abs() < 1e-15);
        assert!(matches!(
            e1_upper(300, 10_000, 0.0, 0.0),
            Err(Error::Uncertified)
        ));
        assert_eq!(e1_upper(9_000, 10_000, 0.0, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn key_length_examples() {
        assert_eq!(secret_key_length(1.0, 0.0, 4096, 0.0, 1.0), 4096);
        assert_eq!(secret_key_length(1.0, 0.5, 4096, 0.0, 1.0), 0);
        let leak = 1.15 * binary_entropy(0.03).unwrap() * 100_000.0;
        assert_eq!(
            secret_key_length(0.458, 0.05, 100_000, leak, 1e-12),
            KEY_LENGTH_ORACLE
        );
        // e1 beyond 1/2 is capped, never rewarded
        assert!(secret_key_length(1.0, 0.9, 1000, 0.0, 1.0) <= 0);
    }

    // mpmath: floor(45800 (1 - h(0.05)) - 1.15e5 h(0.03) + 5 log2 1e-12)
    const KEY_LENGTH_ORACLE: i64 = 10_128;

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_total(&SecurityParams::default()), 4e-12);
        let single = SecurityParams {
            eps_ver: 0.0,
            eps_aut: 0.0,
            eps_pa: 1e-9,
            eps_decoy: 0.0,
            ..Default::default()
        };
        assert_eq!(epsilon_total(&single), 1e-9);
        let mixed = SecurityParams {
            eps_ver: 1e-10,
            eps_aut: 2e-10,
            eps_pa: 3e-10,
            eps_decoy: 4e-10,
            ..Default::default()
        };
        assert!((epsilon_total(&mixed) - 1e-9).abs() < 1e-24);
    }

    fn counts() -> ObservedCounts {
        ObservedCounts {
            total: 1_000_000_000,
            sent: PerIntensity::new(900_000_000, 50_000_000, 50_000_000),
            detected: PerIntensity::new(1_400_000, 32_000, 700),
            l_ver: 700_000,
            n_err: 10_500,
        }
    }

    #[test]
    fn pipeline_aborts_without_decoy_detections() {
        let mut c = counts();
        c.detected.nu = 0;
        c.detected.lambda = 0;
        let r = process_decoy_statistics(&c, &cfg(), &SecurityParams::default()).unwrap();
        assert_eq!(r.kappa1_l, 0.0);
        assert_eq!(r.abort, Some(AbortReason::Uncertified));
        assert!(r.l_sec <= 0);
    }

    #[test]
    fn pipeline_phi_zero_is_plug_in() {
        let sec = SecurityParams {
            eps_decoy: 3.5,
            ..Default::default()
        };
        let c = counts();
        let r = process_decoy_statistics(&c, &cfg(), &sec).unwrap();
        assert_eq!(r.phi, 0.0);
        let q = |n: u64, d: u64| d as f64 / n as f64;
        assert_eq!(r.q_mu_u, q(c.sent.mu, c.detected.mu));
        assert_eq!(r.q_nu_l, r.q_nu_u);
        assert_eq!(r.q_lambda_l, r.q_lambda_u);
        assert_eq!(r.kappa1_l, r.theta1_l);
    }

    #[test]
    fn pipeline_bounds_are_ordered() {
        let r = process_decoy_statistics(&counts(), &cfg(), &SecurityParams::default()).unwrap();
        assert!(r.q_nu_l <= r.q_nu_u && r.q_lambda_l <= r.q_lambda_u);
        assert!(r.kappa1_l <= r.theta1_l);
        assert!(r.upsilon >= 0.0 && r.q1_l >= 0.0);
        for v in [r.q_mu_u, r.q_nu_l, r.y0_l, r.theta1_l, r.kappa1_l, r.e1_u] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(r.eps_qkd, 4e-12);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(IntensityConfig::new(0.5, 0.2, 0.2, 0.9, 0.05).is_err());
        assert!(IntensityConfig::new(0.25, 0.2, 0.06, 0.9, 0.05).is_err());
        assert!(IntensityConfig::new(0.5, 0.2, 0.01, 0.9, 0.1).is_err());
        let mut c = counts();
        c.total += 1;
        assert!(c.validate().is_err());
        let mut c = counts();
        c.n_err = c.l_ver + 1;
        assert!(c.validate().is_err());
        let mut c = counts();
        c.l_ver = c.detected.mu + 1;
        assert!(c.validate().is_err());
    }
}
