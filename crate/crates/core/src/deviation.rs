//! How far the normal approximation behind each one-sided bound is from
//! the binomial tail it stands in for.
//!
//! A bound placed `phi` standard deviations above the mean of `Bi(n, p)`
//! is meant to fail with probability `eps/a = 1 - Phi(phi)`. Its true
//! failure probability is `eps'/a = Pr[X > k]` with
//! `k = np + phi * sqrt(np(1-p))`. Reports give `eps' - eps`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_open_unit, domain, Error, Result};
use crate::estimator::{compute_phi, SecurityParams};
use crate::stats::{binomial_sf_exact, std_normal_pdf, zubkov_serov_c_complement};

/// Largest `n` accepted by [`Method::Exact`].
pub const EXACT_MAX_N: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Taylor,
    Sandwich,
    Exact,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Taylor, Method::Sandwich, Method::Exact];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Taylor => "taylor",
            Method::Sandwich => "sandwich",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "taylor" => Ok(Method::Taylor),
            "sandwich" => Ok(Method::Sandwich),
            "exact" => Ok(Method::Exact),
            other => Err(Error::Config(format!(
                "unknown method '{other}', expected taylor, sandwich or exact"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    pub n: u64,
    pub p: f64,
    pub phi: f64,
    pub eps_target: f64,
    pub a: u32,
    /// Threshold count. Continuous for the Taylor method, floored otherwise.
    pub k: f64,
    pub method: Method,
    /// Conservative (largest) value of `eps' - eps` the method supports.
    pub eps_prime_minus_eps: f64,
    /// Smallest value of `eps' - eps` the method supports. Equal to the
    /// conservative value for the exact method.
    pub eps_prime_minus_eps_low: f64,
    /// Taylor skew correction `C(k) - Phi(phi)`; zero for other methods.
    pub skew_correction: f64,
    /// Taylor lattice-jump correction `C(k+1) - C(k)`; zero for other methods.
    pub jump_correction: f64,
}

/// First-order corrections `(C(k) - Phi(phi), C(k+1) - Phi(phi))` at
/// `k = np + phi * sqrt(np(1-p))`.
pub fn taylor_deviation(n: u64, p: f64, phi: f64) -> Result<(f64, f64)> {
    check_open_unit("p", p)?;
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if !phi.is_finite() {
        return Err(domain("phi", phi, "finite"));
    }
    let var = n as f64 * p * (1.0 - p);
    // e^{-phi^2/2} / sqrt(2 pi var)
    let jump = std_normal_pdf(phi) / var.sqrt();
    let skew = phi * phi * (1.0 - 2.0 * p) * jump / 6.0;
    Ok((0.0 - skew, jump - skew))
}

/// Evaluates `eps' - eps` for the upper-tail bound at
/// `phi = compute_phi(eps_decoy, a)`.
pub fn deviation_report(
    n: u64,
    p: f64,
    sec: &SecurityParams,
    method: Method,
) -> Result<DeviationReport> {
    check_open_unit("p", p)?;
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if method == Method::Exact && n > EXACT_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: EXACT_MAX_N,
        });
    }
    let phi = compute_phi(sec.eps_decoy, sec.a)?;
    let a = sec.a as f64;
    let tail = sec.eps_decoy / a;
    let k_real = n as f64 * p + phi * (n as f64 * p * (1.0 - p)).sqrt();
    let k_floor = k_real.floor().clamp(0.0, n as f64) as u64;

    let mut report = DeviationReport {
        n,
        p,
        phi,
        eps_target: sec.eps_decoy,
        a: sec.a,
        k: k_floor as f64,
        method,
        eps_prime_minus_eps: 0.0,
        eps_prime_minus_eps_low: 0.0,
        skew_correction: 0.0,
        jump_correction: 0.0,
    };
    match method {
        Method::Taylor => {
            let (lo, hi) = taylor_deviation(n, p, phi)?;
            report.k = k_real;
            report.skew_correction = lo;
            report.jump_correction = hi - lo;
            // eps'/a = 1 - Pr[X <= k] lies in [tail - hi, tail - lo]
            report.eps_prime_minus_eps = -a * lo;
            report.eps_prime_minus_eps_low = -a * hi;
        }
        Method::Sandwich => {
            // Pr[X > k] lies in [1 - C(k+1), 1 - C(k)]
            let high = zubkov_serov_c_complement(n, p, k_floor)?;
            let low = zubkov_serov_c_complement(n, p, k_floor + 1)?;
            report.eps_prime_minus_eps = a * (high - tail);
            report.eps_prime_minus_eps_low = a * (low - tail);
        }
        Method::Exact => {
            let diff = a * (binomial_sf_exact(n, p, k_floor)? - tail);
            report.eps_prime_minus_eps = diff;
            report.eps_prime_minus_eps_low = diff;
        }
    }
    Ok(report)
}
