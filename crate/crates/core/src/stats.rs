//! Scalar probability primitives: binary entropy, the standard normal
//! distribution with tail-accurate quantiles, exact binomial tails and the
//! Zubkov–Serov two-sided bounds on the binomial CDF.
//!
//! The normal tail is the accuracy-critical piece. Failure budgets of
//! `1e-12 / 7` put the quantile near 7.3 standard deviations, so both the
//! CDF and its inverse are evaluated directly on the small tail instead of
//! through `1 - p`.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use crate::error::{check_open_unit, check_unit, domain, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        check_unit("probability", value).map(Probability)
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Two-sided bracket `lower <= Pr[X <= k] <= upper` for a binomial variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfSandwich {
    pub lower: Probability,
    pub upper: Probability,
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)` in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_unit("x", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let nats = -(x * x.ln() + (1.0 - x) * (-x).ln_1p());
    Ok((nats / LN_2).clamp(0.0, 1.0))
}

/// `exp(-y^2)` with the square split so the exponent keeps full precision
/// for large `y`.
fn exp_neg_sq(y: f64) -> f64 {
    let head = (y * 16.0).trunc() / 16.0;
    let tail = (y - head) * (y + head);
    (-head * head).exp() * (-tail).exp()
}

/// `erf(y)` for `0 <= y < 1` from the all-positive series
/// `erf(y) = 2/sqrt(pi) exp(-y^2) sum_n 2^n y^(2n+1) / (2n+1)!!`.
fn erf_series(y: f64) -> f64 {
    let y2 = y * y;
    let mut term = y;
    let mut sum = y;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * y2 / (2.0 * n + 1.0);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    2.0 / SQRT_PI * exp_neg_sq(y) * sum
}

/// `erfc(y)` for `y >= 1` from the Laplace continued fraction, modified
/// Lentz evaluation.
fn erfc_continued_fraction(y: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = y;
    let mut c = y;
    let mut d = 0.0;
    for n in 1..5000 {
        let a = 0.5 * n as f64;
        d = y + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = y + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    exp_neg_sq(y) / (SQRT_PI * f)
}

/// Complementary error function, relative accuracy ~1e-14 on the whole
/// non-negative axis.
fn erfc_nonneg(y: f64) -> f64 {
    if y < 1.0 {
        1.0 - erf_series(y)
    } else if y > 27.5 {
        0.0
    } else {
        erfc_continued_fraction(y)
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    exp_neg_sq(x.abs() * FRAC_1_SQRT_2) / SQRT_2PI
}

/// `Phi(x)`. Saturates to exactly 0 or 1 far in the tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        0.5 * erfc_nonneg(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc_nonneg(x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Phi(x)`, evaluated without cancellation.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

/// Quantile on the lower half, `0 < p <= 0.5`: Acklam's rational start
/// followed by Halley steps against the tail-accurate CDF.
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p == 0.5 {
        return 0.0;
    }
    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    for _ in 0..4 {
        let density = std_normal_pdf(x);
        if density == 0.0 {
            break;
        }
        let u = (std_normal_cdf(x) - p) / density;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// `Phi^{-1}(p)` for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok(if p <= 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    })
}

/// `x` such that `1 - Phi(x) = tail`, taking the tail mass directly so
/// that tiny tails such as `1e-12 / 7` keep their precision.
pub fn std_normal_upper_quantile(tail: f64) -> Result<f64> {
    check_open_unit("tail", tail)?;
    Ok(if tail <= 0.5 {
        -lower_quantile(tail)
    } else {
        lower_quantile(1.0 - tail)
    })
}

/// Deviance term `x ln(x/m) + m - x`, with a series near `x = m` to avoid
/// cancellation (Loader's `bd0`).
fn deviance(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                break;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Bernoulli relative entropy `H(x, p) = x ln(x/p) + (1-x) ln((1-x)/(1-p))`
/// in nats.
pub fn kl_bernoulli(x: f64, p: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("p", p)?;
    if x == p {
        return Ok(0.0);
    }
    if p == 0.0 || p == 1.0 {
        return Err(domain("p", p, "(0, 1) unless x == p"));
    }
    Ok((deviance(x, p) + deviance(1.0 - x, 1.0 - p)).max(0.0))
}

/// `ln Gamma(n + 1) - (n + 1/2) ln n + n - ln sqrt(2 pi)` for integer `n`.
fn stirling_error(n: u64) -> f64 {
    const TABLE: [f64; 16] = [
        0.0,
        0.081_061_466_795_327_26,
        0.041_340_695_955_409_29,
        0.027_677_925_684_998_34,
        0.020_790_672_103_765_09,
        0.016_644_691_189_821_19,
        0.013_876_128_823_070_75,
        0.011_896_709_945_891_77,
        0.010_411_265_261_972_1,
        0.009_255_462_182_712_733,
        0.008_330_563_433_362_87,
        0.007_573_675_487_951_841,
        0.006_942_840_107_209_53,
        0.006_408_994_188_004_207,
        0.005_951_370_112_758_848,
        0.005_554_733_551_962_801,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n < 16 {
        return TABLE[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `(1 - p)^n`.
fn pow_complement(p: f64, n: u64) -> f64 {
    (n as f64 * (-p).ln_1p()).exp()
}

/// `p^n`.
fn pow_prob(p: f64, n: u64) -> f64 {
    if p == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * p.ln()).exp()
}

/// Binomial point mass by Loader's saddle-point expansion, accurate to a
/// few ulps even where `ln Gamma` differences would lose digits.
fn binomial_pmf_raw(n: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return pow_complement(p, n);
    }
    if k == n {
        return pow_prob(p, n);
    }
    let (nf, kf) = (n as f64, k as f64);
    let lc = stirling_error(n)
        - stirling_error(k)
        - stirling_error(n - k)
        - deviance(kf, nf * p)
        - deviance(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + ((n - k) as f64).ln() - nf.ln();
    (lc - 0.5 * lf).exp()
}

pub fn binomial_pmf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_unit("p", p)?;
    if k > n {
        return Ok(0.0);
    }
    Ok(binomial_pmf_raw(n, p, k))
}

/// `sum_{j<=k} Pr[X = j]`, walking down from `k`. Requires `k` at or below
/// the mode so the terms shrink monotonically.
fn lower_tail_sum(n: u64, p: f64, k: u64) -> f64 {
    let odds = (1.0 - p) / p;
    let mut term = binomial_pmf_raw(n, p, k);
    let mut sum = term;
    let mut j = k;
    while j > 0 && term > 0.0 {
        term *= j as f64 / (n - j + 1) as f64 * odds;
        j -= 1;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum
}

/// `sum_{j>k} Pr[X = j]`, walking up from `k + 1`. Requires `k + 1` at or
/// above the mode.
fn upper_tail_sum(n: u64, p: f64, k: u64) -> f64 {
    let odds = p / (1.0 - p);
    let mut j = k + 1;
    let mut term = binomial_pmf_raw(n, p, j);
    let mut sum = term;
    while j < n && term > 0.0 {
        term *= (n - j) as f64 / (j + 1) as f64 * odds;
        j += 1;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum
}

fn check_binomial(n: u64, p: f64, k: u64) -> Result<()> {
    check_unit("p", p)?;
    if k > n {
        return Err(domain("k", k as f64, "0 <= k <= n"));
    }
    Ok(())
}

/// Exact `Pr[X <= k]` for `X ~ Bi(n, p)`. The sum always runs over the
/// smaller tail.
pub fn binomial_cdf_exact(n: u64, p: f64, k: u64) -> Result<f64> {
    check_binomial(n, p, k)?;
    if k == n || p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    if (k as f64) < n as f64 * p {
        Ok(lower_tail_sum(n, p, k).min(1.0))
    } else {
        Ok((1.0 - upper_tail_sum(n, p, k)).max(0.0))
    }
}

/// Exact `Pr[X > k]` for `X ~ Bi(n, p)`, accurate in relative terms deep in
/// the upper tail.
pub fn binomial_sf_exact(n: u64, p: f64, k: u64) -> Result<f64> {
    check_binomial(n, p, k)?;
    if k == n || p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    if (k as f64) < n as f64 * p {
        Ok((1.0 - lower_tail_sum(n, p, k)).max(0.0))
    } else {
        Ok(upper_tail_sum(n, p, k).min(1.0))
    }
}

/// The Zubkov–Serov function `C_{n,p}(k)` for `0 <= k <= n + 1`, with
/// `C(0) = (1-p)^n`, `C(n) = 1 - p^n` and `C(n + 1) = 1`.
pub fn zubkov_serov_c(n: u64, p: f64, k: u64) -> Result<f64> {
    Ok(match zubkov_serov_point(n, p, k)? {
        SandwichPoint::One => 1.0,
        SandwichPoint::AllFail => pow_complement(p, n),
        SandwichPoint::AllSucceed => 1.0 - pow_prob(p, n),
        SandwichPoint::Normal(z) => std_normal_cdf(z),
    })
}

/// `1 - C_{n,p}(k)`, accurate when `C` is close to one.
pub fn zubkov_serov_c_complement(n: u64, p: f64, k: u64) -> Result<f64> {
    Ok(match zubkov_serov_point(n, p, k)? {
        SandwichPoint::One => 0.0,
        SandwichPoint::AllFail => -(n as f64 * (-p).ln_1p()).exp_m1(),
        SandwichPoint::AllSucceed => pow_prob(p, n),
        SandwichPoint::Normal(z) => std_normal_sf(z),
    })
}

enum SandwichPoint {
    One,
    AllFail,
    AllSucceed,
    Normal(f64),
}

fn zubkov_serov_point(n: u64, p: f64, k: u64) -> Result<SandwichPoint> {
    check_open_unit("p", p)?;
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if k > n + 1 {
        return Err(domain("k", k as f64, "0 <= k <= n + 1"));
    }
    if k == n + 1 {
        return Ok(SandwichPoint::One);
    }
    if k == 0 {
        return Ok(SandwichPoint::AllFail);
    }
    if k == n {
        return Ok(SandwichPoint::AllSucceed);
    }
    let (nf, kf) = (n as f64, k as f64);
    let excess = kf / nf - p;
    if excess == 0.0 {
        return Ok(SandwichPoint::Normal(0.0));
    }
    // 2 n H(k/n, p) written as two deviance terms.
    let two_n_h = 2.0 * (deviance(kf, nf * p) + deviance(nf - kf, nf * (1.0 - p)));
    let z = two_n_h.max(0.0).sqrt();
    Ok(SandwichPoint::Normal(if excess > 0.0 { z } else { -z }))
}

/// `C_{n,p}(k) <= Pr[X <= k] <= C_{n,p}(k + 1)`.
pub fn zubkov_serov_sandwich(n: u64, p: f64, k: u64) -> Result<CdfSandwich> {
    if k > n {
        return Err(domain("k", k as f64, "0 <= k <= n"));
    }
    let lower = zubkov_serov_c(n, p, k)?;
    let upper = zubkov_serov_c(n, p, k + 1)?;
    Ok(CdfSandwich {
        lower: Probability::saturating(lower),
        upper: Probability::saturating(upper),
    })
}

/// Two-sided Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Independent erf oracle: alternating Maclaurin series, fine for |y| <= 1.
    fn erf_maclaurin(y: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = y;
        for n in 0..60 {
            sum += term / (2 * n + 1) as f64;
            term *= -y * y / (n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath, 40 digits
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn entropy_is_concave_on_grid() {
        for i in 0..=50 {
            for j in 0..=50 {
                let (x, y) = (i as f64 / 50.0, j as f64 / 50.0);
                let mid = binary_entropy(0.5 * (x + y)).unwrap();
                let avg = 0.5 * (binary_entropy(x).unwrap() + binary_entropy(y).unwrap());
                assert!(mid >= avg - 1e-15, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(40.0), 1.0);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        // mpmath ncdf(1)
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_matches_series_oracle() {
        for i in -140..=140 {
            let x = i as f64 / 100.0;
            let oracle = 0.5 * (1.0 + erf_maclaurin(x * FRAC_1_SQRT_2));
            assert!((std_normal_cdf(x) - oracle).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn normal_cdf_symmetry_and_monotonicity() {
        let mut prev = 0.0;
        for i in -800..=800 {
            let x = i as f64 / 100.0;
            let c = std_normal_cdf(x);
            assert!(c >= prev);
            prev = c;
            assert!((std_normal_cdf(-x) - (1.0 - c)).abs() < 1e-15);
        }
    }

    #[test]
    fn continued_fraction_and_series_agree_at_switch() {
        let y = 1.0;
        let series = 1.0 - erf_series(y);
        let cf = erfc_continued_fraction(y);
        assert!(((series - cf) / cf).abs() < 1e-14);
    }

    #[test]
    fn normal_tail_reference_values() {
        // mpmath: ncdf(-x) for x = 10, 20, 37
        let cases = [
            (10.0, 7.619_853_024_160_526e-24),
            (20.0, 2.753_624_118_606_233_7e-89),
            (37.0, 5.725_571_222_524_577e-300),
        ];
        for (x, want) in cases {
            let got = std_normal_sf(x);
            assert!(((got - want) / want).abs() < 1e-12, "x={x} got={got:e}");
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.95).unwrap() - 1.644_853_626_951_472_7).abs() < 1e-13);
        assert!((std_normal_quantile(0.95).unwrap() - bisect_quantile(0.95)).abs() < 1e-12);
        let phi = std_normal_upper_quantile(1e-12 / 7.0).unwrap();
        assert!((phi - 7.300_963_485_753_133).abs() < 1e-12);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_round_trip_deep_tail() {
        let mut exp10 = -300.0;
        while exp10 <= -0.31 {
            let p = 10f64.powf(exp10);
            let x = std_normal_quantile(p).unwrap();
            let back = std_normal_cdf(x);
            assert!(((back - p) / p).abs() <= 1e-9, "p={p:e} x={x}");
            exp10 += 0.37;
        }
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert!((kl_bernoulli(1.0, 0.5).unwrap() - LN_2).abs() < 1e-15);
        assert!((kl_bernoulli(0.6, 0.5).unwrap() - 0.020_135_513_550_688_873).abs() < 1e-15);
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert!(kl_bernoulli(0.3, 0.0).is_err());
        assert!(kl_bernoulli(0.3, 1.0).is_err());
    }

    #[test]
    fn kl_matches_direct_formula_away_from_p() {
        for &(x, p) in &[(0.1f64, 0.4f64), (0.9, 0.2), (0.01, 0.3), (0.7, 0.001)] {
            let direct: f64 = x * (x / p).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - p)).ln();
            let got = kl_bernoulli(x, p).unwrap();
            assert!(((got - direct) / direct).abs() < 1e-13);
        }
    }

    #[test]
    fn binomial_cdf_examples() {
        assert_eq!(binomial_cdf_exact(1, 0.5, 0).unwrap(), 0.5);
        assert_eq!(binomial_cdf_exact(17, 0.3, 17).unwrap(), 1.0);
        assert!((binomial_cdf_exact(10, 0.5, 5).unwrap() - 0.623_046_875).abs() < 1e-15);
        assert!(binomial_cdf_exact(10, 0.5, 11).is_err());
        assert!(binomial_cdf_exact(10, 1.5, 3).is_err());
    }

    /// Exact rational summation with u128 for small n, p = a / b.
    fn rational_cdf(n: u32, a: u128, b: u128, k: u32) -> f64 {
        let mut num: u128 = 0;
        let mut choose: u128 = 1;
        for j in 0..=k {
            if j > 0 {
                choose = choose * (n - j + 1) as u128 / j as u128;
            }
            num += choose * a.pow(j) * (b - a).pow(n - j);
        }
        num as f64 / b.pow(n) as f64
    }

    #[test]
    fn binomial_cdf_matches_rational_oracle() {
        for n in 1..=20u32 {
            for &(a, b) in &[(1u128, 10u128), (3, 10), (1, 2), (9, 10)] {
                for k in 0..=n {
                    let want = rational_cdf(n, a, b, k);
                    let got = binomial_cdf_exact(n as u64, a as f64 / b as f64, k as u64).unwrap();
                    assert!(((got - want) / want).abs() < 1e-13, "n={n} p={a}/{b} k={k}");
                }
            }
        }
    }

    #[test]
    fn binomial_sf_deep_tail() {
        // mpmath exact summation: Pr[X > 48152], X ~ Bi(1e5, 0.47)
        let got = binomial_sf_exact(100_000, 0.47, 48_152).unwrap();
        let want = 1.447_288_457_901_234_4e-13;
        assert!(((got - want) / want).abs() < 1e-11, "got={got:e}");
        // cdf + sf = 1
        let c = binomial_cdf_exact(1000, 0.3, 280).unwrap();
        let s = binomial_sf_exact(1000, 0.3, 280).unwrap();
        assert!((c + s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sandwich_examples() {
        let s = zubkov_serov_sandwich(10, 0.5, 5).unwrap();
        assert_eq!(s.lower.get(), 0.5);
        assert!((s.upper.get() - 0.737_153_565_444_074_4).abs() < 1e-14);
        assert!(s.lower.get() <= 0.623_046_875 && 0.623_046_875 <= s.upper.get());

        let s0 = zubkov_serov_sandwich(10, 0.5, 0).unwrap();
        assert_eq!(s0.lower.get(), 0.000_976_562_5);

        let top = zubkov_serov_sandwich(10, 0.5, 10).unwrap();
        assert_eq!(top.upper.get(), 1.0);
        assert!(zubkov_serov_sandwich(10, 0.0, 3).is_err());
        assert!(zubkov_serov_sandwich(0, 0.5, 0).is_err());
    }

    #[test]
    fn sandwich_c_nondecreasing_in_k() {
        for &p in &[0.01, 0.1, 0.5, 0.9] {
            for n in [1u64, 2, 7, 50, 333] {
                let mut prev = 0.0;
                for k in 0..=n + 1 {
                    let c = zubkov_serov_c(n, p, k).unwrap();
                    assert!(c >= prev, "n={n} p={p} k={k}");
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn pmf_accurate_next_to_the_edge() {
        // mpmath with the binary value of p = 0.999
        let got = binomial_pmf(400, 0.999, 399).unwrap();
        assert!(
            (got / 0.268_342_705_107_804_1 - 1.0).abs() < 1e-15,
            "{got:e}"
        );
        let cdf = binomial_cdf_exact(400, 0.999, 399).unwrap();
        assert!((cdf - 0.329_814_093_993_259_9).abs() < 3e-16, "{cdf:e}");
    }

    #[test]
    fn sandwich_complement_matches_one_minus_c() {
        for &p in &[0.03, 0.3, 0.5, 0.8] {
            for n in [1u64, 4, 60, 999] {
                for k in 0..=n + 1 {
                    let c = zubkov_serov_c(n, p, k).unwrap();
                    let cc = zubkov_serov_c_complement(n, p, k).unwrap();
                    assert!((c + cc - 1.0).abs() < 1e-14, "n={n} p={p} k={k}");
                }
            }
        }
        // deep upper tail keeps relative precision
        let cc = zubkov_serov_c_complement(100_000, 0.47, 48_152).unwrap();
        assert!(cc > 1e-14 && cc < 1e-12);
    }

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson_interval(30, 1000, 1.96);
        assert!(lo < 0.03 && 0.03 < hi);
        let (lo, hi) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
    }
}
