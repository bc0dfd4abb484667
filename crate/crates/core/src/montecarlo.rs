//! Seeded sampling of session counts and coverage experiments for the
//! estimator's one-sided bounds.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::channel::ChannelExpectation;
use crate::error::{domain, Result};
use crate::estimator::{
    process_decoy_statistics, EstimateResult, IntensityConfig, ObservedCounts, PerIntensity,
    SecurityParams,
};
use crate::stats::{std_normal_upper_quantile, wilson_interval};

/// Identifies one of the seven one-sided bounds of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundId {
    QMuUpper,
    QNuLower,
    QNuUpper,
    QLambdaLower,
    QLambdaUpper,
    Kappa1,
    E0N0,
}

impl BoundId {
    pub const ALL: [BoundId; 7] = [
        BoundId::QMuUpper,
        BoundId::QNuLower,
        BoundId::QNuUpper,
        BoundId::QLambdaLower,
        BoundId::QLambdaUpper,
        BoundId::Kappa1,
        BoundId::E0N0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::QMuUpper => "Q_mu_upper",
            BoundId::QNuLower => "Q_nu_lower",
            BoundId::QNuUpper => "Q_nu_upper",
            BoundId::QLambdaLower => "Q_lambda_lower",
            BoundId::QLambdaUpper => "Q_lambda_upper",
            BoundId::Kappa1 => "kappa1_lower",
            BoundId::E0N0 => "e0n0_lower",
        }
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of violated bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Violations(u8);

impl Violations {
    pub fn insert(&mut self, id: BoundId) {
        self.0 |= id.bit();
    }

    pub fn contains(&self, id: BoundId) -> bool {
        self.0 & id.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = BoundId> + '_ {
        BoundId::ALL.into_iter().filter(|id| self.contains(*id))
    }
}

/// Quantities realised in one sampled session that the bounds refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedTruth {
    /// Single-photon fraction of the verified key.
    pub kappa1: f64,
    /// Errors in the verified key caused by vacuum pulses.
    pub e0n0: u64,
    /// Error rate among single-photon bits; zero when there are none.
    pub e1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub counts: ObservedCounts,
    pub truth: RealizedTruth,
    /// `None` when the estimator rejected the sampled counts.
    pub estimate: Option<EstimateResult>,
    pub violations: Violations,
    /// The final single-photon estimates are wrong: realised kappa1 below its
    /// bound or realised e1 above its bound.
    pub estimate_failure: bool,
    pub aborted: bool,
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p)
            .expect("p checked to lie in (0, 1)")
            .sample(rng)
    }
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_with_truth<R: Rng + ?Sized>(
    cfg: &IntensityConfig,
    truth: &ChannelExpectation,
    n: u64,
    rng: &mut R,
) -> (ObservedCounts, RealizedTruth) {
    let sent_mu = binomial(rng, n, cfg.p_mu);
    let rest = n - sent_mu;
    let share_nu = if cfg.p_mu < 1.0 {
        cfg.p_nu / (1.0 - cfg.p_mu)
    } else {
        0.0
    };
    let sent_nu = binomial(rng, rest, share_nu);
    let sent = PerIntensity::new(sent_mu, sent_nu, rest - sent_nu);

    let detected = PerIntensity::new(
        binomial(rng, sent.mu, truth.gain.mu),
        binomial(rng, sent.nu, truth.gain.nu),
        binomial(rng, sent.lambda, truth.gain.lambda),
    );
    let l_ver = binomial(rng, detected.mu, 0.5);

    // photon-number classes of the verified bits
    let theta0 = truth.theta0.clamp(0.0, 1.0);
    let theta1 = truth.theta1.clamp(0.0, 1.0 - theta0);
    let n0 = binomial(rng, l_ver, theta0);
    let n1 = if theta0 < 1.0 {
        binomial(rng, l_ver - n0, theta1 / (1.0 - theta0))
    } else {
        0
    };
    let n_multi = l_ver - n0 - n1;

    // the multi-photon error rate makes the overall error rate exactly e_mu
    let e_mu = truth.qber.mu;
    let rest_share = 1.0 - theta0 - theta1;
    let e_multi = if rest_share > 0.0 {
        ((e_mu - 0.5 * theta0 - truth.e1 * theta1) / rest_share).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let e0n0 = binomial(rng, n0, 0.5);
    let e1n1 = binomial(rng, n1, truth.e1);
    let em = binomial(rng, n_multi, e_multi);

    let counts = ObservedCounts {
        total: n,
        sent,
        detected,
        l_ver,
        n_err: e0n0 + e1n1 + em,
    };
    let realized = RealizedTruth {
        kappa1: if l_ver > 0 {
            n1 as f64 / l_ver as f64
        } else {
            0.0
        },
        e0n0,
        e1: if n1 > 0 { e1n1 as f64 / n1 as f64 } else { 0.0 },
    };
    (counts, realized)
}

/// Draws one session of `n` pulses from the true channel parameters.
pub fn sample_counts(
    cfg: &IntensityConfig,
    truth: &ChannelExpectation,
    n: u64,
    seed: u64,
) -> Result<ObservedCounts> {
    if n == 0 {
        return Err(domain("N", 0.0, "N >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with_truth(cfg, truth, n, &mut rng).0)
}

/// Samples trial `index` of an experiment seeded with `seed`, runs the
/// estimator and checks every bound against the truth.
pub fn run_trial(
    cfg: &IntensityConfig,
    truth: &ChannelExpectation,
    n: u64,
    sec: &SecurityParams,
    seed: u64,
    index: u64,
) -> TrialOutcome {
    let mut rng = trial_rng(seed, index);
    let (counts, realized) = sample_with_truth(cfg, truth, n, &mut rng);
    let estimate = process_decoy_statistics(&counts, cfg, sec).ok();

    let mut violations = Violations::default();
    let mut estimate_failure = false;
    let aborted = estimate.is_none_or(|e| e.is_abort());
    if let Some(est) = &estimate {
        let q = truth.gain;
        let checks = [
            (BoundId::QMuUpper, q.mu > est.q_mu_u),
            (BoundId::QNuLower, q.nu < est.q_nu_l),
            (BoundId::QNuUpper, q.nu > est.q_nu_u),
            (BoundId::QLambdaLower, q.lambda < est.q_lambda_l),
            (BoundId::QLambdaUpper, q.lambda > est.q_lambda_u),
            (BoundId::Kappa1, realized.kappa1 < est.kappa1_l),
            (BoundId::E0N0, (realized.e0n0 as f64) < est.upsilon),
        ];
        for (id, violated) in checks {
            if violated {
                violations.insert(id);
            }
        }
        estimate_failure = realized.kappa1 < est.kappa1_l || realized.e1 > est.e1_u;
    }

    TrialOutcome {
        counts,
        truth: realized,
        estimate,
        violations,
        estimate_failure,
        aborted,
    }
}

/// Empirical frequency with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub count: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Rate {
    fn new(count: u64, trials: u64) -> Rate {
        let z = std_normal_upper_quantile(0.025).expect("0.025 is a valid tail");
        let (lower, upper) = wilson_interval(count, trials, z);
        Rate {
            count,
            rate: count as f64 / trials as f64,
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub trials: u64,
    pub per_bound: Vec<(BoundId, Rate)>,
    /// At least one of the seven bounds violated.
    pub joint_any: Rate,
    pub estimate_failure: Rate,
    pub aborted: Rate,
    /// Trials where the estimator rejected the sampled counts.
    pub rejected: u64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    per_bound: [u64; 7],
    any: u64,
    failure: u64,
    aborted: u64,
    rejected: u64,
}

impl Tally {
    fn add(mut self, o: &TrialOutcome) -> Tally {
        for (i, id) in BoundId::ALL.iter().enumerate() {
            self.per_bound[i] += o.violations.contains(*id) as u64;
        }
        self.any += !o.violations.is_empty() as u64;
        self.failure += o.estimate_failure as u64;
        self.aborted += o.aborted as u64;
        self.rejected += o.estimate.is_none() as u64;
        self
    }

    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..7 {
            self.per_bound[i] += other.per_bound[i];
        }
        self.any += other.any;
        self.failure += other.failure;
        self.aborted += other.aborted;
        self.rejected += other.rejected;
        self
    }
}

/// Runs `trials` independent sessions and reports how often each bound
/// failed against the truth.
pub fn coverage_experiment(
    cfg: &IntensityConfig,
    truth: &ChannelExpectation,
    n: u64,
    sec: &SecurityParams,
    trials: u64,
    seed: u64,
) -> Result<CoverageReport> {
    if trials == 0 {
        return Err(domain("trials", 0.0, "trials >= 1"));
    }
    if n == 0 {
        return Err(domain("N", 0.0, "N >= 1"));
    }
    cfg.validate()?;
    sec.validate()?;
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| Tally::default().add(&run_trial(cfg, truth, n, sec, seed, i)))
        .reduce(Tally::default, Tally::merge);

    Ok(CoverageReport {
        trials,
        per_bound: BoundId::ALL
            .iter()
            .zip(tally.per_bound)
            .map(|(id, c)| (*id, Rate::new(c, trials)))
            .collect(),
        joint_any: Rate::new(tally.any, trials),
        estimate_failure: Rate::new(tally.failure, trials),
        aborted: Rate::new(tally.aborted, trials),
        rejected: tally.rejected,
    })
}
