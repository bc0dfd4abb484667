//! Differential evolution and the intensity searches built on it.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{session_expectation, theoretical_limit_rate, BlockRule, SetupParams};
use crate::error::{Error, Result};
use crate::estimator::{process_decoy_statistics, EstimateResult, IntensityConfig, SecurityParams};

/// Vacuum-decoy intensity used by every intensity search.
pub const LAMBDA: f64 = 0.01;

/// Search box for `[mu, nu, p_mu, p_nu]`. `nu < mu` and `p_lambda > 0` are
/// enforced by scoring violating points as infeasible.
pub const INTENSITY_BOUNDS: [(f64, f64); 4] =
    [(0.05, 1.5), (0.021, 1.5), (0.5, 0.999), (1e-6, 0.5)];

/// Upper end of the signal-only intensity search.
pub const MU_STAR_MAX: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    pub population: usize,
    pub differential_weight: f64,
    pub crossover_rate: f64,
    pub generations: usize,
    pub seed: u64,
    pub bounds: Vec<(f64, f64)>,
}

impl DeConfig {
    pub fn new(bounds: Vec<(f64, f64)>) -> DeConfig {
        DeConfig {
            population: 40,
            differential_weight: 0.7,
            crossover_rate: 0.9,
            generations: 300,
            seed: 0,
            bounds,
        }
    }

    pub fn with_bounds(&self, bounds: Vec<(f64, f64)>) -> DeConfig {
        DeConfig {
            bounds,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(format!(
                "population must be at least 4, got {}",
                self.population
            )));
        }
        if !(self.differential_weight > 0.0 && self.differential_weight <= 2.0) {
            return Err(Error::Config(format!(
                "differential weight must lie in (0, 2], got {}",
                self.differential_weight
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        if self.bounds.is_empty() {
            return Err(Error::Config("no search dimensions".into()));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!(
                    "bounds of dimension {i} are not ordered: ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig::new(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    /// Best objective after initialisation and after every generation.
    pub history: Vec<f64>,
}

fn score(objective: &(impl Fn(&[f64]) -> f64 + Sync), x: &[f64]) -> f64 {
    let v = objective(x);
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximises `objective` over the box with the rand/1/bin scheme. Trial
/// vectors are clipped to the box. NaN scores count as infeasible.
pub fn differential_evolution<F>(objective: F, cfg: &DeConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            cfg.bounds
                .iter()
                .map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect()
        })
        .collect();
    let mut fit: Vec<f64> = pop.par_iter().map(|x| score(&objective, x)).collect();

    let best_index = |fit: &[f64]| {
        let mut b = 0;
        for (i, &f) in fit.iter().enumerate() {
            if f > fit[b] {
                b = i;
            }
        }
        b
    };
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(fit[best_index(&fit)]);

    for _ in 0..cfg.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.random_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == forced || rng.random::<f64>() < cfg.crossover_rate {
                            let v =
                                pop[r1][j] + cfg.differential_weight * (pop[r2][j] - pop[r3][j]);
                            v.clamp(cfg.bounds[j].0, cfg.bounds[j].1)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fit: Vec<f64> = trials.par_iter().map(|x| score(&objective, x)).collect();
        for (i, (x, f)) in trials.into_iter().zip(trial_fit).enumerate() {
            if f >= fit[i] {
                pop[i] = x;
                fit[i] = f;
            }
        }
        history.push(fit[best_index(&fit)]);
    }

    let b = best_index(&fit);
    Ok(OptimizationResult {
        best_params: pop[b].clone(),
        best_objective: fit[b],
        history,
    })
}

/// Finite-key performance of one intensity configuration at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteKeyPoint {
    pub cfg: IntensityConfig,
    pub pulses: u64,
    pub l_ver: u64,
    pub qber: f64,
    pub session_time: f64,
    pub sifted_rate: f64,
    pub estimate: EstimateResult,
    /// `l_sec / session_time`, possibly negative.
    pub objective: f64,
}

impl FiniteKeyPoint {
    /// Secret key rate; zero when the block is discarded.
    pub fn secret_rate(&self) -> f64 {
        if self.estimate.l_sec > 0 {
            self.estimate.l_sec as f64 / self.session_time
        } else {
            0.0
        }
    }
}

/// Evaluates the finite-key rate from expected counts under `block`.
pub fn evaluate_intensities(
    cfg: &IntensityConfig,
    distance_km: f64,
    setup: &SetupParams,
    sec: &SecurityParams,
    block: &BlockRule,
) -> Result<FiniteKeyPoint> {
    cfg.validate()?;
    let pulses = block.pulses(cfg, distance_km, setup)?;
    let (ch, counts) = session_expectation(cfg, distance_km, setup, pulses)?;
    let estimate = process_decoy_statistics(&counts, cfg, sec)?;
    Ok(FiniteKeyPoint {
        cfg: *cfg,
        pulses,
        l_ver: counts.l_ver,
        qber: ch.qber.mu,
        session_time: ch.session_time,
        sifted_rate: ch.sifted_rate,
        estimate,
        objective: estimate.l_sec as f64 / ch.session_time,
    })
}

fn intensity_config(x: &[f64]) -> Result<IntensityConfig> {
    IntensityConfig::new(x[0], x[1], LAMBDA, x[2], x[3])
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityOptimum {
    /// Best point found, or `None` when no feasible point was evaluated.
    pub point: Option<FiniteKeyPoint>,
    pub search: OptimizationResult,
}

impl IntensityOptimum {
    /// True when no feasible configuration gives a positive key.
    pub fn is_abort(&self) -> bool {
        self.point.is_none_or(|p| p.estimate.l_sec <= 0)
    }
}

/// Searches `(mu, nu, p_mu, p_nu)` for the largest finite-key rate at
/// `distance_km`, with `lambda` fixed at [`LAMBDA`].
pub fn optimize_intensities(
    distance_km: f64,
    setup: &SetupParams,
    sec: &SecurityParams,
    block: &BlockRule,
    de: &DeConfig,
) -> Result<IntensityOptimum> {
    setup.validate()?;
    sec.validate()?;
    let de = de.with_bounds(INTENSITY_BOUNDS.to_vec());
    let objective = |x: &[f64]| {
        intensity_config(x)
            .and_then(|cfg| evaluate_intensities(&cfg, distance_km, setup, sec, block))
            .map_or(f64::NEG_INFINITY, |p| p.objective)
    };
    let search = differential_evolution(objective, &de)?;
    let point = if search.best_objective.is_finite() {
        let cfg = intensity_config(&search.best_params)?;
        Some(evaluate_intensities(&cfg, distance_km, setup, sec, block)?)
    } else {
        None
    };
    Ok(IntensityOptimum { point, search })
}

/// Signal intensity maximising the asymptotic signal-only rate on
/// `(0, MU_STAR_MAX]`, and that rate.
pub fn optimize_signal_only(
    distance_km: f64,
    setup: &SetupParams,
    f_ec: f64,
) -> Result<(f64, f64)> {
    const GRID: usize = 300;
    let rate = |mu: f64| theoretical_limit_rate(distance_km, setup, mu, f_ec);
    let step = MU_STAR_MAX / GRID as f64;
    let mut best = (step, rate(step)?);
    for i in 2..=GRID {
        let mu = step * i as f64;
        let r = rate(mu)?;
        if r > best.1 {
            best = (mu, r);
        }
    }

    // golden-section refinement inside the neighbouring grid cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best.0 - step).max(step * 1e-3);
    let mut hi = (best.0 + step).min(MU_STAR_MAX);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (rate(x1)?, rate(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = rate(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = rate(x1)?;
        }
    }
    for (mu, r) in [(x1, f1), (x2, f2)] {
        if r > best.1 {
            best = (mu, r);
        }
    }
    Ok(best)
}
