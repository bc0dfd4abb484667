//! Subcommand bodies. Each returns the text to emit so the binary only
//! deals with I/O and exit codes.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channel::{channel_expectation, BlockRule};
use crate::config::RunConfig;
use crate::deviation::{deviation_report, DeviationReport, Method, EXACT_MAX_N};
use crate::error::{domain, Result};
use crate::estimator::{process_decoy_statistics, EstimateResult, IntensityConfig, ObservedCounts};
use crate::montecarlo::{coverage_experiment, CoverageReport, Rate};
use crate::optimizer::{
    evaluate_intensities, optimize_intensities, optimize_signal_only, DeConfig, FiniteKeyPoint,
};

pub const SWEEP_HEADER: &str =
    "distance_km,mu,nu,p_mu,p_nu,p_lambda,qber,N,l_ver,l_sec,R_sift,R_sec,mu_star,R_sec_star";

pub const DEVIATION_HEADER: &str = "n,p,method,phi,eps_decoy,a,k,eps_prime_minus_eps,\
eps_prime_minus_eps_low,skew_correction,jump_correction";

pub const COVERAGE_HEADER: &str = "bound,violations,trials,rate,wilson_lower,wilson_upper";

const ESTIMATE_FIELDS: [&str; 17] = [
    "phi",
    "Q_mu_upper",
    "Q_nu_lower",
    "Q_nu_upper",
    "Q_lambda_lower",
    "Q_lambda_upper",
    "Y0_lower",
    "Q1_lower",
    "theta1_lower",
    "kappa1_lower",
    "upsilon",
    "e_mu",
    "e1_upper",
    "leak_ec",
    "l_sec",
    "eps_qkd",
    "abort",
];

fn estimate_values(r: &EstimateResult) -> Vec<String> {
    let mut v: Vec<String> = [
        r.phi,
        r.q_mu_u,
        r.q_nu_l,
        r.q_nu_u,
        r.q_lambda_l,
        r.q_lambda_u,
        r.y0_l,
        r.q1_l,
        r.theta1_l,
        r.kappa1_l,
        r.upsilon,
        r.e_mu,
        r.e1_u,
        r.leak_ec,
    ]
    .iter()
    .map(|x| x.to_string())
    .collect();
    v.push(r.l_sec.to_string());
    v.push(r.eps_qkd.to_string());
    v.push(
        r.abort
            .map_or_else(|| "none".to_string(), |a| format!("{a:?}")),
    );
    v
}

pub fn run_estimate(counts: &ObservedCounts, cfg: &RunConfig) -> Result<EstimateResult> {
    let intensity = cfg.intensity.ok_or_else(|| {
        crate::Error::Config("estimate needs an [intensity] section in the config".into())
    })?;
    process_decoy_statistics(counts, &intensity, &cfg.security)
}

/// Human-readable `key = value` listing of every bound.
pub fn render_estimate(r: &EstimateResult) -> String {
    let mut out = String::new();
    for (k, v) in ESTIMATE_FIELDS.iter().zip(estimate_values(r)) {
        let _ = writeln!(out, "{k} = {v}");
    }
    if let Some(reason) = r.abort {
        let _ = writeln!(out, "abort reason: {reason}");
    }
    out
}

pub fn estimate_csv(r: &EstimateResult) -> String {
    format!(
        "{}\n{}\n",
        ESTIMATE_FIELDS.join(","),
        estimate_values(r).join(",")
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub distance_km: f64,
    pub point: Option<FiniteKeyPoint>,
    pub mu_star: f64,
    pub r_sec_star: f64,
}

impl SweepRow {
    pub fn secret_rate(&self) -> f64 {
        self.point.map_or(0.0, |p| p.secret_rate())
    }

    fn to_csv(&self) -> String {
        let mut cells = vec![self.distance_km.to_string()];
        match &self.point {
            Some(p) => {
                let c = &p.cfg;
                cells.extend(
                    [c.mu, c.nu, c.p_mu, c.p_nu, c.p_lambda, p.qber]
                        .iter()
                        .map(|x| x.to_string()),
                );
                cells.push(p.pulses.to_string());
                cells.push(p.l_ver.to_string());
                cells.push(p.estimate.l_sec.to_string());
                cells.push(p.sifted_rate.to_string());
                cells.push(p.secret_rate().to_string());
            }
            None => {
                cells.extend(std::iter::repeat_n(String::new(), 10));
                cells.push("0".to_string());
            }
        }
        cells.push(self.mu_star.to_string());
        cells.push(self.r_sec_star.to_string());
        cells.join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub distances: Vec<f64>,
    pub de: DeConfig,
    pub block: BlockRule,
}

pub fn default_distances() -> Vec<f64> {
    (1..=15).map(|i| 10.0 * i as f64).collect()
}

/// One row per distance. Uses the configured intensities when present and
/// searches for the best ones otherwise.
pub fn sweep(cfg: &RunConfig, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let row = |d: f64| -> Result<SweepRow> {
        let point = match &cfg.intensity {
            Some(i) => Some(evaluate_intensities(
                i,
                d,
                &cfg.setup,
                &cfg.security,
                &opts.block,
            )?),
            None => {
                optimize_intensities(d, &cfg.setup, &cfg.security, &opts.block, &opts.de)?.point
            }
        };
        let (mu_star, r_sec_star) = optimize_signal_only(d, &cfg.setup, cfg.security.f_ec)?;
        Ok(SweepRow {
            distance_km: d,
            point,
            mu_star,
            r_sec_star,
        })
    };
    // rows are independent; collect keeps grid order
    opts.distances.par_iter().map(|&d| row(d)).collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Reports for every `(n, p)` pair of the two lists and every method.
/// Without an explicit method list the exact method is skipped where `n`
/// is too large for it.
pub fn deviation_reports(
    cfg: &RunConfig,
    ns: &[u64],
    ps: &[f64],
    methods: Option<&[Method]>,
) -> Result<Vec<DeviationReport>> {
    let mut out = Vec::new();
    for &n in ns {
        for &p in ps {
            for m in methods.unwrap_or(&Method::ALL) {
                if methods.is_none() && *m == Method::Exact && n > EXACT_MAX_N {
                    continue;
                }
                out.push(deviation_report(n, p, &cfg.security, *m)?);
            }
        }
    }
    Ok(out)
}

pub fn deviation_csv(reports: &[DeviationReport]) -> String {
    let mut out = format!("{DEVIATION_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.p,
            r.method,
            r.phi,
            r.eps_target,
            r.a,
            r.k,
            r.eps_prime_minus_eps,
            r.eps_prime_minus_eps_low,
            r.skew_correction,
            r.jump_correction
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageOptions {
    pub distance_km: f64,
    pub pulses: u64,
    pub trials: u64,
    pub seed: u64,
    pub de: DeConfig,
    pub block: BlockRule,
}

/// Coverage experiment at one distance. Intensities come from the config
/// or, when absent, from the finite-key search at that distance.
pub fn coverage(
    cfg: &RunConfig,
    opts: &CoverageOptions,
) -> Result<(IntensityConfig, CoverageReport)> {
    if opts.trials == 0 {
        return Err(domain("trials", 0.0, "trials >= 1"));
    }
    let intensity = match cfg.intensity {
        Some(i) => i,
        None => optimize_intensities(
            opts.distance_km,
            &cfg.setup,
            &cfg.security,
            &opts.block,
            &opts.de,
        )?
        .point
        .map(|p| p.cfg)
        .ok_or_else(|| crate::Error::Config("no feasible intensities at this distance".into()))?,
    };
    let truth = channel_expectation(&intensity, opts.distance_km, &cfg.setup)?;
    let report = coverage_experiment(
        &intensity,
        &truth,
        opts.pulses,
        &cfg.security,
        opts.trials,
        opts.seed,
    )?;
    Ok((intensity, report))
}

pub fn coverage_csv(report: &CoverageReport) -> String {
    let mut out = format!("{COVERAGE_HEADER}\n");
    let mut line = |name: &str, r: &Rate| {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            r.count, report.trials, r.rate, r.lower, r.upper
        );
    };
    for (id, r) in &report.per_bound {
        line(id.name(), r);
    }
    line("any_bound", &report.joint_any);
    line("estimate_failure", &report.estimate_failure);
    line("aborted", &report.aborted);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_gives_header_only() {
        let opts = SweepOptions {
            distances: vec![],
            de: DeConfig::default(),
            block: BlockRule::default(),
        };
        let rows = sweep(&RunConfig::default(), &opts).unwrap();
        assert_eq!(sweep_csv(&rows), format!("{SWEEP_HEADER}\n"));
    }

    #[test]
    fn fixed_intensity_sweep_rows() {
        let cfg = RunConfig {
            intensity: Some(IntensityConfig::new(0.5, 0.2, 0.01, 0.9, 0.05).unwrap()),
            ..Default::default()
        };
        let opts = SweepOptions {
            distances: vec![20.0, 400.0],
            de: DeConfig::default(),
            block: BlockRule::default(),
        };
        let rows = sweep(&cfg, &opts).unwrap();
        assert!(rows[0].secret_rate() > 0.0);
        assert_eq!(rows[1].secret_rate(), 0.0);
        let csv = sweep_csv(&rows);
        for line in csv.lines() {
            assert_eq!(line.split(',').count(), 14);
        }
    }

    #[test]
    fn deviation_rows_for_symmetric_p() {
        let reports = deviation_reports(&RunConfig::default(), &[10_000], &[0.5], None).unwrap();
        assert_eq!(reports.len(), 3);
        let taylor = reports.iter().find(|r| r.method == Method::Taylor).unwrap();
        assert_eq!(taylor.skew_correction, 0.0);
        let skipped =
            deviation_reports(&RunConfig::default(), &[100_000_000], &[1e-7], None).unwrap();
        assert_eq!(skipped.len(), 2);
        assert!(deviation_reports(
            &RunConfig::default(),
            &[100_000_000],
            &[1e-7],
            Some(&[Method::Exact])
        )
        .is_err());
        assert!(deviation_reports(&RunConfig::default(), &[10], &[1.5], None).is_err());
    }

    #[test]
    fn estimate_listing_has_every_field() {
        let cfg = RunConfig {
            intensity: Some(IntensityConfig::new(0.5, 0.2, 0.01, 0.9, 0.05).unwrap()),
            ..Default::default()
        };
        let counts = ObservedCounts {
            total: 1_000_000_000,
            sent: crate::estimator::PerIntensity::new(900_000_000, 50_000_000, 50_000_000),
            detected: crate::estimator::PerIntensity::new(1_400_000, 32_000, 700),
            l_ver: 700_000,
            n_err: 10_500,
        };
        let r = run_estimate(&counts, &cfg).unwrap();
        let text = render_estimate(&r);
        assert_eq!(
            text.lines().count(),
            ESTIMATE_FIELDS.len() + r.abort.is_some() as usize
        );
        let csv = estimate_csv(&r);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(run_estimate(&counts, &RunConfig::default()).is_err());
    }
}
