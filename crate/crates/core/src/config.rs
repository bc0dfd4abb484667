//! Plain-text configuration and counts files.
//!
//! Both formats are UTF-8 `key = value` lines. `#` starts a comment and
//! `[name]` opens a section. Inside a section a bare key `k` means
//! `name.k`; keys may also be written fully qualified.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::SetupParams;
use crate::error::{Error, Result};
use crate::estimator::{IntensityConfig, ObservedCounts, PerIntensity, SecurityParams};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunConfig {
    pub setup: SetupParams,
    pub security: SecurityParams,
    /// Fixed intensities; searched for when absent.
    pub intensity: Option<IntensityConfig>,
}

const SETUP_KEYS: [&str; 9] = [
    "setup.train_size",
    "setup.rep_rate_hz",
    "setup.storage_line_km",
    "setup.det_eff",
    "setup.dead_time_s",
    "setup.dark_count",
    "setup.extra_loss_db",
    "setup.atten_db_per_km",
    "setup.visibility",
];
const SECURITY_KEYS: [&str; 6] = [
    "security.eps_ver",
    "security.eps_aut",
    "security.eps_pa",
    "security.eps_decoy",
    "security.a",
    "security.f_ec",
];
const INTENSITY_KEYS: [&str; 5] = [
    "intensity.mu",
    "intensity.nu",
    "intensity.lambda",
    "intensity.p_mu",
    "intensity.p_nu",
];
const COUNT_KEYS: [&str; 9] = [
    "N", "N_mu", "N_nu", "N_lambda", "n_mu", "n_nu", "n_lambda", "l_ver", "n_err",
];

struct Entry {
    value: String,
    line: usize,
}

struct Document {
    path: PathBuf,
    entries: BTreeMap<String, Entry>,
}

impl Document {
    fn parse(text: &str, path: &Path, allowed: &[&str]) -> Result<Document> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut section: Option<String> = None;
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, format!("unterminated section header '{line}'")))?
                    .trim();
                if name.is_empty() {
                    return Err(err(line_no, "empty section name".into()));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(err(
                    line_no,
                    format!("expected 'key = value', got '{line}'"),
                ));
            }
            let full = match &section {
                Some(s) if !key.contains('.') => format!("{s}.{key}"),
                _ => key.to_string(),
            };
            if !allowed.contains(&full.as_str()) {
                return Err(err(line_no, format!("unknown key '{full}'")));
            }
            let entry = Entry {
                value: value.to_string(),
                line: line_no,
            };
            if let Some(prev) = entries.insert(full.clone(), entry) {
                return Err(err(
                    line_no,
                    format!("duplicate key '{full}' (first set on line {})", prev.line),
                ));
            }
        }
        Ok(Document {
            path: path.to_path_buf(),
            entries,
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value.parse().map(Some).map_err(|_| Error::Parse {
            path: self.path.clone(),
            line: e.line,
            msg: format!("invalid value '{}' for '{key}'", e.value),
        })
    }

    fn set<T: std::str::FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line: 0,
            msg: format!("missing key '{key}'"),
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl RunConfig {
    /// Parses a configuration. Missing setup and security keys keep their
    /// defaults; intensity keys must be given all together or not at all.
    pub fn parse(text: &str, path: &Path) -> Result<RunConfig> {
        let allowed: Vec<&str> = SETUP_KEYS
            .iter()
            .chain(&SECURITY_KEYS)
            .chain(&INTENSITY_KEYS)
            .copied()
            .collect();
        let doc = Document::parse(text, path, &allowed)?;
        let mut cfg = RunConfig::default();

        let s = &mut cfg.setup;
        doc.set("setup.train_size", &mut s.train_size)?;
        doc.set("setup.rep_rate_hz", &mut s.rep_rate_hz)?;
        doc.set("setup.storage_line_km", &mut s.storage_line_km)?;
        doc.set("setup.det_eff", &mut s.det_eff)?;
        doc.set("setup.dead_time_s", &mut s.dead_time_s)?;
        doc.set("setup.dark_count", &mut s.dark_count)?;
        doc.set("setup.extra_loss_db", &mut s.extra_loss_db)?;
        doc.set("setup.atten_db_per_km", &mut s.atten_db_per_km)?;
        doc.set("setup.visibility", &mut s.visibility)?;

        let sec = &mut cfg.security;
        doc.set("security.eps_ver", &mut sec.eps_ver)?;
        doc.set("security.eps_aut", &mut sec.eps_aut)?;
        doc.set("security.eps_pa", &mut sec.eps_pa)?;
        doc.set("security.eps_decoy", &mut sec.eps_decoy)?;
        doc.set("security.a", &mut sec.a)?;
        doc.set("security.f_ec", &mut sec.f_ec)?;

        let given = INTENSITY_KEYS
            .iter()
            .filter(|k| doc.entries.contains_key(**k))
            .count();
        if given == INTENSITY_KEYS.len() {
            cfg.intensity = Some(IntensityConfig::new(
                doc.require("intensity.mu")?,
                doc.require("intensity.nu")?,
                doc.require("intensity.lambda")?,
                doc.require("intensity.p_mu")?,
                doc.require("intensity.p_nu")?,
            )?);
        } else if given > 0 {
            let missing: Vec<&str> = INTENSITY_KEYS
                .iter()
                .filter(|k| !doc.entries.contains_key(**k))
                .copied()
                .collect();
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!(
                    "incomplete intensity section, missing {}",
                    missing.join(", ")
                ),
            });
        }

        cfg.setup.validate()?;
        cfg.security.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::parse(&read(path)?, path)
    }

    pub fn to_text(&self) -> String {
        let s = &self.setup;
        let sec = &self.security;
        let mut out = String::new();
        let _ = writeln!(out, "[setup]");
        let _ = writeln!(out, "train_size = {}", s.train_size);
        let _ = writeln!(out, "rep_rate_hz = {}", s.rep_rate_hz);
        let _ = writeln!(out, "storage_line_km = {}", s.storage_line_km);
        let _ = writeln!(out, "det_eff = {}", s.det_eff);
        let _ = writeln!(out, "dead_time_s = {}", s.dead_time_s);
        let _ = writeln!(out, "dark_count = {}", s.dark_count);
        let _ = writeln!(out, "extra_loss_db = {}", s.extra_loss_db);
        let _ = writeln!(out, "atten_db_per_km = {}", s.atten_db_per_km);
        let _ = writeln!(out, "visibility = {}", s.visibility);
        let _ = writeln!(out, "\n[security]");
        let _ = writeln!(out, "eps_ver = {}", sec.eps_ver);
        let _ = writeln!(out, "eps_aut = {}", sec.eps_aut);
        let _ = writeln!(out, "eps_pa = {}", sec.eps_pa);
        let _ = writeln!(out, "eps_decoy = {}", sec.eps_decoy);
        let _ = writeln!(out, "a = {}", sec.a);
        let _ = writeln!(out, "f_ec = {}", sec.f_ec);
        if let Some(i) = &self.intensity {
            let _ = writeln!(out, "\n[intensity]");
            let _ = writeln!(out, "mu = {}", i.mu);
            let _ = writeln!(out, "nu = {}", i.nu);
            let _ = writeln!(out, "lambda = {}", i.lambda);
            let _ = writeln!(out, "p_mu = {}", i.p_mu);
            let _ = writeln!(out, "p_nu = {}", i.p_nu);
        }
        out
    }
}

pub fn parse_counts(text: &str, path: &Path) -> Result<ObservedCounts> {
    let doc = Document::parse(text, path, &COUNT_KEYS)?;
    let counts = ObservedCounts {
        total: doc.require("N")?,
        sent: PerIntensity::new(
            doc.require("N_mu")?,
            doc.require("N_nu")?,
            doc.require("N_lambda")?,
        ),
        detected: PerIntensity::new(
            doc.require("n_mu")?,
            doc.require("n_nu")?,
            doc.require("n_lambda")?,
        ),
        l_ver: doc.require("l_ver")?,
        n_err: doc.require("n_err")?,
    };
    counts.validate()?;
    Ok(counts)
}

pub fn load_counts(path: &Path) -> Result<ObservedCounts> {
    parse_counts(&read(path)?, path)
}

pub fn counts_to_text(c: &ObservedCounts) -> String {
    format!(
        "N = {}\nN_mu = {}\nN_nu = {}\nN_lambda = {}\nn_mu = {}\nn_nu = {}\nn_lambda = {}\nl_ver = {}\nn_err = {}\n",
        c.total,
        c.sent.mu,
        c.sent.nu,
        c.sent.lambda,
        c.detected.mu,
        c.detected.nu,
        c.detected.lambda,
        c.l_ver,
        c.n_err
    )
}
