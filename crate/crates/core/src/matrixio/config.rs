use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the fusion pipeline.
///
/// Canonical text form is one `key=value` per line in field order. `eta`,
/// `theta` and `iota` accept `auto` (use the feature count), `fixed_k` accepts
/// `off` (incremental selection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Neighbors proximity coefficient, in `[0, 1)`.
    pub npc: f64,
    pub k_max: usize,
    /// Scale of the outlier threshold.
    pub lambda_scale: f64,
    /// Mix between the weighted similarity and the votes, in `[0, 1]`.
    pub lambda_mix: f64,
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub iota: Option<f64>,
    pub mu_epsilon: f64,
    pub rd_tol: f64,
    pub rd_max_iter: usize,
    pub support_eps: f64,
    /// Fixed neighbor count; disables incremental selection when set.
    pub fixed_k: Option<usize>,
    /// Append items outside every neighbor set after the candidate pool.
    pub full_ranking: bool,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            npc: 0.75,
            k_max: 50,
            lambda_scale: 1.0,
            lambda_mix: 0.7,
            eta: None,
            theta: None,
            iota: None,
            mu_epsilon: 1e-3,
            rd_tol: 1e-7,
            rd_max_iter: 10_000,
            support_eps: 1e-6,
            fixed_k: None,
            full_ranking: true,
            seed: 0,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "npc",
    "k_max",
    "lambda_scale",
    "lambda_mix",
    "eta",
    "theta",
    "iota",
    "mu_epsilon",
    "rd_tol",
    "rd_max_iter",
    "support_eps",
    "fixed_k",
    "full_ranking",
    "seed",
];

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.npc) {
            return bad(format!("npc must lie in [0, 1), got {}", self.npc));
        }
        if self.k_max == 0 {
            return bad("k_max must be positive".into());
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale.is_finite()) {
            return bad(format!("lambda_scale must be positive, got {}", self.lambda_scale));
        }
        if !(0.0..=1.0).contains(&self.lambda_mix) {
            return bad(format!("lambda_mix must lie in [0, 1], got {}", self.lambda_mix));
        }
        for (key, v) in [("eta", self.eta), ("theta", self.theta), ("iota", self.iota)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{key} must be positive, got {v}"));
                }
            }
        }
        for (key, v) in [
            ("mu_epsilon", self.mu_epsilon),
            ("rd_tol", self.rd_tol),
            ("support_eps", self.support_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{key} must be positive, got {v}"));
            }
        }
        if self.rd_max_iter == 0 {
            return bad("rd_max_iter must be positive".into());
        }
        if self.fixed_k == Some(0) {
            return bad("fixed_k must be positive or off".into());
        }
        Ok(())
    }

    /// Vote divisors `(eta, theta, iota)` resolved for `z` features.
    pub fn vote_divisors(&self, z: usize) -> (f64, f64, f64) {
        let z = z as f64;
        (self.eta.unwrap_or(z), self.theta.unwrap_or(z), self.iota.unwrap_or(z))
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let invalid = |e: String| Error::InvalidConfig(format!("{key}: {e}"));
        let float = |v: &str| v.parse::<f64>().map_err(|e| invalid(e.to_string()));
        let int = |v: &str| v.parse::<usize>().map_err(|e| invalid(e.to_string()));
        let auto = |v: &str| -> Result<Option<f64>> {
            if v == "auto" {
                Ok(None)
            } else {
                float(v).map(Some)
            }
        };
        match key {
            "npc" => self.npc = float(value)?,
            "k_max" => self.k_max = int(value)?,
            "lambda_scale" => self.lambda_scale = float(value)?,
            "lambda_mix" => self.lambda_mix = float(value)?,
            "eta" => self.eta = auto(value)?,
            "theta" => self.theta = auto(value)?,
            "iota" => self.iota = auto(value)?,
            "mu_epsilon" => self.mu_epsilon = float(value)?,
            "rd_tol" => self.rd_tol = float(value)?,
            "rd_max_iter" => self.rd_max_iter = int(value)?,
            "support_eps" => self.support_eps = float(value)?,
            "fixed_k" => {
                self.fixed_k = if value == "off" { None } else { Some(int(value)?) };
            }
            "full_ranking" => {
                self.full_ranking = value
                    .parse()
                    .map_err(|e: std::str::ParseBoolError| invalid(e.to_string()))?
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| invalid(e.to_string()))?
            }
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key=value` lines over `self`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |v| format!("{v:?}"));
        let mut out = String::new();
        let _ = writeln!(out, "npc={:?}", self.npc);
        let _ = writeln!(out, "k_max={}", self.k_max);
        let _ = writeln!(out, "lambda_scale={:?}", self.lambda_scale);
        let _ = writeln!(out, "lambda_mix={:?}", self.lambda_mix);
        let _ = writeln!(out, "eta={}", opt(self.eta));
        let _ = writeln!(out, "theta={}", opt(self.theta));
        let _ = writeln!(out, "iota={}", opt(self.iota));
        let _ = writeln!(out, "mu_epsilon={:?}", self.mu_epsilon);
        let _ = writeln!(out, "rd_tol={:?}", self.rd_tol);
        let _ = writeln!(out, "rd_max_iter={}", self.rd_max_iter);
        let _ = writeln!(out, "support_eps={:?}", self.support_eps);
        let _ = writeln!(
            out,
            "fixed_k={}",
            self.fixed_k.map_or_else(|| "off".to_string(), |k| k.to_string())
        );
        let _ = writeln!(out, "full_ranking={}", self.full_ranking);
        let _ = writeln!(out, "seed={}", self.seed);
        out
    }
}
