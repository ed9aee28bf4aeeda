//! Deterministic synthetic corpora: items in equal-size groups around random
//! unit-sphere centres, one noisy embedding per feature.
//!
//! Every draw comes from a ChaCha8 stream selected by `(seed, feature,
//! item)`, so changing one feature's noise level leaves every other draw
//! untouched.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixio::{FeatureMatrix, GroundTruth, MatrixKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub groups: usize,
    pub group_size: usize,
    pub dims: usize,
    /// Per-coordinate noise standard deviation, one per feature.
    pub feature_noises: Vec<f64>,
    pub seed: u64,
    /// Optional declared item count; must equal `groups * group_size`.
    pub n: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            groups: 250,
            group_size: 4,
            dims: 16,
            feature_noises: vec![0.1, 0.2, 1.0],
            seed: 0,
            n: None,
        }
    }
}

impl SynthConfig {
    pub fn n(&self) -> usize {
        self.groups * self.group_size
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.groups == 0 || self.group_size == 0 || self.dims == 0 {
            return bad("groups, group_size and dims must be positive".into());
        }
        if self.feature_noises.is_empty() {
            return bad("feature_noises must list at least one feature".into());
        }
        if let Some(v) = self.feature_noises.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return bad(format!("feature noise must be >= 0, got {v}"));
        }
        if let Some(n) = self.n {
            if n != self.n() {
                return bad(format!(
                    "n = {n} but groups * group_size = {} * {} = {}",
                    self.groups,
                    self.group_size,
                    self.n()
                ));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let invalid = |e: String| Error::InvalidConfig(format!("{key}: {e}"));
            let int = |v: &str| v.parse::<usize>().map_err(|e| invalid(e.to_string()));
            match key {
                "groups" => cfg.groups = int(value)?,
                "group_size" => cfg.group_size = int(value)?,
                "dims" => cfg.dims = int(value)?,
                "n" => cfg.n = Some(int(value)?),
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|e: std::num::ParseIntError| invalid(e.to_string()))?
                }
                "feature_noises" => {
                    cfg.feature_noises = value
                        .split(',')
                        .map(|t| t.trim().parse::<f64>().map_err(|e| invalid(e.to_string())))
                        .collect::<Result<_>>()?
                }
                other => return Err(Error::UnknownKey(other.to_string())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let noises: Vec<String> = self.feature_noises.iter().map(|v| format!("{v:?}")).collect();
        let mut out = String::new();
        let _ = writeln!(out, "groups={}", self.groups);
        let _ = writeln!(out, "group_size={}", self.group_size);
        let _ = writeln!(out, "dims={}", self.dims);
        let _ = writeln!(out, "feature_noises={}", noises.join(","));
        let _ = writeln!(out, "seed={}", self.seed);
        if let Some(n) = self.n {
            let _ = writeln!(out, "n={n}");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub distances: Vec<FeatureMatrix<f64>>,
    pub truth: GroundTruth,
    pub group_of: Vec<usize>,
}

const CENTER_STREAM: u64 = 0;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn item_stream(seed: u64, feature: usize, item: usize) -> ChaCha8Rng {
    stream(seed, ((feature as u64 + 1) << 32) | item as u64)
}

pub fn group_centers(cfg: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = stream(cfg.seed, CENTER_STREAM);
    (0..cfg.groups)
        .map(|_| loop {
            let v: Vec<f64> = (0..cfg.dims).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// Item embeddings of one feature: centre plus isotropic Gaussian noise.
pub fn embeddings(cfg: &SynthConfig, centers: &[Vec<f64>], feature: usize) -> Vec<Vec<f64>> {
    let sigma = cfg.feature_noises[feature];
    (0..cfg.n())
        .map(|item| {
            let mut rng = item_stream(cfg.seed, feature, item);
            centers[item / cfg.group_size]
                .iter()
                .map(|&c| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    c + sigma * e
                })
                .collect()
        })
        .collect()
}

pub fn euclidean_distances(points: &[Vec<f64>], name: &str) -> FeatureMatrix<f64> {
    let n = points.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    FeatureMatrix::new(n, MatrixKind::Distance, values, name).expect("distances are finite")
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let centers = group_centers(cfg);
    let distances = (0..cfg.feature_noises.len())
        .map(|f| euclidean_distances(&embeddings(cfg, &centers, f), &format!("feature_{f}")))
        .collect();
    let group_of: Vec<usize> = (0..cfg.n()).map(|i| i / cfg.group_size).collect();
    let mut truth = GroundTruth::new();
    for (q, &g) in group_of.iter().enumerate() {
        truth.insert(q, g * cfg.group_size..(g + 1) * cfg.group_size);
    }
    Ok(SynthData {
        distances,
        truth,
        group_of,
    })
}
