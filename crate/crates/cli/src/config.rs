//! TOML run configuration, also accepted as the `config` member of a JSON
//! sidecar.

use crate::error::{CliError, CliResult};
use lindblad_cf::linalg::{CMatrix, C64};
use lindblad_cf::model::{build_kitaev, KitaevParams};
use lindblad_cf::QuadraticModel;
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub state: StateConfig,
    /// Sites of the counting subsystem or of the Green's function rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Sites>,
    /// Fixed column site `j` of `G_{lj}`; the chain center by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default)]
    pub correlator: CorrelatorKind,
    /// Evaluate the steady state instead of a time grid.
    #[serde(default)]
    pub steady: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub gamma_plus: f64,
    #[serde(default)]
    pub gamma_minus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_gamma_plus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_gamma_minus: Option<Vec<f64>>,
    /// Explicit `2N × 2N` single-particle matrix as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Vec<[f64; 2]>>>,
    /// Explicit dissipator vectors of length `2N` as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipators: Option<Vec<Vec<[f64; 2]>>>,
}

fn one() -> f64 {
    1.0
}

/// A grid given either as an explicit list or as `{ start, stop, step }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if *step <= 0.0 || stop < start {
                    return vec![];
                }
                let k = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=k).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Grid>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    #[default]
    Vacuum,
    Steady,
    /// `e^{−βĤ}` of the model Hamiltonian.
    Thermal { beta: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKind {
    #[default]
    Greater,
    Lesser,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Sites {
    List(Vec<usize>),
    Range { first: usize, last: usize },
}

impl Sites {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Sites::List(v) => v.clone(),
            Sites::Range { first, last } => (*first..=*last).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_oracle_tol")]
    pub oracle: f64,
    /// `|Im λ|` below which a rapidity counts as an edge mode, in units of `J`.
    #[serde(default = "default_edge_tol")]
    pub edge: f64,
}

fn default_oracle_tol() -> f64 {
    1e-7
}

fn default_edge_tol() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle: default_oracle_tol(),
            edge: default_edge_tol(),
        }
    }
}

/// First line of `source` assigning `key`, for error messages.
fn line_of(source: &str, key: &str) -> Option<usize> {
    source
        .lines()
        .position(|l| {
            let l = l.trim_start();
            l.starts_with(key) && l[key.len()..].trim_start().starts_with('=')
        })
        .map(|i| i + 1)
}

impl RunConfig {
    pub fn parse_toml(source: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(source).map_err(|e| {
            let line = e
                .span()
                .map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
            match line {
                Some(l) => CliError::Config(format!("line {l}: {}", e.message())),
                None => CliError::Config(e.message().to_string()),
            }
        })?;
        cfg.validate(Some(source))?;
        Ok(cfg)
    }

    /// Reads a TOML config, or a JSON sidecar holding one under `config`.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("line {}: {e}", e.line())))?;
            let inner = v.get("config").cloned().unwrap_or(v);
            let cfg: RunConfig = serde_json::from_value(inner)
                .map_err(|e| CliError::Config(format!("sidecar config: {e}")))?;
            cfg.validate(None)?;
            Ok(cfg)
        } else {
            Self::parse_toml(&text)
        }
    }

    pub fn validate(&self, source: Option<&str>) -> CliResult<()> {
        let at = |key: &str, msg: String| {
            let line = source.and_then(|s| line_of(s, key));
            CliError::Config(match line {
                Some(l) => format!("line {l}: {msg}"),
                None => msg,
            })
        };
        let n = self.model.n;
        if n == 0 {
            return Err(at("n", "model.n must be positive".into()));
        }
        for (name, g) in [("t", &self.grid.t), ("mu", &self.grid.mu), ("phi", &self.grid.phi)] {
            if let Some(g) = g {
                let v = g.values();
                if v.is_empty() {
                    return Err(at(name, format!("grid.{name} is empty")));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(at(name, format!("grid.{name} has non-finite entries")));
                }
            }
        }
        if let Some(s) = &self.sites {
            let v = s.values();
            if v.is_empty() {
                return Err(at("sites", "sites is empty".into()));
            }
            if let Some(bad) = v.iter().find(|&&x| x == 0 || x > n) {
                return Err(at("sites", format!("site {bad} outside 1..={n}")));
            }
        }
        if let Some(j) = self.j {
            if j == 0 || j > n {
                return Err(at("j", format!("site j = {j} outside 1..={n}")));
            }
        }
        if self.threads == Some(0) {
            return Err(at("threads", "threads must be positive".into()));
        }
        if self.model.dissipators.is_some() && self.model.h.is_none() {
            return Err(at("dissipators", "explicit dissipators need an explicit h".into()));
        }
        if self.model.h.is_some() && self.grid.mu.is_some() {
            return Err(at("mu", "a mu grid needs Kitaev parameters, not an explicit h".into()));
        }
        Ok(())
    }

    pub fn kitaev(&self, mu: Option<f64>) -> KitaevParams {
        let m = &self.model;
        let mut p = KitaevParams::new(m.n, m.j, m.delta, mu.unwrap_or(m.mu), m.gamma_plus, m.gamma_minus);
        p.site_gamma_plus = m.site_gamma_plus.clone();
        p.site_gamma_minus = m.site_gamma_minus.clone();
        p
    }

    /// The model, optionally at a different chemical potential.
    pub fn build(&self, mu: Option<f64>) -> lindblad_cf::Result<QuadraticModel> {
        match &self.model.h {
            Some(h) => {
                let d = 2 * self.model.n;
                if h.len() != d || h.iter().any(|r| r.len() != d) {
                    return Err(lindblad_cf::Error::InvalidParameter(format!(
                        "model.h must be {d}x{d}"
                    )));
                }
                let hm = CMatrix::from_shape_fn((d, d), |(a, b)| C64::new(h[a][b][0], h[a][b][1]));
                let ls = self
                    .model
                    .dissipators
                    .clone()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|v| Array1::from_iter(v.into_iter().map(|[re, im]| C64::new(re, im))))
                    .collect();
                QuadraticModel::new(hm, ls)
            }
            None => build_kitaev(&self.kitaev(mu)),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.t.as_ref().map(Grid::values).unwrap_or_else(|| vec![0.0])
    }

    pub fn mus(&self) -> Vec<f64> {
        self.grid.mu.as_ref().map(Grid::values).unwrap_or_else(|| vec![self.model.mu])
    }

    pub fn phis(&self) -> Vec<f64> {
        self.grid.phi.as_ref().map(Grid::values).unwrap_or_else(|| vec![0.0, PI])
    }

    pub fn sites_or(&self, default: Vec<usize>) -> Vec<usize> {
        self.sites.as_ref().map(Sites::values).unwrap_or(default)
    }

    pub fn column_site(&self) -> usize {
        self.j.unwrap_or(self.model.n.div_ceil(2))
    }
}
