use serde::Serialize;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Coframe model used by the mass subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Flat,
    /// `u = 1 + Aρ^{-2n}`
    Conformal,
    /// `u = 1 + Aρ^{-2n} + ½Aρ^{-2n-1}`
    Tail,
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Model, String> {
        match s {
            "flat" => Ok(Model::Flat),
            "conformal" => Ok(Model::Conformal),
            "tail" => Ok(Model::Tail),
            _ => Err(format!("unknown model `{}` (expected flat, conformal or tail)", s)),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Model::Flat => "flat",
            Model::Conformal => "conformal",
            Model::Tail => "tail",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Format, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{}` (expected csv or json)", s)),
        }
    }
}

/// Parameters shared by every suite. `None` means the suite default.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub n: Option<usize>,
    pub betas: Option<Vec<f64>>,
    pub lambdas: Option<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Option<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: f64,
    /// Replaces the primary tolerance of the suite.
    pub tol: Option<f64>,
    pub seed: u64,
    pub model: Model,
    pub max_n: usize,
}

impl Default for Config {
    fn default() -> Config {
        Config { n: None, betas: None, lambdas: None, a: None, r: 4.0, tol: None, seed: DEFAULT_SEED, model: Model::Conformal, max_n: 8 }
    }
}

impl Config {
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn ranks_or(&self, default: &[usize]) -> Vec<usize> {
        self.n.map_or_else(|| default.to_vec(), |n| vec![n])
    }

    pub fn rank_or(&self, default: usize) -> usize {
        self.n.unwrap_or(default)
    }

    pub fn a_values_or(&self, default: &[f64]) -> Vec<f64> {
        self.a.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn lambdas_or(&self, default: &[f64]) -> Vec<f64> {
        self.lambdas.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn betas_or(&self, default: &[f64]) -> Vec<f64> {
        self.betas.clone().unwrap_or_else(|| default.to_vec())
    }
}

/// Accepts decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let r = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => t.parse::<u64>(),
    };
    r.map_err(|e| format!("invalid seed `{}`: {}", s, e))
}
