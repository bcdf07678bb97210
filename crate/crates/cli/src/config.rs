//! Flat TOML experiment configuration.
//!
//! Every key is optional at parse time; each command checks the keys it
//! needs. Unknown keys and malformed values are parse errors, values that
//! violate a model or estimator precondition are precondition errors.

use std::collections::BTreeMap;
use std::path::Path;

use regen_core::montecarlo::{HittingMethod, DEFAULT_CAP};
use regen_core::oracle::DEFAULT_BUDGET;
use regen_core::{BlockLawFamily, LengthPmf, ModelSpec, Symbol, SymbolLaw};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Smith,
    Block,
    Iid,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Geometric,
    Probabilities,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Stationary,
    Regeneration,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Option<Family>,
    pub symbol_law: Option<LawKind>,
    /// Geometric law `p_j = (1 − ratio) ratio^{j−1}`.
    pub ratio: Option<f64>,
    /// `p_1, p_2, …` for the `probabilities` law.
    pub probabilities: Option<Vec<f64>>,
    /// `p_j ∝ j^{−power_exponent}` on `1..=power_max`.
    pub power_exponent: Option<f64>,
    pub power_max: Option<Symbol>,
    /// Cut the symbol law at this symbol and renormalize.
    pub truncate: Option<Symbol>,
    /// `"sym:len=prob,len=prob;sym:…"`, for `family = "table"`.
    pub block_table: Option<String>,

    pub levels: Option<Vec<Symbol>>,
    pub q_values: Option<Vec<u32>>,
    pub cylinder_symbol: Option<Symbol>,
    pub cylinder_lengths: Option<Vec<u32>>,
    pub lags: Option<usize>,

    pub horizon: Option<usize>,
    pub start: Option<Start>,
    pub samples: Option<u64>,
    pub replicas: Option<u64>,
    pub hitting_method: Option<HittingMethod>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub out: Option<String>,

    pub oracle_budget: Option<u64>,
    pub k_max: Option<usize>,
    pub cap: Option<u64>,
    pub step_cap: Option<u64>,
    pub tolerance: Option<f64>,
}

pub const DEFAULT_K_MAX: usize = 200;
pub const DEFAULT_STEP_CAP: u64 = 1 << 40;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Precondition(msg));
        if let Some(levels) = &self.levels {
            if levels.is_empty() || levels.contains(&0) {
                return bad("levels must be a non-empty list of positive symbols".into());
            }
        }
        if let Some(qs) = &self.q_values {
            if qs.is_empty() || qs.contains(&0) {
                return bad("q_values must be a non-empty list of positive integers".into());
            }
        }
        if let Some(ns) = &self.cylinder_lengths {
            if ns.is_empty() || ns.contains(&0) {
                return bad("cylinder_lengths must be a non-empty list of positive integers".into());
            }
        }
        if self.cylinder_symbol == Some(0) {
            return bad("cylinder_symbol must be positive".into());
        }
        for (key, v) in [("samples", self.samples), ("replicas", self.replicas)] {
            if let Some(v) = v {
                if v != 0 && v < regen_core::montecarlo::BATCHES {
                    return bad(format!("{key} must be 0 or at least {}", regen_core::montecarlo::BATCHES));
                }
            }
        }
        if self.cap == Some(0) || self.k_max == Some(0) || self.step_cap == Some(0) {
            return bad("cap, k_max and step_cap must be positive".into());
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tolerance must be positive".into());
            }
        }
        if self.family.is_some() {
            self.model()?;
        }
        Ok(())
    }

    fn symbol_law_value(&self) -> CliResult<SymbolLaw> {
        let kind = self.symbol_law.ok_or_else(|| CliError::Precondition("missing key symbol_law".into()))?;
        let law = match kind {
            LawKind::Geometric => SymbolLaw::geometric(need(self.ratio, "ratio")?)?,
            LawKind::Probabilities => SymbolLaw::from_probabilities(self.probabilities.as_deref().unwrap_or_default())?,
            LawKind::Power => SymbolLaw::power_law(need(self.power_exponent, "power_exponent")?, need(self.power_max, "power_max")?)?,
        };
        match self.truncate {
            Some(max) => Ok(law.truncate(max)?.0),
            None => Ok(law),
        }
    }

    /// Mass removed by `truncate`, 0 without truncation.
    pub fn truncated_mass(&self) -> CliResult<f64> {
        match self.truncate {
            Some(max) => {
                let mut cfg = self.clone();
                cfg.truncate = None;
                Ok(cfg.symbol_law_value()?.truncate(max)?.1)
            }
            None => Ok(0.0),
        }
    }

    pub fn model(&self) -> CliResult<ModelSpec> {
        let family = self.family.ok_or_else(|| CliError::Precondition("missing key family".into()))?;
        let law = self.symbol_law_value()?;
        let model = match family {
            Family::Smith => ModelSpec::smith(law)?,
            Family::Block => ModelSpec::block(law)?,
            Family::Iid => ModelSpec::iid(law)?,
            Family::Table => {
                let text = need(self.block_table.as_deref(), "block_table")?;
                ModelSpec::new(law, BlockLawFamily::Table(parse_block_table(text)?))?
            }
        };
        Ok(model)
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn oracle_budget(&self) -> u64 {
        self.oracle_budget.unwrap_or(DEFAULT_BUDGET)
    }

    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or(DEFAULT_K_MAX)
    }

    pub fn cap(&self) -> u64 {
        self.cap.unwrap_or(DEFAULT_CAP)
    }

    pub fn step_cap(&self) -> u64 {
        self.step_cap.unwrap_or(DEFAULT_STEP_CAP)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }
}

pub fn need<T>(v: Option<T>, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Precondition(format!("missing key {key}")))
}

/// Parses `"1:1=0.5,2=0.5;3:4=1"` into per-symbol length laws.
pub fn parse_block_table(text: &str) -> CliResult<BTreeMap<Symbol, LengthPmf>> {
    let perr = |msg: String| CliError::Parse(format!("block_table: {msg}"));
    let mut map = BTreeMap::new();
    for entry in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (sym, law) = entry.split_once(':').ok_or_else(|| perr(format!("expected `symbol:…` in {entry:?}")))?;
        let sym: Symbol = sym.trim().parse().map_err(|_| perr(format!("bad symbol {sym:?}")))?;
        let mut pairs = Vec::new();
        for pair in law.split(',').map(str::trim) {
            let (len, prob) = pair.split_once('=').ok_or_else(|| perr(format!("expected `len=prob` in {pair:?}")))?;
            let len: u32 = len.trim().parse().map_err(|_| perr(format!("bad length {len:?}")))?;
            let prob: f64 = prob.trim().parse().map_err(|_| perr(format!("bad probability {prob:?}")))?;
            pairs.push((len, prob));
        }
        if map.insert(sym, LengthPmf::new(pairs)?).is_some() {
            return Err(perr(format!("symbol {sym} listed twice")));
        }
    }
    Ok(map)
}
