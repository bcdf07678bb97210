//! Symbol laws, block-length law families and the exact stationary
//! quantities of the regenerative process built from them.
//!
//! The process writes an i.i.d. symbol `Z ~ p` repeated `ξ ~ q_Z` times and
//! concatenates the blocks. Every block start is a regeneration. With
//! `ν = Σ_a p_a E(q_a)` finite, the stationary one-letter marginal is the
//! length-biased law `μ(a) = p_a E(q_a) / ν`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Alphabet letter. The alphabet is the positive integers.
pub type Symbol = u32;

/// Absolute tolerance for probability comparisons.
pub const PROB_TOL: f64 = 1e-12;

/// Sums non-negative terms smallest first.
pub(crate) fn sum_ascending(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    terms.into_iter().sum()
}

/// A finite probability table on positive-integer symbols, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteTable {
    symbols: Vec<Symbol>,
    probs: Vec<f64>,
}

impl FiniteTable {
    /// Builds a table from `(symbol, probability)` pairs. Zero entries are
    /// dropped; duplicates, symbol 0 and a total mass off by more than
    /// [`PROB_TOL`] are rejected.
    pub fn new<I: IntoIterator<Item = (Symbol, f64)>>(pairs: I) -> Result<Self> {
        let mut entries: Vec<(Symbol, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(s, _)| s);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidModel(format!("duplicate symbol {}", w[0].0)));
            }
        }
        for &(s, p) in &entries {
            if s == 0 {
                return Err(Error::InvalidModel("symbols must be positive integers".into()));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidModel(format!("probability of symbol {s} is {p}")));
            }
        }
        let total = sum_ascending(entries.iter().map(|e| e.1).collect());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidModel(format!("symbol probabilities sum to {total}")));
        }
        entries.retain(|&(_, p)| p > 0.0);
        let (symbols, probs) = entries.into_iter().unzip();
        Ok(Self { symbols, probs })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.symbols.iter().copied().zip(self.probs.iter().copied())
    }

    fn prob(&self, a: Symbol) -> f64 {
        self.symbols.binary_search(&a).map(|i| self.probs[i]).unwrap_or(0.0)
    }
}

/// Law `p` of the symbol drawn at each regeneration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SymbolLaw {
    FiniteTable(FiniteTable),
    /// `p_a = (1 − ρ) ρ^(a−1)` for `a ≥ 1`.
    Geometric { ratio: f64 },
}

impl SymbolLaw {
    /// Table on symbols `1..=probs.len()`.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        FiniteTable::new(probs.iter().enumerate().map(|(i, &p)| (i as Symbol + 1, p)))
            .map(SymbolLaw::FiniteTable)
    }

    pub fn table<I: IntoIterator<Item = (Symbol, f64)>>(pairs: I) -> Result<Self> {
        FiniteTable::new(pairs).map(SymbolLaw::FiniteTable)
    }

    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidModel(format!("geometric ratio {ratio} outside (0, 1)")));
        }
        Ok(SymbolLaw::Geometric { ratio })
    }

    /// Truncated power law `p_a ∝ a^(−exponent)` on `1..=max_symbol`.
    pub fn power_law(exponent: f64, max_symbol: Symbol) -> Result<Self> {
        if max_symbol == 0 || !exponent.is_finite() {
            return Err(Error::InvalidModel("power law needs max_symbol >= 1 and a finite exponent".into()));
        }
        let weights: Vec<f64> = (1..=max_symbol).map(|a| (a as f64).powf(-exponent)).collect();
        let total = sum_ascending(weights.clone());
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Self::from_probabilities(&probs)
    }

    /// Restricts the law to `1..=max_symbol` and renormalizes. Returns the
    /// new law and the probability mass that was dropped.
    pub fn truncate(&self, max_symbol: Symbol) -> Result<(SymbolLaw, f64)> {
        let kept: Vec<(Symbol, f64)> = match self {
            SymbolLaw::FiniteTable(t) => t.iter().filter(|&(s, _)| s <= max_symbol).collect(),
            SymbolLaw::Geometric { .. } => (1..=max_symbol).map(|a| (a, self.prob(a))).collect(),
        };
        let dropped = self.tail(max_symbol);
        let mass = 1.0 - dropped;
        if kept.is_empty() || mass <= 0.0 {
            return Err(Error::InvalidModel(format!("truncation at {max_symbol} keeps no mass")));
        }
        let renormalized: Vec<(Symbol, f64)> = kept.into_iter().map(|(s, p)| (s, p / mass)).collect();
        let total = sum_ascending(renormalized.iter().map(|e| e.1).collect());
        let fixed = renormalized.into_iter().map(|(s, p)| (s, p / total));
        Ok((SymbolLaw::table(fixed)?, dropped))
    }

    pub fn prob(&self, a: Symbol) -> f64 {
        match self {
            SymbolLaw::FiniteTable(t) => t.prob(a),
            SymbolLaw::Geometric { ratio } => {
                if a == 0 {
                    0.0
                } else {
                    (1.0 - ratio) * ratio.powi(a as i32 - 1)
                }
            }
        }
    }

    /// `e_a = Σ_{j>a} p_j`.
    pub fn tail(&self, a: Symbol) -> f64 {
        self.tail_moment(a, 0)
    }

    /// `Σ_{j≤a} p_j`, computed without cancellation.
    pub fn head(&self, a: Symbol) -> f64 {
        match self {
            SymbolLaw::FiniteTable(t) => {
                sum_ascending(t.iter().filter(|&(s, _)| s <= a).map(|(_, p)| p).collect())
            }
            SymbolLaw::Geometric { ratio } => -(a as f64 * ratio.ln()).exp_m1(),
        }
    }

    /// `Σ_{j>a} j^k p_j` for `k ∈ {0, 1, 2}`.
    pub fn tail_moment(&self, a: Symbol, k: u32) -> f64 {
        assert!(k <= 2, "only moments up to order 2 are provided");
        match self {
            SymbolLaw::FiniteTable(t) => sum_ascending(
                t.iter()
                    .filter(|&(s, _)| s > a)
                    .map(|(s, p)| (s as f64).powi(k as i32) * p)
                    .collect(),
            ),
            SymbolLaw::Geometric { ratio } => {
                let rho = *ratio;
                let base = (a as f64 * rho.ln()).exp();
                let a = a as f64;
                let inv = 1.0 / (1.0 - rho);
                match k {
                    0 => base,
                    1 => base * (a + inv),
                    _ => base * (a * a + 2.0 * a * inv + (1.0 + rho) * inv * inv),
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SymbolLaw::FiniteTable(_))
    }

    /// Support of a finite table; `None` for infinite laws.
    pub fn support(&self) -> Option<&[Symbol]> {
        match self {
            SymbolLaw::FiniteTable(t) => Some(t.symbols()),
            SymbolLaw::Geometric { .. } => None,
        }
    }

    pub fn max_symbol(&self) -> Option<Symbol> {
        self.support().and_then(|s| s.last().copied())
    }
}

/// Finite probability mass function on block lengths, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthPmf {
    entries: Vec<(u32, f64)>,
}

impl LengthPmf {
    pub fn new<I: IntoIterator<Item = (u32, f64)>>(pairs: I) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(k, _)| k);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidModel(format!("duplicate block length {}", w[0].0)));
            }
        }
        for &(k, p) in &entries {
            if k == 0 || !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidModel(format!("bad block-length entry ({k}, {p})")));
            }
        }
        let total = sum_ascending(entries.iter().map(|e| e.1).collect());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidModel(format!("block-length pmf sums to {total}")));
        }
        entries.retain(|&(_, p)| p > 0.0);
        Ok(Self { entries })
    }

    pub fn point(k: u32) -> Self {
        Self { entries: vec![(k, 1.0)] }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn prob(&self, k: u32) -> f64 {
        self.entries.iter().find(|e| e.0 == k).map_or(0.0, |e| e.1)
    }

    /// `P(ξ > k)`.
    pub fn tail(&self, k: u32) -> f64 {
        sum_ascending(self.entries.iter().filter(|e| e.0 > k).map(|e| e.1).collect())
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|&(k, p)| k as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.entries.iter().map(|&(k, p)| (k as f64).powi(2) * p).sum()
    }

    pub fn max_length(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.0)
    }
}

/// The family `(q_a)` of block-length laws, one per symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockLawFamily {
    /// `q_a = δ_1`: the i.i.d. process.
    Iid,
    /// `q_a(1) = (a−1)/a`, `q_a(a+1) = 1/a`.
    Smith,
    /// `q_a = δ_a`.
    Block,
    /// Explicit finite pmf per symbol.
    Table(BTreeMap<Symbol, LengthPmf>),
}

impl BlockLawFamily {
    /// `q_a`, or `None` when a table family has no entry for `a`.
    pub fn length_pmf(&self, a: Symbol) -> Option<LengthPmf> {
        match self {
            BlockLawFamily::Iid => Some(LengthPmf::point(1)),
            BlockLawFamily::Block => Some(LengthPmf::point(a)),
            BlockLawFamily::Smith => {
                if a == 1 {
                    Some(LengthPmf::point(2))
                } else {
                    let af = a as f64;
                    Some(LengthPmf { entries: vec![(1, (af - 1.0) / af), (a + 1, 1.0 / af)] })
                }
            }
            BlockLawFamily::Table(map) => map.get(&a).cloned(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlockLawFamily::Iid => "iid",
            BlockLawFamily::Smith => "smith",
            BlockLawFamily::Block => "block",
            BlockLawFamily::Table(_) => "table",
        }
    }
}

/// Full process definition: symbol law plus block-length family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    symbol_law: SymbolLaw,
    block_family: BlockLawFamily,
    nu: f64,
}

impl ModelSpec {
    pub fn new(symbol_law: SymbolLaw, block_family: BlockLawFamily) -> Result<Self> {
        if let BlockLawFamily::Table(map) = &block_family {
            let Some(support) = symbol_law.support() else {
                return Err(Error::InvalidModel(
                    "a table block family needs a finite symbol law".into(),
                ));
            };
            if let Some(missing) = support.iter().find(|s| !map.contains_key(s)) {
                return Err(Error::InvalidModel(format!("no block-length law for symbol {missing}")));
            }
        }
        let mut model = Self { symbol_law, block_family, nu: f64::NAN };
        let nu = model.tail_block_mean(0);
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::DivergentMean);
        }
        model.nu = nu;
        Ok(model)
    }

    pub fn smith(symbol_law: SymbolLaw) -> Result<Self> {
        Self::new(symbol_law, BlockLawFamily::Smith)
    }

    pub fn block(symbol_law: SymbolLaw) -> Result<Self> {
        Self::new(symbol_law, BlockLawFamily::Block)
    }

    pub fn iid(symbol_law: SymbolLaw) -> Result<Self> {
        Self::new(symbol_law, BlockLawFamily::Iid)
    }

    pub fn symbol_law(&self) -> &SymbolLaw {
        &self.symbol_law
    }

    pub fn block_family(&self) -> &BlockLawFamily {
        &self.block_family
    }

    /// Mean block length `ν = Σ_a p_a E(q_a)`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Stationary probability of a regeneration at a fixed time, `1/ν`.
    pub fn regen_prob(&self) -> f64 {
        1.0 / self.nu
    }

    pub fn p(&self, a: Symbol) -> f64 {
        self.symbol_law.prob(a)
    }

    /// Block-length law of symbol `a`. Symbols outside a table family's
    /// support get the point mass at 1 (they carry zero probability).
    pub fn block_pmf(&self, a: Symbol) -> LengthPmf {
        self.block_family.length_pmf(a).unwrap_or_else(|| LengthPmf::point(1))
    }

    pub fn block_mean(&self, a: Symbol) -> f64 {
        match self.block_family {
            BlockLawFamily::Iid => 1.0,
            BlockLawFamily::Smith => 2.0,
            BlockLawFamily::Block => a as f64,
            BlockLawFamily::Table(_) => self.block_pmf(a).mean(),
        }
    }

    pub fn block_second_moment(&self, a: Symbol) -> f64 {
        match self.block_family {
            BlockLawFamily::Iid => 1.0,
            BlockLawFamily::Smith => a as f64 + 3.0,
            BlockLawFamily::Block => (a as f64).powi(2),
            BlockLawFamily::Table(_) => self.block_pmf(a).second_moment(),
        }
    }

    /// `μ(a) = p_a E(q_a) / ν`.
    pub fn stationary_marginal(&self, a: Symbol) -> f64 {
        self.p(a) * self.block_mean(a) / self.nu
    }

    /// `e_a = Σ_{j>a} p_j`.
    pub fn tail_e(&self, a: Symbol) -> f64 {
        self.symbol_law.tail(a)
    }

    /// `1 − e_a`.
    pub fn head_e(&self, a: Symbol) -> f64 {
        self.symbol_law.head(a)
    }

    /// `g_a = P(X_0 > a) = Σ_{j>a} μ(j)`.
    pub fn tail_g(&self, a: Symbol) -> f64 {
        self.tail_block_mean(a) / self.nu
    }

    /// `m_a = Σ_{j>a} p_j E(q_j)`; `m_0 = ν`.
    pub fn tail_block_mean(&self, a: Symbol) -> f64 {
        let law = &self.symbol_law;
        match &self.block_family {
            BlockLawFamily::Iid => law.tail_moment(a, 0),
            BlockLawFamily::Smith => 2.0 * law.tail_moment(a, 0),
            BlockLawFamily::Block => law.tail_moment(a, 1),
            BlockLawFamily::Table(_) => self.finite_tail_sum(a, |m, j| m.block_mean(j)),
        }
    }

    /// `m2_a = Σ_{j>a} p_j E(q_j²)`.
    pub fn tail_block_second_moment(&self, a: Symbol) -> f64 {
        let law = &self.symbol_law;
        match &self.block_family {
            BlockLawFamily::Iid => law.tail_moment(a, 0),
            BlockLawFamily::Smith => law.tail_moment(a, 1) + 3.0 * law.tail_moment(a, 0),
            BlockLawFamily::Block => law.tail_moment(a, 2),
            BlockLawFamily::Table(_) => self.finite_tail_sum(a, |m, j| m.block_second_moment(j)),
        }
    }

    fn finite_tail_sum(&self, a: Symbol, weight: impl Fn(&Self, Symbol) -> f64) -> f64 {
        let support = self.symbol_law.support().expect("table families have finite support");
        sum_ascending(
            support
                .iter()
                .filter(|&&j| j > a)
                .map(|&j| self.p(j) * weight(self, j))
                .collect(),
        )
    }

    pub fn is_finite_support(&self) -> bool {
        self.symbol_law.is_finite()
    }

    pub fn support(&self) -> Option<&[Symbol]> {
        self.symbol_law.support()
    }

    pub fn max_symbol(&self) -> Option<Symbol> {
        self.symbol_law.max_symbol()
    }

    /// Largest block length any symbol satisfying `pred` can produce
    /// (finite-support models only).
    pub fn max_block_length_where(&self, pred: impl Fn(Symbol) -> bool) -> Option<u32> {
        let support = self.support()?;
        support.iter().filter(|&&s| pred(s)).map(|&s| self.block_pmf(s).max_length()).max()
    }

    pub fn require_finite(&self, what: &str) -> Result<&[Symbol]> {
        self.support().ok_or_else(|| {
            Error::InvalidModel(format!("{what} needs a finite-support symbol law; truncate it first"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(p: &[f64]) -> SymbolLaw {
        SymbolLaw::from_probabilities(p).unwrap()
    }

    #[test]
    fn nu_per_family() {
        let law = table(&[0.5, 0.3, 0.2]);
        assert_abs_diff_eq!(ModelSpec::smith(law.clone()).unwrap().nu(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ModelSpec::iid(law.clone()).unwrap().nu(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ModelSpec::block(law).unwrap().nu(), 1.7, epsilon = 1e-15);
        let geo = SymbolLaw::geometric(0.5).unwrap();
        assert_abs_diff_eq!(ModelSpec::smith(geo.clone()).unwrap().nu(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ModelSpec::block(geo).unwrap().nu(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn marginal_and_tails() {
        let m = ModelSpec::block(table(&[0.5, 0.3, 0.2])).unwrap();
        assert_abs_diff_eq!(m.stationary_marginal(2), 0.6 / 1.7, epsilon = 1e-15);
        assert_abs_diff_eq!(m.tail_g(1), 1.2 / 1.7, epsilon = 1e-15);
        assert_abs_diff_eq!(m.tail_e(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.tail_g(0), 1.0, epsilon = 1e-15);
        let g = ModelSpec::smith(SymbolLaw::geometric(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(g.tail_e(2), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.head_e(2), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn regeneration_probability() {
        let morse = ModelSpec::block(table(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(morse.regen_prob(), 2.0 / 3.0, epsilon = 1e-15);
        let smith = ModelSpec::smith(table(&[0.2, 0.8])).unwrap();
        assert_abs_diff_eq!(smith.regen_prob(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn geometric_partial_moments_match_truncated_sums() {
        let rho = 0.7;
        let law = SymbolLaw::geometric(rho).unwrap();
        for a in [0, 1, 3, 9] {
            for k in 0..=2 {
                let brute: f64 = (a + 1..2000)
                    .map(|j| (j as f64).powi(k as i32) * law.prob(j))
                    .sum();
                assert_abs_diff_eq!(law.tail_moment(a, k), brute, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn smith_second_moment_is_j_plus_three() {
        for a in 1..10 {
            let pmf = BlockLawFamily::Smith.length_pmf(a).unwrap();
            assert_abs_diff_eq!(pmf.second_moment(), a as f64 + 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(pmf.mean(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SymbolLaw::from_probabilities(&[0.5, 0.4]).is_err());
        assert!(SymbolLaw::table([(0, 1.0)]).is_err());
        assert!(SymbolLaw::geometric(1.0).is_err());
        let geo = SymbolLaw::geometric(0.5).unwrap();
        assert!(ModelSpec::new(geo, BlockLawFamily::Table(BTreeMap::new())).is_err());
        let law = table(&[0.5, 0.5]);
        let partial = BTreeMap::from([(1, LengthPmf::point(1))]);
        assert!(ModelSpec::new(law, BlockLawFamily::Table(partial)).is_err());
    }

    #[test]
    fn truncation_reports_dropped_mass() {
        let geo = SymbolLaw::geometric(0.5).unwrap();
        let (t, dropped) = geo.truncate(8).unwrap();
        assert_abs_diff_eq!(dropped, 0.5f64.powi(8), epsilon = 1e-15);
        assert_eq!(t.max_symbol(), Some(8));
        assert_abs_diff_eq!(t.tail(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_entries_leave_the_support() {
        let law = table(&[0.0, 0.0, 1.0]);
        assert_eq!(law.support().unwrap(), &[3]);
    }
}
