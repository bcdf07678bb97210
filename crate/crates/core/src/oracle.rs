//! Exact probabilities of finite-window events.
//!
//! The main route is a forward transfer over the block state `(symbol,
//! residual length, block-start flag)`, started from the stationary law of the
//! block covering the first constrained time. It sums over every block tiling
//! of the window at once, so results are exact up to floating-point rounding;
//! the rounding is folded into the returned bounds. [`enumerate_tilings`] is a
//! literal depth-first enumeration of tilings kept as an independent check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::Observable;
use crate::model::{ModelSpec, Symbol};

/// Default work budget, in state updates.
pub const DEFAULT_BUDGET: u64 = 2_000_000_000;

/// Pruning threshold of the depth-first enumerator.
pub const PRUNE_BELOW: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityBounds {
    pub lower: f64,
    pub upper: f64,
    /// Mass of the probability space that was fully accounted for.
    pub enumerated_mass: f64,
}

impl ProbabilityBounds {
    pub fn point(p: f64) -> Self {
        Self { lower: p, upper: p, enumerated_mass: 1.0 }
    }

    fn from_interval(lower: f64, upper: f64) -> Self {
        let lower = lower.clamp(0.0, 1.0);
        let upper = upper.clamp(lower, 1.0);
        Self { lower, upper, enumerated_mass: 1.0 - (upper - lower) }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }

    /// Bounds on `self / given` for nested events.
    fn ratio(self, given: ProbabilityBounds) -> Option<Self> {
        if given.upper <= 0.0 {
            return None;
        }
        let lower = if given.upper > 0.0 { self.lower / given.upper } else { 0.0 };
        let upper = if given.lower > 0.0 { self.upper / given.lower } else { 1.0 };
        Some(Self::from_interval(lower, upper))
    }
}

/// Bounds on an unbounded nonnegative quantity such as a moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ValueBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolConstraint {
    Any,
    Eq(Symbol),
    Ne(Symbol),
    Gt(Symbol),
    Le(Symbol),
}

impl SymbolConstraint {
    pub fn admits(&self, x: Symbol) -> bool {
        match *self {
            SymbolConstraint::Any => true,
            SymbolConstraint::Eq(a) => x == a,
            SymbolConstraint::Ne(a) => x != a,
            SymbolConstraint::Gt(a) => x > a,
            SymbolConstraint::Le(a) => x <= a,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Site {
    symbols: Vec<SymbolConstraint>,
    regeneration: Option<bool>,
    contradictory: bool,
}

impl Site {
    fn admits(&self, x: Symbol, start: bool) -> bool {
        !self.contradictory
            && self.regeneration.is_none_or(|r| r == start)
            && self.symbols.iter().all(|c| c.admits(x))
    }

    fn merge(&mut self, other: &Site) {
        self.symbols.extend_from_slice(&other.symbols);
        self.contradictory |= other.contradictory;
        if let Some(r) = other.regeneration {
            match self.regeneration {
                Some(mine) if mine != r => self.contradictory = true,
                _ => self.regeneration = Some(r),
            }
        }
    }
}

/// "No occurrence of `symbol` repeated `length` times starting at any time
/// in `[first_start, last_start]`."
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunExclusion {
    pub symbol: Symbol,
    pub length: u32,
    pub first_start: i64,
    pub last_start: i64,
}

/// Conjunction of per-time constraints on symbols and regeneration
/// indicators, with an optional run exclusion and an optional conditioning
/// event of the same form. The window is the span of constrained times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowEvent {
    sites: BTreeMap<i64, Site>,
    exclusions: Vec<RunExclusion>,
    given: Option<Box<WindowEvent>>,
}

impl WindowEvent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn symbol(mut self, t: i64, c: SymbolConstraint) -> Self {
        self.sites.entry(t).or_default().symbols.push(c);
        self
    }

    /// The same constraint at every time in `[from, to]`.
    pub fn symbols(mut self, from: i64, to: i64, c: SymbolConstraint) -> Self {
        for t in from..=to {
            self = self.symbol(t, c);
        }
        self
    }

    pub fn regeneration(mut self, t: i64, value: bool) -> Self {
        let site = Site { regeneration: Some(value), ..Site::default() };
        self.sites.entry(t).or_default().merge(&site);
        self
    }

    pub fn exclude_run(mut self, symbol: Symbol, length: u32, first_start: i64, last_start: i64) -> Self {
        self.exclusions.push(RunExclusion { symbol, length, first_start, last_start });
        self
    }

    pub fn given(mut self, condition: WindowEvent) -> Self {
        self.given = Some(Box::new(condition));
        self
    }

    /// Conjunction of the unconditional parts.
    pub fn and(mut self, other: &WindowEvent) -> Self {
        for (t, site) in &other.sites {
            self.sites.entry(*t).or_default().merge(site);
        }
        self.exclusions.extend_from_slice(&other.exclusions);
        self
    }

    fn unconditional(&self) -> WindowEvent {
        WindowEvent { sites: self.sites.clone(), exclusions: self.exclusions.clone(), given: None }
    }

    pub fn condition(&self) -> Option<&WindowEvent> {
        self.given.as_deref()
    }

    /// Constrained time span `[−L, H]`, if any.
    pub fn window(&self) -> Option<(i64, i64)> {
        let mut lo = self.sites.keys().next().copied();
        let mut hi = self.sites.keys().next_back().copied();
        for e in &self.exclusions {
            let end = e.last_start + e.length as i64 - 1;
            lo = Some(lo.map_or(e.first_start, |l| l.min(e.first_start)));
            hi = Some(hi.map_or(end, |h| h.max(end)));
        }
        lo.zip(hi)
    }
}

/// Block structure of a finite-support model laid out for the transfer.
struct Layout {
    symbols: Vec<Symbol>,
    probs: Vec<f64>,
    pmfs: Vec<Vec<(u32, f64)>>,
    base: Vec<usize>,
    core_states: usize,
    nu: f64,
}

impl Layout {
    fn new(model: &ModelSpec) -> Result<Self> {
        let support = model.require_finite("the exact oracle")?;
        let symbols = support.to_vec();
        let probs: Vec<f64> = symbols.iter().map(|&a| model.p(a)).collect();
        let pmfs: Vec<Vec<(u32, f64)>> =
            symbols.iter().map(|&a| model.block_pmf(a).entries().to_vec()).collect();
        let mut base = Vec::with_capacity(symbols.len());
        let mut core_states = 0;
        for pmf in &pmfs {
            base.push(core_states);
            core_states += 2 * pmf.last().map_or(1, |e| e.0) as usize;
        }
        Ok(Self { symbols, probs, pmfs, base, core_states, nu: model.nu() })
    }

    fn max_len(&self, i: usize) -> u32 {
        self.pmfs[i].last().map_or(1, |e| e.0)
    }
}

/// Mass of an event after each step of the transfer, with the rounding
/// allowance for that step.
struct TransferRun {
    masses: Vec<f64>,
    states: usize,
    work: u64,
}

impl TransferRun {
    fn bounds_at(&self, i: usize) -> ProbabilityBounds {
        let m = self.masses[i];
        if self.work == 0 {
            return ProbabilityBounds::point(m);
        }
        let rel = (i as f64 + 2.0) * (self.states as f64 + 4.0) * f64::EPSILON;
        ProbabilityBounds::from_interval(m * (1.0 - rel), m * (1.0 + rel))
    }

    fn last(&self) -> ProbabilityBounds {
        self.bounds_at(self.masses.len() - 1)
    }
}

/// Runs the forward transfer over `[t0, t1 + extension.len()]`; the sites of
/// `extension` continue the window one time step each after `t1`.
fn transfer(
    layout: &Layout,
    event: &WindowEvent,
    extension: &[SymbolConstraint],
    budget: u64,
) -> Result<TransferRun> {
    if event.exclusions.len() > 1 {
        return Err(Error::InvalidArgument("at most one run exclusion per event".into()));
    }
    let Some((t0, t1)) = event.window() else {
        return Ok(TransferRun { masses: vec![1.0], states: 1, work: 0 });
    };
    let excl = event.exclusions.first().copied();
    let run_cap = excl.map_or(0, |e| e.length as usize);
    let depth = run_cap + 1;
    let n_states = layout.core_states * depth;
    let idx = |i: usize, r: u32, s: usize, c: usize| ((layout.base[i] + 2 * (r as usize - 1) + s) * depth) + c;
    let advance = |c: usize, sym: Symbol, t: i64| match excl {
        Some(e) if t >= e.first_start && sym == e.symbol => (c + 1).min(run_cap),
        _ => 0,
    };
    let killed = |c: usize, t: i64| match excl {
        Some(e) => {
            let n = e.length as i64;
            c >= run_cap && t >= e.first_start + n - 1 && t < e.last_start + n
        }
        None => false,
    };
    let ext_site = |k: usize| Site { symbols: vec![extension[k]], ..Site::default() };
    let site_at = |t: i64| -> Option<Site> {
        if t > t1 {
            Some(ext_site((t - t1 - 1) as usize))
        } else {
            event.sites.get(&t).cloned()
        }
    };
    let constrain = |v: &mut [f64], t: i64| {
        let site = site_at(t);
        for (i, &sym) in layout.symbols.iter().enumerate() {
            for r in 1..=layout.max_len(i) {
                for s in 0..2 {
                    for c in 0..depth {
                        let j = idx(i, r, s, c);
                        if v[j] == 0.0 {
                            continue;
                        }
                        let ok = site.as_ref().is_none_or(|st| st.admits(sym, s == 1)) && !killed(c, t);
                        if !ok {
                            v[j] = 0.0;
                        }
                    }
                }
            }
        }
    };

    let mut cur = vec![0.0; n_states];
    for (i, pmf) in layout.pmfs.iter().enumerate() {
        let sym = layout.symbols[i];
        let c = advance(0, sym, t0);
        let mut longer = 0.0;
        for &(k, q) in pmf.iter().rev() {
            // start of a block of length k, or inside a longer one with k left
            cur[idx(i, k, 1, c)] += layout.probs[i] * q / layout.nu;
            cur[idx(i, k, 0, c)] += layout.probs[i] * longer / layout.nu;
            longer += q;
        }
        // residuals strictly between support points
        let mut tail = 0.0;
        let mut next_support = pmf.len();
        for r in (1..=layout.max_len(i)).rev() {
            while next_support > 0 && pmf[next_support - 1].0 > r {
                next_support -= 1;
                tail += pmf[next_support].1;
            }
            if pmf.binary_search_by_key(&r, |e| e.0).is_err() {
                cur[idx(i, r, 0, c)] = layout.probs[i] * tail / layout.nu;
            }
        }
    }
    constrain(&mut cur, t0);
    let total_steps = (t1 - t0) as usize + extension.len();
    let mut masses = Vec::with_capacity(total_steps + 1);
    masses.push(cur.iter().sum::<f64>());
    let mut next = vec![0.0; n_states];
    let mut ending = vec![0.0; depth];
    let mut work: u64 = n_states as u64;
    for step in 1..=total_steps {
        let t = t0 + step as i64;
        work += n_states as u64 + layout.core_states as u64;
        if work > budget {
            let upper = masses.last().copied().unwrap_or(1.0);
            return Err(Error::OracleBudgetExceeded {
                work,
                partial: ProbabilityBounds::from_interval(0.0, upper * (1.0 + 1e-12)),
            });
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        ending.iter_mut().for_each(|x| *x = 0.0);
        for (i, &sym) in layout.symbols.iter().enumerate() {
            for s in 0..2 {
                for c in 0..depth {
                    ending[c] += cur[idx(i, 1, s, c)];
                }
            }
            for r in 2..=layout.max_len(i) {
                for s in 0..2 {
                    for c in 0..depth {
                        let v = cur[idx(i, r, s, c)];
                        if v != 0.0 {
                            next[idx(i, r - 1, 0, advance(c, sym, t))] += v;
                        }
                    }
                }
            }
        }
        for (c, &v) in ending.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (i, pmf) in layout.pmfs.iter().enumerate() {
                let c2 = advance(c, layout.symbols[i], t);
                for &(k, q) in pmf {
                    next[idx(i, k, 1, c2)] += v * layout.probs[i] * q;
                }
            }
        }
        constrain(&mut next, t);
        std::mem::swap(&mut cur, &mut next);
        masses.push(cur.iter().sum::<f64>());
    }
    Ok(TransferRun { masses, states: n_states, work })
}

/// Exact probability of `event` under the stationary law, or its conditional
/// probability when the event carries a condition.
pub fn exact_window_probability(model: &ModelSpec, event: &WindowEvent, budget: u64) -> Result<ProbabilityBounds> {
    let layout = Layout::new(model)?;
    match event.condition() {
        None => Ok(transfer(&layout, event, &[], budget)?.last()),
        Some(given) => {
            let cond = transfer(&layout, &given.unconditional(), &[], budget)?;
            let joint = transfer(&layout, &event.unconditional().and(given), &[], budget.saturating_sub(cond.work))?;
            joint
                .last()
                .ratio(cond.last())
                .ok_or_else(|| Error::InvalidArgument("conditioning event has probability zero".into()))
        }
    }
}

/// Literal depth-first enumeration of block tilings covering the window,
/// pruning prefixes lighter than [`PRUNE_BELOW`]. Supports per-time
/// constraints only (no run exclusions); conditions are handled as a ratio.
pub fn enumerate_tilings(model: &ModelSpec, event: &WindowEvent, node_budget: u64) -> Result<ProbabilityBounds> {
    let layout = Layout::new(model)?;
    let run = |ev: &WindowEvent| -> Result<ProbabilityBounds> {
        if !ev.exclusions.is_empty() {
            return Err(Error::InvalidArgument("the tiling enumerator does not handle run exclusions".into()));
        }
        let Some((t0, t1)) = ev.window() else {
            return Ok(ProbabilityBounds::point(1.0));
        };
        let mut dfs = Dfs { layout: &layout, sites: &ev.sites, t1, nodes: 0, budget: node_budget, accepted: 0.0, pruned: 0.0, rejected: 0.0 };
        for (i, pmf) in layout.pmfs.iter().enumerate() {
            for &(len, q) in pmf {
                for offset in 0..len {
                    let w = layout.probs[i] * q / layout.nu;
                    let start = t0 - offset as i64;
                    dfs.place(i, start, len, w, t0)?;
                }
            }
        }
        let lower = dfs.accepted;
        let upper = dfs.accepted + dfs.pruned;
        let slack = (dfs.nodes as f64 + 4.0) * f64::EPSILON * upper.max(f64::MIN_POSITIVE);
        let mut b = ProbabilityBounds::from_interval(lower - slack, upper + slack);
        b.enumerated_mass = dfs.accepted + dfs.rejected;
        Ok(b)
    };
    match event.condition() {
        None => run(event),
        Some(given) => {
            let cond = run(&given.unconditional())?;
            let joint = run(&event.unconditional().and(given))?;
            joint
                .ratio(cond)
                .ok_or_else(|| Error::InvalidArgument("conditioning event has probability zero".into()))
        }
    }
}

struct Dfs<'a> {
    layout: &'a Layout,
    sites: &'a BTreeMap<i64, Site>,
    t1: i64,
    nodes: u64,
    budget: u64,
    accepted: f64,
    pruned: f64,
    rejected: f64,
}

impl Dfs<'_> {
    /// Lays a block of symbol `i` over `[start, start+len)`, checking sites
    /// from `from` on, then recurses into the next block.
    fn place(&mut self, i: usize, start: i64, len: u32, w: f64, from: i64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            let upper = 1.0 - self.rejected;
            return Err(Error::OracleBudgetExceeded {
                work: self.nodes,
                partial: ProbabilityBounds::from_interval(self.accepted, upper),
            });
        }
        let sym = self.layout.symbols[i];
        let end = start + len as i64;
        for t in from..end.min(self.t1 + 1) {
            if let Some(site) = self.sites.get(&t) {
                if !site.admits(sym, t == start) {
                    self.rejected += w;
                    return Ok(());
                }
            }
        }
        if end > self.t1 {
            self.accepted += w;
            return Ok(());
        }
        if w < PRUNE_BELOW {
            self.pruned += w;
            return Ok(());
        }
        for j in 0..self.layout.pmfs.len() {
            let pj = self.layout.probs[j];
            for k in 0..self.layout.pmfs[j].len() {
                let (len2, q) = self.layout.pmfs[j][k];
                self.place(j, end, len2, w * pj * q, end)?;
            }
        }
        Ok(())
    }
}

/// The event "the observable occurs at time `t`".
pub fn occurrence(observable: &Observable, t: i64) -> WindowEvent {
    match *observable {
        Observable::Exceedance { level } => WindowEvent::new().symbol(t, SymbolConstraint::Gt(level)),
        Observable::Cylinder { symbol, length } => {
            WindowEvent::new().symbols(t, t + length as i64 - 1, SymbolConstraint::Eq(symbol))
        }
    }
}

/// The entering event: an occurrence at 0 but none at −1.
pub fn entering(observable: &Observable) -> WindowEvent {
    match *observable {
        Observable::Exceedance { level } => occurrence(observable, 0).symbol(-1, SymbolConstraint::Le(level)),
        Observable::Cylinder { symbol, .. } => occurrence(observable, 0).symbol(-1, SymbolConstraint::Ne(symbol)),
    }
}

fn check_feasible(model: &ModelSpec, observable: &Observable) -> Result<bool> {
    match *observable {
        Observable::Exceedance { level } => Ok(model.tail_e(level) > 0.0),
        Observable::Cylinder { symbol, length } => {
            if model.p(symbol) > 0.0 {
                Ok(true)
            } else {
                Err(Error::DegeneratePattern { symbol, length })
            }
        }
    }
}

/// `θ_q = P(no occurrence at times 1..q | occurrence at 0)`; a level above
/// the support gives 1.
pub fn exact_theta_q(model: &ModelSpec, observable: &Observable, q: u32, budget: u64) -> Result<ProbabilityBounds> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if !check_feasible(model, observable)? {
        return Ok(ProbabilityBounds::point(1.0));
    }
    let u = occurrence(observable, 0);
    let none = match *observable {
        Observable::Exceedance { level } => WindowEvent::new().symbols(1, q as i64, SymbolConstraint::Le(level)),
        Observable::Cylinder { symbol, length } => WindowEvent::new().exclude_run(symbol, length, 1, q as i64),
    };
    exact_window_probability(model, &none.given(u), budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Cluster start: occurrence at 0, none at −1.
    Entering,
    /// Occurrence at 0 (sojourn).
    Stationary,
    /// Regeneration at 0; the cluster may be empty.
    Regeneration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMomentBounds {
    /// `P(N ≥ k)` for `k = 1..=k_max`.
    pub tail: Vec<ProbabilityBounds>,
    pub mean: ValueBounds,
    pub second_moment: ValueBounds,
}

/// Exact law of the cluster size `N` (consecutive occurrences from time 0)
/// for `k ≤ k_max`, with moments whose remainder beyond `k_max` is bounded
/// through the block structure: once a run is long, each further block
/// continues it with probability `π` and adds at most `L` letters.
pub fn exact_cluster_moments(
    model: &ModelSpec,
    observable: &Observable,
    conditioning: Conditioning,
    k_max: usize,
    budget: u64,
) -> Result<ClusterMomentBounds> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let layout = Layout::new(model)?;
    let (continue_as, in_set): (SymbolConstraint, Box<dyn Fn(Symbol) -> bool>) = match *observable {
        Observable::Exceedance { level } => (SymbolConstraint::Gt(level), Box::new(move |s| s > level)),
        Observable::Cylinder { symbol, .. } => (SymbolConstraint::Eq(symbol), Box::new(move |s| s == symbol)),
    };
    let feasible = check_feasible(model, observable)?;
    let degenerate = || match *observable {
        Observable::Exceedance { level } => Error::DegenerateLevel { level },
        Observable::Cylinder { symbol, length } => Error::DegeneratePattern { symbol, length },
    };
    if !feasible && conditioning != Conditioning::Regeneration {
        return Err(degenerate());
    }
    let pi: f64 = layout.symbols.iter().zip(&layout.probs).filter(|(s, _)| in_set(**s)).map(|(_, p)| p).sum();
    if pi >= 1.0 - 1e-15 {
        return Err(degenerate());
    }
    let max_len = model.max_block_length_where(&in_set).unwrap_or(1) as f64;

    let (given, base) = match conditioning {
        Conditioning::Entering => (entering(observable), entering(observable)),
        Conditioning::Stationary => (occurrence(observable, 0), occurrence(observable, 0)),
        Conditioning::Regeneration => {
            let r = WindowEvent::new().regeneration(0, true);
            let b = r.clone().and(&occurrence(observable, 0));
            (r, b)
        }
    };
    let cond = transfer(&layout, &given, &[], budget)?.last();
    let ext = vec![continue_as; k_max];
    let run = transfer(&layout, &base, &ext, budget)?;
    let offset = run.masses.len() - 1 - k_max;
    // P(N ≥ k ∧ condition) sits at offset + k − 1, for k = 1..=k_max+1
    let mut tail = Vec::with_capacity(k_max + 1);
    for k in 1..=k_max + 1 {
        let joint = if feasible { run.bounds_at(offset + k - 1) } else { ProbabilityBounds::point(0.0) };
        tail.push(joint.ratio(cond).ok_or_else(degenerate)?);
    }
    let beyond = tail.pop().expect("k_max+1 entries").upper;
    let k = k_max as f64;
    let mean_rest = beyond * max_len / (1.0 - pi);
    let second_rest =
        beyond * (2.0 * k * max_len / (1.0 - pi) + max_len * max_len * (1.0 + pi) / (1.0 - pi).powi(2));
    let (mut m_lo, mut m_hi, mut s_lo, mut s_hi) = (0.0, 0.0, 0.0, 0.0);
    for (j, b) in tail.iter().enumerate() {
        let w = (2 * j + 1) as f64;
        m_lo += b.lower;
        m_hi += b.upper;
        s_lo += w * b.lower;
        s_hi += w * b.upper;
    }
    Ok(ClusterMomentBounds {
        tail,
        mean: ValueBounds { lower: m_lo, upper: m_hi + mean_rest },
        second_moment: ValueBounds { lower: s_lo, upper: s_hi + second_rest },
    })
}

/// `P(τ > t)` for `t = 0..=t_max`, where `τ = inf{t ≥ 1 : X_t..X_{t+n−1} = a^n}`
/// under the stationary law.
pub fn exact_hitting_survival(
    model: &ModelSpec,
    symbol: Symbol,
    length: u32,
    t_max: u32,
    budget: u64,
) -> Result<Vec<ProbabilityBounds>> {
    if length == 0 {
        return Err(Error::InvalidArgument("pattern length must be at least 1".into()));
    }
    let layout = Layout::new(model)?;
    let mut out = vec![ProbabilityBounds::point(1.0)];
    if t_max == 0 {
        return Ok(out);
    }
    let event = WindowEvent::new().exclude_run(symbol, length, 1, t_max as i64);
    let run = transfer(&layout, &event, &[], budget)?;
    // mass after time t + n − 1 is P(no start in 1..=t); the window starts at 1
    for t in 1..=t_max as usize {
        out.push(run.bounds_at(t + length as usize - 2));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymbolLaw;

    fn block(p: &[f64]) -> ModelSpec {
        ModelSpec::block(SymbolLaw::from_probabilities(p).unwrap()).unwrap()
    }

    #[test]
    fn two_symbol_block_pair() {
        let m = block(&[0.5, 0.5]);
        let ev = WindowEvent::new().symbol(0, SymbolConstraint::Eq(2)).symbol(1, SymbolConstraint::Eq(2));
        let b = exact_window_probability(&m, &ev, DEFAULT_BUDGET).unwrap();
        assert!(b.contains(0.5, 0.0) && b.width() < 1e-12, "{b:?}");
    }

    #[test]
    fn empty_event_is_certain() {
        let m = block(&[0.5, 0.5]);
        let b = exact_window_probability(&m, &WindowEvent::new(), 10).unwrap();
        assert_eq!(b, ProbabilityBounds::point(1.0));
    }

    #[test]
    fn contradictory_regeneration_is_impossible() {
        let m = block(&[0.5, 0.5]);
        let ev = WindowEvent::new().regeneration(0, true).regeneration(0, false);
        assert_eq!(exact_window_probability(&m, &ev, DEFAULT_BUDGET).unwrap().upper, 0.0);
    }

    #[test]
    fn budget_is_enforced_with_partial_bounds() {
        let m = block(&[0.2, 0.3, 0.5]);
        let ev = WindowEvent::new().symbols(0, 200, SymbolConstraint::Le(3));
        match exact_window_probability(&m, &ev, 100) {
            Err(Error::OracleBudgetExceeded { partial, .. }) => assert!(partial.lower <= partial.upper),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dfs_and_transfer_agree() {
        let m = block(&[0.3, 0.3, 0.4]);
        let ev = WindowEvent::new()
            .symbol(-1, SymbolConstraint::Ne(3))
            .symbols(0, 3, SymbolConstraint::Eq(3))
            .regeneration(4, true);
        let a = exact_window_probability(&m, &ev, DEFAULT_BUDGET).unwrap();
        let b = enumerate_tilings(&m, &ev, 10_000_000).unwrap();
        assert!((a.midpoint() - b.midpoint()).abs() < 1e-13, "{a:?} {b:?}");
    }

    #[test]
    fn level_above_support_has_unit_theta() {
        let m = block(&[0.5, 0.5]);
        let b = exact_theta_q(&m, &Observable::Exceedance { level: 2 }, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(b, ProbabilityBounds::point(1.0));
    }
}
