//! Sample paths of the process.
//!
//! Randomness comes from [`RandomStream`]: a ChaCha8 generator keyed by
//! `master_seed` (expanded to 32 bytes with `SeedableRng::seed_from_u64`)
//! and positioned on the ChaCha stream id `stream_index`, counter 0. Each
//! `(master_seed, stream_index)` pair therefore names one fixed, portable
//! keystream, and distinct stream indices never overlap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockLawFamily, ModelSpec, Symbol, SymbolLaw};

/// Reproducible random source identified by `(master_seed, stream_index)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self { master_seed, stream_index, rng }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_pos(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.random_range(0..n)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Inverse-CDF draw on a cumulative table; the last index absorbs rounding.
fn draw_cdf(cdf: &[f64], u: f64) -> usize {
    let x = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// One written block: `symbol` repeated `length` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub symbol: Symbol,
    pub length: u32,
}

#[derive(Debug, Clone)]
enum SymbolDraw {
    Table { symbols: Vec<Symbol>, cdf: Vec<f64> },
    Geometric { log_ratio: f64 },
}

impl SymbolDraw {
    fn new(law: &SymbolLaw) -> Self {
        match law {
            SymbolLaw::FiniteTable(t) => SymbolDraw::Table {
                symbols: t.symbols().to_vec(),
                cdf: cumulative(t.probs().iter().copied()),
            },
            SymbolLaw::Geometric { ratio } => SymbolDraw::Geometric { log_ratio: ratio.ln() },
        }
    }

    fn draw(&self, rs: &mut RandomStream) -> Symbol {
        match self {
            SymbolDraw::Table { symbols, cdf } => symbols[draw_cdf(cdf, rs.uniform())],
            SymbolDraw::Geometric { log_ratio } => geometric_draw(*log_ratio, rs),
        }
    }
}

/// `1 + ⌊ln U / ln ρ⌋`, geometric on `{1, 2, …}` with `P(> k) = ρ^k`.
fn geometric_draw(log_ratio: f64, rs: &mut RandomStream) -> Symbol {
    let k = (rs.uniform_pos().ln() / log_ratio).floor();
    (k.min(u32::MAX as f64 - 2.0) as Symbol) + 1
}

#[derive(Debug, Clone)]
enum StationaryDraw {
    /// Joint `(symbol, length)` table with weights `k q_a(k) p_a`.
    Table { blocks: Vec<Block>, cdf: Vec<f64> },
    /// Geometric symbol law with a constant block mean: the biased symbol law is `p`.
    GeometricFlat { log_ratio: f64 },
    /// Geometric symbol law with `q_a = δ_a`: biased law `a p_a / ν` is a sum
    /// of two geometrics minus one.
    GeometricBlock { log_ratio: f64 },
}

/// Precomputed samplers for blocks of a model.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    family: BlockLawFamily,
    symbols: SymbolDraw,
    stationary: StationaryDraw,
    /// Per-symbol length tables for the table family, aligned with `table_symbols`.
    table_symbols: Vec<Symbol>,
    table_lengths: Vec<(Vec<u32>, Vec<f64>)>,
}

impl BlockSampler {
    pub fn new(model: &ModelSpec) -> Self {
        let family = model.block_family().clone();
        let law = model.symbol_law();
        let symbols = SymbolDraw::new(law);
        let stationary = match law {
            SymbolLaw::FiniteTable(t) => {
                let mut blocks = Vec::new();
                let mut weights = Vec::new();
                for (a, p) in t.iter() {
                    for &(k, q) in model.block_pmf(a).entries() {
                        blocks.push(Block { symbol: a, length: k });
                        weights.push(k as f64 * q * p);
                    }
                }
                StationaryDraw::Table { blocks, cdf: cumulative(weights) }
            }
            SymbolLaw::Geometric { ratio } => match family {
                BlockLawFamily::Block => StationaryDraw::GeometricBlock { log_ratio: ratio.ln() },
                _ => StationaryDraw::GeometricFlat { log_ratio: ratio.ln() },
            },
        };
        let (table_symbols, table_lengths) = match &family {
            BlockLawFamily::Table(map) => map
                .iter()
                .map(|(&a, pmf)| {
                    let lengths = pmf.entries().iter().map(|e| e.0).collect();
                    (a, (lengths, cumulative(pmf.entries().iter().map(|e| e.1))))
                })
                .unzip(),
            _ => (Vec::new(), Vec::new()),
        };
        Self { family, symbols, stationary, table_symbols, table_lengths }
    }

    pub fn draw_symbol(&self, rs: &mut RandomStream) -> Symbol {
        self.symbols.draw(rs)
    }

    /// Block length for symbol `a`, drawn from `q_a`.
    pub fn draw_length(&self, a: Symbol, rs: &mut RandomStream) -> u32 {
        match self.family {
            BlockLawFamily::Iid => 1,
            BlockLawFamily::Block => a,
            BlockLawFamily::Smith => {
                if a == 1 {
                    2
                } else if rs.uniform() * (a as f64) < 1.0 {
                    a + 1
                } else {
                    1
                }
            }
            BlockLawFamily::Table(_) => {
                let i = self.table_symbols.binary_search(&a).expect("symbol in table family");
                let (lengths, cdf) = &self.table_lengths[i];
                lengths[draw_cdf(cdf, rs.uniform())]
            }
        }
    }

    /// A fresh block drawn at a regeneration: `symbol ~ p`, `length ~ q_symbol`.
    pub fn sample_block(&self, rs: &mut RandomStream) -> Block {
        let symbol = self.draw_symbol(rs);
        let length = self.draw_length(symbol, rs);
        Block { symbol, length }
    }

    /// The block covering a stationary time origin, drawn with the
    /// length-biased law `k q_a(k) p_a / ν`, together with the uniform offset
    /// of the origin inside it.
    pub fn sample_covering_block(&self, rs: &mut RandomStream) -> (Block, u32) {
        let block = match &self.stationary {
            StationaryDraw::Table { blocks, cdf } => blocks[draw_cdf(cdf, rs.uniform())],
            StationaryDraw::GeometricFlat { log_ratio } => {
                let a = geometric_draw(*log_ratio, rs);
                let length = match self.family {
                    BlockLawFamily::Iid => 1,
                    _ if a == 1 => 2,
                    // biased Smith lengths: P(a+1) = (a+1)/(2a)
                    _ => {
                        if rs.uniform() * (2.0 * a as f64) < (a + 1) as f64 {
                            a + 1
                        } else {
                            1
                        }
                    }
                };
                Block { symbol: a, length }
            }
            StationaryDraw::GeometricBlock { log_ratio } => {
                let a = geometric_draw(*log_ratio, rs) + geometric_draw(*log_ratio, rs) - 1;
                Block { symbol: a, length: a }
            }
        };
        let offset = rs.below(block.length as u64) as u32;
        (block, offset)
    }

    /// Overwrites `out` with a stationary window `X_0..X_{horizon−1}`.
    pub fn fill_stationary(&self, horizon: usize, rs: &mut RandomStream, out: &mut Vec<Symbol>) {
        out.clear();
        let (first, offset) = self.sample_covering_block(rs);
        let take = ((first.length - offset) as usize).min(horizon);
        out.extend(std::iter::repeat_n(first.symbol, take));
        while out.len() < horizon {
            let b = self.sample_block(rs);
            let take = (b.length as usize).min(horizon - out.len());
            out.extend(std::iter::repeat_n(b.symbol, take));
        }
    }
}

/// Free function form of [`BlockSampler::sample_block`].
pub fn sample_block(model: &ModelSpec, stream: &mut RandomStream) -> Block {
    BlockSampler::new(model).sample_block(stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    Stationary,
    FromRegeneration,
}

/// Finite sample path `X_0..X_{T−1}` with its regeneration times in `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub symbols: Vec<Symbol>,
    pub regeneration_times: Vec<usize>,
    pub start_mode: StartMode,
    pub master_seed: u64,
    pub stream_index: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Regeneration indicator for every time in `[0, T]`.
    pub fn regeneration_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.symbols.len() + 1];
        for &t in &self.regeneration_times {
            mask[t] = true;
        }
        mask
    }

    /// Checks that symbols only change at marked regenerations and that
    /// every complete block has a length in the support of `q_symbol`.
    pub fn check_blocks(&self, model: &ModelSpec) -> Result<()> {
        let mask = self.regeneration_mask();
        for (t, w) in self.symbols.windows(2).enumerate().map(|(i, w)| (i + 1, w)) {
            if w[1] != w[0] && !mask[t] {
                return Err(Error::InvalidArgument(format!("symbol changes at {t} without regeneration")));
            }
        }
        for w in self.regeneration_times.windows(2) {
            let (start, end) = (w[0], w[1]);
            let symbol = self.symbols[start];
            let len = (end - start) as u32;
            if model.block_pmf(symbol).prob(len) <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "block of symbol {symbol} at {start} has impossible length {len}"
                )));
            }
        }
        Ok(())
    }

    /// Text export: a header line `# regenerations t1 t2 …` followed by one
    /// symbol per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# regenerations");
        for t in &self.regeneration_times {
            out.push(' ');
            out.push_str(&t.to_string());
        }
        out.push('\n');
        for s in &self.symbols {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`Trajectory::to_text`] output. Seed metadata is not part of
    /// the text format and comes back as zero.
    pub fn from_text(text: &str, start_mode: StartMode) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let rest = header
            .strip_prefix("# regenerations")
            .ok_or_else(|| Error::InvalidArgument("missing '# regenerations' header".into()))?;
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|_| Error::InvalidArgument(format!("not an integer: {s:?}")))
        };
        let regeneration_times =
            rest.split_whitespace().map(|s| parse(s).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let symbols = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| parse(l.trim()).map(|v| v as Symbol))
            .collect::<Result<Vec<_>>>()?;
        if regeneration_times.windows(2).any(|w| w[0] >= w[1])
            || regeneration_times.last().is_some_and(|&t| t > symbols.len())
        {
            return Err(Error::InvalidArgument("regeneration times must be ascending within [0, T]".into()));
        }
        Ok(Self { symbols, regeneration_times, start_mode, master_seed: 0, stream_index: 0 })
    }
}

fn extend_with_blocks(
    sampler: &BlockSampler,
    stream: &mut RandomStream,
    horizon: usize,
    mut t: usize,
    symbols: &mut Vec<Symbol>,
    regenerations: &mut Vec<usize>,
) {
    while t <= horizon {
        regenerations.push(t);
        if t == horizon {
            break;
        }
        let block = sampler.sample_block(stream);
        let take = (block.length as usize).min(horizon - t);
        symbols.extend(std::iter::repeat_n(block.symbol, take));
        t += block.length as usize;
    }
}

/// Path started with a regeneration at time 0, truncated to `horizon` symbols.
pub fn simulate_from_regeneration(model: &ModelSpec, horizon: usize, stream: &mut RandomStream) -> Trajectory {
    let sampler = BlockSampler::new(model);
    let mut symbols = Vec::with_capacity(horizon);
    let mut regenerations = Vec::new();
    extend_with_blocks(&sampler, stream, horizon, 0, &mut symbols, &mut regenerations);
    Trajectory {
        symbols,
        regeneration_times: regenerations,
        start_mode: StartMode::FromRegeneration,
        master_seed: stream.master_seed(),
        stream_index: stream.stream_index(),
    }
}

/// Stationary path: the block covering time 0 is length-biased with a
/// uniform offset, then i.i.d. blocks follow.
pub fn simulate_stationary(model: &ModelSpec, horizon: usize, stream: &mut RandomStream) -> Trajectory {
    let sampler = BlockSampler::new(model);
    let mut symbols = Vec::with_capacity(horizon);
    let mut regenerations = Vec::new();
    let (first, offset) = sampler.sample_covering_block(stream);
    let remaining = (first.length - offset) as usize;
    if offset == 0 {
        regenerations.push(0);
    }
    symbols.extend(std::iter::repeat_n(first.symbol, remaining.min(horizon)));
    if remaining <= horizon {
        extend_with_blocks(&sampler, stream, horizon, remaining, &mut symbols, &mut regenerations);
    }
    Trajectory {
        symbols,
        regeneration_times: regenerations,
        start_mode: StartMode::Stationary,
        master_seed: stream.master_seed(),
        stream_index: stream.stream_index(),
    }
}
