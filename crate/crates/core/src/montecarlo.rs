//! Monte Carlo estimators.
//!
//! Work is split into [`BATCHES`] fixed batches; batch `b` draws from
//! `RandomStream::new(seed, b)` and batches are reduced in batch order, so
//! results do not depend on how many worker threads run them.

use rand_distr::{Binomial, Distribution, Gamma, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylinders;
use crate::error::{Error, Result};
use crate::indices::Observable;
use crate::model::{ModelSpec, Symbol};
use crate::oracle::Conditioning;
use crate::simulate::{BlockSampler, RandomStream};

pub const BATCHES: u64 = 100;

/// Default truncation cap on cluster sizes, in letters.
pub const DEFAULT_CAP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub master_seed: u64,
    pub method: String,
}

impl Estimate {
    /// `|value − x| ≤ k · stderr`, with a floor for zero-variance estimates.
    pub fn agrees_with(&self, x: f64, k: f64) -> bool {
        (self.value - x).abs() <= k * self.stderr + 1e-12
    }
}

fn batch_sizes(total: u64) -> impl Iterator<Item = (u64, u64)> {
    (0..BATCHES).map(move |b| (b, total / BATCHES + u64::from(b < total % BATCHES)))
}

fn run_batches<T, F>(seed: u64, total: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream, u64) -> T + Sync,
{
    batch_sizes(total)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, size)| f(&mut RandomStream::new(seed, b), size))
        .collect()
}

/// Ratio `Σ num / Σ den` over batches with a batch-means standard error.
fn batch_ratio(num: &[f64], den: &[f64]) -> (f64, f64) {
    let total_den: f64 = den.iter().sum();
    let value = num.iter().sum::<f64>() / total_den;
    let b = num.len() as f64;
    let mean_den = total_den / b;
    let ss: f64 = num.iter().zip(den).map(|(n, d)| (n - value * d).powi(2)).sum();
    let stderr = (ss / (b * (b - 1.0))).sqrt() / mean_den;
    (value, stderr)
}

type Membership = Box<dyn Fn(Symbol) -> bool + Sync>;

fn observable_parts(model: &ModelSpec, observable: &Observable) -> Result<(Membership, u32, bool)> {
    Ok(match *observable {
        Observable::Exceedance { level } => (Box::new(move |s| s > level), 1, model.tail_e(level) > 0.0),
        Observable::Cylinder { symbol, length } => {
            if length == 0 {
                return Err(Error::InvalidArgument("cylinder length must be at least 1".into()));
            }
            (Box::new(move |s| s == symbol), length, model.p(symbol) > 0.0)
        }
    })
}

/// `P(no occurrence at 1..q | occurrence at 0)` from independent stationary
/// windows, with a binomial standard error. An observable that cannot occur
/// gives the value 1 with zero error.
pub fn estimate_theta_q(model: &ModelSpec, observable: &Observable, q: u32, n_samples: u64, seed: u64) -> Result<Estimate> {
    if n_samples == 0 || q == 0 {
        return Err(Error::InvalidArgument("n_samples and q must be at least 1".into()));
    }
    let (in_set, len, feasible) = observable_parts(model, observable)?;
    let method = "stationary windows, binomial ratio".to_string();
    if !feasible {
        return Ok(Estimate { value: 1.0, stderr: 0.0, n_samples, master_seed: seed, method });
    }
    let sampler = BlockSampler::new(model);
    let horizon = (q + len) as usize;
    let occurs = |x: &[Symbol], t: usize| x[t..t + len as usize].iter().all(|&s| in_set(s));
    let counts = run_batches(seed, n_samples, |rs, size| {
        let mut buf = Vec::with_capacity(horizon);
        let (mut hits, mut escapes) = (0u64, 0u64);
        for _ in 0..size {
            sampler.fill_stationary(horizon, rs, &mut buf);
            if occurs(&buf, 0) {
                hits += 1;
                if (1..=q as usize).all(|t| !occurs(&buf, t)) {
                    escapes += 1;
                }
            }
        }
        (hits, escapes)
    });
    let hits: u64 = counts.iter().map(|c| c.0).sum();
    let escapes: u64 = counts.iter().map(|c| c.1).sum();
    if hits == 0 {
        return Err(Error::NoConditioningEvents { attempts: n_samples });
    }
    let p = escapes as f64 / hits as f64;
    Ok(Estimate { value: p, stderr: (p * (1.0 - p) / hits as f64).sqrt(), n_samples: hits, master_seed: seed, method })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEstimate {
    /// Empirical `P(N ≥ k)` for `k = 1..=k_max`.
    pub tail: Vec<Estimate>,
    /// Mean of `min(N, cap)`.
    pub mean: Estimate,
    pub cap: u64,
    /// Fraction of conditioning events whose run was cut at the cap.
    pub truncated_fraction: f64,
}

#[derive(Default)]
struct ClusterBatch {
    events: f64,
    sum: f64,
    truncated: f64,
    at_least: Vec<f64>,
}

/// Empirical cluster-size law, from maximal runs of occurrence-carrying
/// blocks in long block sequences. Entering conditioning takes one sample per
/// run (its number of occurrences `M`); stationary conditioning takes every
/// occurrence of the run, with sizes `M, M−1, …, 1`. `n_samples` counts
/// conditioning events.
pub fn estimate_cluster_distribution(
    model: &ModelSpec,
    observable: &Observable,
    conditioning: Conditioning,
    k_max: usize,
    n_samples: u64,
    seed: u64,
    cap: u64,
) -> Result<ClusterEstimate> {
    if n_samples < BATCHES || cap == 0 {
        return Err(Error::InvalidArgument(format!("need n_samples ≥ {BATCHES} and a positive cap")));
    }
    if conditioning == Conditioning::Regeneration {
        return Err(Error::InvalidArgument("cluster estimation supports entering or stationary conditioning".into()));
    }
    let (in_set, len, feasible) = observable_parts(model, observable)?;
    if !feasible {
        return Err(Error::NoConditioningEvents { attempts: 0 });
    }
    let sampler = BlockSampler::new(model);
    let stationary = conditioning == Conditioning::Stationary;
    let max_blocks = n_samples.saturating_mul(1_000_000);
    let batches = run_batches(seed, n_samples, |rs, size| {
        let mut out = ClusterBatch { at_least: vec![0.0; k_max + 1], ..Default::default() };
        let mut run: u64 = 0;
        let mut drawn: u64 = 0;
        while (out.events as u64) < size && drawn < max_blocks / BATCHES {
            let b = sampler.sample_block(rs);
            drawn += 1;
            let mut truncated = false;
            if in_set(b.symbol) {
                run += b.length as u64;
                if run < cap + len as u64 {
                    continue;
                }
                // past the cap: walk to the end of the run without counting
                truncated = true;
                while in_set(sampler.sample_block(rs).symbol) {}
            } else if run == 0 {
                continue;
            }
            let m = (run + 1).saturating_sub(len as u64).min(cap);
            run = 0;
            if m == 0 {
                continue;
            }
            if stationary {
                out.events += m as f64;
                out.sum += (m * (m + 1) / 2) as f64;
                if truncated {
                    out.truncated += m as f64;
                }
                for k in 1..=k_max.min(m as usize) {
                    out.at_least[k] += (m - k as u64 + 1) as f64;
                }
            } else {
                out.events += 1.0;
                out.sum += m as f64;
                if truncated {
                    out.truncated += 1.0;
                }
                for k in 1..=k_max.min(m as usize) {
                    out.at_least[k] += 1.0;
                }
            }
        }
        out
    });
    let den: Vec<f64> = batches.iter().map(|b| b.events).collect();
    let total: f64 = den.iter().sum();
    if total == 0.0 {
        return Err(Error::NoConditioningEvents { attempts: max_blocks });
    }
    let method = match conditioning {
        Conditioning::Entering => "block scan, entering runs, batch means",
        _ => "block scan, stationary occurrences, batch means",
    };
    let make = |num: Vec<f64>| {
        let (value, stderr) = batch_ratio(&num, &den);
        Estimate { value, stderr, n_samples: total as u64, master_seed: seed, method: method.to_string() }
    };
    let tail = (1..=k_max).map(|k| make(batches.iter().map(|b| b.at_least[k]).collect())).collect();
    let mean = make(batches.iter().map(|b| b.sum).collect());
    let truncated_fraction = batches.iter().map(|b| b.truncated).sum::<f64>() / total;
    Ok(ClusterEstimate { tail, mean, cap, truncated_fraction })
}

/// Empirical `P(R_n | R_0)` for `n = 0..=n_max`; `n_samples` regeneration
/// origins are taken from trajectories started at a regeneration.
pub fn estimate_correlation(model: &ModelSpec, n_max: usize, n_samples: u64, seed: u64) -> Result<Vec<Estimate>> {
    if n_samples < BATCHES {
        return Err(Error::InvalidArgument(format!("need at least {BATCHES} samples")));
    }
    let sampler = BlockSampler::new(model);
    let batches = run_batches(seed, n_samples, |rs, size| {
        // regeneration indicators of times t..=t+n_max, as a ring buffer
        let width = n_max + 1;
        let mut mask = std::collections::VecDeque::with_capacity(width);
        let mut hits = vec![0.0; width];
        let mut origins = 0u64;
        let mut pending: u64 = 0;
        let mut next_flag = |rs: &mut RandomStream| {
            let fresh = pending == 0;
            if fresh {
                pending = sampler.sample_block(rs).length as u64;
            }
            pending -= 1;
            fresh
        };
        for _ in 0..width {
            mask.push_back(next_flag(rs));
        }
        while origins < size {
            if mask[0] {
                origins += 1;
                for (lag, h) in hits.iter_mut().enumerate() {
                    if mask[lag] {
                        *h += 1.0;
                    }
                }
            }
            mask.pop_front();
            mask.push_back(next_flag(rs));
        }
        (origins as f64, hits)
    });
    let den: Vec<f64> = batches.iter().map(|b| b.0).collect();
    let total = den.iter().sum::<f64>() as u64;
    Ok((0..=n_max)
        .map(|lag| {
            let (value, stderr) = if lag == 0 { (1.0, 0.0) } else { batch_ratio(&batches.iter().map(|b| b.1[lag]).collect::<Vec<_>>(), &den) };
            Estimate { value, stderr, n_samples: total, master_seed: seed, method: "regeneration origins, batch means".into() }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingMethod {
    /// Exact cycle decomposition: the wait is split into failed attempts at
    /// the pattern and the blocks between them, whose totals are drawn from
    /// their exact multinomial and negative binomial laws.
    Accelerated,
    /// Block-by-block scan of the stationary path.
    Scanning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingSample {
    pub symbol: Symbol,
    pub length: u32,
    /// `θ_1(n) μ(a^n)`.
    pub scale: f64,
    /// Rescaled hitting times `τ_n θ_1(n) μ(a^n)`, in replica order.
    pub values: Vec<f64>,
    pub master_seed: u64,
    pub method: HittingMethod,
}

/// Exact stepping from a stationary start. Returns `Ok(τ)` on a hit, or
/// `Err(T)` with `T ≥ 1` the start of the first block after a completed
/// block of another symbol.
fn initial_phase(
    sampler: &BlockSampler,
    rs: &mut RandomStream,
    a: Symbol,
    n: u64,
    stop_after_break: bool,
    cap: u64,
) -> Option<std::result::Result<u64, u64>> {
    let (first, offset) = sampler.sample_covering_block(rs);
    let mut start = -(offset as i64);
    let mut block = first;
    let mut run_start: Option<i64> = None;
    loop {
        let end = start + block.length as i64 - 1;
        if block.symbol == a {
            let u = *run_start.get_or_insert(start);
            let t = u.max(1);
            if t + n as i64 - 1 <= end {
                return Some(Ok(t as u64));
            }
        } else {
            run_start = None;
            if stop_after_break {
                return Some(Err((end + 1) as u64));
            }
        }
        start = end + 1;
        if start as u64 > cap {
            return None;
        }
        block = sampler.sample_block(rs);
    }
}

/// Laws needed by the accelerated sampler.
struct CycleLaws {
    /// `P(run ≥ n | the run starts with an a-block)`.
    success: f64,
    /// Failed-run lengths `1..n` and their conditional probabilities.
    failed: Vec<(u64, f64)>,
    /// Lengths of blocks of other symbols and their probabilities.
    other: Vec<(u64, f64)>,
    p_a: f64,
}

impl CycleLaws {
    fn new(model: &ModelSpec, a: Symbol, n: u32) -> Result<Self> {
        let support = model.require_finite("the accelerated hitting sampler")?;
        let p_a = model.p(a);
        let pmf = model.block_pmf(a);
        let n = n as usize;
        // G(m) = P(run ≥ m), g(m) = P(run = m), both given a leading a-block
        let mut big_g = vec![1.0; n + 1];
        let mut small_g = vec![0.0; n];
        for m in 1..=n {
            let mut gm = 0.0;
            let mut sm = 0.0;
            for &(l, q) in pmf.entries() {
                let l = l as usize;
                if l >= m {
                    gm += q;
                } else {
                    gm += q * p_a * big_g[m - l];
                }
                if m < n {
                    if l == m {
                        sm += q * (1.0 - p_a);
                    } else if l < m {
                        sm += q * p_a * small_g[m - l];
                    }
                }
            }
            big_g[m] = gm;
            if m < n {
                small_g[m] = sm;
            }
        }
        let failed_mass: f64 = small_g.iter().sum();
        let failed = (1..n).filter(|&m| small_g[m] > 0.0).map(|m| (m as u64, small_g[m] / failed_mass)).collect();
        let mut other = std::collections::BTreeMap::new();
        for &b in support.iter().filter(|&&b| b != a) {
            for &(l, q) in model.block_pmf(b).entries() {
                *other.entry(l as u64).or_insert(0.0) += model.p(b) * q;
            }
        }
        let other_mass: f64 = other.values().sum();
        let other = other.into_iter().map(|(l, w)| (l, w / other_mass)).collect();
        Ok(Self { success: big_g[n], failed, other, p_a })
    }

    /// Sum of `count` i.i.d. lengths with law `law`, through multinomial counts.
    fn total_length(law: &[(u64, f64)], count: u64, rs: &mut RandomStream) -> u64 {
        let mut left = count;
        let mut mass = 1.0;
        let mut total = 0u64;
        for (i, &(len, w)) in law.iter().enumerate() {
            if left == 0 {
                break;
            }
            let c = if i + 1 == law.len() || w >= mass {
                left
            } else {
                Binomial::new(left, (w / mass).clamp(0.0, 1.0)).expect("valid binomial").sample(rs.rng())
            };
            total += c * len;
            left -= c;
            mass -= w;
        }
        total
    }

    /// Time from a fresh regeneration (no a-run pending) to the hit.
    fn remaining(&self, rs: &mut RandomStream) -> u64 {
        let failures = if self.success >= 1.0 {
            0
        } else {
            Geometric::new(self.success).expect("valid success probability").sample(rs.rng())
        };
        let extra_blocks = if self.p_a >= 1.0 {
            0
        } else {
            let shape = failures as f64 + 1.0;
            let lambda = Gamma::new(shape, (1.0 - self.p_a) / self.p_a).expect("valid gamma").sample(rs.rng());
            if lambda <= 0.0 { 0 } else { Poisson::new(lambda).expect("valid poisson").sample(rs.rng()) as u64 }
        };
        Self::total_length(&self.failed, failures, rs) + Self::total_length(&self.other, failures + extra_blocks, rs)
    }
}

/// Rescaled hitting times of `a^n` from stationary starts. `step_cap` bounds
/// the exactly stepped part of each replica (the whole wait for the scanning
/// method); replicas beyond it are reported through `BudgetExceeded`.
pub fn estimate_hitting_scaled(
    model: &ModelSpec,
    a: Symbol,
    n: u32,
    n_replicas: u64,
    seed: u64,
    method: HittingMethod,
    step_cap: u64,
) -> Result<HittingSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("pattern length must be at least 1".into()));
    }
    if model.p(a) <= 0.0 {
        return Err(Error::DegeneratePattern { symbol: a, length: n });
    }
    if n_replicas < 100 {
        return Err(Error::InvalidArgument("need at least 100 replicas".into()));
    }
    let scale = cylinders::theta1_cylinder(model, a, n)? * cylinders::mu_cylinder(model, a, n)?;
    let sampler = BlockSampler::new(model);
    let laws = match method {
        HittingMethod::Accelerated => Some(CycleLaws::new(model, a, n)?),
        HittingMethod::Scanning => None,
    };
    let batches = run_batches(seed, n_replicas, |rs, size| {
        let mut out = Vec::with_capacity(size as usize);
        let mut exceeded = 0u64;
        for _ in 0..size {
            match initial_phase(&sampler, rs, a, n as u64, laws.is_some(), step_cap) {
                Some(Ok(tau)) => out.push(tau as f64 * scale),
                Some(Err(fresh)) => {
                    let laws = laws.as_ref().expect("accelerated laws");
                    out.push((fresh + laws.remaining(rs)) as f64 * scale);
                }
                None => exceeded += 1,
            }
        }
        (out, exceeded)
    });
    let exceeded: u64 = batches.iter().map(|b| b.1).sum();
    if exceeded > 0 {
        return Err(Error::BudgetExceeded { cap: step_cap, exceeded, replicas: n_replicas });
    }
    let values = batches.into_iter().flat_map(|b| b.0).collect();
    Ok(HittingSample { symbol: a, length: n, scale, values, master_seed: seed, method })
}

/// Kolmogorov–Smirnov distance `sup |F_n − F|` to the unit exponential.
pub fn ks_exponential(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-x).exp_m1();
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
