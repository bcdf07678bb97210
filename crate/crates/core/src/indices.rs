//! Exact clustering indices for exceedances `{X_0 > a}`.
//!
//! With `m_a = Σ_{j>a} p_j E(q_j)` and `m2_a = Σ_{j>a} p_j E(q_j²)`, an
//! exceedance run entered at a cluster start is the entered block `F`
//! followed by a run started at a regeneration, which is again a run of i.i.d.
//! blocks stopped at the first symbol `≤ a`. Every quantity below follows
//! from those two pieces.

use serde::{Deserialize, Serialize};

use crate::cylinders;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Symbol};
use crate::oracle::{self, ProbabilityBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Exceedance { level: Symbol },
    Cylinder { symbol: Symbol, length: u32 },
}

impl Observable {
    /// Shortest possible return time `p(U)`. A block can always be followed
    /// by a block of the same symbol, so every feasible observable here
    /// recurs at lag 1.
    pub fn period(&self, model: &ModelSpec) -> Result<u32> {
        match *self {
            Observable::Exceedance { level } => {
                if model.tail_e(level) > 0.0 {
                    Ok(1)
                } else {
                    Err(Error::DegenerateLevel { level })
                }
            }
            Observable::Cylinder { symbol, length } => {
                if model.p(symbol) > 0.0 && length >= 1 {
                    Ok(1)
                } else {
                    Err(Error::DegeneratePattern { symbol, length })
                }
            }
        }
    }

    /// `P(U | R_0)`.
    pub fn prob_given_regen(&self, model: &ModelSpec) -> f64 {
        match *self {
            Observable::Exceedance { level } => model.tail_e(level),
            Observable::Cylinder { symbol, length } => {
                cylinders::cyl_prob_given_regen(model, symbol, length as usize).value(length as usize)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStatistics {
    pub mean_entering: f64,
    pub second_moment_entering: f64,
    pub mean_regen: f64,
    pub second_moment_regen: f64,
    pub sojourn_mean: f64,
}

/// `(e_a, 1 − e_a, m_a)` with `0 < e_a < 1` enforced.
fn interior_level(model: &ModelSpec, a: Symbol) -> Result<(f64, f64, f64)> {
    let e = model.tail_e(a);
    let head = model.head_e(a);
    if e <= 0.0 || head <= 0.0 {
        return Err(Error::DegenerateLevel { level: a });
    }
    Ok((e, head, model.tail_block_mean(a)))
}

/// `θ_1(a) = e_a (1 − e_a) / (ν g_a)`.
pub fn theta1_exceedance(model: &ModelSpec, a: Symbol) -> Result<f64> {
    let (e, head, m) = interior_level(model, a)?;
    Ok(e * head / m)
}

/// `(E_E(F), E_E(F²)) = (m_a / e_a, m2_a / e_a)`.
pub fn entering_block_moments(model: &ModelSpec, a: Symbol) -> Result<(f64, f64)> {
    let e = model.tail_e(a);
    if e <= 0.0 {
        return Err(Error::DegenerateLevel { level: a });
    }
    let m2 = model.tail_block_second_moment(a);
    if !m2.is_finite() {
        return Err(Error::InfiniteMoment(format!("Σ_{{j>{a}}} p_j E(q_j²)")));
    }
    Ok((model.tail_block_mean(a) / e, m2 / e))
}

/// `(E_{R_0}(N), E_{R_0}(N²))` from `x = m/(1−e)`, `y = (m2 + 2 m x)/(1−e)`.
pub fn regen_cluster_moments(model: &ModelSpec, a: Symbol) -> Result<(f64, f64)> {
    let e = model.tail_e(a);
    if e <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let head = model.head_e(a);
    if head <= 0.0 {
        return Err(Error::DegenerateLevel { level: a });
    }
    let m = model.tail_block_mean(a);
    let m2 = model.tail_block_second_moment(a);
    if !m2.is_finite() {
        return Err(Error::InfiniteMoment(format!("Σ_{{j>{a}}} p_j E(q_j²)")));
    }
    let x = m / head;
    let y = (m2 + 2.0 * m * x) / head;
    Ok((x, y))
}

/// `E_E(N) = m_a / (e_a (1 − e_a))`, the reciprocal of `θ_1(a)`.
pub fn cluster_mean_entering(model: &ModelSpec, a: Symbol) -> Result<f64> {
    let (e, head, m) = interior_level(model, a)?;
    Ok(m / (e * head))
}

/// `E_E(N²) = E_E(F²) + 2 E_E(F) E_{R_0}(N) + E_{R_0}(N²)`.
pub fn cluster_second_moment_entering(model: &ModelSpec, a: Symbol) -> Result<f64> {
    interior_level(model, a)?;
    let (f1, f2) = entering_block_moments(model, a)?;
    let (x, y) = regen_cluster_moments(model, a)?;
    Ok(f2 + 2.0 * f1 * x + y)
}

/// Mean sojourn `θ_1/2 · (E_E(N²) + E_E(N))`; 0 above the support.
pub fn sojourn_mean(model: &ModelSpec, a: Symbol) -> Result<f64> {
    if model.tail_e(a) <= 0.0 {
        return Ok(0.0);
    }
    let theta = theta1_exceedance(model, a)?;
    let second = cluster_second_moment_entering(model, a)?;
    let mean = cluster_mean_entering(model, a)?;
    Ok(0.5 * theta * (second + mean))
}

pub fn cluster_statistics(model: &ModelSpec, a: Symbol) -> Result<ClusterStatistics> {
    let (mean_regen, second_moment_regen) = regen_cluster_moments(model, a)?;
    Ok(ClusterStatistics {
        mean_entering: cluster_mean_entering(model, a)?,
        second_moment_entering: cluster_second_moment_entering(model, a)?,
        mean_regen,
        second_moment_regen,
        sojourn_mean: sojourn_mean(model, a)?,
    })
}

/// Exact `P_E(N = k)` for `k = 0..=k_max` (entry 0 is always 0).
///
/// `N = F + N'` where `F` has law `Σ_{j>a} p_j q_j(·) / e_a` and `N'` is the
/// run started at a regeneration, `P(N' = k) = (1−e_a) 1{k=0} + Σ_{j>a} p_j Σ_ℓ q_j(ℓ) P(N' = k−ℓ)`.
/// Requires a finite symbol support.
pub fn cluster_distribution_entering(model: &ModelSpec, a: Symbol, k_max: usize) -> Result<Vec<f64>> {
    let (e, head, _) = interior_level(model, a)?;
    let support = model.require_finite("the exact cluster law")?;
    let mut block = vec![0.0; k_max + 1];
    for &j in support.iter().filter(|&&j| j > a) {
        for &(len, q) in model.block_pmf(j).entries() {
            if (len as usize) <= k_max {
                block[len as usize] += model.p(j) * q;
            }
        }
    }
    let mut regen = vec![0.0; k_max + 1];
    regen[0] = head;
    for k in 1..=k_max {
        regen[k] = (1..=k).map(|l| block[l] * regen[k - l]).sum();
    }
    Ok((0..=k_max).map(|k| (1..=k).map(|l| block[l] * regen[k - l]).sum::<f64>() / e).collect())
}

/// `q · P(U | R_0)`, the bound on `|1 − θ_q/θ_1|`.
pub fn theta_q_bound(model: &ModelSpec, observable: &Observable, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    Ok(q as f64 * observable.prob_given_regen(model))
}

/// Exact `θ_q` for `q ≤ 8` on finite-support models, through the oracle.
pub fn theta_q_exact_small(model: &ModelSpec, observable: &Observable, q: u32, budget: u64) -> Result<ProbabilityBounds> {
    if q == 0 || q > 8 {
        return Err(Error::InvalidArgument(format!("q = {q} outside 1..=8")));
    }
    oracle::exact_theta_q(model, observable, q, budget)
}
