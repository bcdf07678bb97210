//! Constant-symbol cylinders `a^n = {X_0 = … = X_{n−1} = a}`.
//!
//! Everything reduces to the renewal sequence `P(m) = P(X_0^{m−1} = a | R_0)`,
//! which solves `P(m) = Σ_k c_k P(m − k)` with `c_k = p_a q_a(k)` and
//! `P(m) = 1` for `m ≤ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Symbol};

/// `n = ceil_part · a − s` with `0 ≤ s < a`, and `r = a − s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EuclidDecomposition {
    pub ceil_part: u32,
    pub s: u32,
    pub r: u32,
}

pub fn euclid_decomposition(n: u32, a: u32) -> Result<EuclidDecomposition> {
    if n == 0 || a == 0 {
        return Err(Error::InvalidArgument("n and a must be positive".into()));
    }
    let ceil_part = n.div_ceil(a);
    let s = ceil_part * a - n;
    Ok(EuclidDecomposition { ceil_part, s, r: a - s })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionSolution {
    /// `values[m] = P(m)` for `m = 0..=n_max`.
    pub values: Vec<f64>,
    pub dominant_root: Option<f64>,
    /// `K_1` in `P(m) ~ K_1 r^m`.
    pub root_multiplier: Option<f64>,
}

impl RecursionSolution {
    /// `P(m)`, with `P(m) = 1` for `m ≤ 0`.
    pub fn value(&self, m: usize) -> f64 {
        self.values[m]
    }
}

fn coefficients(model: &ModelSpec, a: Symbol) -> Vec<(usize, f64)> {
    let p = model.p(a);
    model.block_pmf(a).entries().iter().map(|&(k, q)| (k as usize, p * q)).collect()
}

fn extend(values: &mut Vec<f64>, coeffs: &[(usize, f64)], upto: usize) {
    while values.len() <= upto {
        let m = values.len();
        let v = coeffs.iter().map(|&(k, c)| if k >= m { c } else { c * values[m - k] }).sum();
        values.push(v);
    }
}

/// Solves the renewal recursion for `m = 1..=n_max`, and attaches the
/// dominant root when one exists.
pub fn cyl_prob_given_regen(model: &ModelSpec, a: Symbol, n_max: usize) -> RecursionSolution {
    let coeffs = coefficients(model, a);
    let mut values = vec![1.0];
    extend(&mut values, &coeffs, n_max);
    let (dominant_root, root_multiplier) = match dominant_root(model, a) {
        Ok(r) => (Some(r), Some(multiplier(&coeffs, r))),
        Err(_) => (None, None),
    };
    RecursionSolution { values, dominant_root, root_multiplier }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// The root `r ∈ (0, 1)` of `x^K − Σ_k c_k x^{K−k}`, found by bisection.
///
/// It is the dominant root whenever the block lengths of `a` have gcd 1
/// and `0 < p_a < 1`; otherwise the recursion is periodic or trivial and
/// `DegenerateSymbol` is returned. For the Smith family this is the root
/// of `x^a (x − q) − p` with `p = p_a/a`, `q = p_a (a−1)/a`.
pub fn dominant_root(model: &ModelSpec, a: Symbol) -> Result<f64> {
    let pa = model.p(a);
    if pa <= 0.0 || pa >= 1.0 {
        return Err(Error::DegenerateSymbol { symbol: a, reason: format!("p_a = {pa} is not in (0, 1)") });
    }
    let coeffs = coefficients(model, a);
    let g = coeffs.iter().fold(0, |g, &(k, _)| gcd(g, k));
    if g != 1 {
        return Err(Error::DegenerateSymbol {
            symbol: a,
            reason: format!("block lengths share the period {g}, so several roots have the top modulus"),
        });
    }
    let h = |x: f64| 1.0 - coeffs.iter().map(|&(k, c)| c * x.powi(-(k as i32))).sum::<f64>();
    let mut lo = coeffs.iter().map(|&(k, c)| c.powf(1.0 / k as f64)).fold(0.0, f64::max);
    let mut hi = 1.0;
    if h(lo) >= 0.0 {
        return Ok(lo);
    }
    debug_assert!(h(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `K_1 = B(z)/(z C'(z))` at `z = 1/r`, with `C(z) = Σ c_k z^k` and
/// `B(z) = Σ_{m≥1} (Σ_{k≥m} c_k) z^m`.
fn multiplier(coeffs: &[(usize, f64)], r: f64) -> f64 {
    let z = 1.0 / r;
    let kmax = coeffs.iter().map(|e| e.0).max().unwrap_or(0);
    let b: f64 = (1..=kmax)
        .map(|m| coeffs.iter().filter(|e| e.0 >= m).map(|e| e.1).sum::<f64>() * z.powi(m as i32))
        .sum();
    let zc: f64 = coeffs.iter().map(|&(k, c)| k as f64 * c * z.powi(k as i32)).sum();
    b / zc
}

/// `μ(a^n) = (1/ν) Σ_ℓ Σ_{j<ℓ} p_a q_a(ℓ) P(n − (ℓ − j))`: the block covering
/// time 0 has length `ℓ` and has already shown `j` letters.
pub fn mu_cylinder(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("cylinder length must be at least 1".into()));
    }
    let pa = model.p(a);
    if pa <= 0.0 {
        return Ok(0.0);
    }
    let pmf = model.block_pmf(a);
    let sol = cyl_prob_given_regen(model, a, n as usize);
    let p_at = |m: i64| if m <= 0 { 1.0 } else { sol.value(m as usize) };
    let mut total = 0.0;
    for &(len, q) in pmf.entries() {
        let inner: f64 = (1..=len as i64).map(|rem| p_at(n as i64 - rem)).sum();
        total += pa * q * inner;
    }
    Ok(total / model.nu())
}

fn block_parts(model: &ModelSpec, a: Symbol, n: u32) -> Result<(f64, EuclidDecomposition)> {
    let pa = model.p(a);
    if pa <= 0.0 {
        return Err(Error::DegeneratePattern { symbol: a, length: n });
    }
    Ok((pa, euclid_decomposition(n, a)?))
}

/// Block family: `μ(a^n) = p_a^{⌈n/a⌉} [s + 1 + (r − 1) p_a] / ν`.
pub fn block_mu_cylinder(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    let (p, d) = block_parts(model, a, n)?;
    Ok(p.powi(d.ceil_part as i32) * (d.s as f64 + 1.0 + (d.r as f64 - 1.0) * p) / model.nu())
}

/// `θ_1(n) = 1 − μ(a^{n+1}) / μ(a^n)`.
pub fn theta1_cylinder(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    let mu = mu_cylinder(model, a, n)?;
    if mu <= 0.0 {
        return Err(Error::DegeneratePattern { symbol: a, length: n });
    }
    Ok(1.0 - mu_cylinder(model, a, n + 1)? / mu)
}

/// Block family: `θ_1(n) = (1 − p_a) / (s + 1 + (r − 1) p_a)`.
pub fn block_theta1_cylinder(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    let (p, d) = block_parts(model, a, n)?;
    Ok((1.0 - p) / (d.s as f64 + 1.0 + (d.r as f64 - 1.0) * p))
}

/// `P_E(N ≥ k) = P(n + k − 1) / P(n)` for `k = 1..`, until the terms are
/// negligible or `k_max` entries have been produced.
fn entering_tail(model: &ModelSpec, a: Symbol, n: u32, k_max: Option<usize>) -> Result<Vec<f64>> {
    let pa = model.p(a);
    if pa <= 0.0 {
        return Err(Error::DegeneratePattern { symbol: a, length: n });
    }
    if k_max.is_none() && pa >= 1.0 {
        return Err(Error::DegenerateSymbol { symbol: a, reason: "p_a = 1: the run never ends".into() });
    }
    let coeffs = coefficients(model, a);
    let mut values = vec![1.0];
    extend(&mut values, &coeffs, n as usize);
    let pn = values[n as usize];
    if pn <= 0.0 || pn.is_nan() {
        return Err(Error::InvalidArgument(format!("P({n}) underflows")));
    }
    // continue on the scale P(·)/P(n)
    let mut norm: Vec<f64> = values.iter().map(|v| v / pn).collect();
    let below = 1.0 / pn;
    let mut out = vec![1.0];
    loop {
        if let Some(k) = k_max {
            if out.len() >= k {
                break;
            }
        } else if *out.last().unwrap() < 1e-18 && out.len() > 1 {
            break;
        }
        let m = norm.len();
        let v: f64 = coeffs.iter().map(|&(k, c)| if k >= m { c * below } else { c * norm[m - k] }).sum();
        norm.push(v);
        out.push(v);
    }
    Ok(out)
}

/// `P_E(N_n ≥ k)`: the cluster started at an entrance to `a^n` lasts at least
/// `k` occurrences. Equals 1 for `k ≤ 1`.
pub fn cluster_tail_cyl(model: &ModelSpec, a: Symbol, n: u32, k: u32) -> Result<f64> {
    if k <= 1 {
        entering_tail(model, a, n, Some(1))?;
        return Ok(1.0);
    }
    Ok(entering_tail(model, a, n, Some(k as usize))?[k as usize - 1])
}

/// Block family: `P_E(N_n ≥ k) = p_a^{⌈(k − s − 1)/a⌉}`, exponent 0 when `k ≤ s + 1`.
pub fn block_cluster_tail_cyl(model: &ModelSpec, a: Symbol, n: u32, k: u32) -> Result<f64> {
    let (p, d) = block_parts(model, a, n)?;
    let excess = k as i64 - d.s as i64 - 1;
    let exp = if excess <= 0 { 0 } else { (excess as u64).div_ceil(a as u64) };
    Ok(p.powi(exp as i32))
}

/// `(E_E(N_n), E_E(N_n²))` from the exact entering tail.
pub fn cluster_moments_entering_cyl(model: &ModelSpec, a: Symbol, n: u32) -> Result<(f64, f64)> {
    let tail = entering_tail(model, a, n, None)?;
    let mean = tail.iter().rev().sum();
    let second = tail.iter().enumerate().rev().map(|(j, t)| (2 * j + 1) as f64 * t).sum();
    Ok((mean, second))
}

/// `E_E(N_n) = Σ_{j≥0} P(n + j) / P(n)`; for the Smith family it tends to
/// `1/(1 − r)` as `n` grows.
pub fn cluster_mean_entering_cyl(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    Ok(cluster_moments_entering_cyl(model, a, n)?.0)
}

/// Block family: `E_E(N_n) = s + 1 + a p_a / (1 − p_a)`.
pub fn block_cluster_mean_entering_cyl(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    let (p, d) = block_parts(model, a, n)?;
    Ok(d.s as f64 + 1.0 + a as f64 * p / (1.0 - p))
}

/// Block family run after the entered block: `(E_{R_0}(N), E_{R_0}(N²)) =
/// (a p/(1−p), a² p (1+p)/(1−p)²)`.
pub fn block_regen_moments_cyl(model: &ModelSpec, a: Symbol) -> Result<(f64, f64)> {
    let p = model.p(a);
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::DegenerateSymbol { symbol: a, reason: format!("p_a = {p} is not in (0, 1)") });
    }
    let af = a as f64;
    Ok((af * p / (1.0 - p), af * af * p * (1.0 + p) / (1.0 - p).powi(2)))
}

/// Mean sojourn in `a^n`: `θ_1(n)/2 · (E_E(N²) + E_E(N))`.
pub fn sojourn_mean_cyl(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    let theta = theta1_cylinder(model, a, n)?;
    let (mean, second) = cluster_moments_entering_cyl(model, a, n)?;
    Ok(0.5 * theta * (second + mean))
}

/// Block family sojourn with `F = s + 1` deterministic.
pub fn block_sojourn_mean_cyl(model: &ModelSpec, a: Symbol, n: u32) -> Result<f64> {
    let (_, d) = block_parts(model, a, n)?;
    let (x, y) = block_regen_moments_cyl(model, a)?;
    let f = d.s as f64 + 1.0;
    let mean = f + x;
    let second = f * f + 2.0 * f * x + y;
    Ok(0.5 * block_theta1_cylinder(model, a, n)? * (second + mean))
}

/// `(1 − p_a)/(1 − r)`, the limit of `μ(a^n) ν / P(n)` for the Smith family.
pub fn smith_bracket_limit(model: &ModelSpec, a: Symbol) -> Result<f64> {
    let r = dominant_root(model, a)?;
    Ok((1.0 - model.p(a)) / (1.0 - r))
}
