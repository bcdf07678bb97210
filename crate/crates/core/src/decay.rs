//! Renewal sequence of regenerations, `c_n = P(R_n | R_0)`.
//!
//! With the block-length law `L(k) = Σ_a p_a q_a(k)`, the sequence solves
//! `c_n = Σ_k L(k) c_{n−k}`, `c_0 = 1`, and converges to `1/ν`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Symbol};
use crate::oracle::{self, ProbabilityBounds, SymbolConstraint, WindowEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSequence {
    /// `c_0..=c_{n_max}`.
    pub values: Vec<f64>,
    /// `1/ν`.
    pub limit: f64,
}

/// Law of a block length, `L(k)` for `k = 0..=max`.
pub fn block_length_law(model: &ModelSpec) -> Result<Vec<f64>> {
    let support = model.require_finite("the renewal sequence")?;
    let mut law = Vec::new();
    for &a in support {
        for &(k, q) in model.block_pmf(a).entries() {
            if law.len() <= k as usize {
                law.resize(k as usize + 1, 0.0);
            }
            law[k as usize] += model.p(a) * q;
        }
    }
    Ok(law)
}

pub fn regen_correlation(model: &ModelSpec, n_max: usize) -> Result<CorrelationSequence> {
    let law = block_length_law(model)?;
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(1.0);
    for n in 1..=n_max {
        let c = (1..law.len().min(n + 1)).map(|k| law[k] * values[n - k]).sum();
        values.push(c);
    }
    Ok(CorrelationSequence { values, limit: model.regen_prob() })
}

fn check_p1(p1: f64) -> Result<()> {
    if p1 > 0.0 && p1 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p1 = {p1} is not in (0, 1)")))
    }
}

/// `(K_1, K_2) = (1/(2 − p_1), (1 − p_1)/(2 − p_1))`.
pub fn morse_constants(p1: f64) -> Result<(f64, f64)> {
    check_p1(p1)?;
    Ok((1.0 / (2.0 - p1), (1.0 - p1) / (2.0 - p1)))
}

/// Two-symbol block model: `c_n = K_1 + K_2 (p_1 − 1)^n`.
pub fn morse_closed_form(p1: f64, n: u32) -> Result<f64> {
    let (k1, k2) = morse_constants(p1)?;
    Ok(k1 + k2 * (p1 - 1.0).powi(n as i32))
}

/// Exponential envelope `(1 − p_1)^n`; `|c_n/K_1 − 1| ≤ (K_2/K_1)(1 − p_1)^n`.
pub fn psi_rate_bound(p1: f64, n: u32) -> Result<f64> {
    check_p1(p1)?;
    Ok((1.0 - p1).powi(n as i32))
}

/// Fibonacci numbers with `F_0 = F_1 = 1`.
pub fn fibonacci(n: usize) -> Vec<f64> {
    let mut f = vec![1.0, 1.0];
    while f.len() <= n {
        let k = f.len();
        f.push(f[k - 1] + f[k - 2]);
    }
    f.truncate(n + 1);
    f
}

/// `(√5 − 1)/2`.
pub fn golden_p1() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `P(X_{a−1} = a | R_0, X_0 = a)`: 1 in the block family.
pub fn block_psi_witness(model: &ModelSpec, a: Symbol, budget: u64) -> Result<ProbabilityBounds> {
    let given = WindowEvent::new().regeneration(0, true).symbol(0, SymbolConstraint::Eq(a));
    let ev = WindowEvent::new().symbol(a as i64 - 1, SymbolConstraint::Eq(a)).given(given);
    oracle::exact_window_probability(model, &ev, budget)
}

/// `P(X_{n+1} = a | X_{−1} ≠ a, X_0 = a)`: at least `1/a` in the Smith
/// family when `a > n`.
pub fn smith_psi_witness(model: &ModelSpec, a: Symbol, n: u32, budget: u64) -> Result<ProbabilityBounds> {
    let given = WindowEvent::new().symbol(-1, SymbolConstraint::Ne(a)).symbol(0, SymbolConstraint::Eq(a));
    let ev = WindowEvent::new().symbol(n as i64 + 1, SymbolConstraint::Eq(a)).given(given);
    oracle::exact_window_probability(model, &ev, budget)
}
