//! The data-producing subcommands. Each returns the document it would write.

use regen_core::cylinders;
use regen_core::decay;
use regen_core::indices;
use regen_core::montecarlo::{self, HittingMethod};
use regen_core::oracle::{self, Conditioning};
use regen_core::simulate;
use regen_core::{BlockLawFamily, ModelSpec, Observable, RandomStream};

use crate::config::{need, ExperimentConfig, Start};
use crate::error::CliResult;
use crate::output::{cell, csv_document, fmt_g};

pub const INDICES_COLUMNS: [&str; 18] = [
    "level",
    "q",
    "e_a",
    "g_a",
    "theta1",
    "lemma_bound",
    "cluster_mean",
    "sojourn_mean",
    "oracle_theta_q_lower",
    "oracle_theta_q_upper",
    "oracle_cluster_mean_lower",
    "oracle_cluster_mean_upper",
    "mc_theta_q",
    "mc_theta_q_stderr",
    "mc_cluster_mean",
    "mc_cluster_mean_stderr",
    "mc_sojourn_mean",
    "mc_sojourn_mean_stderr",
];

pub const CYLINDER_COLUMNS: [&str; 9] =
    ["n", "s_n", "r_n", "mu", "theta1", "cluster_mean", "sojourn_mean", "ks_statistic", "ks_replicas"];

pub const DECAY_COLUMNS: [&str; 7] =
    ["lag", "c_recursion", "c_closed_form", "mc_estimate", "mc_stderr", "envelope", "limit"];

fn samples(cfg: &ExperimentConfig) -> u64 {
    cfg.samples.unwrap_or(0)
}

fn oracle_enabled(cfg: &ExperimentConfig, model: &ModelSpec) -> bool {
    model.is_finite_support() && cfg.oracle_budget() > 0
}

pub fn simulate(cfg: &ExperimentConfig, seed: u64) -> CliResult<String> {
    let model = cfg.model()?;
    let horizon = need(cfg.horizon, "horizon")?;
    let mut rs = RandomStream::new(seed, cfg.stream.unwrap_or(0));
    let tr = match cfg.start.unwrap_or(Start::Stationary) {
        Start::Stationary => simulate::simulate_stationary(&model, horizon, &mut rs),
        Start::Regeneration => simulate::simulate_from_regeneration(&model, horizon, &mut rs),
    };
    Ok(tr.to_text())
}

pub fn indices(cfg: &ExperimentConfig, seed: u64) -> CliResult<String> {
    let model = cfg.model()?;
    let levels = need(cfg.levels.as_ref(), "levels")?;
    let qs = cfg.q_values.clone().unwrap_or_else(|| vec![1]);
    let with_oracle = oracle_enabled(cfg, &model);
    let n = samples(cfg);
    let mut rows = Vec::new();
    for &a in levels {
        let obs = Observable::Exceedance { level: a };
        let theta = indices::theta1_exceedance(&model, a).ok();
        let feasible = theta.is_some();
        let cluster = if feasible { Some(indices::cluster_mean_entering(&model, a)?) } else { None };
        let sojourn = if feasible { Some(indices::sojourn_mean(&model, a)?) } else { None };
        let oracle_cluster = if feasible && with_oracle {
            Some(oracle::exact_cluster_moments(&model, &obs, Conditioning::Entering, cfg.k_max(), cfg.oracle_budget())?.mean)
        } else {
            None
        };
        let (mc_cluster, mc_sojourn) = if feasible && n > 0 {
            let ent = montecarlo::estimate_cluster_distribution(&model, &obs, Conditioning::Entering, 1, n, seed, cfg.cap())?;
            let sta = montecarlo::estimate_cluster_distribution(&model, &obs, Conditioning::Stationary, 1, n, seed, cfg.cap())?;
            (Some(ent.mean), Some(sta.mean))
        } else {
            (None, None)
        };
        for &q in &qs {
            let bound = indices::theta_q_bound(&model, &obs, q).ok();
            let oracle_tq =
                if feasible && with_oracle { Some(oracle::exact_theta_q(&model, &obs, q, cfg.oracle_budget())?) } else { None };
            let mc_tq = if feasible && n > 0 { Some(montecarlo::estimate_theta_q(&model, &obs, q, n, seed)?) } else { None };
            rows.push(vec![
                a.to_string(),
                q.to_string(),
                fmt_g(model.tail_e(a)),
                fmt_g(model.tail_g(a)),
                cell(theta),
                cell(bound),
                cell(cluster),
                cell(sojourn),
                cell(oracle_tq.as_ref().map(|b| b.lower)),
                cell(oracle_tq.as_ref().map(|b| b.upper)),
                cell(oracle_cluster.as_ref().map(|b| b.lower)),
                cell(oracle_cluster.as_ref().map(|b| b.upper)),
                cell(mc_tq.as_ref().map(|e| e.value)),
                cell(mc_tq.as_ref().map(|e| e.stderr)),
                cell(mc_cluster.as_ref().map(|e| e.value)),
                cell(mc_cluster.as_ref().map(|e| e.stderr)),
                cell(mc_sojourn.as_ref().map(|e| e.value)),
                cell(mc_sojourn.as_ref().map(|e| e.stderr)),
            ]);
        }
    }
    csv_document(&INDICES_COLUMNS, &rows)
}

pub fn cylinder(cfg: &ExperimentConfig, seed: u64) -> CliResult<String> {
    let model = cfg.model()?;
    let a = need(cfg.cylinder_symbol, "cylinder_symbol")?;
    let lengths = need(cfg.cylinder_lengths.as_ref(), "cylinder_lengths")?;
    let replicas = cfg.replicas.unwrap_or(0);
    let method = cfg.hitting_method.unwrap_or(HittingMethod::Accelerated);
    let mut rows = Vec::new();
    for &n in lengths {
        let d = cylinders::euclid_decomposition(n, a)?;
        let mu = cylinders::mu_cylinder(&model, a, n)?;
        let theta = cylinders::theta1_cylinder(&model, a, n).ok();
        let (cluster, sojourn) = match theta {
            Some(_) if model.p(a) < 1.0 => (
                Some(cylinders::cluster_mean_entering_cyl(&model, a, n)?),
                Some(cylinders::sojourn_mean_cyl(&model, a, n)?),
            ),
            _ => (None, None),
        };
        let ks = if theta.is_some() && replicas > 0 {
            let sample = montecarlo::estimate_hitting_scaled(&model, a, n, replicas, seed, method, cfg.step_cap())?;
            Some(montecarlo::ks_exponential(&sample.values))
        } else {
            None
        };
        rows.push(vec![
            n.to_string(),
            d.s.to_string(),
            d.r.to_string(),
            fmt_g(mu),
            cell(theta),
            cell(cluster),
            cell(sojourn),
            cell(ks),
            if ks.is_some() { replicas.to_string() } else { String::new() },
        ]);
    }
    csv_document(&CYLINDER_COLUMNS, &rows)
}

/// `p_1` when the model is the two-symbol block model, whose renewal
/// sequence has a closed form.
pub fn two_symbol_block_p1(model: &ModelSpec) -> Option<f64> {
    match (model.block_family(), model.support()) {
        (BlockLawFamily::Block, Some([1, 2])) => Some(model.p(1)),
        _ => None,
    }
}

pub fn decay(cfg: &ExperimentConfig, seed: u64) -> CliResult<String> {
    let model = cfg.model()?;
    let lags = cfg.lags.unwrap_or(50);
    let seq = decay::regen_correlation(&model, lags)?;
    let p1 = two_symbol_block_p1(&model);
    let n = samples(cfg);
    let mc = if n > 0 { Some(montecarlo::estimate_correlation(&model, lags, n, seed)?) } else { None };
    let mut rows = Vec::new();
    for (lag, &c) in seq.values.iter().enumerate() {
        let closed = p1.map(|p| decay::morse_closed_form(p, lag as u32)).transpose()?;
        let envelope = match p1 {
            Some(p) => Some(decay::morse_constants(p)?.1 * decay::psi_rate_bound(p, lag as u32)?),
            None => None,
        };
        let est = mc.as_ref().map(|v| &v[lag]);
        rows.push(vec![
            lag.to_string(),
            fmt_g(c),
            cell(closed),
            cell(est.map(|e| e.value)),
            cell(est.map(|e| e.stderr)),
            cell(envelope),
            fmt_g(seq.limit),
        ]);
    }
    csv_document(&DECAY_COLUMNS, &rows)
}
