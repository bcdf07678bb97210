use regen_core::cylinders;
use regen_core::decay;
use regen_core::indices::{self, Observable};
use regen_core::model::{ModelSpec, SymbolLaw};
use regen_core::montecarlo::{self, HittingMethod, DEFAULT_CAP};
use regen_core::oracle::{self, Conditioning, DEFAULT_BUDGET};
use regen_core::simulate::{self, BlockSampler, RandomStream};
use regen_core::Error;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn block(p: &[f64]) -> ModelSpec {
    ModelSpec::block(SymbolLaw::from_probabilities(p).unwrap()).unwrap()
}

fn smith(p: &[f64]) -> ModelSpec {
    ModelSpec::smith(SymbolLaw::from_probabilities(p).unwrap()).unwrap()
}

fn smith_geo() -> ModelSpec {
    ModelSpec::smith(SymbolLaw::geometric(0.5).unwrap()).unwrap()
}

/// Goodness-of-fit p-value of `counts` against `probs` (cells with tiny
/// expectations pooled into the last cell).
fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e < 20.0 {
            pool_obs += c as f64;
            pool_exp += e;
            continue;
        }
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        cells += 1;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn smith_long_block_frequency() {
    let m = smith(&[0.2, 0.3, 0.1, 0.4]);
    let s = BlockSampler::new(&m);
    let mut rs = RandomStream::new(11, 0);
    for a in 2..=4u32 {
        let n = 100_000;
        let long = (0..n).filter(|_| s.draw_length(a, &mut rs) == a + 1).count() as f64;
        let p = 1.0 / a as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((long / n as f64 - p).abs() < 3.0 * se, "a={a}");
    }
    let b = simulate::sample_block(&m, &mut rs);
    assert!(b.length == 1 || b.length == b.symbol + 1);
}

#[test]
fn regeneration_frequency_is_one_over_nu() {
    let m = block(&[0.5, 0.5]);
    let t = 1_000_000;
    let traj = simulate::simulate_from_regeneration(&m, t, &mut RandomStream::new(5, 0));
    let frac = traj.regeneration_times.iter().filter(|&&x| x < t).count() as f64 / t as f64;
    // renewal CLT: var(count) ≈ T σ² / ν³
    let (nu, var): (f64, f64) = (1.5, 0.25);
    let se = (var / nu.powi(3) / t as f64).sqrt();
    assert!((frac - 2.0 / 3.0).abs() < 3.0 * se, "{frac}");
}

#[test]
fn stationary_marginal_is_shift_invariant() {
    let m = smith(&[0.2, 0.3, 0.1, 0.4]);
    let s = BlockSampler::new(&m);
    let probs: Vec<f64> = (1..=4).map(|a| m.stationary_marginal(a)).collect();
    let mut buf = Vec::new();
    for (stream, t) in [0usize, 7, 101].into_iter().enumerate() {
        let mut rs = RandomStream::new(99, stream as u64);
        let mut counts = [0u64; 4];
        for _ in 0..100_000 {
            s.fill_stationary(t + 1, &mut rs, &mut buf);
            counts[buf[t] as usize - 1] += 1;
        }
        assert!(chi_square_p(&counts, &probs) > 0.001, "t={t}: {counts:?}");
    }
}

#[test]
fn block_law_stationary_marginal() {
    let m = block(&[0.5, 0.3, 0.2]);
    let probs: Vec<f64> = (1..=3).map(|a| m.stationary_marginal(a)).collect();
    let mut counts = [0u64; 3];
    for i in 0..100_000u64 {
        let tr = simulate::simulate_stationary(&m, 1, &mut RandomStream::new(3, i));
        counts[tr.symbols[0] as usize - 1] += 1;
    }
    assert!(chi_square_p(&counts, &probs) > 0.001);
}

#[test]
fn iid_stationary_paths_are_iid_draws() {
    let m = ModelSpec::iid(SymbolLaw::from_probabilities(&[0.4, 0.35, 0.25]).unwrap()).unwrap();
    let tr = simulate::simulate_stationary(&m, 100_000, &mut RandomStream::new(8, 0));
    assert_eq!(tr.regeneration_times.len(), 100_001);
    let mut counts = [0u64; 3];
    tr.symbols.iter().for_each(|&s| counts[s as usize - 1] += 1);
    assert!(chi_square_p(&counts, &[0.4, 0.35, 0.25]) > 0.001);
}

#[test]
fn consecutive_blocks_are_independent() {
    let m = smith(&[0.3, 0.3, 0.4]);
    let tr = simulate::simulate_from_regeneration(&m, 400_000, &mut RandomStream::new(21, 0));
    let mut table = [[0u64; 3]; 3];
    for w in tr.regeneration_times.windows(2) {
        if w[1] < tr.len() {
            table[tr.symbols[w[0]] as usize - 1][tr.symbols[w[1]] as usize - 1] += 1;
        }
    }
    let n: u64 = table.iter().flatten().sum();
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..3).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let mut stat = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let e = rows[i] * cols[j] / n as f64;
            stat += (table[i][j] as f64 - e).powi(2) / e;
        }
    }
    let p = 1.0 - ChiSquared::new(4.0).unwrap().cdf(stat);
    assert!(p > 0.001, "{table:?}");
}

#[test]
fn smith_exit_frequency() {
    let m = smith_geo();
    let s = BlockSampler::new(&m);
    let mut rs = RandomStream::new(4, 0);
    let mut buf = Vec::new();
    let n = 400_000;
    let mut hits = 0u64;
    for _ in 0..n {
        s.fill_stationary(2, &mut rs, &mut buf);
        if buf[0] > 2 && buf[1] <= 2 {
            hits += 1;
        }
    }
    let p = 0.09375;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
}

#[test]
fn theta_estimates() {
    let est = montecarlo::estimate_theta_q(&smith_geo(), &Observable::Exceedance { level: 2 }, 1, 1_000_000, 17).unwrap();
    assert!(est.agrees_with(0.375, 3.0), "{est:?}");
    let m = block(&[0.5, 0.1, 0.4]);
    let est = montecarlo::estimate_theta_q(&m, &Observable::Cylinder { symbol: 3, length: 7 }, 1, 1_000_000, 18).unwrap();
    assert!(est.agrees_with(0.2, 3.0), "{est:?}");
}

#[test]
fn cluster_estimates() {
    let m = block(&[0.5, 0.1, 0.4]);
    let cyl = Observable::Cylinder { symbol: 3, length: 7 };
    let ent = montecarlo::estimate_cluster_distribution(&m, &cyl, Conditioning::Entering, 10, 200_000, 3, DEFAULT_CAP).unwrap();
    assert!(ent.mean.agrees_with(5.0, 3.0), "{:?}", ent.mean);
    assert_eq!(ent.truncated_fraction, 0.0);
    let soj = montecarlo::estimate_cluster_distribution(&m, &cyl, Conditioning::Stationary, 10, 400_000, 4, DEFAULT_CAP).unwrap();
    let exact_soj = cylinders::sojourn_mean_cyl(&m, 3, 7).unwrap();
    assert!(soj.mean.agrees_with(exact_soj, 3.0), "{:?} vs {exact_soj}", soj.mean);
    assert!(exact_soj < 5.0 && soj.mean.value < ent.mean.value);

    let iid = ModelSpec::iid(SymbolLaw::from_probabilities(&[0.4, 0.35, 0.25]).unwrap()).unwrap();
    let lvl = Observable::Exceedance { level: 1 };
    let e = iid.tail_e(1);
    let ent = montecarlo::estimate_cluster_distribution(&iid, &lvl, Conditioning::Entering, 6, 200_000, 5, DEFAULT_CAP).unwrap();
    for (k, t) in ent.tail.iter().enumerate() {
        assert!(t.agrees_with(e.powi(k as i32), 3.5), "k={}: {t:?}", k + 1);
    }

    let sm = smith_geo();
    let soj = montecarlo::estimate_cluster_distribution(&sm, &Observable::Exceedance { level: 2 }, Conditioning::Stationary, 4, 400_000, 6, DEFAULT_CAP).unwrap();
    let exact = indices::sojourn_mean(&sm, 2).unwrap();
    assert!(soj.mean.agrees_with(exact, 3.0), "{:?} vs {exact}", soj.mean);
}

#[test]
fn truncation_is_reported() {
    let m = block(&[0.05, 0.95]);
    let est = montecarlo::estimate_cluster_distribution(&m, &Observable::Exceedance { level: 1 }, Conditioning::Entering, 2, 1000, 1, 20).unwrap();
    assert!(est.truncated_fraction > 0.1);
    assert!(est.mean.value <= 20.0);
}

#[test]
fn correlation_estimates() {
    let m = block(&[0.5, 0.5]);
    let est = montecarlo::estimate_correlation(&m, 30, 1_000_000, 9).unwrap();
    assert!(est[2].agrees_with(0.75, 3.0), "{:?}", est[2]);
    assert!(est[30].agrees_with(m.regen_prob(), 3.0));
    let three = block(&[0.2, 0.5, 0.3]);
    let exact = decay::regen_correlation(&three, 12).unwrap();
    let est = montecarlo::estimate_correlation(&three, 12, 300_000, 10).unwrap();
    for (n, e) in est.iter().enumerate().skip(1) {
        assert!(e.agrees_with(exact.values[n], 3.5), "n={n}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = smith(&[0.2, 0.3, 0.1, 0.4]);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                montecarlo::estimate_theta_q(&m, &Observable::Exceedance { level: 2 }, 2, 20_000, 1).unwrap(),
                montecarlo::estimate_cluster_distribution(&m, &Observable::Exceedance { level: 2 }, Conditioning::Entering, 3, 5_000, 1, DEFAULT_CAP).unwrap(),
                montecarlo::estimate_hitting_scaled(&m, 4, 3, 1000, 1, HittingMethod::Accelerated, 1 << 30).unwrap(),
            )
        })
    };
    assert_eq!(run(1), run(4));
}

/// Largest gap between the empirical CDF of raw hitting times and the exact one.
fn cdf_gap(sample: &montecarlo::HittingSample, survival: &[oracle::ProbabilityBounds]) -> f64 {
    let mut taus: Vec<u64> = sample.values.iter().map(|v| (v / sample.scale).round() as u64).collect();
    taus.sort();
    let n = taus.len() as f64;
    let mut gap: f64 = 0.0;
    for (t, s) in survival.iter().enumerate() {
        let below = taus.partition_point(|&x| x <= t as u64) as f64 / n;
        gap = gap.max((below - (1.0 - s.midpoint())).abs());
    }
    gap
}

#[test]
fn hitting_samplers_match_exact_law() {
    // DKW at level 1e-3 for 20 000 draws
    let tol = ((2.0f64 / 1e-3).ln() / 40_000.0).sqrt();
    let m = block(&[0.5, 0.1, 0.4]);
    let survival = oracle::exact_hitting_survival(&m, 3, 7, 600, DEFAULT_BUDGET).unwrap();
    for method in [HittingMethod::Accelerated, HittingMethod::Scanning] {
        let s = montecarlo::estimate_hitting_scaled(&m, 3, 7, 20_000, 7, method, 1 << 40).unwrap();
        assert!(cdf_gap(&s, &survival) < tol, "{method:?}");
    }
    let sm = smith(&[0.5, 0.3, 0.2]);
    let survival = oracle::exact_hitting_survival(&sm, 2, 6, 3000, DEFAULT_BUDGET).unwrap();
    for method in [HittingMethod::Accelerated, HittingMethod::Scanning] {
        let s = montecarlo::estimate_hitting_scaled(&sm, 2, 6, 20_000, 8, method, 1 << 40).unwrap();
        assert!(cdf_gap(&s, &survival) < tol, "{method:?}");
    }
}

#[test]
fn hitting_step_cap_is_reported() {
    let m = smith(&[0.5, 0.3, 0.2]);
    match montecarlo::estimate_hitting_scaled(&m, 2, 12, 200, 1, HittingMethod::Scanning, 5) {
        Err(Error::BudgetExceeded { cap: 5, exceeded, replicas: 200 }) => assert!(exceeded > 0),
        other => panic!("unexpected {other:?}"),
    }
}
