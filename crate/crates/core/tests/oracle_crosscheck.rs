use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use regen_core::cylinders;
use regen_core::decay;
use regen_core::indices::{self, Observable};
use regen_core::model::{BlockLawFamily, LengthPmf, ModelSpec, SymbolLaw};
use regen_core::oracle::{self, Conditioning, SymbolConstraint as C, WindowEvent, DEFAULT_BUDGET};

fn block(p: &[f64]) -> ModelSpec {
    ModelSpec::block(SymbolLaw::from_probabilities(p).unwrap()).unwrap()
}

fn smith(p: &[f64]) -> ModelSpec {
    ModelSpec::smith(SymbolLaw::from_probabilities(p).unwrap()).unwrap()
}

fn smith_geometric_truncated(max: u32) -> ModelSpec {
    let (law, _) = SymbolLaw::geometric(0.5).unwrap().truncate(max).unwrap();
    ModelSpec::smith(law).unwrap()
}

fn table_model() -> ModelSpec {
    let mut lengths = BTreeMap::new();
    lengths.insert(1, LengthPmf::new([(1, 0.5), (3, 0.5)]).unwrap());
    lengths.insert(2, LengthPmf::new([(2, 0.7), (4, 0.3)]).unwrap());
    lengths.insert(4, LengthPmf::new([(1, 0.2), (5, 0.8)]).unwrap());
    let law = SymbolLaw::table([(1, 0.3), (2, 0.45), (4, 0.25)]).unwrap();
    ModelSpec::new(law, BlockLawFamily::Table(lengths)).unwrap()
}

fn models() -> Vec<ModelSpec> {
    vec![
        block(&[0.5, 0.3, 0.2]),
        block(&[0.5, 0.1, 0.4]),
        smith(&[0.2, 0.3, 0.1, 0.4]),
        smith_geometric_truncated(8),
        ModelSpec::iid(SymbolLaw::from_probabilities(&[0.4, 0.35, 0.25]).unwrap()).unwrap(),
        table_model(),
    ]
}

fn prob(model: &ModelSpec, ev: &WindowEvent) -> oracle::ProbabilityBounds {
    oracle::exact_window_probability(model, ev, DEFAULT_BUDGET).unwrap()
}

#[test]
fn marginals_and_tails_match_oracle() {
    for m in models() {
        for &a in m.support().unwrap() {
            let b = prob(&m, &WindowEvent::new().symbol(0, C::Eq(a)));
            assert!(b.contains(m.stationary_marginal(a), 1e-14), "{a}: {b:?}");
            let g = prob(&m, &WindowEvent::new().symbol(3, C::Gt(a)));
            assert!(g.contains(m.tail_g(a), 1e-14));
            assert!(b.width() <= 1e-12);
        }
        let r = prob(&m, &WindowEvent::new().regeneration(0, true));
        assert!(r.contains(m.regen_prob(), 1e-14));
    }
}

#[test]
fn block_tail_example() {
    let m = block(&[0.5, 0.3, 0.2]);
    assert_abs_diff_eq!(m.tail_g(1), 1.2 / 1.7, epsilon = 1e-15);
    assert_abs_diff_eq!(m.stationary_marginal(2), 0.6 / 1.7, epsilon = 1e-15);
}

#[test]
fn iid_pairs_are_products() {
    let m = ModelSpec::iid(SymbolLaw::from_probabilities(&[0.4, 0.35, 0.25]).unwrap()).unwrap();
    for a in 1..=3 {
        for b in 1..=3 {
            let ev = WindowEvent::new().symbol(0, C::Eq(a)).symbol(1, C::Eq(b));
            assert!(prob(&m, &ev).contains(m.p(a) * m.p(b), 1e-15));
        }
    }
}

#[test]
fn smith_exit_probability_matches_theta_times_g() {
    let m = smith_geometric_truncated(8);
    let ev = WindowEvent::new().symbol(0, C::Gt(2)).symbol(1, C::Le(2));
    let expected = indices::theta1_exceedance(&m, 2).unwrap() * m.tail_g(2);
    let b = prob(&m, &ev);
    assert!(b.contains(expected, 1e-10), "{b:?} vs {expected}");
}

#[test]
fn theta1_and_reciprocal_identity_against_oracle() {
    for m in models() {
        let max = m.max_symbol().unwrap();
        for a in 1..max {
            let obs = Observable::Exceedance { level: a };
            let theta = indices::theta1_exceedance(&m, a).unwrap();
            let exact = oracle::exact_theta_q(&m, &obs, 1, DEFAULT_BUDGET).unwrap();
            assert!(exact.contains(theta, 1e-10), "level {a}: {exact:?} vs {theta}");
            let mean = indices::cluster_mean_entering(&m, a).unwrap();
            assert_abs_diff_eq!(theta * mean, 1.0, epsilon = 1e-12);
            let cl = oracle::exact_cluster_moments(&m, &obs, Conditioning::Entering, 300, DEFAULT_BUDGET).unwrap();
            assert!(cl.mean.contains(mean, 1e-9), "level {a}: {:?} vs {mean}", cl.mean);
        }
    }
}

#[test]
fn cluster_moments_against_oracle() {
    for m in models() {
        let max = m.max_symbol().unwrap();
        for a in 1..max {
            let obs = Observable::Exceedance { level: a };
            let stats = indices::cluster_statistics(&m, a).unwrap();
            let ent = oracle::exact_cluster_moments(&m, &obs, Conditioning::Entering, 400, DEFAULT_BUDGET).unwrap();
            assert!(ent.second_moment.contains(stats.second_moment_entering, 1e-8), "{a}: {:?} vs {}", ent.second_moment, stats.second_moment_entering);
            let reg = oracle::exact_cluster_moments(&m, &obs, Conditioning::Regeneration, 400, DEFAULT_BUDGET).unwrap();
            assert!(reg.mean.contains(stats.mean_regen, 1e-9));
            assert!(reg.second_moment.contains(stats.second_moment_regen, 1e-8));
            let soj = oracle::exact_cluster_moments(&m, &obs, Conditioning::Stationary, 400, DEFAULT_BUDGET).unwrap();
            assert!(soj.mean.contains(stats.sojourn_mean, 1e-9), "{a}: {:?} vs {}", soj.mean, stats.sojourn_mean);
        }
    }
}

#[test]
fn entering_law_against_oracle() {
    let m = table_model();
    let law = indices::cluster_distribution_entering(&m, 1, 40).unwrap();
    let ent = oracle::exact_cluster_moments(&m, &Observable::Exceedance { level: 1 }, Conditioning::Entering, 40, DEFAULT_BUDGET).unwrap();
    let mut tail = 1.0;
    for (k, pk) in law.iter().enumerate().skip(1) {
        assert!(ent.tail[k - 1].contains(tail, 1e-12), "k={k}");
        tail -= pk;
    }
}

#[test]
fn theta_q_lemma_bound_and_monotonicity() {
    for m in models() {
        let max = m.max_symbol().unwrap();
        for a in 1..max {
            let obs = Observable::Exceedance { level: a };
            let theta1 = oracle::exact_theta_q(&m, &obs, 1, DEFAULT_BUDGET).unwrap().midpoint();
            let mut prev = 1.0;
            for q in 1..=8 {
                let tq = indices::theta_q_exact_small(&m, &obs, q, DEFAULT_BUDGET).unwrap();
                assert!(tq.upper <= prev + 1e-12);
                prev = tq.upper;
                let lhs = (1.0 - tq.midpoint() / theta1).abs();
                assert!(lhs <= indices::theta_q_bound(&m, &obs, q).unwrap() + 1e-10);
            }
        }
    }
}

#[test]
fn iid_theta_q_closed_form() {
    let m = ModelSpec::iid(SymbolLaw::from_probabilities(&[0.4, 0.35, 0.25]).unwrap()).unwrap();
    let e = m.tail_e(2);
    for q in 1..=6 {
        let b = oracle::exact_theta_q(&m, &Observable::Exceedance { level: 2 }, q, DEFAULT_BUDGET).unwrap();
        assert!(b.contains((1.0 - e).powi(q as i32), 1e-13));
    }
}

#[test]
fn cylinder_mu_and_theta_against_oracle() {
    for m in models() {
        for &a in m.support().unwrap() {
            for n in 1..=12u32 {
                let ev = WindowEvent::new().symbols(0, n as i64 - 1, C::Eq(a));
                let mu = cylinders::mu_cylinder(&m, a, n).unwrap();
                assert!(prob(&m, &ev).contains(mu, 1e-13), "a={a} n={n}");
                let obs = Observable::Cylinder { symbol: a, length: n };
                let t = oracle::exact_theta_q(&m, &obs, 1, DEFAULT_BUDGET).unwrap();
                let theta = cylinders::theta1_cylinder(&m, a, n).unwrap();
                assert!(t.contains(theta, 1e-10), "a={a} n={n}: {t:?} vs {theta}");
                let given = WindowEvent::new().regeneration(0, true);
                let pr = prob(&m, &ev.clone().given(given));
                let rec = cylinders::cyl_prob_given_regen(&m, a, n as usize).value(n as usize);
                assert!(pr.contains(rec, 1e-12));
            }
        }
    }
}

#[test]
fn cylinder_theta_q_is_flat_up_to_the_pattern_length() {
    // a return within n steps of an occurrence needs X_n = a
    let m = smith(&[0.2, 0.3, 0.1, 0.4]);
    let obs = Observable::Cylinder { symbol: 2, length: 3 };
    let t1 = oracle::exact_theta_q(&m, &obs, 1, DEFAULT_BUDGET).unwrap();
    for q in 2..=3 {
        let tq = oracle::exact_theta_q(&m, &obs, q, DEFAULT_BUDGET).unwrap();
        assert!((tq.midpoint() - t1.midpoint()).abs() < 1e-12);
    }
    let t4 = oracle::exact_theta_q(&m, &obs, 4, DEFAULT_BUDGET).unwrap();
    assert!(t4.upper < t1.lower);
}

#[test]
fn block_cylinder_cluster_mean_is_five() {
    let m = block(&[0.5, 0.1, 0.4]);
    let obs = Observable::Cylinder { symbol: 3, length: 7 };
    let cl = oracle::exact_cluster_moments(&m, &obs, Conditioning::Entering, 400, DEFAULT_BUDGET).unwrap();
    assert!(cl.mean.lower >= 5.0 - 1e-9 && cl.mean.upper <= 5.0 + 1e-9, "{:?}", cl.mean);
    for k in 1..=30 {
        let exact = cylinders::block_cluster_tail_cyl(&m, 3, 7, k).unwrap();
        assert!(cl.tail[k as usize - 1].contains(exact, 1e-13));
    }
    let soj = oracle::exact_cluster_moments(&m, &obs, Conditioning::Stationary, 400, DEFAULT_BUDGET).unwrap();
    assert!(soj.mean.contains(cylinders::sojourn_mean_cyl(&m, 3, 7).unwrap(), 1e-9));
    let reg = oracle::exact_cluster_moments(&m, &Observable::Cylinder { symbol: 3, length: 3 }, Conditioning::Regeneration, 400, DEFAULT_BUDGET).unwrap();
    let (x, y) = cylinders::block_regen_moments_cyl(&m, 3).unwrap();
    let p = m.p(3);
    // the run from a regeneration: N = 1 + a G' when the first block is an a-block
    assert!(reg.mean.contains(p * (1.0 + x), 1e-9));
    assert!(reg.second_moment.contains(p * (1.0 + 2.0 * x + y), 1e-8));
}

#[test]
fn smith_cylinder_cluster_is_geometric_in_the_limit() {
    let m = smith(&[0.5, 0.3, 0.2]);
    let r = cylinders::dominant_root(&m, 2).unwrap();
    let mean = cylinders::cluster_mean_entering_cyl(&m, 2, 300).unwrap();
    assert_abs_diff_eq!(mean, 1.0 / (1.0 - r), epsilon = 1e-9);
    let soj = cylinders::sojourn_mean_cyl(&m, 2, 300).unwrap();
    assert_abs_diff_eq!(soj, mean, epsilon = 1e-8);
    let th = cylinders::theta1_cylinder(&m, 2, 300).unwrap();
    assert!((th - (1.0 - r)).abs() < 1e-5);
}

#[test]
fn smith_bracket_limit() {
    let m = smith(&[0.5, 0.3, 0.2]);
    let limit = cylinders::smith_bracket_limit(&m, 2).unwrap();
    let sol = cylinders::cyl_prob_given_regen(&m, 2, 300);
    let n = 300;
    let ratio = cylinders::mu_cylinder(&m, 2, n).unwrap() * m.nu() / sol.value(n as usize);
    assert_abs_diff_eq!(ratio, limit, epsilon = 1e-9);
}

#[test]
fn renewal_sequence_against_oracle() {
    for m in [block(&[0.2, 0.5, 0.3]), smith(&[0.2, 0.3, 0.1, 0.4]), table_model()] {
        let c = decay::regen_correlation(&m, 15).unwrap();
        for n in 0..=15 {
            let ev = WindowEvent::new().regeneration(n, true).given(WindowEvent::new().regeneration(0, true));
            assert!(prob(&m, &ev).contains(c.values[n as usize], 1e-12), "n={n}");
        }
    }
}

#[test]
fn psi_witnesses() {
    let (law, _) = SymbolLaw::geometric(0.5).unwrap().truncate(9).unwrap();
    let blk = ModelSpec::block(law.clone()).unwrap();
    for a in 2..=9 {
        let w = decay::block_psi_witness(&blk, a, DEFAULT_BUDGET).unwrap();
        assert!(w.lower >= 1.0 - 1e-12, "{a}: {w:?}");
    }
    let sm = ModelSpec::smith(law).unwrap();
    for a in 3..=9 {
        for n in 0..a.min(5) {
            let w = decay::smith_psi_witness(&sm, a, n, DEFAULT_BUDGET).unwrap();
            assert!(w.lower >= 1.0 / a as f64 - 1e-12, "a={a} n={n}: {w:?}");
        }
    }
}

#[test]
fn tiling_enumerator_agrees_with_transfer() {
    let events = [
        WindowEvent::new().symbol(0, C::Gt(1)).symbol(1, C::Le(1)),
        WindowEvent::new().symbol(-2, C::Ne(2)).symbols(-1, 2, C::Eq(2)).regeneration(3, false),
        WindowEvent::new().regeneration(0, true).symbol(2, C::Eq(4)).given(WindowEvent::new().symbol(0, C::Le(2))),
    ];
    for m in models() {
        for ev in &events {
            let a = prob(&m, ev);
            let b = oracle::enumerate_tilings(&m, ev, 50_000_000).unwrap();
            assert!((a.midpoint() - b.midpoint()).abs() < 1e-12, "{a:?} vs {b:?}");
            assert!(b.upper - b.lower <= 1.0 - b.enumerated_mass + 1e-12);
        }
    }
}

#[test]
fn hitting_survival_first_steps() {
    let m = block(&[0.5, 0.1, 0.4]);
    let s = oracle::exact_hitting_survival(&m, 3, 2, 5, DEFAULT_BUDGET).unwrap();
    assert_eq!(s[0].lower, 1.0);
    // P(τ > 1) = 1 − P(X_1 = X_2 = 3)
    let mu = cylinders::mu_cylinder(&m, 3, 2).unwrap();
    assert!(s[1].contains(1.0 - mu, 1e-14));
    for w in s.windows(2) {
        assert!(w[1].upper <= w[0].upper + 1e-15);
    }
}

#[test]
fn degenerate_cases() {
    let m = block(&[0.5, 0.0, 0.5]);
    assert!(oracle::exact_theta_q(&m, &Observable::Cylinder { symbol: 2, length: 2 }, 1, DEFAULT_BUDGET).is_err());
    let geo = ModelSpec::smith(SymbolLaw::geometric(0.5).unwrap()).unwrap();
    assert!(oracle::exact_window_probability(&geo, &WindowEvent::new().symbol(0, C::Eq(1)), DEFAULT_BUDGET).is_err());
}
