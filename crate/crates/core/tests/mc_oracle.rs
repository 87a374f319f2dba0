//! The Monte Carlo oracle: path decomposition against a quadratic
//! reference, simulator statistics, and estimator behaviour.

use levy_dd::drawdown_laws::{self as laws, ConditionSpec};
use levy_dd::mc_oracle::{
    decompose, decompose_brute_force, estimate_law, estimate_laws, simulate_path, simulate_records,
    McQuery, PathRecord, SimConfig, SimMode,
};
use levy_dd::{Law, LevyModel, ScaleTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 50-step walk on a coarse lattice (so ties are common) with occasional
/// jumps recorded as two points at the same time.
fn random_path(rng: &mut ChaCha8Rng) -> PathRecord {
    let (mut times, mut values, mut jumps) = (vec![0.0], vec![0.0], Vec::new());
    let (mut t, mut x) = (0.0, 0.0);
    for _ in 0..50 {
        t += 0.1;
        x += 0.25 * rng.gen_range(-4i32..=4) as f64;
        times.push(t);
        values.push(x);
        if rng.gen_bool(0.15) {
            let size = -0.25 * rng.gen_range(1i32..=8) as f64;
            x += size;
            times.push(t);
            values.push(x);
            jumps.push((t, size));
        }
    }
    PathRecord {
        times,
        values,
        jumps,
        end_time: t,
        censored: false,
    }
}

#[test]
fn decomposition_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut with_jumps = 0;
    for _ in 0..100 {
        let path = random_path(&mut rng);
        with_jumps += usize::from(!path.jumps.is_empty());
        for d in [0.25, 0.6, 1.0, 2.5, 10.0] {
            assert_eq!(
                decompose(&path, d).unwrap(),
                decompose_brute_force(&path, d).unwrap()
            );
        }
    }
    assert!(with_jumps > 50);
}

#[test]
fn decomposition_invariants_on_simulated_paths() {
    let model = LevyModel::exp_jump_diffusion(0.2, 0.9, 1.0, 0.7).unwrap();
    let config = SimConfig::new(model, 0.5, 1e-2, 2000, 5).unwrap();
    for r in simulate_records(&config, 0, 2000).unwrap() {
        assert!(r.sup >= 0.0 && r.inf <= 0.0);
        let pieces = [
            r.mdd_pre_sup,
            r.mdd_post_sup,
            r.mdd_post_inf,
            r.mdd_intermediate.unwrap_or(0.0),
        ];
        for p in pieces {
            assert!(p >= 0.0 && p <= r.mdd_total);
        }
        assert!(r.mdd_total == r.mdd_pre_sup.max(r.mdd_post_sup));
        assert!(r.sup - r.inf >= r.mdd_total);
        assert!(r.sup_post_inf >= r.inf && r.sup_post_inf <= r.sup);
        assert_eq!(r.mdd_intermediate.is_some(), r.h_inf < r.h_sup);
        match (r.alpha_d, r.kappa) {
            (Some(alpha), Some(kappa)) => {
                assert!(kappa <= alpha && r.mdd_total > 1.0);
                assert!(r.sup_at_alpha.unwrap() <= r.sup);
            }
            (None, None) => assert!(r.mdd_total <= 1.0),
            other => panic!("alpha and kappa disagree: {other:?}"),
        }
    }
}

#[test]
fn brownian_increments_are_gaussian() {
    let (mu, sigma) = (0.3, 0.8);
    let config =
        SimConfig::new(LevyModel::brownian(mu, sigma).unwrap(), 0.5, 1e-2, 200, 11).unwrap();
    let (mut n, mut sum, mut sum_sq) = (0.0, 0.0, 0.0);
    for i in 0..200 {
        let p = simulate_path(&config, i);
        for k in 1..p.values.len() {
            let dt = p.times[k] - p.times[k - 1];
            if dt > 0.0 {
                let z = (p.values[k] - p.values[k - 1] - mu * dt) / (sigma * dt.sqrt());
                n += 1.0;
                sum += z;
                sum_sq += z * z;
            }
        }
    }
    assert!(n > 10_000.0);
    let mean = sum / n;
    let var = sum_sq / n - mean * mean;
    assert!(mean.abs() < 5.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 5.0 * (2.0 / n).sqrt(), "var {var}");
}

#[test]
fn jump_counts_and_sizes_match_the_model() {
    // rate 2 over an Exp(1/2) horizon: E N = 4, Var N = 4 + 16
    let model = LevyModel::exp_jump_diffusion(0.1, 0.5, 2.0, 0.5).unwrap();
    let n_paths = 20_000;
    let config = SimConfig::new(model, 0.5, 1e-2, n_paths, 3).unwrap();
    let (mut count, mut size_sum, mut horizon) = (0.0, 0.0, 0.0);
    for i in 0..n_paths {
        let p = simulate_path(&config, i);
        count += p.jumps.len() as f64;
        size_sum += p.jumps.iter().map(|&(_, s)| s).sum::<f64>();
        horizon += p.end_time;
        assert!(p.jumps.iter().all(|&(t, _)| t <= p.end_time));
    }
    let mean_count = count / n_paths as f64;
    assert!(
        (mean_count - 4.0).abs() < 5.0 * (20.0 / n_paths as f64).sqrt(),
        "{mean_count}"
    );
    let mean_size = size_sum / count;
    assert!(
        (mean_size + 0.5).abs() < 5.0 * 0.5 / count.sqrt(),
        "{mean_size}"
    );
    assert!((horizon / n_paths as f64 - 2.0).abs() < 5.0 * 2.0 / (n_paths as f64).sqrt());
}

#[test]
fn conditioning_on_the_infimum_leaves_the_post_infimum_law_unchanged() {
    let model = LevyModel::standard_brownian();
    let config = SimConfig::new(model, 0.5, 2e-3, 40_000, 9).unwrap();
    let law = Law::PostInfMddSf { d: 1.0 };
    let queries = [
        McQuery::new(law, ConditionSpec::none(), 0.05),
        McQuery::new(law, ConditionSpec::inf(-0.5), 0.1),
    ];
    let est = estimate_laws(&config, &queries).unwrap();
    let (free, cond) = (est[0].as_ref().unwrap(), est[1].as_ref().unwrap());
    assert!(cond.accepted < free.accepted);
    let spread = (free.ci_half.powi(2) + cond.ci_half.powi(2)).sqrt() * 1.5;
    assert!(
        (free.value - cond.value).abs() <= spread,
        "{free:?} vs {cond:?}"
    );
}

#[test]
fn halving_the_step_shrinks_the_discretization_bias() {
    let model = LevyModel::standard_brownian();
    let table = ScaleTable::new(model, 0.5).unwrap();
    let exact = laws::sup_cdf(&table, 1.0).unwrap().value;
    let query = McQuery::natural(Law::SupCdf { b: 1.0 });
    let bias = |dt: f64| {
        let config = SimConfig::new(model, 0.5, dt, 20_000, 17).unwrap();
        estimate_law(&config, &query).unwrap().value - exact
    };
    // the discrete maximum undershoots, so P{S < b} is biased upwards
    let (coarse, fine) = (bias(1e-2), bias(2.5e-3));
    assert!(coarse > 0.0 && coarse > fine, "{coarse} vs {fine}");
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let model = LevyModel::exp_jump_diffusion(0.3, 0.8, 1.0, 0.5).unwrap();
    let config = SimConfig::new(model, 0.5, 1e-2, 5000, 1).unwrap();
    let query = McQuery::natural(Law::PostSupMddSf { d: 1.0 });
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_law(&config, &query).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn stop_mode_rejects_other_laws() {
    let config = SimConfig::new(LevyModel::standard_brownian(), 0.5, 1e-2, 10, 1)
        .unwrap()
        .with_mode(SimMode::StopAtAlphaD(1.0))
        .unwrap();
    assert!(estimate_law(&config, &McQuery::natural(Law::SupCdf { b: 1.0 })).is_err());
    let wrong_level = McQuery::natural(Law::DurationLtAtAlpha { d: 2.0 });
    assert!(estimate_law(&config, &wrong_level).is_err());
}
