#![allow(clippy::needless_range_loop)]

use iabandit_core::bandit::klucb_divergence;
use iabandit_core::engine::{
    derive_seed, lai_robbins_diag, mean_pulls, per_receiver_state_means, run_policy,
    ucb1_regret_bound, BernoulliArms,
};
use iabandit_core::ia::{link_metrics, solve_ia};
use iabandit_core::stats::MeanStderr;
use iabandit_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table_for(cfg: &ScenarioConfig) -> LinkTable {
    LinkTable::build(&generate_pool(cfg).unwrap()).unwrap()
}

fn small_default(n_samples: usize) -> ScenarioConfig {
    ScenarioConfig {
        n_samples,
        ..ScenarioConfig::with_states(4, 42)
    }
}

#[test]
fn degenerate_scaled_pool_gives_equal_means() {
    let cfg = ScenarioConfig {
        n_samples: 100,
        channel_model: ChannelModel::Scaled,
        state_powers: vec![[1.0; 2]; 4],
        ..ScenarioConfig::with_states(4, 9)
    };
    let table = table_for(&cfg);
    for kind in [RewardKind::SumRate, RewardKind::Chordal] {
        let model = RewardModel::new(&table, 100.0, kind).unwrap();
        let tm = precompute_true_means(&model).unwrap();
        for m in &tm.means {
            assert!((m - tm.means[0]).abs() < 1e-12);
        }
    }
}

#[test]
fn true_means_match_brute_force() {
    let cfg = ScenarioConfig {
        n_samples: 50,
        ..ScenarioConfig::with_states(2, 5)
    };
    let pool = generate_pool(&cfg).unwrap();
    let table = LinkTable::build(&pool).unwrap();
    let p_tx = 31.6;

    // Recompute everything straight from the pool.
    let mut per_arm_rates = Vec::new();
    let mut per_arm_chordal = Vec::new();
    for arm in 0..8 {
        let c = StateCombination::decode(arm, 2).unwrap();
        let mut rates = Vec::new();
        let mut chords = Vec::new();
        for s in 0..50 {
            let mut h = [[ComplexMat2::default(); 3]; 3];
            for rx in 0..3 {
                for tx in 0..3 {
                    h[rx][tx] = pool.channel_at(rx, tx, &c, s).unwrap();
                }
            }
            let sol = solve_ia(&h).unwrap();
            let m = link_metrics(&h, &sol, p_tx).unwrap();
            rates.push(m.per_user_rate);
            chords.push(m.per_rx_chordal);
        }
        per_arm_rates.push(rates);
        per_arm_chordal.push(chords);
    }
    let r_max = per_arm_rates
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b));

    let model = RewardModel::new(&table, p_tx, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    assert!((tm.r_max - r_max).abs() < 1e-12);
    for arm in 0..8 {
        let expect: f64 = per_arm_rates[arm]
            .iter()
            .map(|r| r.iter().sum::<f64>() / r_max / 3.0)
            .sum::<f64>()
            / 50.0;
        assert!((tm.means[arm] - expect).abs() < 1e-12);
    }

    let model = RewardModel::new(&table, p_tx, RewardKind::Chordal).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    for arm in 0..8 {
        let expect: f64 = per_arm_chordal[arm]
            .iter()
            .map(|d| d.iter().sum::<f64>() / 3.0)
            .sum::<f64>()
            / 50.0;
        assert!((tm.means[arm] - expect).abs() < 1e-12);
    }
}

#[test]
fn best_arm_puts_every_receiver_on_strongest_state() {
    let table = table_for(&small_default(1000));
    let model = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    assert_eq!(
        tm.best_arm,
        StateCombination([3, 3, 3]).arm_index(4).unwrap()
    );
    // strictly better than the conventional (all-weakest) arm
    assert!(tm.means[0] < tm.best_mean);
}

#[test]
fn oracle_always_plays_best_arm_with_zero_mean_regret() {
    let table = table_for(&small_default(300));
    let model = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    let horizon = 2000;
    let mut regrets = vec![Vec::new(); horizon];
    for run in 0..40 {
        let tr = run_combinational(
            &model,
            &tm,
            PolicyKind::Oracle,
            horizon,
            derive_seed(3, run, 0, 0),
        )
        .unwrap();
        assert!(tr.arms.iter().all(|&a| a as usize == tm.best_arm));
        for (n, r) in regret_trace(&tr, &tm).unwrap().into_iter().enumerate() {
            regrets[n].push(r);
        }
    }
    for (n, rs) in regrets.iter().enumerate().step_by(97) {
        let m = MeanStderr::from_samples(rs);
        assert!(m.mean.abs() <= 3.0 * m.stderr + 1e-12, "slot {n}: {m:?}");
    }
}

#[test]
fn fixed_arms_identical_when_states_coincide() {
    let cfg = ScenarioConfig {
        n_samples: 200,
        channel_model: ChannelModel::Scaled,
        state_powers: vec![[1.0; 2]; 4],
        ..ScenarioConfig::with_states(4, 10)
    };
    let table = table_for(&cfg);
    let model = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    let a = run_combinational(&model, &tm, PolicyKind::Fixed(0), 500, 77).unwrap();
    let b = run_combinational(&model, &tm, PolicyKind::Fixed(2), 500, 77).unwrap();
    assert_eq!(a.sum_rate, b.sum_rate);
    assert!(a.arms.iter().all(|&x| x == 0));
    assert!(b.arms.iter().all(|&x| x == 42));
}

#[test]
fn random_regret_slope_matches_mean_gap() {
    let table = table_for(&small_default(1000));
    let model = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    let n = 10_000;
    let slopes: Vec<f64> = (0..40)
        .map(|run| {
            let tr = run_combinational(
                &model,
                &tm,
                PolicyKind::Random,
                n,
                derive_seed(4, run, 0, 0),
            )
            .unwrap();
            regret_trace(&tr, &tm).unwrap()[n - 1] / n as f64
        })
        .collect();
    let expect = tm.best_mean - tm.uniform_mean();
    let got = MeanStderr::from_samples(&slopes).mean;
    assert!((got / expect - 1.0).abs() < 0.1, "{got} vs {expect}");
}

#[test]
fn regret_below_worst_arm_envelope_and_conserved() {
    let table = table_for(&small_default(200));
    let model = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    let worst_gap = tm.best_mean - tm.worst_mean();
    for kind in [
        PolicyKind::Ucb1,
        PolicyKind::KLUCB,
        PolicyKind::Random,
        PolicyKind::Fixed(0),
    ] {
        let finals: Vec<f64> = (0..20)
            .map(|run| {
                let tr =
                    run_combinational(&model, &tm, kind, 1000, derive_seed(5, run, 1, 0)).unwrap();
                assert_eq!(tr.pulls.iter().sum::<u64>(), 1000);
                let direct = tr.reward.iter().fold(0.0, |s, r| s + r);
                assert_eq!(tr.total_reward(), direct);
                let totals: f64 = tr
                    .per_receiver
                    .iter()
                    .map(|x| x.iter().sum::<f64>() / 3.0)
                    .sum();
                assert!((totals - direct).abs() < 1e-9);
                regret_trace(&tr, &tm).unwrap()[999]
            })
            .collect();
        let m = MeanStderr::from_samples(&finals);
        assert!(m.mean <= 1000.0 * worst_gap + 3.0 * m.stderr);
    }
}

#[test]
fn learning_needs_room_for_initial_pulls() {
    let table = table_for(&small_default(20));
    let model = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    assert!(run_combinational(&model, &tm, PolicyKind::Ucb1, 63, 1).is_err());
    assert!(run_combinational(&model, &tm, PolicyKind::Ucb1, 64, 1).is_ok());
    // first 64 slots visit every arm once, in order
    let tr = run_combinational(&model, &tm, PolicyKind::KLUCB, 80, 1).unwrap();
    assert!(tr.arms[..64]
        .iter()
        .enumerate()
        .all(|(i, &a)| a as usize == i));
}

#[test]
fn mismatched_scenario_is_rejected() {
    let table = table_for(&small_default(20));
    let sum = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    let chord = RewardModel::new(&table, 100.0, RewardKind::Chordal).unwrap();
    let tm_sum = precompute_true_means(&sum).unwrap();
    let tm_chord = precompute_true_means(&chord).unwrap();
    let tr = run_combinational(&sum, &tm_sum, PolicyKind::Random, 100, 1).unwrap();
    assert_eq!(regret_trace(&tr, &tm_chord), Err(Error::ScenarioMismatch));
    assert!(run_combinational(&chord, &tm_sum, PolicyKind::Random, 100, 1).is_err());
}

#[test]
fn ucb1_bound_examples() {
    let tm = TrueMeans::from_means(vec![0.9, 0.8], 0).unwrap();
    let b = ucb1_regret_bound(&tm, std::f64::consts::E);
    let expect = 8.0 / 0.1 + (1.0 + std::f64::consts::PI.powi(2) / 3.0) * 0.1;
    assert!((b.value - expect).abs() < 1e-9);
    assert!((b.value - 80.43).abs() < 0.01);
    assert!(!b.degenerate);
    let flat = TrueMeans::from_means(vec![0.5; 4], 0).unwrap();
    let b = ucb1_regret_bound(&flat, 100.0);
    assert!(b.degenerate && b.value == 0.0);
}

#[test]
fn ucb1_respects_its_bound_on_bernoulli_arms() {
    let env = BernoulliArms {
        means: vec![0.9, 0.8],
    };
    let tm = env.true_means().unwrap();
    let n = 10_000;
    let mut finals = Vec::new();
    let mut subopt = Vec::new();
    for run in 0..30 {
        let mut policy = Policy::new(PolicyKind::Ucb1, 2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(6, run, 0, 0));
        let tr = run_policy(&env, &mut policy, n, &mut rng).unwrap();
        finals.push(regret_trace(&tr, &tm).unwrap()[n - 1]);
        subopt.push(tr.pulls[1] as f64);
    }
    let bound = ucb1_regret_bound(&tm, n as f64).value;
    assert!(MeanStderr::from_samples(&finals).mean <= bound);
    // pulls of the worse arm stay within the per-arm budget as well
    let per_arm = 8.0 * (n as f64).ln() / 0.01 + 1.0 + std::f64::consts::PI.powi(2) / 3.0;
    assert!(MeanStderr::from_samples(&subopt).mean <= per_arm);
}

#[test]
fn lai_robbins_divergence_and_klucb_diagnostic() {
    let d = klucb_divergence(0.4, 0.8).unwrap();
    assert!((d - 0.193_147_180_559_945_3).abs() < 1e-12);

    let tm = TrueMeans::from_means(vec![0.4, 0.8], 0).unwrap();
    let rows = lai_robbins_diag(&tm, &[10.0, 20.0], 100.0, Divergence::Exponential).unwrap();
    assert!(rows[1].inverse_divergence.is_none());
    assert!((rows[0].divergence - d).abs() < 1e-15);
    let bad = TrueMeans::from_means(vec![0.0, 0.8], 0).unwrap();
    assert!(lai_robbins_diag(&bad, &[1.0, 1.0], 100.0, Divergence::Exponential).is_err());

    let env = BernoulliArms {
        means: vec![0.9, 0.8],
    };
    let tm = env.true_means().unwrap();
    let n = 10_000;
    let traces: Vec<RunTrace> = (0..20)
        .map(|run| {
            let mut p = Policy::new(PolicyKind::KLUCB, 2, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, run, 0, 0));
            run_policy(&env, &mut p, n, &mut rng).unwrap()
        })
        .collect();
    let rows =
        lai_robbins_diag(&tm, &mean_pulls(&traces), n as f64, Divergence::Exponential).unwrap();
    let ratio = rows[1].pulls_over_ln_n / rows[1].inverse_divergence.unwrap();
    assert!((1.0 / 3.0..=3.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn distributed_with_one_state_equals_fixed() {
    let table = table_for(&ScenarioConfig {
        n_samples: 100,
        ..ScenarioConfig::with_states(1, 3)
    });
    let model = RewardModel::new(&table, 100.0, RewardKind::Chordal).unwrap();
    let tm = precompute_true_means(&model).unwrap();
    let fixed = run_combinational(&model, &tm, PolicyKind::Fixed(0), 300, 12).unwrap();
    for kind in [PolicyKind::Ucb1, PolicyKind::KLUCB, PolicyKind::Random] {
        let dist = run_distributed(&model, kind, 300, 12, None).unwrap();
        assert_eq!(dist.sum_rate, fixed.sum_rate);
        assert_eq!(dist.total_chordal, fixed.total_chordal);
    }
}

#[test]
fn distributed_oracle_locks_each_receivers_best_state() {
    let table = table_for(&small_default(200));
    let model = RewardModel::new(&table, 100.0, RewardKind::Chordal).unwrap();
    let rx_means = per_receiver_state_means(&model).unwrap();
    let best: Vec<usize> = rx_means
        .iter()
        .map(|m| iabandit_core::bandit::oracle_select(m))
        .collect();
    let arm = StateCombination([best[0], best[1], best[2]])
        .arm_index(4)
        .unwrap();
    let tr = run_distributed(&model, PolicyKind::Oracle, 200, 5, Some(&rx_means)).unwrap();
    assert!(tr.arms.iter().all(|&a| a as usize == arm));
    assert!(run_distributed(&model, PolicyKind::Oracle, 200, 5, None).is_err());

    let sum = RewardModel::new(&table, 100.0, RewardKind::SumRate).unwrap();
    assert!(run_distributed(&sum, PolicyKind::KLUCB, 200, 5, None).is_err());
}

#[test]
fn derived_seeds_differ_per_coordinate() {
    let base = derive_seed(42, 0, 0, 0);
    assert_eq!(base, derive_seed(42, 0, 0, 0));
    for other in [
        derive_seed(43, 0, 0, 0),
        derive_seed(42, 1, 0, 0),
        derive_seed(42, 0, 1, 0),
        derive_seed(42, 0, 0, 1),
    ] {
        assert_ne!(base, other);
    }
}
