use fhnburst::burst::{
    classify_canard, count_spikes, estimate_spike_count, l2_norm, l2_norm_with, simulate,
    simulate_standard, theta_sequence, CanardOutcome, CanardSite, Protocol, DEFAULT_F_BURST,
};
use fhnburst::geometry::{classify_region, fold_thresholds, folded_equilibria, Region};
use fhnburst::integrator::IntegratorConfig;
use fhnburst::{Forcing, ModelParams};

fn reference() -> (ModelParams, Forcing) {
    (ModelParams::default(), Forcing::new(0.55, 0.0149354).unwrap())
}

fn node_outcome(omega: f64) -> CanardOutcome {
    let p = ModelParams::default();
    let f = Forcing::new(0.482, omega).unwrap();
    let tr = simulate_standard(&p, &f, &IntegratorConfig::default()).unwrap();
    let eq = folded_equilibria(&p, &f).unwrap();
    classify_canard(&tr, &p, &f, &eq, CanardSite::Node).unwrap().outcome
}

fn halton(mut k: u64, b: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while k > 0 {
        f /= b as f64;
        r += f * (k % b) as f64;
        k /= b;
    }
    r
}

#[test]
fn reference_burst_is_four_period_stable() {
    let (p, f) = reference();
    let tr = simulate(
        &p,
        &f,
        &IntegratorConfig::default(),
        Protocol { burn_in_periods: 2, measure_periods: 4 },
    )
    .unwrap();
    assert_eq!(count_spikes(&tr, 4), 3);
    assert!(tr.states.iter().all(|s| s.iter().all(|v| v.is_finite())));
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn tightening_tolerances_moves_final_state_little() {
    let (p, f) = reference();
    let base = simulate_standard(&p, &f, &IntegratorConfig::default()).unwrap();
    let tight = simulate_standard(&p, &f, &IntegratorConfig::with_tolerances(5e-9, 5e-11)).unwrap();
    let d = (base.final_state() - tight.final_state()).amax();
    assert!(d < 1e-6, "final-state change {d:e}");
}

#[test]
fn theta_sequence_is_increasing_and_follows_spikes() {
    let (p, f) = reference();
    let tr = simulate_standard(&p, &f, &IntegratorConfig::default()).unwrap();
    let seq = theta_sequence(&tr, f.omega);
    assert_eq!(seq.len(), 6);
    assert!(seq.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn l2_survives_refinement_and_period_shift() {
    let (p, f) = reference();
    let cfg = IntegratorConfig::default();
    let a = simulate(&p, &f, &cfg, Protocol { burn_in_periods: 2, measure_periods: 2 }).unwrap();
    let b = simulate(&p, &f, &cfg, Protocol { burn_in_periods: 3, measure_periods: 2 }).unwrap();
    let la = l2_norm(&a, f.period());
    assert!((la - l2_norm_with(&a, f.period(), 40_000)).abs() < 1e-8);
    let lb = l2_norm(&b, f.period());
    assert!((la - lb).abs() < 1e-8, "{la} vs {lb}");
    assert!(la > 0.0);
}

#[test]
fn spike_count_ignores_longer_burn_in_in_region_two() {
    let p = ModelParams::default();
    let cfg = IntegratorConfig::default();
    let mut checked = 0;
    let mut unlocked = Vec::new();
    let mut k = 1;
    while checked < 50 {
        let omega = 0.01 + 0.03 * halton(k, 2);
        let th = fold_thresholds(&p, omega / p.eps);
        let hi = th.e_2star_left.min(th.e_star_right);
        let e = th.e_star_left + (hi - th.e_star_left) * (0.02 + 0.96 * halton(k, 3));
        k += 1;
        let f = Forcing::new(e, omega).unwrap();
        assert_eq!(classify_region(&p, &f), Region::II);
        let short = simulate(&p, &f, &cfg, Protocol { burn_in_periods: 2, measure_periods: 2 }).unwrap();
        let long = simulate(&p, &f, &cfg, Protocol { burn_in_periods: 4, measure_periods: 2 }).unwrap();
        assert_eq!(
            count_spikes(&short, 2),
            count_spikes(&long, 2),
            "omega={omega}, E={e}"
        );
        let per4 = simulate(&p, &f, &cfg, Protocol { burn_in_periods: 2, measure_periods: 4 }).unwrap();
        if count_spikes(&per4, 4) != count_spikes(&short, 2) {
            unlocked.push((omega, e));
        }
        checked += 1;
    }
    if !unlocked.is_empty() {
        eprintln!("not period-locked over 4 periods: {unlocked:?}");
    }
}

#[test]
fn node_transition_has_single_switch() {
    let lo = 0.0236;
    let hi = 0.02508;
    let n = 30;
    let outcomes: Vec<CanardOutcome> = (0..=n)
        .map(|i| node_outcome(lo + (hi - lo) * i as f64 / n as f64))
        .collect();
    let switches = outcomes.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(switches, 1, "{outcomes:?}");
    assert_eq!(outcomes[0], CanardOutcome::JumpBack);
    assert_eq!(outcomes[n], CanardOutcome::JumpAcross);

    let (mut a, mut b) = (0.02506875, 0.025075);
    while b - a > 1e-7 {
        let mid = 0.5 * (a + b);
        if node_outcome(mid) == CanardOutcome::JumpBack {
            a = mid;
        } else {
            b = mid;
        }
    }
    let switch = 0.5 * (a + b);
    assert_eq!(node_outcome(switch - 1e-7), CanardOutcome::JumpBack);
    assert_eq!(node_outcome(switch + 1e-7), CanardOutcome::JumpAcross);
}

#[test]
fn estimate_tracks_reference_count() {
    let (p, f) = reference();
    let cfg = IntegratorConfig::default();
    let est = estimate_spike_count(&p, &f, DEFAULT_F_BURST, &cfg).unwrap();
    let sim = count_spikes(&simulate_standard(&p, &f, &cfg).unwrap(), 2);
    assert!(est.estimate.abs_diff(sim) <= 1, "estimate {} vs {sim}", est.estimate);
    assert!(est.theta_saddle_lower > est.theta_node_passage);
}
