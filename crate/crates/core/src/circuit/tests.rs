use rand::Rng;

use super::*;
use crate::ed::{FockVector, OracleGate};

fn bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

fn params(sites: usize, p: f64, r: f64, init: InitialState) -> CircuitParams {
    CircuitParams {
        initial_state: init,
        ..CircuitParams::new(sites, p, r, 50, 7)
    }
}

fn with_state(params: &CircuitParams, occ: &str, flags: &str) -> TrajectoryState {
    TrajectoryState::from_parts(
        GaussianState::product(&bits(occ)).unwrap(),
        FlagRegister::from_bits(bits(flags)),
        trajectory_rng(params.seed, 0),
        params,
    )
    .unwrap()
}

fn occupations(t: &TrajectoryState) -> Vec<f64> {
    t.quantum.occupations()
}

fn gate_links(t: &TrajectoryState) -> Vec<(usize, usize)> {
    t.events()
        .iter()
        .filter_map(|e| match e {
            Event::Gate { link, .. } => Some(*link),
            _ => None,
        })
        .collect()
}

#[test]
fn neel_init() {
    let t = TrajectoryState::new(&params(4, 0.5, 0.5, InitialState::Neel), 0).unwrap();
    assert_eq!(occupations(&t), vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(t.flags, FlagRegister::all_active(4));
    assert_eq!(t.t, 0);
}

#[test]
fn random_half_filling_is_exact() {
    for index in 0..5 {
        let t = TrajectoryState::new(
            &params(100, 0.5, 0.5, InitialState::RandomHalfFilling),
            index,
        )
        .unwrap();
        let n: f64 = occupations(&t).iter().sum();
        assert!((n - 50.0).abs() < 1e-12);
    }
}

#[test]
fn init_is_deterministic_per_index() {
    let p = params(16, 0.5, 0.5, InitialState::RandomHalfFilling);
    let a = TrajectoryState::new(&p, 3).unwrap();
    let b = TrajectoryState::new(&p, 3).unwrap();
    assert_eq!(a.quantum.alpha(), b.quantum.alpha());
    let others: Vec<_> = (4..10)
        .map(|i| occupations(&TrajectoryState::new(&p, i).unwrap()))
        .collect();
    assert!(others.iter().any(|o| *o != occupations(&a)));
}

#[test]
fn invalid_params_are_rejected() {
    assert!(TrajectoryState::new(&params(5, 0.5, 0.5, InitialState::Neel), 0).is_err());
    assert!(TrajectoryState::new(&params(0, 0.5, 0.5, InitialState::Neel), 0).is_err());
    assert!(TrajectoryState::new(&params(4, 1.5, 0.5, InitialState::Neel), 0).is_err());
    assert!(TrajectoryState::new(&params(4, 0.5, -0.1, InitialState::Neel), 0).is_err());
    let bad_bits = params(4, 0.5, 0.5, InitialState::Bits("10x0".into()));
    assert!(TrajectoryState::new(&bad_bits, 0).is_err());
    let short = params(4, 0.5, 0.5, InitialState::Bits("10".into()));
    assert!(TrajectoryState::new(&short, 0).is_err());
}

#[test]
fn links_follow_the_brickwork() {
    let odd: Vec<_> = LinkParity::Odd.links(6).collect();
    let even: Vec<_> = LinkParity::Even.links(6).collect();
    assert_eq!(odd, vec![(0, 1), (2, 3), (4, 5)]);
    assert_eq!(even, vec![(1, 2), (3, 4), (5, 0)]);
}

#[test]
fn classification_table() {
    use LinkParity::*;
    use Orientation::*;
    assert_eq!(classify(Odd, Standard, true, false), PairOutcome::Correct);
    assert_eq!(classify(Odd, Standard, false, true), PairOutcome::Wrong);
    assert_eq!(classify(Even, Standard, false, true), PairOutcome::Correct);
    assert_eq!(classify(Even, Standard, true, false), PairOutcome::Wrong);
    assert_eq!(classify(Odd, Swapped, false, true), PairOutcome::Correct);
    assert_eq!(classify(Even, Swapped, false, true), PairOutcome::Wrong);
    for parity in [Odd, Even] {
        assert_eq!(classify(parity, Standard, true, true), PairOutcome::Equal);
        assert_eq!(classify(parity, Standard, false, false), PairOutcome::Equal);
    }
}

#[test]
fn inactive_links_are_untouched() {
    let p = params(6, 0.5, 0.5, InitialState::Neel);
    let mut t = with_state(&p, "110010", "000000");
    t.record_events();
    let before = t.quantum.alpha().clone();
    let rng_before = t.rng.clone();
    t.unitary_half_layer(LinkParity::Odd);
    t.unitary_half_layer(LinkParity::Even);
    assert_eq!(t.quantum.alpha(), &before);
    assert_eq!(t.flags, FlagRegister::all_inactive(6));
    assert!(t.events().is_empty());
    // no draws consumed either
    assert_eq!(t.rng, rng_before);
}

#[test]
fn all_active_odd_layer_hits_odd_links() {
    let p = params(4, 0.5, 0.5, InitialState::Neel);
    let mut t = with_state(&p, "1010", "1111");
    t.record_events();
    t.unitary_half_layer(LinkParity::Odd);
    assert_eq!(gate_links(&t), vec![(0, 1), (2, 3)]);
}

#[test]
fn single_active_site_activates_its_links() {
    let p = params(8, 0.5, 0.5, InitialState::Neel);
    for (parity, expected) in [(LinkParity::Odd, (2, 3)), (LinkParity::Even, (1, 2))] {
        let mut t = with_state(&p, "10101010", "00100000");
        t.record_events();
        t.unitary_half_layer(parity);
        assert_eq!(gate_links(&t), vec![expected]);
        let mut flags = vec![false; 8];
        flags[2] = true;
        flags[if expected.0 == 2 { 3 } else { 1 }] = true;
        assert_eq!(t.flags, FlagRegister::from_bits(flags));
    }
    // wrap-around link
    let mut t = with_state(&p, "10101010", "10000000");
    t.record_events();
    t.unitary_half_layer(LinkParity::Even);
    assert_eq!(gate_links(&t), vec![(7, 0)]);
}

#[test]
fn neel_odd_measurement_deactivates() {
    let p = params(4, 1.0, 0.5, InitialState::Neel);
    let mut t = with_state(&p, "1010", "1111");
    let before = t.quantum.alpha().clone();
    t.measurement_half_layer(LinkParity::Odd).unwrap();
    assert_eq!(t.flags, FlagRegister::all_inactive(4));
    assert!(crate::fgs::max_abs(&(t.quantum.alpha() - before)) < 1e-12);
}

#[test]
fn anti_neel_is_swapped_with_full_feedback() {
    let p = params(4, 1.0, 1.0, InitialState::Neel);
    let mut t = with_state(&p, "0101", "1111");
    t.record_events();
    t.measurement_half_layer(LinkParity::Odd).unwrap();
    assert_eq!(occupations(&t), vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(t.flags, FlagRegister::all_inactive(4));
    assert!(t
        .events()
        .iter()
        .all(|e| matches!(e, Event::Measurement { swapped: true, .. })));
}

#[test]
fn wrong_order_without_feedback_keeps_flags() {
    let p = params(4, 1.0, 0.0, InitialState::Neel);
    let mut t = with_state(&p, "0101", "1111");
    t.measurement_half_layer(LinkParity::Odd).unwrap();
    assert_eq!(occupations(&t), vec![0.0, 1.0, 0.0, 1.0]);
    assert_eq!(t.flags, FlagRegister::all_active(4));
}

#[test]
fn deactivating_reading_still_corrects_inactive_wrong_pairs() {
    let mut p = params(4, 1.0, 0.0, InitialState::Neel);
    p.unswapped = Unswapped::Deactivate;
    let mut t = with_state(&p, "0101", "1111");
    t.measurement_half_layer(LinkParity::Odd).unwrap();
    assert_eq!(occupations(&t), vec![0.0, 1.0, 0.0, 1.0]);
    assert_eq!(t.flags, FlagRegister::all_inactive(4));

    p.r = 1.0;
    let mut t = with_state(&p, "0101", "0000");
    t.measurement_half_layer(LinkParity::Odd).unwrap();
    assert_eq!(occupations(&t), vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(t.flags, FlagRegister::all_inactive(4));
}

#[test]
fn even_links_use_the_opposite_rule() {
    let p = params(4, 1.0, 1.0, InitialState::Neel);
    // even links (1,2) and (3,0): Néel reads (0,1) on both, which is correct
    let mut t = with_state(&p, "1010", "1111");
    t.measurement_half_layer(LinkParity::Even).unwrap();
    assert_eq!(t.flags, FlagRegister::all_inactive(4));
    let mut t = with_state(&p, "0101", "1111");
    t.measurement_half_layer(LinkParity::Even).unwrap();
    assert_eq!(occupations(&t), vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(t.flags, FlagRegister::all_inactive(4));
}

#[test]
fn no_measurements_at_zero_rate() {
    let p = params(8, 0.0, 1.0, InitialState::Neel);
    let mut t = with_state(&p, "01011010", "11111111");
    t.record_events();
    t.measurement_half_layer(LinkParity::Odd).unwrap();
    t.measurement_half_layer(LinkParity::Even).unwrap();
    assert!(t.events().is_empty());
    assert_eq!(t.flags, FlagRegister::all_active(8));
}

#[test]
fn neel_with_inactive_flags_is_absorbing() {
    for (pr, rr) in [(0.0, 0.0), (0.3, 0.7), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)] {
        let p = params(8, pr, rr, InitialState::Neel);
        let mut t = with_state(&p, "10101010", "00000000");
        let before = t.quantum.alpha().clone();
        for _ in 0..50 {
            t.step().unwrap();
        }
        assert_eq!(t.flags, FlagRegister::all_inactive(8));
        assert!(crate::fgs::max_abs(&(t.quantum.alpha() - &before)) < 1e-12);
    }
}

#[test]
fn zero_rate_keeps_everything_active() {
    let mut t =
        TrajectoryState::new(&params(8, 0.0, 1.0, InitialState::RandomHalfFilling), 0).unwrap();
    for _ in 0..30 {
        t.step().unwrap();
        assert_eq!(t.flags, FlagRegister::all_active(8));
    }
    assert_eq!(t.t, 30);
}

#[test]
fn run_is_reproducible() {
    let p = params(8, 0.4, 0.6, InitialState::RandomHalfFilling);
    let probes = EntropyProbes {
        entropy_fractions: vec![0.25, 0.5],
    };
    let a = run_trajectory(&p, &probes, 2).unwrap();
    let b = run_trajectory(&p, &probes, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.times.len(), 51);
    assert_eq!(a.names(), vec!["rho_active", "delta", "s2_0.25", "s2_0.5"]);
    let c = run_trajectory(&p, &probes, 3).unwrap();
    assert_ne!(a, c);
}

#[test]
fn full_rates_reach_the_absorbing_state() {
    let mut p = params(16, 1.0, 1.0, InitialState::Neel);
    p.t_max = 400;
    for index in 0..5 {
        let s = run_trajectory(&p, &EntropyProbes::default(), index).unwrap();
        let rho = s.values("rho_active").unwrap();
        let first_zero = rho.iter().position(|&x| x == 0.0).expect("never absorbed");
        assert!(rho[first_zero..].iter().all(|&x| x == 0.0));
        assert_eq!(*s.values("delta").unwrap().last().unwrap(), 1.0);
    }
}

/// Replays the event log onto a fresh register.
#[test]
fn flag_changes_are_explained_by_events() {
    let p = params(12, 0.5, 0.5, InitialState::RandomHalfFilling);
    let mut t = TrajectoryState::new(&p, 1).unwrap();
    t.record_events();
    let mut shadow = vec![true; 12];
    let mut seen = 0;
    for _ in 0..60 {
        t.step().unwrap();
        for e in &t.events()[seen..] {
            match *e {
                Event::Gate { link: (a, b), .. } => {
                    shadow[a] = true;
                    shadow[b] = true;
                }
                Event::Measurement {
                    link: (a, b),
                    deactivated,
                    ..
                } => {
                    if deactivated {
                        shadow[a] = false;
                        shadow[b] = false;
                    }
                }
            }
        }
        seen = t.events().len();
        assert_eq!(t.flags.as_slice(), &shadow[..]);
    }
}

#[test]
fn no_swaps_without_feedback() {
    let p = params(12, 0.8, 0.0, InitialState::RandomHalfFilling);
    let mut t = TrajectoryState::new(&p, 4).unwrap();
    t.record_events();
    for _ in 0..50 {
        t.step().unwrap();
    }
    assert!(t
        .events()
        .iter()
        .any(|e| matches!(e, Event::Measurement { .. })));
    assert!(t
        .events()
        .iter()
        .all(|e| !matches!(e, Event::Measurement { swapped: true, .. })));
}

#[test]
fn sampled_parity_is_conserved() {
    let p = params(10, 0.5, 0.5, InitialState::Bits("1101000010".into()));
    let mut t = TrajectoryState::new(&p, 0).unwrap();
    let mut sampler = trajectory_rng(99, 0);
    let parity = |b: Vec<bool>| b.iter().filter(|&&x| x).count() % 2;
    for _ in 0..40 {
        t.step().unwrap();
        for _ in 0..5 {
            assert_eq!(parity(t.quantum.sample_bitstring(&mut sampler).unwrap()), 0);
        }
    }
}

/// The same protocol run on a Fock vector with identical draws.
fn fock_step(state: &mut FockVector, flags: &mut [bool], rng: &mut TrajectoryRng, p: f64, r: f64) {
    let l = flags.len();
    for parity in [LinkParity::Odd, LinkParity::Even] {
        for (a, b) in parity.links(l) {
            if flags[a] || flags[b] {
                let kind = if rng.gen::<bool>() {
                    GateKind::Hopping
                } else {
                    GateKind::Pairing
                };
                state
                    .apply(OracleGate::Gate(kind), a, b, GATE_ANGLE)
                    .unwrap();
                flags[a] = true;
                flags[b] = true;
            }
        }
        for (a, b) in parity.links(l) {
            if !(flags[a] || flags[b]) || rng.gen::<f64>() >= p {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let u: f64 = rng.gen();
            let n_lo = state.measure(lo, u).unwrap();
            let u: f64 = rng.gen();
            let n_hi = state.measure(hi, u).unwrap();
            let (left, right) = if a == lo { (n_lo, n_hi) } else { (n_hi, n_lo) };
            let odd = parity == LinkParity::Odd;
            if left != right {
                if left == odd {
                    flags[a] = false;
                    flags[b] = false;
                } else if rng.gen::<f64>() < r {
                    state.apply(OracleGate::ModeSwap, a, b, 0.0).unwrap();
                    flags[a] = false;
                    flags[b] = false;
                }
            }
        }
    }
}

#[test]
fn trajectories_match_the_fock_oracle() {
    for (sites, index) in [(4, 0), (4, 1), (6, 2), (6, 3), (8, 4)] {
        let p = params(sites, 0.4, 0.7, InitialState::RandomHalfFilling);
        let mut t = TrajectoryState::new(&p, index).unwrap();
        let start: Vec<bool> = t.quantum.occupations().iter().map(|&n| n > 0.5).collect();
        let mut fock = FockVector::product(&start).unwrap();
        let mut flags = vec![true; sites];
        let mut rng = t.rng.clone();
        for _ in 0..15 {
            t.step().unwrap();
            fock_step(&mut fock, &mut flags, &mut rng, p.p, p.r);
            assert_eq!(t.flags.as_slice(), &flags[..]);
            let dev = t.quantum.covariance().max_abs_diff(&fock.covariance());
            assert!(dev < 1e-8, "L={sites}: covariance deviation {dev}");
        }
    }
}

/// Swapping the odd and even rules equals translating the ring by one site,
/// with the layers of each step taken in the opposite order.
#[test]
fn orientation_swap_is_a_translation() {
    const L: usize = 4;
    const RUNS: u64 = 3000;
    const STEPS: usize = 4;
    let start = "1100";
    let shifted = "0110";
    let mut base = params(L, 0.5, 0.5, InitialState::Neel);
    base.seed = 11;
    let mut stats = [[0.0f64; 2 * L]; 2];
    let mut sq = [[0.0f64; 2 * L]; 2];
    for run in 0..RUNS {
        for (k, orientation) in [Orientation::Standard, Orientation::Swapped]
            .into_iter()
            .enumerate()
        {
            let mut p = base.clone();
            p.orientation = orientation;
            let occ = if k == 0 { start } else { shifted };
            let mut t = with_state(&p, occ, "1111");
            t.rng = trajectory_rng(p.seed + k as u64, run);
            let order = if k == 0 {
                [LinkParity::Odd, LinkParity::Even]
            } else {
                [LinkParity::Even, LinkParity::Odd]
            };
            for _ in 0..STEPS {
                for parity in order {
                    t.unitary_half_layer(parity);
                    t.measurement_half_layer(parity).unwrap();
                }
            }
            let n = t.quantum.occupations();
            for i in 0..L {
                // compare site i of the standard run with site i+1 of the shifted one
                let site = (i + k) % L;
                let obs = [n[site], if t.flags.get(site) { 1.0 } else { 0.0 }];
                for (o, x) in obs.into_iter().enumerate() {
                    stats[k][2 * i + o] += x;
                    sq[k][2 * i + o] += x * x;
                }
            }
        }
    }
    let n = RUNS as f64;
    for c in 0..2 * L {
        let m: Vec<f64> = (0..2).map(|k| stats[k][c] / n).collect();
        let var: f64 = (0..2).map(|k| (sq[k][c] / n - m[k] * m[k]) / n).sum();
        let z = (m[0] - m[1]).abs() / var.sqrt().max(1e-12);
        assert!(z < 4.5, "component {c}: {} vs {} (z = {z})", m[0], m[1]);
    }
}

#[test]
fn probe_schedules() {
    assert_eq!(ProbeSchedule::Linear(5).times(12), vec![0, 5, 10]);
    let log = ProbeSchedule::Log(4).times(1000);
    assert_eq!(log[0], 0);
    assert_eq!(*log.last().unwrap(), 1000);
    assert!(log.windows(2).all(|w| w[0] < w[1]));
    assert!(log.contains(&10) && log.contains(&100));
}

#[test]
fn inactive_sites_hold_their_target_occupation() {
    for orientation in [Orientation::Standard, Orientation::Swapped] {
        let p = CircuitParams {
            orientation,
            ..params(12, 0.6, 0.6, InitialState::RandomHalfFilling)
        };
        let mut t = TrajectoryState::new(&p, 5).unwrap();
        let target = |i: usize| (i % 2 == 0) == (orientation == Orientation::Standard);
        for _ in 0..80 {
            t.step().unwrap();
            for i in 0..12 {
                if !t.flags.get(i) {
                    let want = if target(i) { 1.0 } else { 0.0 };
                    assert!((t.quantum.occupation(i) - want).abs() < 1e-10);
                }
            }
        }
    }
}
