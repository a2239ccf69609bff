use ppacdc_core::analysis::{build_augmented, error_trace};
use ppacdc_core::rng::SimRng;
use ppacdc_core::sim::{consensus_error, run, GraphSpec, InitialStates};
use ppacdc_core::{ProtocolParams, SimConfig, Simulation, Zeta};
use proptest::prelude::*;

fn config(n: usize, p: f64, graph_seed: u64, seed: u64, bits: u32, alpha: f64) -> SimConfig {
    let graph = GraphSpec::Random { n, extra_edge_prob: p, seed: graph_seed };
    let d_bar = graph.build().unwrap().diameter().unwrap();
    SimConfig {
        graph,
        x0: InitialStates::Uniform { lo: 0.0, hi: 1000.0 },
        protocol: ProtocolParams { bits, alpha, d_bar, ..ProtocolParams::default() },
        max_iters: 400,
        seed,
        ..SimConfig::default()
    }
}

fn any_config() -> impl Strategy<Value = SimConfig> {
    (2usize..9, 0.0f64..0.5, any::<u64>(), any::<u64>(), 2u32..=24, prop::sample::select(vec![1.2, 2.0, 5.0, 10.0]))
        .prop_map(|(n, p, gs, s, b, a)| config(n, p, gs, s, b, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_deterministic(c in any_config()) {
        prop_assert_eq!(run(&c).unwrap(), run(&c).unwrap());
    }

    #[test]
    fn visiting_order_does_not_matter(c in any_config(), shuffle_seed in any::<u64>()) {
        let mut a = Simulation::from_config(&c).unwrap();
        let mut b = Simulation::from_config(&c).unwrap();
        let mut rng = SimRng::new(shuffle_seed);
        let mut order: Vec<usize> = (0..a.agents().len()).collect();
        for _ in 0..120 {
            rng.shuffle(&mut order);
            a.step().unwrap();
            b.step_in_order(&order).unwrap();
            prop_assert_eq!(a.agents(), b.agents());
        }
    }

    /// Every round: shared grid, mass within bound, and the error of each sent
    /// value is at most half a step whenever the value is in range.
    #[test]
    fn per_round_invariants(c in any_config()) {
        let mut sim = Simulation::from_config(&c).unwrap();
        let x0 = sim.initial_states().to_vec();
        let bound = 1e-9 * x0.len() as f64 * x0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for _ in 0..200 {
            sim.prepare().unwrap();
            let grid = sim.agents()[0].grid;
            prop_assert!(sim.agents().iter().all(|a| a.grid == grid));
            let (step, mid, lim) = (grid.step(), grid.midpoint(), grid.range_limit());
            let (xs, ss) = sim.transmitted().map(|(x, s)| (x.to_vec(), s.to_vec())).unwrap();
            for (j, a) in sim.agents().iter().enumerate() {
                let slack = 8.0 * f64::EPSILON * (a.x.abs() + mid.abs() + a.s.abs());
                if (a.x - mid).abs() <= lim {
                    prop_assert!((xs[j] - a.x).abs() <= step / 2.0 + slack);
                }
                if a.s.abs() <= lim {
                    prop_assert!((ss[j] - a.s).abs() <= step / 2.0 + slack);
                }
            }
            if c.protocol.is_window_start(sim.round()) {
                for a in sim.agents() {
                    if a.x > mid + lim || a.x < mid - lim {
                        prop_assert_eq!(a.zeta, Zeta::ZoomOut);
                    }
                }
            }
            sim.step().unwrap();
            let mass: f64 = sim.states().iter().chain(&sim.surpluses()).sum();
            prop_assert!((mass - x0.iter().sum::<f64>()).abs() <= bound);
        }
    }

    /// Unquantized runs follow the linear system with zero error input.
    #[test]
    fn exact_mode_is_the_linear_system(c in any_config()) {
        let c = SimConfig { exact_mode: true, ..c };
        let mut sim = Simulation::from_config(&c).unwrap();
        let n = sim.agents().len();
        let sys = build_augmented(sim.graph(), c.protocol.gamma).unwrap();
        let mut z: Vec<f64> = sim.initial_states().iter().copied().chain(vec![0.0; n]).collect();
        let zero = vec![0.0; 2 * n];
        for _ in 0..50 {
            sim.step().unwrap();
            z = sys.lti_step(&z, &zero).unwrap();
            for (j, a) in sim.agents().iter().enumerate() {
                prop_assert!((a.x - z[j]).abs() <= 1e-12 * 1000.0);
                prop_assert!((a.s - z[n + j]).abs() <= 1e-12 * 1000.0);
            }
        }
    }

    #[test]
    fn converged_runs_reach_the_average(seed in any::<u64>(), bits in 4u32..=24) {
        let c = SimConfig { seed, max_iters: 20_000, record_trace: false, ..SimConfig::default() };
        let c = SimConfig { protocol: ProtocolParams { bits, ..c.protocol }, ..c };
        let r = run(&c).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.max_deviation <= 1e-6);
    }
}

#[test]
fn exact_error_shrinks_window_over_window() {
    let c = SimConfig { exact_mode: true, max_iters: 600, conv_tolerance: 1e-300, ..SimConfig::default() };
    let r = run(&c).unwrap();
    let errors: Vec<f64> = r.trace.iter().map(|t| t.consensus_error).collect();
    let lag = 2 * c.protocol.d_bar;
    let burn_in = 40;
    for k in burn_in..errors.len() {
        assert!(errors[k] <= errors[k - lag] + 1e-9, "k = {k}: {} > {}", errors[k], errors[k - lag]);
    }
    assert!(errors.last().unwrap() < &1e-9);
}

#[test]
fn trace_errors_match_sent_values() {
    let c = SimConfig { protocol: ProtocolParams { bits: 3, ..ProtocolParams::default() }, ..SimConfig::default() };
    let r = run(&c).unwrap();
    let e = error_trace(&r.trace);
    assert_eq!(e.len(), r.trace.len());
    for (rec, err) in r.trace.iter().zip(&e) {
        for j in 0..5 {
            assert_eq!(err[j], rec.x_sent[j] - rec.x[j]);
            assert_eq!(err[5 + j], rec.s_sent[j] - rec.s[j]);
        }
        assert_eq!(rec.consensus_error, consensus_error(&rec.x, &r.trace[0].x));
    }
    // Initial states in [0, 1000] overflow the 3-bit grid, so the first window zooms out.
    assert!(r.trace[0].zeta.contains(&Zeta::ZoomOut));
    assert!(e[0].iter().take(5).any(|v| v.abs() > 0.5));
}

#[test]
fn bits_grow_by_one_message_per_edge() {
    let c = config(8, 0.3, 4, 1, 10, 1.2);
    let r = run(&SimConfig { max_iters: 30, ..c.clone() }).unwrap();
    let m = c.graph.build().unwrap().edge_count() as u64;
    for w in r.trace.windows(2) {
        assert_eq!(w[1].bits_cumulative - w[0].bits_cumulative, m * (4 * 10 + 18));
    }
}
