use ppacdc_core::analysis::{build_augmented, pull_matrix, push_matrix};
use ppacdc_core::protocol::{
    advance, compute_zeta, consensus_update_values, max_consensus_step, min_consensus_step,
    zoom_step, Received,
};
use ppacdc_core::quantizer::max_level;
use ppacdc_core::{AgentState, Digraph, QuantLevel, QuantizerParams, RoundMessage, Zeta, ZoomInRule};
use proptest::prelude::*;

fn graph() -> impl Strategy<Value = Digraph> {
    (2usize..9, 0.0f64..0.6, any::<u64>())
        .prop_map(|(n, p, seed)| Digraph::random_strongly_connected(n, p, seed).unwrap())
}

/// Graph with states, surpluses and arbitrary transmission errors.
fn scenario() -> impl Strategy<Value = (Digraph, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    graph().prop_flat_map(|g| {
        let n = g.node_count();
        let v = |r: f64| proptest::collection::vec(-r..r, n);
        (Just(g), v(1000.0), v(100.0), v(5.0), v(5.0))
    })
}

fn agents(g: &Digraph, x: &[f64], s: &[f64]) -> Vec<AgentState> {
    let grid = QuantizerParams::new(12, 1.0, 0.0).unwrap();
    (0..g.node_count())
        .map(|j| {
            let mut a = AgentState::new(j, x[j], grid, g.out_degree(j).unwrap());
            a.s = s[j];
            a
        })
        .collect()
}

fn sent(a: &AgentState, xq: f64, sq: f64) -> Received {
    Received { x: xq, s: sq, ..Received::exact(a) }
}

/// One synchronous round of every agent against sent values `x + ex`, `s + es`.
fn protocol_round(g: &Digraph, x: &[f64], s: &[f64], ex: &[f64], es: &[f64], gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let ag = agents(g, x, s);
    let msgs: Vec<Received> = ag.iter().enumerate().map(|(j, a)| sent(a, x[j] + ex[j], s[j] + es[j])).collect();
    ag.iter()
        .map(|a| {
            let incoming: Vec<_> = g.in_neighbors(a.id).unwrap().iter().map(|&i| (msgs[i], i)).collect();
            consensus_update_values(a, &msgs[a.id], &incoming, g, gamma).unwrap()
        })
        .unzip()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1.0)
}

proptest! {
    #[test]
    fn matches_dense_compact_form((g, x, s, ex, es) in scenario(), gamma in 0.01f64..1.0) {
        let n = g.node_count();
        let (r, c) = (pull_matrix(&g), push_matrix(&g));
        let xq: Vec<f64> = (0..n).map(|j| x[j] + ex[j]).collect();
        let sq: Vec<f64> = (0..n).map(|j| s[j] + es[j]).collect();
        let rx = r.mul_vec(&xq).unwrap();
        let cs = c.mul_vec(&sq).unwrap();
        let (nx, ns) = protocol_round(&g, &x, &s, &ex, &es, gamma);
        for j in 0..n {
            let want_x = x[j] + gamma * s[j] + rx[j] - xq[j];
            let want_s = s[j] + x[j] - want_x + cs[j] - sq[j];
            prop_assert!(close(nx[j], want_x, 2000.0), "x_{} {} vs {}", j, nx[j], want_x);
            prop_assert!(close(ns[j], want_s, 2000.0), "s_{} {} vs {}", j, ns[j], want_s);
        }
    }

    #[test]
    fn matches_augmented_lti_step((g, x, s, ex, es) in scenario(), gamma in 0.01f64..1.0) {
        let n = g.node_count();
        let sys = build_augmented(&g, gamma).unwrap();
        let z: Vec<f64> = x.iter().chain(&s).copied().collect();
        let e: Vec<f64> = ex.iter().chain(&es).copied().collect();
        let next = sys.lti_step(&z, &e).unwrap();
        let (nx, ns) = protocol_round(&g, &x, &s, &ex, &es, gamma);
        for j in 0..n {
            prop_assert!(close(nx[j], next[j], 2000.0));
            prop_assert!(close(ns[j], next[n + j], 2000.0));
        }
    }

    #[test]
    fn round_preserves_total_mass((g, x, s, ex, es) in scenario(), gamma in 0.01f64..1.0) {
        let before: f64 = x.iter().chain(&s).sum();
        let (nx, ns) = protocol_round(&g, &x, &s, &ex, &es, gamma);
        let after: f64 = nx.iter().chain(&ns).sum();
        prop_assert!((after - before).abs() <= 1e-9 * g.node_count() as f64 * 1000.0);
    }

    #[test]
    fn message_round_trip(
        b in 2u32..=32,
        raw in proptest::array::uniform4(any::<i64>()),
        zeta in -1i8..=1,
        degree in any::<u16>(),
    ) {
        let m = max_level(b);
        let level = |r: i64| QuantLevel::new(r.rem_euclid(2 * m + 1) - m, b).unwrap();
        let msg = RoundMessage {
            x_level: level(raw[0]),
            s_level: level(raw[1]),
            zeta: Zeta::from_i8(zeta).unwrap(),
            max_level: level(raw[2]),
            min_level: level(raw[3]),
            out_degree: degree,
        };
        let bytes = msg.encode(b).unwrap();
        prop_assert_eq!(bytes.len(), (4 * b as usize + 18).div_ceil(8));
        prop_assert_eq!(RoundMessage::decode(&bytes, b).unwrap(), msg);
    }

    #[test]
    fn centered_zeta_is_monotone_in_distance(
        b in 2u32..=24,
        mid in -1e3f64..1e3,
        alpha in 0.05f64..20.0,
        t1 in 0.0f64..2.0,
        t2 in 0.0f64..2.0,
        side1 in any::<bool>(),
        side2 in any::<bool>(),
    ) {
        let grid = QuantizerParams::new(b, 1.0, mid).unwrap();
        let lim = grid.range_limit();
        let (near, far) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let at = |t: f64, up: bool| mid + if up { t * lim } else { -t * lim };
        let z_near = compute_zeta(at(near, side1), &grid, alpha, ZoomInRule::Centered);
        let z_far = compute_zeta(at(far, side2), &grid, alpha, ZoomInRule::Centered);
        prop_assert!(z_near <= z_far, "{:?} at {} vs {:?} at {}", z_near, near, z_far, far);
    }

    #[test]
    fn zoom_out_then_in_is_identity(step in 1e-9f64..1e9, alpha in 0.01f64..50.0) {
        let back = zoom_step(zoom_step(step, Zeta::ZoomOut, alpha), Zeta::ZoomIn, alpha);
        prop_assert!((back - step).abs() <= 1e-15 * step * 2.0);
        prop_assert_eq!(zoom_step(step, Zeta::Hold, alpha), step);
    }

    /// After `diameter` synchronous rounds every agent holds the network extrema.
    #[test]
    fn extrema_spread_within_diameter(g in graph(), seed in any::<u64>()) {
        let n = g.node_count();
        let mut rng = ppacdc_core::rng::SimRng::new(seed);
        let mut hi: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut lo = hi.clone();
        let (max, min) = (hi.iter().cloned().fold(f64::MIN, f64::max), lo.iter().cloned().fold(f64::MAX, f64::min));
        for _ in 0..g.diameter().unwrap() {
            let (h, l) = (hi.clone(), lo.clone());
            for j in 0..n {
                let ins = g.in_neighbors(j).unwrap();
                hi[j] = max_consensus_step(h[j], ins.iter().map(|&i| h[i]));
                lo[j] = min_consensus_step(l[j], ins.iter().map(|&i| l[i]));
            }
        }
        prop_assert!(hi.iter().all(|&v| v == max));
        prop_assert!(lo.iter().all(|&v| v == min));
    }
}

#[test]
fn advance_combines_both_updates() {
    let g = Digraph::ring(3).unwrap();
    let ag = agents(&g, &[1.0, 2.0, 3.0], &[0.0; 3]);
    let mut msgs: Vec<Received> = ag.iter().map(Received::exact).collect();
    msgs[0].zeta = Zeta::ZoomOut;
    msgs[0].max_seen = 9.0;
    let next = advance(&ag[1], &msgs[1], &[(msgs[0], 0)], &g, 0.2).unwrap();
    assert_eq!(next.zeta, Zeta::ZoomOut);
    assert_eq!((next.max_seen, next.min_seen), (9.0, 1.0));
    assert_eq!(next.x, 1.5);
    assert_eq!(next.s, 0.5);
    assert_eq!(next.grid, ag[1].grid);
}
