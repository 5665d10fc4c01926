use std::collections::VecDeque;

use duckgrid_core::grid::{solve_flows, GridTopology, Line, NodeKind};
use proptest::prelude::*;

/// Spanning tree over `n` nodes plus extra chords, utility at node 0.
fn network(n: usize, parents: &[usize], chords: &[(usize, usize)], weights: &[f64], loss: f64) -> GridTopology {
    let mut topo = GridTopology::default();
    topo.node("n0", NodeKind::Utility);
    for i in 1..n {
        topo.node(format!("n{i}"), NodeKind::Home);
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i, parents[i - 1] % i)).collect();
    for &(a, b) in chords {
        let (a, b) = (a % n, b % n);
        if a != b && !edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            edges.push((a, b));
        }
    }
    for (k, (a, b)) in edges.into_iter().enumerate() {
        let mut line = Line::new(format!("n{a}"), format!("n{b}"), weights[k % weights.len()]);
        line.loss_coeff = loss;
        topo.lines.push(line);
    }
    topo
}

/// Largest mismatch between each line's flow/weight and a node potential built
/// along a breadth-first spanning tree.
fn potential_mismatch(topo: &GridTopology, flows: &[f64]) -> f64 {
    let n = topo.nodes.len();
    let ends: Vec<(usize, usize)> = topo
        .lines
        .iter()
        .map(|l| (topo.index_of(&l.from).unwrap(), topo.index_of(&l.to).unwrap()))
        .collect();
    let mut theta = vec![None; n];
    theta[0] = Some(0.0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for (l, &(a, b)) in ends.iter().enumerate() {
            let drop = flows[l] / topo.lines[l].capacity_kw;
            let (v, value) = if a == u {
                (b, theta[u].unwrap() - drop)
            } else if b == u {
                (a, theta[u].unwrap() + drop)
            } else {
                continue;
            };
            if theta[v].is_none() {
                theta[v] = Some(value);
                queue.push_back(v);
            }
        }
    }
    ends.iter()
        .enumerate()
        .map(|(l, &(a, b))| {
            let drop = flows[l] / topo.lines[l].capacity_kw;
            (theta[a].unwrap() - theta[b].unwrap() - drop).abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn meshed_flows_conserve_and_follow_potentials(
        n in 3usize..8,
        parents in prop::collection::vec(0usize..64, 7),
        chords in prop::collection::vec((0usize..8, 0usize..8), 1..4),
        weights in prop::collection::vec(5.0..50.0f64, 12),
        inj in prop::collection::vec(-5.0..5.0f64, 8),
    ) {
        let topo = network(n, &parents, &chords, &weights, 0.0);
        let mut injections = inj[..n].to_vec();
        injections[0] = 0.0;
        let total: f64 = injections.iter().sum();
        let mut big = topo.clone();
        for l in &mut big.lines {
            l.capacity_kw *= 1e4;
        }
        let sol = solve_flows(&big, &injections).unwrap();
        prop_assert!(sol.kcl_residual(&big, &injections) < 1e-9);
        prop_assert!((total + sol.slack_injection_kw).abs() < 1e-12);
        prop_assert!(potential_mismatch(&big, &sol.line_flows) < 1e-9);
    }

    #[test]
    fn lossy_radial_flows_balance(
        n in 2usize..9,
        parents in prop::collection::vec(0usize..64, 8),
        loss in 0.0..0.005f64,
        inj in prop::collection::vec(-6.0..6.0f64, 9),
    ) {
        let topo = network(n, &parents, &[], &[1e6], loss);
        let mut injections = inj[..n].to_vec();
        injections[0] = 0.0;
        let sol = solve_flows(&topo, &injections).unwrap();
        prop_assert!(sol.kcl_residual(&topo, &injections) < 1e-9);
        let balance = injections.iter().sum::<f64>() + sol.slack_injection_kw - sol.losses_kw;
        prop_assert!(balance.abs() < 1e-9);
        prop_assert!(sol.losses_kw >= 0.0);
    }
}

#[test]
fn overloaded_line_is_reported() {
    let mut topo = GridTopology::default();
    topo.node("u", NodeKind::Utility)
        .node("a", NodeKind::Home)
        .line("a", "u", 2.0);
    let err = solve_flows(&topo, &[0.0, 3.0]).unwrap_err();
    assert!(err.to_string().contains("a->u"), "{err}");
}
