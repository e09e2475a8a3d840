//! Property tests over randomly generated quasi-strongly-connected
//! digraphs, quantizer inputs, and certificate parameters.

use edgelap::certify::{build_certificate, LipschitzBounds};
use edgelap::decomposition::decompose;
use edgelap::dynamics::{simulate, DriftModel, InitialState, SimParams};
use edgelap::graph::{Digraph, Edge};
use edgelap::quantizer::QuantizerSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::sample::Index;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Random digraphs that always contain the directed spanning tree
/// `parent -> child` with `parent < child`, so node 1 is a root, plus up
/// to 8 extra random non-duplicate edges.
fn graph_strategy() -> impl Strategy<Value = Digraph> {
    (2usize..=8)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(any::<Index>(), n - 1),
                proptest::collection::vec((any::<Index>(), any::<Index>()), 0..=8),
                proptest::collection::vec(0.1f64..2.0, n + 7),
            )
        })
        .prop_map(|(n, parents, extras, weights)| {
            let mut edges = Vec::new();
            let mut next_weight = 0;
            for (offset, parent_pick) in parents.iter().enumerate() {
                let child = offset + 1;
                let parent = parent_pick.index(child);
                edges.push(Edge::new(parent + 1, child + 1, weights[next_weight]));
                next_weight += 1;
            }
            for (tail_pick, head_pick) in extras {
                let tail = tail_pick.index(n) + 1;
                let head = head_pick.index(n) + 1;
                let duplicate = tail == head
                    || edges.iter().any(|e: &Edge| e.tail == tail && e.head == head);
                if duplicate {
                    continue;
                }
                edges.push(Edge::new(tail, head, weights[next_weight]));
                next_weight += 1;
            }
            Digraph::new(n, edges).expect("generated graph must be valid")
        })
}

proptest! {
    #[test]
    fn decomposition_identities_hold(graph in graph_strategy()) {
        let d = decompose(&graph).unwrap();
        let n = d.num_nodes();
        let l = d.num_edges();
        let m = d.tree_count();
        prop_assert_eq!(m, n - 1);

        // The incidence matrix factors through the tree.
        let refactored = &d.tree_incidence * &d.cut_basis;
        prop_assert!(max_abs(&(&d.incidence - refactored)) < 1e-10);

        // Graph Laplacian rows sum to zero.
        let ones = DVector::from_element(n, 1.0);
        prop_assert!((&d.graph_laplacian * ones).abs().max() < 1e-10);

        // All three Laplacians share the trace, the total weight.
        let total: f64 = d.weights.iter().sum();
        prop_assert!((d.graph_laplacian.trace() - total).abs() < 1e-10);
        prop_assert!((d.edge_laplacian.trace() - total).abs() < 1e-10);
        prop_assert!((d.essential_edge_laplacian.trace() - total).abs() < 1e-10);

        // The flow basis is orthonormal and annihilated by E and R.
        let c = l - m;
        let theta = &d.flow_basis;
        prop_assert_eq!(theta.ncols(), c);
        let gram = theta.transpose() * theta;
        prop_assert!(max_abs(&(gram - DMatrix::<f64>::identity(c, c))) < 1e-10);
        prop_assert!(max_abs(&(&d.incidence * theta)) < 1e-8);
        prop_assert!(max_abs(&(&d.cut_basis * theta)) < 1e-8);
    }

    #[test]
    fn spectral_and_similarity_reports_hold(graph in graph_strategy()) {
        let d = decompose(&graph).unwrap();
        let spectrum = d.spectral_properties().unwrap();
        prop_assert!(spectrum.all_hold(), "spectrum report failed: {spectrum:?}");

        let similarity = d.verify_similarity_block_form().unwrap();
        prop_assert!(
            similarity.holds_within(1e-8),
            "similarity report failed: inverse {}, ul {}, ur {}, lower {}, factor {}",
            similarity.inverse_residual,
            similarity.upper_left_residual,
            similarity.upper_right_residual,
            similarity.lower_rows_magnitude,
            similarity.factorization_residual
        );
    }

    #[test]
    fn uniform_quantizer_contract(x in -1e8f64..1e8, delta in 1e-6f64..10.0) {
        let q = QuantizerSpec::uniform(delta).unwrap();
        let err = (q.quantize(x) - x).abs();
        prop_assert!(err <= delta / 2.0 + 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn logarithmic_quantizer_contract(x in -1e8f64..1e8, delta in 1e-6f64..0.9) {
        let q = QuantizerSpec::logarithmic(delta).unwrap();
        prop_assume!(x.abs() > 1e-12);
        let delta_l = q.delta_l().unwrap();
        let err = (q.quantize(x) - x).abs();
        prop_assert!(err <= delta_l * x.abs() * (1.0 + 1e-9));
        // Odd symmetry is exact.
        prop_assert_eq!(q.quantize(-x), -q.quantize(x));
        prop_assert_eq!(q.quantize(0.0), 0.0);
    }

    #[test]
    fn quantizers_are_monotone(a in -1e6f64..1e6, b in -1e6f64..1e6, delta in 1e-3f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for q in [
            QuantizerSpec::uniform(delta).unwrap(),
            QuantizerSpec::logarithmic(delta.min(0.9)).unwrap(),
        ] {
            prop_assert!(q.quantize(lo) <= q.quantize(hi));
        }
    }

    #[test]
    fn certificate_identities_hold(graph in graph_strategy(), sigma in 1.05f64..3.0) {
        let d = decompose(&graph).unwrap();
        let cert = build_certificate(&d, sigma, LipschitzBounds::zero()).unwrap();

        prop_assert!(cert.lambda_min_h > 0.0);
        prop_assert!(cert.lyapunov_residual() < 1e-9);
        prop_assert!(cert.q_closed_form_residual() < 1e-9);
        prop_assert!(cert.schur_complement_residual() < 1e-8);
        prop_assert!(cert.sigma_min > 1.0);

        // The dissipation matrix is definite exactly above the threshold.
        prop_assert_eq!(cert.lambda_min_q > 0.0, sigma > cert.sigma_min);

        if cert.feasible {
            let r1 = cert.radius(0.25, 1).unwrap();
            let r4 = cert.radius(0.25, 4).unwrap();
            prop_assert!((r4 / r1 - 2.0).abs() < 1e-9);
            let r_half = cert.radius(0.125, 1).unwrap();
            prop_assert!((r1 / r_half - 2.0).abs() < 1e-9);

            prop_assert!(cert.delta_l_max > 0.0);
            let pi = cert.decay_constant(0.5 * cert.delta_l_max).unwrap();
            prop_assert!(pi > 0.0 && pi < cert.margin);
            prop_assert!(cert.decay_constant(cert.delta_l_max).is_err());
        }
    }

    #[test]
    fn gain_threshold_is_two_sided(graph in graph_strategy()) {
        let d = decompose(&graph).unwrap();
        let probe = build_certificate(&d, 2.0, LipschitzBounds::zero()).unwrap();
        let threshold = probe.sigma_min;
        prop_assume!(threshold * 0.99 > 1.0);

        let above = build_certificate(&d, threshold * 1.01, LipschitzBounds::zero()).unwrap();
        prop_assert!(above.lambda_min_q > 0.0);
        prop_assert!(above.feasible);

        let below = build_certificate(&d, threshold * 0.99, LipschitzBounds::zero()).unwrap();
        prop_assert!(below.lambda_min_q < 0.0);
        prop_assert!(!below.feasible);
    }

    #[test]
    fn envelope_variants_are_consistent(graph in graph_strategy(), sigma in 1.3f64..3.0) {
        use edgelap::certify::EnvelopeVariant;
        let d = decompose(&graph).unwrap();
        let cert = build_certificate(&d, sigma, LipschitzBounds::zero()).unwrap();
        prop_assume!(cert.feasible);

        let rig = cert.envelope(0.0, EnvelopeVariant::Rigorous).unwrap();
        let loose = cert.envelope(0.0, EnvelopeVariant::Reference).unwrap();
        prop_assert!(rig.prefactor >= 1.0);
        prop_assert!((loose.prefactor - rig.prefactor * rig.prefactor).abs()
            <= 1e-9 * loose.prefactor);
        prop_assert!((loose.rate - 2.0 * rig.rate).abs() <= 1e-9 * loose.rate);
        prop_assert!(rig.bound(0.0, 3.0) >= 3.0);

        // Envelopes decay monotonically.
        prop_assert!(rig.bound(1.0, 3.0) < rig.bound(0.0, 3.0));
        let t = rig.convergence_time(1e-3, 3.0).unwrap();
        prop_assert!((rig.bound(t, 3.0) - 1e-3).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulated_edge_states_stay_consistent(
        graph in graph_strategy(),
        sigma in 1.05f64..2.5,
        seed in any::<u64>(),
    ) {
        let d = decompose(&graph).unwrap();
        let init = InitialState::SeededUniform {
            position_range: (-2.0, 2.0),
            velocity_range: (-1.0, 1.0),
            seed,
        };
        let traj = simulate(
            &d,
            sigma,
            QuantizerSpec::None,
            &DriftModel::Zero,
            &init,
            1,
            SimParams { horizon: 0.05, dt: 1e-3, sample_every: 5 },
        )
        .unwrap();

        prop_assert_eq!(traj.len(), 11);
        prop_assert!(traj.switch_flags.iter().all(|&f| !f));
        for i in 0..traj.len() {
            let mut expected = DVector::zeros(d.num_edges());
            for k in 0..d.num_edges() {
                expected[k] = traj.positions[i][d.tails[k]] - traj.positions[i][d.heads[k]];
            }
            prop_assert!((&expected - &traj.edge_positions[i]).abs().max() < 1e-12);
            let from_tree = d.cut_basis.transpose() * &traj.tree_positions[i];
            prop_assert!((from_tree - &traj.edge_positions[i]).abs().max() < 1e-10);
            prop_assert!(traj.tree_norms[i].is_finite());
        }
    }
}
