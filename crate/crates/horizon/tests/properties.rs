//! Property tests for the structural invariants: pseudo-metric axioms,
//! scaling commutation, interpolation sums, queue conservation laws and
//! serialization round trips.

use horizon::path::{interpolate, metric_d, metric_dn, scale_path, PiecewiseLinearPath};
use horizon::queue::{self, BoundaryMode};
use horizon::seq::Window;
use horizon::{io, BoundaryMode as BM};
use proptest::prelude::*;

fn window_strategy(base: i64, len: usize) -> impl Strategy<Value = Window> {
    prop::collection::vec(-5.0f64..5.0, len..=len)
        .prop_map(move |v| Window::new(base, v).unwrap())
}

fn positive_window(base: i64, len: usize) -> impl Strategy<Value = Window> {
    prop::collection::vec(0.01f64..5.0, len..=len)
        .prop_map(move |v| Window::new(base, v).unwrap())
}

fn path_strategy(left: f64, step: f64, n: usize) -> impl Strategy<Value = PiecewiseLinearPath> {
    prop::collection::vec(-10.0f64..10.0, n..=n)
        .prop_map(move |v| PiecewiseLinearPath::new(left, step, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_matches_partial_sums(w in window_strategy(-6, 13)) {
        let p = interpolate(&w).unwrap();
        prop_assert_eq!(p.eval(0.0).unwrap(), 0.0);
        for s in -6i64..6 {
            for t in (s + 1)..7 {
                let sum = w.partial_sum(s + 1, t).unwrap();
                let inc = p.eval(t as f64).unwrap() - p.eval(s as f64).unwrap();
                prop_assert!((sum - inc).abs() <= 1e-9 * sum.abs().max(1.0));
            }
        }
    }

    #[test]
    fn metric_dn_is_a_pseudo_metric(
        f in path_strategy(-4.0, 1.0, 9),
        g in path_strategy(-4.0, 1.0, 9),
        h in path_strategy(-4.0, 1.0, 9),
    ) {
        let n = 4.0;
        let dfg = metric_dn(&f, &g, n).unwrap();
        let dgf = metric_dn(&g, &f, n).unwrap();
        prop_assert_eq!(dfg, dgf);
        let dfh = metric_dn(&f, &h, n).unwrap();
        let dhg = metric_dn(&h, &g, n).unwrap();
        prop_assert!(dfg <= dfh + dhg + 1e-12);
        prop_assert_eq!(metric_dn(&f, &f, n).unwrap(), 0.0);
    }

    #[test]
    fn truncated_metric_bounded_by_horizon(
        f in path_strategy(-4.0, 1.0, 9),
        g in path_strategy(-4.0, 1.0, 9),
    ) {
        let d = metric_d(&f, &g, 4).unwrap();
        for n in 1..=4u32 {
            let dn = metric_dn(&f, &g, n as f64).unwrap();
            prop_assert!(d <= dn + 0.5f64.powi(n as i32) + 1e-12);
        }
    }

    #[test]
    fn scaling_commutes_with_metric(
        f in path_strategy(-8.0, 1.0, 17),
        g in path_strategy(-8.0, 1.0, 17),
        tau in 1.0f64..4.0,
    ) {
        // d_N after scaling equals d_{tau N} before, for N tau <= 8.
        let n = 2.0;
        let fs = scale_path(&f, tau).unwrap();
        let gs = scale_path(&g, tau).unwrap();
        let lhs = metric_dn(&fs, &gs, n).unwrap();
        let rhs = metric_dn(&f, &g, tau * n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
    }

    #[test]
    fn queue_conservation_laws(
        s in positive_window(0, 24),
        a in positive_window(0, 24),
        j in 0.0f64..4.0,
    ) {
        let out = queue::queue_outputs(&s, &a, BoundaryMode::Primed(j)).unwrap();
        for i in 0..s.len() {
            // d = s + e, r = a - e, outputs nonnegative.
            prop_assert_eq!(out.depart.values()[i], s.values()[i] + out.idle.values()[i]);
            prop_assert_eq!(out.kept.values()[i], a.values()[i] - out.idle.values()[i]);
            prop_assert!(out.idle.values()[i] >= 0.0);
            prop_assert!(out.waiting.values()[i] >= 0.0);
            // Sojourn splits as waiting plus service.
            prop_assert_eq!(
                out.sojourn.values()[i],
                out.waiting.values()[i] + s.values()[i]
            );
        }
    }

    #[test]
    fn empty_start_dominates_any_seed(
        s in positive_window(-3, 20),
        a in positive_window(-3, 20),
        j in 0.0f64..6.0,
    ) {
        let empty = queue::depart(&s, &a, BM::Empty).unwrap();
        let primed = queue::depart(&s, &a, BM::Primed(j)).unwrap();
        for i in 0..s.len() {
            prop_assert!(primed.values()[i] <= empty.values()[i] + 1e-12);
        }
    }

    #[test]
    fn envelope_round_trips(w in window_strategy(-11, 7)) {
        let json = io::to_json(&w).unwrap();
        let back = io::window_from_json(&json).unwrap();
        prop_assert_eq!(w, back);
    }

    #[test]
    fn path_envelope_round_trips(p in path_strategy(-2.5, 0.25, 11)) {
        let json = io::to_json(&p).unwrap();
        let back = io::path_from_json(&json).unwrap();
        prop_assert_eq!(p, back);
    }
}
