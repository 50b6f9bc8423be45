//! Randomized identities of the operator on every carrier.

use jclass_core::{CompactWindow, GroupCarrier, LpFunction, Weight, WeightedTranslation};
use proptest::prelude::*;

fn carrier() -> impl Strategy<Value = GroupCarrier> {
    prop_oneof![
        Just(GroupCarrier::integer_line()),
        (2u32..10).prop_map(|n| GroupCarrier::finite_cyclic(n).unwrap()),
        (1u32..50).prop_map(|s| GroupCarrier::real_line_grid(s as f64 / 100.0).unwrap()),
        (1u32..50).prop_map(|s| GroupCarrier::positive_reals_log_grid(s as f64 / 100.0).unwrap()),
    ]
}

/// Operator with a periodic log-weight table on cyclic carriers and a
/// constant weight on lines, plus an operand.
fn instance() -> impl Strategy<Value = (WeightedTranslation, LpFunction)> {
    carrier().prop_flat_map(|c| {
        let n = c.order().unwrap_or(1) as usize;
        (
            prop::collection::vec(-1.0f64..1.0, n),
            -4i64..=4,
            -10i64..10,
            prop::collection::vec(-3.0f64..3.0, n.max(8)),
        )
            .prop_map(move |(logs, a, lo, vals)| {
                let (w, a) = match c.order() {
                    Some(order) => (
                        Weight::log_table(logs).unwrap(),
                        a.rem_euclid(i64::from(order)).max(1),
                    ),
                    None => (
                        Weight::constant(logs[0].exp()).unwrap(),
                        if a == 0 { 1 } else { a },
                    ),
                };
                let t = WeightedTranslation::new(c, c.element(a), w, 2.0).unwrap();
                let (off, vals) = match c.order() {
                    Some(order) => (0, vals[..order as usize].to_vec()),
                    None => (lo, vals),
                };
                (t, LpFunction::new(c, 2.0, off, vals).unwrap())
            })
    })
}

fn close(a: &LpFunction, b: &LpFunction, tol: f64) -> bool {
    let d = a.sub(b).unwrap().p_norm();
    d <= tol * a.p_norm().max(b.p_norm()).max(1.0)
}

proptest! {
    #[test]
    fn closed_form_matches_repetition((t, f) in instance(), m in 0u64..30) {
        let a = t.iterate(&f, m).unwrap();
        let b = t.apply_repeated(&f, m).unwrap();
        prop_assert!(close(&a, &b, 1e-10));
    }

    #[test]
    fn inverse_iterate_undoes_iterate((t, f) in instance(), m in 0u64..30) {
        let back = t.inverse_iterate(&t.iterate(&f, m).unwrap(), m).unwrap();
        prop_assert!(close(&back, &f, 1e-12));
    }

    #[test]
    fn orbit_norms_match_iterates((t, f) in instance(), n in 1u64..20) {
        let norms = t.orbit_norms(&f, n).unwrap();
        prop_assert_eq!(norms.len() as u64, n + 1);
        for (m, v) in norms {
            let direct = t.iterate(&f, m).unwrap().p_norm();
            prop_assert!((v - direct).abs() <= 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn translation_preserves_integrals((_, f) in instance(), a in -20i64..20) {
        let c = f.carrier();
        let a = c.element(a);
        let w = f.support();
        let lhs = f.translated(a).integral_over(&c.translate_window(&w, a, 1));
        prop_assert_eq!(lhs.to_bits(), f.integral_over(&w).to_bits());
    }

    #[test]
    fn reflection_mirrors_forward_products((t, _) in instance(), k in -10i64..10, m in 1u64..10) {
        prop_assume!(t.carrier().is_cyclic());
        let r = t.reflected().unwrap();
        let lr = r.products().log_omega(k, m);
        let lt = t.products().log_omega(-k, m);
        prop_assert!((lr - lt).abs() <= 1e-12 * lt.abs().max(1.0));
    }
}

#[test]
fn empty_window_integral_is_zero() {
    let f = LpFunction::new(GroupCarrier::integer_line(), 2.0, 0, vec![1.0, 2.0]).unwrap();
    assert_eq!(f.integral_over(&CompactWindow::empty()), 0.0);
}
