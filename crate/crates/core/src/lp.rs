//! Finitely supported grid functions and their `L^p` norms.

use crate::error::{Error, Result};
use crate::group::{CompactWindow, GroupCarrier, GroupElement};

/// A finitely supported real function on a carrier, stored as a dense slice
/// starting at `offset`. On a cyclic carrier the slice covers `0..order`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpFunction {
    carrier: GroupCarrier,
    p: f64,
    offset: i64,
    values: Vec<f64>,
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

impl LpFunction {
    pub fn new(carrier: GroupCarrier, p: f64, offset: i64, values: Vec<f64>) -> Result<Self> {
        carrier.validate()?;
        check_exponent(p)?;
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                index: offset + i as i64,
                value: v,
            });
        }
        if let Some(order) = carrier.order() {
            if offset != 0 || values.len() != order as usize {
                return Err(Error::InvalidParameter(format!(
                    "a function on Z_{order} must store exactly indices 0..{order}"
                )));
            }
        }
        Ok(LpFunction {
            carrier,
            p,
            offset,
            values,
        })
    }

    pub fn zero(carrier: GroupCarrier, p: f64) -> Result<Self> {
        let len = carrier.order().unwrap_or(0) as usize;
        Self::new(carrier, p, 0, vec![0.0; len])
    }

    /// `v(k)` on every `k` in `window`, zero elsewhere.
    pub fn from_fn(
        carrier: GroupCarrier,
        p: f64,
        window: &CompactWindow,
        mut v: impl FnMut(i64) -> f64,
    ) -> Result<Self> {
        carrier.check_window(window)?;
        let (offset, len) = match (carrier.order(), window.min(), window.max()) {
            (Some(order), _, _) => (0, order as usize),
            (None, Some(lo), Some(hi)) => (lo, (hi - lo + 1) as usize),
            _ => (0, 0),
        };
        let mut values = vec![0.0; len];
        for k in window.indices() {
            values[(k - offset) as usize] = v(k);
        }
        Self::new(carrier, p, offset, values)
    }

    /// `χ_K`.
    pub fn indicator(carrier: GroupCarrier, p: f64, k: &CompactWindow) -> Result<Self> {
        Self::from_fn(carrier, p, k, |_| 1.0)
    }

    pub fn carrier(&self) -> GroupCarrier {
        self.carrier
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices covered by the stored slice, as `(first, last)`.
    pub fn stored_range(&self) -> Option<(i64, i64)> {
        if self.values.is_empty() {
            None
        } else {
            Some((self.offset, self.offset + self.values.len() as i64 - 1))
        }
    }

    pub fn get(&self, k: i64) -> f64 {
        let k = self.carrier.normalize(k);
        let i = k - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    /// Iterator over `(index, value)` pairs of the stored slice.
    pub fn entries(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.offset + i as i64, v))
    }

    pub fn p_norm(&self) -> f64 {
        self.p_norm_over(self.values.iter().copied())
    }

    /// `‖f‖_p^p`.
    pub fn p_norm_pow(&self) -> f64 {
        let mass = self.carrier.cell_mass(0);
        mass * self
            .values
            .iter()
            .map(|v| v.abs().powf(self.p))
            .sum::<f64>()
    }

    fn p_norm_over(&self, values: impl Iterator<Item = f64> + Clone) -> f64 {
        // scale by the largest magnitude so |v|^p cannot overflow
        let scale = values.clone().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mass = self.carrier.cell_mass(0);
        let sum: f64 = values.map(|v| (v.abs() / scale).powf(self.p)).sum();
        scale * (mass * sum).powf(1.0 / self.p)
    }

    /// `max_k |f(k)|` over the whole carrier.
    pub fn ess_sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Essential supremum of `|f|` on `e`: an exact max, since every grid
    /// cell has positive mass.
    pub fn ess_sup_on(&self, e: &CompactWindow) -> Result<f64> {
        if e.is_empty() {
            return Err(Error::EmptyWindow);
        }
        Ok(e.indices().fold(0.0_f64, |m, k| m.max(self.get(k).abs())))
    }

    /// `σ(f) = {k : f(k) != 0}`.
    pub fn support(&self) -> CompactWindow {
        CompactWindow::from_indices(self.entries().filter(|&(_, v)| v != 0.0).map(|(k, _)| k))
    }

    fn check_compatible(&self, other: &LpFunction) -> Result<()> {
        if self.carrier != other.carrier || self.p != other.p {
            return Err(Error::CarrierMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &LpFunction) -> Result<LpFunction> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LpFunction) -> Result<LpFunction> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &LpFunction, op: impl Fn(f64, f64) -> f64) -> Result<LpFunction> {
        self.check_compatible(other)?;
        let range = match (self.stored_range(), other.stored_range()) {
            (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
            (r, None) | (None, r) => r,
        };
        let Some((lo, hi)) = range else {
            return Ok(self.clone());
        };
        let values = (lo..=hi).map(|k| op(self.get(k), other.get(k))).collect();
        LpFunction::new(self.carrier, self.p, lo, values)
    }

    pub fn scale(&self, c: f64) -> Result<LpFunction> {
        LpFunction::new(
            self.carrier,
            self.p,
            self.offset,
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    /// `f χ_E`.
    pub fn restrict(&self, e: &CompactWindow) -> LpFunction {
        let values = self
            .entries()
            .map(|(k, v)| if e.contains(k) { v } else { 0.0 })
            .collect();
        LpFunction {
            values,
            ..self.clone()
        }
    }

    /// `(f ∗ δ_a)(k) = f(k - a)`.
    pub fn translated(&self, a: GroupElement) -> LpFunction {
        let shift = a.index();
        match self.carrier.order() {
            Some(_) => {
                let mut values = vec![0.0; self.values.len()];
                for (i, &v) in self.values.iter().enumerate() {
                    values[self.carrier.normalize(i as i64 + shift) as usize] = v;
                }
                LpFunction {
                    values,
                    ..self.clone()
                }
            }
            None => LpFunction {
                offset: self.offset + shift,
                ..self.clone()
            },
        }
    }

    /// `Σ_{k ∈ A} f(k) λ(k)`.
    ///
    /// Terms are added in ascending order of value, so the result depends only
    /// on the multiset of terms: reindexing `A` (as a translation does on a
    /// cyclic carrier, where the image window wraps) gives the same bits.
    pub fn integral_over(&self, a: &CompactWindow) -> f64 {
        let mut terms: Vec<f64> = a
            .indices()
            .map(|k| self.get(k) * self.carrier.cell_mass(k))
            .collect();
        terms.sort_by(f64::total_cmp);
        terms.into_iter().sum()
    }

    /// Drop zero entries at both ends of the stored slice (line carriers only).
    pub fn trimmed(&self) -> LpFunction {
        if self.carrier.is_cyclic() {
            return self.clone();
        }
        let first = self.values.iter().position(|&v| v != 0.0);
        let last = self.values.iter().rposition(|&v| v != 0.0);
        match (first, last) {
            (Some(a), Some(b)) => LpFunction {
                offset: self.offset + a as i64,
                values: self.values[a..=b].to_vec(),
                ..self.clone()
            },
            _ => LpFunction {
                offset: 0,
                values: Vec::new(),
                ..self.clone()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> GroupCarrier {
        GroupCarrier::IntegerLine
    }

    #[test]
    fn p_norm_examples() {
        let k = CompactWindow::interval(0, 3).unwrap();
        assert_eq!(LpFunction::indicator(z(), 2.0, &k).unwrap().p_norm(), 2.0);

        let r = GroupCarrier::real_line_grid(0.01).unwrap();
        let k = CompactWindow::interval(0, 24).unwrap();
        let n = LpFunction::indicator(r, 1.0, &k).unwrap().p_norm();
        assert!((n - 0.25).abs() < 1e-15);

        let f = LpFunction::new(z(), 2.0, 0, vec![3.0, 4.0]).unwrap();
        assert_eq!(f.p_norm(), 5.0);
    }

    #[test]
    fn ess_sup_examples() {
        let f = LpFunction::indicator(z(), 2.0, &CompactWindow::interval(0, 3).unwrap()).unwrap();
        assert_eq!(
            f.ess_sup_on(&CompactWindow::interval(2, 5).unwrap())
                .unwrap(),
            1.0
        );

        let zero = LpFunction::zero(z(), 2.0).unwrap();
        assert_eq!(
            zero.ess_sup_on(&CompactWindow::interval(-4, 4).unwrap())
                .unwrap(),
            0.0
        );

        let w = CompactWindow::interval(0, 9).unwrap();
        let f = LpFunction::from_fn(z(), 1.0, &w, |k| 1.0 / (k as f64 + 1.0)).unwrap();
        assert_eq!(
            f.ess_sup_on(&CompactWindow::interval(4, 9).unwrap())
                .unwrap(),
            0.2
        );

        assert!(matches!(
            f.ess_sup_on(&CompactWindow::empty()),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn pointwise_plumbing() {
        let chi05 =
            LpFunction::indicator(z(), 2.0, &CompactWindow::interval(0, 5).unwrap()).unwrap();
        let r = chi05.restrict(&CompactWindow::interval(3, 9).unwrap());
        assert_eq!(r.support(), CompactWindow::interval(3, 5).unwrap());

        assert!(LpFunction::zero(z(), 2.0).unwrap().support().is_empty());

        let a = LpFunction::indicator(z(), 2.0, &CompactWindow::interval(0, 1).unwrap()).unwrap();
        let b = LpFunction::indicator(z(), 2.0, &CompactWindow::interval(1, 2).unwrap()).unwrap();
        let s = a.add(&b.scale(-1.0).unwrap()).unwrap();
        assert_eq!(s.get(1), 0.0);
        assert_eq!(s.get(0), 1.0);
        assert_eq!(s.get(2), -1.0);
    }

    #[test]
    fn carrier_mismatch_is_an_error() {
        let a = LpFunction::indicator(z(), 2.0, &CompactWindow::singleton(0)).unwrap();
        let r = GroupCarrier::real_line_grid(0.5).unwrap();
        let b = LpFunction::indicator(r, 2.0, &CompactWindow::singleton(0)).unwrap();
        assert!(matches!(a.add(&b), Err(Error::CarrierMismatch)));
        let c = LpFunction::indicator(z(), 1.0, &CompactWindow::singleton(0)).unwrap();
        assert!(matches!(a.sub(&c), Err(Error::CarrierMismatch)));
    }

    #[test]
    fn invalid_construction() {
        assert!(LpFunction::new(z(), 0.5, 0, vec![1.0]).is_err());
        assert!(LpFunction::new(z(), f64::INFINITY, 0, vec![1.0]).is_err());
        assert!(LpFunction::new(z(), 2.0, 0, vec![f64::NAN]).is_err());
        let z4 = GroupCarrier::finite_cyclic(4).unwrap();
        assert!(LpFunction::new(z4, 2.0, 0, vec![1.0; 3]).is_err());
        assert!(
            LpFunction::from_fn(z4, 2.0, &CompactWindow::interval(2, 5).unwrap(), |_| 1.0).is_err()
        );
    }

    #[test]
    fn cyclic_storage_and_lookup() {
        let z4 = GroupCarrier::finite_cyclic(4).unwrap();
        let f = LpFunction::indicator(z4, 2.0, &CompactWindow::singleton(1)).unwrap();
        assert_eq!(f.values().len(), 4);
        assert_eq!(f.get(5), 1.0);
        assert_eq!(f.get(-3), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn carrier() -> impl Strategy<Value = GroupCarrier> {
            prop_oneof![
                Just(GroupCarrier::IntegerLine),
                (1u32..10).prop_map(|n| GroupCarrier::finite_cyclic(n).unwrap()),
                (1u32..100).prop_map(|s| GroupCarrier::real_line_grid(s as f64 / 100.0).unwrap()),
                (1u32..100)
                    .prop_map(|s| GroupCarrier::positive_reals_log_grid(s as f64 / 100.0).unwrap()),
            ]
        }

        fn function(c: GroupCarrier, p: f64) -> impl Strategy<Value = LpFunction> {
            let (lo_range, len_range) = match c.order() {
                Some(n) => (0i64..1, (n as usize)..(n as usize + 1)),
                None => (-20i64..20, 0usize..15),
            };
            (lo_range, prop::collection::vec(-5.0f64..5.0, len_range))
                .prop_map(move |(lo, vals)| LpFunction::new(c, p, lo, vals).unwrap())
        }

        fn pair() -> impl Strategy<Value = (LpFunction, LpFunction, CompactWindow)> {
            (carrier(), 1.0f64..4.0).prop_flat_map(|(c, p)| {
                let bound = c.order().map(|n| n as i64 - 1).unwrap_or(25);
                let lo0 = if c.is_cyclic() { 0 } else { -25 };
                (
                    function(c, p),
                    function(c, p),
                    (lo0..=bound, 0i64..10).prop_map(move |(lo, w)| {
                        CompactWindow::interval(lo, (lo + w).min(bound)).unwrap()
                    }),
                )
            })
        }

        proptest! {
            #[test]
            fn triangle_inequality((f, g, _) in pair()) {
                let lhs = f.add(&g).unwrap().p_norm();
                prop_assert!(lhs <= f.p_norm() + g.p_norm() + 1e-12 * (1.0 + lhs));
            }

            #[test]
            fn restriction_shrinks_norm((f, _, e) in pair()) {
                let r = f.restrict(&e);
                let (nr, nf) = (r.p_norm(), f.p_norm());
                prop_assert!(nr <= nf * (1.0 + 1e-12));
                if f.support().is_subset_of(&e) {
                    prop_assert!((nr - nf).abs() <= 1e-12 * nf.max(1.0));
                } else {
                    prop_assert!(nr < nf);
                }
            }

            #[test]
            fn change_of_variable_is_exact((f, _, w) in pair(), a in -30i64..30) {
                let c = f.carrier();
                let a = c.element(a);
                let lhs = f.translated(a).integral_over(&w);
                let rhs = f.integral_over(&c.translate_window(&w, a, -1));
                prop_assert_eq!(lhs.to_bits(), rhs.to_bits());
            }

            #[test]
            fn indicator_norm_is_window_mass((_, _, e) in pair(), c in carrier(), p in 1.0f64..4.0) {
                let e = if let Some(n) = c.order() {
                    e.intersection(&CompactWindow::interval(0, n as i64 - 1).unwrap())
                } else { e };
                let chi = LpFunction::indicator(c, p, &e).unwrap();
                let mass = c.window_mass(&e);
                prop_assert!((chi.p_norm_pow() - mass).abs() <= 4.0 * f64::EPSILON * mass.max(1.0));
                prop_assert!((chi.p_norm().powf(p) - mass).abs() <= 1e-12 * mass.max(1.0));
            }
        }
    }
}
