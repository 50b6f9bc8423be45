//! Discretized group models.
//!
//! Every carrier is a grid indexed by `i64`. Group elements, translations and
//! compact windows are handled entirely in index space; native coordinates
//! (`k * h` on the real line, `exp(k * h)` on the positive reals) only show up
//! when a weight is evaluated or a value is reported.
//!
//! `(R+, x)` is modelled through the logarithm: it is abelian, so its Haar
//! measure `dx / x` becomes the uniform measure in log coordinates and the
//! line machinery applies unchanged.

use std::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};

/// Relative tolerance used when snapping native coordinates onto the grid.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupCarrier {
    /// `Z_order` with counting measure.
    FiniteCyclic { order: u32 },
    /// `Z` with counting measure.
    IntegerLine,
    /// `(R, +)` sampled at `k * step`, Lebesgue cells of mass `step`.
    RealLineGrid { step: f64 },
    /// `(R+, x)` sampled at `exp(k * log_step)`, cells of `dx / x` mass `log_step`.
    PositiveRealsLogGrid { log_step: f64 },
}

impl GroupCarrier {
    pub fn finite_cyclic(order: u32) -> Result<Self> {
        let c = GroupCarrier::FiniteCyclic { order };
        c.validate()?;
        Ok(c)
    }

    pub fn integer_line() -> Self {
        GroupCarrier::IntegerLine
    }

    pub fn real_line_grid(step: f64) -> Result<Self> {
        let c = GroupCarrier::RealLineGrid { step };
        c.validate()?;
        Ok(c)
    }

    pub fn positive_reals_log_grid(log_step: f64) -> Result<Self> {
        let c = GroupCarrier::PositiveRealsLogGrid { log_step };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GroupCarrier::FiniteCyclic { order: 0 } => Err(Error::InvalidCarrier(
                "cyclic order must be at least 1".into(),
            )),
            GroupCarrier::RealLineGrid { step: h }
            | GroupCarrier::PositiveRealsLogGrid { log_step: h }
                if !(h.is_finite() && h > 0.0) =>
            {
                Err(Error::InvalidCarrier(format!(
                    "grid step must be positive, got {h}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The cyclic order, if the carrier is finite.
    pub fn order(&self) -> Option<u32> {
        match *self {
            GroupCarrier::FiniteCyclic { order } => Some(order),
            _ => None,
        }
    }

    pub fn is_cyclic(&self) -> bool {
        self.order().is_some()
    }

    /// Haar mass of grid cell `k`. Constant on every carrier.
    pub fn cell_mass(&self, _k: i64) -> f64 {
        match *self {
            GroupCarrier::FiniteCyclic { .. } | GroupCarrier::IntegerLine => 1.0,
            GroupCarrier::RealLineGrid { step } => step,
            GroupCarrier::PositiveRealsLogGrid { log_step } => log_step,
        }
    }

    /// Reduce an index into canonical form (`0..order` on cyclic carriers).
    pub fn normalize(&self, k: i64) -> i64 {
        match *self {
            GroupCarrier::FiniteCyclic { order } => k.mod_floor(&i64::from(order)),
            _ => k,
        }
    }

    /// Native coordinate of grid point `k`.
    pub fn native(&self, k: i64) -> f64 {
        match *self {
            GroupCarrier::FiniteCyclic { .. } => self.normalize(k) as f64,
            GroupCarrier::IntegerLine => k as f64,
            GroupCarrier::RealLineGrid { step } => k as f64 * step,
            GroupCarrier::PositiveRealsLogGrid { log_step } => (k as f64 * log_step).exp(),
        }
    }

    /// Fractional grid position of a native coordinate.
    fn grid_position(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate {x}"
            )));
        }
        Ok(match *self {
            GroupCarrier::FiniteCyclic { .. } | GroupCarrier::IntegerLine => x,
            GroupCarrier::RealLineGrid { step } => x / step,
            GroupCarrier::PositiveRealsLogGrid { log_step } => {
                if x <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "coordinate {x} is not a positive real"
                    )));
                }
                x.ln() / log_step
            }
        })
    }

    /// Index of a native coordinate that must sit exactly on the grid.
    pub fn index_of_native(&self, x: f64) -> Result<i64> {
        let pos = self.grid_position(x)?;
        let nearest = pos.round();
        if (pos - nearest).abs() > ALIGN_TOL * pos.abs().max(1.0) {
            return Err(Error::MisalignedElement { value: x, nearest });
        }
        Ok(self.normalize(nearest as i64))
    }

    pub fn element(&self, index: i64) -> GroupElement {
        GroupElement {
            index: self.normalize(index),
        }
    }

    /// Group element at a native coordinate; misaligned values are rejected, never rounded.
    pub fn element_from_native(&self, x: f64) -> Result<GroupElement> {
        Ok(self.element(self.index_of_native(x)?))
    }

    /// Index of `x * a^m`.
    pub fn translate(&self, k: i64, a: GroupElement, m: i64) -> i64 {
        self.normalize(k + m * a.index)
    }

    /// Every grid point whose native coordinate lies in `[lo, hi]`.
    pub fn window_from_native(&self, lo: f64, hi: f64) -> Result<CompactWindow> {
        if lo > hi {
            return Err(Error::InvalidWindow(format!("[{lo}, {hi}] is reversed")));
        }
        let plo = self.grid_position(lo)?;
        let phi = self.grid_position(hi)?;
        let klo = (plo - ALIGN_TOL * plo.abs().max(1.0)).ceil() as i64;
        let khi = (phi + ALIGN_TOL * phi.abs().max(1.0)).floor() as i64;
        if klo > khi {
            return Ok(CompactWindow::empty());
        }
        if let GroupCarrier::FiniteCyclic { order } = *self {
            if klo < 0 || khi >= i64::from(order) {
                return Err(Error::InvalidWindow(format!(
                    "[{lo}, {hi}] leaves 0..{order}"
                )));
            }
        }
        CompactWindow::interval(klo, khi)
    }

    /// All of `Z_order`; `None` on line carriers.
    pub fn full_window(&self) -> Option<CompactWindow> {
        self.order()
            .map(|n| CompactWindow::interval(0, i64::from(n) - 1).expect("order >= 1"))
    }

    /// Haar measure of a window.
    pub fn window_mass(&self, w: &CompactWindow) -> f64 {
        w.len() as f64 * self.cell_mass(0)
    }

    /// `W a^m` as a window.
    pub fn translate_window(&self, w: &CompactWindow, a: GroupElement, m: i64) -> CompactWindow {
        match *self {
            GroupCarrier::FiniteCyclic { .. } => {
                CompactWindow::from_indices(w.indices().map(|k| self.translate(k, a, m)))
            }
            _ => w.shifted(m * a.index),
        }
    }

    /// Check that a window is admissible on this carrier.
    pub fn check_window(&self, w: &CompactWindow) -> Result<()> {
        if let (Some(order), Some(lo), Some(hi)) = (self.order(), w.min(), w.max()) {
            if lo < 0 || hi >= i64::from(order) {
                return Err(Error::InvalidWindow(format!(
                    "window {w} leaves 0..{order}"
                )));
            }
        }
        Ok(())
    }

    /// Order of `a`: `order / gcd(order, index)` on cyclic carriers, `Some(1)`
    /// for the identity of a line, `None` otherwise (the lines are torsion-free).
    pub fn torsion_order(&self, a: GroupElement) -> Option<u64> {
        match *self {
            GroupCarrier::FiniteCyclic { order } => {
                let order = i64::from(order);
                Some((order / order.gcd(&a.index)) as u64)
            }
            _ if a.index == 0 => Some(1),
            _ => None,
        }
    }

    /// True iff `a` passes through every compact subset. On the line carriers
    /// this is exactly `a != e`; torsion elements never do.
    pub fn is_compact_passing(&self, a: GroupElement) -> bool {
        !self.is_cyclic() && a.index != 0
    }

    /// Smallest `N` with `K ∩ K a^{±m} = ∅` for every `m >= N`.
    pub fn separation_bound(&self, k: &CompactWindow, a: GroupElement) -> Separation {
        if self.is_cyclic() {
            return Separation::Torsion;
        }
        if a.index == 0 {
            return Separation::NotCompactPassing;
        }
        let stride = a.index.unsigned_abs();
        // K ∩ (K + m s) ≠ ∅ iff m s is a difference of two points of K; the
        // difference set is the union of the pairwise interval differences.
        let mut last_hit: u64 = 0;
        for &(alo, ahi) in k.intervals() {
            for &(blo, bhi) in k.intervals() {
                let dlo = alo - bhi;
                let dhi = ahi - blo;
                if dhi < 0 {
                    continue;
                }
                let m = dhi.unsigned_abs() / stride;
                if m >= 1 && (m * stride) as i64 >= dlo {
                    last_hit = last_hit.max(m);
                }
            }
        }
        Separation::Bound(last_hit + 1)
    }
}

impl fmt::Display for GroupCarrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GroupCarrier::FiniteCyclic { order } => write!(f, "Z_{order} (counting measure)"),
            GroupCarrier::IntegerLine => write!(f, "Z (counting measure)"),
            GroupCarrier::RealLineGrid { step } => write!(f, "(R, +) grid, step {step}"),
            GroupCarrier::PositiveRealsLogGrid { log_step } => {
                write!(f, "(R+, x) log grid, log step {log_step}")
            }
        }
    }
}

/// Outcome of [`GroupCarrier::separation_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separation {
    Bound(u64),
    /// Torsion elements never separate a compact set from itself.
    Torsion,
    /// The identity on a line carrier.
    NotCompactPassing,
}

impl Separation {
    pub fn bound(&self) -> Option<u64> {
        match *self {
            Separation::Bound(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    index: i64,
}

impl GroupElement {
    pub fn index(&self) -> i64 {
        self.index
    }
}

/// A finite union of inclusive index ranges, kept sorted with touching
/// ranges merged.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CompactWindow {
    intervals: Vec<(i64, i64)>,
}

impl CompactWindow {
    pub fn empty() -> Self {
        CompactWindow::default()
    }

    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn singleton(k: i64) -> Self {
        CompactWindow {
            intervals: vec![(k, k)],
        }
    }

    pub fn new(mut intervals: Vec<(i64, i64)>) -> Result<Self> {
        if let Some(&(lo, hi)) = intervals.iter().find(|(lo, hi)| lo > hi) {
            return Err(Error::InvalidWindow(format!("[{lo}, {hi}] is reversed")));
        }
        intervals.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(CompactWindow { intervals: merged })
    }

    /// Build from an arbitrary collection of indices.
    pub fn from_indices(indices: impl IntoIterator<Item = i64>) -> Self {
        let mut ks: Vec<i64> = indices.into_iter().collect();
        ks.sort_unstable();
        ks.dedup();
        let mut intervals: Vec<(i64, i64)> = Vec::new();
        for k in ks {
            match intervals.last_mut() {
                Some(last) if k == last.1 + 1 => last.1 = k,
                _ => intervals.push((k, k)),
            }
        }
        CompactWindow { intervals }
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of grid cells.
    pub fn len(&self) -> u64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (hi - lo) as u64 + 1)
            .sum()
    }

    pub fn min(&self) -> Option<i64> {
        self.intervals.first().map(|iv| iv.0)
    }

    pub fn max(&self) -> Option<i64> {
        self.intervals.last().map(|iv| iv.1)
    }

    pub fn diameter(&self) -> Option<u64> {
        Some((self.max()? - self.min()?) as u64)
    }

    pub fn contains(&self, k: i64) -> bool {
        let i = self.intervals.partition_point(|&(_, hi)| hi < k);
        self.intervals.get(i).is_some_and(|&(lo, _)| lo <= k)
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.intervals.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    pub fn shifted(&self, d: i64) -> Self {
        CompactWindow {
            intervals: self
                .intervals
                .iter()
                .map(|&(lo, hi)| (lo + d, hi + d))
                .collect(),
        }
    }

    pub fn union(&self, other: &CompactWindow) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        CompactWindow::new(all).expect("intervals are well ordered")
    }

    pub fn intersection(&self, other: &CompactWindow) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (alo, ahi) = self.intervals[i];
            let (blo, bhi) = other.intervals[j];
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if ahi < bhi {
                i += 1;
            } else {
                j += 1;
            }
        }
        CompactWindow { intervals: out }
    }

    /// `self \ other`.
    pub fn difference(&self, other: &CompactWindow) -> Self {
        CompactWindow::from_indices(self.indices().filter(|&k| !other.contains(k)))
    }

    pub fn is_subset_of(&self, other: &CompactWindow) -> bool {
        self.indices().all(|k| other.contains(k))
    }

    pub fn is_disjoint_from(&self, other: &CompactWindow) -> bool {
        self.intersection(other).is_empty()
    }
}

impl fmt::Display for CompactWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|&(lo, hi)| format!("[{lo},{hi}]"))
            .collect();
        write!(f, "{}", parts.join("u"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force separation oracle: the smallest `N` such that no `m` in
    /// `N..=limit` has `K ∩ (K ± m a) ≠ ∅`.
    fn brute_separation(k: &CompactWindow, a: i64, limit: i64) -> u64 {
        let hits = |m: i64| {
            k.indices()
                .any(|x| k.contains(x + m * a) || k.contains(x - m * a))
        };
        let last = (1..=limit).filter(|&m| hits(m)).max().unwrap_or(0);
        last as u64 + 1
    }

    #[test]
    fn cell_masses() {
        assert_eq!(GroupCarrier::IntegerLine.cell_mass(7), 1.0);
        assert_eq!(
            GroupCarrier::real_line_grid(0.01).unwrap().cell_mass(0),
            0.01
        );
        assert_eq!(
            GroupCarrier::positive_reals_log_grid(0.01)
                .unwrap()
                .cell_mass(-50),
            0.01
        );
        assert_eq!(GroupCarrier::finite_cyclic(4).unwrap().cell_mass(3), 1.0);
    }

    #[test]
    fn invalid_carriers() {
        assert!(GroupCarrier::finite_cyclic(0).is_err());
        assert!(GroupCarrier::real_line_grid(0.0).is_err());
        assert!(GroupCarrier::positive_reals_log_grid(-1.0).is_err());
        assert!(GroupCarrier::real_line_grid(f64::NAN).is_err());
    }

    #[test]
    fn translate_examples() {
        let z = GroupCarrier::IntegerLine;
        assert_eq!(z.translate(5, z.element(2), -3), -1);

        let z4 = GroupCarrier::finite_cyclic(4).unwrap();
        assert_eq!(z4.translate(3, z4.element(1), 2), 1);

        let r = GroupCarrier::real_line_grid(0.5).unwrap();
        let a = r.element_from_native(2.0).unwrap();
        assert_eq!(a.index(), 4);
        assert_eq!(r.translate(0, a, 1), 4);
    }

    #[test]
    fn misaligned_element_rejected() {
        let r = GroupCarrier::real_line_grid(0.2).unwrap();
        assert!(matches!(
            r.element_from_native(0.3),
            Err(Error::MisalignedElement { .. })
        ));
        assert_eq!(r.element_from_native(0.6).unwrap().index(), 3);
    }

    #[test]
    fn log_grid_alignment() {
        let h = std::f64::consts::LN_2 / 70.0;
        let c = GroupCarrier::positive_reals_log_grid(h).unwrap();
        assert_eq!(c.element_from_native(0.5).unwrap().index(), -70);
        assert_eq!(c.index_of_native(2.0).unwrap(), 70);
        assert!(c.element_from_native(-1.0).is_err());
        let w = c.window_from_native(1.0, 2.0).unwrap();
        assert_eq!(w.intervals(), &[(0, 70)]);
    }

    #[test]
    fn native_windows_snap_to_grid_points() {
        let r = GroupCarrier::real_line_grid(0.05).unwrap();
        let k = r.window_from_native(0.0, 0.25).unwrap();
        assert_eq!(k.intervals(), &[(0, 5)]);
        let d = r.window_from_native(3.0, 4.0).unwrap();
        assert_eq!(d.intervals(), &[(60, 80)]);
        let z4 = GroupCarrier::finite_cyclic(4).unwrap();
        assert!(z4.window_from_native(0.0, 4.0).is_err());
    }

    #[test]
    fn separation_examples() {
        let z = GroupCarrier::IntegerLine;
        let k = CompactWindow::interval(0, 9).unwrap();
        assert_eq!(z.separation_bound(&k, z.element(2)), Separation::Bound(5));
        assert_eq!(brute_separation(&k, 2, 100), 5);

        let z6 = GroupCarrier::finite_cyclic(6).unwrap();
        let k = CompactWindow::interval(0, 2).unwrap();
        assert_eq!(z6.separation_bound(&k, z6.element(1)), Separation::Torsion);
        assert_eq!(z6.separation_bound(&k, z6.element(1)).bound(), None);

        let k = CompactWindow::singleton(0);
        assert_eq!(z.separation_bound(&k, z.element(1)), Separation::Bound(1));

        assert_eq!(
            z.separation_bound(&k, z.element(0)),
            Separation::NotCompactPassing
        );
    }

    #[test]
    fn separation_with_gaps_is_exact() {
        // {0, 10} under a = 3: no m >= 1 ever hits, unlike the diameter formula.
        let z = GroupCarrier::IntegerLine;
        let k = CompactWindow::new(vec![(0, 0), (10, 10)]).unwrap();
        assert_eq!(z.separation_bound(&k, z.element(3)), Separation::Bound(1));
        assert_eq!(z.separation_bound(&k, z.element(-5)), Separation::Bound(3));
        assert_eq!(brute_separation(&k, 5, 100), 3);
    }

    #[test]
    fn torsion_orders() {
        let z6 = GroupCarrier::finite_cyclic(6).unwrap();
        assert_eq!(z6.torsion_order(z6.element(4)), Some(3));
        // exhaustive: smallest n with 4n ≡ 0 mod 6
        assert_eq!((1..=6).find(|n| (4 * n) % 6 == 0), Some(3));
        assert_eq!(
            GroupCarrier::IntegerLine.torsion_order(GroupElement { index: 3 }),
            None
        );
        let z5 = GroupCarrier::finite_cyclic(5).unwrap();
        assert_eq!(z5.torsion_order(z5.element(0)), Some(1));
        assert_eq!(
            GroupCarrier::IntegerLine.torsion_order(GroupElement { index: 0 }),
            Some(1)
        );
    }

    #[test]
    fn window_set_algebra() {
        let a = CompactWindow::new(vec![(0, 3), (7, 9)]).unwrap();
        let b = CompactWindow::interval(2, 8).unwrap();
        assert_eq!(a.intersection(&b).intervals(), &[(2, 3), (7, 8)]);
        assert_eq!(a.union(&b).intervals(), &[(0, 9)]);
        assert_eq!(a.difference(&b).intervals(), &[(0, 1), (9, 9)]);
        assert_eq!(a.len(), 7);
        assert!(a.contains(8) && !a.contains(5));
        assert_eq!(
            CompactWindow::new(vec![(3, 4), (0, 2)])
                .unwrap()
                .intervals(),
            &[(0, 4)]
        );
        assert!(CompactWindow::interval(2, 1).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn window() -> impl Strategy<Value = CompactWindow> {
            prop::collection::vec((-30i64..30, 0i64..8), 1..4).prop_map(|v| {
                CompactWindow::new(v.into_iter().map(|(lo, w)| (lo, lo + w)).collect()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn translate_round_trip(k in -1000i64..1000, a in -50i64..50, m in -40i64..40, order in 1u32..20) {
                let z = GroupCarrier::IntegerLine;
                let e = z.element(a);
                prop_assert_eq!(z.translate(z.translate(k, e, m), e, -m), k);
                let c = GroupCarrier::finite_cyclic(order).unwrap();
                let e = c.element(a);
                let k = c.normalize(k);
                prop_assert_eq!(c.translate(c.translate(k, e, m), e, -m), k);
            }

            #[test]
            fn torsion_order_closes_orbit(order in 1u32..30, a in 0i64..30, k in 0i64..30) {
                let c = GroupCarrier::finite_cyclic(order).unwrap();
                let e = c.element(a);
                let g = c.torsion_order(e).unwrap() as i64;
                let k = c.normalize(k);
                prop_assert_eq!(c.translate(k, e, g), k);
                for n in 1..g {
                    prop_assert_ne!(c.translate(0, e, n), 0);
                }
            }

            #[test]
            fn separation_matches_brute_force(k in window(), a in prop_oneof![-7i64..0, 1i64..8]) {
                let z = GroupCarrier::IntegerLine;
                let n = z.separation_bound(&k, z.element(a)).bound().unwrap();
                let hits = |m: i64| !k.is_disjoint_from(&k.shifted(m * a)) || !k.is_disjoint_from(&k.shifted(-m * a));
                for m in n as i64..=n as i64 + 100 {
                    prop_assert!(!hits(m));
                }
                if n > 1 {
                    prop_assert!(hits(n as i64 - 1));
                }
            }
        }
    }
}
