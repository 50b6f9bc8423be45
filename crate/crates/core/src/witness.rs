//! Constructive witness certificates for membership in the extended limit
//! set `J_T(x)`: a pair `(g, n)` with `‖g - x‖_p < ε` and `‖T^n g - f‖_p < ε`.
//!
//! The builders follow the constructions used to prove the J-class criteria:
//!
//! * zero base point: `g(k) = ω̃_n(k + n a) (f χ_E)(k + n a)`, so that
//!   `T^n g = f χ_E` by telescoping;
//! * indicator base point: the same shifted function plus `χ_K`;
//! * torsion: `h = S^{γ m}(g χ_E)`, so that `T^{γ m} h = g χ_E`.
//!
//! `E` is chosen with the thresholds of those constructions. They bound
//! `p`-th powers of the norms, so an `n` is only accepted once both norms
//! themselves are below `ε`, and every certificate is re-verified.

use std::fmt;

use crate::criteria::check_power_bounded_torsion;
use crate::error::{Error, Result};
use crate::group::{CompactWindow, Separation};
use crate::lp::LpFunction;
use crate::numfmt::format_value;
use crate::operator::WeightedTranslation;

/// Agreement required between the closed-form and repeated paths.
pub const PATH_TOLERANCE: f64 = 1e-6;

const THRESHOLD_NOTE: &str = "E thresholds taken from the construction; n accepted only once \
                              both norms are below epsilon";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuilderId {
    Zero,
    JVector,
    Torsion,
}

impl fmt::Display for BuilderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuilderId::Zero => "zero",
            BuilderId::JVector => "jvector",
            BuilderId::Torsion => "torsion",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessCertificate {
    pub builder: BuilderId,
    pub base_point: LpFunction,
    pub target: LpFunction,
    pub n: u64,
    pub g: LpFunction,
    /// `‖g - base_point‖_p`.
    pub norm_base: f64,
    /// `‖T^n g - target‖_p`.
    pub norm_image: f64,
    pub epsilon: f64,
    /// The retained part of the target's support.
    pub e: CompactWindow,
    pub notes: Vec<String>,
    /// Set when the repeated-application path overflowed and only the
    /// closed form was used.
    pub closed_form_only: bool,
}

impl WitnessCertificate {
    pub const CSV_HEADER: &'static str = "builder,n,epsilon,norm_base,norm_image,valid";

    pub fn csv_row(&self, valid: bool) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.builder,
            self.n,
            format_value(self.epsilon),
            format_value(self.norm_base),
            format_value(self.norm_image),
            valid
        )
    }
}

/// Diagnostics of a builder that found no qualifying `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessFailure {
    pub builder: BuilderId,
    pub reason: String,
    pub search_bound: u64,
    /// The scanned `n` with the smallest `max(norm_base, norm_image)`.
    pub best_n: Option<u64>,
    pub best_norm_base: f64,
    pub best_norm_image: f64,
    pub best_residual_mass: f64,
}

impl fmt::Display for WitnessFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} witness not found up to n = {}: {}",
            self.builder, self.search_bound, self.reason
        )?;
        if let Some(n) = self.best_n {
            write!(
                f,
                " (best n = {n}: norm_base {}, norm_image {}, residual mass {})",
                format_value(self.best_norm_base),
                format_value(self.best_norm_image),
                format_value(self.best_residual_mass)
            )?;
        }
        Ok(())
    }
}

/// Outcome of [`verify_detailed`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verification {
    pub valid: bool,
    pub norm_base: f64,
    pub norm_image: f64,
    /// `‖T^n g - target‖_p` through `n`-fold application, when it stayed finite.
    pub repeated_norm_image: Option<f64>,
    pub paths_agree: bool,
    pub recorded_norms_match: bool,
}

impl Verification {
    pub fn closed_form_only(&self) -> bool {
        self.repeated_norm_image.is_none()
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= PATH_TOLERANCE * a.max(b).max(scale)
}

/// Recompute both norms from scratch and decide validity.
pub fn verify_detailed(cert: &WitnessCertificate, t: &WeightedTranslation) -> Result<Verification> {
    let norm_base = cert.g.sub(&cert.base_point)?.p_norm();
    let norm_image = t.iterate(&cert.g, cert.n)?.sub(&cert.target)?.p_norm();
    let repeated = match t.apply_repeated(&cert.g, cert.n) {
        Ok(img) => Some(img.sub(&cert.target)?.p_norm()),
        Err(Error::Range { .. }) => None,
        Err(e) => return Err(e),
    };
    let scale = cert.target.p_norm();
    let paths_agree = repeated.is_none_or(|r| close(r, norm_image, scale));
    let recorded_norms_match =
        close(cert.norm_base, norm_base, scale) && close(cert.norm_image, norm_image, scale);
    let below = |v: f64| v.is_finite() && v < cert.epsilon;
    let valid = paths_agree
        && recorded_norms_match
        && below(norm_base)
        && below(norm_image)
        && repeated.is_none_or(below);
    Ok(Verification {
        valid,
        norm_base,
        norm_image,
        repeated_norm_image: repeated,
        paths_agree,
        recorded_norms_match,
    })
}

/// `true` iff the certificate is VALID for `t`. Errors count as invalid.
pub fn verify(cert: &WitnessCertificate, t: &WeightedTranslation) -> bool {
    verify_detailed(cert, t).is_ok_and(|v| v.valid)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )))
    }
}

fn check_operand(t: &WeightedTranslation, f: &LpFunction) -> Result<()> {
    if f.carrier() != t.carrier() || f.p() != t.p() {
        return Err(Error::CarrierMismatch);
    }
    Ok(())
}

/// `(Σ mass · exp(p · l))^{1/p}` over log-magnitudes `l`, without overflow.
fn norm_from_logs(logs: impl Iterator<Item = f64> + Clone, mass: f64, p: f64) -> f64 {
    let top = logs.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    let s: f64 = logs.map(|l| ((l - top) * p).exp()).sum();
    (top + (mass * s).ln() / p).exp()
}

/// Tracks the scanned `n` closest to success.
struct Best {
    n: Option<u64>,
    score: f64,
    base: f64,
    image: f64,
    residual: f64,
}

impl Best {
    fn new() -> Self {
        Best {
            n: None,
            score: f64::INFINITY,
            base: f64::INFINITY,
            image: f64::INFINITY,
            residual: f64::INFINITY,
        }
    }

    fn offer(&mut self, n: u64, base: f64, image: f64, residual: f64) {
        let score = base.max(image);
        if self.n.is_none() || score < self.score {
            *self = Best {
                n: Some(n),
                score,
                base,
                image,
                residual,
            };
        }
    }

    fn fail(self, builder: BuilderId, reason: impl Into<String>, search_bound: u64) -> Error {
        Error::WitnessNotFound(Box::new(WitnessFailure {
            builder,
            reason: reason.into(),
            search_bound,
            best_n: self.n,
            best_norm_base: self.base,
            best_norm_image: self.image,
            best_residual_mass: self.residual,
        }))
    }
}

/// `ω̃_n(k + n a) (f χ_E)(k + n a)`, built in the log domain.
fn shifted_weighted(
    t: &WeightedTranslation,
    f: &LpFunction,
    e: &CompactWindow,
    n: u64,
) -> Result<LpFunction> {
    let c = t.carrier();
    let shift = n as i64 * t.element().index();
    let pr = t.products();
    LpFunction::from_fn(c, t.p(), &e.shifted(-shift), |k| {
        let src = k + shift;
        let v = f.get(src);
        v.signum() * (v.abs().ln() + pr.log_omega_tilde(src, n)).exp()
    })
}

fn separation_start(t: &WeightedTranslation, w: &CompactWindow) -> Result<u64> {
    match t.carrier().separation_bound(w, t.element()) {
        Separation::Bound(n) => Ok(n.max(1)),
        Separation::Torsion | Separation::NotCompactPassing => Err(Error::NotCompactPassing),
    }
}

/// Per-cell running `log ω̃_n` over `σ(f)`.
struct TildeCells {
    cells: Vec<(i64, f64)>,
    logs: Vec<f64>,
}

impl TildeCells {
    fn new(f: &LpFunction) -> Self {
        let cells: Vec<(i64, f64)> = f.entries().filter(|&(_, v)| v != 0.0).collect();
        let logs = vec![0.0; cells.len()];
        TildeCells { cells, logs }
    }

    fn advance(&mut self, t: &WeightedTranslation, n: u64) {
        let c = t.carrier();
        let back = -(n as i64 - 1);
        for ((k, _), l) in self.cells.iter().zip(self.logs.iter_mut()) {
            *l -= t.log_weight(c.translate(*k, t.element(), back));
        }
    }

    /// `(E, log|ω̃ f| on E, log|f| off E)` for the threshold `log_thr`.
    fn split(&self, log_thr: f64) -> (CompactWindow, Vec<f64>, Vec<f64>) {
        let mut inside = Vec::new();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (&(k, v), &l) in self.cells.iter().zip(&self.logs) {
            if l < log_thr {
                inside.push(k);
                kept.push(l + v.abs().ln());
            } else {
                dropped.push(v.abs().ln());
            }
        }
        (CompactWindow::from_indices(inside), kept, dropped)
    }
}

fn finish(
    t: &WeightedTranslation,
    mut cert: WitnessCertificate,
) -> Result<Option<WitnessCertificate>> {
    let v = verify_detailed(&cert, t)?;
    cert.norm_base = v.norm_base;
    cert.norm_image = v.norm_image;
    cert.closed_form_only = v.closed_form_only();
    if cert.closed_form_only {
        cert.notes
            .push("repeated application overflowed; verified by the closed form only".into());
    }
    Ok(v.valid.then_some(cert))
}

/// Witness for `f ∈ J_T(0)` on a line carrier with a compact-passing `a`.
///
/// Scans `n` from the separation bound of `σ(f)` with
/// `E = {k ∈ σ(f) : ω̃_n(k) < ε / ‖f‖_p^p}`, requiring
/// `λ(σ(f) \ E) < ε / ‖f‖_∞^p`.
pub fn build_witness_zero(
    t: &WeightedTranslation,
    f: &LpFunction,
    eps: f64,
    n_max: u64,
) -> Result<WitnessCertificate> {
    check_epsilon(eps)?;
    check_operand(t, f)?;
    if !t.carrier().is_compact_passing(t.element()) {
        return Err(Error::NotCompactPassing);
    }
    let support = f.support();
    if support.is_empty() {
        return Err(Error::InvalidParameter("target must be nonzero".into()));
    }
    let start = separation_start(t, &support)?;
    let p = t.p();
    let mass = t.carrier().cell_mass(0);
    let log_thr = eps.ln() - f.p_norm_pow().ln();
    let residual_cap = eps / f.ess_sup().powf(p);

    let mut cells = TildeCells::new(f);
    let mut best = Best::new();
    for n in 1..=n_max {
        cells.advance(t, n);
        if n < start {
            continue;
        }
        let (e, kept, dropped) = cells.split(log_thr);
        let residual = dropped.len() as f64 * mass;
        let base = norm_from_logs(kept.iter().copied(), mass, p);
        let image = norm_from_logs(dropped.iter().copied(), mass, p);
        best.offer(n, base, image, residual);
        if residual >= residual_cap || base >= eps || image >= eps {
            continue;
        }
        let cert = WitnessCertificate {
            builder: BuilderId::Zero,
            base_point: LpFunction::zero(t.carrier(), p)?,
            target: f.clone(),
            n,
            g: shifted_weighted(t, f, &e, n)?,
            norm_base: base,
            norm_image: image,
            epsilon: eps,
            e,
            notes: vec![THRESHOLD_NOTE.into()],
            closed_form_only: false,
        };
        if let Some(cert) = finish(t, cert)? {
            return Ok(cert);
        }
    }
    Err(best.fail(
        BuilderId::Zero,
        "no n met the decay thresholds on the support",
        n_max,
    ))
}

/// Witness for `f ∈ J_T(χ_K)` on a line carrier with a compact-passing `a`.
///
/// Scans `n` from the separation bound of `σ(f) ∪ K` with the zero-builder
/// set `E`, requiring `λ(σ(f) \ E) < ε / (2^p ‖f‖_∞^p)` and
/// `max_K ω_n < ε / (2^p ‖f‖_p^p)`. For `f = 0` only `‖T^n χ_K‖_p < ε` is
/// required.
pub fn build_witness_jvector(
    t: &WeightedTranslation,
    f: &LpFunction,
    k_window: &CompactWindow,
    eps: f64,
    n_max: u64,
) -> Result<WitnessCertificate> {
    check_epsilon(eps)?;
    check_operand(t, f)?;
    if !t.carrier().is_compact_passing(t.element()) {
        return Err(Error::NotCompactPassing);
    }
    if k_window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let c = t.carrier();
    let p = t.p();
    let mass = c.cell_mass(0);
    let support = f.support();
    let start = separation_start(t, &support.union(k_window))?;
    let chi_k = LpFunction::indicator(c, p, k_window)?;
    let two_p = 2f64.powf(p);
    let zero_target = support.is_empty();
    let (log_thr, residual_cap, log_k_cap) = if zero_target {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        let fp = f.p_norm_pow();
        (
            eps.ln() - fp.ln(),
            eps / (two_p * f.ess_sup().powf(p)),
            eps.ln() - (two_p * fp).ln(),
        )
    };

    let k_cells: Vec<i64> = k_window.indices().collect();
    let mut k_logs = vec![0.0_f64; k_cells.len()];
    let mut cells = TildeCells::new(f);
    let mut best = Best::new();
    for n in 1..=n_max {
        cells.advance(t, n);
        for (l, &k) in k_logs.iter_mut().zip(&k_cells) {
            *l += t.log_weight(c.translate(k, t.element(), n as i64));
        }
        if n < start {
            continue;
        }
        let (e, kept, dropped) = cells.split(log_thr);
        let residual = dropped.len() as f64 * mass;
        let base = norm_from_logs(kept.iter().copied(), mass, p);
        // supports of f - fχ_E and T^n χ_K are disjoint past the separation bound
        let image = norm_from_logs(
            dropped.iter().copied().chain(k_logs.iter().copied()),
            mass,
            p,
        );
        best.offer(n, base, image, residual);
        let k_max = k_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if residual >= residual_cap || k_max >= log_k_cap || base >= eps || image >= eps {
            continue;
        }
        let g = shifted_weighted(t, f, &e, n)?.add(&chi_k)?;
        let cert = WitnessCertificate {
            builder: BuilderId::JVector,
            base_point: chi_k.clone(),
            target: f.clone(),
            n,
            g,
            norm_base: base,
            norm_image: image,
            epsilon: eps,
            e,
            notes: vec![THRESHOLD_NOTE.into()],
            closed_form_only: false,
        };
        if let Some(cert) = finish(t, cert)? {
            return Ok(cert);
        }
    }
    Err(best.fail(
        BuilderId::JVector,
        "no n met both the support and the K-side thresholds",
        n_max,
    ))
}

/// Witness for `g ∈ J_T(0)` on a cyclic carrier, `a` of order `γ`.
///
/// Scans `m = 1..=n_max` with `n' = γ m`, `F = σ(g)` and
/// `E = {k ∈ F : ω_{n'}(k)^{-1} < ε / ‖g‖_p}`, requiring `λ(F \ E) < δ`.
/// The witness is `h = S^{n'}(g χ_E)` with `T^{n'} h = g χ_E`.
pub fn build_witness_torsion(
    t: &WeightedTranslation,
    g_target: &LpFunction,
    eps: f64,
    delta: f64,
    n_max: u64,
) -> Result<WitnessCertificate> {
    check_epsilon(eps)?;
    check_operand(t, g_target)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let c = t.carrier();
    let Some(gamma) = c.order().and(c.torsion_order(t.element())) else {
        return Err(Error::NotCyclic);
    };
    let f_window = g_target.support();
    if f_window.is_empty() {
        return Err(Error::InvalidParameter("target must be nonzero".into()));
    }
    let p = t.p();
    let mass = c.cell_mass(0);
    let log_thr = eps.ln() - g_target.p_norm().ln();
    let cells: Vec<(i64, f64)> = f_window.indices().map(|k| (k, g_target.get(k))).collect();
    // log ω_γ per cell; ω_{γm} = ω_γ^m on a cycle
    let cycle: Vec<f64> = cells
        .iter()
        .map(|&(k, _)| t.products().log_omega(k, gamma))
        .collect();

    let mut best = Best::new();
    for m in 1..=n_max {
        let n = gamma * m;
        let mut inside = Vec::new();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (&(k, v), &lc) in cells.iter().zip(&cycle) {
            let inv = -(m as f64) * lc;
            if inv < log_thr {
                inside.push(k);
                kept.push(inv + v.abs().ln());
            } else {
                dropped.push(v.abs().ln());
            }
        }
        let residual = dropped.len() as f64 * mass;
        let base = norm_from_logs(kept.iter().copied(), mass, p);
        let image = norm_from_logs(dropped.iter().copied(), mass, p);
        best.offer(n, base, image, residual);
        if residual >= delta || base >= eps || image >= eps {
            continue;
        }
        let e = CompactWindow::from_indices(inside);
        let cert = WitnessCertificate {
            builder: BuilderId::Torsion,
            base_point: LpFunction::zero(c, p)?,
            target: g_target.clone(),
            n,
            g: t.inverse_iterate(&g_target.restrict(&e), n)?,
            norm_base: base,
            norm_image: image,
            epsilon: eps,
            e,
            notes: vec![THRESHOLD_NOTE.into(), format!("n = {gamma} * {m}")],
            closed_form_only: false,
        };
        if let Some(cert) = finish(t, cert)? {
            return Ok(cert);
        }
    }
    let reason = if check_power_bounded_torsion(t).holds() {
        "operator is power bounded (max ω_γ <= 1), so ω_n^{-1} never decays"
    } else {
        "torsion condition not met on the support"
    };
    Err(best.fail(BuilderId::Torsion, reason, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupCarrier;
    use crate::weight::{Segment, Weight};

    const INF: f64 = f64::INFINITY;

    fn seg(lo: f64, hi: f64, li: bool, hi_i: bool, slope: f64, intercept: f64) -> Segment {
        Segment {
            lo,
            hi,
            lo_inclusive: li,
            hi_inclusive: hi_i,
            slope,
            intercept,
        }
    }

    fn example1(h: f64) -> WeightedTranslation {
        let c = GroupCarrier::real_line_grid(h).unwrap();
        let w = Weight::piecewise(
            vec![
                seg(-INF, -1.0, false, true, 0.0, 3.0),
                seg(-1.0, 1.0, false, false, -0.5, 1.0),
                seg(1.0, INF, true, false, 0.0, 2.0),
            ],
            None,
        )
        .unwrap();
        WeightedTranslation::new(c, c.element_from_native(1.0).unwrap(), w, 2.0).unwrap()
    }

    fn example2() -> WeightedTranslation {
        let c = GroupCarrier::positive_reals_log_grid(std::f64::consts::LN_2 / 70.0).unwrap();
        WeightedTranslation::new(
            c,
            c.element_from_native(0.5).unwrap(),
            Weight::exponential(1.0).unwrap(),
            2.0,
        )
        .unwrap()
    }

    fn example3(h: f64) -> WeightedTranslation {
        let c = GroupCarrier::real_line_grid(h).unwrap();
        let w = Weight::piecewise(
            vec![
                seg(-INF, -1.0, false, true, 0.0, 2.0),
                seg(-1.0, 0.0, false, false, -1.75, 0.25),
                seg(0.0, 1.0, true, true, 1.75, 0.25),
                seg(1.0, 2.0, false, true, -1.75, 3.75),
            ],
            Some(crate::weight::Periodicity {
                start: 2.0,
                period: 2.0,
            }),
        )
        .unwrap();
        WeightedTranslation::new(c, c.element_from_native(2.0).unwrap(), w, 2.0).unwrap()
    }

    fn cyclic(order: u32, a: i64, w: Weight) -> WeightedTranslation {
        let c = GroupCarrier::finite_cyclic(order).unwrap();
        WeightedTranslation::new(c, c.element(a), w, 2.0).unwrap()
    }

    fn chi_native(t: &WeightedTranslation, lo: f64, hi: f64) -> LpFunction {
        let c = t.carrier();
        LpFunction::indicator(c, t.p(), &c.window_from_native(lo, hi).unwrap()).unwrap()
    }

    fn failure(r: Result<WitnessCertificate>) -> WitnessFailure {
        match r {
            Err(Error::WitnessNotFound(f)) => *f,
            other => panic!("expected a witness failure, got {other:?}"),
        }
    }

    fn assert_telescopes(t: &WeightedTranslation, cert: &WitnessCertificate) {
        let img = t.iterate(&cert.g, cert.n).unwrap();
        let fe = cert.target.restrict(&cert.e);
        for (k, v) in img.entries() {
            let want = fe.get(k);
            assert!(
                (v - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE),
                "k={k}"
            );
        }
        for (k, v) in fe.entries() {
            assert!((img.get(k) - v).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn example1_zero_witness() {
        let t = example1(0.25);
        let f = chi_native(&t, 0.0, 1.0);
        let cert = build_witness_zero(&t, &f, 1e-2, 200).unwrap();
        assert!(cert.n <= 40);
        assert!(verify(&cert, &t));
        assert!(cert.norm_base < 1e-2 && cert.norm_image < 1e-2);
        assert_telescopes(&t, &cert);
        assert_eq!(cert.e, f.support());
        assert!(!cert.closed_form_only);
    }

    #[test]
    fn example2_zero_witness_needs_the_closed_form() {
        let t = example2();
        let f = chi_native(&t, 1.0, 2.0);
        let cert = build_witness_zero(&t, &f, 1e-2, 100).unwrap();
        assert!(verify(&cert, &t));
        assert_telescopes(&t, &cert);
        let v = verify_detailed(&cert, &t).unwrap();
        assert_eq!(v.closed_form_only(), cert.closed_form_only);
    }

    #[test]
    fn zero_witness_norms_match_the_construction() {
        let t = example1(0.1);
        let c = t.carrier();
        let f = LpFunction::from_fn(c, 2.0, &c.window_from_native(-0.5, 0.7).unwrap(), |k| {
            (k as f64 * 0.3).sin() + 1.5
        })
        .unwrap();
        let cert = build_witness_zero(&t, &f, 1e-2, 400).unwrap();
        let pr = t.products();
        let base: f64 = cert
            .e
            .indices()
            .map(|k| 0.1 * (pr.log_omega_tilde(k, cert.n).exp() * f.get(k).abs()).powi(2))
            .sum();
        assert!((cert.norm_base - base.sqrt()).abs() <= 1e-12 * base.sqrt().max(1e-300));
        let image: f64 = f
            .support()
            .difference(&cert.e)
            .indices()
            .map(|k| 0.1 * f.get(k).powi(2))
            .sum();
        assert!((cert.norm_image - image.sqrt()).abs() <= 1e-10);
    }

    #[test]
    fn identity_weight_has_no_zero_witness() {
        let z = GroupCarrier::IntegerLine;
        let t =
            WeightedTranslation::new(z, z.element(1), Weight::constant(1.0).unwrap(), 2.0).unwrap();
        let f = LpFunction::indicator(z, 2.0, &CompactWindow::interval(0, 3).unwrap()).unwrap();
        let fail = failure(build_witness_zero(&t, &f, 1e-2, 50));
        assert_eq!(fail.builder, BuilderId::Zero);
        assert_eq!(fail.search_bound, 50);
        assert!(fail.best_n.is_some());
        assert_eq!(fail.best_residual_mass, 4.0);
    }

    #[test]
    fn example3_jvector_witness() {
        let t = example3(0.05);
        let c = t.carrier();
        let k = c.window_from_native(0.0, 0.25).unwrap();
        let f = chi_native(&t, 3.0, 4.0);
        let cert = build_witness_jvector(&t, &f, &k, 1e-2, 500).unwrap();
        assert!(verify(&cert, &t));
        assert!(cert.norm_base < 1e-2 && cert.norm_image < 1e-2);
        assert_eq!(cert.base_point, LpFunction::indicator(c, 2.0, &k).unwrap());
        let sep = c
            .separation_bound(&f.support().union(&k), t.element())
            .bound()
            .unwrap();
        assert!(cert.n >= sep);
    }

    #[test]
    fn jvector_with_zero_target() {
        let t = example3(0.05);
        let c = t.carrier();
        let k = c.window_from_native(0.0, 0.25).unwrap();
        let f = LpFunction::zero(c, 2.0).unwrap();
        let cert = build_witness_jvector(&t, &f, &k, 1e-2, 500).unwrap();
        assert_eq!(cert.norm_base, 0.0);
        let direct = t
            .iterate(&LpFunction::indicator(c, 2.0, &k).unwrap(), cert.n)
            .unwrap();
        assert!((cert.norm_image - direct.p_norm()).abs() <= 1e-12);
        assert!(verify(&cert, &t));
    }

    #[test]
    fn growing_weight_fails_on_the_k_side() {
        let z = GroupCarrier::IntegerLine;
        let t =
            WeightedTranslation::new(z, z.element(1), Weight::constant(2.0).unwrap(), 2.0).unwrap();
        let f = LpFunction::indicator(z, 2.0, &CompactWindow::interval(0, 2).unwrap()).unwrap();
        let k = CompactWindow::interval(-5, -4).unwrap();
        let fail = failure(build_witness_jvector(&t, &f, &k, 1e-2, 60));
        assert!(fail.best_norm_base < 1e-2);
        assert!(fail.best_norm_image > 1.0);
    }

    #[test]
    fn torsion_witness() {
        let t = cyclic(4, 1, Weight::constant(2.0).unwrap());
        let c = t.carrier();
        let g = LpFunction::indicator(c, 2.0, &CompactWindow::interval(0, 1).unwrap()).unwrap();
        let cert = build_witness_torsion(&t, &g, 1e-3, 0.5, 100).unwrap();
        // 2^{-n} < 1e-3 / sqrt(2) first holds at n = 11; the next multiple of 4 is 12
        assert_eq!(cert.n, 12);
        assert!(verify(&cert, &t));
        let back = t.iterate(&cert.g, cert.n).unwrap();
        for k in 0..4 {
            assert!((back.get(k) - g.get(k)).abs() <= 1e-12);
        }
        // ‖h‖_p^p <= max_E exp(-p log ω_n) ‖g‖_p^p
        let bound = cert
            .e
            .indices()
            .map(|k| (-2.0 * t.products().log_omega(k, cert.n)).exp())
            .fold(0.0, f64::max)
            * g.p_norm_pow();
        assert!(cert.g.p_norm_pow() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn power_bounded_has_no_torsion_witness() {
        let t = cyclic(4, 1, Weight::constant(1.0).unwrap());
        let g = LpFunction::indicator(t.carrier(), 2.0, &CompactWindow::interval(0, 1).unwrap())
            .unwrap();
        let fail = failure(build_witness_torsion(&t, &g, 1e-3, 0.5, 100));
        assert!(fail.reason.contains("power bounded"));
    }

    #[test]
    fn builders_check_their_carrier() {
        let t = cyclic(4, 1, Weight::constant(2.0).unwrap());
        let g = LpFunction::indicator(t.carrier(), 2.0, &CompactWindow::interval(0, 1).unwrap())
            .unwrap();
        assert!(matches!(
            build_witness_zero(&t, &g, 1e-2, 10),
            Err(Error::NotCompactPassing)
        ));
        let line = example1(0.25);
        let f = chi_native(&line, 0.0, 1.0);
        assert!(matches!(
            build_witness_torsion(&line, &f, 1e-2, 0.5, 10),
            Err(Error::NotCyclic)
        ));
        assert!(build_witness_zero(&line, &f, 0.0, 10).is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let t = example1(0.25);
        let f = chi_native(&t, 0.0, 1.0);
        let cert = build_witness_zero(&t, &f, 1e-2, 200).unwrap();

        let mut scaled = cert.clone();
        scaled.g = scaled.g.scale(2.0).unwrap();
        assert!(!verify(&scaled, &t));

        let mut tight = cert.clone();
        tight.epsilon = cert.norm_base.max(cert.norm_image) * 0.5;
        assert!(!verify(&tight, &t));

        let mut shifted = cert.clone();
        shifted.n += 1;
        assert!(!verify(&shifted, &t));
    }

    #[test]
    fn csv_row_layout() {
        let t = cyclic(4, 1, Weight::constant(2.0).unwrap());
        let g = LpFunction::indicator(t.carrier(), 2.0, &CompactWindow::interval(0, 1).unwrap())
            .unwrap();
        let cert = build_witness_torsion(&t, &g, 1e-3, 0.5, 100).unwrap();
        let row = cert.csv_row(true);
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(
            fields.len(),
            WitnessCertificate::CSV_HEADER.split(',').count()
        );
        assert_eq!(fields[0], "torsion");
        assert_eq!(fields[1], "12");
        assert_eq!(fields[2], "0.001");
        assert_eq!(fields[4], "0");
        assert_eq!(fields[5], "true");
        assert_eq!(fields[3].parse::<f64>().unwrap(), cert.norm_base);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn zero_witnesses_telescope(
                rate in 0.05f64..0.8, a in 1i64..4, lo in -6i64..6, w in 0i64..5,
                vals in prop::collection::vec(0.2f64..3.0, 6), eps_exp in -4.0f64..-1.0,
            ) {
                let z = GroupCarrier::IntegerLine;
                let t = WeightedTranslation::new(z, z.element(a), Weight::exponential(rate).unwrap(), 2.0)
                    .unwrap();
                let f = LpFunction::from_fn(z, 2.0, &CompactWindow::interval(lo, lo + w).unwrap(), |k| {
                    vals[(k - lo) as usize]
                })
                .unwrap();
                let eps = 10f64.powf(eps_exp);
                if let Ok(cert) = build_witness_zero(&t, &f, eps, 300) {
                    prop_assert!(verify(&cert, &t));
                    assert_telescopes(&t, &cert);
                    let residual: f64 = f.support().difference(&cert.e).indices()
                        .map(|k| f.get(k).powi(2)).sum();
                    prop_assert!((cert.norm_image - residual.sqrt()).abs() <= 1e-10);
                    // a larger epsilon accepts the same n
                    let v = verify_detailed(&WitnessCertificate { epsilon: eps * 2.0, ..cert.clone() }, &t)
                        .unwrap();
                    prop_assert!(v.valid);
                }
            }

            #[test]
            fn torsion_round_trip(
                order in 2u32..9, a in 1i64..9, logs in prop::collection::vec(-1.0f64..1.0, 9), m in 1u64..=20,
            ) {
                let t = cyclic(order, a, Weight::log_table(logs[..order as usize].to_vec()).unwrap());
                let g = LpFunction::from_fn(t.carrier(), 2.0, &t.carrier().full_window().unwrap(), |k| k as f64 - 1.5)
                    .unwrap();
                let gamma = t.carrier().torsion_order(t.element()).unwrap();
                let n = gamma * m;
                let h = t.inverse_iterate(&g, n).unwrap();
                let back = t.iterate(&h, n).unwrap();
                for (k, v) in g.entries() {
                    prop_assert!((back.get(k) - v).abs() <= 1e-12 * v.abs());
                }
            }
        }
    }
}
