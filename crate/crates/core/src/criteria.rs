//! Mechanical checkers for the J-class conditions.
//!
//! Each checker scans `n = 1..=n_max` in order and builds the exceptional set
//! `E_n` by thresholding: `{k ∈ Δ : ω̃_n(k) < ε}` for the decay conditions,
//! `{k ∈ F : ω_n(k)^{-1} < ε}` for the torsion condition. All comparisons are
//! made on logarithms, so `E_n` is exactly monotone in `ε`.
//!
//! A `Holds` verdict certifies the finite condition that was actually
//! checked. The limit statement is only flagged (`trend_to_zero`) when the
//! achieved suprema strictly decrease over the last ten successful `n`.

use std::fmt;

use crate::error::{Error, Result};
use crate::group::{CompactWindow, GroupCarrier};
use crate::operator::WeightedTranslation;

/// Number of candidate `n` kept in a report.
const KEPT_WITNESSES: usize = 5;
/// Successful `n` inspected by the trend test.
const TREND_LEN: usize = 10;
/// Slack on `log max ω_γ <= 0` absorbing rounding in normalized weights.
const POWER_BOUND_LOG_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionId {
    /// Decay of `ω̃_n` on every compact window, as a necessary condition for
    /// a compact-passing element.
    NecessaryAperiodic,
    /// Decay of `ω̃_n` on `Δ` together with decay of `ω_n` on `K`, along one `n`.
    SufficientPair,
    /// Decay of `ω_n^{-1}` on `F` for a torsion element.
    TorsionCondition,
    /// Decay of `ω̃_n`, read as the characterization of `J(0) = L^p`.
    ZeroJEquivalence,
    /// `max ω_γ <= 1` for a torsion element of order `γ`.
    PowerBounded,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionId::NecessaryAperiodic => "NecessaryAperiodic",
            ConditionId::SufficientPair => "SufficientPair",
            ConditionId::TorsionCondition => "TorsionCondition",
            ConditionId::ZeroJEquivalence => "ZeroJEquivalence",
            ConditionId::PowerBounded => "PowerBounded",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportVerdict {
    Holds,
    FailsUpToBound,
    NotApplicable,
}

impl fmt::Display for ReportVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReportVerdict::Holds => "Holds",
            ReportVerdict::FailsUpToBound => "FailsUpToBound",
            ReportVerdict::NotApplicable => "NotApplicable",
        };
        f.write_str(s)
    }
}

/// One candidate `n` with its exceptional set.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessEntry {
    pub n: u64,
    pub e: CompactWindow,
    /// Supremum of the thresholded quantity over `E_n`, or over the whole
    /// window when `E_n` is empty.
    pub achieved_ess_sup: f64,
    /// `λ(window \ E_n)`.
    pub residual_mass: f64,
    /// `max_K ω_n`, for the sufficient pair.
    pub k_ess_sup: Option<f64>,
}

/// Per-`n` trace of a scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub n: u64,
    /// Supremum of the thresholded quantity over the whole window.
    pub window_sup: f64,
    pub residual_mass: f64,
    pub k_sup: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub verdict: ReportVerdict,
    pub witnesses: Vec<WitnessEntry>,
    pub first_success: Option<u64>,
    pub search_bound: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub window: CompactWindow,
    pub k_window: Option<CompactWindow>,
    pub trend_to_zero: bool,
    /// `max_k ω_γ(k)` for [`ConditionId::PowerBounded`].
    pub cycle_product_max: Option<f64>,
    pub trace: Vec<ScanRow>,
}

impl ConditionReport {
    fn not_applicable(condition: ConditionId, window: CompactWindow, params: &ScanParams) -> Self {
        ConditionReport {
            condition,
            verdict: ReportVerdict::NotApplicable,
            witnesses: Vec::new(),
            first_success: None,
            search_bound: params.n_max,
            epsilon: params.epsilon,
            delta: params.delta,
            window,
            k_window: None,
            trend_to_zero: false,
            cycle_product_max: None,
            trace: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == ReportVerdict::Holds
    }
}

/// Tolerances of a single scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanParams {
    pub epsilon: f64,
    pub delta: f64,
    pub n_max: u64,
}

impl ScanParams {
    pub fn new(epsilon: f64, delta: f64, n_max: u64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(ScanParams {
            epsilon,
            delta,
            n_max,
        })
    }
}

/// How `δ` is chosen per probe window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    Absolute(f64),
    /// `δ = factor * λ(Δ)`.
    RelativeToMass(f64),
}

/// Tolerances for [`classify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckParams {
    pub epsilon: f64,
    pub delta: DeltaRule,
    pub n_max: u64,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams {
            epsilon: 1e-4,
            delta: DeltaRule::RelativeToMass(1e-3),
            n_max: 500,
        }
    }
}

impl CheckParams {
    pub fn scan_params(
        &self,
        carrier: &GroupCarrier,
        window: &CompactWindow,
    ) -> Result<ScanParams> {
        let delta = match self.delta {
            DeltaRule::Absolute(d) => d,
            DeltaRule::RelativeToMass(f) => f * carrier.window_mass(window),
        };
        ScanParams::new(self.epsilon, delta, self.n_max)
    }
}

/// Thresholded exceptional set for one `n`.
struct Sublevel {
    e: CompactWindow,
    residual: f64,
    sup_on_e: Option<f64>,
    window_sup: f64,
}

fn sublevel(cells: &[i64], logs: &[f64], log_eps: f64, mass: f64) -> Sublevel {
    let mut inside = Vec::with_capacity(cells.len());
    let mut sup_e = f64::NEG_INFINITY;
    let mut sup_all = f64::NEG_INFINITY;
    for (&k, &l) in cells.iter().zip(logs) {
        sup_all = sup_all.max(l);
        if l < log_eps {
            inside.push(k);
            sup_e = sup_e.max(l);
        }
    }
    let missing = cells.len() - inside.len();
    Sublevel {
        e: CompactWindow::from_indices(inside),
        residual: missing as f64 * mass,
        sup_on_e: (sup_e > f64::NEG_INFINITY).then(|| sup_e.exp()),
        window_sup: sup_all.exp(),
    }
}

fn validate_window(carrier: &GroupCarrier, w: &CompactWindow) -> Result<Vec<i64>> {
    if w.is_empty() {
        return Err(Error::EmptyWindow);
    }
    carrier.check_window(w)?;
    Ok(w.indices().collect())
}

/// Collects candidates during a scan and assembles the final report.
struct ScanState {
    successes: Vec<WitnessEntry>,
    failures: Vec<WitnessEntry>,
    trace: Vec<ScanRow>,
}

impl ScanState {
    fn new() -> Self {
        ScanState {
            successes: Vec::new(),
            failures: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, entry: WitnessEntry, row: ScanRow) {
        self.trace.push(row);
        if ok {
            self.successes.push(entry);
        } else {
            self.failures.push(entry);
        }
    }

    fn finish(
        self,
        condition: ConditionId,
        params: &ScanParams,
        window: CompactWindow,
        k_window: Option<CompactWindow>,
    ) -> ConditionReport {
        let first_success = self.successes.first().map(|w| w.n);
        let trend_to_zero = self.successes.len() >= TREND_LEN
            && self.successes[self.successes.len() - TREND_LEN..]
                .windows(2)
                .all(|p| {
                    let score =
                        |w: &WitnessEntry| w.achieved_ess_sup.max(w.k_ess_sup.unwrap_or(0.0));
                    score(&p[1]) < score(&p[0])
                });
        let (verdict, witnesses) = if first_success.is_some() {
            let mut s = self.successes;
            s.truncate(KEPT_WITNESSES);
            (ReportVerdict::Holds, s)
        } else {
            let mut f = self.failures;
            f.sort_by(|a, b| {
                a.residual_mass
                    .total_cmp(&b.residual_mass)
                    .then(a.achieved_ess_sup.total_cmp(&b.achieved_ess_sup))
                    .then(a.n.cmp(&b.n))
            });
            f.truncate(KEPT_WITNESSES);
            (ReportVerdict::FailsUpToBound, f)
        };
        ConditionReport {
            condition,
            verdict,
            witnesses,
            first_success,
            search_bound: params.n_max,
            epsilon: params.epsilon,
            delta: params.delta,
            window,
            k_window,
            trend_to_zero,
            cycle_product_max: None,
            trace: self.trace,
        }
    }
}

/// Decay of `ω̃_n` on `Δ`: some `n <= n_max` with `λ(Δ \ E_n) < δ` where
/// `E_n = {ω̃_n < ε}`. Reported under [`ConditionId::ZeroJEquivalence`].
pub fn check_tilde_decay(
    t: &WeightedTranslation,
    delta_window: &CompactWindow,
    params: &ScanParams,
) -> Result<ConditionReport> {
    tilde_scan(t, delta_window, None, params, ConditionId::ZeroJEquivalence)
}

/// The same decay scan, labelled as the necessary condition for a J-class
/// operator with a compact-passing element.
pub fn check_necessary_condition(
    t: &WeightedTranslation,
    delta_window: &CompactWindow,
    params: &ScanParams,
) -> Result<ConditionReport> {
    tilde_scan(
        t,
        delta_window,
        None,
        params,
        ConditionId::NecessaryAperiodic,
    )
}

/// Decay of `ω̃_n` on `Δ` and of `ω_n` on `K` along a single `n`.
pub fn check_sufficient_pair(
    t: &WeightedTranslation,
    delta_window: &CompactWindow,
    k_window: &CompactWindow,
    params: &ScanParams,
) -> Result<ConditionReport> {
    tilde_scan(
        t,
        delta_window,
        Some(k_window),
        params,
        ConditionId::SufficientPair,
    )
}

fn tilde_scan(
    t: &WeightedTranslation,
    delta_window: &CompactWindow,
    k_window: Option<&CompactWindow>,
    params: &ScanParams,
    condition: ConditionId,
) -> Result<ConditionReport> {
    let carrier = t.carrier();
    let cells = validate_window(&carrier, delta_window)?;
    let k_cells = k_window.map(|k| validate_window(&carrier, k)).transpose()?;
    let mass = carrier.cell_mass(0);
    let log_eps = params.epsilon.ln();
    let a = t.element();

    let mut tilde = vec![0.0_f64; cells.len()];
    let mut forward = vec![0.0_f64; k_cells.as_ref().map_or(0, Vec::len)];
    let mut state = ScanState::new();
    for n in 1..=params.n_max {
        let back = -(n as i64 - 1);
        for (l, &k) in tilde.iter_mut().zip(&cells) {
            *l -= t.log_weight(carrier.translate(k, a, back));
        }
        let sub = sublevel(&cells, &tilde, log_eps, mass);
        let k_sup = k_cells.as_ref().map(|kc| {
            for (l, &k) in forward.iter_mut().zip(kc) {
                *l += t.log_weight(carrier.translate(k, a, n as i64));
            }
            forward.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        });
        let ok = sub.residual < params.delta && k_sup.is_none_or(|s| s < log_eps);
        let k_sup = k_sup.map(f64::exp);
        state.record(
            ok,
            WitnessEntry {
                n,
                achieved_ess_sup: sub.sup_on_e.unwrap_or(sub.window_sup),
                residual_mass: sub.residual,
                k_ess_sup: k_sup,
                e: sub.e,
            },
            ScanRow {
                n,
                window_sup: sub.window_sup,
                residual_mass: sub.residual,
                k_sup,
            },
        );
    }
    Ok(state.finish(condition, params, delta_window.clone(), k_window.cloned()))
}

/// Torsion condition on `F`: some `n <= n_max` with `λ(F \ E_n) < δ` where
/// `E_n = {ω_n^{-1} < ε}`. Not applicable off cyclic carriers.
pub fn check_torsion_condition(
    t: &WeightedTranslation,
    f_window: &CompactWindow,
    params: &ScanParams,
) -> Result<ConditionReport> {
    let carrier = t.carrier();
    if !carrier.is_cyclic() {
        return Ok(ConditionReport::not_applicable(
            ConditionId::TorsionCondition,
            f_window.clone(),
            params,
        ));
    }
    let cells = validate_window(&carrier, f_window)?;
    let mass = carrier.cell_mass(0);
    let log_eps = params.epsilon.ln();
    let a = t.element();
    // log ω_n(k)^{-1}
    let mut inv = vec![0.0_f64; cells.len()];
    let mut state = ScanState::new();
    for n in 1..=params.n_max {
        for (l, &k) in inv.iter_mut().zip(&cells) {
            *l -= t.log_weight(carrier.translate(k, a, n as i64));
        }
        let sub = sublevel(&cells, &inv, log_eps, mass);
        let ok = sub.residual < params.delta;
        state.record(
            ok,
            WitnessEntry {
                n,
                achieved_ess_sup: sub.sup_on_e.unwrap_or(sub.window_sup),
                residual_mass: sub.residual,
                k_ess_sup: None,
                e: sub.e,
            },
            ScanRow {
                n,
                window_sup: sub.window_sup,
                residual_mass: sub.residual,
                k_sup: None,
            },
        );
    }
    Ok(state.finish(
        ConditionId::TorsionCondition,
        params,
        f_window.clone(),
        None,
    ))
}

/// `max_k ω_γ(k) <= 1` with `ω_γ(k) = ω(k) ω(k a) ... ω(k a^{γ-1})` and `γ`
/// the order of `a`. Holds means `T` is power bounded.
pub fn check_power_bounded_torsion(t: &WeightedTranslation) -> ConditionReport {
    let carrier = t.carrier();
    let a = t.element();
    let params = ScanParams {
        epsilon: 1.0,
        delta: 1.0,
        n_max: 1,
    };
    let (Some(full), Some(order)) = (carrier.full_window(), carrier.torsion_order(a)) else {
        return ConditionReport::not_applicable(
            ConditionId::PowerBounded,
            CompactWindow::empty(),
            &params,
        );
    };
    let log_max = full
        .indices()
        .map(|k| {
            (0..order as i64)
                .map(|i| t.log_weight(carrier.translate(k, a, i)))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let max = log_max.exp();
    let holds = log_max <= POWER_BOUND_LOG_SLACK;
    ConditionReport {
        condition: ConditionId::PowerBounded,
        verdict: if holds {
            ReportVerdict::Holds
        } else {
            ReportVerdict::FailsUpToBound
        },
        witnesses: vec![WitnessEntry {
            n: order,
            e: full.clone(),
            achieved_ess_sup: max,
            residual_mass: 0.0,
            k_ess_sup: None,
        }],
        first_success: holds.then_some(order),
        search_bound: order,
        epsilon: 1.0,
        delta: 1.0,
        window: full,
        k_window: None,
        trend_to_zero: false,
        cycle_product_max: Some(max),
        trace: Vec::new(),
    }
}

/// Analytic bound `C_n` with `‖T^n g‖_p <= C_n ‖g‖_p` on a cyclic carrier.
///
/// With `n = qγ + r`, `ω_n(k) = ω_γ(k)^q ω_r(k)`, so
/// `C_n = max(max_k ω_γ(k), 1)^q · max_{0 <= s < γ} max_k ω_s(k)`. The
/// partial products of length below `γ` are bounded separately rather than
/// by a power of `ω_γ`, which would fail whenever some partial product
/// exceeds `ω_γ`.
pub fn power_orbit_bound(t: &WeightedTranslation, n: u64) -> Option<f64> {
    let carrier = t.carrier();
    let gamma = carrier.torsion_order(t.element())?;
    let full = carrier.full_window()?;
    let pr = t.products();
    let log_cycle = full
        .indices()
        .map(|k| pr.log_omega(k, gamma))
        .fold(f64::NEG_INFINITY, f64::max);
    let log_partial = full
        .indices()
        .flat_map(|k| (0..gamma).map(move |s| (k, s)))
        .map(|(k, s)| pr.log_omega(k, s))
        .fold(f64::NEG_INFINITY, f64::max);
    Some(((n / gamma) as f64 * log_cycle.max(0.0) + log_partial).exp())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    /// `J(0)` is the whole space.
    JClassAtZero,
    /// `χ_K` is a J-vector.
    JClassWithIndicatorVector(CompactWindow),
    /// Power bounded, so `J(0) = L(0)` is a proper subset.
    PowerBoundedNotJClass,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::JClassAtZero => f.write_str("JClassAtZero"),
            Classification::JClassWithIndicatorVector(k) => {
                write!(f, "JClassWithIndicatorVector(K={k})")
            }
            Classification::PowerBoundedNotJClass => f.write_str("PowerBoundedNotJClass"),
            Classification::Inconclusive => f.write_str("Inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub classification: Classification,
    pub supporting_reports: Vec<ConditionReport>,
}

/// Aggregate the condition checks into a classification.
///
/// Line carrier with a compact-passing element: `JClassAtZero` when the
/// `ω̃` decay holds on every probe window, upgraded to
/// `JClassWithIndicatorVector(K)` when the sufficient pair holds on every
/// probe window for some supplied `K`. Cyclic carrier: `JClassAtZero` when
/// the torsion condition holds on every probe window, otherwise
/// `PowerBoundedNotJClass` when `max ω_γ <= 1`. Anything else is
/// `Inconclusive`.
pub fn classify(
    t: &WeightedTranslation,
    probe_windows: &[CompactWindow],
    k_windows: &[CompactWindow],
    params: &CheckParams,
) -> Result<Verdict> {
    if probe_windows.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one probe window is required".into(),
        ));
    }
    let carrier = t.carrier();
    let mut reports = Vec::new();

    if carrier.is_cyclic() {
        let mut all = true;
        for w in probe_windows {
            let r = check_torsion_condition(t, w, &params.scan_params(&carrier, w)?)?;
            all &= r.holds();
            reports.push(r);
        }
        let pb = check_power_bounded_torsion(t);
        let bounded = pb.holds();
        reports.push(pb);
        let classification = if all {
            Classification::JClassAtZero
        } else if bounded {
            Classification::PowerBoundedNotJClass
        } else {
            Classification::Inconclusive
        };
        return Ok(Verdict {
            classification,
            supporting_reports: reports,
        });
    }

    if !carrier.is_compact_passing(t.element()) {
        return Ok(Verdict {
            classification: Classification::Inconclusive,
            supporting_reports: reports,
        });
    }

    let mut zero = true;
    for w in probe_windows {
        let r = check_tilde_decay(t, w, &params.scan_params(&carrier, w)?)?;
        zero &= r.holds();
        reports.push(r);
    }
    let mut indicator = None;
    for k in k_windows {
        let mut all = true;
        for w in probe_windows {
            let r = check_sufficient_pair(t, w, k, &params.scan_params(&carrier, w)?)?;
            all &= r.holds();
            reports.push(r);
        }
        if all && indicator.is_none() {
            indicator = Some(k.clone());
        }
    }
    let classification = match (indicator, zero) {
        (Some(k), _) => Classification::JClassWithIndicatorVector(k),
        (None, true) => Classification::JClassAtZero,
        (None, false) => Classification::Inconclusive,
    };
    Ok(Verdict {
        classification,
        supporting_reports: reports,
    })
}
