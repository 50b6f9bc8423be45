//! Sub-command implementations. Each writes a human-readable report to the
//! given writer and its CSV files to the output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use jclass_core::numfmt::format_value;
use jclass_core::{
    build_witness_jvector, build_witness_torsion, build_witness_zero, classify, power_orbit_bound,
    run_trials, verify_detailed, Classification, CompactWindow, ConditionReport, DeltaRule,
    Error as CoreError, GroupCarrier, LpFunction, Separation, TrialConfig, TrialResult,
    WitnessCertificate,
};

use crate::builtin;
use crate::config::{ConfigError, Overrides, Scenario};

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A witness was not found or an oracle trial disagreed.
    Failure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Failure => 1,
        }
    }
}

pub const WEIGHT_PROFILE_HEADER: &str = "index,native_x,omega,log_omega";
pub const PRODUCTS_HEADER: &str =
    "condition,window,n,max_tilde_on_delta,residual_mass_delta,max_omega_on_k";
pub const ORBIT_NORMS_HEADER: &str = "n,norm,bound_factor";

fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// `[lo, hi]` pieces in native coordinates, for reports.
pub fn window_text(c: &GroupCarrier, w: &CompactWindow) -> String {
    if w.is_empty() {
        return "{}".into();
    }
    w.intervals()
        .iter()
        .map(|&(lo, hi)| {
            if lo == hi {
                format!("{{{}}}", format_value(c.native(lo)))
            } else {
                format!(
                    "[{}, {}]",
                    format_value(c.native(lo)),
                    format_value(c.native(hi))
                )
            }
        })
        .collect::<Vec<_>>()
        .join(" u ")
}

/// `lo:hi` pieces joined by `+`, safe inside a CSV field.
pub fn window_label(c: &GroupCarrier, w: &CompactWindow) -> String {
    w.intervals()
        .iter()
        .map(|&(lo, hi)| {
            format!(
                "{}:{}",
                format_value(c.native(lo)),
                format_value(c.native(hi))
            )
        })
        .collect::<Vec<_>>()
        .join("+")
}

pub fn classification_text(c: &GroupCarrier, v: &Classification) -> String {
    match v {
        Classification::JClassWithIndicatorVector(k) => {
            format!("JClassWithIndicatorVector(K={})", window_text(c, k))
        }
        other => other.to_string(),
    }
}

fn hull(windows: impl Iterator<Item = CompactWindow>) -> Option<(i64, i64)> {
    windows
        .filter_map(|w| Some((w.min()?, w.max()?)))
        .reduce(|(a, b), (c, d)| (a.min(c), b.max(d)))
}

fn profile_range(s: &Scenario) -> (i64, i64) {
    let c = s.operator.carrier();
    if let Some(order) = c.order() {
        return (0, i64::from(order) - 1);
    }
    let windows = s
        .probes
        .iter()
        .cloned()
        .chain(s.k.clone())
        .chain(s.target.as_ref().map(LpFunction::support));
    let (lo, hi) = hull(windows).unwrap_or((0, 0));
    let pad = (4 * s.operator.element().index().abs()).max(10);
    (lo - pad, hi + pad)
}

fn separation_text(s: &Scenario, w: &CompactWindow) -> String {
    match s
        .operator
        .carrier()
        .separation_bound(w, s.operator.element())
    {
        Separation::Bound(n) => format!("N = {n}"),
        Separation::Torsion => "none (torsion element)".into(),
        Separation::NotCompactPassing => "none (identity element)".into(),
    }
}

pub fn describe(s: &Scenario, out: &Path, w: &mut dyn Write) -> Result<Status> {
    let op = &s.operator;
    let c = op.carrier();
    let a = op.element();
    writeln!(w, "scenario: {}", s.name)?;
    writeln!(w, "carrier: {c}")?;
    writeln!(w, "exponent p: {}", format_value(op.p()))?;
    writeln!(
        w,
        "element a: {} (index {})",
        format_value(c.native(a.index())),
        a.index()
    )?;
    match c.torsion_order(a) {
        Some(g) => writeln!(w, "torsion_order: {g}")?,
        None => writeln!(w, "torsion_order: none")?,
    }
    let passing = if c.is_compact_passing(a) { "yes" } else { "no" };
    writeln!(w, "compact-passing: {passing}")?;
    writeln!(w, "weight: {}", op.weight().describe())?;
    let jumps = op.weight().jumps();
    if jumps.is_empty() {
        writeln!(w, "weight jumps: none")?;
    } else {
        let list: Vec<String> = jumps
            .iter()
            .map(|j| {
                format!(
                    "x = {} (left {}, right {})",
                    format_value(j.at),
                    format_value(j.left),
                    format_value(j.right)
                )
            })
            .collect();
        writeln!(w, "weight jumps: {}", list.join("; "))?;
    }
    for probe in &s.probes {
        writeln!(
            w,
            "separation bound, probe {}: {}",
            window_text(&c, probe),
            separation_text(s, probe)
        )?;
    }
    if let Some(k) = &s.k {
        writeln!(
            w,
            "separation bound, K {}: {}",
            window_text(&c, k),
            separation_text(s, k)
        )?;
    }
    if let Some(t) = &s.target {
        let sup = t.support();
        writeln!(
            w,
            "separation bound, target support {}: {}",
            window_text(&c, &sup),
            separation_text(s, &sup)
        )?;
    }

    let (lo, hi) = profile_range(s);
    let mut rows = Vec::with_capacity((hi - lo + 1) as usize);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in lo..=hi {
        let omega = op.weight_value(k);
        min = min.min(omega);
        max = max.max(omega);
        rows.push(format!(
            "{k},{},{},{}",
            format_value(c.native(k)),
            format_value(omega),
            format_value(op.log_weight(k))
        ));
    }
    let path = write_csv(out, "weight_profile.csv", WEIGHT_PROFILE_HEADER, rows)?;
    writeln!(
        w,
        "weight profile: x in [{}, {}], omega in [{}, {}] -> {}",
        format_value(c.native(lo)),
        format_value(c.native(hi)),
        format_value(min),
        format_value(max),
        path.display()
    )?;
    Ok(Status::Success)
}

fn report_text(c: &GroupCarrier, r: &ConditionReport) -> String {
    let mut t = format!(
        "  {} on {}: {}",
        r.condition,
        window_text(c, &r.window),
        r.verdict
    );
    if let Some(k) = &r.k_window {
        let _ = write!(t, " (K = {})", window_text(c, k));
    }
    if let Some(m) = r.cycle_product_max {
        let _ = write!(t, "; max cycle product {}", format_value(m));
        return t;
    }
    if r.verdict == jclass_core::ReportVerdict::NotApplicable {
        return t;
    }
    let _ = write!(
        t,
        "; eps {}, delta {}, n_max {}",
        format_value(r.epsilon),
        format_value(r.delta),
        r.search_bound
    );
    match r.first_success {
        Some(n) => {
            let _ = write!(t, "; first n = {n}");
        }
        None => t.push_str("; no n found"),
    }
    if let Some(best) = r.witnesses.first() {
        let _ = write!(
            t,
            "; at n = {}: sup {}, residual mass {}",
            best.n,
            format_value(best.achieved_ess_sup),
            format_value(best.residual_mass)
        );
        if let Some(ks) = best.k_ess_sup {
            let _ = write!(t, ", max on K {}", format_value(ks));
        }
    }
    if r.trend_to_zero {
        t.push_str("; decreasing over the last 10 successes");
    }
    t
}

/// The function whose orbit is tabulated: the target, or the indicator of the
/// first probe window.
fn orbit_function(s: &Scenario) -> Result<LpFunction> {
    match &s.target {
        Some(t) => Ok(t.clone()),
        None => Ok(LpFunction::indicator(
            s.operator.carrier(),
            s.operator.p(),
            &s.probes[0],
        )?),
    }
}

pub fn check(s: &Scenario, out: &Path, w: &mut dyn Write) -> Result<Status> {
    let op = &s.operator;
    let c = op.carrier();
    let ks: Vec<CompactWindow> = s.k.iter().cloned().collect();
    let verdict = classify(op, &s.probes, &ks, &s.params)?;
    writeln!(
        w,
        "classification: {}",
        classification_text(&c, &verdict.classification)
    )?;
    for r in &verdict.supporting_reports {
        writeln!(w, "{}", report_text(&c, r))?;
    }

    let mut rows = Vec::new();
    for r in &verdict.supporting_reports {
        let label = window_label(&c, &r.window);
        for row in &r.trace {
            rows.push(format!(
                "{},{},{},{},{},{}",
                r.condition,
                label,
                row.n,
                format_value(row.window_sup),
                format_value(row.residual_mass),
                row.k_sup.map(format_value).unwrap_or_default()
            ));
        }
    }
    let products = write_csv(out, "products.csv", PRODUCTS_HEADER, rows)?;

    let f = orbit_function(s)?;
    let norms = op.orbit_norms(&f, s.params.n_max)?;
    let orbit_rows = norms.iter().map(|&(n, v)| {
        let bound = power_orbit_bound(op, n)
            .map(format_value)
            .unwrap_or_default();
        format!("{n},{},{bound}", format_value(v))
    });
    let orbit = write_csv(out, "orbit_norms.csv", ORBIT_NORMS_HEADER, orbit_rows)?;
    writeln!(w, "wrote {} and {}", products.display(), orbit.display())?;
    Ok(Status::Success)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BuilderChoice {
    Zero,
    Jvector,
    Torsion,
}

fn default_builder(s: &Scenario) -> BuilderChoice {
    if s.operator.carrier().is_cyclic() {
        BuilderChoice::Torsion
    } else if s.k.is_some() {
        BuilderChoice::Jvector
    } else {
        BuilderChoice::Zero
    }
}

fn certificate_text(c: &GroupCarrier, cert: &WitnessCertificate) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "builder: {}", cert.builder);
    let _ = writeln!(t, "n: {}", cert.n);
    let _ = writeln!(t, "epsilon: {}", format_value(cert.epsilon));
    let _ = writeln!(t, "norm_base: {}", format_value(cert.norm_base));
    let _ = writeln!(t, "norm_image: {}", format_value(cert.norm_image));
    let _ = writeln!(t, "E: {}", window_text(c, &cert.e));
    let _ = writeln!(t, "g support: {}", window_text(c, &cert.g.support()));
    for note in &cert.notes {
        let _ = writeln!(t, "note: {note}");
    }
    t
}

pub fn witness(
    s: &Scenario,
    choice: Option<BuilderChoice>,
    out: &Path,
    w: &mut dyn Write,
) -> Result<Status> {
    let op = &s.operator;
    let c = op.carrier();
    let builder = choice.unwrap_or_else(|| default_builder(s));
    let eps = s.witness_epsilon;
    let n_max = s.params.n_max;
    let need_target = || {
        s.target
            .clone()
            .ok_or_else(|| ConfigError::new("windows.target", "the witness builders need a target"))
    };
    let incompatible = |why: &str| ConfigError::new("--builder", why.to_string());
    let built = match builder {
        BuilderChoice::Zero | BuilderChoice::Jvector if c.is_cyclic() => {
            return Err(incompatible("zero and jvector builders need a line carrier").into())
        }
        BuilderChoice::Torsion if !c.is_cyclic() => {
            return Err(incompatible("the torsion builder needs a finite cyclic carrier").into())
        }
        BuilderChoice::Zero => build_witness_zero(op, &need_target()?, eps, n_max),
        BuilderChoice::Jvector => {
            let k =
                s.k.clone()
                    .ok_or_else(|| ConfigError::new("windows.k", "the jvector builder needs K"))?;
            build_witness_jvector(op, &need_target()?, &k, eps, n_max)
        }
        BuilderChoice::Torsion => {
            let target = need_target()?;
            let delta = match s.params.delta {
                DeltaRule::Absolute(d) => d,
                DeltaRule::RelativeToMass(f) => f * c.window_mass(&target.support()),
            };
            build_witness_torsion(op, &target, eps, delta, n_max)
        }
    };
    match built {
        Ok(cert) => {
            let v = verify_detailed(&cert, op)?;
            write!(w, "{}", certificate_text(&c, &cert))?;
            let path = match v.repeated_norm_image {
                Some(r) => format!(
                    "closed form and {}-fold application (norm_image {})",
                    cert.n,
                    format_value(r)
                ),
                None => "closed form only (repeated application overflowed)".into(),
            };
            writeln!(w, "re-verified by: {path}")?;
            writeln!(
                w,
                "certificate: {}",
                if v.valid { "VALID" } else { "INVALID" }
            )?;
            let csv = write_csv(
                out,
                "witness.csv",
                WitnessCertificate::CSV_HEADER,
                [cert.csv_row(v.valid)],
            )?;
            writeln!(w, "wrote {}", csv.display())?;
            Ok(if v.valid {
                Status::Success
            } else {
                Status::Failure
            })
        }
        Err(CoreError::WitnessNotFound(f)) => {
            writeln!(w, "certificate: NOT FOUND")?;
            writeln!(w, "{f}")?;
            write_csv(out, "witness.csv", WitnessCertificate::CSV_HEADER, [])?;
            Ok(Status::Failure)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleArgs {
    pub gamma: Option<u32>,
    pub trials: usize,
    pub seed: u64,
    pub n_max: u64,
    pub eta: f64,
}

impl Default for OracleArgs {
    fn default() -> Self {
        let d = TrialConfig::default();
        OracleArgs {
            gamma: None,
            trials: d.trials,
            seed: d.base_seed,
            n_max: d.n_max,
            eta: d.eta,
        }
    }
}

pub fn oracle(args: &OracleArgs, out: &Path, w: &mut dyn Write) -> Result<Status> {
    if let Some(g) = args.gamma {
        if !(2..=16).contains(&g) {
            return Err(
                ConfigError::new("--gamma", format!("need 2 <= gamma <= 16, got {g}")).into(),
            );
        }
    }
    if !(args.eta.is_finite() && args.eta > 0.0) {
        return Err(
            ConfigError::new("--eta", format!("must be positive, got {}", args.eta)).into(),
        );
    }
    if args.n_max == 0 {
        return Err(ConfigError::new("--nmax", "must be at least 1").into());
    }
    let cfg = TrialConfig {
        trials: args.trials,
        base_seed: args.seed,
        gamma: args.gamma,
        n_max: args.n_max,
        eta: args.eta,
        ..TrialConfig::default()
    };
    let results = run_trials(&cfg)?;
    let path = write_csv(
        out,
        "oracle_trials.csv",
        TrialResult::CSV_HEADER,
        results.iter().map(TrialResult::csv_row),
    )?;
    let bad: Vec<u64> = results
        .iter()
        .filter(|r| !r.agree())
        .map(|r| r.instance.seed)
        .collect();
    let truncated = results
        .iter()
        .filter(|r| r.dense_truncated_at.is_some())
        .count();
    writeln!(
        w,
        "agreement: {}/{}",
        results.len() - bad.len(),
        results.len()
    )?;
    writeln!(
        w,
        "n_max {}, eta {}, boundary band {} eta",
        cfg.n_max,
        format_value(cfg.eta),
        format_value(cfg.band)
    )?;
    if truncated > 0 {
        writeln!(
            w,
            "dense path left the floating-point range early in {truncated} trials"
        )?;
    }
    writeln!(w, "wrote {}", path.display())?;
    if bad.is_empty() {
        Ok(Status::Success)
    } else {
        let seeds: Vec<String> = bad.iter().map(u64::to_string).collect();
        writeln!(w, "disagreeing seeds: {}", seeds.join(", "))?;
        Ok(Status::Failure)
    }
}

pub struct ExampleArgs {
    pub id: u8,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub overrides: Overrides,
}

/// Load a built-in example with its overrides applied.
pub fn example_scenario(args: &ExampleArgs) -> Result<Scenario, ConfigError> {
    builtin::example(args.id, args.alpha, args.beta)?
        .validate()?
        .with_overrides(&args.overrides)
}

pub fn example(s: &Scenario, out: &Path, w: &mut dyn Write) -> Result<Status> {
    writeln!(w, "== describe")?;
    describe(s, out, w)?;
    writeln!(w, "== check")?;
    check(s, out, w)?;
    writeln!(w, "== witness")?;
    let status = witness(s, None, out, w)?;
    Ok(status)
}
