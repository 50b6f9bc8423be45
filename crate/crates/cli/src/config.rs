//! Scenario files: TOML with `[carrier]`, `[operator]`, `[weight]`,
//! `[windows]`, `[tolerances]` and `[output]` sections.
//!
//! Windows and the element `a` are given in native coordinates and must land
//! on the grid. Validation errors name the offending field.

use std::path::{Path, PathBuf};

use jclass_core::{
    CheckParams, CompactWindow, DeltaRule, Error as CoreError, GroupCarrier, LpFunction,
    Periodicity, Segment, Weight, WeightedTranslation,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A configuration problem, reported with exit status 2.
#[derive(Debug, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

type ConfigResult<T> = Result<T, ConfigError>;

fn field_err(field: impl Into<String>) -> impl FnOnce(CoreError) -> ConfigError {
    let field = field.into();
    move |e| ConfigError::new(field, e.to_string())
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub carrier: CarrierConfig,
    pub operator: OperatorConfig,
    pub weight: WeightConfig,
    #[serde(default)]
    pub windows: WindowsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CarrierConfig {
    FiniteCyclic {
        order: u32,
    },
    IntegerLine,
    RealLineGrid {
        step: f64,
    },
    PositiveRealsLogGrid {
        #[serde(default)]
        log_step: Option<f64>,
        /// Alternative to `log_step`: `log_step = ln 2 / cells_per_doubling`.
        #[serde(default)]
        cells_per_doubling: Option<u32>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// The element `a` in native coordinates.
    pub a: f64,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    2.0
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightConfig {
    Constant {
        value: f64,
    },
    Exponential {
        rate: f64,
    },
    LogTable {
        log_values: Vec<f64>,
    },
    Piecewise {
        segments: Vec<SegmentConfig>,
        #[serde(default)]
        period_start: Option<f64>,
        #[serde(default)]
        period: Option<f64>,
        /// Reject weights with jumps at breakpoints or at the periodic seam.
        #[serde(default)]
        require_continuous: bool,
    },
}

/// An interval `[lo, hi]` in native coordinates.
pub type Interval = [f64; 2];

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowsConfig {
    #[serde(default)]
    pub probes: Vec<Interval>,
    /// Union of intervals forming the candidate `K`.
    #[serde(default)]
    pub k: Option<Vec<Interval>>,
    /// Target function: a sum of indicators, amplitude 1 unless given.
    #[serde(default)]
    pub target: Option<Vec<Interval>>,
    #[serde(default)]
    pub target_amplitudes: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Absolute `δ`; overrides `delta_relative`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// `δ = delta_relative * λ(Δ)` per probe window.
    #[serde(default = "default_delta_relative")]
    pub delta_relative: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_witness_epsilon")]
    pub witness_epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-4
}

fn default_delta_relative() -> f64 {
    1e-3
}

fn default_n_max() -> u64 {
    500
}

fn default_witness_epsilon() -> f64 {
    1e-2
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            epsilon: default_epsilon(),
            delta: None,
            delta_relative: default_delta_relative(),
            n_max: default_n_max(),
            witness_epsilon: default_witness_epsilon(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> ConfigResult<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("toml (bytes {}..{})", s.start, s.end))
                .unwrap_or_else(|| "toml".into());
            ConfigError::new(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> ConfigResult<Scenario> {
        Scenario::build(self)
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub operator: WeightedTranslation,
    pub probes: Vec<CompactWindow>,
    pub k: Option<CompactWindow>,
    pub target: Option<LpFunction>,
    pub params: CheckParams,
    pub witness_epsilon: f64,
    pub out_dir: Option<PathBuf>,
}

fn positive(field: &str, v: f64) -> ConfigResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(
            field,
            format!("must be a positive number, got {v}"),
        ))
    }
}

fn build_carrier(c: &CarrierConfig) -> ConfigResult<GroupCarrier> {
    match *c {
        CarrierConfig::FiniteCyclic { order } => {
            GroupCarrier::finite_cyclic(order).map_err(field_err("carrier.order"))
        }
        CarrierConfig::IntegerLine => Ok(GroupCarrier::integer_line()),
        CarrierConfig::RealLineGrid { step } => {
            GroupCarrier::real_line_grid(positive("carrier.step", step)?)
                .map_err(field_err("carrier.step"))
        }
        CarrierConfig::PositiveRealsLogGrid {
            log_step,
            cells_per_doubling,
        } => {
            let h = match (log_step, cells_per_doubling) {
                (Some(h), None) => positive("carrier.log_step", h)?,
                (None, Some(n)) if n > 0 => std::f64::consts::LN_2 / f64::from(n),
                (None, Some(_)) => {
                    return Err(ConfigError::new(
                        "carrier.cells_per_doubling",
                        "must be at least 1",
                    ))
                }
                _ => {
                    return Err(ConfigError::new(
                        "carrier.log_step",
                        "give exactly one of log_step and cells_per_doubling",
                    ))
                }
            };
            GroupCarrier::positive_reals_log_grid(h).map_err(field_err("carrier.log_step"))
        }
    }
}

fn build_weight(w: &WeightConfig) -> ConfigResult<Weight> {
    match w {
        WeightConfig::Constant { value } => {
            Weight::constant(*value).map_err(field_err("weight.value"))
        }
        WeightConfig::Exponential { rate } => {
            Weight::exponential(*rate).map_err(field_err("weight.rate"))
        }
        WeightConfig::LogTable { log_values } => {
            Weight::log_table(log_values.clone()).map_err(field_err("weight.log_values"))
        }
        WeightConfig::Piecewise {
            segments,
            period_start,
            period,
            require_continuous,
        } => {
            let segs = segments
                .iter()
                .map(|s| Segment {
                    lo: s.lo,
                    hi: s.hi,
                    lo_inclusive: s.lo_inclusive,
                    hi_inclusive: s.hi_inclusive,
                    slope: s.slope,
                    intercept: s.intercept,
                })
                .collect();
            let periodicity = match (period_start, period) {
                (None, None) => None,
                (Some(start), Some(period)) => Some(Periodicity {
                    start: *start,
                    period: *period,
                }),
                _ => {
                    return Err(ConfigError::new(
                        "weight.period",
                        "period_start and period must be given together",
                    ))
                }
            };
            let weight =
                Weight::piecewise(segs, periodicity).map_err(field_err("weight.segments"))?;
            if *require_continuous {
                let jumps = weight.jumps();
                if let Some(j) = jumps.first() {
                    return Err(ConfigError::new(
                        "weight.require_continuous",
                        format!(
                            "weight jumps at x = {} (left {}, right {})",
                            j.at, j.left, j.right
                        ),
                    ));
                }
            }
            Ok(weight)
        }
    }
}

fn build_window(
    carrier: &GroupCarrier,
    field: &str,
    intervals: &[Interval],
) -> ConfigResult<CompactWindow> {
    let mut w = CompactWindow::empty();
    for (i, &[lo, hi]) in intervals.iter().enumerate() {
        let f = if intervals.len() == 1 {
            field.to_owned()
        } else {
            format!("{field}[{i}]")
        };
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ConfigError::new(
                f,
                format!("invalid interval [{lo}, {hi}]"),
            ));
        }
        let piece = carrier
            .window_from_native(lo, hi)
            .map_err(field_err(f.clone()))?;
        if piece.is_empty() {
            return Err(ConfigError::new(
                f,
                format!("[{lo}, {hi}] contains no grid cells"),
            ));
        }
        w = w.union(&piece);
    }
    if w.is_empty() {
        return Err(ConfigError::new(field, "window is empty"));
    }
    Ok(w)
}

/// Target `Σ_i c_i χ_{I_i}`.
pub fn build_target(
    carrier: &GroupCarrier,
    p: f64,
    field: &str,
    intervals: &[Interval],
    amplitudes: Option<&[f64]>,
) -> ConfigResult<LpFunction> {
    if let Some(a) = amplitudes {
        if a.len() != intervals.len() {
            return Err(ConfigError::new(
                "windows.target_amplitudes",
                format!("expected {} amplitudes, got {}", intervals.len(), a.len()),
            ));
        }
        if let Some(bad) = a.iter().find(|v| !v.is_finite()) {
            return Err(ConfigError::new(
                "windows.target_amplitudes",
                format!("non-finite amplitude {bad}"),
            ));
        }
    }
    let mut f = LpFunction::zero(*carrier, p).map_err(field_err(field))?;
    for (i, iv) in intervals.iter().enumerate() {
        let w = build_window(carrier, &format!("{field}[{i}]"), std::slice::from_ref(iv))?;
        let c = amplitudes.map_or(1.0, |a| a[i]);
        let piece = LpFunction::from_fn(*carrier, p, &w, |_| c).map_err(field_err(field))?;
        f = f.add(&piece).map_err(field_err(field))?;
    }
    if f.support().is_empty() {
        return Err(ConfigError::new(field, "target is identically zero"));
    }
    Ok(f.trimmed())
}

impl Scenario {
    fn build(cfg: &ScenarioConfig) -> ConfigResult<Scenario> {
        let carrier = build_carrier(&cfg.carrier)?;
        let p = cfg.operator.p;
        if !(p.is_finite() && p >= 1.0) {
            return Err(ConfigError::new(
                "operator.p",
                format!("need 1 <= p < inf, got {p}"),
            ));
        }
        let a = carrier
            .element_from_native(cfg.operator.a)
            .map_err(field_err("operator.a"))?;
        let weight = build_weight(&cfg.weight)?;
        let operator =
            WeightedTranslation::new(carrier, a, weight, p).map_err(field_err("weight"))?;

        let probes = if cfg.windows.probes.is_empty() {
            match carrier.full_window() {
                Some(full) => vec![full],
                None => {
                    return Err(ConfigError::new(
                        "windows.probes",
                        "at least one probe window is required on a line carrier",
                    ))
                }
            }
        } else {
            cfg.windows
                .probes
                .iter()
                .enumerate()
                .map(|(i, iv)| {
                    build_window(
                        &carrier,
                        &format!("windows.probes[{i}]"),
                        std::slice::from_ref(iv),
                    )
                })
                .collect::<ConfigResult<Vec<_>>>()?
        };
        let k = cfg
            .windows
            .k
            .as_deref()
            .map(|iv| build_window(&carrier, "windows.k", iv))
            .transpose()?;
        let target = cfg
            .windows
            .target
            .as_deref()
            .map(|iv| {
                build_target(
                    &carrier,
                    p,
                    "windows.target",
                    iv,
                    cfg.windows.target_amplitudes.as_deref(),
                )
            })
            .transpose()?;
        if cfg.windows.target.is_none() && cfg.windows.target_amplitudes.is_some() {
            return Err(ConfigError::new(
                "windows.target_amplitudes",
                "given without windows.target",
            ));
        }

        let tol = &cfg.tolerances;
        positive("tolerances.epsilon", tol.epsilon)?;
        positive("tolerances.witness_epsilon", tol.witness_epsilon)?;
        let delta = match tol.delta {
            Some(d) => DeltaRule::Absolute(positive("tolerances.delta", d)?),
            None => DeltaRule::RelativeToMass(positive(
                "tolerances.delta_relative",
                tol.delta_relative,
            )?),
        };
        if tol.n_max == 0 {
            return Err(ConfigError::new("tolerances.n_max", "must be at least 1"));
        }

        let scenario = Scenario {
            name: cfg.name.clone().unwrap_or_else(|| "scenario".into()),
            operator,
            probes,
            k,
            target,
            params: CheckParams {
                epsilon: tol.epsilon,
                delta,
                n_max: tol.n_max,
            },
            witness_epsilon: tol.witness_epsilon,
            out_dir: cfg.output.dir.clone(),
        };
        scenario.check_weight_range()?;
        Ok(scenario)
    }

    /// Cells the checkers can touch: the configured windows moved by up to
    /// `n_max` steps of `a` in either direction.
    pub fn evaluation_range(&self) -> (i64, i64) {
        let c = self.operator.carrier();
        if let Some(order) = c.order() {
            return (0, i64::from(order) - 1);
        }
        let windows = self
            .probes
            .iter()
            .chain(self.k.as_ref())
            .cloned()
            .chain(self.target.as_ref().map(|t| t.support()));
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        for w in windows {
            if let (Some(a), Some(b)) = (w.min(), w.max()) {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        let reach =
            (self.params.n_max as i64).saturating_mul(self.operator.element().index().abs());
        (lo.saturating_sub(reach), hi.saturating_add(reach))
    }

    fn check_weight_range(&self) -> ConfigResult<()> {
        let (lo, hi) = self.evaluation_range();
        self.operator
            .weight()
            .check_positive_on(&self.operator.carrier(), lo, hi)
            .map_err(field_err("weight"))
    }

    /// Apply command-line overrides on top of the file values.
    pub fn with_overrides(mut self, o: &Overrides) -> ConfigResult<Scenario> {
        if let Some(eps) = o.eps {
            self.params.epsilon = positive("--eps", eps)?;
            self.witness_epsilon = eps;
        }
        if let Some(d) = o.delta {
            self.params.delta = DeltaRule::Absolute(positive("--delta", d)?);
        }
        if let Some(n) = o.n_max {
            if n == 0 {
                return Err(ConfigError::new("--nmax", "must be at least 1"));
            }
            self.params.n_max = n;
        }
        if let Some(spec) = &o.target {
            let (iv, amps) = parse_target(spec)?;
            let c = self.operator.carrier();
            self.target = Some(build_target(
                &c,
                self.operator.p(),
                "--target",
                &iv,
                Some(&amps),
            )?);
        }
        if o.n_max.is_some() {
            self.check_weight_range()?;
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub n_max: Option<u64>,
    pub target: Option<String>,
}

/// `LO:HI[@AMP][,LO:HI[@AMP]...]` in native coordinates.
pub fn parse_target(spec: &str) -> ConfigResult<(Vec<Interval>, Vec<f64>)> {
    let bad = |m: String| ConfigError::new("--target", m);
    let mut intervals = Vec::new();
    let mut amps = Vec::new();
    for piece in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (range, amp) = match piece.split_once('@') {
            Some((r, a)) => (
                r,
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("amplitude in {piece:?}: {e}")))?,
            ),
            None => (piece, 1.0),
        };
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| bad(format!("expected LO:HI, got {piece:?}")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("bound in {piece:?}: {e}")))
        };
        intervals.push([parse(lo)?, parse(hi)?]);
        amps.push(amp);
    }
    if intervals.is_empty() {
        return Err(bad("empty target".into()));
    }
    Ok((intervals, amps))
}
