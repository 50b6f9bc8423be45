//! Positive weights `ω: G -> (0, inf)` and their grid evaluation.

use crate::error::{Error, Result};
use crate::group::GroupCarrier;

/// Relative tolerance for matching a native coordinate to a breakpoint.
const BREAKPOINT_TOL: f64 = 1e-9;

fn near(x: f64, b: f64) -> bool {
    b.is_finite() && (x - b).abs() <= BREAKPOINT_TOL * b.abs().max(1.0)
}

/// One affine piece `slope * x + intercept` on an interval with declared
/// endpoint conventions. Infinite endpoints are always open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
    pub slope: f64,
    pub intercept: f64,
}

impl Segment {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    fn contains(&self, x: f64) -> bool {
        let above_lo = if near(x, self.lo) {
            self.lo_inclusive
        } else {
            x > self.lo
        };
        let below_hi = if near(x, self.hi) {
            self.hi_inclusive
        } else {
            x < self.hi
        };
        above_lo && below_hi
    }
}

/// `ω(x) = ω(x - period)` for every `x > start`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Periodicity {
    pub start: f64,
    pub period: f64,
}

/// A jump of a piecewise weight at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub at: f64,
    pub left: f64,
    pub right: f64,
}

/// Piecewise-affine weight in native coordinates, optionally periodic above a
/// threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseWeight {
    segments: Vec<Segment>,
    periodicity: Option<Periodicity>,
}

impl PiecewiseWeight {
    /// Segments must be ordered, start at `-inf`, tile the line without gaps
    /// or overlaps (each shared endpoint owned by exactly one side), reach
    /// `+inf` or the periodicity threshold, and stay positive.
    pub fn new(segments: Vec<Segment>, periodicity: Option<Periodicity>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidWeight(msg));
        let Some(first) = segments.first() else {
            return bad("piecewise weight needs at least one segment".into());
        };
        if first.lo != f64::NEG_INFINITY {
            return bad(format!(
                "first segment must start at -inf, starts at {}",
                first.lo
            ));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.lo.is_nan() || s.hi.is_nan() || s.lo >= s.hi {
                return bad(format!(
                    "segment {i} has empty interval ({}, {})",
                    s.lo, s.hi
                ));
            }
            if !s.slope.is_finite() || !s.intercept.is_finite() {
                return bad(format!("segment {i} has a non-finite affine map"));
            }
            // positivity: closed finite endpoints strictly positive, open ones
            // non-negative (the affine piece is monotone between them)
            for (end, inclusive) in [(s.lo, s.lo_inclusive), (s.hi, s.hi_inclusive)] {
                if end.is_finite() {
                    let v = s.eval(end);
                    if v < 0.0 || (inclusive && v <= 0.0) {
                        return bad(format!("segment {i} is not positive at x = {end}"));
                    }
                }
            }
            if (s.lo == f64::NEG_INFINITY && s.slope > 0.0)
                || (s.hi == f64::INFINITY && s.slope < 0.0)
            {
                return bad(format!("segment {i} turns negative on its unbounded side"));
            }
            if s.hi.is_finite() && s.lo.is_finite() && s.eval(s.lo) <= 0.0 && s.eval(s.hi) <= 0.0 {
                return bad(format!("segment {i} is nowhere positive"));
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if a.hi != b.lo {
                return bad(format!(
                    "segments {i} and {} do not meet: {} vs {}",
                    i + 1,
                    a.hi,
                    b.lo
                ));
            }
            if a.hi_inclusive == b.lo_inclusive {
                return bad(format!(
                    "breakpoint {} must belong to exactly one of segments {i} and {}",
                    a.hi,
                    i + 1
                ));
            }
        }
        let last = segments.last().expect("nonempty");
        match periodicity {
            None if last.hi != f64::INFINITY => {
                return bad(format!(
                    "last segment must end at +inf, ends at {}",
                    last.hi
                ));
            }
            Some(per) => {
                if !(per.period.is_finite() && per.period > 0.0 && per.start.is_finite()) {
                    return bad("periodicity needs a finite start and positive period".into());
                }
                let covered = last.hi > per.start || (last.hi == per.start && last.hi_inclusive);
                if !covered {
                    return bad(format!(
                        "segments must cover up to the periodicity start {}",
                        per.start
                    ));
                }
            }
            None => {}
        }
        Ok(PiecewiseWeight {
            segments,
            periodicity,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn periodicity(&self) -> Option<Periodicity> {
        self.periodicity
    }

    fn reduce(&self, x: f64) -> f64 {
        match self.periodicity {
            Some(Periodicity { start, period }) if x > start && !near(x, start) => {
                let q = ((x - start) / period - BREAKPOINT_TOL).ceil();
                x - q * period
            }
            _ => x,
        }
    }

    fn segment_for(&self, x: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.contains(x))
            .expect("segments tile the line")
    }

    /// `ω(x)`. A coordinate within tolerance of a breakpoint is evaluated at
    /// the breakpoint itself, on the side that owns it.
    pub fn value(&self, x: f64) -> f64 {
        let x = self.reduce(x);
        let s = self.segment_for(x);
        let x = [s.lo, s.hi].into_iter().find(|&b| near(x, b)).unwrap_or(x);
        s.eval(x)
    }

    /// Breakpoints where the one-sided limits differ, including the seam at
    /// the periodicity threshold.
    pub fn jumps(&self) -> Vec<Jump> {
        let mut out = Vec::new();
        let mut check = |at: f64, left: f64, right: f64| {
            if !near(left, right) {
                out.push(Jump { at, left, right });
            }
        };
        for pair in self.segments.windows(2) {
            let at = pair[0].hi;
            if let Some(per) = self.periodicity {
                if at > per.start {
                    continue;
                }
            }
            check(at, pair[0].eval(at), pair[1].eval(at));
        }
        if let Some(Periodicity { start, period }) = self.periodicity {
            let left = self.segment_left_of(start).eval(start);
            let right = self.segment_right_of(start - period).eval(start - period);
            check(start, left, right);
        }
        out
    }

    fn segment_left_of(&self, x: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.lo < x && x <= s.hi)
            .expect("segments tile the line")
    }

    fn segment_right_of(&self, x: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.lo <= x && x < s.hi)
            .expect("segments tile the line")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Constant(f64),
    Piecewise(PiecewiseWeight),
    /// `ω(x) = exp(rate * x)` in native coordinates.
    Exponential {
        rate: f64,
    },
    /// Per-index `log ω` on a cyclic carrier.
    LogTable(Vec<f64>),
}

impl Weight {
    pub fn constant(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Weight::Constant(c))
        } else {
            Err(Error::InvalidWeight(format!(
                "constant weight must be positive, got {c}"
            )))
        }
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if rate.is_finite() {
            Ok(Weight::Exponential { rate })
        } else {
            Err(Error::InvalidWeight(format!("non-finite rate {rate}")))
        }
    }

    pub fn log_table(log_values: Vec<f64>) -> Result<Self> {
        if log_values.is_empty() || log_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeight(
                "log table must be nonempty with finite entries".into(),
            ));
        }
        Ok(Weight::LogTable(log_values))
    }

    pub fn piecewise(segments: Vec<Segment>, periodicity: Option<Periodicity>) -> Result<Self> {
        Ok(Weight::Piecewise(PiecewiseWeight::new(
            segments,
            periodicity,
        )?))
    }

    /// Check the weight can live on `carrier`.
    pub fn validate_on(&self, carrier: &GroupCarrier) -> Result<()> {
        if let Weight::LogTable(t) = self {
            match carrier.order() {
                Some(n) if n as usize == t.len() => {}
                Some(n) => {
                    return Err(Error::InvalidWeight(format!(
                        "log table has {} entries, carrier has order {n}",
                        t.len()
                    )))
                }
                None => {
                    return Err(Error::InvalidWeight(
                        "log tables are only defined on cyclic carriers".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// `log ω(k)` at grid point `k`.
    pub fn log_at(&self, carrier: &GroupCarrier, k: i64) -> f64 {
        match self {
            Weight::Constant(c) => c.ln(),
            Weight::Piecewise(pw) => pw.value(carrier.native(k)).ln(),
            Weight::Exponential { rate } => rate * carrier.native(k),
            Weight::LogTable(t) => t[carrier.normalize(k) as usize],
        }
    }

    /// `ω(k)` at grid point `k`.
    pub fn value_at(&self, carrier: &GroupCarrier, k: i64) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Piecewise(pw) => pw.value(carrier.native(k)),
            _ => self.log_at(carrier, k).exp(),
        }
    }

    /// Positivity (finite log) on every grid point of `lo..=hi`.
    pub fn check_positive_on(&self, carrier: &GroupCarrier, lo: i64, hi: i64) -> Result<()> {
        for k in lo..=hi {
            let l = self.log_at(carrier, k);
            if !l.is_finite() {
                return Err(Error::NonPositiveWeight {
                    index: k,
                    native: carrier.native(k),
                });
            }
        }
        Ok(())
    }

    pub fn jumps(&self) -> Vec<Jump> {
        match self {
            Weight::Piecewise(pw) => pw.jumps(),
            _ => Vec::new(),
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            Weight::Constant(c) => format!("constant {c}"),
            Weight::Piecewise(pw) => {
                let per = pw
                    .periodicity
                    .map(|p| format!(", period {} above {}", p.period, p.start))
                    .unwrap_or_default();
                format!("piecewise affine, {} segments{per}", pw.segments.len())
            }
            Weight::Exponential { rate } => format!("exp({rate} x)"),
            Weight::LogTable(t) => format!("log table {t:?}"),
        }
    }
}
