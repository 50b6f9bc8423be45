//! Dense-matrix oracle for weighted translations on `Z_γ`.
//!
//! `T` is realized as a `γ × γ` weighted permutation matrix. Norms of
//! `M^{-n}` are computed twice: by dense inversion and repeated products
//! (nalgebra), and by walking the permutation read back from the matrix
//! entries with linear-space products. Neither path shares code with the
//! log-domain products used by [`crate::criteria`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::{check_torsion_condition, ReportVerdict, ScanParams};
use crate::error::{Error, Result};
use crate::group::GroupCarrier;
use crate::lp::LpFunction;
use crate::numfmt::format_value;
use crate::operator::WeightedTranslation;
use crate::weight::Weight;

/// Relative agreement required between the dense and walk paths.
pub const PATH_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CyclicMatrix {
    order: usize,
    entries: DMatrix<f64>,
}

impl CyclicMatrix {
    /// `M[k][(k - a) mod γ] = ω(k)`.
    pub fn from_operator(t: &WeightedTranslation) -> Result<Self> {
        let Some(order) = t.carrier().order() else {
            return Err(Error::NotCyclic);
        };
        let g = order as i64;
        let a = t.element().index();
        let mut entries = DMatrix::zeros(order as usize, order as usize);
        for k in 0..g {
            entries[(k as usize, (k - a).rem_euclid(g) as usize)] = t.weight_value(k);
        }
        Ok(CyclicMatrix {
            order: order as usize,
            entries,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        (&self.entries * x).iter().copied().collect()
    }

    /// Apply to an `LpFunction` on the same cyclic carrier.
    pub fn apply(&self, f: &LpFunction) -> Result<LpFunction> {
        if f.carrier().order() != Some(self.order as u32) {
            return Err(Error::CarrierMismatch);
        }
        LpFunction::new(f.carrier(), f.p(), 0, self.mul_vec(f.values()))
    }

    /// Read the permutation and weights back from the entries:
    /// row `k` holds `w[k]` in column `col[k]`.
    fn monomial(&self) -> (Vec<usize>, Vec<f64>) {
        let mut col = vec![0; self.order];
        let mut w = vec![0.0; self.order];
        for k in 0..self.order {
            for j in 0..self.order {
                let v = self.entries[(k, j)];
                if v != 0.0 {
                    col[k] = j;
                    w[k] = v;
                }
            }
        }
        (col, w)
    }
}

/// `‖M^{-n}‖` for `n = 1..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct InversePowerNorms {
    /// `(n, ‖M^{-n}‖)` from the permutation walk.
    pub norms: Vec<(u64, f64)>,
    /// Last `n` checked by the dense path, when it left the normal
    /// floating-point range before `N`.
    pub dense_truncated_at: Option<u64>,
}

impl InversePowerNorms {
    /// `(min_n ‖M^{-n}‖, argmin)`, first argmin on ties.
    pub fn min(&self) -> (f64, u64) {
        self.norms.iter().fold(
            (f64::INFINITY, 0),
            |best, &(n, v)| if v < best.0 { (v, n) } else { best },
        )
    }
}

/// For a matrix with one nonzero per row and column every operator `p`-norm
/// equals the largest absolute entry, which is also the largest column sum.
fn max_column_sum(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn in_range(v: f64) -> bool {
    v.is_finite() && v >= f64::MIN_POSITIVE
}

pub fn inverse_power_norms(m: &CyclicMatrix, n_max: u64) -> Result<InversePowerNorms> {
    let inv = m
        .entries
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("matrix is singular".into()))?;

    // walk: row k of M^n picks up w[k] w[col k] w[col col k] ...; M^{-n} has
    // the reciprocals of those products as its entries
    let (col, w) = m.monomial();
    let mut pos: Vec<usize> = (0..m.order).collect();
    let mut prod = vec![1.0_f64; m.order];

    let mut dense = DMatrix::<f64>::identity(m.order, m.order);
    let mut dense_truncated_at = None;
    let mut norms = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        for (p, q) in pos.iter_mut().zip(prod.iter_mut()) {
            *q *= w[*p];
            *p = col[*p];
        }
        let walk = prod.iter().map(|q| 1.0 / q).fold(0.0, f64::max);
        if dense_truncated_at.is_none() {
            dense = &dense * &inv;
            let d = max_column_sum(&dense);
            if in_range(d) && in_range(walk) {
                if (d - walk).abs() > PATH_TOLERANCE * d.max(walk) {
                    return Err(Error::OracleMismatch {
                        n,
                        dense: d,
                        closed: walk,
                    });
                }
            } else {
                dense_truncated_at = Some(n);
            }
        }
        norms.push((n, walk));
    }
    Ok(InversePowerNorms {
        norms,
        dense_truncated_at,
    })
}

/// `min_{n <= N} ‖M^{-n}‖ < η`: then `x_n = M^{-n} y` certifies every `y`
/// in `J(0)` at once.
pub fn j_zero_full_space(m: &CyclicMatrix, n_max: u64, eta: f64) -> Result<bool> {
    Ok(inverse_power_norms(m, n_max)?.min().0 < eta)
}

/// A random `Z_γ` instance with log-weights uniform in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomInstance {
    pub seed: u64,
    pub gamma: u32,
    pub a_index: i64,
    pub log_weights: Vec<f64>,
}

impl RandomInstance {
    /// `γ` uniform in `2..=8` unless fixed, `a` uniform in `1..γ`.
    pub fn generate(seed: u64, gamma: Option<u32>) -> Result<Self> {
        if let Some(g) = gamma {
            if g < 2 {
                return Err(Error::InvalidParameter(format!(
                    "gamma must be at least 2, got {g}"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gamma = gamma.unwrap_or_else(|| rng.gen_range(2..=8));
        let a_index = rng.gen_range(1..i64::from(gamma));
        let log_weights = (0..gamma).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok(RandomInstance {
            seed,
            gamma,
            a_index,
            log_weights,
        })
    }

    pub fn operator(&self, p: f64) -> Result<WeightedTranslation> {
        let c = GroupCarrier::finite_cyclic(self.gamma)?;
        WeightedTranslation::new(
            c,
            c.element(self.a_index),
            Weight::log_table(self.log_weights.clone())?,
            p,
        )
    }

    /// Shift the log-weights so that `max_k ω_c(k) = 1`, `c` the order of `a`.
    pub fn normalize_power_bounded(&mut self) {
        let g = i64::from(self.gamma);
        let c = self.gamma as i64 / num_integer::gcd(g, self.a_index);
        let top = (0..g)
            .map(|k| {
                (0..c)
                    .map(|i| self.log_weights[(k + i * self.a_index).rem_euclid(g) as usize])
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let shift = top / c as f64;
        for l in &mut self.log_weights {
            *l -= shift;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    pub trials: usize,
    pub base_seed: u64,
    pub gamma: Option<u32>,
    pub n_max: u64,
    pub eta: f64,
    /// Instances with `|min ‖M^{-n}‖ - η| < band · η` are replaced.
    pub band: f64,
    pub p: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 200,
            base_seed: 0,
            gamma: None,
            n_max: 500,
            eta: 1e-3,
            band: 0.1,
            p: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub instance: RandomInstance,
    pub verdict_checker: ReportVerdict,
    pub verdict_oracle: bool,
    pub min_norm: f64,
    pub n_argmin: u64,
    pub dense_truncated_at: Option<u64>,
}

impl TrialResult {
    pub const CSV_HEADER: &'static str =
        "seed,gamma,verdict_checker,verdict_oracle,min_norm,n_argmin";

    pub fn agree(&self) -> bool {
        (self.verdict_checker == ReportVerdict::Holds) == self.verdict_oracle
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.instance.seed,
            self.instance.gamma,
            self.verdict_checker,
            if self.verdict_oracle {
                "Holds"
            } else {
                "Fails"
            },
            format_value(self.min_norm),
            self.n_argmin
        )
    }
}

/// Oracle and checker verdicts on one instance, or `None` inside the band.
pub fn run_trial(inst: RandomInstance, cfg: &TrialConfig) -> Result<Option<TrialResult>> {
    let t = inst.operator(cfg.p)?;
    let norms = inverse_power_norms(&CyclicMatrix::from_operator(&t)?, cfg.n_max)?;
    let (min_norm, n_argmin) = norms.min();
    if (min_norm - cfg.eta).abs() < cfg.band * cfg.eta {
        return Ok(None);
    }
    let full = t.carrier().full_window().ok_or(Error::NotCyclic)?;
    let report = check_torsion_condition(&t, &full, &ScanParams::new(cfg.eta, 0.5, cfg.n_max)?)?;
    Ok(Some(TrialResult {
        instance: inst,
        verdict_checker: report.verdict,
        verdict_oracle: min_norm < cfg.eta,
        min_norm,
        n_argmin,
        dense_truncated_at: norms.dense_truncated_at,
    }))
}

/// Seeds `base_seed, base_seed + 1, ...` until `trials` instances outside
/// the boundary band have been run.
pub fn run_trials(cfg: &TrialConfig) -> Result<Vec<TrialResult>> {
    if !(cfg.eta.is_finite() && cfg.eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive, got {}",
            cfg.eta
        )));
    }
    let max_attempts = cfg.trials.saturating_mul(100).max(1000);
    let mut out = Vec::with_capacity(cfg.trials);
    let mut attempt = 0u64;
    while out.len() < cfg.trials {
        if attempt as usize >= max_attempts {
            return Err(Error::InvalidParameter(format!(
                "only {} of {} trials fell outside the boundary band after {attempt} seeds",
                out.len(),
                cfg.trials
            )));
        }
        let inst = RandomInstance::generate(cfg.base_seed.wrapping_add(attempt), cfg.gamma)?;
        if let Some(r) = run_trial(inst, cfg)? {
            out.push(r);
        }
        attempt += 1;
    }
    Ok(out)
}
