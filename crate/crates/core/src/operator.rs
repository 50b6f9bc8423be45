//! The weighted translation `T_{a,ω} f(x) = ω(x) f(x a^{-1})`, its iterates,
//! the inverse step `S_{a,ω}`, and the log-domain weight products.
//!
//! Products of weights are accumulated as sums of logarithms and only
//! exponentiated together with `log |f|`, so iterates whose weight product
//! alone would overflow still evaluate when the final value is representable.

use crate::error::{Error, Result};
use crate::group::{GroupCarrier, GroupElement};
use crate::lp::{check_exponent, LpFunction};
use crate::weight::Weight;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTranslation {
    carrier: GroupCarrier,
    a: GroupElement,
    weight: Weight,
    p: f64,
}

impl WeightedTranslation {
    pub fn new(carrier: GroupCarrier, a: GroupElement, weight: Weight, p: f64) -> Result<Self> {
        carrier.validate()?;
        check_exponent(p)?;
        weight.validate_on(&carrier)?;
        Ok(WeightedTranslation {
            carrier,
            a: carrier.element(a.index()),
            weight,
            p,
        })
    }

    pub fn carrier(&self) -> GroupCarrier {
        self.carrier
    }

    pub fn element(&self) -> GroupElement {
        self.a
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `a^{-1}` with the reflected weight `k -> ω(-k)`, conjugate to `self`
    /// under the reflection `k -> -k` of a cyclic carrier.
    pub fn reflected(&self) -> Result<Self> {
        let Some(order) = self.carrier.order() else {
            return Err(Error::NotCyclic);
        };
        let logs = (0..i64::from(order)).map(|k| self.log_weight(-k)).collect();
        WeightedTranslation::new(
            self.carrier,
            self.carrier.element(-self.a.index()),
            Weight::log_table(logs)?,
            self.p,
        )
    }

    pub fn log_weight(&self, k: i64) -> f64 {
        self.weight.log_at(&self.carrier, k)
    }

    pub fn weight_value(&self, k: i64) -> f64 {
        self.weight.value_at(&self.carrier, k)
    }

    pub fn products(&self) -> WeightProducts<'_> {
        WeightProducts { op: self }
    }

    fn check_operand(&self, f: &LpFunction) -> Result<()> {
        if f.carrier() != self.carrier || f.p() != self.p {
            return Err(Error::CarrierMismatch);
        }
        Ok(())
    }

    /// Build the image of `f` under an index map `k -> k + shift` whose new
    /// value at `k` is produced by `value(k, f(k - shift))`.
    fn remap(
        &self,
        f: &LpFunction,
        shift: i64,
        mut value: impl FnMut(i64, f64) -> Result<f64>,
    ) -> Result<LpFunction> {
        match self.carrier.order() {
            Some(order) => {
                let values = (0..i64::from(order))
                    .map(|k| value(k, f.get(k - shift)))
                    .collect::<Result<Vec<_>>>()?;
                LpFunction::new(self.carrier, self.p, 0, values)
            }
            None => {
                let offset = f.offset() + shift;
                let values = f
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| value(offset + i as i64, v))
                    .collect::<Result<Vec<_>>>()?;
                LpFunction::new(self.carrier, self.p, offset, values)
            }
        }
    }

    /// `(T f)(k) = ω(k) f(k - a)`.
    pub fn apply(&self, f: &LpFunction) -> Result<LpFunction> {
        self.check_operand(f)?;
        self.remap(f, self.a.index(), |k, v| {
            let out = self.weight_value(k) * v;
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::Range { index: k, m: 1 })
            }
        })
    }

    /// `T^m f(k) = ω̃_m(k)^{-1} f(k - m a)`, evaluated from the closed-form
    /// product rather than by repeated application.
    pub fn iterate(&self, f: &LpFunction, m: u64) -> Result<LpFunction> {
        self.check_operand(f)?;
        if m == 0 {
            return Ok(f.clone());
        }
        let products = self.products();
        self.remap(f, m as i64 * self.a.index(), |k, v| {
            if v == 0.0 {
                return Ok(0.0);
            }
            let log = v.abs().ln() - products.log_omega_tilde(k, m);
            let out = v.signum() * log.exp();
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::Range { index: k, m })
            }
        })
    }

    /// `m`-fold application of [`apply`](Self::apply).
    pub fn apply_repeated(&self, f: &LpFunction, m: u64) -> Result<LpFunction> {
        let mut g = f.clone();
        for _ in 0..m {
            g = self.apply(&g)?;
        }
        Ok(g)
    }

    /// `S h(k) = h(k + a) / ω(k + a)`, the two-sided inverse of `T`.
    pub fn inverse_step(&self, h: &LpFunction) -> Result<LpFunction> {
        self.check_operand(h)?;
        let a = self.a.index();
        self.remap(h, -a, |k, v| {
            let out = v / self.weight_value(k + a);
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::Range { index: k, m: 1 })
            }
        })
    }

    /// `S^m h(k) = h(k + m a) / ω_m(k)`, closed form.
    pub fn inverse_iterate(&self, h: &LpFunction, m: u64) -> Result<LpFunction> {
        self.check_operand(h)?;
        if m == 0 {
            return Ok(h.clone());
        }
        let products = self.products();
        self.remap(h, -(m as i64) * self.a.index(), |k, v| {
            if v == 0.0 {
                return Ok(0.0);
            }
            let log = v.abs().ln() - products.log_omega(k, m);
            let out = v.signum() * log.exp();
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::Range { index: k, m })
            }
        })
    }

    /// `‖T^m f‖_p` for `m = 0..=n`. Overflowing iterates are reported as `+inf`.
    ///
    /// Uses `T^m f(k + m a) = ω_m(k) f(k)`: each source cell carries its own
    /// running forward product.
    pub fn orbit_norms(&self, f: &LpFunction, n: u64) -> Result<Vec<(u64, f64)>> {
        self.check_operand(f)?;
        let cells: Vec<(i64, f64)> = f.entries().filter(|&(_, v)| v != 0.0).collect();
        let mut logs = vec![0.0_f64; cells.len()];
        let mass = self.carrier.cell_mass(0);
        let mut out = Vec::with_capacity(n as usize + 1);
        for m in 0..=n {
            if m > 0 {
                for ((k, _), l) in cells.iter().zip(logs.iter_mut()) {
                    *l += self.log_weight(self.carrier.translate(*k, self.a, m as i64));
                }
            }
            // log |T^m f| per cell, then a max-scaled p-sum
            let cell_logs: Vec<f64> = cells
                .iter()
                .zip(&logs)
                .map(|(&(_, v), l)| v.abs().ln() + l)
                .collect();
            let top = cell_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm = if cell_logs.is_empty() || top == f64::NEG_INFINITY {
                0.0
            } else {
                let s: f64 = cell_logs.iter().map(|l| ((l - top) * self.p).exp()).sum();
                let log_norm = top + (mass * s).ln() / self.p;
                let v = log_norm.exp();
                if v.is_finite() {
                    v
                } else {
                    f64::INFINITY
                }
            };
            out.push((m, norm));
        }
        Ok(out)
    }
}

/// Summation order for log-domain products.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Summation {
    #[default]
    Sequential,
    Pairwise,
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// On-demand evaluation of `log ω̃_m` and `log ω_m`.
#[derive(Clone, Copy, Debug)]
pub struct WeightProducts<'a> {
    op: &'a WeightedTranslation,
}

impl WeightProducts<'_> {
    fn terms<'s>(
        &'s self,
        k: i64,
        steps: impl Iterator<Item = i64> + 's,
    ) -> impl Iterator<Item = f64> + 's {
        let c = self.op.carrier;
        let a = self.op.a;
        steps.map(move |i| self.op.log_weight(c.translate(k, a, i)))
    }

    /// `log ω̃_m(k) = -Σ_{i=0}^{m-1} log ω(k a^{-i})`.
    pub fn log_omega_tilde(&self, k: i64, m: u64) -> f64 {
        self.log_omega_tilde_with(k, m, Summation::Sequential)
    }

    pub fn log_omega_tilde_with(&self, k: i64, m: u64, how: Summation) -> f64 {
        let it = self.terms(k, (0..m as i64).map(|i| -i));
        -match how {
            Summation::Sequential => it.sum::<f64>(),
            Summation::Pairwise => pairwise_sum(&it.collect::<Vec<_>>()),
        }
    }

    /// `log ω_m(k) = Σ_{i=1}^{m} log ω(k a^i)`.
    pub fn log_omega(&self, k: i64, m: u64) -> f64 {
        self.log_omega_with(k, m, Summation::Sequential)
    }

    pub fn log_omega_with(&self, k: i64, m: u64, how: Summation) -> f64 {
        let it = self.terms(k, 1..=m as i64);
        match how {
            Summation::Sequential => it.sum::<f64>(),
            Summation::Pairwise => pairwise_sum(&it.collect::<Vec<_>>()),
        }
    }

    /// Running `log ω̃_n(k)` for `n = 1, 2, ...`.
    pub fn tilde_scan(&self, k: i64) -> impl Iterator<Item = f64> + '_ {
        let mut acc = 0.0;
        (0i64..).map(move |i| {
            acc -= self
                .op
                .log_weight(self.op.carrier.translate(k, self.op.a, -i));
            acc
        })
    }

    /// Running `log ω_n(k)` for `n = 1, 2, ...`.
    pub fn forward_scan(&self, k: i64) -> impl Iterator<Item = f64> + '_ {
        let mut acc = 0.0;
        (1i64..).map(move |i| {
            acc += self
                .op
                .log_weight(self.op.carrier.translate(k, self.op.a, i));
            acc
        })
    }
}
