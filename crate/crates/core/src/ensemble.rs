//! Ensemble parameters and the closed-form scalar quantities attached to them.
//!
//! Sections of the coupled chain are indexed `0..L`; channel nodes live in sections
//! `0..L + w - 1`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameters of a `(d_l, d_r, d_g, L, w)` code used over BEC(`epsilon`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    /// Precode bit-node degree.
    pub dl: usize,
    /// Precode check-node degree.
    pub dr: usize,
    /// Channel-node degree of the rateless inner code.
    pub dg: usize,
    /// Number of coupled sections `L`.
    pub coupling_length: usize,
    /// Coupling width `w`.
    pub width: usize,
    /// Erasure probability of the channel.
    pub epsilon: f64,
}

impl EnsembleParams {
    pub fn new(
        dl: usize,
        dr: usize,
        dg: usize,
        coupling_length: usize,
        width: usize,
        epsilon: f64,
    ) -> Result<Self> {
        let params = Self {
            dl,
            dr,
            dg,
            coupling_length,
            width,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks every invariant; useful after mutating fields directly.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParams(msg));
        if self.dl < 2 {
            return invalid(format!("d_l must be at least 2, got {}", self.dl));
        }
        if self.dr < 2 {
            return invalid(format!("d_r must be at least 2, got {}", self.dr));
        }
        if self.dl >= self.dr {
            return invalid(format!(
                "d_l < d_r is required for a positive design rate, got d_l = {}, d_r = {}",
                self.dl, self.dr
            ));
        }
        if self.dg < 1 {
            return invalid("d_g must be at least 1".into());
        }
        if self.coupling_length < 1 {
            return invalid("L must be at least 1".into());
        }
        if self.width < 1 {
            return invalid("w must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return invalid(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        Ok(())
    }

    /// Same ensemble with a different number of sections.
    pub fn with_coupling_length(mut self, coupling_length: usize) -> Self {
        self.coupling_length = coupling_length;
        self
    }

    /// Number of sections that carry check nodes and channel nodes, `L + w - 1`.
    pub fn extended_length(&self) -> usize {
        self.coupling_length + self.width - 1
    }

    /// Design rate `R_pre(L)` of the coupled precode, including the boundary rate loss.
    pub fn design_rate(&self) -> Result<f64> {
        let w = self.width as f64;
        let ratio = self.dl as f64 / self.dr as f64;
        let boundary: f64 = (1..self.width)
            .map(|i| (i as f64 / w).powi(self.dr as i32))
            .sum();
        let loss = ratio * (w - 1.0 - 2.0 * boundary) / self.coupling_length as f64;
        let rate = 1.0 - ratio - loss;
        if rate <= 0.0 {
            return Err(Error::NonPositiveRate {
                rate,
                coupling_length: self.coupling_length,
            });
        }
        Ok(rate)
    }

    /// `1 - d_l / d_r`, the design rate as `L` grows without bound.
    pub fn asymptotic_design_rate(&self) -> f64 {
        1.0 - self.dl as f64 / self.dr as f64
    }

    /// Number of information bits `k = R_pre(L) L M` promised by the design rate.
    pub fn design_dimension(&self, section_size: usize) -> Result<f64> {
        Ok(self.design_rate()? * (self.coupling_length * section_size) as f64)
    }

    /// Converts overhead to the mean channel degree of a bit node:
    /// `beta = d_g / (1 - eps) * L R_pre(L) / (L + w - 1) * (1 + alpha)`.
    pub fn beta_from_alpha(&self, alpha: f64) -> Result<f64> {
        Ok(self.degree_scale()? * (1.0 + alpha))
    }

    /// Inverse of [`Self::beta_from_alpha`].
    pub fn alpha_from_beta(&self, beta: f64) -> Result<f64> {
        Ok(beta / self.degree_scale()? - 1.0)
    }

    /// `L -> infinity` form of [`Self::beta_from_alpha`].
    pub fn asymptotic_beta_from_alpha(&self, alpha: f64) -> f64 {
        self.asymptotic_degree_scale() * (1.0 + alpha)
    }

    /// `L -> infinity` form of [`Self::alpha_from_beta`].
    pub fn asymptotic_alpha_from_beta(&self, beta: f64) -> f64 {
        beta / self.asymptotic_degree_scale() - 1.0
    }

    /// `beta` at zero overhead: `d_g / (1 - eps) * L R_pre(L) / (L + w - 1)`.
    pub fn degree_scale(&self) -> Result<f64> {
        let l = self.coupling_length as f64;
        let rate = self.design_rate()?;
        Ok(self.dg as f64 / (1.0 - self.epsilon) * l * rate / self.extended_length() as f64)
    }

    pub fn asymptotic_degree_scale(&self) -> f64 {
        self.dg as f64 / (1.0 - self.epsilon) * self.asymptotic_design_rate()
    }

    /// Number of received symbols needed for overhead `alpha` given `k` information bits,
    /// `n = round((1 + alpha) k / (1 - eps))`.
    pub fn symbols_for_overhead(&self, alpha: f64, k: usize) -> usize {
        ((1.0 + alpha) * k as f64 / (1.0 - self.epsilon))
            .round()
            .max(0.0) as usize
    }

    /// Overhead `alpha = n (1 - eps) / k - 1` realised by `n` received symbols.
    pub fn overhead_for_symbols(&self, n: usize, k: usize) -> f64 {
        n as f64 * (1.0 - self.epsilon) / k as f64 - 1.0
    }
}

/// Poisson degree distribution of the number of channel nodes attached to a bit node.
///
/// For a Poisson law the node- and edge-perspective generating functions coincide,
/// so `lambda(x) = Lambda(x) = exp(-beta (1 - x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonDegree {
    pub beta: f64,
}

impl PoissonDegree {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Poisson mean must be finite and >= 0, got {beta}"
            )));
        }
        Ok(Self { beta })
    }

    /// Generating function `Lambda(x) = exp(-beta (1 - x))`.
    #[inline]
    pub fn generating(&self, x: f64) -> f64 {
        (-self.beta * (1.0 - x)).exp()
    }

    /// Probability of degree `d`, `beta^d e^-beta / d!`.
    pub fn pmf(&self, d: usize) -> f64 {
        if self.beta == 0.0 {
            return if d == 0 { 1.0 } else { 0.0 };
        }
        let ln_factorial: f64 = (2..=d).map(|i| (i as f64).ln()).sum();
        (d as f64 * self.beta.ln() - self.beta - ln_factorial).exp()
    }

    /// Smallest `D` such that the mass above `D` is below `tail`.
    pub fn truncation_degree(&self, tail: f64) -> usize {
        let mut d = 0;
        loop {
            // P(X > d) <= pmf(d + 1) / (1 - beta / (d + 2)) once d + 2 > beta (geometric majorant).
            let ratio = self.beta / (d + 2) as f64;
            if ratio < 1.0 && self.pmf(d + 1) / (1.0 - ratio) < tail {
                return d;
            }
            d += 1;
        }
    }

    /// Probability masses for degrees `0..=truncation_degree(tail)`.
    pub fn truncated_pmf(&self, tail: f64) -> Vec<f64> {
        (0..=self.truncation_degree(tail))
            .map(|d| self.pmf(d))
            .collect()
    }
}
