//! Stability of the decoded fixed point and the threshold lower bounds it implies.
//!
//! For `d_l = 2` the Jacobian of the `p`-update at `p = s = 0` is the symmetric band matrix
//!
//! ```text
//! (P_L)_{ij} = (d_r - 1) e^{-beta (1 - eps)} (w - |i - j|) / w^2    for |i - j| < w
//! ```
//!
//! Decoding can only succeed if its spectral radius is below one. The all-ones Rayleigh
//! quotient bounds the radius from below, the maximum row sum from above.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{EnsembleParams, Error, Result};

/// Symmetric nonnegative band matrix with entries `scale * (w - |i - j|) / w^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandMatrix {
    pub size: usize,
    pub width: usize,
    pub scale: f64,
    /// Set when the Jacobian vanishes identically (`d_l > 2`).
    pub identically_zero: bool,
}

impl BandMatrix {
    pub fn new(size: usize, width: usize, scale: f64) -> Self {
        Self {
            size,
            width,
            scale,
            identically_zero: false,
        }
    }

    /// Number of nonzero off-diagonals on each side, `w - 1`.
    pub fn half_width(&self) -> usize {
        self.width - 1
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let dist = i.abs_diff(j);
        if dist >= self.width || self.identically_zero {
            return 0.0;
        }
        let w = self.width as f64;
        self.scale * (w - dist as f64) / (w * w)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let lo = i.saturating_sub(self.half_width());
        let hi = (i + self.half_width()).min(self.size - 1);
        (lo..=hi).map(|j| self.entry(i, j)).sum()
    }

    /// Induced 1-norm, the maximum absolute row (equivalently column) sum.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.size).map(|i| self.row_sum(i)).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let hw = self.half_width();
        for (i, o) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(hw);
            let hi = (i + hw).min(self.size - 1);
            *o = (lo..=hi).map(|j| self.entry(i, j) * x[j]).sum();
        }
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.size];
        self.mul_vec(x, &mut ax);
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.entry(i, j)).collect())
            .collect()
    }
}

/// `(d_r - 1) e^{-beta (1 - eps)}`, the interior row sum of the Jacobian.
pub fn jacobian_scale(params: &EnsembleParams, beta: f64) -> f64 {
    (params.dr - 1) as f64 * (-beta * (1.0 - params.epsilon)).exp()
}

/// Jacobian of the `p`-update at the decoded fixed point. It does not depend on the
/// iteration index. For `d_l > 2` every partial derivative vanishes and the returned
/// matrix is flagged as identically zero.
pub fn build_jacobian(params: &EnsembleParams, beta: f64) -> BandMatrix {
    let mut m = BandMatrix::new(
        params.coupling_length,
        params.width,
        jacobian_scale(params, beta),
    );
    if params.dl != 2 {
        m.scale = 0.0;
        m.identically_zero = true;
    }
    m
}

/// Dominant eigenpair of a nonnegative symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub value: f64,
    /// Unit-norm, entrywise nonnegative.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// Certified bracket `lower <= rho <= upper`.
    pub bounds: (f64, f64),
}

/// Default iteration budget for power iteration on an `L x L` band matrix; the spectral gap
/// closes like `1 / L^2`.
pub fn default_iteration_cap(size: usize) -> usize {
    10_000 + 20 * size * size
}

/// Spectral radius by power iteration from the all-ones vector.
pub fn spectral_radius(m: &BandMatrix, tol: f64) -> Result<f64> {
    perron_pair(m, tol, default_iteration_cap(m.size)).map(|p| p.value)
}

/// Power iteration started from the all-ones vector.
///
/// Convergence is certified with the Collatz-Wielandt bracket
/// `min_i (Ax)_i / x_i <= rho <= max_i (Ax)_i / x_i` (valid for positive `x`), tightened
/// from below by the Rayleigh quotient. Iteration stops once the bracket's relative width
/// is below `tol`; the midpoint is returned.
pub fn perron_pair(m: &BandMatrix, tol: f64, max_iterations: usize) -> Result<PerronPair> {
    let n = m.size;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "matrix must be at least 1 x 1".into(),
        ));
    }
    let norm = (n as f64).sqrt();
    let mut x = vec![1.0 / norm; n];
    if m.identically_zero || m.scale == 0.0 {
        return Ok(PerronPair {
            value: 0.0,
            vector: x,
            iterations: 0,
            bounds: (0.0, 0.0),
        });
    }
    let mut ax = vec![0.0; n];
    let mut gap = f64::INFINITY;
    for iteration in 1..=max_iterations {
        m.mul_vec(&x, &mut ax);
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        let mut rayleigh = 0.0;
        for (a, v) in ax.iter().zip(&x) {
            let ratio = a / v;
            lower = lower.min(ratio);
            upper = upper.max(ratio);
            rayleigh += a * v;
        }
        let lower = lower.max(rayleigh);
        gap = (upper - lower) / upper;
        let length = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (xi, a) in x.iter_mut().zip(&ax) {
            *xi = a / length;
        }
        if gap <= tol {
            return Ok(PerronPair {
                value: 0.5 * (lower + upper),
                vector: x,
                iterations: iteration,
                bounds: (lower, upper),
            });
        }
    }
    Err(Error::NonConvergence {
        tol,
        iterations: max_iterations,
        gap,
    })
}

/// `sum_{i,j < L} max(w - |i - j|, 0)` in closed form.
fn band_weight_total(l: usize, w: usize) -> f64 {
    let (l, w) = (l as f64, w as f64);
    if l >= w {
        l * w * w - (w - 1.0) * w * (w + 1.0) / 3.0
    } else {
        w * l * l - (l - 1.0) * l * (l + 1.0) / 3.0
    }
}

/// Fraction `1^T P_L 1 / (L c)` of the interior row sum retained on average, equal to
/// `1 - (w - 1)(w + 1) / (3 w L)` once `L >= w - 1`.
pub fn rayleigh_factor(coupling_length: usize, width: usize) -> f64 {
    let w = width as f64;
    band_weight_total(coupling_length, width) / (w * w * coupling_length as f64)
}

/// All-ones Rayleigh quotient `1^T P_L 1 / L`, a lower bound on the spectral radius.
pub fn rayleigh_lower_bound(params: &EnsembleParams, beta: f64) -> f64 {
    if params.dl != 2 {
        return 0.0;
    }
    jacobian_scale(params, beta) * rayleigh_factor(params.coupling_length, params.width)
}

/// `||P_L||_1 = (d_r - 1) e^{-beta (1 - eps)}`, valid once `L >= 2w - 1` so that some row
/// carries the full band.
pub fn norm_upper_bound(params: &EnsembleParams, beta: f64) -> Result<f64> {
    let min = 2 * params.width - 1;
    if params.coupling_length < min {
        return Err(Error::SizeTooSmall {
            coupling_length: params.coupling_length,
            min,
        });
    }
    if params.dl != 2 {
        return Ok(0.0);
    }
    Ok(jacobian_scale(params, beta))
}

/// Norm bound with the explicit maximum row sum used for chains shorter than `2w - 1`.
pub fn norm_upper_bound_or_row_sum(params: &EnsembleParams, beta: f64) -> f64 {
    norm_upper_bound(params, beta).unwrap_or_else(|_| build_jacobian(params, beta).max_row_sum())
}

/// Spectral sandwich of the Jacobian at one value of `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub beta: f64,
    pub rayleigh_lower: f64,
    pub spectral_radius: f64,
    pub norm_upper: f64,
}

pub fn spectral_summary(params: &EnsembleParams, beta: f64, tol: f64) -> Result<SpectralSummary> {
    let m = build_jacobian(params, beta);
    Ok(SpectralSummary {
        beta,
        rayleigh_lower: rayleigh_lower_bound(params, beta),
        spectral_radius: spectral_radius(&m, tol)?,
        norm_upper: norm_upper_bound_or_row_sum(params, beta),
    })
}

/// Threshold lower bounds for one ensemble and their `L -> infinity` limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// The stability argument is only established for `d_l = 2`; otherwise only the
    /// capacity bound `alpha >= 0` is reported.
    pub stability_applies: bool,
    /// Smallest `beta` with all-ones Rayleigh quotient below one; `None` when every `beta` qualifies.
    pub stability_beta: Option<f64>,
    /// `beta` at zero overhead.
    pub capacity_beta: f64,
    pub lower_bound_beta: f64,
    pub lower_bound_alpha: f64,
    pub limit_beta: f64,
    pub limit_alpha: f64,
    pub capacity_condition_holds: bool,
    /// Jacobian sandwich evaluated at `lower_bound_beta`.
    pub spectral: SpectralSummary,
}

/// Relative tolerance for the spectral radius reported in [`StabilityReport`].
pub const REPORT_SPECTRAL_TOL: f64 = 1e-6;

/// Lower bounds `beta_L >= max[stability, capacity]` and the corresponding overhead bound.
pub fn threshold_lower_bounds(params: &EnsembleParams) -> Result<StabilityReport> {
    params.validate()?;
    let one_minus_eps = 1.0 - params.epsilon;
    let capacity_beta = params.degree_scale()?;
    let stability_applies = params.dl == 2;

    let stability_beta = if stability_applies {
        let arg = (params.dr - 1) as f64 * rayleigh_factor(params.coupling_length, params.width);
        (arg > 0.0).then(|| arg.ln() / one_minus_eps)
    } else {
        None
    };
    let lower_bound_beta = stability_beta.map_or(capacity_beta, |b| b.max(capacity_beta));
    let lower_bound_alpha = params.alpha_from_beta(lower_bound_beta)?.max(0.0);

    let asymptotic_capacity = params.asymptotic_degree_scale();
    let limit_beta = if stability_applies {
        ((params.dr - 1) as f64).ln().max(0.0) / one_minus_eps
    } else {
        0.0
    }
    .max(asymptotic_capacity);
    let limit_alpha = params.asymptotic_alpha_from_beta(limit_beta).max(0.0);

    Ok(StabilityReport {
        stability_applies,
        stability_beta,
        capacity_beta,
        lower_bound_beta,
        lower_bound_alpha,
        limit_beta,
        limit_alpha,
        capacity_condition_holds: stability_applies && capacity_condition(params.dr, params.dg),
        spectral: spectral_summary(params, lower_bound_beta, REPORT_SPECTRAL_TOL)?,
    })
}

/// Necessary condition `d_g >= d_r ln(d_r - 1) / (d_r - 2)` for a `d_l = 2` ensemble to
/// reach capacity as `L` grows.
pub fn capacity_condition(dr: usize, dg: usize) -> bool {
    if dr <= 2 || dg <= 2 {
        return false;
    }
    let dr_f = dr as f64;
    dg as f64 >= dr_f * (dr_f - 1.0).ln() / (dr_f - 2.0)
}

/// Asymptotic overhead bound for `d_g = 1`: `d_r / (d_r - d_l) ln(d_r / d_l) - 1`, strictly positive.
pub fn dg1_overhead_bound(dl: usize, dr: usize) -> Result<f64> {
    if dl == 0 || dl >= dr {
        return Err(Error::InvalidArgument(format!(
            "need 0 < d_l < d_r, got d_l = {dl}, d_r = {dr}"
        )));
    }
    let (dl, dr) = (dl as f64, dr as f64);
    Ok(dr / (dr - dl) * (dr / dl).ln() - 1.0)
}

/// Finite-`L` form of [`dg1_overhead_bound`]:
/// `(L + w - 1) / (L R_pre(L)) ln(1 / (1 - R_pre(L))) - 1`.
pub fn dg1_overhead_bound_finite(params: &EnsembleParams) -> Result<f64> {
    let rate = params.design_rate()?;
    let l = params.coupling_length as f64;
    Ok(params.extended_length() as f64 / (l * rate) * (1.0 / (1.0 - rate)).ln() - 1.0)
}

/// Irreducibility test: the directed graph with an edge `i -> j` whenever the entry is
/// nonzero must be strongly connected.
pub fn is_irreducible(m: &BandMatrix) -> bool {
    if m.size <= 1 {
        return true;
    }
    let out_edges = |i: usize| -> Vec<usize> {
        let lo = i.saturating_sub(m.half_width());
        let hi = (i + m.half_width()).min(m.size - 1);
        (lo..=hi)
            .filter(|&j| j != i && m.entry(i, j) != 0.0)
            .collect()
    };
    let in_edges = |i: usize| -> Vec<usize> {
        let lo = i.saturating_sub(m.half_width());
        let hi = (i + m.half_width()).min(m.size - 1);
        (lo..=hi)
            .filter(|&j| j != i && m.entry(j, i) != 0.0)
            .collect()
    };
    reaches_all(m.size, out_edges) && reaches_all(m.size, in_edges)
}

fn reaches_all(n: usize, neighbours: impl Fn(usize) -> Vec<usize>) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for j in neighbours(i) {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}
