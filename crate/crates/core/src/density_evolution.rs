//! Density evolution for the coupled precode + rateless inner code over the BEC.
//!
//! The state holds, for every section `i` in `0..L`, the erasure probability `p_i` of the
//! bit-to-check messages and `s_i` of the bit-to-channel messages. Sections outside
//! `0..L` are shortened and contribute zero. One iteration computes
//!
//! ```text
//! A_i = 1/w sum_j [1 - (1 - 1/w sum_k p_{i+j-k})^(d_r - 1)]
//! B_i = 1/w sum_j [1 - (1 - eps)(1 - 1/w sum_k s_{i+j-k})^(d_g - 1)]
//! p_i <- A_i^(d_l - 1) Lambda(B_i),   s_i <- A_i^d_l Lambda(B_i)
//! ```
//!
//! with `j, k` ranging over `0..w` and `Lambda(x) = exp(-beta (1 - x))`.

use serde::{Deserialize, Serialize};

use crate::stability;
use crate::{EnsembleParams, Error, PoissonDegree, Result};

/// Per-section message erasure probabilities after `iteration` updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeState {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub iteration: usize,
}

impl DeState {
    /// Every message erased: the starting point of decoding.
    pub fn all_ones(sections: usize) -> Self {
        Self {
            p: vec![1.0; sections],
            s: vec![1.0; sections],
            iteration: 0,
        }
    }

    pub fn zeros(sections: usize) -> Self {
        Self {
            p: vec![0.0; sections],
            s: vec![0.0; sections],
            iteration: 0,
        }
    }

    pub fn sections(&self) -> usize {
        self.p.len()
    }
}

/// Knobs that discretise "iterate until the erasure probability reaches zero".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub max_iterations: usize,
    /// A run stops at a non-zero fixed point once the sup-norm change of `p` drops below
    /// this fraction of the sup-norm of `p`.
    pub fixed_point_tol: f64,
    /// Bit erasure probability below which a run is declared decoded.
    pub success_target: f64,
    /// Width of the final overhead bracket in threshold searches.
    pub bisection_tol: f64,
    /// Lets threshold searches run with `d_g = 1`, which can never reach capacity.
    pub allow_degree_one: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            fixed_point_tol: 1e-12,
            success_target: 1e-10,
            bisection_tol: 1e-4,
            allow_degree_one: false,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.max_iterations == 0
            || !positive(self.fixed_point_tol)
            || !positive(self.success_target)
            || !positive(self.bisection_tol)
        {
            return Err(Error::InvalidArgument(format!(
                "density evolution settings must be strictly positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Bit erasure probability fell below the success target.
    Decoded,
    /// The recursion settled at a non-zero fixed point.
    FixedPoint,
    /// `max_iterations` was exhausted before either of the above.
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub bit_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    pub final_state: DeState,
    pub converged_to_zero: bool,
    pub stop: StopReason,
    /// Every iteration up to 1000, geometrically thinned afterwards; always ends with the final iteration.
    pub trace: Vec<TracePoint>,
}

impl DeOutcome {
    pub fn bit_error(&self) -> f64 {
        bit_error(&self.final_state)
    }
}

/// Reusable scratch space for [`de_step`]: check-side and channel-side aggregates per
/// extended section.
struct Workspace {
    check: Vec<f64>,
    channel: Vec<f64>,
}

impl Workspace {
    fn new(params: &EnsembleParams) -> Self {
        let n = params.extended_length();
        Self {
            check: vec![0.0; n],
            channel: vec![0.0; n],
        }
    }
}

/// Windowed mean `1/w sum_{k<w} v[m - k]` with zeros outside `0..v.len()`.
#[inline]
fn window_mean(v: &[f64], m: usize, w: usize) -> f64 {
    let lo = (m + 1).saturating_sub(w);
    let hi = m.min(v.len() - 1);
    if lo > hi {
        return 0.0;
    }
    v[lo..=hi].iter().sum::<f64>() / w as f64
}

fn step_into(
    params: &EnsembleParams,
    degree: PoissonDegree,
    from: &DeState,
    to: &mut DeState,
    ws: &mut Workspace,
) {
    let w = params.width;
    let check_exp = (params.dr - 1) as i32;
    let channel_exp = (params.dg - 1) as i32;
    let keep = 1.0 - params.epsilon;
    for m in 0..params.extended_length() {
        ws.check[m] = 1.0 - (1.0 - window_mean(&from.p, m, w)).powi(check_exp);
        ws.channel[m] = 1.0 - keep * (1.0 - window_mean(&from.s, m, w)).powi(channel_exp);
    }
    let inv_w = 1.0 / w as f64;
    let bit_exp = (params.dl - 1) as i32;
    for i in 0..from.sections() {
        let a = ws.check[i..i + w].iter().sum::<f64>() * inv_w;
        let b = ws.channel[i..i + w].iter().sum::<f64>() * inv_w;
        let lam = degree.generating(b);
        let a_pow = a.powi(bit_exp);
        to.p[i] = a_pow * lam;
        to.s[i] = a_pow * a * lam;
    }
    to.iteration = from.iteration + 1;
}

/// One density-evolution iteration at mean channel degree `beta`.
pub fn de_step(params: &EnsembleParams, beta: f64, state: &DeState) -> DeState {
    debug_assert_eq!(state.sections(), params.coupling_length);
    let degree = PoissonDegree { beta };
    let mut next = state.clone();
    step_into(
        params,
        degree,
        state,
        &mut next,
        &mut Workspace::new(params),
    );
    next
}

/// Average bit-to-check erasure probability over all sections.
pub fn bit_error(state: &DeState) -> f64 {
    if state.p.is_empty() {
        return 0.0;
    }
    state.p.iter().sum::<f64>() / state.p.len() as f64
}

/// Iterates [`de_step`] from the all-erased state until decoding succeeds, a fixed point is
/// reached, or the iteration budget runs out.
pub fn de_run(params: &EnsembleParams, beta: f64, config: &DeConfig) -> DeOutcome {
    let degree = PoissonDegree { beta };
    let mut cur = DeState::all_ones(params.coupling_length);
    let mut next = cur.clone();
    let mut ws = Workspace::new(params);

    let mut trace = vec![TracePoint {
        iteration: 0,
        bit_error: 1.0,
    }];
    let mut next_sample = 1usize;
    let stop = loop {
        step_into(params, degree, &cur, &mut next, &mut ws);
        std::mem::swap(&mut cur, &mut next);

        let pb = bit_error(&cur);
        if cur.iteration >= next_sample {
            trace.push(TracePoint {
                iteration: cur.iteration,
                bit_error: pb,
            });
            next_sample = if cur.iteration < 1000 {
                cur.iteration + 1
            } else {
                cur.iteration + cur.iteration / 20
            };
        }
        if pb < config.success_target {
            break StopReason::Decoded;
        }
        let mut change = 0.0f64;
        let mut size = 0.0f64;
        for (a, b) in cur.p.iter().zip(&next.p) {
            change = change.max((a - b).abs());
            size = size.max(*a);
        }
        if change <= config.fixed_point_tol * size {
            break StopReason::FixedPoint;
        }
        if cur.iteration >= config.max_iterations {
            break StopReason::IterationLimit;
        }
    };
    if trace.last().map(|t| t.iteration) != Some(cur.iteration) {
        trace.push(TracePoint {
            iteration: cur.iteration,
            bit_error: bit_error(&cur),
        });
    }
    DeOutcome {
        final_state: cur,
        converged_to_zero: stop == StopReason::Decoded,
        stop,
        trace,
    }
}

/// Overhead and degree thresholds `alpha*_L`, `beta*_L` found by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub alpha_star: f64,
    pub beta_star: f64,
    /// Iterations needed by the decoding run at the upper end of the final bracket.
    pub iterations_at_threshold: usize,
    /// Final `(failing, decoding)` overhead bracket.
    pub bracket: (f64, f64),
}

/// Largest overhead tried when expanding the bracket upward.
pub const MAX_SEARCH_ALPHA: f64 = 10.0;

/// Finds `alpha*_L = inf { alpha > 0 : P_b -> 0 }` by bisection on the overhead.
///
/// The bracket is `(lower, upper)` in overhead; it is widened upward by doubling (up to
/// [`MAX_SEARCH_ALPHA`]) and downward toward zero when its ends do not straddle the threshold.
/// Success is assumed monotone in `alpha`; one point above the final bracket is re-checked.
pub fn overhead_threshold(
    params: &EnsembleParams,
    config: &DeConfig,
    search_bracket: (f64, f64),
) -> Result<ThresholdResult> {
    config.validate()?;
    if params.dg == 1 && !config.allow_degree_one {
        return Err(Error::DegreeOneChannel);
    }
    let scale = params.degree_scale()?;
    let (mut lo, mut hi) = search_bracket;
    if !(lo < hi) || lo < -1.0 {
        return Err(Error::InvalidArgument(format!(
            "search bracket {search_bracket:?} must satisfy -1 <= lower < upper"
        )));
    }
    let run = |alpha: f64| de_run(params, scale * (1.0 + alpha), config);

    let mut upper_run = run(hi);
    while !upper_run.converged_to_zero {
        if hi >= MAX_SEARCH_ALPHA {
            return Err(Error::NoSuccessInBracket {
                max_alpha: MAX_SEARCH_ALPHA,
            });
        }
        lo = hi;
        hi = if hi <= 0.0 {
            0.125
        } else {
            (2.0 * hi).min(MAX_SEARCH_ALPHA)
        };
        upper_run = run(hi);
    }
    let checked_above = hi;

    let mut step = (hi - lo).max(config.bisection_tol);
    loop {
        let lower_run = run(lo);
        if !lower_run.converged_to_zero {
            break;
        }
        hi = lo;
        upper_run = lower_run;
        if lo <= 0.0 {
            // Decodes with no overhead at all; the infimum over alpha > 0 is zero.
            return Ok(ThresholdResult {
                alpha_star: 0.0,
                beta_star: scale,
                iterations_at_threshold: upper_run.final_state.iteration,
                bracket: (0.0, 0.0),
            });
        }
        lo = (lo - step).max(0.0);
        step *= 2.0;
    }

    while hi - lo > config.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let mid_run = run(mid);
        if mid_run.converged_to_zero {
            hi = mid;
            upper_run = mid_run;
        } else {
            lo = mid;
        }
    }

    let probe = 0.5 * (hi + checked_above.max(hi + config.bisection_tol));
    if !run(probe).converged_to_zero {
        return Err(Error::NonMonotoneBracket {
            alpha: probe,
            succeeding_alpha: hi,
        });
    }

    let alpha_star = 0.5 * (lo + hi);
    Ok(ThresholdResult {
        alpha_star,
        beta_star: scale * (1.0 + alpha_star),
        iterations_at_threshold: upper_run.final_state.iteration,
        bracket: (lo, hi),
    })
}

/// One row of a threshold sweep over `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub coupling_length: usize,
    pub threshold: std::result::Result<ThresholdResult, Error>,
    pub bounds: std::result::Result<stability::StabilityReport, Error>,
}

/// Default overhead bracket for threshold searches.
pub const DEFAULT_BRACKET: (f64, f64) = (0.0, 0.5);

/// Threshold and stability bounds for each `L` in `coupling_lengths` (sorted ascending).
///
/// Each search starts from a bracket around the previous row's result.
pub fn threshold_sweep(
    template: &EnsembleParams,
    coupling_lengths: &[usize],
    config: &DeConfig,
) -> Result<Vec<SweepRow>> {
    if coupling_lengths.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold sweep needs at least one L".into(),
        ));
    }
    let mut lengths = coupling_lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();

    let mut bracket = DEFAULT_BRACKET;
    let mut rows = Vec::with_capacity(lengths.len());
    for l in lengths {
        let params = template.with_coupling_length(l);
        let threshold = params
            .validate()
            .and_then(|_| overhead_threshold(&params, config, bracket));
        if let Ok(t) = &threshold {
            let margin = 16.0 * config.bisection_tol;
            bracket = ((t.bracket.0 - margin).max(0.0), t.bracket.1 + margin);
        }
        let bounds = stability::threshold_lower_bounds(&params);
        rows.push(SweepRow {
            coupling_length: l,
            threshold,
            bounds,
        });
    }
    Ok(rows)
}
