use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::extend_stream;
use super::gf2::SystematicEncoder;
use super::graph::{sample_precode, PrecodeGraph, SampleOptions};
use super::peeling::{peel, Schedule, TrialResult};
use crate::{EnsembleParams, Error, Result};

/// What the transmitter sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CodewordMode {
    /// Random information bits through the systematic encoder.
    #[default]
    Encoded,
    /// The all-zero codeword; the encoder is only used to obtain the code dimension.
    AllZero,
}

/// Default largest unresolved bit fraction still counted as a decoding success.
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub section_size: usize,
    pub trials: usize,
    pub seed: u64,
    /// A trial succeeds when at most this fraction of bits is left unresolved. Above the
    /// threshold a few bits can stay unresolved for every M: bits without an unerased
    /// channel symbol that close a cycle through the `d_l = 2` precode form a codeword the
    /// channel never sees. The tolerance separates that floor from the waterfall.
    pub residual_tolerance: f64,
    pub mode: CodewordMode,
    pub schedule: Schedule,
    #[serde(skip)]
    pub sample: SampleOptions,
}

impl SimOptions {
    pub fn new(section_size: usize, trials: usize, seed: u64) -> Self {
        Self {
            section_size,
            trials,
            seed,
            residual_tolerance: DEFAULT_RESIDUAL_TOLERANCE,
            mode: CodewordMode::default(),
            schedule: Schedule::default(),
            sample: SampleOptions::default(),
        }
    }
}

/// One trial at one overhead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub alpha: f64,
    pub trial: usize,
    /// Realised code dimension of the sampled graph.
    pub k: usize,
    pub result: Option<TrialResult>,
    /// Unresolved fraction within the tolerance and no bit resolved wrongly.
    pub success: bool,
    /// Every bit resolved to its transmitted value.
    pub full_recovery: bool,
    /// Why the trial produced no result (error or panic).
    pub failure: Option<String>,
}

/// Aggregate over the trials at one overhead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub alpha: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub full_recoveries: usize,
    pub full_recovery_rate: f64,
    pub mean_residual: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub failed_trials: usize,
    pub mean_k: f64,
    pub design_k: f64,
}

const GRAPH_STREAM: u64 = 0;
const INFO_STREAM: u64 = 1;
const CHANNEL_STREAM: u64 = 2;

/// Generator for one purpose within one trial; independent of the overhead so that all
/// overheads of a trial share the graph, the information bits and the symbol stream.
fn trial_rng(seed: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * 4 + purpose);
    rng
}

/// Runs trial `trial` at every overhead in `alphas` (ascending or not).
pub fn run_trial(
    params: &EnsembleParams,
    options: &SimOptions,
    alphas: &[f64],
    trial: usize,
) -> Result<Vec<TrialOutcome>> {
    let m = options.section_size;
    let graph = sample_precode(
        params,
        m,
        options.sample,
        &mut trial_rng(options.seed, trial, GRAPH_STREAM),
    )?;
    let encoder = SystematicEncoder::new(&graph);
    let (k, codeword) = match (options.mode, encoder) {
        (CodewordMode::Encoded, Ok(enc)) => {
            let mut rng = trial_rng(options.seed, trial, INFO_STREAM);
            let info: Vec<u8> = (0..enc.dimension())
                .map(|_| rng.random_range(0..2))
                .collect();
            (enc.dimension(), enc.encode(&info)?)
        }
        (CodewordMode::Encoded, Err(e)) => return Err(e),
        (CodewordMode::AllZero, Ok(enc)) => (enc.dimension(), vec![0; graph.num_bits()]),
        // Large graphs with heavy columns: fall back to the design dimension.
        (CodewordMode::AllZero, Err(_)) => (
            params.design_dimension(m)?.round() as usize,
            vec![0; graph.num_bits()],
        ),
    };
    Ok(run_on_graph(&graph, &codeword, k, options, alphas, trial))
}

fn run_on_graph(
    graph: &PrecodeGraph,
    codeword: &[u8],
    k: usize,
    options: &SimOptions,
    alphas: &[f64],
    trial: usize,
) -> Vec<TrialOutcome> {
    let params = graph.params();
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]));
    let mut rng = trial_rng(options.seed, trial, CHANNEL_STREAM);
    let mut stream = Vec::new();
    let mut out: Vec<Option<TrialOutcome>> = vec![None; alphas.len()];
    for i in order {
        let alpha = alphas[i];
        let n = params.symbols_for_overhead(alpha, k);
        if stream.len() < n {
            extend_stream(graph, codeword, &mut stream, n, params.epsilon, &mut rng);
        }
        let decoded = peel(graph, &stream[..n], options.schedule);
        let correct = decoded
            .values
            .iter()
            .zip(codeword)
            .all(|(v, &c)| v.is_none_or(|v| v == c));
        let sound = correct && decoded.consistent;
        let success = sound && decoded.result.residual_bit_erasure <= options.residual_tolerance;
        let full_recovery = sound && decoded.decoded();
        let failure = (!correct || !decoded.consistent)
            .then(|| "peeling resolved a bit inconsistently".to_string());
        out[i] = Some(TrialOutcome {
            alpha,
            trial,
            k,
            result: Some(decoded.result),
            success,
            full_recovery,
            failure,
        });
    }
    out.into_iter().flatten().collect()
}

/// Monte Carlo estimate of the decoding success rate at each overhead. Trials run in
/// parallel; a trial that errors or panics is recorded as a failure at every overhead.
/// Rows come back sorted by overhead.
pub fn monte_carlo(
    params: &EnsembleParams,
    alpha_grid: &[f64],
    options: &SimOptions,
) -> Result<Vec<McRow>> {
    params.validate()?;
    if !(0.0..=1.0).contains(&options.residual_tolerance) {
        return Err(Error::InvalidArgument(
            "residual tolerance must lie in [0, 1]".into(),
        ));
    }
    if options.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !a.is_finite() || *a <= -1.0) {
        return Err(Error::InvalidArgument(
            "alpha grid must be non-empty with finite values above -1".into(),
        ));
    }
    // Surface parameter problems (section size, rate) before spawning trials.
    sample_precode(
        params,
        options.section_size,
        options.sample,
        &mut ChaCha8Rng::seed_from_u64(0),
    )?;
    let design_k = params.design_dimension(options.section_size)?;

    let mut alphas = alpha_grid.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let per_trial: Vec<Vec<TrialOutcome>> = (0..options.trials)
        .into_par_iter()
        .map(|trial| {
            let run = catch_unwind(AssertUnwindSafe(|| {
                run_trial(params, options, &alphas, trial)
            }));
            let failure = match run {
                Ok(Ok(outcomes)) => return outcomes,
                Ok(Err(e)) => e.to_string(),
                Err(panic) => panic_message(panic.as_ref()),
            };
            alphas
                .iter()
                .map(|&alpha| TrialOutcome {
                    alpha,
                    trial,
                    k: 0,
                    result: None,
                    success: false,
                    full_recovery: false,
                    failure: Some(failure.clone()),
                })
                .collect()
        })
        .collect();

    Ok(alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let outcomes: Vec<&TrialOutcome> = per_trial.iter().map(|t| &t[i]).collect();
            let trials = outcomes.len();
            let successes = outcomes.iter().filter(|o| o.success).count();
            let full_recoveries = outcomes.iter().filter(|o| o.full_recovery).count();
            let failed_trials = outcomes.iter().filter(|o| o.failure.is_some()).count();
            let mean_residual = outcomes
                .iter()
                .map(|o| o.result.as_ref().map_or(1.0, |r| r.residual_bit_erasure))
                .sum::<f64>()
                / trials as f64;
            let mean_k = outcomes.iter().map(|o| o.k as f64).sum::<f64>() / trials as f64;
            let (wilson_low, wilson_high) =
                wilson_interval(successes, trials, 1.959_963_984_540_054);
            McRow {
                alpha,
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
                full_recoveries,
                full_recovery_rate: full_recoveries as f64 / trials as f64,
                mean_residual,
                wilson_low,
                wilson_high,
                failed_trials,
                mean_k,
                design_k,
            }
        })
        .collect())
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    let msg = payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into());
    format!("trial panicked: {msg}")
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // Blocks of (mean, weight, count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, c1 + c2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, c)| std::iter::repeat_n(m, c))
        .collect()
}

/// Overhead at which the isotonic fit of the success rate first reaches `level`, by linear
/// interpolation between grid points. `None` if the level is never reached or already
/// exceeded at the first point.
pub fn crossing_point(rows: &[McRow], level: f64) -> Option<f64> {
    let rates: Vec<f64> = rows.iter().map(|r| r.success_rate).collect();
    let weights: Vec<f64> = rows.iter().map(|r| r.trials as f64).collect();
    let fit = isotonic_fit(&rates, &weights);
    let i = fit.iter().position(|&f| f >= level)?;
    if i == 0 {
        return (fit[0] == level).then_some(rows[0].alpha);
    }
    let (a0, a1) = (rows[i - 1].alpha, rows[i].alpha);
    let (f0, f1) = (fit[i - 1], fit[i]);
    Some(a0 + (level - f0) / (f1 - f0) * (a1 - a0))
}

/// Overhead distance between the `low` and `high` success-rate crossings.
pub fn crossing_width(rows: &[McRow], low: f64, high: f64) -> Option<f64> {
    Some(crossing_point(rows, high)? - crossing_point(rows, low)?)
}
