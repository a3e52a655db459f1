use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::ChannelNodeDescriptor;
use super::graph::{cancel_pairs, PrecodeGraph};

/// Order in which ready factors (exactly one unknown bit) are processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Schedule {
    #[default]
    Fifo,
    /// Pick a uniformly random ready factor each step.
    Random(u64),
}

/// Summary of one decoding attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Received symbols, erased ones included.
    pub n: usize,
    pub erased_channel_nodes: usize,
    /// Fraction of the `L M` transmitted bits left unresolved; shortened bits never count.
    pub residual_bit_erasure: f64,
    /// Length of the longest chain of resolutions (a bit resolved from already known bits
    /// only sits at depth 1).
    pub peeling_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelOutcome {
    pub result: TrialResult,
    /// Resolved value per bit, `None` if unresolved.
    pub values: Vec<Option<u8>>,
    /// Every factor whose bits are all resolved is satisfied.
    pub consistent: bool,
}

impl PeelOutcome {
    pub fn unresolved(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn decoded(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// Parity constraint `sum(bits) = value` over bits `0..num_bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub bits: Vec<u32>,
    pub value: u8,
}

/// Peels the precode checks together with the unerased channel symbols of `stream`.
pub fn peel(
    graph: &PrecodeGraph,
    stream: &[ChannelNodeDescriptor],
    schedule: Schedule,
) -> PeelOutcome {
    let p = graph.params();
    let (l, m) = (p.coupling_length, graph.section_size());
    let mut factors: Vec<Factor> = graph
        .parity_rows()
        .into_iter()
        .map(|bits| Factor { bits, value: 0 })
        .collect();
    let mut erased = 0;
    for node in stream {
        match node.value {
            None => erased += 1,
            Some(value) => {
                let mut bits: Vec<u32> = node.referenced_bits(l, m).flatten().collect();
                bits.sort_unstable();
                factors.push(Factor {
                    bits: cancel_pairs(bits),
                    value,
                });
            }
        }
    }
    let mut outcome = peel_system(graph.num_bits(), &factors, schedule);
    outcome.result.n = stream.len();
    outcome.result.erased_channel_nodes = erased;
    outcome
}

/// Erasure peeling on an arbitrary parity system with every bit initially unknown.
pub fn peel_system(num_bits: usize, factors: &[Factor], schedule: Schedule) -> PeelOutcome {
    // Bit-to-factor adjacency in compressed form.
    let mut offsets = vec![0usize; num_bits + 1];
    for f in factors {
        for &b in &f.bits {
            offsets[b as usize + 1] += 1;
        }
    }
    for i in 0..num_bits {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut incident = vec![0u32; offsets[num_bits]];
    for (fi, f) in factors.iter().enumerate() {
        for &b in &f.bits {
            incident[cursor[b as usize]] = fi as u32;
            cursor[b as usize] += 1;
        }
    }

    let mut unknown: Vec<u32> = factors.iter().map(|f| f.bits.len() as u32).collect();
    // XOR of the ids of still-unknown bits: identifies the last one directly.
    let mut unknown_ids: Vec<u32> = factors
        .iter()
        .map(|f| f.bits.iter().fold(0, |a, &b| a ^ b))
        .collect();
    let mut acc: Vec<u8> = factors.iter().map(|f| f.value & 1).collect();
    let mut depth_in: Vec<u32> = vec![0; factors.len()];
    let mut values: Vec<Option<u8>> = vec![None; num_bits];
    let mut depth = vec![0u32; num_bits];

    let mut ready: VecDeque<u32> = (0..factors.len() as u32)
        .filter(|&f| unknown[f as usize] == 1)
        .collect();
    let mut rng = match schedule {
        Schedule::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Schedule::Fifo => None,
    };
    let mut rounds = 0;
    loop {
        let next = match rng.as_mut() {
            None => ready.pop_front(),
            Some(r) if !ready.is_empty() => {
                let i = r.random_range(0..ready.len());
                ready.swap_remove_back(i)
            }
            Some(_) => None,
        };
        let Some(f) = next else { break };
        let f = f as usize;
        if unknown[f] != 1 {
            continue;
        }
        let bit = unknown_ids[f] as usize;
        let value = acc[f];
        let d = depth_in[f] + 1;
        values[bit] = Some(value);
        depth[bit] = d;
        rounds = rounds.max(d as usize);
        for &g in &incident[offsets[bit]..offsets[bit + 1]] {
            let g = g as usize;
            unknown[g] -= 1;
            unknown_ids[g] ^= bit as u32;
            acc[g] ^= value;
            depth_in[g] = depth_in[g].max(d);
            if unknown[g] == 1 {
                ready.push_back(g as u32);
            }
        }
    }

    let consistent = factors
        .iter()
        .zip(&unknown)
        .filter(|(_, &u)| u == 0)
        .all(|(f, _)| {
            f.bits
                .iter()
                .fold(f.value & 1, |a, &b| a ^ values[b as usize].unwrap_or(0))
                == 0
        });
    let unresolved = values.iter().filter(|v| v.is_none()).count();
    let residual = if num_bits == 0 {
        0.0
    } else {
        unresolved as f64 / num_bits as f64
    };
    PeelOutcome {
        result: TrialResult {
            n: 0,
            erased_channel_nodes: 0,
            residual_bit_erasure: residual,
            peeling_rounds: rounds,
        },
        values,
        consistent,
    }
}
