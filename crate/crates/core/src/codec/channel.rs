use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::PrecodeGraph;

/// One received rateless symbol: the sum of `d_g` precode bits picked around a uniformly
/// chosen section, possibly erased by the channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelNodeDescriptor {
    pub t: usize,
    /// Section `i` in `0..L + w - 1`.
    pub section: usize,
    /// Shift `j_a` in `0..w`; the referenced bit sits in section `i - j_a`.
    pub shifts: Vec<u32>,
    /// Bit index `l_a` in `0..M` within the referenced section.
    pub bit_indices: Vec<u32>,
    /// `None` when erased.
    pub value: Option<u8>,
}

impl ChannelNodeDescriptor {
    /// Global ids of the referenced bits; `None` for a shortened (zero) bit.
    pub fn referenced_bits(
        &self,
        coupling_length: usize,
        section_size: usize,
    ) -> impl Iterator<Item = Option<u32>> + '_ {
        self.shifts
            .iter()
            .zip(&self.bit_indices)
            .map(move |(&j, &l)| {
                let s = self
                    .section
                    .checked_sub(j as usize)
                    .filter(|&s| s < coupling_length)?;
                Some((s * section_size + l as usize) as u32)
            })
    }

    pub fn is_erased(&self) -> bool {
        self.value.is_none()
    }
}

/// Draws `n` channel symbols from `codeword` and passes each through BEC(`epsilon`).
///
/// Symbols are drawn one after another from `rng`, so a longer stream from an identically
/// seeded generator extends a shorter one.
pub fn channel_stream<R: Rng + ?Sized>(
    graph: &PrecodeGraph,
    codeword: &[u8],
    n: usize,
    epsilon: f64,
    rng: &mut R,
) -> Vec<ChannelNodeDescriptor> {
    let mut out = Vec::with_capacity(n);
    extend_stream(graph, codeword, &mut out, n, epsilon, rng);
    out
}

/// Appends symbols to `stream` until it holds `n`.
pub(crate) fn extend_stream<R: Rng + ?Sized>(
    graph: &PrecodeGraph,
    codeword: &[u8],
    stream: &mut Vec<ChannelNodeDescriptor>,
    n: usize,
    epsilon: f64,
    rng: &mut R,
) {
    let p = graph.params();
    let (l, w, m, dg) = (p.coupling_length, p.width, graph.section_size(), p.dg);
    let sections = p.extended_length();
    while stream.len() < n {
        let section = rng.random_range(0..sections);
        let shifts: Vec<u32> = (0..dg).map(|_| rng.random_range(0..w) as u32).collect();
        let bit_indices: Vec<u32> = (0..dg).map(|_| rng.random_range(0..m) as u32).collect();
        let mut node = ChannelNodeDescriptor {
            t: stream.len(),
            section,
            shifts,
            bit_indices,
            value: None,
        };
        let sum = node
            .referenced_bits(l, m)
            .flatten()
            .fold(0u8, |acc, b| acc ^ codeword[b as usize]);
        let erased = rng.random::<f64>() < epsilon;
        node.value = (!erased).then_some(sum);
        stream.push(node);
    }
}

/// Histogram of bit-node channel degrees: entry `d` counts the bits of the graph attached
/// to exactly `d` channel edges (erased symbols included, repeated picks counted).
pub fn channel_degree_histogram(
    graph: &PrecodeGraph,
    stream: &[ChannelNodeDescriptor],
) -> Vec<u64> {
    let p = graph.params();
    let mut degree = vec![0u32; graph.num_bits()];
    for node in stream {
        for b in node
            .referenced_bits(p.coupling_length, graph.section_size())
            .flatten()
        {
            degree[b as usize] += 1;
        }
    }
    let max = degree.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max + 1];
    for d in degree {
        hist[d as usize] += 1;
    }
    hist
}

/// Total-variation distance between a count histogram and a distribution given by its
/// pmf on `0, 1, 2, ...`; mass not covered by `pmf` is treated as lying beyond both.
pub fn total_variation(counts: &[u64], pmf: impl Fn(usize) -> f64) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let mut covered = 0.0;
    let mut distance = 0.0;
    for (d, &c) in counts.iter().enumerate() {
        let q = pmf(d);
        covered += q;
        distance += (c as f64 / total as f64 - q).abs();
    }
    // The empirical histogram has no mass past its last entry.
    distance += (1.0 - covered).max(0.0);
    0.5 * distance
}
