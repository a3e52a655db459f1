use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{EnsembleParams, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    /// Re-match sockets so that no bit is attached twice to the same check. A bit with a
    /// double edge drops out of that parity constraint, which with `d_l = 2` leaves it
    /// protected only by the channel and causes an error floor.
    pub avoid_multi_edges: bool,
    /// Accept `M d_l` not divisible by `d_r`: each check section then holds
    /// `ceil(M d_l / d_r)` checks and the spare sockets are left empty, so fewer than `d_r`
    /// checks per section have degree `d_r - 1`.
    pub pad_checks: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            avoid_multi_edges: true,
            pad_checks: false,
        }
    }
}

/// Sampled member of the coupled `(d_l, d_r, L, w)` precode ensemble.
///
/// Every bit has `d_l` sockets and every check `d_r` sockets. Check sockets whose
/// partner would sit in a shortened section are filled with known zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeGraph {
    params: EnsembleParams,
    section_size: usize,
    checks_per_section: usize,
    /// `d_r` entries per check; `None` is a socket filled by a shortened zero bit.
    sockets: Vec<Option<u32>>,
    /// `d_l` check ids per bit.
    bit_checks: Vec<u32>,
}

/// Sizes of the `w` socket groups a section's `M d_l` sockets are split into; group `j`
/// links bit section `i` with check section `i + j`.
fn group_sizes(total: usize, width: usize) -> Vec<usize> {
    (0..width)
        .map(|j| total / width + usize::from(j < total % width))
        .collect()
}

/// Samples a precode graph: every bit socket picks an offset in `0..w` (balanced so each
/// offset receives `M d_l / w` sockets), then is matched to a uniformly random free socket of
/// the target check section reserved for its bit section.
pub fn sample_precode<R: Rng + ?Sized>(
    params: &EnsembleParams,
    section_size: usize,
    options: SampleOptions,
    rng: &mut R,
) -> Result<PrecodeGraph> {
    params.validate()?;
    let (dl, dr, l, w, m) = (
        params.dl,
        params.dr,
        params.coupling_length,
        params.width,
        section_size,
    );
    if m < dr {
        return Err(Error::InvalidM {
            m,
            reason: format!("M must be at least d_r = {dr}"),
        });
    }
    if (m * dl) % dr != 0 && !options.pad_checks {
        return Err(Error::InvalidM {
            m,
            reason: format!("M d_l = {} is not divisible by d_r = {dr}", m * dl),
        });
    }
    let sockets_per_section = m * dl;
    let checks_per_section = sockets_per_section.div_ceil(dr);
    let spare = checks_per_section * dr - sockets_per_section;
    let check_sections = params.extended_length();
    let sizes = group_sizes(sockets_per_section, w);

    // Bit side: shuffle each section's sockets and cut them into offset groups.
    let mut bit_groups: Vec<Vec<Vec<u32>>> = Vec::with_capacity(l);
    for section in 0..l {
        let mut sockets: Vec<u32> = (0..m)
            .flat_map(|idx| std::iter::repeat_n((section * m + idx) as u32, dl))
            .collect();
        sockets.shuffle(rng);
        let mut groups = Vec::with_capacity(w);
        let mut rest = sockets.as_slice();
        for &size in &sizes {
            let (head, tail) = rest.split_at(size);
            groups.push(head.to_vec());
            rest = tail;
        }
        bit_groups.push(groups);
    }

    let mut sockets = vec![None; check_sections * checks_per_section * dr];
    for check_section in 0..check_sections {
        // The last socket of each of the final `spare` checks stays empty.
        let base = check_section * checks_per_section * dr;
        let mut positions: Vec<usize> = (base..base + checks_per_section * dr)
            .filter(|&pos| {
                let c = (pos - base) / dr;
                !(c + spare >= checks_per_section && (pos - base) % dr == dr - 1)
            })
            .collect();
        positions.shuffle(rng);
        let mut rest = positions.as_slice();
        for (offset, &size) in sizes.iter().enumerate() {
            let (group, tail) = rest.split_at(size);
            rest = tail;
            let Some(bit_section) = check_section.checked_sub(offset).filter(|&s| s < l) else {
                continue;
            };
            let mut bits = bit_groups[bit_section][offset].clone();
            bits.shuffle(rng);
            for (&pos, &bit) in group.iter().zip(&bits) {
                sockets[pos] = Some(bit);
            }
            if options.avoid_multi_edges {
                remove_multi_edges(&mut sockets, group, dr, rng);
            }
        }
    }

    let mut bit_checks = vec![u32::MAX; l * m * dl];
    let mut filled = vec![0usize; l * m];
    for (pos, bit) in sockets.iter().enumerate() {
        if let Some(bit) = *bit {
            let b = bit as usize;
            bit_checks[b * dl + filled[b]] = (pos / dr) as u32;
            filled[b] += 1;
        }
    }
    debug_assert!(filled.iter().all(|&f| f == dl));

    Ok(PrecodeGraph {
        params: *params,
        section_size,
        checks_per_section,
        sockets,
        bit_checks,
    })
}

fn duplicated_in_check(sockets: &[Option<u32>], pos: usize, bit: Option<u32>, dr: usize) -> bool {
    let start = pos / dr * dr;
    (start..start + dr).any(|p| p != pos && sockets[p] == bit)
}

/// Swaps bits between sockets of one matching group until no check holds the same bit twice.
/// Gives up after a bounded number of attempts (only tiny sections can be unresolvable).
fn remove_multi_edges<R: Rng + ?Sized>(
    sockets: &mut [Option<u32>],
    group: &[usize],
    dr: usize,
    rng: &mut R,
) {
    if group.len() < 2 {
        return;
    }
    let mut budget = 50 * group.len() + 100;
    loop {
        let conflicts: Vec<usize> = group
            .iter()
            .copied()
            .filter(|&p| duplicated_in_check(sockets, p, sockets[p], dr))
            .collect();
        if conflicts.is_empty() {
            return;
        }
        for a in conflicts {
            if !duplicated_in_check(sockets, a, sockets[a], dr) {
                continue;
            }
            loop {
                if budget == 0 {
                    return;
                }
                budget -= 1;
                let b = group[rng.random_range(0..group.len())];
                if a / dr == b / dr {
                    continue;
                }
                let (bit_a, bit_b) = (sockets[a], sockets[b]);
                if !duplicated_in_check(sockets, b, bit_a, dr)
                    && !duplicated_in_check(sockets, a, bit_b, dr)
                {
                    sockets[a] = bit_b;
                    sockets[b] = bit_a;
                    break;
                }
            }
        }
    }
}

impl PrecodeGraph {
    /// Convenience wrapper seeding a ChaCha8 generator.
    pub fn sample(params: &EnsembleParams, section_size: usize, seed: u64) -> Result<Self> {
        sample_precode(
            params,
            section_size,
            SampleOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn section_size(&self) -> usize {
        self.section_size
    }

    pub fn num_bits(&self) -> usize {
        self.params.coupling_length * self.section_size
    }

    pub fn num_checks(&self) -> usize {
        self.sockets.len() / self.params.dr
    }

    pub fn checks_per_section(&self) -> usize {
        self.checks_per_section
    }

    pub fn check_section(&self, check: usize) -> usize {
        check / self.checks_per_section
    }

    /// `(section, index)` of a bit.
    pub fn bit_coordinate(&self, bit: usize) -> (usize, usize) {
        (bit / self.section_size, bit % self.section_size)
    }

    /// The `d_r` sockets of a check; `None` marks a shortened zero bit.
    pub fn check_sockets(&self, check: usize) -> &[Option<u32>] {
        let dr = self.params.dr;
        &self.sockets[check * dr..(check + 1) * dr]
    }

    /// The `d_l` checks a bit is attached to (with repetition if it has a double edge).
    pub fn bit_checks(&self, bit: usize) -> &[u32] {
        let dl = self.params.dl;
        &self.bit_checks[bit * dl..(bit + 1) * dl]
    }

    /// Number of sockets of a check attached to transmitted bits.
    pub fn check_degree(&self, check: usize) -> usize {
        self.check_sockets(check)
            .iter()
            .filter(|s| s.is_some())
            .count()
    }

    /// Parity constraints over GF(2): the sorted bits of each check, with pairs of
    /// repeated bits cancelled and shortened sockets dropped.
    pub fn parity_rows(&self) -> Vec<Vec<u32>> {
        (0..self.num_checks())
            .map(|c| {
                let mut bits: Vec<u32> = self.check_sockets(c).iter().flatten().copied().collect();
                bits.sort_unstable();
                cancel_pairs(bits)
            })
            .collect()
    }

    /// Whether every check sums to zero under `codeword` (one byte per bit, 0 or 1).
    pub fn is_codeword(&self, codeword: &[u8]) -> bool {
        (0..self.num_checks()).all(|c| {
            self.check_sockets(c)
                .iter()
                .flatten()
                .fold(0u8, |acc, &b| acc ^ codeword[b as usize])
                == 0
        })
    }

    /// Writes one line per check: `check <section> <section>:<index> ...` with sorted
    /// coordinates of transmitted bits.
    pub fn write_adjacency(&self, out: &mut impl Write) -> io::Result<()> {
        for c in 0..self.num_checks() {
            let mut bits: Vec<u32> = self.check_sockets(c).iter().flatten().copied().collect();
            bits.sort_unstable();
            write!(out, "check {}", self.check_section(c))?;
            for b in bits {
                let (s, i) = self.bit_coordinate(b as usize);
                write!(out, " {s}:{i}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Removes adjacent equal pairs from a sorted list (x + x = 0 over GF(2)).
pub(crate) fn cancel_pairs(sorted: Vec<u32>) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(sorted.len());
    for b in sorted {
        if out.last() == Some(&b) {
            out.pop();
        } else {
            out.push(b);
        }
    }
    out
}
