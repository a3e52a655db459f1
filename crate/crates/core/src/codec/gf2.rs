use super::graph::PrecodeGraph;
use crate::{Error, Result};

/// Largest bit count the dense elimination encoder accepts.
pub const DENSE_ENCODER_MAX_BITS: usize = 8192;

/// Dense GF(2) matrix with rows packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    /// Builds a matrix from sparse rows; repeated column indices cancel.
    pub fn from_sparse_rows(cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                m.toggle(r, c as usize);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn toggle(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        if self.get(r, c) != value {
            self.toggle(r, c);
        }
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for k in 0..self.words {
                self.data.swap(a * self.words + k, b * self.words + k);
            }
        }
    }

    /// `row[dst] ^= row[src]`.
    fn add_row(&mut self, src: usize, dst: usize) {
        let w = self.words;
        let (s, d) = (src * w, dst * w);
        for k in 0..w {
            let v = self.data[s + k];
            self.data[d + k] ^= v;
        }
    }

    /// Reduces in place to reduced row echelon form and returns the pivot columns
    /// (one per nonzero row, in row order).
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap_rows(r, p);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.add_row(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Columns `j` whose unit vector lies in the row space, i.e. unknowns that the linear
    /// system pins down regardless of the right-hand side.
    pub fn determined_columns(&self) -> Vec<usize> {
        let mut m = self.clone();
        let pivots = m.rref();
        pivots
            .iter()
            .enumerate()
            .filter(|&(r, _)| m.row(r).iter().map(|w| w.count_ones()).sum::<u32>() == 1)
            .map(|(_, &c)| c)
            .collect()
    }
}

/// Rank over GF(2) of the matrix with the given sparse rows.
pub fn dense_rank(cols: usize, rows: &[Vec<u32>]) -> usize {
    BitMatrix::from_sparse_rows(cols, rows).rank()
}

#[derive(Debug, Clone)]
enum Plan {
    /// Every column has weight at most two, so the check matrix is the incidence matrix
    /// of a graph on the checks plus a ground vertex; a spanning forest gives the pivots.
    Forest {
        /// `(bit, child, parent)` in leaf-to-root order; the bit is the edge child-parent.
        tree_edges: Vec<(u32, u32, u32)>,
        rows: Vec<Vec<u32>>,
    },
    Dense {
        reduced: BitMatrix,
        pivots: Vec<usize>,
    },
}

/// Systematic encoder for a sampled precode. The non-pivot bits carry information and the
/// remaining bits are solved from the checks.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    num_bits: usize,
    rank: usize,
    info_positions: Vec<usize>,
    plan: Plan,
}

impl SystematicEncoder {
    pub fn new(graph: &PrecodeGraph) -> Result<Self> {
        let rows = graph.parity_rows();
        let n = graph.num_bits();
        let mut weight = vec![0u8; n];
        for row in &rows {
            for &b in row {
                weight[b as usize] = weight[b as usize].saturating_add(1);
            }
        }
        if weight.iter().all(|&w| w <= 2) {
            Ok(Self::forest(n, rows, &weight))
        } else if n <= DENSE_ENCODER_MAX_BITS {
            Ok(Self::dense(n, &rows))
        } else {
            Err(Error::InvalidArgument(format!(
                "dense GF(2) encoder limited to {DENSE_ENCODER_MAX_BITS} bits, graph has {n}"
            )))
        }
    }

    fn forest(n: usize, rows: Vec<Vec<u32>>, weight: &[u8]) -> Self {
        let checks = rows.len();
        let ground = checks;
        let mut ends = vec![[u32::MAX; 2]; n];
        for (c, row) in rows.iter().enumerate() {
            for &b in row {
                let e = &mut ends[b as usize];
                if e[0] == u32::MAX {
                    e[0] = c as u32;
                } else {
                    e[1] = c as u32;
                }
            }
        }
        let mut dsu: Vec<usize> = (0..=checks).collect();
        fn find(dsu: &mut [usize], mut x: usize) -> usize {
            while dsu[x] != x {
                dsu[x] = dsu[dsu[x]];
                x = dsu[x];
            }
            x
        }
        let mut adjacency: Vec<Vec<(u32, u32)>> = vec![Vec::new(); checks + 1];
        let mut info_positions = Vec::new();
        let mut rank = 0;
        for b in 0..n {
            let (u, v) = match weight[b] {
                0 => {
                    info_positions.push(b);
                    continue;
                }
                1 => (ends[b][0] as usize, ground),
                _ => (ends[b][0] as usize, ends[b][1] as usize),
            };
            let (ru, rv) = (find(&mut dsu, u), find(&mut dsu, v));
            if ru == rv {
                info_positions.push(b);
            } else {
                dsu[ru] = rv;
                adjacency[u].push((b as u32, v as u32));
                adjacency[v].push((b as u32, u as u32));
                rank += 1;
            }
        }
        // BFS from the ground first so that its component is rooted there.
        let mut seen = vec![false; checks + 1];
        let mut order: Vec<(u32, u32, u32)> = Vec::with_capacity(rank);
        let mut queue = std::collections::VecDeque::new();
        for root in std::iter::once(ground).chain(0..checks) {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            queue.push_back(root);
            while let Some(x) = queue.pop_front() {
                for &(bit, y) in &adjacency[x] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        order.push((bit, y, x as u32));
                        queue.push_back(y as usize);
                    }
                }
            }
        }
        order.reverse();
        Self {
            num_bits: n,
            rank,
            info_positions,
            plan: Plan::Forest {
                tree_edges: order,
                rows,
            },
        }
    }

    fn dense(n: usize, rows: &[Vec<u32>]) -> Self {
        let mut reduced = BitMatrix::from_sparse_rows(n, rows);
        let pivots = reduced.rref();
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let info_positions = (0..n).filter(|&j| !is_pivot[j]).collect();
        Self {
            num_bits: n,
            rank: pivots.len(),
            info_positions,
            plan: Plan::Dense { reduced, pivots },
        }
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    /// Rank of the check matrix over GF(2).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Realised code dimension `L M - rank`.
    pub fn dimension(&self) -> usize {
        self.num_bits - self.rank
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// Maps `dimension()` information bits (0/1 bytes) to a codeword.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "expected {} information bits, got {}",
                self.dimension(),
                info.len()
            )));
        }
        let mut word = vec![0u8; self.num_bits];
        for (&pos, &bit) in self.info_positions.iter().zip(info) {
            word[pos] = bit & 1;
        }
        match &self.plan {
            Plan::Forest { tree_edges, rows } => {
                let mut syndrome: Vec<u8> = rows
                    .iter()
                    .map(|row| row.iter().fold(0, |acc, &b| acc ^ word[b as usize]))
                    .collect();
                syndrome.push(0);
                // Each tree bit starts at zero, so the syndrome of its child vertex already
                // accounts for every other edge below; setting the bit clears it.
                for &(bit, child, parent) in tree_edges {
                    if syndrome[child as usize] == 1 {
                        word[bit as usize] = 1;
                        syndrome[child as usize] = 0;
                        syndrome[parent as usize] ^= 1;
                    }
                }
            }
            Plan::Dense { reduced, pivots } => {
                for (r, &p) in pivots.iter().enumerate() {
                    let mut v = 0u8;
                    for &j in &self.info_positions {
                        if word[j] == 1 && reduced.get(r, j) {
                            v ^= 1;
                        }
                    }
                    word[p] = v;
                }
            }
        }
        Ok(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EnsembleParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook elimination on `Vec<Vec<bool>>`, kept deliberately naive.
    fn naive_rank(cols: usize, rows: &[Vec<u32>]) -> usize {
        let mut m: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                let mut v = vec![false; cols];
                for &c in r {
                    v[c as usize] = !v[c as usize];
                }
                v
            })
            .collect();
        let mut rank = 0;
        for c in 0..cols {
            if let Some(p) = (rank..m.len()).find(|&i| m[i][c]) {
                m.swap(rank, p);
                for i in rank + 1..m.len() {
                    if m[i][c] {
                        let pivot = m[rank].clone();
                        m[i].iter_mut().zip(pivot).for_each(|(a, b)| *a ^= b);
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn small_graph_rank_matches_oracle() {
        let p = EnsembleParams::new(2, 3, 3, 4, 2, 0.5).unwrap();
        for seed in 0..50 {
            let g = PrecodeGraph::sample(&p, 6, seed).unwrap();
            let rows = g.parity_rows();
            let rank = naive_rank(g.num_bits(), &rows);
            assert!(rank <= g.num_checks());
            assert_eq!(dense_rank(g.num_bits(), &rows), rank);
            let enc = SystematicEncoder::new(&g).unwrap();
            assert_eq!(enc.rank(), rank);
            let design_k = p.design_dimension(6).unwrap();
            assert!(enc.dimension() as f64 >= design_k - 1e-9);
        }
    }

    #[test]
    fn forest_and_dense_agree_on_rank() {
        let p = EnsembleParams::new(2, 4, 3, 6, 3, 0.5).unwrap();
        for seed in 0..20 {
            let g = PrecodeGraph::sample(&p, 20, seed).unwrap();
            let rows = g.parity_rows();
            let forest = SystematicEncoder::new(&g).unwrap();
            let dense = SystematicEncoder::dense(g.num_bits(), &rows);
            assert!(matches!(forest.plan, Plan::Forest { .. }));
            assert_eq!(forest.rank(), dense.rank());
        }
    }

    fn check_encoder(p: &EnsembleParams, m: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..5 {
            let g = PrecodeGraph::sample(p, m, seed).unwrap();
            let enc = SystematicEncoder::new(&g).unwrap();
            assert!(enc
                .encode(&vec![0; enc.dimension()])
                .unwrap()
                .iter()
                .all(|&b| b == 0));
            for _ in 0..100 {
                let info: Vec<u8> = (0..enc.dimension())
                    .map(|_| rng.random_range(0..2))
                    .collect();
                let word = enc.encode(&info).unwrap();
                assert!(g.is_codeword(&word));
                let read: Vec<u8> = enc.info_positions().iter().map(|&i| word[i]).collect();
                assert_eq!(read, info);
            }
        }
    }

    #[test]
    fn encoded_words_satisfy_all_checks() {
        check_encoder(&EnsembleParams::new(2, 3, 3, 4, 2, 0.5).unwrap(), 6);
        check_encoder(&EnsembleParams::new(2, 3, 3, 8, 3, 0.5).unwrap(), 30);
        check_encoder(&EnsembleParams::new(3, 6, 3, 5, 2, 0.5).unwrap(), 12);
        check_encoder(&EnsembleParams::new(2, 4, 3, 1, 1, 0.5).unwrap(), 8);
    }

    #[test]
    fn wrong_info_length_is_rejected() {
        let g =
            PrecodeGraph::sample(&EnsembleParams::new(2, 3, 3, 4, 2, 0.5).unwrap(), 6, 0).unwrap();
        let enc = SystematicEncoder::new(&g).unwrap();
        assert!(enc.encode(&vec![0; enc.dimension() + 1]).is_err());
    }

    #[test]
    fn determined_columns_of_small_system() {
        // x0 + x1 = ., x1 = ., x2 + x3 = .
        let m = BitMatrix::from_sparse_rows(4, &[vec![0, 1], vec![1], vec![2, 3]]);
        assert_eq!(m.determined_columns(), vec![0, 1]);
        assert_eq!(m.rank(), 3);
    }
}
