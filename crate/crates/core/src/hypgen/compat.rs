use super::CorrespondenceSet;

/// Dense symmetric binary matrix stored as 64-bit row bitsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of `k` set in both row `i` and row `j`.
    #[inline]
    pub fn common(&self, i: usize, j: usize) -> u32 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Builds from a symmetric predicate evaluated on `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BitMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                if f(i, j) {
                    m.set(i, j);
                    m.set(j, i);
                }
            }
        }
        m
    }
}

/// Dense row-major `n × n` matrix of counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    n: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Pairwise length consistency: `(i, j)` is set iff the source and target
/// distances between the two correspondences differ by at most `tau_sc`.
pub fn first_order_compat(cs: &CorrespondenceSet, tau_sc: f64) -> BitMatrix {
    let items = &cs.items;
    BitMatrix::from_fn(items.len(), |i, j| {
        let ds = (items[i].src - items[j].src).norm();
        let dt = (items[i].tgt - items[j].tgt).norm();
        (ds - dt).abs() <= tau_sc
    })
}

/// Second-order compatibility: for each compatible pair, the number of
/// correspondences compatible with both; zero elsewhere.
pub fn second_order_compat(c: &BitMatrix) -> CountMatrix {
    let n = c.size();
    let mut data = vec![0u32; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if c.get(i, j) {
                let v = c.common(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
    }
    CountMatrix { n, data }
}
