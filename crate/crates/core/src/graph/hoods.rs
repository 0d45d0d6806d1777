use super::{Permutation, ShiftOperator, ShiftVariant};

/// Exact-hop neighborhoods `N_i^k = { j : [S^k]_ij != 0 }` for `k = 0..=max_hop`,
/// where "nonzero" means structurally nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodTable {
    n: usize,
    max_hop: usize,
    variant: ShiftVariant,
    // Hop-major: list (k, i) occupies indices[offsets[k * n + i]..offsets[k * n + i + 1]].
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl NeighborhoodTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_hop(&self) -> usize {
        self.max_hop
    }

    /// Variant of the shift operator the table was built from.
    pub fn variant(&self) -> ShiftVariant {
        self.variant
    }

    /// Sorted neighbors of `node` reachable in exactly `hop` steps.
    #[inline]
    pub fn hood(&self, node: usize, hop: usize) -> &[usize] {
        let p = hop * self.n + node;
        &self.indices[self.offsets[p]..self.offsets[p + 1]]
    }

    /// Largest neighborhood size at `hop`.
    pub fn max_size(&self, hop: usize) -> usize {
        (0..self.n).map(|i| self.hood(i, hop).len()).max().unwrap_or(0)
    }

    /// The table of the relabeled graph, node `i` becoming `p(i)`.
    pub fn relabeled(&self, p: &Permutation) -> NeighborhoodTable {
        let (n, map) = (self.n, p.map());
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n * (self.max_hop + 1)];
        for k in 0..=self.max_hop {
            for i in 0..n {
                let mut l: Vec<usize> = self.hood(i, k).iter().map(|&j| map[j]).collect();
                l.sort_unstable();
                lists[k * n + map[i]] = l;
            }
        }
        from_lists(n, self.max_hop, self.variant, lists)
    }
}

fn from_lists(
    n: usize,
    max_hop: usize,
    variant: ShiftVariant,
    lists: Vec<Vec<usize>>,
) -> NeighborhoodTable {
    let mut offsets = Vec::with_capacity(lists.len() + 1);
    let mut indices = Vec::new();
    offsets.push(0);
    for l in lists {
        indices.extend(l);
        offsets.push(indices.len());
    }
    NeighborhoodTable {
        n,
        max_hop,
        variant,
        offsets,
        indices,
    }
}

/// Builds the hop table from the nonzero pattern of `s` by iterated boolean
/// products: `N_i^k` is the union of the row patterns of `S` over `N_i^{k-1}`.
pub fn neighborhoods(s: &ShiftOperator, max_hop: usize) -> NeighborhoodTable {
    let n = s.n();
    let mut lists: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut mark = vec![usize::MAX; n];
    for k in 1..=max_hop {
        let prev = (k - 1) * n;
        for i in 0..n {
            let stamp = k * n + i;
            let mut hood = Vec::new();
            for &m in &lists[prev + i] {
                for &j in s.row(m).0 {
                    if mark[j] != stamp {
                        mark[j] = stamp;
                        hood.push(j);
                    }
                }
            }
            hood.sort_unstable();
            lists.push(hood);
        }
    }
    from_lists(n, max_hop, s.variant(), lists)
}
