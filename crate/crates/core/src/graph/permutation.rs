use super::ShiftOperator;
use crate::error::{Error, Result};
use crate::signal::GraphSignal;

/// Node relabeling: node `i` becomes node `map[i]`.
///
/// With `P` the matrix with `[P]_{i, map[i]} = 1`, relabeling a shift
/// operator gives `PᵀSP` and relabeling a signal gives `Pᵀx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n {
                return Err(Error::InvalidPermutation(format!("{m} out of range {n}")));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidPermutation(format!("{m} appears twice")));
            }
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { map: inv }
    }
}

fn check_size(p: &Permutation, n: usize) -> Result<()> {
    if p.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation of size {} applied to {n} nodes",
            p.n()
        )));
    }
    Ok(())
}

/// `[S']_{p(i) p(j)} = [S]_{ij}`.
pub fn permute(s: &ShiftOperator, p: &Permutation) -> Result<ShiftOperator> {
    check_size(p, s.n())?;
    let mut rows = vec![Vec::new(); s.n()];
    for i in 0..s.n() {
        let (cols, vals) = s.row(i);
        rows[p.apply(i)] = cols
            .iter()
            .zip(vals)
            .map(|(&j, &v)| (p.apply(j), v))
            .collect();
    }
    ShiftOperator::from_rows(s.n(), rows, s.variant())
}

/// Row `i` of `x` becomes row `p(i)`.
pub fn permute_signal(x: &GraphSignal, p: &Permutation) -> Result<GraphSignal> {
    check_size(p, x.n())?;
    let mut out = GraphSignal::zeros(x.n(), x.features());
    for i in 0..x.n() {
        out.row_mut(p.apply(i)).copy_from_slice(x.row(i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_shift_operator, Graph, ShiftVariant};

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn identity_leaves_inputs_unchanged() {
        let s = build_shift_operator(&Graph::cycle(4).unwrap(), ShiftVariant::LaplacianWeighted)
            .unwrap();
        let id = Permutation::identity(4);
        assert_eq!(permute(&s, &id).unwrap(), s);
        let x = GraphSignal::from_column(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(permute_signal(&x, &id).unwrap(), x);
    }

    #[test]
    fn path_end_swap_is_an_automorphism() {
        let a = build_shift_operator(&Graph::path(3).unwrap(), ShiftVariant::UnweightedAdjacency)
            .unwrap();
        let p = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(permute(&a, &p).unwrap(), a);
    }

    #[test]
    fn matches_explicit_matrix_product() {
        let g = Graph::directed(3, &[(0, 1, 2.0), (1, 2, 3.0), (0, 2, 5.0)]).unwrap();
        let s = build_shift_operator(&g, ShiftVariant::WeightedAdjacency).unwrap();
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        let mut pm = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            pm[i][p.apply(i)] = 1.0;
        }
        let d = s.to_dense();
        // PᵀSP computed densely.
        let mut expected = vec![vec![0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        expected[a][b] += pm[i][a] * d[i][j] * pm[j][b];
                    }
                }
            }
        }
        assert_eq!(permute(&s, &p).unwrap().to_dense(), expected);
        let x = GraphSignal::from_column(vec![1.0, 2.0, 3.0]);
        let px: Vec<f64> = (0..3)
            .map(|a| (0..3).map(|i| pm[i][a] * x.get(i, 0)).sum())
            .collect();
        assert_eq!(permute_signal(&x, &p).unwrap().into_vec(), px);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let s = ShiftOperator::identity(3);
        assert!(permute(&s, &Permutation::identity(2)).is_err());
    }
}
