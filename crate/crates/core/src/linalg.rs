//! Exact solution of square sparse systems and the weakly chained diagonal
//! dominance (WCDD) certificate.
//!
//! `solve_linear` first permutes the system to block upper-triangular form
//! using the strongly connected components of the sparsity graph, then runs
//! fraction-free (Bareiss) elimination inside each diagonal block, pivoting on
//! the sparsest candidate row, and finishes each block with exact division.
//! Hitting systems of auxiliary chains decompose into many tiny blocks, one
//! per layer, so this stays cheap even for thousands of unknowns.

use std::collections::{BTreeMap, VecDeque};
use std::ops::{Index, IndexMut};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Square sparse matrix; absent entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n: usize,
    rows: Vec<BTreeMap<usize, T>>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_dense(rows: Vec<Vec<T>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i].get(&j).cloned().unwrap_or_else(T::zero)
    }

    /// Setting zero removes the entry.
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.n && j < self.n, "index ({i}, {j}) out of range");
        if value.is_zero() {
            self.rows[i].remove(&j);
        } else {
            self.rows[i].insert(j, value);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, delta: T) {
        let v = self.get(i, j) + delta;
        self.set(i, j, v);
    }

    /// Nonzero entries of row `i` in column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> {
        self.rows[i].iter().map(|(j, v)| (*j, v))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out.set(i, j, v.clone() * c.clone());
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &DenseVector<T>) -> Result<DenseVector<T>, LinalgError> {
        check_dim(self.n, x.len())?;
        Ok(DenseVector(
            (0..self.n)
                .map(|i| {
                    self.row(i)
                        .fold(T::zero(), |acc, (j, a)| acc + a.clone() * x[j].clone())
                })
                .collect(),
        ))
    }
}

/// Dense column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<T>(pub Vec<T>);

impl<T: Scalar> DenseVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(T::is_zero)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn scale(&self, c: &T) -> Self {
        Self(self.0.iter().map(|v| v.clone() * c.clone()).collect())
    }
}

impl<T> Index<usize> for DenseVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for DenseVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T> From<Vec<T>> for DenseVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

/// `A x - b`.
pub fn residual<T: Scalar>(
    a: &SparseMatrix<T>,
    x: &DenseVector<T>,
    b: &DenseVector<T>,
) -> Result<DenseVector<T>, LinalgError> {
    check_dim(a.n, b.len())?;
    let mut ax = a.mul_vec(x)?;
    for (v, bi) in ax.0.iter_mut().zip(b.iter()) {
        *v = v.clone() - bi.clone();
    }
    Ok(ax)
}

/// Solve `A x = b`. The solution is unique whenever it exists.
pub fn solve_linear<T: Scalar>(
    a: &SparseMatrix<T>,
    b: &DenseVector<T>,
) -> Result<DenseVector<T>, LinalgError> {
    let n = a.n;
    check_dim(n, b.len())?;
    if n == 0 {
        return Ok(DenseVector(Vec::new()));
    }
    let mut graph = DiGraph::<(), ()>::with_capacity(n, a.nnz());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    // Components come out sinks first, so every off-block unknown a block
    // refers to has already been solved.
    let blocks = tarjan_scc(&graph);
    let mut x: Vec<Option<T>> = vec![None; n];
    let mut local = vec![usize::MAX; n];
    for block in blocks {
        let vars: Vec<usize> = block.iter().map(|v| v.index()).collect();
        for (k, &v) in vars.iter().enumerate() {
            local[v] = k;
        }
        let m = vars.len();
        let mut system: Vec<Vec<T>> = Vec::with_capacity(m);
        for &i in &vars {
            let mut row = vec![T::zero(); m + 1];
            let mut rhs = b[i].clone();
            for (j, v) in a.row(i) {
                match &x[j] {
                    Some(xj) => rhs = rhs - v.clone() * xj.clone(),
                    None => row[local[j]] = v.clone(),
                }
            }
            row[m] = rhs;
            system.push(row);
        }
        let solved = solve_dense_fraction_free(system)?;
        for (&v, value) in vars.iter().zip(solved) {
            x[v] = Some(value);
        }
    }
    Ok(DenseVector(
        x.into_iter()
            .map(|v| v.expect("every block solved"))
            .collect(),
    ))
}

/// Bareiss elimination on an augmented `m x (m + 1)` system.
fn solve_dense_fraction_free<T: Scalar>(mut rows: Vec<Vec<T>>) -> Result<Vec<T>, LinalgError> {
    let m = rows.len();
    if m == 1 {
        let [row]: [Vec<T>; 1] = rows.try_into().expect("one row");
        if row[0].is_zero() {
            return Err(LinalgError::SingularMatrix);
        }
        return Ok(vec![row[1].clone() / row[0].clone()]);
    }
    for row in rows.iter_mut() {
        T::normalize_row(row, m);
    }
    let mut prev = T::one();
    for k in 0..m {
        let pivot = (k..m)
            .filter(|&i| !rows[i][k].is_zero())
            .min_by_key(|&i| rows[i][k..m].iter().filter(|v| !v.is_zero()).count())
            .ok_or(LinalgError::SingularMatrix)?;
        rows.swap(k, pivot);
        let (upper, lower) = rows.split_at_mut(k + 1);
        let pivot_row = &upper[k];
        let p = pivot_row[k].clone();
        for row in lower.iter_mut() {
            let factor = std::mem::replace(&mut row[k], T::zero());
            for j in k + 1..=m {
                let updated = p.clone() * row[j].clone() - factor.clone() * pivot_row[j].clone();
                row[j] = updated / prev.clone();
            }
        }
        prev = p;
    }
    let mut x = vec![T::zero(); m];
    for k in (0..m).rev() {
        let mut acc = rows[k][m].clone();
        for j in k + 1..m {
            if !rows[k][j].is_zero() {
                acc = acc - rows[k][j].clone() * x[j].clone();
            }
        }
        x[k] = acc / rows[k][k].clone();
    }
    Ok(x)
}

/// Weakly chained diagonal dominance: every row is weakly dominant and each
/// row has a walk through nonzero off-diagonal entries to a strictly dominant
/// row.
pub fn is_wcdd<T: Scalar>(a: &SparseMatrix<T>) -> bool {
    let n = a.n;
    let mut strict = vec![false; n];
    for (i, flag) in strict.iter_mut().enumerate() {
        let diag = a.get(i, i).abs();
        let off = a
            .row(i)
            .filter(|(j, _)| *j != i)
            .fold(T::zero(), |acc, (_, v)| acc + v.abs());
        if diag < off {
            return false;
        }
        *flag = diag > off;
    }
    // Rows that can reach a strict row: reverse search along i -> j edges.
    let mut preds = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if j != i {
                preds[j].push(i);
            }
        }
    }
    let mut reached = strict.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| strict[i]).collect();
    while let Some(j) = queue.pop_front() {
        for &i in &preds[j] {
            if !reached[i] {
                reached[i] = true;
                queue.push_back(i);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_traits::Signed;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn qm(rows: &[&[(i64, i64)]]) -> SparseMatrix<Rational> {
        SparseMatrix::from_dense(
            rows.iter()
                .map(|r| r.iter().map(|&(n, d)| q(n, d)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn qv(v: &[i64]) -> DenseVector<Rational> {
        DenseVector(v.iter().map(|&n| q(n, 1)).collect())
    }

    #[test]
    fn identity_system_returns_rhs() {
        let b = DenseVector(vec![q(1, 2), q(-3, 1), q(7, 5)]);
        let x = solve_linear(&SparseMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn two_state_one_by_one_system() {
        // h(1) = 1 + (2/3) h(1)
        let a = qm(&[&[(1, 3)]]);
        let x = solve_linear(&a, &qv(&[1])).unwrap();
        assert_eq!(x, qv(&[3]));
    }

    #[test]
    fn three_cycle_hitting_system_matches_step_count() {
        // unknowns h(1), h(2); target 3 eliminated: h1 - h2 = 1, h2 = 1
        let a = qm(&[&[(1, 1), (-1, 1)], &[(0, 1), (1, 1)]]);
        let x = solve_linear(&a, &qv(&[1, 1])).unwrap();
        assert_eq!(x, qv(&[2, 1]));
    }

    #[test]
    fn dense_block_with_pivoting() {
        // zero in the leading position forces a row swap
        let a = qm(&[
            &[(0, 1), (2, 1), (1, 1)],
            &[(1, 1), (1, 2), (0, 1)],
            &[(3, 1), (0, 1), (1, 3)],
        ]);
        for a in [a.clone(), a.scale(&q(-2, 7))] {
            let b = DenseVector(vec![q(1, 1), q(2, 3), q(-5, 1)]);
            let x = solve_linear(&a, &b).unwrap();
            assert!(residual(&a, &x, &b).unwrap().is_zero());
        }
    }

    #[test]
    fn singular_systems_are_reported() {
        let a = qm(&[&[(1, 1), (2, 1)], &[(2, 1), (4, 1)]]);
        assert_eq!(
            solve_linear(&a, &qv(&[1, 2])),
            Err(LinalgError::SingularMatrix)
        );
        assert_eq!(
            solve_linear(&SparseMatrix::<Rational>::zeros(2), &qv(&[0, 0])),
            Err(LinalgError::SingularMatrix)
        );
    }

    #[test]
    fn dimension_mismatch() {
        let a = SparseMatrix::<Rational>::identity(2);
        assert_eq!(
            solve_linear(&a, &qv(&[1])),
            Err(LinalgError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        assert!(residual(&a, &qv(&[1, 2, 3]), &qv(&[1, 2])).is_err());
    }

    #[test]
    fn residual_detects_perturbation() {
        let a = qm(&[
            &[(2, 1), (1, 1), (0, 1)],
            &[(0, 1), (1, 1), (0, 1)],
            &[(0, 1), (1, 1), (3, 1)],
        ]);
        let b = qv(&[3, 1, 4]);
        let mut x = solve_linear(&a, &b).unwrap();
        assert!(residual(&a, &x, &b).unwrap().is_zero());
        x[1] = x[1].clone() + q(1, 1);
        let r = residual(&a, &x, &b).unwrap();
        assert_eq!(r, qv(&[1, 1, 1]));
        x[1] = x[1].clone() - q(1, 1);
        x[0] = x[0].clone() + q(1, 1);
        assert_eq!(residual(&a, &x, &b).unwrap(), qv(&[2, 0, 0]));
    }

    #[test]
    fn wcdd_examples() {
        let strict = qm(&[&[(3, 1), (1, 1)], &[(-1, 2), (1, 1)]]);
        assert!(is_wcdd(&strict));
        assert!(!is_wcdd(&SparseMatrix::<Rational>::zeros(3)));
        // weakly dominant everywhere, but the second row is cut off from the strict one
        let cut = qm(&[
            &[(1, 1), (0, 1), (0, 1)],
            &[(0, 1), (1, 1), (-1, 1)],
            &[(0, 1), (-1, 1), (1, 1)],
        ]);
        assert!(!is_wcdd(&cut));
        // chained: row 0 -> row 1 -> row 2 (strict)
        let chained = qm(&[
            &[(1, 1), (-1, 1), (0, 1)],
            &[(0, 1), (1, 1), (-1, 1)],
            &[(0, 1), (0, 1), (1, 1)],
        ]);
        assert!(is_wcdd(&chained));
        // the chain must follow nonzero entries from the row outward, not inward
        let inward = qm(&[&[(1, 1), (0, 1)], &[(-1, 1), (1, 1)]]);
        assert!(is_wcdd(&inward));
        // a strict row pointing into a weak cycle does not rescue the cycle
        let backwards = qm(&[
            &[(1, 1), (-1, 1), (0, 1), (0, 1)],
            &[(0, 1), (1, 1), (-1, 1), (0, 1)],
            &[(0, 1), (-1, 1), (1, 1), (0, 1)],
            &[(-1, 2), (0, 1), (0, 1), (1, 1)],
        ]);
        assert!(!is_wcdd(&backwards));
    }

    #[test]
    fn float_instantiation_agrees() {
        let a = SparseMatrix::<f64>::from_dense(vec![vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let x = solve_linear(&a, &DenseVector(vec![1.0, 2.0])).unwrap();
        assert!((x[0] - 0.1).abs() < 1e-12 && (x[1] - 0.6).abs() < 1e-12);
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=5).prop_map(|(n, d)| q(n, d))
    }

    fn wcdd_matrix(n: usize) -> impl Strategy<Value = SparseMatrix<Rational>> {
        // Off-diagonal rows scaled so every row is weakly dominant; the last
        // row is strictly dominant and a path 0 -> 1 -> ... -> n-1 exists.
        proptest::collection::vec(proptest::collection::vec(small_rational(), n), n).prop_map(
            move |raw| {
                let mut m = SparseMatrix::zeros(n);
                for (i, row) in raw.iter().enumerate() {
                    let mut off = Rational::from_integer(0.into());
                    for (j, v) in row.iter().enumerate() {
                        if j != i {
                            m.set(i, j, v.clone());
                            off += v.abs();
                        }
                    }
                    if i + 1 < n && m.get(i, i + 1) == q(0, 1) {
                        m.set(i, i + 1, q(1, 1));
                        off += q(1, 1);
                    }
                    let diag = if i + 1 == n { off + q(1, 1) } else { off };
                    m.set(i, i, if row[i] < q(0, 1) { -diag } else { diag });
                }
                m
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn wcdd_systems_solve_exactly(
            (a, b) in (1usize..7).prop_flat_map(|n| (wcdd_matrix(n), proptest::collection::vec(small_rational(), n)))
        ) {
            prop_assert!(is_wcdd(&a));
            let b = DenseVector(b);
            let x = solve_linear(&a, &b).expect("WCDD matrices are non-singular");
            prop_assert!(residual(&a, &x, &b).unwrap().is_zero());
        }

        #[test]
        fn scaling_covariance(
            (a, b) in (1usize..6).prop_flat_map(|n| (wcdd_matrix(n), proptest::collection::vec(small_rational(), n))),
            c in small_rational().prop_filter("nonzero", |c| *c != q(0, 1)),
        ) {
            let b = DenseVector(b);
            let x = solve_linear(&a, &b).unwrap();
            let y = solve_linear(&a.scale(&c), &b.scale(&c)).unwrap();
            prop_assert_eq!(x, y);
        }
    }
}
