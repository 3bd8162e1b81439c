//! Expected hitting times `E_x[τ_S]` over the set `B(S)` of starts from which
//! they are finite.

use thiserror::Error;

use crate::chain::Chain;
use crate::linalg::{is_wcdd, residual, solve_linear, DenseVector, LinalgError, SparseMatrix};
use crate::scalar::Scalar;
use crate::state_set::{StateId, StateSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HittingError {
    #[error("target set is empty")]
    EmptyTargetSet,
    #[error("target set has width {found}, chain has {expected} states")]
    WidthMismatch { expected: usize, found: usize },
    #[error("internal: hitting system is not weakly chained diagonally dominant")]
    InternalNonWcdd,
    #[error("internal: state {0} in B(S) has a transition leaving B(S)")]
    InternalEscape(StateId),
    #[error("internal: one-step equation fails at state {0}")]
    InternalOneStep(StateId),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_targets<T: Scalar>(chain: &Chain<T>, targets: &StateSet) -> Result<(), HittingError> {
    if targets.width() != chain.len() {
        return Err(HittingError::WidthMismatch {
            expected: chain.len(),
            found: targets.width(),
        });
    }
    if targets.is_empty() {
        return Err(HittingError::EmptyTargetSet);
    }
    Ok(())
}

/// `B(S)`: the starts from which `targets` is hit in finite expected time.
///
/// In a finite chain the expectation is finite exactly when the target is hit
/// almost surely, which fails precisely when the walk can reach, before
/// touching `targets`, a state from which `targets` is unreachable.
pub fn finite_hitting_set<T: Scalar>(
    chain: &Chain<T>,
    targets: &StateSet,
) -> Result<StateSet, HittingError> {
    check_targets(chain, targets)?;
    let preds = chain.predecessors();
    let can_reach = chain.backward_closure(targets, &chain.empty_set(), &preds);
    let bad = can_reach.complement();
    let doomed = chain.backward_closure(&bad, targets, &preds);
    Ok(doomed.complement())
}

/// The linear system `A h = b` over `B(S)`, with `A = I - M` where `M` keeps
/// the transitions between non-target states and `b` is 1 off the targets.
#[derive(Debug, Clone)]
pub struct HittingSystem<T> {
    /// `B(S)` in increasing index order; row `i` of the system is `states[i]`.
    pub states: Vec<StateId>,
    pub matrix: SparseMatrix<T>,
    pub rhs: DenseVector<T>,
}

impl<T: Scalar> HittingSystem<T> {
    pub fn assemble(
        chain: &Chain<T>,
        targets: &StateSet,
        finite_set: &StateSet,
    ) -> Result<Self, HittingError> {
        let states: Vec<StateId> = finite_set.iter().collect();
        let mut position = vec![usize::MAX; chain.len()];
        for (i, s) in states.iter().enumerate() {
            position[s.0] = i;
        }
        let b = states.len();
        let mut matrix = SparseMatrix::identity(b);
        let mut rhs = DenseVector::zeros(b);
        for (i, &x) in states.iter().enumerate() {
            if targets.contains(x) {
                continue;
            }
            rhs[i] = T::one();
            for (y, p) in chain.row(x) {
                if !finite_set.contains(*y) {
                    return Err(HittingError::InternalEscape(x));
                }
                if !targets.contains(*y) {
                    matrix.add_to(i, position[y.0], -p.clone());
                }
            }
        }
        Ok(Self {
            states,
            matrix,
            rhs,
        })
    }

    pub fn residual(&self, h: &DenseVector<T>) -> Result<DenseVector<T>, LinalgError> {
        residual(&self.matrix, h, &self.rhs)
    }
}

/// Exact expected hitting times on `B(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingSolution<T> {
    targets: StateSet,
    finite_set: StateSet,
    times: Vec<Option<T>>,
}

impl<T: Scalar> HittingSolution<T> {
    pub fn targets(&self) -> &StateSet {
        &self.targets
    }

    /// `B(S)`.
    pub fn finite_set(&self) -> &StateSet {
        &self.finite_set
    }

    /// `None` when the hitting time from `x` is infinite.
    pub fn time(&self, x: StateId) -> Option<&T> {
        self.times[x.0].as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &T)> {
        self.times
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (StateId(i), t)))
    }

    /// `h(x) - 1 - Σ_y P(x,y) h(y)` for every non-target state of `B(S)`.
    pub fn one_step_defects(&self, chain: &Chain<T>) -> Vec<(StateId, T)> {
        self.finite_set
            .iter()
            .filter(|x| !self.targets.contains(*x))
            .map(|x| {
                let expected = chain.row(x).iter().fold(T::one(), |acc, (y, p)| {
                    let hy = self.times[y.0].clone().unwrap_or_else(T::zero);
                    acc + p.clone() * hy
                });
                (
                    x,
                    self.times[x.0].clone().expect("member of B(S)") - expected,
                )
            })
            .collect()
    }
}

/// Solves the hitting system over `B(S)`; for exact scalars the one-step
/// equation is re-checked on the result.
pub fn hitting_times<T: Scalar>(
    chain: &Chain<T>,
    targets: &StateSet,
) -> Result<HittingSolution<T>, HittingError> {
    let finite_set = finite_hitting_set(chain, targets)?;
    let system = HittingSystem::assemble(chain, targets, &finite_set)?;
    if !is_wcdd(&system.matrix) {
        return Err(HittingError::InternalNonWcdd);
    }
    let h = solve_linear(&system.matrix, &system.rhs)?;
    let mut times = vec![None; chain.len()];
    for (x, value) in system.states.iter().zip(h.0) {
        times[x.0] = Some(value);
    }
    let solution = HittingSolution {
        targets: targets.clone(),
        finite_set,
        times,
    };
    if T::EXACT {
        if let Some((x, _)) = solution
            .one_step_defects(chain)
            .into_iter()
            .find(|(_, d)| !d.is_zero())
        {
            return Err(HittingError::InternalOneStep(x));
        }
    }
    Ok(solution)
}
