//! The k-walk auxiliary chain on pairs (walk positions, visited set).
//!
//! A transition moves every walk one step of the base chain independently and
//! adds the new positions to the visited set, so covering the base chain with
//! `k` walks is the same event as the auxiliary chain reaching the layer where
//! the visited set is everything. Only the part reachable from the start is
//! built.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::chain::{Chain, ChainError};
use crate::hitting::{finite_hitting_set, hitting_times, HittingError};
use crate::rational::render_rational;
use crate::scalar::Scalar;
use crate::state_set::{StateId, StateSet};
use crate::Rational;

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuxError {
    #[error("at least one walk is required")]
    NoWalks,
    #[error("expected {expected} start positions, found {found}")]
    WalkCountMismatch { expected: usize, found: usize },
    #[error("start position {0} is not a state of the chain")]
    UnknownStart(StateId),
    #[error("auxiliary chain exceeds the budget of {budget} states")]
    StateSpaceBudgetExceeded { budget: usize },
    #[error(transparent)]
    Hitting(#[from] HittingError),
    #[error("internal: auxiliary chain is malformed: {0}")]
    Internal(#[from] ChainError),
}

/// Positions of the `k` walks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WalkVector(Vec<StateId>);

impl WalkVector {
    pub fn new(positions: Vec<StateId>) -> Result<Self, AuxError> {
        if positions.is_empty() {
            return Err(AuxError::NoWalks);
        }
        Ok(Self(positions))
    }

    pub fn single(x: StateId) -> Self {
        Self(vec![x])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn positions(&self) -> &[StateId] {
        &self.0
    }

    pub fn occupied(&self, width: usize) -> StateSet {
        StateSet::from_ids(width, self.0.iter().copied())
    }
}

/// A state of the auxiliary chain. Every walk position is in `visited`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AuxState {
    pub walks: WalkVector,
    pub visited: StateSet,
}

impl AuxState {
    /// The state the coupling starts from: visited = occupied positions.
    pub fn initial(walks: WalkVector, width: usize) -> Self {
        let visited = walks.occupied(width);
        Self { walks, visited }
    }

    /// Successor after the walks move to `next`.
    pub fn advance(&self, next: WalkVector) -> Self {
        let mut visited = self.visited.clone();
        for &y in next.positions() {
            visited.insert(y);
        }
        Self {
            walks: next,
            visited,
        }
    }

    pub fn is_covering(&self) -> bool {
        self.visited.is_full()
    }

    pub fn display<'a, T: Scalar>(&'a self, chain: &'a Chain<T>) -> impl fmt::Display + 'a {
        AuxStateDisplay { state: self, chain }
    }
}

struct AuxStateDisplay<'a, T> {
    state: &'a AuxState,
    chain: &'a Chain<T>,
}

impl<T: Scalar> fmt::Display for AuxStateDisplay<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let walks: Vec<&str> = self
            .state
            .walks
            .positions()
            .iter()
            .map(|&x| self.chain.label(x))
            .collect();
        let visited = self.chain.format_set(&self.state.visited);
        if walks.len() == 1 {
            write!(f, "({},{})", walks[0], visited)
        } else {
            write!(f, "(({}),{})", walks.join(","), visited)
        }
    }
}

/// `K(x, y) = Π_j P(x_j, y_j)`, the kernel of the k-multiple chain.
pub fn multiple_kernel<T: Scalar>(chain: &Chain<T>, x: &WalkVector, y: &WalkVector) -> T {
    assert_eq!(x.k(), y.k());
    x.positions()
        .iter()
        .zip(y.positions())
        .fold(T::one(), |acc, (&a, &b)| acc * chain.probability(a, b))
}

/// Transition probability between two auxiliary states, straight from the
/// definition: the kernel of the walk move if the destination's visited set
/// is the source's extended by the new positions, zero otherwise.
pub fn aux_transition_probability<T: Scalar>(
    chain: &Chain<T>,
    from: &AuxState,
    to: &AuxState,
) -> T {
    if from.advance(to.walks.clone()).visited != to.visited {
        return T::zero();
    }
    multiple_kernel(chain, &from.walks, &to.walks)
}

fn advance_odometer<T>(choice: &mut [usize], rows: &[&[(StateId, T)]]) -> bool {
    for j in (0..choice.len()).rev() {
        choice[j] += 1;
        if choice[j] < rows[j].len() {
            return true;
        }
        choice[j] = 0;
    }
    false
}

/// Reachable part of the auxiliary chain, with states interned in BFS order.
#[derive(Debug, Clone)]
pub struct AuxiliaryChain<T> {
    k: usize,
    base_width: usize,
    states: Vec<AuxState>,
    index: HashMap<AuxState, usize>,
    chain: Chain<T>,
    start: StateId,
    targets: Vec<StateId>,
}

impl<T: Scalar> AuxiliaryChain<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[AuxState] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &AuxState {
        &self.states[id.0]
    }

    pub fn id_of(&self, state: &AuxState) -> Option<StateId> {
        self.index.get(state).copied().map(StateId)
    }

    /// The auxiliary chain as a plain chain; labels are rendered states.
    pub fn chain(&self) -> &Chain<T> {
        &self.chain
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    /// Reachable states whose visited set is the whole base state space.
    pub fn target_set(&self) -> &[StateId] {
        &self.targets
    }

    pub fn target_states(&self) -> StateSet {
        StateSet::from_ids(self.len(), self.targets.iter().copied())
    }

    pub fn base_width(&self) -> usize {
        self.base_width
    }
}

pub fn build_aux_chain<T: Scalar>(
    chain: &Chain<T>,
    k: usize,
    start: &WalkVector,
) -> Result<AuxiliaryChain<T>, AuxError> {
    build_aux_chain_with_budget(chain, k, start, DEFAULT_STATE_BUDGET)
}

pub fn build_aux_chain_with_budget<T: Scalar>(
    chain: &Chain<T>,
    k: usize,
    start: &WalkVector,
    budget: usize,
) -> Result<AuxiliaryChain<T>, AuxError> {
    if k == 0 {
        return Err(AuxError::NoWalks);
    }
    if start.k() != k {
        return Err(AuxError::WalkCountMismatch {
            expected: k,
            found: start.k(),
        });
    }
    let n = chain.len();
    if let Some(&bad) = start.positions().iter().find(|x| x.0 >= n) {
        return Err(AuxError::UnknownStart(bad));
    }

    let mut states: Vec<AuxState> = Vec::new();
    let mut index: HashMap<AuxState, usize> = HashMap::new();
    let mut rows: Vec<Vec<(StateId, T)>> = Vec::new();
    let intern = |s: AuxState,
                  states: &mut Vec<AuxState>,
                  index: &mut HashMap<AuxState, usize>|
     -> Result<usize, AuxError> {
        if let Some(&i) = index.get(&s) {
            return Ok(i);
        }
        if states.len() >= budget {
            return Err(AuxError::StateSpaceBudgetExceeded { budget });
        }
        index.insert(s.clone(), states.len());
        states.push(s);
        Ok(states.len() - 1)
    };

    intern(AuxState::initial(start.clone(), n), &mut states, &mut index)?;
    let mut queue = VecDeque::from([0usize]);
    let mut choice = vec![0usize; k];
    while let Some(id) = queue.pop_front() {
        let source = states[id].clone();
        let walk_rows: Vec<&[(StateId, T)]> = source
            .walks
            .positions()
            .iter()
            .map(|&x| chain.row(x))
            .collect();
        let mut row: BTreeMap<usize, T> = BTreeMap::new();
        choice.iter_mut().for_each(|c| *c = 0);
        // Odometer over every joint move of the k walks.
        loop {
            let mut p = T::one();
            let mut next = Vec::with_capacity(k);
            for (j, r) in walk_rows.iter().enumerate() {
                let (y, pj) = &r[choice[j]];
                p = p * pj.clone();
                next.push(*y);
            }
            let dest = source.advance(WalkVector(next));
            let before = states.len();
            let dest_id = intern(dest, &mut states, &mut index)?;
            if states.len() > before {
                queue.push_back(dest_id);
            }
            match row.get_mut(&dest_id) {
                Some(acc) => *acc = acc.clone() + p,
                None => {
                    row.insert(dest_id, p);
                }
            }
            if !advance_odometer(&mut choice, &walk_rows) {
                break;
            }
        }
        if rows.len() <= id {
            rows.resize_with(id + 1, Vec::new);
        }
        rows[id] = row.into_iter().map(|(d, p)| (StateId(d), p)).collect();
    }
    rows.resize_with(states.len(), Vec::new);

    let labels = states
        .iter()
        .map(|s| s.display(chain).to_string())
        .collect();
    let aux = Chain::new(labels, rows)?;
    let targets = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_covering())
        .map(|(i, _)| StateId(i))
        .collect();
    Ok(AuxiliaryChain {
        k,
        base_width: n,
        states,
        index,
        chain: aux,
        start: StateId(0),
        targets,
    })
}

/// Expected time for `k` walks to visit every state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverTime<T> {
    Finite(T),
    /// Full coverage from the start does not happen almost surely.
    Infinite,
}

impl<T> CoverTime<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            CoverTime::Finite(v) => Some(v),
            CoverTime::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CoverTime::Infinite)
    }
}

pub fn cover_time<T: Scalar>(
    chain: &Chain<T>,
    k: usize,
    start: &WalkVector,
) -> Result<CoverTime<T>, AuxError> {
    cover_time_with_budget(chain, k, start, DEFAULT_STATE_BUDGET)
}

pub fn cover_time_with_budget<T: Scalar>(
    chain: &Chain<T>,
    k: usize,
    start: &WalkVector,
    budget: usize,
) -> Result<CoverTime<T>, AuxError> {
    let aux = build_aux_chain_with_budget(chain, k, start, budget)?;
    aux_cover_time(&aux)
}

/// Hitting time of the covering layer from the auxiliary start state.
pub fn aux_cover_time<T: Scalar>(aux: &AuxiliaryChain<T>) -> Result<CoverTime<T>, AuxError> {
    if aux.target_set().is_empty() {
        return Ok(CoverTime::Infinite);
    }
    let targets = aux.target_states();
    if !finite_hitting_set(aux.chain(), &targets)?.contains(aux.start()) {
        return Ok(CoverTime::Infinite);
    }
    let solution = hitting_times(aux.chain(), &targets)?;
    let t = solution
        .time(aux.start())
        .cloned()
        .expect("start lies in B(C)");
    Ok(CoverTime::Finite(t))
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering; nodes and edges follow BFS discovery order.
pub fn export_dot(aux: &AuxiliaryChain<Rational>) -> String {
    let mut out = String::new();
    let chain = aux.chain();
    let targets = aux.target_states();
    writeln!(out, "digraph aux {{").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for id in chain.state_ids() {
        let label = escape_dot(chain.label(id));
        if targets.contains(id) {
            writeln!(
                out,
                "  n{} [label=\"{}\", target=true, style=filled, fillcolor=\"#f4c7c3\"];",
                id.0, label
            )
            .unwrap();
        } else {
            writeln!(out, "  n{} [label=\"{}\"];", id.0, label).unwrap();
        }
    }
    for x in chain.state_ids() {
        for (y, p) in chain.row(x) {
            writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                x.0,
                y.0,
                render_rational(p)
            )
            .unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn walks(chain: &Chain<Rational>, labels: &[&str]) -> WalkVector {
        WalkVector::new(labels.iter().map(|l| chain.id_of(l).unwrap()).collect()).unwrap()
    }

    #[test]
    fn triangle_aux_chain() {
        let chain = fixtures::triangle();
        let aux = build_aux_chain(&chain, 1, &walks(&chain, &["1"])).unwrap();
        let labels: Vec<&str> = aux.chain().labels().iter().map(String::as_str).collect();
        assert_eq!(
            labels,
            vec![
                "(1,{1})",
                "(2,{1,2})",
                "(1,{1,2})",
                "(3,{1,2,3})",
                "(1,{1,2,3})",
                "(2,{1,2,3})"
            ]
        );
        let target_labels: Vec<&str> = aux
            .target_set()
            .iter()
            .map(|&t| aux.chain().label(t))
            .collect();
        assert_eq!(
            target_labels,
            vec!["(3,{1,2,3})", "(1,{1,2,3})", "(2,{1,2,3})"]
        );
        assert_eq!(
            cover_time(&chain, 1, &walks(&chain, &["1"])).unwrap(),
            CoverTime::Finite(q(4, 1))
        );
    }

    #[test]
    fn single_state_is_its_own_target() {
        let chain = fixtures::single_state();
        let aux = build_aux_chain(&chain, 1, &walks(&chain, &["s"])).unwrap();
        assert_eq!(aux.len(), 1);
        assert_eq!(aux.target_set(), &[StateId(0)]);
        assert_eq!(aux_cover_time(&aux).unwrap(), CoverTime::Finite(q(0, 1)));
        let dot = export_dot(&aux);
        assert_eq!(
            dot,
            "digraph aux {\n  node [shape=box];\n  n0 [label=\"(s,{s})\", target=true, style=filled, fillcolor=\"#f4c7c3\"];\n  n0 -> n0 [label=\"1\"];\n}\n"
        );
    }

    #[test]
    fn two_walks_on_two_states() {
        let chain = fixtures::two_state(&q(2, 1));
        let aux = build_aux_chain(&chain, 2, &walks(&chain, &["1", "1"])).unwrap();
        let start = aux.state(aux.start());
        assert_eq!(start.visited.len(), 1);
        // the only non-covering state is the start; everything else is covering
        for (i, s) in aux.states().iter().enumerate().skip(1) {
            assert!(s.is_covering(), "state {i}");
        }
        let stay = aux.chain().probability(aux.start(), aux.start());
        assert_eq!(stay, q(1, 4));
        assert_eq!(aux_cover_time(&aux).unwrap(), CoverTime::Finite(q(4, 3)));
    }

    #[test]
    fn start_covering_everything_takes_zero() {
        let chain = fixtures::triangle();
        let t = cover_time(&chain, 3, &walks(&chain, &["3", "1", "2"])).unwrap();
        assert_eq!(t, CoverTime::Finite(q(0, 1)));
    }

    #[test]
    fn entry_funnel_covers_only_from_x() {
        let chain = fixtures::entry_funnel();
        assert!(matches!(
            cover_time(&chain, 1, &walks(&chain, &["x"])).unwrap(),
            CoverTime::Finite(_)
        ));
        for v in ["a", "b", "c", "d", "e", "f"] {
            let aux = build_aux_chain(&chain, 1, &walks(&chain, &[v])).unwrap();
            assert!(aux.target_set().is_empty());
            assert_eq!(aux_cover_time(&aux).unwrap(), CoverTime::Infinite);
        }
    }

    #[test]
    fn reachable_but_not_almost_sure_cover_is_infinite() {
        // from m the walk covers {m, a} or {m, z} but never both
        let chain = crate::validate_chain(
            None,
            &[
                ("m", "a", "1/2"),
                ("m", "z", "1/2"),
                ("a", "a", "1"),
                ("z", "z", "1"),
            ],
        )
        .unwrap();
        let t = cover_time(&chain, 1, &walks(&chain, &["m"])).unwrap();
        assert_eq!(t, CoverTime::Infinite);
        // two walks can cover, but not surely: still infinite
        let two = cover_time(&chain, 2, &walks(&chain, &["m", "m"])).unwrap();
        assert_eq!(two, CoverTime::Infinite);
    }

    #[test]
    fn budget_is_enforced() {
        let chain = fixtures::triangle();
        let err = build_aux_chain_with_budget(&chain, 1, &walks(&chain, &["1"]), 5).unwrap_err();
        assert_eq!(err, AuxError::StateSpaceBudgetExceeded { budget: 5 });
        assert!(build_aux_chain_with_budget(&chain, 1, &walks(&chain, &["1"]), 6).is_ok());
    }

    #[test]
    fn argument_errors() {
        let chain = fixtures::triangle();
        assert_eq!(WalkVector::new(vec![]).unwrap_err(), AuxError::NoWalks);
        assert!(matches!(
            build_aux_chain(&chain, 2, &walks(&chain, &["1"])),
            Err(AuxError::WalkCountMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert_eq!(
            build_aux_chain(&chain, 1, &WalkVector::single(StateId(9))).unwrap_err(),
            AuxError::UnknownStart(StateId(9))
        );
    }

    #[test]
    fn transition_formula_matches_built_rows() {
        let chain = fixtures::triangle();
        let aux = build_aux_chain(&chain, 2, &walks(&chain, &["1", "3"])).unwrap();
        for x in aux.chain().state_ids() {
            for y in aux.chain().state_ids() {
                assert_eq!(
                    aux.chain().probability(x, y),
                    aux_transition_probability(&chain, aux.state(x), aux.state(y))
                );
            }
        }
    }

    #[test]
    fn dot_export_is_stable() {
        let chain = fixtures::triangle();
        let aux = build_aux_chain(&chain, 1, &walks(&chain, &["1"])).unwrap();
        let dot = export_dot(&aux);
        assert_eq!(
            dot,
            export_dot(&build_aux_chain(&chain, 1, &walks(&chain, &["1"])).unwrap())
        );
        assert_eq!(dot.matches("[label=\"(").count(), 6);
        assert_eq!(dot.matches("target=true").count(), 3);
        assert!(dot.contains("n1 -> n3 [label=\"1/2\"];"));
    }
}
