//! Finite Markov chains with sparse transition rows.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{parse_rational, render_rational, RationalParseError};
use crate::scalar::Scalar;
use crate::state_set::{StateId, StateSet};
use crate::{MarkovChain, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("chain has no states")]
    EmptyChain,
    #[error("state labels must be non-empty")]
    EmptyLabel,
    #[error("state label `{0}` appears more than once")]
    DuplicateLabel(String),
    #[error("transition mentions undeclared state `{0}`")]
    UnknownState(String),
    #[error("transition {from} -> {to} is listed more than once")]
    DuplicateEdge { from: String, to: String },
    #[error("probability {value} of {from} -> {to} is outside [0, 1]")]
    ProbabilityOutOfRange {
        from: String,
        to: String,
        value: String,
    },
    #[error("row of state `{state}` sums to {sum}, not 1")]
    RowSumMismatch { state: String, sum: String },
    #[error(transparent)]
    Probability(#[from] RationalParseError),
    #[error("malformed chain file: {0}")]
    Format(String),
}

impl ChainError {
    /// Syntax problems, as opposed to a well-formed input that is not a chain.
    pub fn is_syntax(&self) -> bool {
        matches!(
            self,
            ChainError::Format(_)
                | ChainError::Probability(RationalParseError::Malformed(_))
                | ChainError::Probability(RationalParseError::FloatingPointLiteral(_))
        )
    }
}

/// A finite Markov chain: labelled states and stochastic sparse rows.
///
/// Rows hold only strictly positive entries, sorted by destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<T> {
    labels: Vec<String>,
    rows: Vec<Vec<(StateId, T)>>,
}

impl<T: Scalar> Chain<T> {
    /// Build a chain from labels and per-state rows, checking every invariant.
    /// Zero entries are dropped; duplicate destinations are rejected.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<(StateId, T)>>) -> Result<Self, ChainError> {
        if labels.is_empty() {
            return Err(ChainError::EmptyChain);
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(ChainError::EmptyLabel);
            }
            if !seen.insert(label.as_str()) {
                return Err(ChainError::DuplicateLabel(label.clone()));
            }
        }
        if rows.len() != labels.len() {
            return Err(ChainError::Format(format!(
                "{} rows for {} states",
                rows.len(),
                labels.len()
            )));
        }
        let n = labels.len();
        let mut clean = Vec::with_capacity(n);
        for (x, row) in rows.into_iter().enumerate() {
            let mut row: Vec<(StateId, T)> = row;
            row.sort_by_key(|(y, _)| *y);
            let mut sum = T::zero();
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(ChainError::DuplicateEdge {
                        from: labels[x].clone(),
                        to: labels[pair[0].0 .0].clone(),
                    });
                }
            }
            for (y, p) in &row {
                if y.0 >= n {
                    return Err(ChainError::Format(format!(
                        "destination index {y} out of range"
                    )));
                }
                if p.is_negative() || *p > T::one() {
                    return Err(ChainError::ProbabilityOutOfRange {
                        from: labels[x].clone(),
                        to: labels[y.0].clone(),
                        value: p.to_string(),
                    });
                }
                sum = sum + p.clone();
            }
            if !T::is_unit_mass(&sum) {
                return Err(ChainError::RowSumMismatch {
                    state: labels[x].clone(),
                    sum: sum.to_string(),
                });
            }
            row.retain(|(_, p)| !p.is_zero());
            clean.push(row);
        }
        Ok(Self {
            labels,
            rows: clean,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: StateId) -> &str {
        &self.labels[id.0]
    }

    pub fn id_of(&self, label: &str) -> Option<StateId> {
        self.labels.iter().position(|l| l == label).map(StateId)
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.len()).map(StateId)
    }

    /// Nonzero transitions out of `x`, sorted by destination.
    pub fn row(&self, x: StateId) -> &[(StateId, T)] {
        &self.rows[x.0]
    }

    pub fn probability(&self, x: StateId, y: StateId) -> T {
        self.rows[x.0]
            .binary_search_by_key(&y, |(z, _)| *z)
            .map(|i| self.rows[x.0][i].1.clone())
            .unwrap_or_else(|_| T::zero())
    }

    pub fn transition_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn empty_set(&self) -> StateSet {
        StateSet::empty(self.len())
    }

    pub fn full_set(&self) -> StateSet {
        StateSet::full(self.len())
    }

    /// Predecessor lists of the transition graph.
    pub fn predecessors(&self) -> Vec<Vec<StateId>> {
        let mut preds = vec![Vec::new(); self.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, _) in row {
                preds[y.0].push(StateId(x));
            }
        }
        preds
    }

    /// States reachable from `start` in zero or more steps.
    pub fn reachable_from(&self, start: &StateSet) -> StateSet {
        let mut seen = start.clone();
        let mut queue: VecDeque<StateId> = start.iter().collect();
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.row(x) {
                if seen.insert(*y) {
                    queue.push_back(*y);
                }
            }
        }
        seen
    }

    /// States that can reach `targets` in zero or more steps.
    pub fn co_reachable(&self, targets: &StateSet) -> StateSet {
        self.backward_closure(targets, &self.empty_set(), &self.predecessors())
    }

    /// Whether some path from `from` enters `targets` with every state before
    /// the endpoint outside `blocked`. A start inside `targets` always succeeds.
    pub fn can_reach_avoiding(
        &self,
        from: StateId,
        targets: &StateSet,
        blocked: &StateSet,
    ) -> bool {
        if targets.contains(from) {
            return true;
        }
        if blocked.contains(from) {
            return false;
        }
        let mut seen = self.empty_set();
        seen.insert(from);
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.row(x) {
                if targets.contains(*y) {
                    return true;
                }
                if !blocked.contains(*y) && seen.insert(*y) {
                    queue.push_back(*y);
                }
            }
        }
        false
    }

    /// Backward search from `seeds`: every state with a path into `seeds`
    /// whose states before the endpoint avoid `blocked`. Includes `seeds`.
    pub(crate) fn backward_closure(
        &self,
        seeds: &StateSet,
        blocked: &StateSet,
        preds: &[Vec<StateId>],
    ) -> StateSet {
        let mut seen = seeds.clone();
        let mut queue: VecDeque<StateId> = seeds.iter().collect();
        while let Some(y) = queue.pop_front() {
            for &x in &preds[y.0] {
                if !blocked.contains(x) && seen.insert(x) {
                    queue.push_back(x);
                }
            }
        }
        seen
    }

    /// Same chain with every probability converted.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Chain<U> {
        Chain {
            labels: self.labels.clone(),
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|(y, p)| (*y, f(p))).collect())
                .collect(),
        }
    }

    /// Renders a set as `{a,b,c}` using state labels.
    pub fn format_set(&self, set: &StateSet) -> String {
        let names: Vec<&str> = set.iter().map(|s| self.label(s)).collect();
        format!("{{{}}}", names.join(","))
    }
}

impl MarkovChain {
    /// Approximate copy for sampling or float solves.
    pub fn to_f64(&self) -> Chain<f64> {
        self.map_scalar(Scalar::to_f64_lossy)
    }
}

/// Build and check an exact chain from `(from, to, probability)` triples.
///
/// Without a declared state list, labels are indexed in order of first
/// appearance (source before destination within a triple).
pub fn validate_chain<S: AsRef<str>>(
    states: Option<&[String]>,
    raw: &[(S, S, S)],
) -> Result<MarkovChain, ChainError> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    if let Some(states) = states {
        for s in states {
            if s.is_empty() {
                return Err(ChainError::EmptyLabel);
            }
            if index.insert(s.clone(), labels.len()).is_some() {
                return Err(ChainError::DuplicateLabel(s.clone()));
            }
            labels.push(s.clone());
        }
    }
    let declared = states.is_some();
    let mut intern = |label: &str, labels: &mut Vec<String>| -> Result<usize, ChainError> {
        if label.is_empty() {
            return Err(ChainError::EmptyLabel);
        }
        if let Some(&i) = index.get(label) {
            return Ok(i);
        }
        if declared {
            return Err(ChainError::UnknownState(label.to_string()));
        }
        index.insert(label.to_string(), labels.len());
        labels.push(label.to_string());
        Ok(labels.len() - 1)
    };

    let mut edges = Vec::with_capacity(raw.len());
    let mut seen_edges = HashSet::new();
    for (from, to, p) in raw {
        let (from, to) = (from.as_ref(), to.as_ref());
        let x = intern(from, &mut labels)?;
        let y = intern(to, &mut labels)?;
        if !seen_edges.insert((x, y)) {
            return Err(ChainError::DuplicateEdge {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        let value = parse_rational(p.as_ref())?;
        edges.push((x, y, value));
    }
    if labels.is_empty() {
        return Err(ChainError::EmptyChain);
    }
    let mut rows: Vec<Vec<(StateId, Rational)>> = vec![Vec::new(); labels.len()];
    for (x, y, p) in edges {
        rows[x].push((StateId(y), p));
    }
    Chain::new(labels, rows)
}

/// On-disk chain description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    pub transitions: Vec<(String, String, serde_json::Value)>,
}

pub fn parse_chain_json(text: &str) -> Result<MarkovChain, ChainError> {
    let file: ChainFile =
        serde_json::from_str(text).map_err(|e| ChainError::Format(e.to_string()))?;
    let mut raw = Vec::with_capacity(file.transitions.len());
    for (from, to, p) in file.transitions {
        let p = match p {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
            serde_json::Value::Number(n) => {
                return Err(RationalParseError::FloatingPointLiteral(n.to_string()).into())
            }
            other => return Err(RationalParseError::Malformed(other.to_string()).into()),
        };
        raw.push((from, to, p));
    }
    validate_chain(file.states.as_deref(), &raw)
}

pub fn render_chain_json(chain: &MarkovChain) -> String {
    let transitions = chain
        .state_ids()
        .flat_map(|x| {
            chain.row(x).iter().map(move |(y, p)| {
                (
                    chain.label(x).to_string(),
                    chain.label(*y).to_string(),
                    serde_json::Value::String(render_rational(p)),
                )
            })
        })
        .collect();
    let file = ChainFile {
        states: Some(chain.labels().to_vec()),
        transitions,
    };
    serde_json::to_string_pretty(&file).expect("chain serializes")
}
