//! Exact expected hitting times and k-walk cover times of finite Markov
//! chains with rational transition probabilities.
//!
//! Covering a chain with `k` independent walks is recast as hitting the
//! covering layer of an auxiliary chain on (positions, visited set) pairs; the
//! hitting time then solves a sparse linear system that is checked to be
//! weakly chained diagonally dominant and solved over the rationals. A seeded
//! Monte Carlo simulator cross-checks the exact answers.
//!
//! The numeric code is generic over [`Scalar`]; the aliases below fix the
//! exact rational instantiation used for every result of record.
//!
//! ```
//! use markov_cover::{cover_time, fixtures, Rational, StateId, WalkVector};
//!
//! let chain = fixtures::two_state(&Rational::from_integer(2.into()));
//! let start = WalkVector::new(vec![StateId(0), StateId(0)]).unwrap();
//! let t = cover_time(&chain, 2, &start).unwrap();
//! assert_eq!(t.finite().unwrap(), Rational::new(4.into(), 3.into()));
//! ```

pub mod aux;
pub mod chain;
pub mod cli;
pub mod fixtures;
pub mod hitting;
pub mod linalg;
pub mod rational;
pub mod scalar;
pub mod simulate;
pub mod state_set;

pub use aux::{
    aux_cover_time, build_aux_chain, build_aux_chain_with_budget, cover_time,
    cover_time_with_budget, export_dot, AuxError, AuxState, AuxiliaryChain, CoverTime, WalkVector,
    DEFAULT_STATE_BUDGET,
};
pub use chain::{parse_chain_json, render_chain_json, validate_chain, Chain, ChainError};
pub use hitting::{
    finite_hitting_set, hitting_times, HittingError, HittingSolution, HittingSystem,
};
pub use linalg::{is_wcdd, residual, solve_linear, DenseVector, LinalgError, SparseMatrix};
pub use rational::{parse_rational, render_decimal, render_rational, RationalParseError};
pub use scalar::Scalar;
pub use simulate::{
    coupled_trajectories, simulate_cover, simulate_hitting, CoupledRun, SimConfig, SimError,
    SimSummary,
};
pub use state_set::{StateId, StateSet};

/// Arbitrary-precision rational; every probability and expected time.
pub type Rational = num_rational::BigRational;
pub type MarkovChain = Chain<Rational>;
pub type RationalMatrix = SparseMatrix<Rational>;
pub type RationalVector = DenseVector<Rational>;
pub type AuxChain = AuxiliaryChain<Rational>;
pub type RationalHitting = HittingSolution<Rational>;
