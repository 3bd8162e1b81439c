//! Reference chains used by the tests, the acceptance suite and the README.

use num_traits::One;
use rand::Rng;

use crate::chain::validate_chain;
use crate::rational::render_rational;
use crate::state_set::StateId;
use crate::{Chain, MarkovChain, Rational};

/// Seven states, not irreducible: covering is possible from `x` only.
///
/// `x -> a -> b` deterministically, `b` splits evenly to `c` and `d`,
/// `c` returns to `b` or moves to `e`, `d -> e`, `e` splits evenly to `c`
/// and `f`, and `f` moves back to `e` w.p. 1/3 and stays w.p. 2/3.
pub fn entry_funnel() -> MarkovChain {
    validate_chain(
        None,
        &[
            ("x", "a", "1"),
            ("a", "b", "1"),
            ("b", "c", "1/2"),
            ("b", "d", "1/2"),
            ("c", "b", "1/2"),
            ("c", "e", "1/2"),
            ("d", "e", "1"),
            ("e", "c", "1/2"),
            ("e", "f", "1/2"),
            ("f", "e", "1/3"),
            ("f", "f", "2/3"),
        ],
    )
    .expect("entry funnel chain is stochastic")
}

/// Three states: `1 -> 2` surely, `2 -> 1 | 3` and `3 -> 1 | 2` evenly.
pub fn triangle() -> MarkovChain {
    validate_chain(
        None,
        &[
            ("1", "2", "1"),
            ("2", "1", "1/2"),
            ("2", "3", "1/2"),
            ("3", "1", "1/2"),
            ("3", "2", "1/2"),
        ],
    )
    .expect("triangle chain is stochastic")
}

/// Two states that swap w.p. `1/r`; the cover time from either state is `r`.
///
/// Panics unless `r >= 1`.
pub fn two_state(r: &Rational) -> MarkovChain {
    assert!(*r >= Rational::one(), "r must be at least 1");
    let flip = r.recip();
    let stay = Rational::one() - &flip;
    let (flip, stay) = (render_rational(&flip), render_rational(&stay));
    validate_chain(
        Some(&["1".to_string(), "2".to_string()]),
        &[
            ("1", "1", stay.as_str()),
            ("1", "2", flip.as_str()),
            ("2", "1", flip.as_str()),
            ("2", "2", stay.as_str()),
        ],
    )
    .expect("two-state chain is stochastic")
}

/// Deterministic cycle `1 -> 2 -> 3 -> 1`.
pub fn three_cycle() -> MarkovChain {
    validate_chain(None, &[("1", "2", "1"), ("2", "3", "1"), ("3", "1", "1")])
        .expect("cycle is stochastic")
}

pub fn single_state() -> MarkovChain {
    validate_chain(None, &[("s", "s", "1")]).expect("self-loop is stochastic")
}

/// Random irreducible chain on `n` states with small-denominator rationals.
///
/// A Hamiltonian cycle `0 -> 1 -> ... -> 0` guarantees irreducibility;
/// each other edge is present with probability `density`. Weights are
/// integers in `1..=max_weight` normalized per row.
pub fn random_irreducible<R: Rng>(
    rng: &mut R,
    n: usize,
    density: f64,
    max_weight: u64,
) -> MarkovChain {
    assert!(n >= 1);
    let rows = (0..n)
        .map(|x| {
            let mut weights: Vec<(usize, u64)> = (0..n)
                .filter_map(|y| {
                    let forced = y == (x + 1) % n;
                    (forced || rng.random_bool(density))
                        .then(|| (y, rng.random_range(1..=max_weight)))
                })
                .collect();
            weights.sort();
            let total: u64 = weights.iter().map(|(_, w)| w).sum();
            weights
                .into_iter()
                .map(|(y, w)| (StateId(y), Rational::new(w.into(), total.into())))
                .collect()
        })
        .collect();
    let labels = (1..=n).map(|i| i.to_string()).collect();
    Chain::new(labels, rows).expect("random rows are stochastic")
}
