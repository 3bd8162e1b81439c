//! Independent oracles shared by the integration suites. None of these go
//! through the crate's linear solver or auxiliary-chain builder.

#![allow(dead_code)]

use markov_cover::{fixtures, MarkovChain, Rational, StateId, StateSet, WalkVector};
use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `Σ_{t ≤ horizon} t · P_x(τ_S = t)`, summing the probability of every
/// trajectory that first enters `targets` at time `t`. Trajectories are
/// aggregated by their current state, which sums exactly the same path
/// weights as listing them one by one.
pub fn enumeration_partial_sums(
    chain: &MarkovChain,
    targets: &StateSet,
    x: StateId,
    horizon: usize,
) -> Vec<Rational> {
    let n = chain.len();
    let mut sums = Vec::with_capacity(horizon + 1);
    let mut total = Rational::zero();
    if targets.contains(x) {
        return vec![Rational::zero(); horizon + 1];
    }
    let mut mass = vec![Rational::zero(); n];
    mass[x.0] = Rational::one();
    sums.push(total.clone());
    for t in 1..=horizon {
        let mut next = vec![Rational::zero(); n];
        let mut absorbed = Rational::zero();
        for (z, m) in mass.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (y, p) in chain.row(StateId(z)) {
                let w = m * p;
                if targets.contains(*y) {
                    absorbed += w;
                } else {
                    next[y.0] += w;
                }
            }
        }
        total += absorbed * Rational::from_integer(t.into());
        sums.push(total.clone());
        mass = next;
    }
    sums
}

/// Double-precision solve of the absorbing system `(I - Q) h = 1` over the
/// non-target states of `finite_set`.
pub fn float_hitting_times(
    chain: &MarkovChain,
    targets: &StateSet,
    finite_set: &StateSet,
) -> Vec<Option<f64>> {
    let transient: Vec<StateId> = finite_set
        .iter()
        .filter(|s| !targets.contains(*s))
        .collect();
    let m = transient.len();
    let mut out: Vec<Option<f64>> = vec![None; chain.len()];
    for s in targets.iter() {
        out[s.0] = Some(0.0);
    }
    if m == 0 {
        return out;
    }
    let pos = |s: StateId| transient.iter().position(|&t| t == s);
    let mut a = DMatrix::<f64>::identity(m, m);
    for (i, &x) in transient.iter().enumerate() {
        for (y, p) in chain.row(x) {
            if let Some(j) = pos(*y) {
                a[(i, j)] -= num_traits::ToPrimitive::to_f64(p).unwrap();
            }
        }
    }
    let h = a
        .lu()
        .solve(&DVector::from_element(m, 1.0))
        .expect("absorbing system is non-singular");
    for (i, &x) in transient.iter().enumerate() {
        out[x.0] = Some(h[i]);
    }
    out
}

/// Partial sums of `Σ_{t ≥ 1} t (1 - p)^{t-1} p`, the mean of a geometric
/// variable with success probability `p`.
pub fn geometric_partial_sum(p: &Rational, terms: usize) -> Rational {
    let fail = Rational::one() - p;
    let mut weight = p.clone();
    let mut total = Rational::zero();
    for t in 1..=terms {
        total += &weight * Rational::from_integer(t.into());
        weight *= &fail;
    }
    total
}

/// Deterministic random suite: 200 irreducible chains with 2–6 states paired
/// with k ∈ {1, 2} and random starts.
pub fn random_suite() -> Vec<(MarkovChain, usize, WalkVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    (0..200)
        .map(|i| {
            let n = 2 + i % 5;
            let k = 1 + (i / 5) % 2;
            let density = rng.random_range(0.2..0.8);
            let chain = fixtures::random_irreducible(&mut rng, n, density, 9);
            let start: Vec<StateId> = (0..k).map(|_| StateId(rng.random_range(0..n))).collect();
            (chain, k, WalkVector::new(start).unwrap())
        })
        .collect()
}

pub fn random_chain(seed: u64, n: usize) -> MarkovChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fixtures::random_irreducible(&mut rng, n, 0.5, 9)
}

/// Every nonempty subset of a state space of size `n`.
pub fn nonempty_subsets(n: usize) -> Vec<StateSet> {
    (1u32..(1 << n))
        .map(|mask| StateSet::from_ids(n, (0..n).filter(|i| mask >> i & 1 == 1).map(StateId)))
        .collect()
}
