//! Deterministic post-processing strategies `v(a|x,λ)`.
//!
//! Strategy `λ` is read as an `m`-digit base-`o` number; digit `x` (setting 0
//! most significant) is the outcome assigned to setting `x`.

use crate::assemblage::WeightedAssemblage;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategySet {
    settings: usize,
    outcomes: usize,
    count: usize,
}

/// `o^m` as u128, saturating.
pub fn strategy_count(m: usize, o: usize) -> u128 {
    let mut n: u128 = 1;
    for _ in 0..m {
        n = n.saturating_mul(o as u128);
    }
    n
}

fn check_cap(required: u128, cap: u64) -> Result<usize> {
    if required > cap as u128 {
        return Err(Error::EnumerationOverflow { required, cap });
    }
    Ok(required as usize)
}

/// All `o^m` deterministic strategies, refusing more than `cap`.
pub fn enumerate(m: usize, o: usize, cap: u64) -> Result<DeterministicStrategySet> {
    if o == 0 {
        return Err(Error::InvalidArgument("zero outcomes".into()));
    }
    let count = check_cap(strategy_count(m, o), cap)?;
    Ok(DeterministicStrategySet { settings: m, outcomes: o, count })
}

impl DeterministicStrategySet {
    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Outcome assigned to setting `x` by strategy `lambda`.
    pub fn outcome(&self, lambda: usize, x: usize) -> usize {
        let shift = self.settings - 1 - x;
        (lambda / self.outcomes.pow(shift as u32)) % self.outcomes
    }

    /// The full assignment `x -> a`.
    pub fn decode(&self, lambda: usize) -> Vec<usize> {
        let mut out = vec![0; self.settings];
        let mut rest = lambda;
        for x in (0..self.settings).rev() {
            out[x] = rest % self.outcomes;
            rest /= self.outcomes;
        }
        out
    }

    pub fn encode(&self, assignment: &[usize]) -> usize {
        assignment.iter().fold(0, |acc, &a| acc * self.outcomes + a)
    }

    /// `v(a|x,λ)`.
    pub fn v(&self, a: usize, x: usize, lambda: usize) -> f64 {
        if self.outcome(lambda, x) == a {
            1.0
        } else {
            0.0
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.count).map(move |l| self.decode(l))
    }

    /// Strategies that assign outcome `a` to setting `x`.
    pub fn with_outcome(&self, x: usize, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.count).filter(move |&l| self.outcome(l, x) == a)
    }
}

/// Pairs `(λ_A, λ_B)`; combined index `λ = λ_A·count_B + λ_B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteStrategySet {
    pub alice: DeterministicStrategySet,
    pub bob: DeterministicStrategySet,
}

pub fn enumerate_bipartite(m_a: usize, o_a: usize, m_b: usize, o_b: usize, cap: u64) -> Result<BipartiteStrategySet> {
    let required = strategy_count(m_a, o_a).saturating_mul(strategy_count(m_b, o_b));
    check_cap(required, cap)?;
    Ok(BipartiteStrategySet { alice: enumerate(m_a, o_a, cap)?, bob: enumerate(m_b, o_b, cap)? })
}

impl BipartiteStrategySet {
    pub fn count(&self) -> usize {
        self.alice.count() * self.bob.count()
    }

    pub fn decode(&self, lambda: usize) -> (usize, usize) {
        (lambda / self.bob.count(), lambda % self.bob.count())
    }

    pub fn encode(&self, la: usize, lb: usize) -> usize {
        la * self.bob.count() + lb
    }
}

/// `Σ_{a,x} v(a|x,λ) M_{a|x}`.
pub fn strategy_matrix_sum(
    strategies: &DeterministicStrategySet,
    assemblage: &WeightedAssemblage,
    lambda: usize,
) -> Result<CMat> {
    if lambda >= strategies.count() {
        return Err(Error::IndexOutOfRange { index: lambda, len: strategies.count() });
    }
    if strategies.settings() != assemblage.settings() || strategies.outcomes() != assemblage.outcomes() {
        return Err(Error::ShapeMismatch("strategy set does not match assemblage".into()));
    }
    let mut s = linalg::zeros(assemblage.dim());
    for x in 0..assemblage.settings() {
        s += assemblage.effect(x, strategies.outcome(lambda, x));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{heisenberg_weyl_mub, Povm};

    #[test]
    fn lexicographic_order() {
        let s = enumerate(2, 2, 100).unwrap();
        let all: Vec<_> = s.iter().collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn counting_three_by_three() {
        let s = enumerate(3, 3, 100).unwrap();
        assert_eq!(s.count(), 27);
        for x in 0..3 {
            for a in 0..3 {
                assert_eq!(s.with_outcome(x, a).count(), 9);
            }
        }
    }

    #[test]
    fn overflow_guard() {
        match enumerate(20, 10, 1_000_000) {
            Err(Error::EnumerationOverflow { required, cap }) => {
                assert_eq!(required, 10u128.pow(20));
                assert_eq!(cap, 1_000_000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_sum_for_qubit_xz() {
        let a = heisenberg_weyl_mub(2, 2).unwrap();
        let s = enumerate(2, 2, 100).unwrap();
        let m = strategy_matrix_sum(&s, &a, 0).unwrap();
        let top = linalg::max_eigenvalue(&m);
        assert!((top - (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
        assert!(matches!(strategy_matrix_sum(&s, &a, 4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn matrix_sum_of_trivial_measurements() {
        let p = Povm::trivial(3, &[1.0]).unwrap();
        let a = WeightedAssemblage::uniform(vec![p.clone(), p.clone(), p]).unwrap();
        let s = enumerate(3, 1, 10).unwrap();
        let m = strategy_matrix_sum(&s, &a, 0).unwrap();
        assert!(linalg::max_abs_entry(&(m - linalg::scale(&linalg::identity(3), 3.0))) < 1e-14);
    }

    #[test]
    fn bipartite_round_trip() {
        let b = enumerate_bipartite(2, 3, 3, 2, 10_000).unwrap();
        assert_eq!(b.count(), 9 * 8);
        for l in 0..b.count() {
            let (la, lb) = b.decode(l);
            assert_eq!(b.encode(la, lb), l);
        }
    }
}
