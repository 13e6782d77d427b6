//! Permutation keys and the rank <-> permutation codec.
//!
//! Ranks are zero-based positions in lexicographic (ascending element index)
//! order, decoded through the factorial number system. Rank 0 is the
//! identity; the one-based "order" used in user-facing output is `rank + 1`.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Fenwick tree over `0..n` counting which values are still available.
struct Available {
    tree: Vec<usize>,
}

impl Available {
    fn full(n: usize) -> Self {
        let mut tree = vec![0; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Self { tree }
    }

    /// Number of available values strictly below `v`.
    fn count_below(&self, v: usize) -> usize {
        let mut i = v;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i &= i - 1;
        }
        sum
    }

    fn remove(&mut self, v: usize) {
        let mut i = v + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// The `k`-th (zero-based) smallest available value.
    fn select(&self, k: usize) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut remaining = k;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// A permutation of `0..n` together with its lexicographic rank.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationKey {
    perm: Vec<usize>,
    rank: BigUint,
}

impl PermutationKey {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            rank: BigUint::zero(),
        }
    }

    /// Validates `perm` as a bijection on `0..perm.len()` and computes its rank.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        validate_bijection(&perm)?;
        let digits = lehmer_code(&perm);
        let rank = rank_from_digits(&digits);
        Ok(Self { perm, rank })
    }

    /// Decodes the `rank`-th permutation of `0..n`.
    pub fn from_rank(rank: &BigUint, n: usize) -> Result<Self> {
        let digits = digits_from_rank(rank, n)?;
        Ok(Self {
            perm: perm_from_digits(&digits),
            rank: rank.clone(),
        })
    }

    /// Builds a key from its Lehmer code (`digits[i] < n - i`).
    pub fn from_lehmer(digits: &[usize]) -> Result<Self> {
        let n = digits.len();
        if let Some((i, &d)) = digits.iter().enumerate().find(|&(i, &d)| d >= n - i) {
            return Err(Error::InvalidParameter(format!(
                "Lehmer digit {i} is {d}, must be below {}",
                n - i
            )));
        }
        Ok(Self {
            perm: perm_from_digits(digits),
            rank: rank_from_digits(digits),
        })
    }

    /// Uniform key over all `n!` permutations, drawn digit by digit in the
    /// factorial number system (no rejection).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let digits: Vec<usize> = (0..n).map(|i| rng.random_range(0..n - i)).collect();
        Self {
            perm: perm_from_digits(&digits),
            rank: rank_from_digits(&digits),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Zero-based lexicographic rank.
    pub fn rank(&self) -> &BigUint {
        &self.rank
    }

    /// One-based permutation order (`rank + 1`).
    pub fn order(&self) -> BigUint {
        &self.rank + 1u32
    }

    pub fn is_identity(&self) -> bool {
        self.rank.is_zero()
    }

    pub fn lehmer_code(&self) -> Vec<usize> {
        lehmer_code(&self.perm)
    }

    /// Permutes a sequence: `out[m] = seq[perm[m]]`.
    pub fn apply<T: Copy>(&self, seq: &[T]) -> Vec<T> {
        assert_eq!(seq.len(), self.perm.len(), "sequence length must match key length");
        self.perm.iter().map(|&i| seq[i]).collect()
    }

    /// Number of positions where `self` and `other` agree.
    pub fn agreements(&self, other: &PermutationKey) -> usize {
        self.perm
            .iter()
            .zip(&other.perm)
            .filter(|(a, b)| a == b)
            .count()
    }
}

/// Decodes the `rank`-th permutation of `0..n` in lexicographic order.
pub fn rank_to_perm(rank: &BigUint, n: usize) -> Result<PermutationKey> {
    PermutationKey::from_rank(rank, n)
}

/// Lexicographic rank of a permutation of `0..perm.len()`.
pub fn perm_to_rank(perm: &[usize]) -> Result<BigUint> {
    validate_bijection(perm)?;
    Ok(rank_from_digits(&lehmer_code(perm)))
}

fn validate_bijection(perm: &[usize]) -> Result<()> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for (pos, &v) in perm.iter().enumerate() {
        if v >= n {
            return Err(Error::NotABijection {
                n,
                detail: format!("index {v} at position {pos} is out of range"),
            });
        }
        if seen[v] {
            let missing = seen.iter().position(|s| !s).unwrap_or(v);
            return Err(Error::NotABijection {
                n,
                detail: format!("index {v} is duplicated (position {pos}); index {missing} is missing"),
            });
        }
        seen[v] = true;
    }
    Ok(())
}

fn lehmer_code(perm: &[usize]) -> Vec<usize> {
    let mut avail = Available::full(perm.len());
    perm.iter()
        .map(|&v| {
            let d = avail.count_below(v);
            avail.remove(v);
            d
        })
        .collect()
}

fn perm_from_digits(digits: &[usize]) -> Vec<usize> {
    let mut avail = Available::full(digits.len());
    digits
        .iter()
        .map(|&d| {
            let v = avail.select(d);
            avail.remove(v);
            v
        })
        .collect()
}

/// Horner evaluation of `sum_i d_i (n-1-i)!`.
fn rank_from_digits(digits: &[usize]) -> BigUint {
    let n = digits.len();
    let mut rank = BigUint::zero();
    for (i, &d) in digits.iter().enumerate() {
        rank *= (n - i) as u64;
        rank += d as u64;
    }
    rank
}

fn digits_from_rank(rank: &BigUint, n: usize) -> Result<Vec<usize>> {
    // Cheap rejection in the log domain before the exact decode.
    let log2_fact: f64 = (2..=n).map(|k| (k as f64).log2()).sum();
    if rank.bits() as f64 > log2_fact.ceil() + 1.0 {
        return Err(out_of_range(n, log2_fact));
    }
    let mut r = rank.clone();
    let mut digits = vec![0; n];
    for base in 1..=n {
        let d = (&r % base as u64).to_usize().expect("digit fits in usize");
        digits[n - base] = d;
        r /= base as u64;
    }
    if !r.is_zero() {
        return Err(out_of_range(n, log2_fact));
    }
    Ok(digits)
}

fn out_of_range(n: usize, log2_fact: f64) -> Error {
    let bound = if n <= 30 {
        (1..=n as u64).product::<BigUint>().to_string()
    } else {
        format!("~1e{:.2}", log2_fact * std::f64::consts::LOG10_2)
    };
    Error::RankOutOfRange { n, bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn key(rank: u64, n: usize) -> Vec<usize> {
        rank_to_perm(&BigUint::from(rank), n).unwrap().perm().to_vec()
    }

    #[test]
    fn ascending_order_examples() {
        assert_eq!(key(0, 3), vec![0, 1, 2]);
        assert_eq!(key(1, 3), vec![0, 2, 1]);
        assert_eq!(key(2, 3), vec![1, 0, 2]);
        assert_eq!(key(5, 3), vec![2, 1, 0]);
    }

    #[test]
    fn rank_of_examples() {
        assert_eq!(perm_to_rank(&[0, 1, 2]).unwrap(), BigUint::zero());
        assert_eq!(perm_to_rank(&[1, 0, 2]).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn order_is_rank_plus_one() {
        let k = rank_to_perm(&BigUint::from(1u32), 3).unwrap();
        assert_eq!(k.order(), BigUint::from(2u32));
        assert!(PermutationKey::identity(5).is_identity());
    }

    #[test]
    fn out_of_range_rank_names_interval() {
        let err = rank_to_perm(&BigUint::from(6u32), 3).unwrap_err();
        assert!(err.to_string().contains("[0, 6)"), "{err}");
        // Huge rank is rejected by the log-domain pre-check.
        let huge = BigUint::from(1u32) << 4000usize;
        assert!(matches!(rank_to_perm(&huge, 64), Err(Error::RankOutOfRange { .. })));
        // Just past the end, rejected exactly.
        let fact64: BigUint = (1..=64u64).product();
        assert!(rank_to_perm(&fact64, 64).is_err());
        assert!(rank_to_perm(&(fact64 - 1u32), 64).is_ok());
    }

    #[test]
    fn non_bijections_rejected() {
        let e = perm_to_rank(&[0, 2, 2]).unwrap_err().to_string();
        assert!(e.contains("2 is duplicated") && e.contains("1 is missing"), "{e}");
        let e = perm_to_rank(&[0, 3, 1]).unwrap_err().to_string();
        assert!(e.contains("out of range"), "{e}");
    }

    #[test]
    fn exhaustive_round_trip_n4() {
        for r in 0..24u64 {
            let k = rank_to_perm(&BigUint::from(r), 4).unwrap();
            assert_eq!(perm_to_rank(k.perm()).unwrap(), BigUint::from(r));
        }
    }

    #[test]
    fn lehmer_digits_invalid() {
        assert!(PermutationKey::from_lehmer(&[3, 0, 0]).is_err());
        let k = PermutationKey::from_lehmer(&[1, 0, 0]).unwrap();
        assert_eq!(k.perm(), &[1, 0, 2]);
        assert_eq!(k.rank(), &BigUint::from(2u32));
    }

    #[test]
    fn large_n_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [64, 512, 4096, 5000] {
            let k = PermutationKey::random(n, &mut rng);
            let back = rank_to_perm(k.rank(), n).unwrap();
            assert_eq!(back.perm(), k.perm());
            assert_eq!(perm_to_rank(k.perm()).unwrap(), *k.rank());
        }
    }

    #[test]
    fn random_keys_are_uniform_n3() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0u32; 6];
        let draws = 60_000;
        for _ in 0..draws {
            let k = PermutationKey::random(3, &mut rng);
            counts[k.rank().to_usize().unwrap()] += 1;
        }
        let expected = draws as f64 / 6.0;
        let sigma = (expected * (5.0 / 6.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn rank_perm_round_trip(n in 1usize..40, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = PermutationKey::random(n, &mut rng);
            let again = PermutationKey::from_perm(k.perm().to_vec()).unwrap();
            prop_assert_eq!(again.rank(), k.rank());
            let decoded = rank_to_perm(k.rank(), n).unwrap();
            prop_assert_eq!(decoded.perm(), k.perm());
        }

        #[test]
        fn lexicographic_monotonicity(a in 0u64..5040, b in 0u64..5040) {
            prop_assume!(a < b);
            prop_assert!(key(a, 7) < key(b, 7));
        }
    }
}
