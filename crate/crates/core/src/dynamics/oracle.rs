use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::word::{GroupWord, Letter};

/// Longest relator the oracle will search for.
pub const MAX_ORACLE_LEN: usize = 12;

/// Arithmetic the search runs in: checked `i128`, or exact big integers once
/// that overflows.
trait Scalar: Sized + Clone {
    fn mul(n: usize, a: &[Self], b: &[Self]) -> Option<Vec<Self>>;
    fn is_identity(n: usize, a: &[Self]) -> bool;
}

impl Scalar for i128 {
    fn mul(n: usize, a: &[i128], b: &[i128]) -> Option<Vec<i128>> {
        let mut out = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0i128;
                for t in 0..n {
                    s = s.checked_add(a[i * n + t].checked_mul(b[t * n + j])?)?;
                }
                out[i * n + j] = s;
            }
        }
        Some(out)
    }

    fn is_identity(n: usize, a: &[i128]) -> bool {
        a.iter().enumerate().all(|(idx, &x)| x == i128::from(idx / n == idx % n))
    }
}

impl Scalar for num_bigint::BigInt {
    fn mul(n: usize, a: &[Self], b: &[Self]) -> Option<Vec<Self>> {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push((0..n).map(|t| &a[i * n + t] * &b[t * n + j]).sum());
            }
        }
        Some(out)
    }

    fn is_identity(n: usize, a: &[Self]) -> bool {
        a.iter().enumerate().all(|(idx, x)| {
            let want: u8 = (idx / n == idx % n).into();
            *x == want.into()
        })
    }
}

struct Search<'a, T> {
    n: usize,
    gens: &'a [Vec<T>; 4],
    word: Vec<Letter>,
    overflowed: bool,
}

impl<T: Scalar> Search<'_, T> {
    /// Extends the reduced word in `self.word` with value `prefix` to length
    /// `target`; leaves must be cyclically reduced.
    fn dfs(&mut self, prefix: &[T], target: usize) -> bool {
        let last = *self.word.last().expect("search starts from a letter");
        if self.word.len() == target {
            return last != self.word[0].inverse() && T::is_identity(self.n, prefix);
        }
        for l in Letter::ALL {
            if l == last.inverse() {
                continue;
            }
            let Some(next) = T::mul(self.n, prefix, &self.gens[l.index()]) else {
                self.overflowed = true;
                return false;
            };
            self.word.push(l);
            if self.dfs(&next, target) {
                return true;
            }
            self.word.pop();
            if self.overflowed {
                return false;
            }
        }
        false
    }

    /// Relator of exactly length `len`, up to rotation and inversion.
    fn relator_of_len(&mut self, len: usize) -> Option<Vec<Letter>> {
        // a cyclically reduced relator containing a or A rotates (and maybe
        // inverts) to one starting with a; the rest are powers of b
        self.word = vec![Letter::G1];
        let start: &[T] = &self.gens[Letter::G1.index()];
        if self.dfs(start, len) {
            return Some(std::mem::take(&mut self.word));
        }
        if self.overflowed {
            return None;
        }
        let b = &self.gens[Letter::G2.index()];
        let mut acc = b.clone();
        for _ in 1..len {
            let Some(next) = T::mul(self.n, &acc, b) else {
                self.overflowed = true;
                return None;
            };
            acc = next;
        }
        T::is_identity(self.n, &acc).then(|| vec![Letter::G2; len])
    }
}

fn flat_i128(g: &IntMatrix) -> Option<Vec<i128>> {
    g.to_i128()
}

fn flat_big(g: &IntMatrix) -> Vec<num_bigint::BigInt> {
    g.entries().to_vec()
}

/// Shortest nonempty cyclically reduced word of length at most `max_len` that
/// evaluates to the identity at `(g1, g2)`, found by exact search over
/// increasing lengths. `None` is not a proof of freeness.
pub fn falsify_freeness(g1: &IntMatrix, g2: &IntMatrix, max_len: usize) -> Result<Option<GroupWord>> {
    if max_len > MAX_ORACLE_LEN {
        return Err(Error::Budget(format!(
            "oracle depth {max_len} exceeds {MAX_ORACLE_LEN}"
        )));
    }
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    let mats = [g1.clone(), g1.inverse()?, g2.clone(), g2.inverse()?];
    let n = g1.dim();

    let small: Option<Vec<Vec<i128>>> = mats.iter().map(flat_i128).collect();
    for len in 1..=max_len {
        let found = match &small {
            Some(v) => {
                let gens: [Vec<i128>; 4] = v.clone().try_into().expect("four generators");
                let mut s = Search { n, gens: &gens, word: Vec::new(), overflowed: false };
                let hit = s.relator_of_len(len);
                if s.overflowed {
                    big_search(n, &mats, len)
                } else {
                    hit
                }
            }
            None => big_search(n, &mats, len),
        };
        if let Some(letters) = found {
            return Ok(Some(GroupWord::new(letters)));
        }
    }
    Ok(None)
}

fn big_search(n: usize, mats: &[IntMatrix; 4], len: usize) -> Option<Vec<Letter>> {
    let gens: [Vec<num_bigint::BigInt>; 4] = [0, 1, 2, 3].map(|i| flat_big(&mats[i]));
    let mut s = Search { n, gens: &gens, word: Vec::new(), overflowed: false };
    s.relator_of_len(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn equal_generators() {
        let g = m(&[&[2, 1], &[1, 1]]);
        let w = falsify_freeness(&g, &g, 4).unwrap().unwrap();
        assert_eq!(w.to_string(), "aB");
    }

    #[test]
    fn rotation_has_order_four() {
        let w = falsify_freeness(&m(&[&[0, -1], &[1, 0]]), &m(&[&[1, 1], &[0, 1]]), 6)
            .unwrap()
            .unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.evaluate(&m(&[&[0, -1], &[1, 0]]), &m(&[&[1, 1], &[0, 1]])).unwrap().is_identity());
        // only powers of b relate when a is hyperbolic and b has order 3
        let w = falsify_freeness(&m(&[&[2, 1], &[1, 1]]), &m(&[&[0, -1], &[1, -1]]), 5)
            .unwrap()
            .unwrap();
        assert_eq!(w.to_string(), "bbb");
    }

    #[test]
    fn sanov_pair_survives() {
        let hit = falsify_freeness(&m(&[&[1, 2], &[0, 1]]), &m(&[&[1, 0], &[2, 1]]), 12).unwrap();
        assert!(hit.is_none());
    }

    #[test]
    fn commuting_pair() {
        let g = m(&[&[2, 1], &[1, 1]]);
        let w = falsify_freeness(&g, &g.pow(2), 6).unwrap().unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.evaluate(&g, &g.pow(2)).unwrap().is_identity());
    }

    #[test]
    fn big_entries_fall_back_to_exact() {
        // entries near 2^62 overflow i128 after three letters
        let g = m(&[&[2, 1], &[1, 1]]).pow(44);
        assert!(g.to_i64().is_some());
        let w = falsify_freeness(&g, &g.inverse().unwrap(), 3).unwrap().unwrap();
        assert_eq!(w.to_string(), "ab");
        assert!(falsify_freeness(&g, &m(&[&[1, 0], &[3, 1]]), 3).unwrap().is_none());
    }

    #[test]
    fn depth_budget() {
        let g = IntMatrix::identity(2);
        assert!(matches!(falsify_freeness(&g, &g, 13), Err(Error::Budget(_))));
        assert!(falsify_freeness(&g, &IntMatrix::identity(3), 2).is_err());
    }
}
