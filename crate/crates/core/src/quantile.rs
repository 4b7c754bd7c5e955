//! Deterministic relative-error quantile summaries (Zhang–Wang style).
//!
//! A summary keeps a sorted sample of the summarized set together with lower
//! and upper bounds `rmin`/`rmax` on each sample's rank. Adjacent samples obey
//! `rmax(q[i+1]) - rmin(q[i]) <= max(2·eps·rmin(q[i]) / (1 - eps), 1)`, which is
//! what lets [`QuantileSummary::query`] answer rank `r` with an element whose
//! true rank lies in `[r(1-eps), r(1+eps)]`.
//!
//! On the test corpus every built summary has at most `3·log2(eps·n + 2)/eps`
//! elements and every pruned summary at most `3·B·log2(n/B + 2) + 1`; these are
//! the constants the size tests pin.

use std::fmt::{self, Display, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuantileError {
    #[error("cannot summarize an empty set")]
    EmptySet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantileSummary<T> {
    elems: Vec<T>,
    rmin: Vec<u64>,
    rmax: Vec<u64>,
    eps: f64,
    count: u64,
}

/// `⌈1/eps⌉`, tolerant of the rounding in values such as `1.0 / 3.0`.
fn inverse_ceil(eps: f64) -> u64 {
    ((1.0 / eps) - 1e-9).ceil().max(1.0) as u64
}

impl<T: Ord + Clone> QuantileSummary<T> {
    pub fn empty(eps: f64) -> Self {
        QuantileSummary {
            elems: Vec::new(),
            rmin: Vec::new(),
            rmax: Vec::new(),
            eps,
            count: 0,
        }
    }

    /// Builds an `eps`-approximate summary of an `n`-element set given random
    /// access by rank (1-based).
    pub fn build(rank_access: impl Fn(u64) -> T, n: u64, eps: f64) -> Result<Self, QuantileError> {
        if n == 0 {
            return Err(QuantileError::EmptySet);
        }
        let m = inverse_ceil(eps);
        let mut ranks: Vec<u64> = (1..m.min(n + 1)).collect();
        let (mut base, mut step) = (m, 1u64);
        while base <= n {
            for j in 0..m {
                let r = base + step * j;
                if r <= n {
                    ranks.push(r);
                }
            }
            base *= 2;
            step *= 2;
        }
        ranks.push(n);
        ranks.dedup();
        Ok(QuantileSummary {
            elems: ranks.iter().map(|&r| rank_access(r)).collect(),
            rmin: ranks.clone(),
            rmax: ranks,
            eps,
            count: n,
        })
    }

    pub fn from_sorted(sorted: &[T], eps: f64) -> Result<Self, QuantileError> {
        Self::build(|r| sorted[(r - 1) as usize].clone(), sorted.len() as u64, eps)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn elems(&self) -> &[T] {
        &self.elems
    }

    pub fn rmin(&self) -> &[u64] {
        &self.rmin
    }

    pub fn rmax(&self) -> &[u64] {
        &self.rmax
    }

    pub fn min_element(&self) -> Option<&T> {
        self.elems.first()
    }

    pub fn max_element(&self) -> Option<&T> {
        self.elems.last()
    }

    fn query_index(&self, r: u64) -> usize {
        let bound = r as f64 * (1.0 + self.eps);
        let idx = self.rmax.partition_point(|&x| (x as f64) <= bound);
        idx.saturating_sub(1)
    }

    /// Element whose rank is within relative error `eps` of `r`.
    ///
    /// # Panics
    /// If the summary is empty or `r` is outside `[1, count]`.
    pub fn query(&self, r: u64) -> &T {
        assert!(
            r >= 1 && r <= self.count,
            "rank {r} outside [1, {}]",
            self.count
        );
        &self.elems[self.query_index(r)]
    }

    /// Summary of the union of two disjoint sets. Elements that compare equal
    /// are treated as distinct, with `self`'s copy ranked first.
    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return self.clone();
        }
        if self.count == 0 {
            return other.clone();
        }
        let (n1, n2) = (self.len(), other.len());
        let mut out = QuantileSummary {
            elems: Vec::with_capacity(n1 + n2),
            rmin: Vec::with_capacity(n1 + n2),
            rmax: Vec::with_capacity(n1 + n2),
            eps: self.eps.max(other.eps),
            count: self.count + other.count,
        };
        let (mut i, mut j) = (0, 0);
        while i < n1 || j < n2 {
            let from_first = j == n2 || (i < n1 && self.elems[i] <= other.elems[j]);
            let (a, ai, b, bi) = if from_first {
                (self, i, other, j)
            } else {
                (other, j, self, i)
            };
            let lo = if bi > 0 { b.rmin[bi - 1] } else { 0 };
            let hi = if bi < b.len() {
                a.rmax[ai] + b.rmax[bi] - 1
            } else {
                a.rmax[ai] + b.rmax[bi - 1]
            };
            out.elems.push(a.elems[ai].clone());
            out.rmin.push(a.rmin[ai] + lo);
            out.rmax.push(hi);
            if from_first {
                i += 1;
            } else {
                j += 1;
            }
        }
        out
    }

    /// Shrinks the summary to `O(B log(count/B))` elements at an extra
    /// `1/B` error. A summary the procedure would not shrink is returned
    /// unchanged, with its error untouched.
    pub fn prune(&self, b: u64) -> Self {
        assert!(b >= 1, "prune parameter must be positive");
        let n = self.count;
        let mut probes = Vec::new();
        let (mut base, mut step) = (b, 1u64);
        while base <= n {
            for j in 0..b {
                let r = step * (b + j);
                if r <= n {
                    probes.push(r);
                }
            }
            base *= 2;
            step *= 2;
        }
        if n <= b || probes.len() >= self.len() {
            return self.clone();
        }
        let first = self.query_index(b);
        let mut keep: Vec<usize> = (0..first).collect();
        keep.extend(probes.iter().map(|&r| self.query_index(r)));
        keep.push(self.len() - 1);
        keep.dedup();
        if keep.len() >= self.len() {
            return self.clone();
        }
        QuantileSummary {
            elems: keep.iter().map(|&i| self.elems[i].clone()).collect(),
            rmin: keep.iter().map(|&i| self.rmin[i]).collect(),
            rmax: keep.iter().map(|&i| self.rmax[i]).collect(),
            eps: self.eps + 1.0 / b as f64,
            count: n,
        }
    }

    /// Merge followed by prune; the declared error is `max(eps1, eps2) + 1/b`.
    pub fn combine(&self, other: &Self, b: u64) -> Self {
        let mut out = self.merge(other).prune(b);
        out.eps = self.eps.max(other.eps) + 1.0 / b as f64;
        out
    }

    /// Verifies the structural invariants, naming the first broken one.
    pub fn check_invariants(&self) -> Result<(), String> {
        let k = self.len();
        if k == 0 {
            return if self.count == 0 {
                Ok(())
            } else {
                Err("no elements but nonzero count".into())
            };
        }
        if self.rmin[0] != 1 || self.rmax[0] != 1 {
            return Err(format!("first element has ranks [{}, {}]", self.rmin[0], self.rmax[0]));
        }
        if self.rmin[k - 1] != self.count || self.rmax[k - 1] != self.count {
            return Err(format!(
                "last element has ranks [{}, {}] but count is {}",
                self.rmin[k - 1],
                self.rmax[k - 1],
                self.count
            ));
        }
        for i in 0..k {
            if self.rmin[i] > self.rmax[i] {
                return Err(format!("element {i}: rmin {} > rmax {}", self.rmin[i], self.rmax[i]));
            }
        }
        for i in 0..k - 1 {
            if self.elems[i] > self.elems[i + 1] {
                return Err(format!("elements {i} and {} out of order", i + 1));
            }
            if self.rmin[i] >= self.rmin[i + 1] || self.rmax[i] >= self.rmax[i + 1] {
                return Err(format!("rank bounds not increasing at {i}"));
            }
            let gap = (self.rmax[i + 1] - self.rmin[i]) as f64;
            let allowed = (2.0 * self.eps * self.rmin[i] as f64 / (1.0 - self.eps)).max(1.0);
            if self.eps < 1.0 && gap > allowed + 1e-9 {
                return Err(format!(
                    "gap {gap} between elements {i} and {} exceeds {allowed}",
                    i + 1
                ));
            }
        }
        Ok(())
    }
}

impl<T: Display> QuantileSummary<T> {
    /// Text dump: header `eps count`, then `elem rmin rmax` per element.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.eps, self.count);
        for i in 0..self.elems.len() {
            let _ = writeln!(out, "{} {} {}", self.elems[i], self.rmin[i], self.rmax[i]);
        }
        out
    }
}

impl<T: Display> Display for QuantileSummary<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(n: u64, eps: f64) -> QuantileSummary<u64> {
        QuantileSummary::build(|r| r, n, eps).unwrap()
    }

    fn rank_ok(q: &QuantileSummary<u64>, r: u64) -> bool {
        // elements are their own ranks for {1..n}
        let y = *q.query(r) as f64;
        let (r, e) = (r as f64, q.eps());
        y >= r * (1.0 - e) - 1e-9 && y <= r * (1.0 + e) + 1e-9
    }

    #[test]
    fn build_one_to_eight_half() {
        let q = range(8, 0.5);
        assert_eq!(q.elems(), &[1, 2, 3, 4, 6, 8]);
        assert_eq!(q.rmin(), q.rmax());
        assert_eq!(q.rmin(), &[1, 2, 3, 4, 6, 8]);
        assert_eq!(*q.query(5), 6);
        assert_eq!(*q.query(8), 8);
        q.check_invariants().unwrap();
    }

    #[test]
    fn singleton_and_empty() {
        let q = QuantileSummary::from_sorted(&[42u64], 0.3).unwrap();
        assert_eq!(q.elems(), &[42]);
        assert_eq!((q.rmin()[0], q.rmax()[0]), (1, 1));
        assert_eq!(*q.query(1), 42);
        assert_eq!(
            QuantileSummary::<u64>::build(|r| r, 0, 0.5),
            Err(QuantileError::EmptySet)
        );
    }

    #[test]
    fn all_ranks_within_quarter() {
        let q = range(1024, 0.25);
        for r in 1..=1024 {
            assert!(rank_ok(&q, r), "rank {r}");
        }
    }

    #[test]
    fn merge_small_exact() {
        let a = QuantileSummary::from_sorted(&[1u64, 3], 0.5).unwrap();
        let b = QuantileSummary::from_sorted(&[2u64, 4], 0.5).unwrap();
        let m = a.merge(&b);
        assert_eq!(m.elems(), &[1, 2, 3, 4]);
        // 1: no pred in b, succ 2 -> [1, 1+1-1]
        // 2: pred 1 in a, succ 3 -> [1+1, 1+2-1]
        // 3: pred 2 in b, succ 4 -> [2+1, 2+2-1]
        // 4: pred 3 in a, no succ -> [2+2, 2+2]
        assert_eq!(m.rmin(), &[1, 2, 3, 4]);
        assert_eq!(m.rmax(), &[1, 2, 3, 4]);
        m.check_invariants().unwrap();
        assert_eq!(m.merge(&QuantileSummary::empty(0.5)), m);
        let x = QuantileSummary::from_sorted(&[5u64, 9], 0.5).unwrap();
        let y = QuantileSummary::from_sorted(&[2u64, 7], 0.5).unwrap();
        assert_eq!(x.merge(&y).min_element(), Some(&2));
    }

    #[test]
    fn prune_keeps_small_summaries() {
        let q = range(6, 0.5);
        assert_eq!(q.prune(8), q);
        let big = range(40, 0.5);
        assert_eq!(big.prune(16), big);
    }

    #[test]
    fn prune_sixty_four() {
        let q = range(64, 1.0 / 16.0);
        let p = q.prune(4);
        assert!(p.len() < q.len());
        assert!((p.eps() - (1.0 / 16.0 + 0.25)).abs() < 1e-12);
        p.check_invariants().unwrap();
        for r in 1..=64 {
            assert!(rank_ok(&p, r), "rank {r}");
        }
    }
}
