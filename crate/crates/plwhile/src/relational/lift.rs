//! Relational lifting of a predicate to a pair of distributions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::VecDeque;

use crate::dist::{Dist, Rational};

/// Whether some coupling of `d1` and `d2` is supported on `rel`.
///
/// Both sides must have equal mass. The check is a max-flow over the
/// bipartite support graph with weights scaled to integers.
pub fn lift_check<A, B, F>(d1: &Dist<A>, d2: &Dist<B>, mut rel: F) -> bool
where
    A: Ord + Clone,
    B: Ord + Clone,
    F: FnMut(&A, &B) -> bool,
{
    if d1.mass() != d2.mass() {
        return false;
    }
    if d1.is_empty() {
        return true;
    }
    let lefts: Vec<(&A, &Rational)> = d1.iter().collect();
    let rights: Vec<(&B, &Rational)> = d2.iter().collect();
    let mut den = BigInt::one();
    for w in lefts.iter().map(|(_, w)| *w).chain(rights.iter().map(|(_, w)| *w)) {
        den = den.lcm(w.denom());
    }
    let scale = |w: &Rational| (w * Rational::from_integer(den.clone())).to_integer();
    let total = scale(&d1.mass());

    let n1 = lefts.len();
    let n2 = rights.len();
    let n = n1 + n2 + 2;
    let (s, t) = (0, n - 1);
    let mut cap = vec![vec![BigInt::zero(); n]; n];
    for (i, (_, w)) in lefts.iter().enumerate() {
        cap[s][1 + i] = scale(w);
    }
    for (j, (_, w)) in rights.iter().enumerate() {
        cap[1 + n1 + j][t] = scale(w);
    }
    for (i, (a, _)) in lefts.iter().enumerate() {
        for (j, (b, _)) in rights.iter().enumerate() {
            if rel(a, b) {
                cap[1 + i][1 + n1 + j] = total.clone();
            }
        }
    }
    max_flow(&mut cap, s, t) == total
}

/// Edmonds-Karp on an adjacency matrix of residual capacities.
fn max_flow(cap: &mut [Vec<BigInt>], s: usize, t: usize) -> BigInt {
    let n = cap.len();
    let mut flow = BigInt::zero();
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > BigInt::zero() {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut bottleneck: Option<BigInt> = None;
        let mut v = t;
        while v != s {
            let u = prev[v];
            bottleneck = Some(match bottleneck {
                Some(b) if b <= cap[u][v] => b,
                _ => cap[u][v].clone(),
            });
            v = u;
        }
        let b = bottleneck.expect("path has an edge");
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u][v] -= &b;
            cap[v][u] += &b;
            v = u;
        }
        flow += b;
    }
}
