//! Prefix-tree enumeration of word products and streaming log-sum-exp.
//!
//! The tree is split at a fixed prefix depth; subtrees are walked in parallel
//! and their accumulators merged in lexicographic order, so results do not
//! depend on the number of threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matfam::{Matrix, MatrixFamily};

/// Default ceiling on the number of leaf words visited.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Streaming `log Σ exp(x_i)` with a running maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
    }

    /// The accumulated value; `-∞` when nothing finite was added.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl FromIterator<f64> for LogSumExp {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSumExp::new();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// `ℓⁿ` as an exact integer.
pub fn word_count(ell: usize, n: usize) -> u128 {
    (ell as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Fails with [`Error::BudgetExceeded`] when `ℓⁿ` exceeds `budget`.
pub fn check_budget(ell: usize, n: usize, budget: u64) -> Result<()> {
    let requested = word_count(ell, n);
    if requested > budget as u128 {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    Ok(())
}

/// A node of the word tree handed to visitors.
pub struct Node<'a> {
    /// Zero-based symbols of the word, length ≥ 1.
    pub word: &'a [usize],
    /// The product `M_{j_1} ⋯ M_{j_m}`.
    pub product: &'a Matrix,
}

/// Smallest prefix depth giving at least 64 independent subtrees.
fn split_depth(ell: usize, depth: usize) -> usize {
    let mut p = 0;
    let mut count = 1usize;
    while p < depth && count < 64 {
        count = count.saturating_mul(ell);
        p += 1;
    }
    p
}

fn dfs<T, V>(family: &MatrixFamily, depth: usize, word: &mut Vec<usize>, product: &Matrix, acc: &mut T, visit: &V)
where
    V: Fn(&mut T, Node<'_>) -> bool,
{
    let descend = visit(acc, Node { word, product });
    if !descend || word.len() == depth {
        return;
    }
    for (i, m) in family.matrices().iter().enumerate() {
        let next = product.mul(m);
        word.push(i);
        dfs(family, depth, word, &next, acc, visit);
        word.pop();
    }
}

/// Visits every word of length `1..=depth` in lexicographic depth-first order.
///
/// `visit` returns whether to descend into the node's children. Nodes at or
/// above the split depth are visited sequentially into the first accumulator;
/// each deeper subtree gets its own accumulator from `init`, and all are
/// combined left to right with `merge`.
pub fn fold_words<T, I, V, M>(family: &MatrixFamily, depth: usize, init: I, visit: V, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync,
    V: Fn(&mut T, Node<'_>) -> bool + Sync,
    M: Fn(T, T) -> T,
{
    let mut head = init();
    if depth == 0 {
        return head;
    }
    let split = split_depth(family.len(), depth);

    // Sequential walk of the top of the tree, collecting surviving frontier nodes.
    let mut frontier: Vec<(Vec<usize>, Matrix)> = Vec::new();
    let mut stack: Vec<(Vec<usize>, Matrix)> =
        family.matrices().iter().enumerate().rev().map(|(i, m)| (vec![i], m.clone())).collect();
    while let Some((word, product)) = stack.pop() {
        if word.len() == split {
            frontier.push((word, product));
            continue;
        }
        if !visit(&mut head, Node { word: &word, product: &product }) {
            continue;
        }
        for (i, m) in family.matrices().iter().enumerate().rev() {
            let mut w = word.clone();
            w.push(i);
            stack.push((w, product.mul(m)));
        }
    }

    let parts: Vec<T> = frontier
        .into_par_iter()
        .map(|(mut word, product)| {
            let mut acc = init();
            dfs(family, depth, &mut word, &product, &mut acc, &visit);
            acc
        })
        .collect();

    parts.into_iter().fold(head, merge)
}
