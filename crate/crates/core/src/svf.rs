//! The singular value function `φ^q(M) = α_1 ⋯ α_k α_{k+1}^{q−k}` (`k = ⌊q⌋`,
//! `q < d`), `φ^q(M) = |det M|^{q/d}` for `q ≥ d`, its pressure `P^φ(q)`,
//! and the affinity dimension `inf{s : P^φ(s) ≤ 0}` of a contracting family.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ergodic::{potential_levels, ShiftMeasure};
use crate::error::{Error, Result};
use crate::matfam::{is_negligible, Matrix, MatrixFamily, Norm, Word};
use crate::pressure::{periodic_depth, LowerRoute, PressureEstimate};
use crate::tree::{check_budget, fold_words, LogSumExp, DEFAULT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvfValue {
    pub q: f64,
    pub log_value: f64,
}

/// `log φ^q` from values sorted in decreasing order (singular values, or
/// eigenvalue moduli for the asymptotic version).
fn log_phi_sorted(values: &[f64], q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let d = values.len();
    if q >= d as f64 {
        return q / d as f64 * values.iter().map(|v| v.ln()).sum::<f64>();
    }
    let k = q.floor() as usize;
    let head: f64 = values[..k].iter().map(|v| v.ln()).sum();
    let frac = q - k as f64;
    if frac == 0.0 {
        head
    } else {
        head + frac * values[k].ln()
    }
}

/// Number of leading values `log φ^q` depends on.
fn used_values(d: usize, q: f64) -> usize {
    if q >= d as f64 {
        d
    } else {
        q.ceil() as usize
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::invalid(format!("q must be non-negative, got {q}")));
    }
    Ok(())
}

/// `log φ^q(M)`. Fails when the formula needs a numerically zero singular value.
pub fn phi(m: &Matrix, q: f64) -> Result<SvfValue> {
    check_q(q)?;
    if !m.is_square() {
        return Err(Error::invalid("φ^q needs a square matrix"));
    }
    let sv = m.singular_values();
    let used = used_values(sv.len(), q);
    if q > 0.0 && sv[..used].iter().any(|&s| is_negligible(s, sv[0])) {
        return Err(Error::invalid(format!("φ^{q} of a singular matrix is not defined here")));
    }
    Ok(SvfValue { q, log_value: log_phi_sorted(&sv, q) })
}

fn check_invertible(family: &MatrixFamily) -> Result<()> {
    for (i, m) in family.matrices().iter().enumerate() {
        let sv = m.singular_values();
        if is_negligible(sv[sv.len() - 1], sv[0]) {
            return Err(Error::invalid(format!("matrix {} is not invertible", i + 1)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExteriorCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `log ‖M^{∧q}‖` with `log φ^q(M)` for integer `1 ≤ q ≤ d`.
pub fn exterior_identity_check(m: &Matrix, q: usize) -> Result<ExteriorCheck> {
    if q == 0 || q > m.rows() {
        return Err(Error::invalid(format!("exterior degree {q} outside 1..={}", m.rows())));
    }
    let lhs = m.exterior_power(q)?.op_norm().ln();
    let rhs = log_phi_sorted(&m.singular_values(), q as f64);
    let gap = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
    Ok(ExteriorCheck { lhs, rhs, gap })
}

struct SvfAcc {
    levels: Vec<LogSumExp>,
    best: f64,
}

/// Bounds on `P^φ(q)` from words of length at most `n`.
///
/// The upper bound is `min_m b_m/m`. Lower bounds: for any word `J` of
/// length `m`, `P^φ(q) ≥ (1/m) lim_k (1/k) log φ^q(M_J^k)`, which by
/// Yamamoto's theorem is `log φ^q` evaluated on the eigenvalue moduli of
/// `M_J`; for `q ≥ d` and for conformal families `φ^q` is multiplicative and
/// the value is exact.
pub fn svf_pressure_bounds(family: &MatrixFamily, q: f64, n: usize) -> Result<PressureEstimate> {
    svf_pressure_bounds_with_budget(family, q, n, DEFAULT_BUDGET)
}

pub fn svf_pressure_bounds_with_budget(family: &MatrixFamily, q: f64, n: usize, budget: u64) -> Result<PressureEstimate> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    check_invertible(family)?;
    check_budget(family.len(), n, budget)?;
    let d = family.dim();
    let periodic_len = periodic_depth(family.len(), n, 1 << 16);
    let acc = fold_words(
        family,
        n,
        || SvfAcc { levels: vec![LogSumExp::new(); n], best: f64::NEG_INFINITY },
        |acc, node| {
            let m = node.word.len();
            acc.levels[m - 1].add(log_phi_sorted(&node.product.singular_values(), q));
            if m <= periodic_len {
                if let Ok(eig) = node.product.eigenvalues() {
                    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
                    moduli.sort_by(|a, b| b.total_cmp(a));
                    let used = used_values(d, q);
                    if q == 0.0 || moduli[..used].iter().all(|&x| x > 0.0) {
                        acc.best = acc.best.max(log_phi_sorted(&moduli, q) / m as f64);
                    }
                }
            }
            true
        },
        |mut a, b| {
            for (x, y) in a.levels.iter_mut().zip(&b.levels) {
                x.merge(y);
            }
            a.best = a.best.max(b.best);
            a
        },
    );
    let per_depth: Vec<(usize, f64)> = acc.levels.iter().enumerate().map(|(i, l)| (i + 1, l.value() / (i + 1) as f64)).collect();
    let upper = per_depth.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let mut est = PressureEstimate::minus_infinity(q, Norm::Operator, n, per_depth);
    est.upper = upper;
    est.offer_lower(LowerRoute::Periodic, acc.best, false);
    let exact_single = |f: &dyn Fn(&Matrix) -> f64| family.matrices().iter().map(f).collect::<LogSumExp>().value();
    if q >= d as f64 {
        let value = exact_single(&|m: &Matrix| log_phi_sorted(&m.singular_values(), q));
        est.offer_lower(LowerRoute::Determinant, value, false);
    } else if family.is_conformal() {
        let value = exact_single(&|m: &Matrix| q * m.op_norm().ln());
        est.offer_lower(LowerRoute::Conformal, value, false);
    }
    est.settle();
    Ok(est)
}

/// `(1/m) Σ_{|J|=m} μ([J]) log φ^q(M_J)` for `m = 1..=n`.
pub fn svf_energy_levels(family: &MatrixFamily, measure: &ShiftMeasure, q: f64, n: usize) -> Result<Vec<f64>> {
    check_q(q)?;
    check_invertible(family)?;
    potential_levels(family, measure, n, DEFAULT_BUDGET, |m| log_phi_sorted(&m.singular_values(), q))
}

/// The `q`-energy `φ^q_*(μ)` truncated at depth `n`.
pub fn svf_energy(family: &MatrixFamily, measure: &ShiftMeasure, q: f64, n: usize) -> Result<f64> {
    Ok(svf_energy_levels(family, measure, q, n)?[n - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinityStep {
    pub s: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinityResult {
    /// Largest tested `s` with a lower bound `P^φ(s) ≥ 0`.
    pub s_low: f64,
    /// Smallest tested `s` with an upper bound `P^φ(s) < 0`.
    pub s_high: f64,
    pub iterations: usize,
    pub at_low: PressureEstimate,
    pub at_high: PressureEstimate,
    /// Every evaluation in order.
    pub trace: Vec<AffinityStep>,
}

impl AffinityResult {
    pub fn width(&self) -> f64 {
        self.s_high - self.s_low
    }
}

const MAX_BISECTIONS: usize = 100;

/// Brackets the zero of `P^φ` for a family of invertible strict contractions.
///
/// `s_high` is certified by the upper bound; `s_low` is certified by the
/// lower-bound routes, so the bracket is wide wherever those are weak.
pub fn affinity_dimension(family: &MatrixFamily, tol: f64, n: usize) -> Result<AffinityResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    check_invertible(family)?;
    if let Some(i) = family.matrices().iter().position(|m| m.op_norm() >= 1.0) {
        return Err(Error::invalid(format!("matrix {} is not a strict contraction", i + 1)));
    }
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let eval = |s: f64, trace: &mut Vec<AffinityStep>| -> Result<PressureEstimate> {
        let est = svf_pressure_bounds(family, s, n)?;
        trace.push(AffinityStep { s, lower: est.lower, upper: est.upper });
        Ok(est)
    };

    // Grow the search interval past the upper-bound crossing.
    let mut hi = 2.0 * family.dim() as f64;
    let mut at_hi = eval(hi, &mut trace)?;
    let mut doublings = 0;
    while at_hi.upper >= 0.0 {
        doublings += 1;
        if doublings > 60 {
            return Err(Error::SearchFailure("upper bound on P^φ never becomes negative".into()));
        }
        hi *= 2.0;
        at_hi = eval(hi, &mut trace)?;
    }

    // Upper crossing: keep upper(a) ≥ 0 > upper(b).
    let (mut a, mut b) = (0.0, hi);
    let mut at_b = at_hi.clone();
    let half_tol = 0.5 * tol;
    while b - a > half_tol && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        let est = eval(mid, &mut trace)?;
        if est.upper < 0.0 {
            b = mid;
            at_b = est;
        } else {
            a = mid;
        }
        iterations += 1;
    }
    let s_high = b;

    // Lower crossing: keep lower(c) ≥ 0 > lower(e), searching below s_high.
    let (mut c, mut e) = (0.0, s_high);
    let mut at_c = eval(0.0, &mut trace)?;
    let at_e = eval(e, &mut trace)?;
    if at_e.lower >= 0.0 {
        c = e;
        at_c = at_e;
    }
    let mut steps = 0;
    while e - c > half_tol && steps < MAX_BISECTIONS {
        let mid = 0.5 * (c + e);
        let est = eval(mid, &mut trace)?;
        if est.lower >= 0.0 {
            c = mid;
            at_c = est;
        } else {
            e = mid;
        }
        steps += 1;
    }
    iterations += steps;
    Ok(AffinityResult { s_low: c, s_high, iterations, at_low: at_c, at_high: at_b, trace })
}

/// Largest `log φ^q(AB) − log φ^q(A) − log φ^q(B)` over random products `A`,
/// `B` of length at most 6 and random `q ∈ [0, d]`.
pub fn svf_submultiplicativity_check(family: &MatrixFamily, trials: usize, seed: u64) -> Result<f64> {
    check_invertible(family)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbol = Uniform::new(0, family.len());
    let length = Uniform::new_inclusive(1, 6);
    let q_dist = Uniform::new_inclusive(0.0, family.dim() as f64);
    let random_word = |rng: &mut ChaCha8Rng| {
        let len = length.sample(rng);
        Word::from_indices((0..len).map(|_| symbol.sample(rng)).collect()).expect("non-empty")
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a = family.word_product(&random_word(&mut rng))?;
        let b = family.word_product(&random_word(&mut rng))?;
        let q = q_dist.sample(&mut rng);
        let lhs = log_phi_sorted(&a.mul(&b).singular_values(), q);
        let rhs = log_phi_sorted(&a.singular_values(), q) + log_phi_sorted(&b.singular_values(), q);
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}
