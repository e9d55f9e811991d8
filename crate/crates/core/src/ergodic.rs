//! Shift-invariant measures on `{1, …, ℓ}^ℕ`, their entropy and Lyapunov
//! exponents `M_*(μ) = lim (1/n) Σ_{|J|=n} μ([J]) log ‖M_J‖`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decomp::BlockDecomposition;
use crate::error::{Error, Result};
use crate::matfam::{Matrix, MatrixFamily, Norm, Word};
use crate::pressure::PressureEstimate;
use crate::tree::{fold_words, DEFAULT_BUDGET};

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A σ-invariant probability measure.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftMeasure {
    /// Product measure with symbol weights `p_1, …, p_ℓ`.
    Bernoulli(Vec<f64>),
    /// The invariant measure on the orbit of `w^∞`: uniform over the
    /// `|w|` shifts of the periodic point.
    PeriodicDirac(Word),
    /// `Σ_i c_i μ_i` with positive weights summing to one.
    Mixture(Vec<(f64, ShiftMeasure)>),
}

fn check_weights(weights: &[f64], strictly_positive: bool) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::invalid("weights must be non-empty"));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0 || (strictly_positive && **w == 0.0)) {
        return Err(Error::invalid(format!("invalid weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::invalid(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

impl ShiftMeasure {
    pub fn bernoulli(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, false)?;
        Ok(ShiftMeasure::Bernoulli(weights))
    }

    pub fn periodic_dirac(word: Word) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::invalid("periodic word must be non-empty"));
        }
        Ok(ShiftMeasure::PeriodicDirac(word))
    }

    pub fn mixture(components: Vec<(f64, ShiftMeasure)>) -> Result<Self> {
        let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
        check_weights(&weights, true)?;
        Ok(ShiftMeasure::Mixture(components))
    }

    /// Checks that the measure lives on `ℓ` symbols.
    pub fn check_alphabet(&self, ell: usize) -> Result<()> {
        match self {
            ShiftMeasure::Bernoulli(p) if p.len() != ell => {
                Err(Error::invalid(format!("Bernoulli measure has {} weights, family has {ell} matrices", p.len())))
            }
            ShiftMeasure::Bernoulli(_) => Ok(()),
            ShiftMeasure::PeriodicDirac(w) => w.check_alphabet(ell),
            ShiftMeasure::Mixture(parts) => parts.iter().try_for_each(|(_, m)| m.check_alphabet(ell)),
        }
    }

    /// Trusts the kind tag: Bernoulli and periodic measures are ergodic,
    /// mixtures of two or more components are not.
    pub fn is_ergodic(&self) -> bool {
        match self {
            ShiftMeasure::Mixture(parts) => parts.len() == 1 && parts[0].1.is_ergodic(),
            _ => true,
        }
    }

    /// `μ([J])`.
    pub fn cylinder_mass(&self, word: &Word) -> f64 {
        self.mass_of(word.indices())
    }

    pub(crate) fn mass_of(&self, word: &[usize]) -> f64 {
        match self {
            ShiftMeasure::Bernoulli(p) => word.iter().map(|&s| p.get(s).copied().unwrap_or(0.0)).product(),
            ShiftMeasure::PeriodicDirac(w) => {
                let w = w.indices();
                let hits = (0..w.len())
                    .filter(|&r| word.iter().enumerate().all(|(i, &s)| w[(r + i) % w.len()] == s))
                    .count();
                hits as f64 / w.len() as f64
            }
            ShiftMeasure::Mixture(parts) => parts.iter().map(|(c, m)| c * m.mass_of(word)).sum(),
        }
    }

    /// Measure-theoretic entropy `h(μ)`.
    pub fn entropy(&self) -> f64 {
        match self {
            ShiftMeasure::Bernoulli(p) => p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum(),
            ShiftMeasure::PeriodicDirac(_) => 0.0,
            ShiftMeasure::Mixture(parts) => parts.iter().map(|(c, m)| c * m.entropy()).sum(),
        }
    }

    /// Upper bound on the number of length-`n` cylinders with positive mass.
    fn support_size(&self, n: usize) -> u128 {
        match self {
            ShiftMeasure::Bernoulli(p) => {
                let s = p.iter().filter(|&&x| x > 0.0).count() as u128;
                s.checked_pow(n as u32).unwrap_or(u128::MAX)
            }
            ShiftMeasure::PeriodicDirac(w) => w.len() as u128,
            ShiftMeasure::Mixture(parts) => parts.iter().fold(0u128, |acc, (_, m)| acc.saturating_add(m.support_size(n))),
        }
    }
}

impl fmt::Display for ShiftMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftMeasure::Bernoulli(p) => write!(f, "bernoulli:{}", p.iter().join(",")),
            ShiftMeasure::PeriodicDirac(w) => {
                let ell = w.indices().iter().max().map_or(1, |m| m + 1);
                write!(f, "dirac:{}", w.render(ell))
            }
            ShiftMeasure::Mixture(parts) => {
                write!(f, "mix:{}", parts.iter().map(|(c, m)| format!("{c}*{m}")).join("+"))
            }
        }
    }
}

impl FromStr for ShiftMeasure {
    type Err = Error;

    /// Parses `bernoulli:0.5,0.5`, `dirac:121` and
    /// `mix:0.3*dirac:1+0.7*bernoulli:0.5,0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, body) = s.split_once(':').ok_or_else(|| Error::invalid(format!("bad measure `{s}`")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "bernoulli" => {
                let weights = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad weight `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                ShiftMeasure::bernoulli(weights)
            }
            "dirac" => ShiftMeasure::periodic_dirac(body.parse()?),
            "mix" => {
                let parts = body
                    .split('+')
                    .map(|term| {
                        let (c, m) = term
                            .split_once('*')
                            .ok_or_else(|| Error::invalid(format!("mixture term `{term}` needs weight*measure")))?;
                        let c = c.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad mixture weight `{c}`")))?;
                        if m.trim_start().starts_with("mix:") {
                            return Err(Error::invalid("nested mixtures are not supported in the text form"));
                        }
                        Ok((c, m.parse()?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ShiftMeasure::mixture(parts)
            }
            other => Err(Error::invalid(format!("unknown measure kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LyapunovMethod {
    ExactEnumeration { n: usize },
    ClosedForm,
    MonteCarlo { samples: usize, seed: u64, std_error: f64, zero_products: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    /// Estimate of `M_*(μ)`; `-∞` allowed.
    pub value: f64,
    pub method: LyapunovMethod,
    /// `min_{m≤n} (1/m) Σ μ([J]) log ‖M_J‖`, an upper bound on `M_*(μ)`
    /// by sub-additivity. Equals `value` for closed forms.
    pub upper: f64,
    /// `(j, A_*^{(j)}(μ))` when computed through a decomposition.
    pub per_block: Option<Vec<(usize, f64)>>,
}

/// `(1/m) Σ_{|J|=m} μ([J]) log ‖M_J‖` for `m = 1..=n`.
pub fn lyapunov_levels(family: &MatrixFamily, measure: &ShiftMeasure, n: usize, norm: Norm, budget: u64) -> Result<Vec<f64>> {
    potential_levels(family, measure, n, budget, |m| norm.apply(m).ln())
}

/// `(1/m) Σ_{|J|=m} μ([J]) f(M_J)` for `m = 1..=n`, where `f = −∞` marks a
/// vanishing product and prunes its subtree.
pub(crate) fn potential_levels<F>(family: &MatrixFamily, measure: &ShiftMeasure, n: usize, budget: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Matrix) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    measure.check_alphabet(family.len())?;
    let requested = measure.support_size(n);
    if requested > budget as u128 {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    // (Σ μ f(M_J), positive-mass zero product seen) per level
    let sums = fold_words(
        family,
        n,
        || vec![(0.0f64, false); n],
        |acc, node| {
            let mass = measure.mass_of(node.word);
            if mass == 0.0 {
                return false;
            }
            let slot = &mut acc[node.word.len() - 1];
            let value = f(node.product);
            if value == f64::NEG_INFINITY {
                slot.1 = true;
                return false;
            }
            slot.0 += mass * value;
            true
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 |= y.1;
            }
            a
        },
    );
    let mut dead = false;
    Ok(sums
        .iter()
        .enumerate()
        .map(|(i, &(s, zero))| {
            dead |= zero;
            if dead {
                f64::NEG_INFINITY
            } else {
                s / (i + 1) as f64
            }
        })
        .collect())
}

/// `(1/|w|) log ρ(M_w)`.
fn periodic_exponent(family: &MatrixFamily, word: &Word) -> Result<f64> {
    let rho = family.word_product(word)?.spectral_radius()?;
    Ok(if rho > 0.0 { rho.ln() / word.len() as f64 } else { f64::NEG_INFINITY })
}

fn affine(parts: &[(f64, f64)]) -> f64 {
    if parts.iter().any(|&(_, v)| v == f64::NEG_INFINITY) {
        f64::NEG_INFINITY
    } else {
        parts.iter().map(|(c, v)| c * v).sum()
    }
}

/// `M_*(μ)`: closed form for periodic measures, enumeration at depth `n` for
/// Bernoulli measures, affine over mixture components.
pub fn lyapunov(family: &MatrixFamily, measure: &ShiftMeasure, n: usize, norm: Norm) -> Result<LyapunovReport> {
    lyapunov_with_budget(family, measure, n, norm, DEFAULT_BUDGET)
}

pub fn lyapunov_with_budget(family: &MatrixFamily, measure: &ShiftMeasure, n: usize, norm: Norm, budget: u64) -> Result<LyapunovReport> {
    if n == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    measure.check_alphabet(family.len())?;
    match measure {
        ShiftMeasure::PeriodicDirac(w) => {
            let value = periodic_exponent(family, w)?;
            Ok(LyapunovReport { value, method: LyapunovMethod::ClosedForm, upper: value, per_block: None })
        }
        ShiftMeasure::Bernoulli(_) => {
            let levels = lyapunov_levels(family, measure, n, norm, budget)?;
            Ok(LyapunovReport {
                value: levels[n - 1],
                method: LyapunovMethod::ExactEnumeration { n },
                upper: levels.iter().copied().fold(f64::INFINITY, f64::min),
                per_block: None,
            })
        }
        ShiftMeasure::Mixture(parts) => {
            let reports = parts
                .iter()
                .map(|(c, m)| Ok((*c, lyapunov_with_budget(family, m, n, norm, budget)?)))
                .collect::<Result<Vec<_>>>()?;
            let value = affine(&reports.iter().map(|(c, r)| (*c, r.value)).collect::<Vec<_>>());
            let upper = affine(&reports.iter().map(|(c, r)| (*c, r.upper)).collect::<Vec<_>>());
            let method = if reports.iter().all(|(_, r)| r.method == LyapunovMethod::ClosedForm) {
                LyapunovMethod::ClosedForm
            } else {
                LyapunovMethod::ExactEnumeration { n }
            };
            Ok(LyapunovReport { value, method, upper, per_block: None })
        }
    }
}

/// Monte Carlo estimate of `(1/n) E log ‖M_J‖` under a Bernoulli measure.
pub fn lyapunov_mc(
    family: &MatrixFamily,
    measure: &ShiftMeasure,
    n: usize,
    samples: usize,
    seed: u64,
    norm: Norm,
) -> Result<LyapunovReport> {
    let ShiftMeasure::Bernoulli(p) = measure else {
        return Err(Error::Precondition("Monte Carlo sampling needs a Bernoulli measure".into()));
    };
    if n == 0 || samples == 0 {
        return Err(Error::invalid("depth and sample count must be positive"));
    }
    measure.check_alphabet(family.len())?;
    let dist = WeightedIndex::new(p).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    let mut zero_products = 0usize;
    for _ in 0..samples {
        match sample_log_norm(family, &dist, &mut rng, n, norm) {
            Some(x) => {
                count += 1;
                let delta = x - mean;
                mean += delta / count as f64;
                m2 += delta * (x - mean);
            }
            None => zero_products += 1,
        }
    }
    let (value, std_error) = if zero_products > 0 {
        (f64::NEG_INFINITY, 0.0)
    } else if count > 1 {
        (mean, (m2 / (count - 1) as f64 / count as f64).sqrt())
    } else {
        (mean, 0.0)
    };
    Ok(LyapunovReport {
        value,
        method: LyapunovMethod::MonteCarlo { samples, seed, std_error, zero_products },
        upper: f64::INFINITY,
        per_block: None,
    })
}

/// `(1/n) log ‖M_J‖` for one random word, rescaling by powers of two so
/// the product never overflows; `None` for a zero product.
fn sample_log_norm(family: &MatrixFamily, dist: &WeightedIndex<f64>, rng: &mut ChaCha8Rng, n: usize, norm: Norm) -> Option<f64> {
    let mut product: Option<Matrix> = None;
    let mut exponent: i64 = 0;
    for _ in 0..n {
        let next = family.matrix(dist.sample(rng));
        let mut m = match product {
            None => next.clone(),
            Some(ref acc) => acc.mul(next),
        };
        let scale = m.max_abs_entry();
        if scale == 0.0 {
            return None;
        }
        let e = scale.log2().floor() as i64;
        if e.abs() > 256 {
            m = m.scale((-e as f64).exp2());
            exponent += e;
        }
        product = Some(m);
    }
    let value = norm.apply(product.as_ref()?);
    Some((value.ln() + exponent as f64 * std::f64::consts::LN_2) / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockLyapunovReport {
    pub full: LyapunovReport,
    /// `(j, A_*^{(j)}(μ))` for `j ∈ Λ`.
    pub per_block: Vec<(usize, LyapunovReport)>,
    /// `W = max_j A_*^{(j)}(μ)`.
    pub w: f64,
    /// `|M_*(μ) − W|`.
    pub defect: f64,
    pub ergodic: bool,
}

/// Block exponents `A_*^{(j)}(μ)`, their maximum `W`, and the defect against
/// `M_*(μ)`. The defect is expected to vanish only for ergodic measures.
pub fn block_lyapunov(
    family: &MatrixFamily,
    decomp: &BlockDecomposition,
    measure: &ShiftMeasure,
    n: usize,
    norm: Norm,
) -> Result<BlockLyapunovReport> {
    if decomp.block_sizes.iter().sum::<usize>() != family.dim() || decomp.diagonal_blocks.iter().any(|b| b.len() != family.len()) {
        return Err(Error::invalid("decomposition does not match the family"));
    }
    let mut full = lyapunov(family, measure, n, norm)?;
    let per_block = decomp
        .lambda
        .iter()
        .map(|&j| Ok((j, lyapunov(&decomp.diagonal_blocks[j], measure, n, norm)?)))
        .collect::<Result<Vec<_>>>()?;
    let w = per_block.iter().map(|(_, r)| r.value).fold(f64::NEG_INFINITY, f64::max);
    let defect = if full.value == w { 0.0 } else { (full.value - w).abs() };
    full.per_block = Some(per_block.iter().map(|(j, r)| (*j, r.value)).collect());
    Ok(BlockLyapunovReport { full, per_block, w, defect, ergodic: measure.is_ergodic() })
}

/// `upper − (q M_*(μ) + h(μ))`, using the sub-additive upper estimate of
/// `M_*(μ)` at the estimate's depth and norm; `+∞` when `M_*(μ) = −∞`.
pub fn variational_defect(family: &MatrixFamily, measure: &ShiftMeasure, q: f64, estimate: &PressureEstimate) -> Result<f64> {
    let report = lyapunov(family, measure, estimate.depth, estimate.norm)?;
    if report.upper == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(estimate.upper - (q * report.upper + measure.entropy()))
}
