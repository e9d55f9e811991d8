//! Finite-level approximants of equilibrium states.
//!
//! `ν_{n,q}([I]) = ‖M_I‖^q / Σ_{|J|=n} ‖M_J‖^q` is averaged along the shift to
//! give `μ̂_{n,m,q}` on words of length `m`; Gibbs ratios
//! `μ̂([J]) e^{mP} / ‖M_J‖^q` measure how close it is to a Gibbs state.

use serde::Serialize;

use crate::decomp::BlockDecomposition;
use crate::error::{Error, Result};
use crate::matfam::{MatrixFamily, Norm, Word};
use crate::pressure::{pressure_bounds_multi, pressure_via_blocks, pressure_via_blocks_multi, BlockPressure, PressureEstimate, PressureOptions};
use crate::tree::{check_budget, fold_words, word_count, LogSumExp, DEFAULT_BUDGET};

/// A probability distribution on words of a fixed length, stored as log
/// masses indexed by lexicographic rank.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderDistribution {
    level: usize,
    ell: usize,
    log_masses: Vec<f64>,
}

impl CylinderDistribution {
    /// Normalizes log weights given in rank order.
    pub fn from_log_weights(level: usize, ell: usize, log_weights: Vec<f64>) -> Result<Self> {
        if level == 0 || ell == 0 {
            return Err(Error::invalid("level and alphabet size must be positive"));
        }
        if word_count(ell, level) != log_weights.len() as u128 {
            return Err(Error::invalid("weight count does not match ℓ^level"));
        }
        let total = log_weights.iter().copied().collect::<LogSumExp>().value();
        if !total.is_finite() {
            return Err(Error::Degenerate("every cylinder has zero weight".into()));
        }
        let log_masses = log_weights.into_iter().map(|x| x - total).collect();
        Ok(CylinderDistribution { level, ell, log_masses })
    }

    /// Level-`level` marginal of the Bernoulli measure with weights `p`.
    pub fn bernoulli(p: &[f64], level: usize) -> Result<Self> {
        let ell = p.len();
        check_budget(ell, level, DEFAULT_BUDGET)?;
        let logs = (0..ell.pow(level as u32))
            .map(|r| Word::from_rank(r, level, ell).indices().iter().map(|&s| p[s].ln()).sum())
            .collect();
        Self::from_log_weights(level, ell, logs)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.log_masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_masses.is_empty()
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_masses
    }

    pub fn masses(&self) -> Vec<f64> {
        self.log_masses.iter().map(|x| x.exp()).collect()
    }

    pub fn mass(&self, word: &Word) -> f64 {
        self.log_mass(word).exp()
    }

    pub fn log_mass(&self, word: &Word) -> f64 {
        assert_eq!(word.len(), self.level, "word length differs from the distribution level");
        self.log_masses[word.rank(self.ell)]
    }

    /// `(word, mass)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        self.log_masses.iter().enumerate().map(|(r, l)| (Word::from_rank(r, self.level, self.ell), l.exp()))
    }

    pub fn total_mass(&self) -> f64 {
        self.log_masses.iter().map(|x| x.exp()).sum()
    }

    /// Empirical entropy rate `(1/m) Σ −p log p`.
    pub fn entropy_rate(&self) -> f64 {
        let h: f64 = self.log_masses.iter().filter(|l| l.is_finite()).map(|&l| -l.exp() * l).sum();
        h / self.level as f64
    }

    /// `(1/2) Σ |p − p'|` against a distribution of the same shape.
    pub fn total_variation(&self, other: &CylinderDistribution) -> Result<f64> {
        if self.level != other.level || self.ell != other.ell {
            return Err(Error::invalid("distributions live on different word sets"));
        }
        Ok(0.5 * self.log_masses.iter().zip(&other.log_masses).map(|(a, b)| (a.exp() - b.exp()).abs()).sum::<f64>())
    }
}

/// Marginal on the first `m` symbols.
pub fn marginalize(dist: &CylinderDistribution, m: usize) -> Result<CylinderDistribution> {
    if m == 0 || m > dist.level {
        return Err(Error::invalid(format!("marginal level {m} outside 1..={}", dist.level)));
    }
    let chunk = dist.ell.pow((dist.level - m) as u32);
    let log_masses = dist.log_masses.chunks(chunk).map(|c| c.iter().copied().collect::<LogSumExp>().value()).collect();
    Ok(CylinderDistribution { level: m, ell: dist.ell, log_masses })
}

/// `q log ‖M_J‖` for every word of length `n`, in rank order.
fn leaf_log_weights(family: &MatrixFamily, q: f64, n: usize, norm: Norm, budget: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("level must be at least 1"));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::invalid(format!("q must be positive, got {q}")));
    }
    check_budget(family.len(), n, budget)?;
    let ell = family.len();
    Ok(fold_words(
        family,
        n,
        Vec::new,
        |acc: &mut Vec<f64>, node| {
            let m = node.word.len();
            let value = norm.apply(node.product);
            if value == 0.0 {
                acc.extend(std::iter::repeat_n(f64::NEG_INFINITY, ell.pow((n - m) as u32)));
                return false;
            }
            if m == n {
                acc.push(q * value.ln());
            }
            true
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    ))
}

/// `ν_{n,q}`.
pub fn nu_nq(family: &MatrixFamily, q: f64, n: usize, norm: Norm) -> Result<CylinderDistribution> {
    let weights = leaf_log_weights(family, q, n, norm, DEFAULT_BUDGET)?;
    CylinderDistribution::from_log_weights(n, family.len(), weights)
        .map_err(|_| Error::Degenerate(format!("every product of length {n} vanishes")))
}

/// `μ̂_{n,m,q}([I]) = (1/(n−m+1)) Σ_{j=0}^{n−m} ν_{n,q}(σ^{−j}[I])`.
pub fn cesaro_shift_average(family: &MatrixFamily, q: f64, n: usize, m: usize, norm: Norm) -> Result<CylinderDistribution> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("need 1 ≤ m ≤ n, got m={m}, n={n}")));
    }
    let nu = nu_nq(family, q, n, norm)?;
    let ell = family.len();
    let width = ell.pow(m as u32);
    let masses = nu.masses();
    let mut averaged = vec![0.0f64; width];
    for j in 0..=(n - m) {
        let tail = ell.pow((n - j - m) as u32);
        for (r, &p) in masses.iter().enumerate() {
            if p > 0.0 {
                averaged[(r / tail) % width] += p;
            }
        }
    }
    let logs = averaged.into_iter().map(f64::ln).collect();
    CylinderDistribution::from_log_weights(m, ell, logs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsDiagnostics {
    pub level: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Words where exactly one of `μ̂([J])` and `‖M_J‖` vanishes.
    pub zero_mismatch_count: usize,
    /// The pressure value plugged in.
    pub pressure_hat: f64,
    /// Half-width of the pressure interval; ratios may drift by `e^{m·w}`.
    pub pressure_half_width: f64,
    /// `r(J)` in rank order, `None` where undefined.
    #[serde(skip)]
    pub ratios: Vec<Option<f64>>,
}

impl GibbsDiagnostics {
    pub fn spread(&self) -> f64 {
        self.ratio_max / self.ratio_min
    }
}

/// Gibbs ratios `μ̂([J]) e^{m P̂} / ‖M_J‖^q` with `P̂` the interval midpoint.
pub fn gibbs_ratio_stats(
    family: &MatrixFamily,
    q: f64,
    mu_hat: &CylinderDistribution,
    pressure: &PressureEstimate,
    norm: Norm,
) -> Result<GibbsDiagnostics> {
    if mu_hat.ell != family.len() {
        return Err(Error::invalid("distribution alphabet differs from the family"));
    }
    let m = mu_hat.level;
    let p_hat = pressure.midpoint();
    if !p_hat.is_finite() {
        return Err(Error::Degenerate("pressure is −∞".into()));
    }
    let half_width = if pressure.lower.is_finite() { 0.5 * pressure.width() } else { f64::INFINITY };
    let weights = leaf_log_weights(family, q, m, norm, DEFAULT_BUDGET)?;
    let mut ratios = Vec::with_capacity(weights.len());
    let (mut lo, mut hi, mut mismatches) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for (&lm, &lw) in mu_hat.log_masses.iter().zip(&weights) {
        match (lm.is_finite(), lw.is_finite()) {
            (true, true) => {
                let r = (lm + m as f64 * p_hat - lw).exp();
                lo = lo.min(r);
                hi = hi.max(r);
                ratios.push(Some(r));
            }
            (false, false) => ratios.push(None),
            _ => {
                mismatches += 1;
                ratios.push(None);
            }
        }
    }
    Ok(GibbsDiagnostics {
        level: m,
        ratio_min: lo,
        ratio_max: hi,
        zero_mismatch_count: mismatches,
        pressure_hat: p_hat,
        pressure_half_width: half_width,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumDescription {
    pub q: f64,
    /// Blocks whose pressure interval reaches the maximum.
    pub achiever_blocks: Vec<usize>,
    /// `(j, μ̂)` for each achiever, on the full alphabet.
    pub extremal_states: Vec<(usize, CylinderDistribution)>,
    pub pressure: BlockPressure,
}

impl EquilibriumDescription {
    /// More than one achiever: the equilibrium set is a non-trivial convex hull.
    pub fn is_singleton(&self) -> bool {
        self.achiever_blocks.len() == 1
    }
}

/// The achiever blocks at `q` and their level-`m` equilibrium approximants.
#[allow(clippy::too_many_arguments)]
pub fn equilibrium_description(
    family: &MatrixFamily,
    decomp: &BlockDecomposition,
    q: f64,
    n: usize,
    m: usize,
    norm: Norm,
    opts: &PressureOptions,
) -> Result<EquilibriumDescription> {
    if decomp.lambda.is_empty() {
        return Err(Error::Degenerate("every product vanishes; there are no equilibrium states".into()));
    }
    let pressure = pressure_via_blocks(family, decomp, q, n, norm, opts)?;
    let extremal_states = pressure
        .achievers
        .iter()
        .map(|&j| Ok((j, cesaro_shift_average(&decomp.diagonal_blocks[j], q, n, m, norm)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumDescription { q, achiever_blocks: pressure.achievers.clone(), extremal_states, pressure })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// `(P̂(q+h) − P̂(q−h)) / 2h`.
    pub finite_difference: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    /// `(1/m) Σ μ̂([J]) log ‖M_J‖` under `μ̂_{n,m,q}`.
    pub lyapunov_of_state: f64,
    pub gap: f64,
}

/// Compares the numerical derivative of `P` at `q` with the Lyapunov exponent
/// of the finite-level equilibrium approximant.
#[allow(clippy::too_many_arguments)]
pub fn pressure_derivative_check(
    family: &MatrixFamily,
    q: f64,
    h: f64,
    n: usize,
    m: usize,
    norm: Norm,
    decomp: Option<&BlockDecomposition>,
    opts: &PressureOptions,
) -> Result<DerivativeCheck> {
    if !(h > 0.0 && q - h > 0.0) {
        return Err(Error::invalid("need h > 0 and q − h > 0"));
    }
    let qs = [q - h, q, q + h];
    let p: Vec<f64> = match decomp {
        Some(dec) => pressure_via_blocks_multi(dec, &qs, n, norm, opts)?.iter().map(|b| b.combined.midpoint()).collect(),
        None => pressure_bounds_multi(family, &qs, n, norm, opts)?.iter().map(PressureEstimate::midpoint).collect(),
    };
    let finite_difference = (p[2] - p[0]) / (2.0 * h);
    let left_slope = (p[1] - p[0]) / h;
    let right_slope = (p[2] - p[1]) / h;

    let mu = cesaro_shift_average(family, q, n, m, norm)?;
    let log_norms = leaf_log_weights(family, 1.0, m, norm, DEFAULT_BUDGET)?;
    let mut lyap = 0.0;
    for (&lm, &ln) in mu.log_masses.iter().zip(&log_norms) {
        if lm.is_finite() {
            if !ln.is_finite() {
                lyap = f64::NEG_INFINITY;
                break;
            }
            lyap += lm.exp() * ln;
        }
    }
    let lyapunov_of_state = lyap / m as f64;
    Ok(DerivativeCheck {
        finite_difference,
        left_slope,
        right_slope,
        lyapunov_of_state,
        gap: (finite_difference - lyapunov_of_state).abs(),
    })
}
