//! Finite-depth bounds on the pressure `P(q) = lim (1/n) log Σ_{|J|=n} ‖M_J‖^q`.
//!
//! With `a_m = log Σ_{|J|=m} ‖M_J‖^q`, sub-additivity gives `P(q) = inf_m a_m/m`,
//! so every computed `a_m/m` is an upper bound. Lower bounds come from
//! separate routes:
//!
//! * periodic: `P(q) ≥ (q/m) log ρ(M_J)` for any word `J` of length `m`;
//! * conformal: when every `M_i` is a multiple of a unitary matrix the
//!   pressure is exactly `log Σ_i ‖M_i‖^q`;
//! * connecting: given `(k, D)` with `‖M_{IKJ}‖ ≥ D‖M_I‖‖M_J‖`, a bound from
//!   any single `a_m` (conditional when the constants are estimated);
//! * block dominance: with a unitary block decomposition, `P ≥ P_j` for
//!   every diagonal block.

use serde::Serialize;

use crate::decomp::{connecting_constant, BlockDecomposition, ConnectingEstimate, IrreducibilityCertificate, SearchOptions};
use crate::error::{Error, Result};
use crate::matfam::{Matrix, MatrixFamily, Norm, Word};
use crate::tree::{check_budget, fold_words, word_count, LogSumExp, DEFAULT_BUDGET};

/// Default ceiling on the dimension of the even-integer spectral lift.
pub const DEFAULT_LIFT_BUDGET: usize = 4096;

/// Slack used when comparing pressure intervals computed along different routes.
pub const OVERLAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerRoute {
    Periodic,
    Conformal,
    Connecting,
    BlockDominance,
    /// `φ^q` is multiplicative for `q ≥ d`.
    Determinant,
}

#[derive(Debug, Clone)]
pub struct PressureOptions {
    /// Maximum number of leaf words.
    pub budget: u64,
    pub periodic: bool,
    /// Maximum number of words whose spectral radius is evaluated.
    pub periodic_budget: u64,
    pub conformal: bool,
    connecting: Option<ConnectingEstimate>,
    /// When set, [`pressure_via_blocks`] estimates connecting constants of
    /// each irreducible block at this depth.
    pub block_connecting_depth: Option<usize>,
    pub search: SearchOptions,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions {
            budget: DEFAULT_BUDGET,
            periodic: true,
            periodic_budget: 1 << 16,
            conformal: true,
            connecting: None,
            block_connecting_depth: None,
            search: SearchOptions::default(),
        }
    }
}

impl PressureOptions {
    /// Enables the connecting lower route. The certificate must be irreducible.
    pub fn with_connecting(mut self, cert: &IrreducibilityCertificate, estimate: ConnectingEstimate) -> Result<Self> {
        if !cert.is_irreducible() {
            return Err(Error::Precondition("the connecting route needs an irreducible family".into()));
        }
        self.connecting = Some(estimate);
        Ok(self)
    }

    pub fn connecting(&self) -> Option<&ConnectingEstimate> {
        self.connecting.as_ref()
    }
}

/// Rigorous (or explicitly conditional) bounds on `P(q)` at depth `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub q: f64,
    pub norm: Norm,
    pub upper: f64,
    pub lower: f64,
    pub depth: usize,
    /// `(m, a_m/m)` for `m = 1..=depth`.
    pub per_depth_values: Vec<(usize, f64)>,
    /// Routes that contributed a finite lower bound.
    pub method_tags: Vec<LowerRoute>,
    /// Value of each enabled route.
    pub route_values: Vec<(LowerRoute, f64)>,
    #[serde(skip)]
    pub best_periodic_word: Option<Word>,
    /// Set when the lower bound rests on estimated connecting constants.
    pub conditional: bool,
}

impl PressureEstimate {
    pub fn width(&self) -> f64 {
        if self.upper == f64::NEG_INFINITY && self.lower == f64::NEG_INFINITY {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    /// Interval midpoint, or the upper bound when no finite lower bound exists.
    pub fn midpoint(&self) -> f64 {
        if self.lower.is_finite() {
            0.5 * (self.upper + self.lower)
        } else {
            self.upper
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = OVERLAP_SLACK * (1.0 + x.abs());
        self.lower - slack <= x && x <= self.upper + slack
    }

    pub fn overlaps(&self, other: &PressureEstimate) -> bool {
        let slack = OVERLAP_SLACK * (1.0 + self.upper.abs().min(other.upper.abs()));
        self.lower <= other.upper + slack && other.lower <= self.upper + slack
    }

    pub fn route(&self, route: LowerRoute) -> Option<f64> {
        self.route_values.iter().find(|(r, _)| *r == route).map(|(_, v)| *v)
    }

    pub(crate) fn minus_infinity(q: f64, norm: Norm, depth: usize, per_depth_values: Vec<(usize, f64)>) -> Self {
        PressureEstimate {
            q,
            norm,
            upper: f64::NEG_INFINITY,
            lower: f64::NEG_INFINITY,
            depth,
            per_depth_values,
            method_tags: Vec::new(),
            route_values: Vec::new(),
            best_periodic_word: None,
            conditional: false,
        }
    }

    /// Raises the lower bound by `value` from `route` when it improves it.
    pub(crate) fn offer_lower(&mut self, route: LowerRoute, value: f64, conditional: bool) {
        self.route_values.push((route, value));
        if value == f64::NEG_INFINITY {
            return;
        }
        if value > self.lower {
            self.lower = value;
            self.conditional = conditional;
        }
        if !self.method_tags.contains(&route) {
            self.method_tags.push(route);
        }
    }

    /// Clamps roundoff-level crossings of exact routes.
    pub(crate) fn settle(&mut self) {
        if self.lower > self.upper && self.lower - self.upper <= OVERLAP_SLACK * (1.0 + self.upper.abs()) {
            self.lower = self.upper;
        }
    }
}

fn validate(qs: &[f64], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    if let Some(q) = qs.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
        return Err(Error::invalid(format!("q must be positive, got {q}")));
    }
    Ok(())
}

struct WalkAcc {
    /// `levels[qi][m-1]`
    levels: Vec<Vec<LogSumExp>>,
    /// Best `(1/m) log ρ(M_J)` with its word.
    best: Option<(f64, Vec<usize>)>,
}

impl WalkAcc {
    fn merge(mut self, other: WalkAcc) -> WalkAcc {
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        self.best = match (self.best, other.best) {
            (Some(a), Some(b)) => Some(if b.0 > a.0 { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Largest `L ≤ n` with `Σ_{m≤L} ℓ^m ≤ budget`.
pub(crate) fn periodic_depth(ell: usize, n: usize, budget: u64) -> usize {
    let mut total: u128 = 0;
    for m in 1..=n {
        total += word_count(ell, m);
        if total > budget as u128 {
            return m - 1;
        }
    }
    n
}

/// One walk of the word tree computing `a_m(q)` for every `q` and `m ≤ n`,
/// plus the best periodic rate among words up to `periodic_len`.
fn walk(family: &MatrixFamily, qs: &[f64], n: usize, norm: Norm, periodic_len: usize) -> WalkAcc {
    let init = || WalkAcc { levels: vec![vec![LogSumExp::new(); n]; qs.len()], best: None };
    fold_words(
        family,
        n,
        init,
        |acc, node| {
            let m = node.word.len();
            let value = norm.apply(node.product);
            if value == 0.0 {
                return false;
            }
            let log_norm = value.ln();
            for (qi, q) in qs.iter().enumerate() {
                acc.levels[qi][m - 1].add(q * log_norm);
            }
            if m <= periodic_len {
                if let Ok(rho) = node.product.spectral_radius() {
                    if rho > 0.0 {
                        let rate = rho.ln() / m as f64;
                        if acc.best.as_ref().is_none_or(|(b, _)| rate > *b) {
                            acc.best = Some((rate, node.word.to_vec()));
                        }
                    }
                }
            }
            true
        },
        WalkAcc::merge,
    )
}

/// `log Σ_{|J|=n} ‖M_J‖^q` in the log domain; `-∞` iff every product vanishes.
pub fn log_partition_sum(family: &MatrixFamily, q: f64, n: usize, norm: Norm, budget: u64) -> Result<f64> {
    validate(&[q], n)?;
    check_budget(family.len(), n, budget)?;
    let acc = walk(family, &[q], n, norm, 0);
    Ok(acc.levels[0][n - 1].value())
}

/// Lower bound from connecting constants and a single `a_m`.
fn connecting_bound(est: &ConnectingEstimate, q: f64, m: usize, a_m: f64) -> f64 {
    if !a_m.is_finite() {
        return f64::NEG_INFINITY;
    }
    let mut best = f64::NEG_INFINITY;
    if est.d > 0.0 {
        // m·P + k·max(P, 0) ≥ a_m + q log D − log(k + 1)
        let b = a_m + q * est.d.ln() - ((est.k + 1) as f64).ln();
        let bound = if b >= 0.0 { b / (m + est.k) as f64 } else { b / m as f64 };
        best = best.max(bound);
    }
    for (r, &dr) in est.exact_length.iter().enumerate() {
        if dr > 0.0 {
            // connectors of exactly r symbols: P ≥ (a_m + q log D_r)/(m + r)
            best = best.max((a_m + q * dr.ln()) / (m + r) as f64);
        }
    }
    best
}

/// Exact pressure of a conformal family: `log Σ_i σ(M_i)^q`.
fn conformal_pressure(family: &MatrixFamily, q: f64) -> f64 {
    family
        .matrices()
        .iter()
        .map(|m| {
            let s = m.op_norm();
            if s == 0.0 {
                f64::NEG_INFINITY
            } else {
                q * s.ln()
            }
        })
        .collect::<LogSumExp>()
        .value()
}

/// Pressure bounds at several `q` from a single enumeration.
pub fn pressure_bounds_multi(
    family: &MatrixFamily,
    qs: &[f64],
    n: usize,
    norm: Norm,
    opts: &PressureOptions,
) -> Result<Vec<PressureEstimate>> {
    validate(qs, n)?;
    check_budget(family.len(), n, opts.budget)?;
    if let Some(est) = &opts.connecting {
        if est.norm != norm {
            return Err(Error::invalid(format!("connecting constants were estimated for the {} norm", est.norm)));
        }
    }
    let periodic_len = if opts.periodic { periodic_depth(family.len(), n, opts.periodic_budget) } else { 0 };
    let acc = walk(family, qs, n, norm, periodic_len);
    let conformal = opts.conformal && family.is_conformal();

    let estimates = qs
        .iter()
        .zip(&acc.levels)
        .map(|(&q, levels)| {
            let a: Vec<f64> = levels.iter().map(LogSumExp::value).collect();
            let per_depth: Vec<(usize, f64)> = a.iter().enumerate().map(|(i, &v)| (i + 1, v / (i + 1) as f64)).collect();
            if a.contains(&f64::NEG_INFINITY) {
                return PressureEstimate::minus_infinity(q, norm, n, per_depth);
            }
            let upper = per_depth.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
            let mut est = PressureEstimate {
                q,
                norm,
                upper,
                lower: f64::NEG_INFINITY,
                depth: n,
                per_depth_values: per_depth,
                method_tags: Vec::new(),
                route_values: Vec::new(),
                best_periodic_word: None,
                conditional: false,
            };
            if opts.periodic {
                let value = acc.best.as_ref().map_or(f64::NEG_INFINITY, |(rate, _)| q * rate);
                est.best_periodic_word = acc.best.as_ref().map(|(_, w)| Word::from_indices(w.clone()).expect("non-empty"));
                est.offer_lower(LowerRoute::Periodic, value, false);
            }
            if conformal {
                est.offer_lower(LowerRoute::Conformal, conformal_pressure(family, q), false);
            }
            if let Some(c) = &opts.connecting {
                let value = a
                    .iter()
                    .enumerate()
                    .map(|(i, &am)| connecting_bound(c, q, i + 1, am))
                    .fold(f64::NEG_INFINITY, f64::max);
                est.offer_lower(LowerRoute::Connecting, value, c.estimated);
            }
            est.settle();
            est
        })
        .collect();
    Ok(estimates)
}

/// Bounds on `P(q)` from words of length at most `n`.
pub fn pressure_bounds(family: &MatrixFamily, q: f64, n: usize, norm: Norm, opts: &PressureOptions) -> Result<PressureEstimate> {
    Ok(pressure_bounds_multi(family, &[q], n, norm, opts)?.remove(0))
}

/// Block-route pressure: `P(q) = max_{j∈Λ} P_j(q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockPressure {
    /// `[max_j lower_j, max_j upper_j]`.
    pub combined: PressureEstimate,
    /// `(j, estimate)` for each `j ∈ Λ` (zero-based block index).
    pub per_block: Vec<(usize, PressureEstimate)>,
    /// Blocks whose interval reaches the largest lower bound.
    pub achievers: Vec<usize>,
    pub trivial: bool,
}

fn combine_blocks(q: f64, norm: Norm, n: usize, per_block: Vec<(usize, PressureEstimate)>) -> BlockPressure {
    if per_block.is_empty() {
        return BlockPressure {
            combined: PressureEstimate::minus_infinity(q, norm, n, Vec::new()),
            per_block,
            achievers: Vec::new(),
            trivial: true,
        };
    }
    let lower = per_block.iter().map(|(_, e)| e.lower).fold(f64::NEG_INFINITY, f64::max);
    let upper = per_block.iter().map(|(_, e)| e.upper).fold(f64::NEG_INFINITY, f64::max);
    let slack = OVERLAP_SLACK * (1.0 + lower.abs().min(upper.abs()));
    let achievers = per_block.iter().filter(|(_, e)| e.upper + slack >= lower).map(|(j, _)| *j).collect();
    let mut method_tags: Vec<LowerRoute> = Vec::new();
    for (_, e) in &per_block {
        for t in &e.method_tags {
            if !method_tags.contains(t) {
                method_tags.push(*t);
            }
        }
    }
    let conditional = per_block.iter().any(|(_, e)| e.lower == lower && e.conditional);
    let combined = PressureEstimate {
        q,
        norm,
        upper,
        lower,
        depth: n,
        per_depth_values: Vec::new(),
        method_tags,
        route_values: Vec::new(),
        best_periodic_word: None,
        conditional,
    };
    BlockPressure { combined, per_block, achievers, trivial: false }
}

fn block_options(block: &MatrixFamily, decomp: &BlockDecomposition, j: usize, norm: Norm, opts: &PressureOptions) -> Result<PressureOptions> {
    let mut block_opts = PressureOptions { connecting: None, ..opts.clone() };
    if let (Some(depth), Some(cert)) = (opts.block_connecting_depth, decomp.certificates[j].as_ref()) {
        if block.dim() > 1 && cert.is_irreducible() {
            let est = connecting_constant(block, depth, norm, &opts.search)?;
            block_opts = block_opts.with_connecting(cert, est)?;
        }
    }
    Ok(block_opts)
}

/// Block-route bounds at several `q`.
pub fn pressure_via_blocks_multi(
    decomp: &BlockDecomposition,
    qs: &[f64],
    n: usize,
    norm: Norm,
    opts: &PressureOptions,
) -> Result<Vec<BlockPressure>> {
    validate(qs, n)?;
    let mut per_q: Vec<Vec<(usize, PressureEstimate)>> = vec![Vec::new(); qs.len()];
    for &j in &decomp.lambda {
        let block = &decomp.diagonal_blocks[j];
        let block_opts = block_options(block, decomp, j, norm, opts)?;
        for (slot, est) in per_q.iter_mut().zip(pressure_bounds_multi(block, qs, n, norm, &block_opts)?) {
            slot.push((j, est));
        }
    }
    Ok(qs.iter().zip(per_q).map(|(&q, blocks)| combine_blocks(q, norm, n, blocks)).collect())
}

/// Block-route bounds at one `q`. A trivial decomposition yields `-∞`.
pub fn pressure_via_blocks(
    family: &MatrixFamily,
    decomp: &BlockDecomposition,
    q: f64,
    n: usize,
    norm: Norm,
    opts: &PressureOptions,
) -> Result<BlockPressure> {
    if decomp.block_sizes.iter().sum::<usize>() != family.dim() || decomp.diagonal_blocks.iter().any(|b| b.len() != family.len()) {
        return Err(Error::invalid("decomposition does not match the family"));
    }
    Ok(pressure_via_blocks_multi(decomp, &[q], n, norm, opts)?.remove(0))
}

/// Raises a direct estimate's lower bound with the block route. Valid because
/// the diagonal blocks of `T⁻¹M_JT` are compressions of `M_J` by an isometry,
/// so `Σ‖M_J‖^q ≥ Σ‖A_J^{(j,j)}‖^q` for every block.
pub fn with_block_dominance(direct: &PressureEstimate, blocks: &BlockPressure) -> PressureEstimate {
    let mut out = direct.clone();
    if !blocks.trivial {
        out.offer_lower(LowerRoute::BlockDominance, blocks.combined.lower, blocks.combined.conditional);
        out.settle();
    }
    out
}

/// `log ρ` of the lift `Σ_i K_i ⊗ K̄_i` with `K_i = M_i^{⊗m}`; this is exactly
/// the Frobenius-norm pressure at `q = 2m`.
pub fn pressure_even_spectral(family: &MatrixFamily, m: usize, size_budget: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    let size = (family.dim() as u128).checked_pow(2 * m as u32).unwrap_or(u128::MAX);
    if size > size_budget as u128 {
        return Err(Error::BudgetExceeded { requested: size, budget: size_budget as u64 });
    }
    let size = size as usize;
    let mut lift = Matrix::zeros(size, size).into_inner();
    for a in family.matrices() {
        let mut k = a.clone();
        for _ in 1..m {
            k = k.kron(a);
        }
        lift += k.kron(&k.conjugate()).into_inner();
    }
    let rho = Matrix::from_inner(lift).spectral_radius()?;
    Ok(if rho > 0.0 { rho.ln() } else { f64::NEG_INFINITY })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureCurve {
    pub q_grid: Vec<f64>,
    pub estimates: Vec<PressureEstimate>,
    /// Achiever blocks per grid point when computed through a decomposition.
    pub achievers: Vec<Vec<usize>>,
}

/// Pressure bounds over an increasing grid of `q`, through the blocks of
/// `decomp` when one is supplied.
pub fn pressure_curve(
    family: &MatrixFamily,
    q_grid: &[f64],
    n: usize,
    norm: Norm,
    decomp: Option<&BlockDecomposition>,
    opts: &PressureOptions,
) -> Result<PressureCurve> {
    if q_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("q grid must be strictly increasing"));
    }
    let (estimates, achievers) = match decomp {
        Some(dec) => {
            let blocks = pressure_via_blocks_multi(dec, q_grid, n, norm, opts)?;
            blocks.into_iter().map(|b| (b.combined, b.achievers)).unzip()
        }
        None => (pressure_bounds_multi(family, q_grid, n, norm, opts)?, vec![Vec::new(); q_grid.len()]),
    };
    Ok(PressureCurve { q_grid: q_grid.to_vec(), estimates, achievers })
}
