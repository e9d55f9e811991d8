//! Irreducibility testing and simultaneous block upper-triangularization.
//!
//! A family is reduced by repeatedly locating a common invariant subspace `V`,
//! rotating it onto the leading coordinates with a unitary change of basis and
//! recursing on the two diagonal corners. The resulting conjugator `T` has
//! orthonormal columns, so `T⁻¹ = T*`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matfam::{is_negligible, Field, Matrix, MatrixFamily, Norm, Scalar, Word};
use crate::tree::{check_budget, DEFAULT_BUDGET};

/// Maximum distance, relative to `‖M_i‖`, of `M_i v` from a witness subspace.
pub const WITNESS_TOLERANCE: f64 = 1e-8;

/// Tolerance used while closing an orbit span.
const ORBIT_TOLERANCE: f64 = 1e-9;

/// Condition number of `T` above which a warning is attached.
const CONDITION_WARNING: f64 = 1e6;

type Vector = DVector<Scalar>;

/// Controls the randomized invariant-subspace search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub seed: u64,
    /// Number of random algebra elements whose eigenvectors seed the search.
    pub random_elements: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, random_elements: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Irreducible,
    Reducible,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Orthonormal basis of a proper nonzero invariant subspace.
    InvariantSubspace(Vec<Vector>),
    /// The generated unital algebra has full dimension `d²` (Burnside).
    AlgebraDimension(usize),
    /// Real case: the candidate search found no real invariant subspace.
    SearchExhausted { random_elements: usize, seeds_tested: usize, algebra_dimension: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibilityCertificate {
    pub field: Field,
    pub dim: usize,
    pub verdict: Verdict,
    pub witness: Witness,
    /// Set for real families that admit no real invariant subspace but do
    /// admit a complex one (irreducible over ℝ, reducible over ℂ).
    pub complex_reducible: bool,
}

impl IrreducibilityCertificate {
    pub fn is_irreducible(&self) -> bool {
        self.verdict == Verdict::Irreducible
    }

    /// The invariant subspace basis, for reducible verdicts.
    pub fn subspace(&self) -> Option<&[Vector]> {
        match &self.witness {
            Witness::InvariantSubspace(basis) => Some(basis),
            _ => None,
        }
    }
}

/// Largest `dist(M_i v, span V) / ‖M_i‖` over generators and basis vectors.
pub fn invariance_residual(family: &MatrixFamily, basis: &[Vector]) -> f64 {
    let mut worst = 0.0f64;
    for m in family.matrices() {
        let scale = m.op_norm();
        if scale == 0.0 {
            continue;
        }
        for v in basis {
            let w = m.inner() * v;
            let r = project_out(&w, basis).norm();
            worst = worst.max(r / scale);
        }
    }
    worst
}

fn project_out(v: &Vector, basis: &[Vector]) -> Vector {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(&r);
            r -= b * c;
        }
    }
    r
}

/// Adds `v` to the orthonormal `basis` when its residual exceeds `tol·scale`.
fn try_extend(basis: &mut Vec<Vector>, v: &Vector, tol: f64, scale: f64) -> bool {
    let r = project_out(v, basis);
    let n = r.norm();
    if n > tol * scale && n > 0.0 {
        basis.push(r / Scalar::new(n, 0.0));
        true
    } else {
        false
    }
}

fn realify(v: &Vector) -> Vector {
    v.map(|z| Scalar::new(z.re, 0.0))
}

/// Smallest subspace containing `seed` and invariant under every generator.
fn orbit_closure(family: &MatrixFamily, seed: &Vector) -> Vec<Vector> {
    let d = family.dim();
    let mut basis = Vec::with_capacity(d);
    if !try_extend(&mut basis, seed, 1e-8, seed.norm().clamp(f64::MIN_POSITIVE, 1.0)) {
        return basis;
    }
    let norms: Vec<f64> = family.matrices().iter().map(Matrix::op_norm).collect();
    let mut next = 0;
    while next < basis.len() && basis.len() < d {
        let u = basis[next].clone();
        for (m, &scale) in family.matrices().iter().zip(&norms) {
            if scale == 0.0 {
                continue;
            }
            let w = m.inner() * &u;
            try_extend(&mut basis, &w, ORBIT_TOLERANCE, scale);
            if basis.len() == d {
                break;
            }
        }
        next += 1;
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `basis` in 𝔽^d, built
/// from standard basis vectors so that real subspaces get real complements.
fn complement(basis: &[Vector], d: usize) -> Vec<Vector> {
    let mut full: Vec<Vector> = basis.to_vec();
    let mut candidates: Vec<(f64, usize)> = (0..d)
        .map(|k| {
            let e = Vector::from_fn(d, |i, _| if i == k { Scalar::new(1.0, 0.0) } else { Scalar::new(0.0, 0.0) });
            (project_out(&e, basis).norm(), k)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::new();
    for (_, k) in candidates {
        if full.len() == d {
            break;
        }
        let e = Vector::from_fn(d, |i, _| if i == k { Scalar::new(1.0, 0.0) } else { Scalar::new(0.0, 0.0) });
        if try_extend(&mut full, &e, 1e-6, 1.0) {
            out.push(full.last().expect("just pushed").clone());
        }
    }
    out
}

/// Dimension of the unital algebra generated by the family.
pub fn algebra_dimension(family: &MatrixFamily) -> usize {
    let d = family.dim();
    let target = d * d;
    let vec_of = |m: &DMatrix<Scalar>| Vector::from_iterator(target, m.iter().copied());
    let mut basis: Vec<Vector> = Vec::with_capacity(target);
    let mut elements: Vec<DMatrix<Scalar>> = Vec::with_capacity(target);

    let id = DMatrix::<Scalar>::identity(d, d);
    try_extend(&mut basis, &vec_of(&id), ZERO_REL, 1.0);
    elements.push(id / Scalar::new((d as f64).sqrt(), 0.0));

    let mut next = 0;
    while next < elements.len() && basis.len() < target {
        let a = elements[next].clone();
        for m in family.matrices() {
            let prod = &a * m.inner();
            let n = prod.norm();
            if n == 0.0 {
                continue;
            }
            let v = vec_of(&prod) / Scalar::new(n, 0.0);
            if try_extend(&mut basis, &v, ZERO_REL, 1.0) {
                let b = basis.last().expect("just pushed");
                elements.push(DMatrix::from_iterator(d, d, b.iter().copied()));
            }
            if basis.len() == target {
                break;
            }
        }
        next += 1;
    }
    basis.len()
}

const ZERO_REL: f64 = crate::matfam::ZERO_THRESHOLD;

fn random_scalar(rng: &mut ChaCha8Rng, field: Field) -> Scalar {
    match field {
        Field::Real => Scalar::new(rng.gen_range(-1.0..1.0), 0.0),
        Field::Complex => Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    }
}

/// A random element `(c₀I + Σ cᵢM̂ᵢ)(c₀'I + Σ cᵢ'M̂ᵢ)` of the generated algebra.
fn random_element(family: &MatrixFamily, rng: &mut ChaCha8Rng, field: Field) -> DMatrix<Scalar> {
    let d = family.dim();
    let mut factor = || {
        let mut x = DMatrix::<Scalar>::identity(d, d) * random_scalar(rng, field);
        for m in family.matrices() {
            let n = m.op_norm();
            let c = random_scalar(rng, field);
            if n > 0.0 {
                x += m.inner() * (c / n);
            }
        }
        x
    };
    let a = factor();
    let b = factor();
    a * b
}

/// Approximate eigenvectors of `x`: for each eigenvalue, the right singular
/// vectors of `x − λI` with (near-)minimal singular value.
fn eigenvectors(x: &DMatrix<Scalar>) -> Vec<Vector> {
    let d = x.nrows();
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let Ok(eigs) = Matrix::from_inner(x.clone()).eigenvalues() else {
        return Vec::new();
    };
    let mut distinct: Vec<Scalar> = Vec::new();
    for l in eigs {
        if !distinct.iter().any(|m| (m - l).norm() <= 1e-8 * scale) {
            distinct.push(l);
        }
    }
    let mut out = Vec::new();
    for l in distinct {
        let shifted = x - DMatrix::<Scalar>::identity(d, d) * l;
        let svd = shifted.svd(false, true);
        let Some(v_t) = svd.v_t else { continue };
        let s = &svd.singular_values;
        let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
        for k in 0..s.len() {
            if s[k] <= smin * (1.0 + 1e-6) || s[k] <= 1e-8 * scale {
                out.push(v_t.row(k).adjoint());
            }
        }
    }
    out
}

/// Kernel and image basis vectors of each generator.
fn kernel_and_image(family: &MatrixFamily) -> Vec<Vector> {
    let mut out = Vec::new();
    for m in family.matrices() {
        let svd = m.inner().clone().svd(true, true);
        let s = &svd.singular_values;
        let smax = s.iter().copied().fold(0.0, f64::max);
        if let (Some(u), Some(v_t)) = (&svd.u, &svd.v_t) {
            for k in 0..s.len() {
                if is_negligible(s[k], smax) {
                    out.push(v_t.row(k).adjoint());
                } else {
                    out.push(u.column(k).into_owned());
                }
            }
        }
    }
    out
}

struct SearchOutcome {
    best: Option<Vec<Vector>>,
    seeds_tested: usize,
}

/// Candidate search for a proper invariant subspace over `field`.
fn seeded_search(family: &MatrixFamily, field: Field, opts: &SearchOptions, salt: u64) -> SearchOutcome {
    let d = family.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut raw: Vec<Vector> = kernel_and_image(family);
    for _ in 0..opts.random_elements {
        let x = random_element(family, &mut rng, field);
        raw.extend(eigenvectors(&x));
    }
    let mut seeds = Vec::new();
    for v in raw {
        match field {
            Field::Complex => seeds.push(v),
            Field::Real => {
                seeds.push(realify(&v));
                seeds.push(v.map(|z| Scalar::new(z.im, 0.0)));
            }
        }
    }

    let mut best: Option<Vec<Vector>> = None;
    let mut tested = 0;
    for s in seeds {
        if s.norm() < 1e-8 {
            continue;
        }
        tested += 1;
        let closure = orbit_closure(family, &s);
        let dim = closure.len();
        if dim == 0 || dim == d {
            continue;
        }
        if best.as_ref().is_some_and(|b| b.len() <= dim) {
            continue;
        }
        if invariance_residual(family, &closure) <= WITNESS_TOLERANCE {
            let done = dim == 1;
            best = Some(closure);
            if done {
                break;
            }
        }
    }
    SearchOutcome { best, seeds_tested: tested }
}

fn adjoint_family(family: &MatrixFamily) -> MatrixFamily {
    family.map(Matrix::adjoint).expect("adjoint preserves shape and field")
}

/// Searches the family and its adjoint; a subspace invariant under all `M_i*`
/// has an orthogonal complement invariant under all `M_i`.
fn search_both_sides(family: &MatrixFamily, field: Field, opts: &SearchOptions) -> SearchOutcome {
    let direct = seeded_search(family, field, opts, 1);
    let mut tested = direct.seeds_tested;
    let mut best = direct.best;
    if best.as_ref().is_none_or(|b| b.len() > 1) {
        let dual = seeded_search(&adjoint_family(family), field, opts, 2);
        tested += dual.seeds_tested;
        if let Some(w) = dual.best {
            let mut v = complement(&w, family.dim());
            if field == Field::Real {
                v = v.iter().map(realify).collect();
            }
            let better = best.as_ref().is_none_or(|b| v.len() < b.len());
            if better && !v.is_empty() && invariance_residual(family, &v) <= WITNESS_TOLERANCE {
                best = Some(v);
            }
        }
    }
    SearchOutcome { best, seeds_tested: tested }
}

/// Real invariant subspaces derived from a complex one: `V + V̄` and `V ∩ V̄`.
fn conjugation_stable(family: &MatrixFamily, v: &[Vector]) -> Option<Vec<Vector>> {
    let d = family.dim();
    let mut sum: Vec<Vector> = Vec::new();
    for b in v {
        try_extend(&mut sum, &realify(b), 1e-8, 1.0);
        try_extend(&mut sum, &b.map(|z| Scalar::new(z.im, 0.0)), 1e-8, 1.0);
    }

    // Real x lies in V iff (I − P_V)x = 0; stack real and imaginary parts.
    let mut proj = DMatrix::<Scalar>::identity(d, d);
    for b in v {
        proj -= b * b.adjoint();
    }
    let stacked = DMatrix::<f64>::from_fn(2 * d, d, |i, j| if i < d { proj[(i, j)].re } else { proj[(i - d, j)].im });
    let svd = stacked.svd(false, true);
    let mut intersection: Vec<Vector> = Vec::new();
    if let Some(v_t) = svd.v_t {
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        for k in 0..svd.singular_values.len() {
            if svd.singular_values[k] <= 1e-8 * smax.max(1.0) {
                let x = Vector::from_fn(d, |i, _| Scalar::new(v_t[(k, i)], 0.0));
                try_extend(&mut intersection, &x, 1e-8, 1.0);
            }
        }
    }

    [intersection, sum]
        .into_iter()
        .filter(|w| !w.is_empty() && w.len() < d)
        .find(|w| invariance_residual(family, w) <= WITNESS_TOLERANCE)
}

/// Returns an orthonormal basis of a proper nonzero invariant subspace when the
/// search finds one. Real families get real bases.
pub fn find_invariant_subspace(family: &MatrixFamily, opts: &SearchOptions) -> Option<Vec<Vector>> {
    if family.dim() < 2 {
        return None;
    }
    let outcome = search_both_sides(family, family.field(), opts);
    if outcome.best.is_some() || family.field() == Field::Complex {
        return outcome.best;
    }
    let complexified = family.with_field(Field::Complex).expect("real family is a valid complex family");
    let complex = search_both_sides(&complexified, Field::Complex, opts);
    complex.best.and_then(|v| conjugation_stable(family, &v))
}

/// Decides irreducibility over the family's field.
///
/// Over ℂ the verdict is the Burnside criterion (generated algebra of
/// dimension `d²`), and reducible verdicts carry a searched witness. Over ℝ a
/// full complex algebra is conclusive; otherwise the verdict rests on the
/// candidate search.
pub fn is_irreducible(family: &MatrixFamily, opts: &SearchOptions) -> Result<IrreducibilityCertificate> {
    let d = family.dim();
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let cert = |verdict, witness, complex_reducible| IrreducibilityCertificate {
        field: family.field(),
        dim: d,
        verdict,
        witness,
        complex_reducible,
    };
    if d == 1 {
        return Ok(cert(Verdict::Irreducible, Witness::AlgebraDimension(1), false));
    }
    let alg = algebra_dimension(family);
    if alg == d * d {
        return Ok(cert(Verdict::Irreducible, Witness::AlgebraDimension(alg), false));
    }

    match family.field() {
        Field::Complex => {
            let mut opts = *opts;
            for _ in 0..3 {
                if let Some(v) = find_invariant_subspace(family, &opts) {
                    return Ok(cert(Verdict::Reducible, Witness::InvariantSubspace(v), false));
                }
                opts.random_elements *= 4;
            }
            Err(Error::NumericalFailure {
                what: format!("algebra dimension {alg} < {} but no invariant subspace was located", d * d),
                residual: f64::NAN,
            })
        }
        Field::Real => {
            let outcome = search_both_sides(family, Field::Real, opts);
            if let Some(v) = outcome.best {
                return Ok(cert(Verdict::Reducible, Witness::InvariantSubspace(v), false));
            }
            if let Some(v) = find_invariant_subspace(family, opts) {
                return Ok(cert(Verdict::Reducible, Witness::InvariantSubspace(v), false));
            }
            Ok(cert(
                Verdict::Irreducible,
                Witness::SearchExhausted {
                    random_elements: opts.random_elements,
                    seeds_tested: outcome.seeds_tested,
                    algebra_dimension: alg,
                },
                true,
            ))
        }
    }
}

/// Result of the block upper-triangularization.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// Conjugator with orthonormal columns.
    pub t: Matrix,
    pub block_sizes: Vec<usize>,
    /// `{A_i^{(j,j)}}` for each block `j`.
    pub diagonal_blocks: Vec<MatrixFamily>,
    /// Zero-based indices of the blocks whose family is irreducible and nonzero.
    pub lambda: Vec<usize>,
    /// Irreducibility certificate of each nonzero block.
    pub certificates: Vec<Option<IrreducibilityCertificate>>,
    pub condition_number_t: f64,
    /// Largest strictly-lower-block entry of `T⁻¹M_iT`, relative to `‖M_i‖`.
    pub residual: f64,
    pub warnings: Vec<String>,
    conjugated: Vec<Matrix>,
}

impl BlockDecomposition {
    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Starting coordinate of each block.
    pub fn offsets(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect()
    }

    /// `T⁻¹M_iT` with the strictly lower blocks set to zero.
    pub fn conjugated(&self, i: usize) -> &Matrix {
        &self.conjugated[i]
    }

    /// `T · conjugated(i) · T⁻¹`.
    pub fn reconstruct(&self, i: usize) -> Matrix {
        self.t.mul(&self.conjugated[i]).mul(&self.t.adjoint())
    }

    pub fn is_trivial(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Block family `j` if it belongs to Λ.
    pub fn lambda_block(&self, j: usize) -> Option<&MatrixFamily> {
        self.lambda.contains(&j).then(|| &self.diagonal_blocks[j])
    }

    /// One-based Λ formatted as `{1,2}` or `∅`.
    pub fn lambda_label(&self) -> String {
        if self.lambda.is_empty() {
            "∅".to_string()
        } else {
            format!("{{{}}}", self.lambda.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(","))
        }
    }
}

struct RawBlock {
    size: usize,
    zero: bool,
    certificate: Option<IrreducibilityCertificate>,
}

fn is_zero_family(family: &MatrixFamily, scale: f64) -> bool {
    family.matrices().iter().all(|m| is_negligible(m.op_norm(), scale))
}

fn split(family: &MatrixFamily, scale: f64, opts: &SearchOptions) -> Result<(DMatrix<Scalar>, Vec<RawBlock>)> {
    let d = family.dim();
    let identity = DMatrix::<Scalar>::identity(d, d);
    if is_zero_family(family, scale) {
        return Ok((identity, vec![RawBlock { size: d, zero: true, certificate: None }]));
    }
    let cert = is_irreducible(family, opts)?;
    let Some(v) = cert.subspace().map(<[Vector]>::to_vec) else {
        return Ok((identity, vec![RawBlock { size: d, zero: false, certificate: Some(cert) }]));
    };

    let dv = v.len();
    let mut cols = v;
    cols.extend(complement(&cols, d));
    if family.field() == Field::Real {
        cols = cols.iter().map(realify).collect();
    }
    let q = DMatrix::from_columns(&cols);
    let q_adj = q.adjoint();
    let take = |rows: std::ops::Range<usize>| -> Result<MatrixFamily> {
        let blocks = family
            .matrices()
            .iter()
            .map(|m| {
                let b = &q_adj * m.inner() * &q;
                let mut sub = b.view((rows.start, rows.start), (rows.len(), rows.len())).into_owned();
                if family.field() == Field::Real {
                    sub.iter_mut().for_each(|z| z.im = 0.0);
                }
                Matrix::from_inner(sub)
            })
            .collect();
        MatrixFamily::new(family.field(), blocks)
    };
    let upper = take(0..dv)?;
    let lower = take(dv..d)?;
    let (t_upper, mut blocks) = split(&upper, scale, opts)?;
    let (t_lower, lower_blocks) = split(&lower, scale, opts)?;
    blocks.extend(lower_blocks);

    let mut inner = DMatrix::<Scalar>::zeros(d, d);
    inner.view_mut((0, 0), (dv, dv)).copy_from(&t_upper);
    inner.view_mut((dv, dv), (d - dv, d - dv)).copy_from(&t_lower);
    Ok((q * inner, blocks))
}

/// Block upper-triangularizes the family by recursive invariant-subspace
/// splitting. Blocks are ordered as produced (invariant subspace first).
pub fn block_triangularize(family: &MatrixFamily, opts: &SearchOptions) -> Result<BlockDecomposition> {
    let scale = family.matrices().iter().map(Matrix::op_norm).fold(0.0, f64::max);
    let (t, raw) = split(family, scale, opts)?;
    let t = Matrix::from_inner(t);
    let t_adj = t.adjoint();
    let block_sizes: Vec<usize> = raw.iter().map(|b| b.size).collect();
    let offsets: Vec<usize> = block_sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();

    let mut residual = 0.0f64;
    let mut conjugated = Vec::with_capacity(family.len());
    for m in family.matrices() {
        let mut a = t_adj.mul(m).mul(&t).into_inner();
        if family.field() == Field::Real {
            a.iter_mut().for_each(|z| z.im = 0.0);
        }
        let norm = m.op_norm();
        for (j, (&oj, &sj)) in offsets.iter().zip(&block_sizes).enumerate() {
            for (&ok, &sk) in offsets.iter().zip(&block_sizes).take(j) {
                let mut view = a.view_mut((oj, ok), (sj, sk));
                let worst = view.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if worst > 0.0 {
                    residual = residual.max(worst / norm.max(f64::MIN_POSITIVE));
                }
                view.fill(Scalar::new(0.0, 0.0));
            }
            if raw[j].zero {
                a.view_mut((oj, oj), (sj, sj)).fill(Scalar::new(0.0, 0.0));
            }
        }
        conjugated.push(Matrix::from_inner(a));
    }
    if residual > WITNESS_TOLERANCE {
        return Err(Error::NumericalFailure { what: "block triangularization residual".into(), residual });
    }

    let diagonal_blocks = offsets
        .iter()
        .zip(&block_sizes)
        .map(|(&o, &s)| MatrixFamily::new(family.field(), conjugated.iter().map(|a| a.block(o..o + s, o..o + s)).collect()))
        .collect::<Result<Vec<_>>>()?;

    let lambda = raw
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.zero && b.certificate.as_ref().is_some_and(|c| c.is_irreducible()))
        .map(|(j, _)| j)
        .collect();

    let sv = t.singular_values();
    let condition_number_t = sv[0] / sv[sv.len() - 1];
    let mut warnings = Vec::new();
    if condition_number_t > CONDITION_WARNING {
        warnings.push(format!("conjugator condition number {condition_number_t:e} exceeds {CONDITION_WARNING:e}"));
    }
    for (j, b) in raw.iter().enumerate() {
        if b.certificate.as_ref().is_some_and(|c| c.complex_reducible) {
            warnings.push(format!("block {} is irreducible over ℝ but reducible over ℂ", j + 1));
        }
    }

    Ok(BlockDecomposition {
        t,
        block_sizes,
        diagonal_blocks,
        lambda,
        certificates: raw.into_iter().map(|b| b.certificate).collect(),
        condition_number_t,
        residual,
        warnings,
        conjugated,
    })
}

/// Outcome of [`is_trivial`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrivialityReport {
    pub trivial: bool,
    /// Number of diagonal blocks `t`.
    pub blocks: usize,
    /// For trivial families: whether every product of length `t + 1` vanished.
    pub products_vanish: Option<bool>,
    /// For trivial families: the shortest length at which every product vanishes.
    pub vanishing_length: Option<usize>,
    /// For non-trivial families: a word with nonzero product for each length `1..=t+1`.
    pub nonzero_witnesses: Vec<Word>,
}

fn product_is_zero(product: &Matrix, factor_norms: f64) -> bool {
    is_negligible(product.op_norm(), factor_norms)
}

/// Finds a word of exactly `len` symbols with nonzero product.
fn nonzero_word(family: &MatrixFamily, len: usize) -> Option<Word> {
    fn go(family: &MatrixFamily, len: usize, word: &mut Vec<usize>, prod: &Matrix, norms: f64) -> bool {
        if product_is_zero(prod, norms) {
            return false;
        }
        if word.len() == len {
            return true;
        }
        for (i, m) in family.matrices().iter().enumerate() {
            word.push(i);
            if go(family, len, word, &prod.mul(m), norms * m.op_norm()) {
                return true;
            }
            word.pop();
        }
        false
    }
    let mut word = Vec::new();
    let d = family.dim();
    go(family, len, &mut word, &Matrix::identity(d), 1.0).then(|| Word::from_indices(word).expect("len ≥ 1"))
}

/// Decides triviality (`Λ = ∅`) and cross-checks it against word products.
pub fn is_trivial(family: &MatrixFamily, opts: &SearchOptions) -> Result<TrivialityReport> {
    let dec = block_triangularize(family, opts)?;
    triviality(family, &dec)
}

/// Triviality report for an existing decomposition of `family`.
pub fn triviality(family: &MatrixFamily, dec: &BlockDecomposition) -> Result<TrivialityReport> {
    let t = dec.num_blocks();
    if dec.is_trivial() {
        check_budget(family.len(), t + 1, DEFAULT_BUDGET)?;
        // all_zero[m-1]: every product of length m vanishes
        let all_zero = crate::tree::fold_words(
            family,
            t + 1,
            || vec![true; t + 1],
            |acc: &mut Vec<bool>, node| {
                let norms: f64 = node.word.iter().map(|&s| family.matrix(s).op_norm()).product();
                let zero = product_is_zero(node.product, norms);
                acc[node.word.len() - 1] &= zero;
                !zero
            },
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x &= y);
                a
            },
        );
        let vanishing_length = all_zero.iter().position(|&z| z).map(|i| i + 1);
        Ok(TrivialityReport {
            trivial: true,
            blocks: t,
            products_vanish: Some(all_zero[t]),
            vanishing_length,
            nonzero_witnesses: Vec::new(),
        })
    } else {
        let witnesses = (1..=t + 1).filter_map(|len| nonzero_word(family, len)).collect();
        Ok(TrivialityReport { trivial: false, blocks: t, products_vanish: None, vanishing_length: None, nonzero_witnesses: witnesses })
    }
}

/// Empirical connecting-word constants: for sampled pairs `I, J` there is a
/// connector `K` with `‖M_{IKJ}‖ ≥ D ‖M_I‖ ‖M_J‖`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConnectingEstimate {
    /// Smallest connector length bound for which every sampled pair connects.
    pub k: usize,
    /// Minimum over pairs of the best ratio with `|K| ≤ k`.
    pub d: f64,
    /// Longest `|I|`, `|J|` sampled.
    pub depth: usize,
    pub norm: Norm,
    /// `exact_length[r]`: minimum over pairs of the best ratio with `|K| = r`
    /// exactly (0 when some pair fails at that length).
    pub exact_length: Vec<f64>,
    /// Whether `k = 0` (the empty connector) was reported.
    pub empty_connector: bool,
    /// Set when the constants come from a finite-depth search rather than an identity.
    pub estimated: bool,
}

impl ConnectingEstimate {
    /// Exact constants for families with `‖M_I M_J‖ = ‖M_I‖‖M_J‖`
    /// under the operator norm (scalar multiples of unitaries).
    pub fn conformal(dim: usize, norm: Norm) -> Self {
        let d = match norm {
            Norm::Operator => 1.0,
            Norm::Frobenius => 1.0 / (dim as f64).sqrt(),
        };
        ConnectingEstimate { k: 0, d, depth: 0, norm, exact_length: vec![d], empty_connector: true, estimated: false }
    }
}

/// Ceiling on the connector words examined per length.
const MAX_CONNECTORS: usize = 4096;

/// Estimates `(k, D)` by exhaustive search over pairs of words up to `depth`.
pub fn connecting_constant(family: &MatrixFamily, depth: usize, norm: Norm, opts: &SearchOptions) -> Result<ConnectingEstimate> {
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let cert = is_irreducible(family, opts)?;
    if !cert.is_irreducible() {
        return Err(Error::Precondition("connecting constants require an irreducible family".into()));
    }
    let ell = family.len();
    let total: u128 = (1..=depth).map(|m| crate::tree::word_count(ell, m)).sum();
    if total > 1 << 12 {
        return Err(Error::BudgetExceeded { requested: total * total, budget: 1 << 24 });
    }

    let mut words: Vec<(Matrix, f64)> = Vec::new();
    let mut level = vec![Matrix::identity(family.dim())];
    for _ in 0..depth {
        level = level.iter().flat_map(|p| family.matrices().iter().map(move |m| p.mul(m))).collect();
        words.extend(level.iter().map(|p| (p.clone(), norm.apply(p))));
    }
    let words: Vec<(Matrix, f64)> = words.into_iter().filter(|(_, n)| *n > 0.0).collect();
    if words.is_empty() {
        return Err(Error::SearchFailure("every sampled product vanishes".into()));
    }

    // best[pair] over |K| ≤ r, updated length by length.
    let pairs = words.len() * words.len();
    let mut best_up_to = vec![0.0f64; pairs];
    let mut exact_length = Vec::new();
    let mut connectors = vec![Matrix::identity(family.dim())];
    let mut found: Option<(usize, f64)> = None;
    let max_len = 2 * family.dim() * family.dim();
    for r in 0..=max_len {
        if r > 0 {
            connectors = connectors.iter().flat_map(|p| family.matrices().iter().map(move |m| p.mul(m))).collect();
            if connectors.len() > MAX_CONNECTORS {
                break;
            }
        }
        let mut exact_min = f64::INFINITY;
        for (a, (mi, ni)) in words.iter().enumerate() {
            let left: Vec<Matrix> = connectors.iter().map(|k| mi.mul(k)).collect();
            for (b, (mj, nj)) in words.iter().enumerate() {
                let best = left.iter().map(|l| norm.apply(&l.mul(mj))).fold(0.0, f64::max) / (ni * nj);
                let slot = &mut best_up_to[a * words.len() + b];
                *slot = slot.max(best);
                exact_min = exact_min.min(best);
            }
        }
        exact_length.push(if exact_min > 1e-12 { exact_min } else { 0.0 });
        let d_up_to = best_up_to.iter().copied().fold(f64::INFINITY, f64::min);
        if let Some((k, _)) = found {
            if r > k {
                break;
            }
        } else if d_up_to > 1e-12 {
            found = Some((r, d_up_to));
        }
    }
    let (k, d) = found.ok_or_else(|| Error::SearchFailure("no connector length bound found".into()))?;
    Ok(ConnectingEstimate { k, d, depth, norm, exact_length, empty_connector: k == 0, estimated: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shear_pair() -> MatrixFamily {
        MatrixFamily::real(&[&[&[1.0, 1.0], &[0.0, 1.0]], &[&[1.0, 0.0], &[1.0, 1.0]]])
    }

    fn diag_pair() -> MatrixFamily {
        MatrixFamily::diagonal(&[&[1.0, 2.0], &[3.0, 2.0]])
    }

    fn nilpotent_pair() -> MatrixFamily {
        MatrixFamily::real(&[&[&[0.0, 1.0], &[0.0, 0.0]], &[&[0.0, 2.0], &[0.0, 0.0]]])
    }

    fn rotation() -> MatrixFamily {
        MatrixFamily::real(&[&[&[0.0, -1.0], &[1.0, 0.0]]])
    }

    fn e(i: usize, d: usize) -> Vector {
        Vector::from_fn(d, |k, _| Scalar::new(if k == i { 1.0 } else { 0.0 }, 0.0))
    }

    fn spans_axis(basis: &[Vector], axis: usize) -> bool {
        basis.len() == 1 && (basis[0][axis].norm() - 1.0).abs() < 1e-10
    }

    #[test]
    fn shear_pair_is_irreducible() {
        // The only eigenlines are span{e1} for the first and span{e2} for the second.
        let fam = shear_pair();
        for axis in 0..2 {
            assert!(invariance_residual(&fam, &[e(axis, 2)]) > 0.5);
        }
        let cert = is_irreducible(&fam, &SearchOptions::default()).unwrap();
        assert!(cert.is_irreducible());
        assert_eq!(cert.witness, Witness::AlgebraDimension(4));
    }

    #[test]
    fn diagonal_pair_is_reducible() {
        let cert = is_irreducible(&diag_pair(), &SearchOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Reducible);
        let v = cert.subspace().unwrap();
        assert!(spans_axis(v, 0) || spans_axis(v, 1));
        assert!(invariance_residual(&diag_pair(), v) <= WITNESS_TOLERANCE);
    }

    #[test]
    fn rotation_depends_on_field() {
        let real = is_irreducible(&rotation(), &SearchOptions::default()).unwrap();
        assert!(real.is_irreducible());
        assert!(real.complex_reducible);

        let complex = rotation().with_field(Field::Complex).unwrap();
        let cert = is_irreducible(&complex, &SearchOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Reducible);
        let v = cert.subspace().unwrap();
        assert_eq!(v.len(), 1);
        // eigenlines are span{(1, ±i)}
        let ratio = v[0][1] / v[0][0];
        assert!((ratio.norm() - 1.0).abs() < 1e-10 && ratio.re.abs() < 1e-10);
        assert!(invariance_residual(&complex, v) <= WITNESS_TOLERANCE);
    }

    #[test]
    fn find_invariant_subspace_examples() {
        let opts = SearchOptions::default();
        let v = find_invariant_subspace(&diag_pair(), &opts).unwrap();
        assert!(spans_axis(&v, 0) || spans_axis(&v, 1));

        let v = find_invariant_subspace(&nilpotent_pair(), &opts).unwrap();
        assert!(spans_axis(&v, 0));

        let id = MatrixFamily::diagonal(&[&[1.0, 1.0]]);
        let v = find_invariant_subspace(&id, &opts).unwrap();
        assert_eq!(v.len(), 1);

        assert!(find_invariant_subspace(&shear_pair(), &opts).is_none());
    }

    #[test]
    fn block_triangularize_diagonal_pair() {
        let dec = block_triangularize(&diag_pair(), &SearchOptions::default()).unwrap();
        assert_eq!(dec.block_sizes, vec![1, 1]);
        assert_eq!(dec.lambda, vec![0, 1]);
        let mut entries: Vec<Vec<f64>> = dec
            .diagonal_blocks
            .iter()
            .map(|f| f.matrices().iter().map(|m| m.get(0, 0).re.abs()).collect())
            .collect();
        entries.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(entries, vec![vec![1.0, 3.0], vec![2.0, 2.0]]);
        for i in 0..2 {
            assert!(dec.reconstruct(i).max_abs_diff(diag_pair().matrix(i)) < 1e-12);
        }
    }

    #[test]
    fn block_triangularize_irreducible_pair() {
        let dec = block_triangularize(&shear_pair(), &SearchOptions::default()).unwrap();
        assert_eq!(dec.block_sizes, vec![2]);
        assert_eq!(dec.lambda, vec![0]);
        assert!(dec.t.max_abs_diff(&Matrix::identity(2)) == 0.0);
    }

    #[test]
    fn block_triangularize_trivial_pair() {
        let dec = block_triangularize(&nilpotent_pair(), &SearchOptions::default()).unwrap();
        assert_eq!(dec.block_sizes, vec![1, 1]);
        assert!(dec.lambda.is_empty());
        assert!(dec.diagonal_blocks.iter().all(|f| f.matrices().iter().all(Matrix::is_zero)));
        assert_eq!(dec.lambda_label(), "∅");
    }

    #[test]
    fn zero_family_is_a_single_zero_block() {
        let zero = MatrixFamily::new(Field::Real, vec![Matrix::zeros(3, 3)]).unwrap();
        let dec = block_triangularize(&zero, &SearchOptions::default()).unwrap();
        assert_eq!(dec.block_sizes, vec![3]);
        assert!(dec.lambda.is_empty());
    }

    #[test]
    fn triviality_reports() {
        let opts = SearchOptions::default();
        let r = is_trivial(&nilpotent_pair(), &opts).unwrap();
        assert!(r.trivial);
        assert_eq!(r.products_vanish, Some(true));
        assert_eq!(r.vanishing_length, Some(2));

        let r = is_trivial(&diag_pair(), &opts).unwrap();
        assert!(!r.trivial);
        assert_eq!(r.nonzero_witnesses.len(), r.blocks + 1);

        let r = is_trivial(&MatrixFamily::diagonal(&[&[1.0, 1.0, 1.0]]), &opts).unwrap();
        assert!(!r.trivial);
    }

    #[test]
    fn connecting_constant_examples() {
        let opts = SearchOptions::default();
        let scalar = MatrixFamily::diagonal(&[&[2.0]]);
        let est = connecting_constant(&scalar, 2, Norm::Operator, &opts).unwrap();
        assert_eq!((est.k, est.d), (0, 1.0));
        assert!(est.empty_connector);

        let est = connecting_constant(&shear_pair(), 4, Norm::Operator, &opts).unwrap();
        assert!(est.d > 0.0);
        assert!(est.estimated);

        assert!(matches!(
            connecting_constant(&diag_pair(), 2, Norm::Operator, &opts),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn connecting_constant_matches_brute_force() {
        // Independent recomputation of the exact-length constants at depth 3.
        let fam = shear_pair();
        let est = connecting_constant(&fam, 3, Norm::Operator, &SearchOptions::default()).unwrap();
        let words: Vec<Word> = (1..=3)
            .flat_map(|len| (0..2usize.pow(len as u32)).map(move |r| Word::from_rank(r, len, 2)))
            .collect();
        let brute = |connectors: &[Vec<usize>]| {
            let mut d = f64::INFINITY;
            for i in &words {
                for j in &words {
                    let ni = fam.word_product(i).unwrap().op_norm();
                    let nj = fam.word_product(j).unwrap().op_norm();
                    let best = connectors
                        .iter()
                        .map(|k| {
                            let mut w = i.indices().to_vec();
                            w.extend(k);
                            w.extend(j.indices());
                            fam.word_product(&Word::from_indices(w).unwrap()).unwrap().op_norm()
                        })
                        .fold(0.0, f64::max);
                    d = d.min(best / (ni * nj));
                }
            }
            d
        };
        assert_eq!(est.k, 0);
        assert!((est.d - brute(&[vec![]])).abs() < 1e-12);
        assert!((est.exact_length[0] - est.d).abs() < 1e-15);
        assert!((est.exact_length[1] - brute(&[vec![0], vec![1]])).abs() < 1e-12);
    }
}
