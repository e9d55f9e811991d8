//! Dense matrix kernel over ℝ or ℂ.
//!
//! Every matrix is stored as complex entries; a [`MatrixFamily`] tagged
//! [`Field::Real`] guarantees that all imaginary parts are exactly zero.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Scalar = Complex64;

/// Relative threshold under which a singular value counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;

/// Deflation tolerances tried in turn by the Schur eigenvalue solver.
const SCHUR_EPS: [f64; 3] = [4.0 * f64::EPSILON, 64.0 * f64::EPSILON, 1024.0 * f64::EPSILON];

/// Returns `true` when `sigma` is numerically zero relative to `sigma_max`.
pub fn is_negligible(sigma: f64, sigma_max: f64) -> bool {
    sigma <= ZERO_THRESHOLD * sigma_max.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// Matrix norm used in partition sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Operator,
    Frobenius,
}

impl Norm {
    pub fn apply(self, m: &Matrix) -> f64 {
        match self {
            Norm::Operator => m.op_norm(),
            Norm::Frobenius => m.frobenius_norm(),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Operator => f.write_str("operator"),
            Norm::Frobenius => f.write_str("frobenius"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "operator" | "op" | "spectral" => Ok(Norm::Operator),
            "frobenius" | "fro" => Ok(Norm::Frobenius),
            other => Err(Error::invalid(format!("unknown norm `{other}`"))),
        }
    }
}

/// A dense matrix with finite complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(DMatrix<Scalar>);

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Scalar>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Matrix(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    /// Builds a real matrix from rows. Panics on ragged or non-finite input;
    /// intended for literals.
    pub fn real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Scalar::new(x, 0.0)))
            .collect();
        Self::from_row_major(r, c, entries).expect("valid real matrix literal")
    }

    /// Builds a complex matrix from rows of `(re, im)` pairs.
    pub fn complex(rows: &[&[(f64, f64)]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&(re, im)| Scalar::new(re, im)))
            .collect();
        Self::from_row_major(r, c, entries).expect("valid complex matrix literal")
    }

    pub fn identity(d: usize) -> Self {
        Matrix(DMatrix::identity(d, d))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix(DMatrix::zeros(rows, cols))
    }

    pub fn diag(values: &[f64]) -> Self {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| Scalar::new(x, 0.0)));
        Matrix(DMatrix::from_diagonal(&v))
    }

    pub fn scaled_identity(d: usize, c: f64) -> Self {
        Matrix(DMatrix::identity(d, d) * Scalar::new(c, 0.0))
    }

    pub fn from_inner(m: DMatrix<Scalar>) -> Self {
        Matrix(m)
    }

    pub fn inner(&self) -> &DMatrix<Scalar> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Scalar> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.0[(i, j)]
    }

    /// Row-major entries.
    pub fn entries(&self) -> Vec<Scalar> {
        (0..self.rows())
            .flat_map(|i| (0..self.cols()).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    /// `true` when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `true` when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols(), other.rows(), "incompatible matrix product");
        Matrix(&self.0 * &other.0)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix(&self.0 * Scalar::new(c, 0.0))
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix(self.0.adjoint())
    }

    pub fn conjugate(&self) -> Matrix {
        Matrix(self.0.map(|z| z.conj()))
    }

    pub fn try_inverse(&self) -> Option<Matrix> {
        self.0.clone().try_inverse().map(Matrix)
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        Matrix(self.0.kronecker(&other.0))
    }

    pub fn determinant(&self) -> Scalar {
        assert!(self.is_square(), "determinant of a non-square matrix");
        self.0.determinant()
    }

    /// Copies the block with the given row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        Matrix(self.0.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator 2-norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        match (self.rows(), self.cols()) {
            (1, 1) => self.0[(0, 0)].norm(),
            (2, 2) => singular_values_2x2(&self.0).0,
            _ => self.singular_values()[0],
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Singular values in non-increasing order; length `min(rows, cols)`.
    pub fn singular_values(&self) -> Vec<f64> {
        match (self.rows(), self.cols()) {
            (1, 1) => vec![self.0[(0, 0)].norm()],
            (2, 2) => {
                let (a, b) = singular_values_2x2(&self.0);
                vec![a, b]
            }
            _ => {
                let mut s: Vec<f64> = self.0.clone().svd(false, false).singular_values.iter().copied().collect();
                s.sort_by(|a, b| b.total_cmp(a));
                s
            }
        }
    }

    /// Eigenvalues of a square matrix (unordered).
    pub fn eigenvalues(&self) -> Result<Vec<Scalar>> {
        if !self.is_square() {
            return Err(Error::invalid("eigenvalues of a non-square matrix"));
        }
        let m = &self.0;
        match self.rows() {
            1 => Ok(vec![m[(0, 0)]]),
            2 => {
                let tr = m[(0, 0)] + m[(1, 1)];
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                let half = tr * 0.5;
                let disc = (half * half - det).sqrt();
                // Larger-modulus root first, the other from the product to avoid cancellation.
                let big = if (half + disc).norm() >= (half - disc).norm() { half + disc } else { half - disc };
                let small = if big.norm() > 0.0 { det / big } else { Scalar::new(0.0, 0.0) };
                Ok(vec![big, small])
            }
            d => {
                let scale = self.max_abs_entry();
                if scale == 0.0 {
                    return Ok(vec![Scalar::new(0.0, 0.0); d]);
                }
                let normalized = m.map(|z| z / scale);
                let real = self.is_real().then(|| normalized.map(|z| z.re));
                let eig = SCHUR_EPS.iter().find_map(|&eps| {
                    let from_real = real.as_ref().and_then(|r| {
                        Schur::try_new(r.clone(), eps, 10_000)
                            .map(|s| s.complex_eigenvalues().iter().copied().collect::<Vec<_>>())
                    });
                    from_real.or_else(|| {
                        Schur::try_new(normalized.clone(), eps, 10_000).map(|s| {
                            let (_, t) = s.unpack();
                            (0..d).map(|i| t[(i, i)]).collect()
                        })
                    })
                });
                let eig = eig.ok_or_else(|| Error::NumericalFailure {
                    what: "Schur iteration did not converge".into(),
                    residual: f64::NAN,
                })?;
                Ok(eig.into_iter().map(|z| z * scale).collect())
            }
        }
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// The `k`-th exterior power: the matrix of `k×k` minors, rows and columns
    /// indexed by lexicographically ordered index subsets.
    pub fn exterior_power(&self, k: usize) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::invalid("exterior power of a non-square matrix"));
        }
        let d = self.rows();
        if k == 0 || k > d {
            return Err(Error::invalid(format!("exterior power degree {k} outside 1..={d}")));
        }
        let subsets: Vec<Vec<usize>> = (0..d).combinations(k).collect();
        let n = subsets.len();
        let mut out = DMatrix::zeros(n, n);
        for (a, rows) in subsets.iter().enumerate() {
            for (b, cols) in subsets.iter().enumerate() {
                let minor = DMatrix::from_fn(k, k, |i, j| self.0[(rows[i], cols[j])]);
                out[(a, b)] = minor.determinant();
            }
        }
        Ok(Matrix(out))
    }
}

/// Singular values of a 2×2 matrix from its Frobenius norm and determinant.
fn singular_values_2x2(m: &DMatrix<Scalar>) -> (f64, f64) {
    let s: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let plus = (s + 2.0 * det).max(0.0).sqrt();
    let minus = (s - 2.0 * det).max(0.0).sqrt();
    let s1 = 0.5 * (plus + minus);
    let s2 = if s1 > 0.0 { (det / s1).min(s1) } else { 0.0 };
    (s1, s2)
}

/// A word over the alphabet `{1, …, ℓ}`, stored as zero-based symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    /// Builds a word from zero-based symbol indices.
    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("words must be non-empty"));
        }
        Ok(Word(indices))
    }

    /// Builds a word from one-based symbols, as written in the literature.
    pub fn from_symbols(symbols: &[usize]) -> Result<Self> {
        if symbols.contains(&0) {
            return Err(Error::invalid("word symbols are one-based"));
        }
        Self::from_indices(symbols.iter().map(|s| s - 1).collect())
    }

    /// The word of length `len` whose lexicographic rank is `index`.
    pub fn from_rank(mut index: usize, len: usize, ell: usize) -> Self {
        let mut v = vec![0; len];
        for slot in v.iter_mut().rev() {
            *slot = index % ell;
            index /= ell;
        }
        Word(v)
    }

    /// Lexicographic rank among words of the same length over `ell` symbols.
    pub fn rank(&self, ell: usize) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * ell + s)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks every symbol against an alphabet of size `ell`.
    pub fn check_alphabet(&self, ell: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= ell) {
            Some(&s) => Err(Error::invalid(format!("symbol {} out of range 1..={ell}", s + 1))),
            None => Ok(()),
        }
    }

    /// Renders the word with one-based symbols: digits when every symbol is a
    /// single digit, comma separated otherwise.
    pub fn render(&self, ell: usize) -> String {
        if ell <= 9 {
            self.0.iter().map(|s| char::from(b'1' + *s as u8)).collect()
        } else {
            self.0.iter().map(|s| (s + 1).to_string()).join(",")
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ell = self.0.iter().max().map_or(1, |m| m + 1);
        f.write_str(&self.render(ell))
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses `1121` or `1,12,3` (one-based).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let symbols: Vec<usize> = if s.contains(',') {
            s.split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad word symbol `{t}`"))))
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::invalid(format!("bad word `{s}`"))))
                .collect::<Result<_>>()?
        };
        Word::from_symbols(&symbols)
    }
}

/// A finite family `{M_1, …, M_ℓ}` of `d×d` matrices over a fixed field.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFamily {
    field: Field,
    dim: usize,
    matrices: Vec<Matrix>,
}

impl MatrixFamily {
    pub fn new(field: Field, matrices: Vec<Matrix>) -> Result<Self> {
        let first = matrices.first().ok_or_else(|| Error::invalid("a family needs at least one matrix"))?;
        let dim = first.rows();
        for (i, m) in matrices.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::invalid(format!(
                    "matrix {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.rows(),
                    m.cols()
                )));
            }
            if field == Field::Real && !m.is_real() {
                return Err(Error::invalid(format!("matrix {} has a non-zero imaginary part in a real family", i + 1)));
            }
        }
        Ok(MatrixFamily { field, dim, matrices })
    }

    /// Real family from row literals.
    pub fn real(matrices: &[&[&[f64]]]) -> Self {
        Self::new(Field::Real, matrices.iter().map(|rows| Matrix::real(rows)).collect()).expect("valid real family")
    }

    /// Real family of diagonal matrices.
    pub fn diagonal(diagonals: &[&[f64]]) -> Self {
        Self::new(Field::Real, diagonals.iter().map(|d| Matrix::diag(d)).collect()).expect("valid diagonal family")
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Alphabet size ℓ.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &Matrix {
        &self.matrices[i]
    }

    /// Same matrices, reinterpreted over another field.
    pub fn with_field(&self, field: Field) -> Result<Self> {
        Self::new(field, self.matrices.clone())
    }

    /// Applies `f` to each matrix, keeping the field tag.
    pub fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> Result<Self> {
        Self::new(self.field, self.matrices.iter().map(f).collect())
    }

    /// The family `{G⁻¹ M_i G}`.
    pub fn conjugate_by(&self, g: &Matrix) -> Result<Self> {
        let inv = g.try_inverse().ok_or_else(|| Error::invalid("conjugator is singular"))?;
        let field = if g.is_real() { self.field } else { Field::Complex };
        Self::new(field, self.matrices.iter().map(|m| inv.mul(m).mul(g)).collect())
    }

    /// Left-to-right product `M_{j_1} ⋯ M_{j_n}`.
    pub fn word_product(&self, word: &Word) -> Result<Matrix> {
        word.check_alphabet(self.len())?;
        let mut it = word.indices().iter();
        let first = it.next().ok_or_else(|| Error::invalid("empty word"))?;
        Ok(it.fold(self.matrices[*first].clone(), |acc, &s| acc.mul(&self.matrices[s])))
    }

    /// `true` when every member is a scalar multiple of a unitary matrix
    /// (all singular values equal). Such families satisfy `‖M_I M_J‖ = ‖M_I‖‖M_J‖`.
    pub fn is_conformal(&self) -> bool {
        self.matrices.iter().all(|m| {
            let s = m.singular_values();
            let top = s[0];
            s.iter().all(|&x| (top - x).abs() <= 1e-12 * top.max(f64::MIN_POSITIVE))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn word_product_examples() {
        let ids = MatrixFamily::diagonal(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let w: Word = "1212".parse().unwrap();
        assert_eq!(ids.word_product(&w).unwrap(), Matrix::identity(2));

        let nil = MatrixFamily::real(&[&[&[0.0, 1.0], &[0.0, 0.0]], &[&[0.0, 2.0], &[0.0, 0.0]]]);
        assert!(nil.word_product(&"12".parse().unwrap()).unwrap().is_zero());

        let diag = MatrixFamily::diagonal(&[&[1.0, 2.0], &[3.0, 2.0]]);
        assert_eq!(diag.word_product(&"122".parse().unwrap()).unwrap(), Matrix::diag(&[9.0, 8.0]));
    }

    #[test]
    fn word_product_rejects_out_of_range_symbol() {
        let fam = MatrixFamily::diagonal(&[&[1.0], &[2.0]]);
        let w: Word = "13".parse().unwrap();
        assert!(matches!(fam.word_product(&w), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn norms() {
        assert!((Matrix::identity(3).op_norm() - 1.0).abs() < TOL);
        assert!((Matrix::diag(&[3.0, 1.0]).op_norm() - 3.0).abs() < TOL);
        assert!((Matrix::real(&[&[0.0, 2.0], &[0.0, 0.0]]).op_norm() - 2.0).abs() < TOL);
        assert_eq!(Matrix::zeros(3, 3).op_norm(), 0.0);

        assert!((Matrix::identity(2).frobenius_norm() - 2f64.sqrt()).abs() < TOL);
        assert_eq!(Matrix::zeros(2, 2).frobenius_norm(), 0.0);
        assert!((Matrix::real(&[&[1.0, 1.0], &[0.0, 1.0]]).frobenius_norm() - 3f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn spectral_radius_examples() {
        assert!((Matrix::real(&[&[1.0, 1.0], &[0.0, 1.0]]).spectral_radius().unwrap() - 1.0).abs() < TOL);
        assert!((Matrix::diag(&[1.0, 2.0]).spectral_radius().unwrap() - 2.0).abs() < TOL);
        assert!((Matrix::real(&[&[0.0, -1.0], &[1.0, 0.0]]).spectral_radius().unwrap() - 1.0).abs() < TOL);
        let m = Matrix::real(&[&[2.0, 1.0, 0.0], &[0.0, -3.0, 1.0], &[0.0, 0.0, 1.0]]);
        assert!((m.spectral_radius().unwrap() - 3.0).abs() < 1e-10);
        assert!(Matrix::zeros(2, 3).spectral_radius().is_err());
    }

    #[test]
    fn singular_value_examples() {
        let s = Matrix::diag(&[3.0, 2.0, 1.0]).singular_values();
        for (a, b) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < TOL);
        }
        assert_eq!(Matrix::zeros(2, 2).singular_values(), vec![0.0, 0.0]);
        // eigenvalues of MᵀM are (3 ± √5)/2
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let s = Matrix::real(&[&[1.0, 1.0], &[0.0, 1.0]]).singular_values();
        assert!((s[0] - golden).abs() < TOL);
        assert!((s[1] - 1.0 / golden).abs() < TOL);
    }

    #[test]
    fn exterior_power_examples() {
        let m = Matrix::real(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let e = m.exterior_power(2).unwrap();
        assert_eq!((e.rows(), e.cols()), (1, 1));
        assert!((e.get(0, 0).re + 2.0).abs() < TOL);

        let e = Matrix::diag(&[3.0, 2.0, 1.0]).exterior_power(2).unwrap();
        assert!(e.max_abs_diff(&Matrix::diag(&[6.0, 3.0, 2.0])) < TOL);

        for k in 1..=4 {
            let e = Matrix::identity(4).exterior_power(k).unwrap();
            let n = e.rows();
            assert!(e.max_abs_diff(&Matrix::identity(n)) < TOL);
        }
        assert!(Matrix::identity(3).exterior_power(0).is_err());
        assert!(Matrix::identity(3).exterior_power(4).is_err());
    }

    #[test]
    fn family_validation() {
        let complex = Matrix::complex(&[&[(0.0, 1.0)]]);
        assert!(MatrixFamily::new(Field::Real, vec![complex.clone()]).is_err());
        assert!(MatrixFamily::new(Field::Complex, vec![complex]).is_ok());
        assert!(MatrixFamily::new(Field::Real, vec![]).is_err());
        assert!(MatrixFamily::new(Field::Real, vec![Matrix::identity(2), Matrix::identity(3)]).is_err());
        assert!(Matrix::from_row_major(1, 1, vec![Scalar::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn word_parsing_and_rendering() {
        let w: Word = "1121".parse().unwrap();
        assert_eq!(w.indices(), &[0, 0, 1, 0]);
        assert_eq!(w.render(2), "1121");
        let w: Word = "1,12,3".parse().unwrap();
        assert_eq!(w.render(12), "1,12,3");
        assert!("".parse::<Word>().is_err());
        assert!("102".parse::<Word>().is_err());
        assert_eq!(Word::from_rank(w.rank(12), 3, 12), w);
    }

    #[test]
    fn conformal_detection() {
        assert!(MatrixFamily::diagonal(&[&[1.0], &[3.0]]).is_conformal());
        assert!(MatrixFamily::real(&[&[&[0.0, -2.0], &[2.0, 0.0]]]).is_conformal());
        assert!(!MatrixFamily::diagonal(&[&[1.0, 2.0]]).is_conformal());
    }
}
