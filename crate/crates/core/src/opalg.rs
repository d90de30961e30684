//! Finite-dimensional operator-algebra core.
//!
//! Elements of `M_n(C)` are carried by [`CMatrix`]. On top of it this module
//! provides the spectral primitives used everywhere else in the crate
//! (Hermitian eigenvalues, PSD square roots, the PSD order gap, Schatten
//! norms), the completely positive unital maps of [`CpuMap`] and the
//! operator-valued Hilbert-module inner product
//!
//! ```text
//! <sum a_j (x) b_j, sum a'_k (x) b'_k>_Phi = sum_{j,k} b_j^* Phi(a_j^* a'_k) b'_k .
//! ```

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on `max |A - A*|` for a matrix built with a Hermitian hint.
pub const HERMITIAN_HINT_TOL: f64 = 1e-12;

/// Default tolerance for PSD assertions.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Relative tolerance used when a spectral routine requires a Hermitian input.
const HERMITIAN_INPUT_TOL: f64 = 1e-9;

/// Dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    m: DMatrix<C64>,
    hermitian_hint: Option<bool>,
}

impl CMatrix {
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParams("matrix dimension must be positive".into()));
        }
        Ok(Self {
            m,
            hermitian_hint: None,
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self {
            m: DMatrix::from_fn(n, n, |i, j| f(i, j)),
            hermitian_hint: None,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::from_fn(n, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        a.hermitian_hint = Some(true);
        a
    }

    /// Matrix unit with a single 1 at `(i, j)`, zero-based.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        Self::from_fn(n, |r, c| C64::new(if r == i && c == j { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut a = Self::from_fn(d.len(), |i, j| C64::new(if i == j { d[i] } else { 0.0 }, 0.0));
        a.hermitian_hint = Some(true);
        a
    }

    pub fn diag(d: &[C64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let im: Vec<Vec<f64>> = rows.iter().map(|r| vec![0.0; r.len()]).collect();
        Self::from_rows(rows, &im)
    }

    /// Builds a matrix from row-major real and imaginary parts.
    pub fn from_rows(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if n == 0 {
            return Err(Error::InvalidParams("matrix dimension must be positive".into()));
        }
        if im.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: im.len() });
        }
        for row in re.iter().chain(im.iter()) {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        Ok(Self::from_fn(n, |i, j| C64::new(re[i][j], im[i][j])))
    }

    /// Marks the matrix Hermitian after checking `max |A - A*| <= 1e-12`.
    pub fn with_hermitian_hint(mut self) -> Result<Self> {
        let d = self.hermitian_defect();
        if d > HERMITIAN_HINT_TOL {
            return Err(Error::NotHermitian(d));
        }
        self.hermitian_hint = Some(true);
        Ok(self)
    }

    pub fn hermitian_hint(&self) -> Option<bool> {
        self.hermitian_hint
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.hermitian_hint = None;
        self.m[(i, j)] = z;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    /// `A* A`, the column square.
    pub fn abs_sq(&self) -> Self {
        Self {
            m: complex_gemm(&self.m.adjoint(), &self.m),
            hermitian_hint: None,
        }
    }

    /// `A A*`, the row square.
    pub fn abs_sq_row(&self) -> Self {
        Self {
            m: complex_gemm(&self.m, &self.m.adjoint()),
            hermitian_hint: None,
        }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            m: &self.m * c,
            hermitian_hint: None,
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            m: &self.m * C64::new(c, 0.0),
            hermitian_hint: if c.is_finite() { self.hermitian_hint } else { None },
        }
    }

    /// Entrywise (Schur) product.
    pub fn hadamard(&self, other: &Self) -> Self {
        Self {
            m: self.m.component_mul(&other.m),
            hermitian_hint: None,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let m = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        Self {
            m,
            hermitian_hint: Some(true),
        }
    }

    /// Frobenius norm squared, `tr(A* A)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Matrix with independent standard complex Gaussian entries (`E|z|^2 = 1`).
    pub fn random_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(s * re, s * im)
        })
    }

    pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::random_gaussian(n, rng).hermitian_part()
    }

    pub fn to_json(&self) -> MatrixJson {
        let n = self.dim();
        MatrixJson {
            n,
            re: (0..n).map(|i| (0..n).map(|j| self.m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        let a = Self::from_rows(&j.re, &j.im)?;
        if a.dim() != j.n {
            return Err(Error::DimensionMismatch { expected: j.n, got: a.dim() });
        }
        Ok(a)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: MatrixJson = serde_json::from_str(s)?;
        Self::from_json(&j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("matrix serialization")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            m: &self.m + &rhs.m,
            hermitian_hint: None,
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            m: &self.m - &rhs.m,
            hermitian_hint: None,
        }
    }
}

/// Complex product through four real products, which nalgebra hands to an
/// optimized real kernel.
fn complex_gemm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    if a.nrows() < 8 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            m: complex_gemm(&self.m, &rhs.m),
            hermitian_hint: None,
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix {
            m: -&self.m,
            hermitian_hint: self.hermitian_hint,
        }
    }
}

/// JSON wire form of a matrix: `{"n": int, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMatrix::from_json(&j).map_err(serde::de::Error::custom)
    }
}

fn require_hermitian(a: &CMatrix) -> Result<CMatrix> {
    if a.hermitian_hint == Some(true) {
        return Ok(a.hermitian_part());
    }
    let d = a.hermitian_defect();
    if d > HERMITIAN_INPUT_TOL * (1.0 + a.max_abs()) {
        return Err(Error::NotHermitian(d));
    }
    Ok(a.hermitian_part())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let h = require_hermitian(a)?;
    let ev = h.m.symmetric_eigenvalues();
    let mut v: Vec<f64> = ev.iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    Ok(v)
}

/// `(min, max)` eigenvalue of a Hermitian matrix.
pub fn spectral_bounds(a: &CMatrix) -> Result<(f64, f64)> {
    let v = hermitian_eigenvalues(a)?;
    Ok((v[0], v[v.len() - 1]))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn real_symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Hermitian square root of a PSD matrix.
///
/// Eigenvalues in `[-tol, 0)` are clamped to zero; anything below `-tol` is
/// reported as [`Error::NegativeSpectrum`].
pub fn psd_sqrt(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let h = require_hermitian(a)?;
    let eig = h.m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NegativeSpectrum(min));
    }
    let n = h.dim();
    let q = &eig.eigenvectors;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut scaled = q.clone();
    for (k, r) in roots.iter().enumerate() {
        for i in 0..n {
            scaled[(i, k)] *= C64::new(*r, 0.0);
        }
    }
    let b = CMatrix {
        m: &scaled * q.adjoint(),
        hermitian_hint: None,
    };
    Ok(b.hermitian_part())
}

/// Minimum eigenvalue of `B - A`; `B >= A` at tolerance `tau` iff the result is `>= -tau`.
pub fn psd_order_gap(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    require_hermitian(a)?;
    require_hermitian(b)?;
    let d = b - a;
    Ok(hermitian_eigenvalues(&d)?[0])
}

/// Singular values, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Schatten `p`-norm from precomputed singular values. `p = f64::INFINITY` is the operator norm.
pub fn schatten_from_singular(s: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    let smax = s.iter().copied().fold(0.0, f64::max);
    if p.is_infinite() {
        return Ok(smax);
    }
    if smax == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = s.iter().map(|x| (x / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}

/// Schatten `p`-norm, `p in [1, inf]`.
pub fn norm(a: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    schatten_from_singular(&singular_values(a), p)
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMatrix) -> f64 {
    singular_values(a)[0]
}

/// Finite sum of elementary tensors `sum_j a_j (x) b_j`.
#[derive(Clone, Debug)]
pub struct TensorElement {
    terms: Vec<(CMatrix, CMatrix)>,
}

impl TensorElement {
    pub fn new(terms: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        let Some((a0, _)) = terms.first() else {
            return Err(Error::InvalidParams("tensor element needs at least one term".into()));
        };
        let n = a0.dim();
        for (a, b) in &terms {
            for m in [a, b] {
                if m.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn simple(a: CMatrix, b: CMatrix) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// `f (x) 1 - 1 (x) g`, the element whose module norm measures oscillation.
    pub fn oscillation(f: &CMatrix, g: &CMatrix) -> Result<Self> {
        let n = f.dim();
        Self::new(vec![
            (f.clone(), CMatrix::identity(n)),
            (CMatrix::identity(n), -g),
        ])
    }

    pub fn dim(&self) -> usize {
        self.terms[0].0.dim()
    }

    pub fn terms(&self) -> &[(CMatrix, CMatrix)] {
        &self.terms
    }

    /// Formal sum (concatenation of term lists).
    pub fn plus(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }
}

/// Completely positive unital map on `M_n`.
#[derive(Clone, Debug)]
pub enum CpuMap {
    /// Entrywise multiplier `A_{mk} -> symbol_{mk} A_{mk}`.
    Schur { symbol: CMatrix },
    /// Fourier multiplier on the cyclic group `Z_N`, acting on `M_N` through the
    /// circulant Schur symbol `symbol[(m - k) mod N]`.
    CyclicFourier { symbol: Vec<C64> },
    /// Integral kernel on a grid, acting on the diagonal:
    /// `Phi(A) = diag_i( sum_j K_ij w_j A_jj )`.
    GridKernel {
        nodes: Vec<f64>,
        weights: Vec<f64>,
        kernel: DMatrix<f64>,
    },
    /// `Phi(A) = (sum_i rho_i A_ii) I`.
    TraceLike { density: Vec<f64> },
    /// Applied left to right.
    Composite(Vec<CpuMap>),
}

impl CpuMap {
    pub fn schur(symbol: CMatrix) -> Self {
        CpuMap::Schur { symbol }
    }

    pub fn uniform_trace(n: usize) -> Self {
        CpuMap::TraceLike {
            density: vec![1.0 / n as f64; n],
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            CpuMap::Schur { symbol } => Some(symbol.dim()),
            CpuMap::CyclicFourier { symbol } => Some(symbol.len()),
            CpuMap::GridKernel { nodes, .. } => Some(nodes.len()),
            CpuMap::TraceLike { density } => Some(density.len()),
            CpuMap::Composite(maps) => maps.first().and_then(|m| m.dimension()),
        }
    }

    /// Random cpu map on `M_n`: a Schur multiplier with a normalized Gram symbol,
    /// a trace-like map, a stochastic diagonal kernel, or a composite of these.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let gram_schur = |rng: &mut R| {
            let rank = rng.random_range(1..=n);
            let vecs: Vec<Vec<C64>> = (0..n)
                .map(|_| {
                    let v: Vec<C64> = (0..rank)
                        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                        .collect();
                    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    v.into_iter().map(|z| z / nv).collect()
                })
                .collect();
            CpuMap::schur(Self::gram(&vecs))
        };
        let trace_like = |rng: &mut R| {
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = d.iter().sum();
            CpuMap::TraceLike {
                density: d.into_iter().map(|x| x / s).collect(),
            }
        };
        let kernel = |rng: &mut R| {
            let mut k = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(0.0..1.0));
            for i in 0..n {
                let s: f64 = k.row(i).iter().sum();
                k.row_mut(i).iter_mut().for_each(|x| *x /= s);
            }
            CpuMap::GridKernel {
                nodes: (0..n).map(|i| i as f64).collect(),
                weights: vec![1.0; n],
                kernel: k,
            }
        };
        match rng.random_range(0..4) {
            0 => gram_schur(rng),
            1 => trace_like(rng),
            2 => kernel(rng),
            _ => CpuMap::Composite(vec![gram_schur(rng), kernel(rng)]),
        }
    }

    fn gram(vecs: &[Vec<C64>]) -> CMatrix {
        CMatrix::from_fn(vecs.len(), |i, j| vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a.conj() * b).sum())
    }

    fn validate(&self) -> Result<()> {
        match self {
            CpuMap::GridKernel { nodes, weights, kernel } => {
                let n = nodes.len();
                if weights.len() != n || kernel.nrows() != n || kernel.ncols() != n {
                    return Err(Error::MalformedMap("grid kernel shape mismatch".into()));
                }
                Ok(())
            }
            CpuMap::Composite(maps) => {
                if maps.is_empty() {
                    return Err(Error::MalformedMap("empty composite".into()));
                }
                let n = maps[0].dimension();
                for m in maps {
                    m.validate()?;
                    if m.dimension() != n {
                        return Err(Error::MalformedMap("composite dimensions differ".into()));
                    }
                }
                Ok(())
            }
            CpuMap::CyclicFourier { symbol } if symbol.is_empty() => {
                Err(Error::MalformedMap("empty cyclic symbol".into()))
            }
            CpuMap::TraceLike { density } if density.is_empty() => {
                Err(Error::MalformedMap("empty density".into()))
            }
            _ => Ok(()),
        }
    }

    /// `max |Phi(1) - 1|` entrywise.
    pub fn unital_defect(&self) -> Result<f64> {
        let n = self
            .dimension()
            .ok_or_else(|| Error::MalformedMap("map without dimension".into()))?;
        let one = CMatrix::identity(n);
        Ok(apply_cpu(self, &one)?.max_abs_diff(&one))
    }

    /// Witness for complete positivity where it is decidable from the data:
    /// the minimum eigenvalue of the Schur (or circulant) symbol, the minimum
    /// kernel value, or the minimum density. Non-negative means CP.
    pub fn cp_witness(&self) -> Result<f64> {
        self.validate()?;
        match self {
            CpuMap::Schur { symbol } => Ok(hermitian_eigenvalues(symbol)?[0]),
            CpuMap::CyclicFourier { symbol } => {
                let n = symbol.len();
                let circ = CMatrix::from_fn(n, |m, k| symbol[(m + n - k) % n]);
                Ok(hermitian_eigenvalues(&circ)?[0])
            }
            CpuMap::GridKernel { kernel, weights, .. } => {
                let kmin = kernel.iter().copied().fold(f64::INFINITY, f64::min);
                let wmin = weights.iter().copied().fold(f64::INFINITY, f64::min);
                Ok(kmin.min(wmin))
            }
            CpuMap::TraceLike { density } => Ok(density.iter().copied().fold(f64::INFINITY, f64::min)),
            CpuMap::Composite(maps) => {
                let mut w = f64::INFINITY;
                for m in maps {
                    w = w.min(m.cp_witness()?);
                }
                Ok(w)
            }
        }
    }
}

/// Applies a cpu map to a matrix.
pub fn apply_cpu(phi: &CpuMap, a: &CMatrix) -> Result<CMatrix> {
    phi.validate()?;
    let n = a.dim();
    if let Some(d) = phi.dimension() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: d, got: n });
        }
    }
    match phi {
        CpuMap::Schur { symbol } => Ok(a.hadamard(symbol)),
        CpuMap::CyclicFourier { symbol } => Ok(CMatrix::from_fn(n, |m, k| symbol[(m + n - k) % n] * a.get(m, k))),
        CpuMap::GridKernel { weights, kernel, .. } => {
            let diag: Vec<C64> = (0..n)
                .map(|i| (0..n).map(|j| a.get(j, j) * (kernel[(i, j)] * weights[j])).sum())
                .collect();
            Ok(CMatrix::diag(&diag))
        }
        CpuMap::TraceLike { density } => {
            let s: C64 = (0..n).map(|i| a.get(i, i) * density[i]).sum();
            Ok(CMatrix::identity(n).scale(s))
        }
        CpuMap::Composite(maps) => {
            let mut x = a.clone();
            for m in maps {
                x = apply_cpu(m, &x)?;
            }
            Ok(x)
        }
    }
}

/// Hilbert-module inner product `<xi, xi>_Phi = sum_{j,k} b_j^* Phi(a_j^* a_k) b_k`.
pub fn module_inner_product(xi: &TensorElement, phi: &CpuMap) -> Result<CMatrix> {
    module_pairing(xi, xi, phi).map(|m| m.hermitian_part())
}

/// Sesquilinear pairing `<xi, eta>_Phi`.
pub fn module_pairing(xi: &TensorElement, eta: &TensorElement, phi: &CpuMap) -> Result<CMatrix> {
    let n = xi.dim();
    if eta.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: eta.dim() });
    }
    if let Some(d) = phi.dimension() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: d, got: n });
        }
    }
    let mut acc = CMatrix::zeros(n);
    for (aj, bj) in xi.terms() {
        let bj_star = bj.adjoint();
        let aj_star = aj.adjoint();
        for (ak, bk) in eta.terms() {
            let inner = apply_cpu(phi, &(&aj_star * ak))?;
            acc = &acc + &(&(&bj_star * &inner) * bk);
        }
    }
    Ok(acc)
}

/// Module norm `|| <xi, xi>_Phi ||^{1/2}`, using `||sqrt(P)|| = sqrt(||P||)` for PSD `P`.
pub fn module_norm(xi: &TensorElement, phi: &CpuMap) -> Result<f64> {
    let g = module_inner_product(xi, phi)?;
    let (_, max) = spectral_bounds(&g)?;
    Ok(max.max(0.0).sqrt())
}
