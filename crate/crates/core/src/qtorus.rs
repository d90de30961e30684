//! Lattice quantum tori.
//!
//! Elements are finitely supported twisted Fourier series
//! `f = sum_xi f(xi) lambda(xi)`, `xi in Z^n`, where `lambda(xi) = u_1^{xi_1} ... u_n^{xi_n}`
//! and the generators satisfy `u_j u_k = exp(2 pi i Theta_{jk}) u_k u_j`.
//! Reordering the product `lambda(xi) lambda(eta)` gives
//!
//! ```text
//! lambda(xi) lambda(eta) = phase(xi, eta) lambda(xi + eta),
//! phase(xi, eta) = exp(2 pi i sum_{k > j} Theta_{kj} xi_k eta_j).
//! ```
//!
//! The trace is the zeroth coefficient. Operator norms are approximated from
//! below by compressing left multiplication to a lattice box (the GNS box).

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bmo::{BmoReport, BmoSample, BmoSide, POSITIVITY_TOL};
use crate::error::{Error, Result};
use crate::metric::{ball_ft, MarkovMetricSpec, MetricVariant};
use crate::opalg::{hermitian_eigenvalues, singular_values, CMatrix, C64};
use crate::semigroup::TGrid;

pub type Lattice = Vec<i64>;

/// Dimension and the strict upper triangle `Theta_{jk}`, `j < k`, row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct TwistParams {
    n: usize,
    theta_upper: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ParamsJson {
    n: usize,
    theta_upper: Vec<f64>,
}

impl TryFrom<ParamsJson> for TwistParams {
    type Error = Error;
    fn try_from(p: ParamsJson) -> Result<Self> {
        TwistParams::new(p.n, p.theta_upper)
    }
}

impl From<TwistParams> for ParamsJson {
    fn from(p: TwistParams) -> Self {
        ParamsJson {
            n: p.n,
            theta_upper: p.theta_upper,
        }
    }
}

impl TwistParams {
    pub fn new(n: usize, theta_upper: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if theta_upper.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidParams(format!(
                "theta_upper has {} entries, expected {}",
                theta_upper.len(),
                n * (n - 1) / 2
            )));
        }
        if theta_upper.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("theta must be finite".into()));
        }
        Ok(TwistParams { n, theta_upper })
    }

    /// Two generators with `Theta_{12} = theta`.
    pub fn plane(theta: f64) -> Self {
        TwistParams {
            n: 2,
            theta_upper: vec![theta],
        }
    }

    /// The commutative torus.
    pub fn commutative(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n * n.saturating_sub(1) / 2])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta_upper(&self) -> &[f64] {
        &self.theta_upper
    }

    /// `Theta_{jk}`; antisymmetric by construction.
    pub fn theta(&self, j: usize, k: usize) -> f64 {
        use std::cmp::Ordering::*;
        match j.cmp(&k) {
            Equal => 0.0,
            Less => self.theta_upper[self.upper_index(j, k)],
            Greater => -self.theta_upper[self.upper_index(k, j)],
        }
    }

    fn upper_index(&self, j: usize, k: usize) -> usize {
        j * (2 * self.n - j - 1) / 2 + (k - j - 1)
    }

    /// `sum_{k > j} Theta_{kj} xi_k eta_j`.
    pub fn phase_exponent(&self, xi: &[i64], eta: &[i64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            if eta[j] == 0 {
                continue;
            }
            for k in j + 1..self.n {
                if xi[k] != 0 {
                    s += self.theta(k, j) * (xi[k] * eta[j]) as f64;
                }
            }
        }
        s
    }

    /// Scalar with `lambda(xi) lambda(eta) = phase(xi, eta) lambda(xi + eta)`.
    pub fn phase(&self, xi: &[i64], eta: &[i64]) -> C64 {
        let e = self.phase_exponent(xi, eta);
        if e == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, 2.0 * PI * e)
        }
    }
}

/// Finitely supported twisted series; exact zeros are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesJson", into = "SeriesJson")]
pub struct TwistedSeries {
    params: TwistParams,
    coeffs: BTreeMap<Lattice, C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CoeffJson {
    xi: Lattice,
    re: f64,
    im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SeriesJson {
    n: usize,
    theta_upper: Vec<f64>,
    coeffs: Vec<CoeffJson>,
}

impl TryFrom<SeriesJson> for TwistedSeries {
    type Error = Error;
    fn try_from(j: SeriesJson) -> Result<Self> {
        let params = TwistParams::new(j.n, j.theta_upper)?;
        let mut coeffs = BTreeMap::new();
        for c in j.coeffs {
            if c.xi.len() != params.n {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    got: c.xi.len(),
                });
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidParams("coefficients must be finite".into()));
            }
            *coeffs.entry(c.xi).or_insert(C64::new(0.0, 0.0)) += C64::new(c.re, c.im);
        }
        Ok(TwistedSeries::from_map(params, coeffs))
    }
}

impl From<TwistedSeries> for SeriesJson {
    fn from(s: TwistedSeries) -> Self {
        SeriesJson {
            n: s.params.n,
            theta_upper: s.params.theta_upper,
            coeffs: s
                .coeffs
                .into_iter()
                .map(|(xi, z)| CoeffJson { xi, re: z.re, im: z.im })
                .collect(),
        }
    }
}

impl TwistedSeries {
    fn from_map(params: TwistParams, mut coeffs: BTreeMap<Lattice, C64>) -> Self {
        coeffs.retain(|_, z| *z != C64::new(0.0, 0.0));
        TwistedSeries { params, coeffs }
    }

    pub fn new(params: TwistParams, terms: impl IntoIterator<Item = (Lattice, C64)>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (xi, z) in terms {
            if xi.len() != params.n {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    got: xi.len(),
                });
            }
            *coeffs.entry(xi).or_insert(C64::new(0.0, 0.0)) += z;
        }
        Ok(Self::from_map(params, coeffs))
    }

    pub fn zero(params: &TwistParams) -> Self {
        TwistedSeries {
            params: params.clone(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn unit(params: &TwistParams) -> Self {
        Self::lambda(params, &vec![0; params.n])
    }

    /// The generator monomial `lambda(xi)`.
    pub fn lambda(params: &TwistParams, xi: &[i64]) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(xi.to_vec(), C64::new(1.0, 0.0));
        TwistedSeries {
            params: params.clone(),
            coeffs,
        }
    }

    /// Random series with `terms` Gaussian coefficients on `[-radius, radius]^n`.
    pub fn random<R: Rng + ?Sized>(params: &TwistParams, radius: i64, terms: usize, rng: &mut R) -> Self {
        let mut coeffs = BTreeMap::new();
        for _ in 0..terms {
            let xi: Lattice = (0..params.n).map(|_| rng.random_range(-radius..=radius)).collect();
            let z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            *coeffs.entry(xi).or_insert(C64::new(0.0, 0.0)) += z;
        }
        Self::from_map(params.clone(), coeffs)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("series serializes")
    }

    pub fn params(&self) -> &TwistParams {
        &self.params
    }

    pub fn coeffs(&self) -> &BTreeMap<Lattice, C64> {
        &self.coeffs
    }

    pub fn coeff(&self, xi: &[i64]) -> C64 {
        self.coeffs.get(xi).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|xi_k|` over the support.
    pub fn support_radius(&self) -> i64 {
        self.coeffs
            .keys()
            .flat_map(|xi| xi.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).sum()
    }

    /// `(sum |f(xi)|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Coefficientwise map; zeros produced by `m` are dropped.
    pub fn map_coeffs(&self, mut m: impl FnMut(&[i64], C64) -> C64) -> Self {
        let coeffs = self.coeffs.iter().map(|(xi, z)| (xi.clone(), m(xi, *z))).collect();
        Self::from_map(self.params.clone(), coeffs)
    }

    fn check_params(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let mut coeffs = self.coeffs.clone();
        for (xi, z) in &other.coeffs {
            *coeffs.entry(xi.clone()).or_insert(C64::new(0.0, 0.0)) += z;
        }
        Ok(Self::from_map(self.params.clone(), coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_coeffs(|_, z| z * c)
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.coeffs.values().fold(0.0f64, |m, z| m.max(z.norm())))
    }
}

fn add_lattice(a: &[i64], b: &[i64]) -> Lattice {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg_lattice(a: &[i64]) -> Lattice {
    a.iter().map(|x| -x).collect()
}

/// Twisted convolution `(f g)(zeta) = sum_{xi + eta = zeta} phase(xi, eta) f(xi) g(eta)`.
pub fn twisted_mul(f: &TwistedSeries, g: &TwistedSeries) -> Result<TwistedSeries> {
    f.check_params(g)?;
    let p = &f.params;
    let mut out: BTreeMap<Lattice, C64> = BTreeMap::new();
    for (xi, a) in &f.coeffs {
        for (eta, b) in &g.coeffs {
            *out.entry(add_lattice(xi, eta)).or_insert(C64::new(0.0, 0.0)) += p.phase(xi, eta) * a * b;
        }
    }
    Ok(TwistedSeries::from_map(p.clone(), out))
}

/// `f^* = sum conj(f(xi)) lambda(xi)^*` with `lambda(xi)^* = conj(phase(-xi, xi)) lambda(-xi)`.
pub fn tw_adjoint(f: &TwistedSeries) -> TwistedSeries {
    let p = &f.params;
    let coeffs = f
        .coeffs
        .iter()
        .map(|(xi, z)| {
            let m = neg_lattice(xi);
            let ph = p.phase(&m, xi);
            (m, (z * ph).conj())
        })
        .collect();
    TwistedSeries::from_map(p.clone(), coeffs)
}

/// `tau(f) = f(0)`.
pub fn tw_trace(f: &TwistedSeries) -> C64 {
    f.coeff(&vec![0; f.params.n])
}

/// `|f|^2 = f^* f`.
pub fn tw_abs_sq(f: &TwistedSeries) -> Result<TwistedSeries> {
    twisted_mul(&tw_adjoint(f), f)
}

/// `S_t f`: coefficients times `exp(-t |xi|^2)`.
pub fn qt_heat_apply(f: &TwistedSeries, t: f64) -> Result<TwistedSeries> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(f.map_coeffs(|xi, z| z * (-t * norm_sq(xi)).exp()))
}

fn norm_sq(xi: &[i64]) -> f64 {
    xi.iter().map(|&k| (k * k) as f64).sum()
}

/// Ball radius `sqrt(4jt)` of the `j`-th averaging map at time `t`.
pub fn ball_radius(j: usize, t: f64) -> f64 {
    (4.0 * j as f64 * t).sqrt()
}

/// `R_{j,t} f`: coefficients times the normalized Fourier transform of the ball
/// `B(0, sqrt(4jt))` at `xi`, i.e. `ball_ft(n, 2 pi |xi| r)`.
pub fn qt_ball_average(f: &TwistedSeries, j: usize, t: f64) -> Result<TwistedSeries> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let n = f.params.n;
    let r = ball_radius(j, t);
    let mut cache: HashMap<i64, f64> = HashMap::new();
    Ok(f.map_coeffs(|xi, z| {
        let key: i64 = xi.iter().map(|k| k * k).sum();
        let m = *cache
            .entry(key)
            .or_insert_with(|| ball_ft(n, 2.0 * PI * (key as f64).sqrt() * r));
        z * m
    }))
}

/// Image of `f` under `lambda(xi) -> exp_xi (x) lambda(xi)`, stored as a map
/// `xi -> coefficient of exp_xi (x) lambda(xi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaImage {
    pub terms: BTreeMap<Lattice, C64>,
}

pub fn sigma_theta(f: &TwistedSeries) -> SigmaImage {
    SigmaImage { terms: f.coeffs.clone() }
}

/// `(H_t exp_xi)(0)` by quadrature of the Euclidean heat kernel against the
/// character: one-dimensional integrals `int g_s(y) cos(2 pi xi_k y) dy` with
/// `s^2 = t / (2 pi^2)`, by the trapezoid rule, whose aliasing error for a
/// Gaussian integrand is below `exp(-70)` at the chosen step.
fn heat_on_character(xi: &[i64], t: f64, cache: &mut HashMap<i64, f64>) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let s = (t / (2.0 * PI * PI)).sqrt();
    xi.iter()
        .map(|&k| {
            *cache.entry(k.abs()).or_insert_with(|| {
                let w = 2.0 * PI * k.abs() as f64;
                let h = 2.0 * PI * s / (12.0 + w * s);
                let half = 13.0 * s;
                let m = (half / h).ceil() as i64;
                let norm = h / (s * (2.0 * PI).sqrt());
                let mut acc = 0.0;
                for i in (-m..=m).rev() {
                    let y = i as f64 * h;
                    acc += (-y * y / (2.0 * s * s)).exp() * (w * y).cos();
                }
                norm * acc
            })
        })
        .product()
}

/// Compares `sigma(S_t f)` with `(H_t (x) id) sigma(f)`, the first path by the
/// coefficient formula and the second by heat-kernel quadrature on characters.
/// Returns the largest coefficient modulus of the difference.
pub fn sigma_intertwine_check(f: &TwistedSeries, t: f64) -> Result<f64> {
    let left = sigma_theta(&qt_heat_apply(f, t)?);
    let right = sigma_theta(f);
    let mut cache = HashMap::new();
    let mut defect = 0.0f64;
    for (xi, z) in &right.terms {
        let b = z * heat_on_character(xi, t, &mut cache);
        let a = left.terms.get(xi).copied().unwrap_or(C64::new(0.0, 0.0));
        defect = defect.max((a - b).norm());
    }
    Ok(defect)
}

/// Element of `R_Theta (x) R_Theta^op` as a map `(xi, eta) -> coefficient of lambda(xi) (x) lambda(eta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSeries {
    params: TwistParams,
    pub terms: BTreeMap<(Lattice, Lattice), C64>,
}

impl TensorSeries {
    /// Product of `R (x) R^op`: `(a (x) b)(c (x) d) = ac (x) db`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::ParamMismatch);
        }
        let p = &self.params;
        let mut out: BTreeMap<(Lattice, Lattice), C64> = BTreeMap::new();
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &other.terms {
                let z = x * y * p.phase(a, c) * p.phase(d, b);
                *out.entry((add_lattice(a, c), add_lattice(d, b))).or_insert(C64::new(0.0, 0.0)) += z;
            }
        }
        out.retain(|_, z| *z != C64::new(0.0, 0.0));
        Ok(TensorSeries {
            params: p.clone(),
            terms: out,
        })
    }

    /// `(tau (x) id)`: keeps the terms with `xi = 0`.
    pub fn trace_first(&self) -> TwistedSeries {
        let zero = vec![0; self.params.n];
        let coeffs = self
            .terms
            .iter()
            .filter(|((a, _), _)| *a == zero)
            .map(|((_, b), z)| (b.clone(), *z))
            .collect();
        TwistedSeries::from_map(self.params.clone(), coeffs)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<_> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let a = self.terms.get(k).copied().unwrap_or_default();
                let b = other.terms.get(k).copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `pi(phi) = sum phihat(xi) lambda(xi) (x) lambda(xi)^*` for Fourier data `phihat` on `Z^n`.
pub fn pi_theta(params: &TwistParams, phi: &BTreeMap<Lattice, C64>) -> Result<TensorSeries> {
    let mut terms = BTreeMap::new();
    for (xi, z) in phi {
        if xi.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: xi.len(),
            });
        }
        let m = neg_lattice(xi);
        let adj = params.phase(&m, xi).conj();
        if *z != C64::new(0.0, 0.0) {
            terms.insert((xi.clone(), m), z * adj);
        }
    }
    Ok(TensorSeries {
        params: params.clone(),
        terms,
    })
}

/// `(tau (x) id)(pi(phi))`, computed by building `pi(phi)`; equals `phihat(0) 1`.
pub fn pi_theta_expectation(params: &TwistParams, phi: &BTreeMap<Lattice, C64>) -> Result<TwistedSeries> {
    Ok(pi_theta(params, phi)?.trace_first())
}

// ---------------------------------------------------------------------------
// GNS box

/// Lattice box `[-L, L]^n`, points ordered lexicographically with the last
/// coordinate running fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnsBox {
    pub l: usize,
}

/// Boxes up to this many points use dense linear algebra.
const DENSE_LIMIT: usize = 600;
const LANCZOS_SEED: u64 = 0x6c61_6e63;
const LANCZOS_MAX_ITER: usize = 3000;

impl GnsBox {
    pub fn new(l: usize) -> Self {
        GnsBox { l }
    }

    pub fn side(&self) -> usize {
        2 * self.l + 1
    }

    pub fn size(&self, n: usize) -> usize {
        self.side().pow(n as u32)
    }

    pub fn point(&self, n: usize, mut idx: usize) -> Lattice {
        let side = self.side();
        let mut p = vec![0i64; n];
        for k in (0..n).rev() {
            p[k] = (idx % side) as i64 - self.l as i64;
            idx /= side;
        }
        p
    }

    pub fn index(&self, p: &[i64]) -> Option<usize> {
        let l = self.l as i64;
        let mut idx = 0usize;
        for &c in p {
            if c.abs() > l {
                return None;
            }
            idx = idx * self.side() + (c + l) as usize;
        }
        Some(idx)
    }

    fn check(&self, f: &TwistedSeries) -> Result<()> {
        let need = f.support_radius() as usize + 1;
        if self.l < need {
            return Err(Error::BoxTooSmall { l: self.l, need });
        }
        Ok(())
    }
}

/// Sparse compression of left multiplication by `f` to the box.
struct GnsOperator {
    dim: usize,
    /// `(row, col, value)`.
    entries: Vec<(usize, usize, C64)>,
}

impl GnsOperator {
    fn build(f: &TwistedSeries, b: &GnsBox) -> Self {
        let n = f.params.n;
        let dim = b.size(n);
        let mut entries = Vec::with_capacity(dim * f.len());
        for col in 0..dim {
            let eta = b.point(n, col);
            for (xi, z) in &f.coeffs {
                if let Some(row) = b.index(&add_lattice(xi, &eta)) {
                    entries.push((row, col, z * f.params.phase(xi, &eta)));
                }
            }
        }
        GnsOperator { dim, entries }
    }

    fn dense(&self) -> CMatrix {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for &(r, c, z) in &self.entries {
            m[(r, c)] += z;
        }
        CMatrix::from_dmatrix(m).expect("square")
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &(r, c, z) in &self.entries {
            y[r] += z * x[c];
        }
    }

    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &(r, c, z) in &self.entries {
            y[c] += z.conj() * x[r];
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(a, b)` below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..a.len() {
        let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        q = a[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Extreme eigenvalues of a symmetric tridiagonal matrix by bisection.
fn tridiagonal_extremes(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.len();
    let mut radius = 0.0f64;
    for i in 0..m {
        let left = if i > 0 { b[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < m { b[i].abs() } else { 0.0 };
        radius = radius.max(a[i].abs() + left + right);
    }
    let bisect = |target: usize| {
        // smallest x with count(x) > target
        let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(a, b, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * radius.max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    (bisect(0), bisect(m - 1))
}

/// Lanczos estimate of the extreme eigenvalues of a Hermitian operator.
/// Ritz values lie inside the spectrum, so the returned interval is contained
/// in `[lambda_min, lambda_max]`.
fn lanczos_extremes(dim: usize, mut op: impl FnMut(&[C64], &mut [C64])) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= nv);
    let mut v_prev = vec![C64::new(0.0, 0.0); dim];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let (mut alpha, mut beta) = (Vec::<f64>::new(), Vec::<f64>::new());
    let mut last = (f64::NAN, f64::NAN);
    let mut b_prev = 0.0;
    for it in 0..LANCZOS_MAX_ITER.min(dim) {
        op(&v, &mut w);
        let a: f64 = v.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        for i in 0..dim {
            w[i] -= v[i] * a + v_prev[i] * b_prev;
        }
        alpha.push(a);
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let done = it + 1 == LANCZOS_MAX_ITER.min(dim);
        if (it + 1) % 20 == 0 || b < 1e-13 || done {
            let ext = tridiagonal_extremes(&alpha, &beta);
            let scale = ext.0.abs().max(ext.1.abs()).max(1e-300);
            if b < 1e-13 * scale.max(1.0)
                || done
                || ((ext.0 - last.0).abs() < 1e-13 * scale && (ext.1 - last.1).abs() < 1e-13 * scale)
            {
                return ext;
            }
            last = ext;
        }
        beta.push(b);
        for i in 0..dim {
            v_prev[i] = v[i];
            v[i] = w[i] / b;
        }
        b_prev = b;
    }
    tridiagonal_extremes(&alpha, &beta[..alpha.len() - 1])
}

/// Largest singular value of left multiplication by `f` compressed to the box.
/// Increasing in `L` and bounded by the coefficient `l^1` norm.
pub fn gns_opnorm(f: &TwistedSeries, b: &GnsBox) -> Result<f64> {
    b.check(f)?;
    if f.is_empty() {
        return Ok(0.0);
    }
    let op = GnsOperator::build(f, b);
    if op.dim <= DENSE_LIMIT {
        return Ok(singular_values(&op.dense())[0]);
    }
    let mut tmp = vec![C64::new(0.0, 0.0); op.dim];
    let (_, top) = lanczos_extremes(op.dim, |x, y| {
        op.apply(x, &mut tmp);
        op.apply_adjoint(&tmp, y);
    });
    Ok(top.max(0.0).sqrt())
}

/// Extreme eigenvalues of the compression of a self-adjoint `f` to the box.
pub fn gns_spectrum(f: &TwistedSeries, b: &GnsBox) -> Result<(f64, f64)> {
    b.check(f)?;
    let defect = f.max_abs_diff(&tw_adjoint(f))?;
    let scale = f.coeffs.values().fold(0.0f64, |m, z| m.max(z.norm()));
    if defect > 1e-10 * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    if f.is_empty() {
        return Ok((0.0, 0.0));
    }
    let op = GnsOperator::build(f, b);
    if op.dim <= DENSE_LIMIT {
        let ev = hermitian_eigenvalues(&op.dense().hermitian_part())?;
        return Ok((ev[0], ev[ev.len() - 1]));
    }
    Ok(lanczos_extremes(op.dim, |x, y| op.apply(x, y)))
}

/// Norm of `u + u^* + v + v^*` at rational `theta = p/q` from the `q x q`
/// clock-and-shift model, maximized over a grid of boundary phases.
pub fn harper_rational_oracle(p: i64, q: usize, phase_points: usize) -> f64 {
    let omega = |m: usize| C64::from_polar(1.0, 2.0 * PI * (p as f64) * m as f64 / q as f64);
    let mut best = 0.0f64;
    for a in 0..phase_points {
        for b in 0..phase_points {
            let k1 = 2.0 * PI * a as f64 / phase_points as f64;
            let k2 = 2.0 * PI * b as f64 / phase_points as f64;
            let e1 = C64::from_polar(1.0, k1);
            let e2 = C64::from_polar(1.0, k2);
            let mut h = DMatrix::<C64>::zeros(q, q);
            for m in 0..q {
                // shift S e_m = e_{m+1}, clock C e_m = omega^m e_m
                h[((m + 1) % q, m)] += e1;
                h[(m, (m + 1) % q)] += e1.conj();
                h[(m, m)] += e2 * omega(m) + (e2 * omega(m)).conj();
            }
            let h = CMatrix::from_dmatrix(h).expect("square");
            best = best.max(singular_values(&h)[0]);
        }
    }
    best
}

/// The Harper element `u_1 + u_1^* + u_2 + u_2^*` in the plane algebra.
pub fn harper_element(params: &TwistParams) -> Result<TwistedSeries> {
    if params.n != 2 {
        return Err(Error::InvalidParams("the Harper element lives in dimension 2".into()));
    }
    let one = C64::new(1.0, 0.0);
    TwistedSeries::new(
        params.clone(),
        [
            (vec![1, 0], one),
            (vec![-1, 0], one),
            (vec![0, 1], one),
            (vec![0, -1], one),
        ],
    )
}

// ---------------------------------------------------------------------------
// BMO

fn qt_bmo_samples(
    f: &TwistedSeries,
    q: &MarkovMetricSpec,
    grid: &TGrid,
    b: &GnsBox,
) -> Result<Vec<BmoSample>> {
    let f2 = tw_abs_sq(f)?;
    let scale = f.l1_norm().powi(2);
    let mut samples = Vec::new();
    for &t in grid.values() {
        let r1f = qt_ball_average(f, 1, t)?;
        for j in 1..=q.truncation(t) {
            let rjf = qt_ball_average(f, j, t)?;
            let d = rjf.sub(&r1f)?;
            let g = qt_ball_average(&f2, j, t)?
                .sub(&tw_abs_sq(&rjf)?)?
                .add(&tw_abs_sq(&d)?)?;
            let (lo, hi) = gns_spectrum(&g, b)?;
            let tol = POSITIVITY_TOL * scale.max(1.0);
            if lo < -tol {
                return Err(Error::PositivityViolation { gap: lo, tol });
            }
            samples.push(BmoSample {
                t,
                j: Some(j),
                value: (hi.max(0.0) / q.gamma_sq(j, t)?).sqrt(),
            });
        }
    }
    Ok(samples)
}

/// Quantum-torus metric BMO norm (column side, `M_t = R_{1,t}`):
/// `sup_{t,j} gamma_j^{-1} || R_j|f|^2 - |R_j f|^2 + |R_j f - R_1 f|^2 ||^{1/2}`
/// with norms taken in the GNS box. The box must hold the support of `|f|^2`
/// (`L >= 2 * support radius + 1`). The value is recomputed at `2L`;
/// `refinement_stable` records agreement within 2%.
pub fn qt_bmo_norm(f: &TwistedSeries, q: &MarkovMetricSpec, grid: &TGrid, b: &GnsBox) -> Result<BmoReport> {
    match q.variant() {
        MetricVariant::QTorus { params, .. } if *params == f.params => {}
        MetricVariant::QTorus { .. } => return Err(Error::ParamMismatch),
        v => {
            return Err(Error::MetricCarrierMismatch(format!(
                "{} metric with a twisted series",
                v.name()
            )))
        }
    }
    let need = 2 * f.support_radius() as usize + 1;
    if b.l < need {
        return Err(Error::BoxTooSmall { l: b.l, need });
    }
    let coarse = qt_bmo_samples(f, q, grid, b)?;
    let fine = qt_bmo_samples(f, q, grid, &GnsBox::new(2 * b.l))?;
    let vc = coarse.iter().fold(0.0f64, |m, s| m.max(s.value));
    let mut rep = BmoReport::from_samples(fine, BmoSide::Column, Some(grid));
    let stable = (rep.value - vc).abs() <= 0.02 * rep.value.max(vc) || rep.value.max(vc) == 0.0;
    rep.refinement_stable = Some(stable);
    rep.note = Some(format!("GNS boxes L = {} and {}; value from the larger", b.l, 2 * b.l));
    Ok(rep)
}

/// Closed form of [`qt_bmo_norm`] for a monomial `lambda(xi)`:
/// `sup gamma_j^{-1} ((1 - s_j^2) + (s_j - s_1)^2)^{1/2}` with `s_j` the ball multiplier at `xi`.
pub fn qt_bmo_monomial(q: &MarkovMetricSpec, xi: &[i64], grid: &TGrid) -> Result<f64> {
    let n = xi.len();
    let rad = norm_sq(xi).sqrt();
    let mut best = 0.0f64;
    for &t in grid.values() {
        let s1 = ball_ft(n, 2.0 * PI * rad * ball_radius(1, t));
        for j in 1..=q.truncation(t) {
            let sj = ball_ft(n, 2.0 * PI * rad * ball_radius(j, t));
            let v = ((1.0 - sj * sj) + (sj - s1).powi(2)).max(0.0) / q.gamma_sq(j, t)?;
            best = best.max(v.sqrt());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn generator_commutation() {
        let theta = 0.3;
        let p = TwistParams::plane(theta);
        let u = TwistedSeries::lambda(&p, &[1, 0]);
        let v = TwistedSeries::lambda(&p, &[0, 1]);
        let uv = twisted_mul(&u, &v).unwrap();
        assert_eq!(uv, TwistedSeries::lambda(&p, &[1, 1]));
        let vu = twisted_mul(&v, &u).unwrap();
        let expect = C64::from_polar(1.0, -2.0 * PI * theta);
        assert!((vu.coeff(&[1, 1]) - expect).norm() < 1e-15);
    }

    #[test]
    fn theta_antisymmetric() {
        let p = TwistParams::new(3, vec![0.1, 0.2, 0.3]).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(p.theta(j, k), -p.theta(k, j));
            }
        }
        assert_eq!(p.theta(1, 2), 0.3);
        assert_eq!(p.theta(0, 2), 0.2);
    }

    #[test]
    fn trace_and_unit() {
        let p = TwistParams::plane(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = TwistedSeries::random(&p, 3, 10, &mut rng);
        assert_eq!(twisted_mul(&TwistedSeries::unit(&p), &f).unwrap(), f);
        assert_eq!(tw_trace(&TwistedSeries::unit(&p)), one());
        assert_eq!(tw_trace(&TwistedSeries::lambda(&p, &[2, -1])), C64::new(0.0, 0.0));
    }

    #[test]
    fn heat_on_monomial() {
        let p = TwistParams::plane(0.2);
        let f = TwistedSeries::lambda(&p, &[1, 1]);
        let g = qt_heat_apply(&f, 0.4).unwrap();
        assert!((g.coeff(&[1, 1]).re - (-0.8f64).exp()).abs() < 1e-16);
        assert!(qt_heat_apply(&f, -1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = TwistParams::plane(0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = TwistedSeries::random(&p, 2, 5, &mut rng);
        let s = f.to_json_string();
        assert!(s.contains("\"theta_upper\":[0.25]"));
        assert_eq!(TwistedSeries::from_json_str(&s).unwrap(), f);
    }

    #[test]
    fn gns_of_monomial_is_one() {
        let p = TwistParams::plane(0.37);
        let f = TwistedSeries::lambda(&p, &[1, -1]);
        let v = gns_opnorm(&f, &GnsBox::new(4)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(matches!(gns_opnorm(&f, &GnsBox::new(1)), Err(Error::BoxTooSmall { .. })));
    }

    #[test]
    fn lanczos_matches_dense() {
        let p = TwistParams::plane(0.31);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = TwistedSeries::random(&p, 2, 6, &mut rng);
        let h = f.add(&tw_adjoint(&f)).unwrap();
        let b = GnsBox::new(12);
        let op = GnsOperator::build(&h, &b);
        let ev = hermitian_eigenvalues(&op.dense().hermitian_part()).unwrap();
        let (lo, hi) = lanczos_extremes(op.dim, |x, y| op.apply(x, y));
        assert!((lo - ev[0]).abs() < 1e-9 && (hi - ev[ev.len() - 1]).abs() < 1e-9, "{lo} {hi} {ev:?}");
    }

    #[test]
    fn harper_oracle_half() {
        assert!((harper_rational_oracle(1, 2, 16) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((harper_rational_oracle(0, 1, 16) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bmo_of_unit_vanishes() {
        let p = TwistParams::plane(0.2);
        let q = MarkovMetricSpec::qtorus(p.clone()).unwrap();
        let grid = TGrid::log(1e-2, 1.0, 4).unwrap();
        let r = qt_bmo_norm(&TwistedSeries::unit(&p), &q, &grid, &GnsBox::new(2)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn bmo_of_monomial_closed_form() {
        let p = TwistParams::plane(0.2);
        let q = MarkovMetricSpec::qtorus(p.clone()).unwrap();
        let grid = TGrid::log(1e-3, 1.0, 6).unwrap();
        let f = TwistedSeries::lambda(&p, &[1, 0]);
        let r = qt_bmo_norm(&f, &q, &grid, &GnsBox::new(3)).unwrap();
        let c = qt_bmo_monomial(&q, &[1, 0], &grid).unwrap();
        assert!((r.value - c).abs() < 1e-10, "{} {}", r.value, c);
        assert_eq!(r.refinement_stable, Some(true));
    }
}
