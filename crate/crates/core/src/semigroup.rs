//! Markov semigroups as `t`-indexed families of cpu maps.
//!
//! Four kinds are supported:
//!
//! * Schur-multiplier semigroups on `M_n`, `S_t(A) = [exp(-t psi(m - k)) a_mk]`;
//! * Fourier-multiplier semigroups on functions over `Z_N`, `(S_t f)^(k) = exp(-t psi(k)) fhat(k)`;
//! * the Ornstein-Uhlenbeck semigroup on a uniform quadrature grid;
//! * group-Schur semigroups on `M_|G|`, symbol `exp(-t psi(g h^{-1}))`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::fourier;
use crate::opalg::{hermitian_eigenvalues, CMatrix, CpuMap, C64};
use crate::transference::FiniteGroupTable;

/// Length function on integer differences or frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Psi {
    /// `coef * |d|^exponent`.
    Power {
        #[serde(default = "one")]
        coef: f64,
        exponent: f64,
    },
    /// For Schur kinds `values[|d|]`; for cyclic kinds `values[k mod N]`.
    Table { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Psi {
    pub fn power(coef: f64, exponent: f64) -> Self {
        Psi::Power { coef, exponent }
    }

    fn eval_abs(&self, d: u64) -> f64 {
        match self {
            Psi::Power { coef, exponent } => {
                if d == 0 {
                    0.0
                } else {
                    coef * (d as f64).powf(*exponent)
                }
            }
            Psi::Table { values } => values[d as usize],
        }
    }

    fn check_values(&self) -> Result<()> {
        match self {
            Psi::Power { coef, exponent } => {
                if !(coef.is_finite() && *coef >= 0.0 && exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "power length needs coef >= 0 and exponent > 0, got {coef}, {exponent}"
                    )));
                }
            }
            Psi::Table { values } => {
                if values.is_empty() || values[0] != 0.0 {
                    return Err(Error::InvalidParams("length table must start with psi(0) = 0".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidParams("length table must be finite and nonnegative".into()));
                }
            }
        }
        Ok(())
    }
}

/// Uniform grid `[-L, L]` with trapezoid weights for the Ornstein-Uhlenbeck kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuGrid {
    pub half_width: f64,
    pub nodes: usize,
}

impl OuGrid {
    pub fn new(half_width: f64, nodes: usize) -> Result<Self> {
        let g = Self { half_width, nodes };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) || self.nodes < 3 {
            return Err(Error::InvalidParams("grid needs L > 0 and at least 3 nodes".into()));
        }
        // Gaussian mass of mu = exp(-y^2) dy outside [-L, L] relative to sqrt(pi).
        let outside = erfc(self.half_width);
        if outside > 1e-10 {
            return Err(Error::GridTooNarrow(format!(
                "Gaussian mass {outside:e} outside [-{}, {}]",
                self.half_width, self.half_width
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.nodes - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes).map(|i| -self.half_width + h * i as f64).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.nodes];
        w[0] = h / 2.0;
        w[self.nodes - 1] = h / 2.0;
        w
    }

    /// Indices `i` with `e^{-t}|x_i| + 4.8 sqrt(1 - e^{-2t}) <= L`, where the
    /// kernel mass falling outside the grid is negligible.
    pub fn interior(&self, t: f64) -> Vec<usize> {
        let s = (1.0 - (-2.0 * t).exp()).max(0.0).sqrt();
        let pts = self.points();
        (0..self.nodes)
            .filter(|&i| (-t).exp() * pts[i].abs() + 4.8 * s <= self.half_width + 1e-12)
            .collect()
    }
}

/// Ornstein-Uhlenbeck transition density with respect to `mu = exp(-y^2) dy`:
/// `o_t(x, y) = exp(x^2 - (e^t x - y)^2 / (e^{2t} - 1)) / sqrt(pi (1 - e^{-2t}))`.
pub fn ou_density(x: f64, y: f64, t: f64) -> f64 {
    let v2 = (2.0 * t).exp_m1();
    let s2 = -(-2.0 * t).exp_m1();
    let e = x * x - (t.exp() * x - y).powi(2) / v2;
    e.exp() / (PI * s2).sqrt()
}

/// Euclidean heat kernel `(4 pi v)^{-1/2} exp(-(z - y)^2 / 4v)` in one dimension.
pub fn heat_kernel_1d(z: f64, y: f64, v: f64) -> f64 {
    (-(z - y).powi(2) / (4.0 * v)).exp() / (4.0 * PI * v).sqrt()
}

/// Markov semigroup description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemigroupSpec {
    SchurLength {
        n: usize,
        psi: Psi,
    },
    CyclicMultiplier {
        #[serde(rename = "N")]
        big_n: usize,
        psi: Psi,
    },
    OuGrid(OuGrid),
    GroupSchur {
        group: FiniteGroupTable,
        psi: Vec<f64>,
    },
}

/// Carrier of a semigroup argument.
#[derive(Clone, Debug, PartialEq)]
pub enum Carrier {
    Matrix(CMatrix),
    /// Values of a function on `Z_N`.
    Cyclic(Vec<C64>),
    /// Values of a function at the nodes of an [`OuGrid`].
    Grid(Vec<f64>),
}

impl SemigroupSpec {
    /// Heat semigroup `psi(d) = d^2` on `M_n`.
    pub fn heat_schur(n: usize) -> Self {
        SemigroupSpec::SchurLength { n, psi: Psi::power(1.0, 2.0) }
    }

    /// Poisson semigroup `psi(d) = |d|` on `M_n`.
    pub fn poisson_schur(n: usize) -> Self {
        SemigroupSpec::SchurLength { n, psi: Psi::power(1.0, 1.0) }
    }

    /// Heat semigroup `psi(d) = 4 pi^2 d^2` on `M_n`, the companion of the sinc metric.
    pub fn sinc_heat_schur(n: usize) -> Self {
        SemigroupSpec::SchurLength {
            n,
            psi: Psi::power(4.0 * PI * PI, 2.0),
        }
    }

    pub fn poisson_cyclic(big_n: usize) -> Self {
        SemigroupSpec::CyclicMultiplier { big_n, psi: Psi::power(1.0, 1.0) }
    }

    pub fn ou(half_width: f64, nodes: usize) -> Result<Self> {
        Ok(SemigroupSpec::OuGrid(OuGrid::new(half_width, nodes)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SemigroupSpec::SchurLength { n, psi } => {
                if *n == 0 {
                    return Err(Error::InvalidParams("dimension must be positive".into()));
                }
                psi.check_values()?;
                if let Psi::Table { values } = psi {
                    if values.len() < *n {
                        return Err(Error::InvalidParams(format!(
                            "length table needs {n} entries, got {}",
                            values.len()
                        )));
                    }
                }
                Ok(())
            }
            SemigroupSpec::CyclicMultiplier { big_n, psi } => {
                if *big_n == 0 {
                    return Err(Error::InvalidParams("cyclic size must be positive".into()));
                }
                psi.check_values()?;
                if let Psi::Table { values } = psi {
                    if values.len() != *big_n {
                        return Err(Error::InvalidParams(format!(
                            "cyclic length table needs {big_n} entries, got {}",
                            values.len()
                        )));
                    }
                    for k in 1..*big_n {
                        if values[k] != values[big_n - k] {
                            return Err(Error::InvalidParams(format!("psi({k}) != psi(-{k})")));
                        }
                    }
                }
                Ok(())
            }
            SemigroupSpec::OuGrid(g) => g.validate(),
            SemigroupSpec::GroupSchur { group, psi } => {
                crate::transference::validate_length(group, psi)?;
                Ok(())
            }
        }
    }

    /// Dimension of the matrix (or grid) carrier.
    pub fn dim(&self) -> usize {
        match self {
            SemigroupSpec::SchurLength { n, .. } => *n,
            SemigroupSpec::CyclicMultiplier { big_n, .. } => *big_n,
            SemigroupSpec::OuGrid(g) => g.nodes,
            SemigroupSpec::GroupSchur { group, .. } => group.order(),
        }
    }

    /// `psi` at an integer difference (Schur kinds) or frequency (cyclic kind).
    pub fn psi_at(&self, d: i64) -> Result<f64> {
        match self {
            SemigroupSpec::SchurLength { psi, .. } => Ok(psi.eval_abs(d.unsigned_abs())),
            SemigroupSpec::CyclicMultiplier { big_n, psi } => {
                let nn = *big_n as i64;
                let k = d.rem_euclid(nn) as usize;
                Ok(match psi {
                    Psi::Table { values } => values[k],
                    Psi::Power { .. } => psi.eval_abs(fourier::centered(k, *big_n).unsigned_abs()),
                })
            }
            _ => Err(Error::CarrierMismatch("psi_at needs a multiplier kind".into())),
        }
    }

    /// Multiplier symbol `exp(-t psi(k))` on `Z_N`, indexed by `k mod N`.
    pub fn cyclic_symbol(&self, t: f64) -> Result<Vec<C64>> {
        check_time(t)?;
        match self {
            SemigroupSpec::CyclicMultiplier { big_n, .. } => (0..*big_n)
                .map(|k| Ok(C64::new((-t * self.psi_at(k as i64)?).exp(), 0.0)))
                .collect(),
            _ => Err(Error::CarrierMismatch("cyclic symbol needs the cyclic kind".into())),
        }
    }

    /// Symbol matrix whose positivity is equivalent to complete positivity of `S_t`:
    /// `[exp(-t psi(m - k))]` for Schur and cyclic kinds, `[exp(-t psi(g h^{-1}))]` for groups.
    pub fn symbol_matrix(&self, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        self.validate()?;
        match self {
            SemigroupSpec::SchurLength { n, .. } | SemigroupSpec::CyclicMultiplier { big_n: n, .. } => {
                let n = *n;
                let vals: Vec<f64> = (0..n as i64)
                    .map(|d| self.psi_at(d).map(|p| (-t * p).exp()))
                    .collect::<Result<_>>()?;
                let neg: Vec<f64> = (0..n as i64)
                    .map(|d| self.psi_at(-d).map(|p| (-t * p).exp()))
                    .collect::<Result<_>>()?;
                let cyclic = matches!(self, SemigroupSpec::CyclicMultiplier { .. });
                let a = CMatrix::from_fn(n, |m, k| {
                    let v = if m >= k {
                        vals[m - k]
                    } else if cyclic {
                        vals[m + n - k]
                    } else {
                        neg[k - m]
                    };
                    C64::new(v, 0.0)
                });
                a.with_hermitian_hint()
            }
            SemigroupSpec::GroupSchur { group, psi } => {
                let n = group.order();
                let a = CMatrix::from_fn(n, |g, h| {
                    C64::new((-t * psi[group.mul(g, group.inv(h))]).exp(), 0.0)
                });
                Ok(a.hermitian_part())
            }
            SemigroupSpec::OuGrid(_) => Err(Error::CarrierMismatch("OU kind has no Schur symbol".into())),
        }
    }

    /// `S_t` as a [`CpuMap`] acting on `M_dim`. Cyclic and OU kinds act on the
    /// diagonal subalgebra through a grid kernel.
    pub fn cpu_map(&self, t: f64) -> Result<CpuMap> {
        check_time(t)?;
        match self {
            SemigroupSpec::SchurLength { .. } | SemigroupSpec::GroupSchur { .. } => {
                Ok(CpuMap::schur(self.symbol_matrix(t)?))
            }
            SemigroupSpec::CyclicMultiplier { big_n, .. } => {
                let n = *big_n;
                let h = self.cyclic_kernel(t)?;
                let kernel = DMatrix::from_fn(n, n, |x, y| h[(x + n - y) % n]);
                Ok(CpuMap::GridKernel {
                    nodes: (0..n).map(|x| x as f64).collect(),
                    weights: vec![1.0; n],
                    kernel,
                })
            }
            SemigroupSpec::OuGrid(g) => {
                g.validate()?;
                let pts = g.points();
                let w = g.weights();
                let n = pts.len();
                let kernel = if t == 0.0 {
                    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / w[j] } else { 0.0 })
                } else {
                    DMatrix::from_fn(n, n, |i, j| ou_density(pts[i], pts[j], t) * (-pts[j] * pts[j]).exp())
                };
                Ok(CpuMap::GridKernel { nodes: pts, weights: w, kernel })
            }
        }
    }

    /// Convolution kernel `h_t = idft(exp(-t psi))` on `Z_N` (real part).
    pub fn cyclic_kernel(&self, t: f64) -> Result<Vec<f64>> {
        let sym = self.cyclic_symbol(t)?;
        Ok(fourier::idft(&sym).iter().map(|z| z.re).collect())
    }

    /// Applies `S_t` to a carrier of the matching kind.
    pub fn apply(&self, t: f64, f: &Carrier) -> Result<Carrier> {
        semigroup_apply(self, t, f)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// Applies `S_t` to `f`.
pub fn semigroup_apply(s: &SemigroupSpec, t: f64, f: &Carrier) -> Result<Carrier> {
    check_time(t)?;
    s.validate()?;
    match (s, f) {
        (SemigroupSpec::SchurLength { .. } | SemigroupSpec::GroupSchur { .. }, Carrier::Matrix(a)) => {
            let n = s.dim();
            if a.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
            }
            if t == 0.0 {
                return Ok(f.clone());
            }
            Ok(Carrier::Matrix(a.hadamard(&s.symbol_matrix(t)?)))
        }
        (SemigroupSpec::CyclicMultiplier { big_n, .. }, Carrier::Cyclic(v)) => {
            if v.len() != *big_n {
                return Err(Error::DimensionMismatch { expected: *big_n, got: v.len() });
            }
            if t == 0.0 {
                return Ok(f.clone());
            }
            Ok(Carrier::Cyclic(fourier::multiply(v, &s.cyclic_symbol(t)?)))
        }
        (SemigroupSpec::OuGrid(g), Carrier::Grid(v)) => {
            if v.len() != g.nodes {
                return Err(Error::DimensionMismatch { expected: g.nodes, got: v.len() });
            }
            Ok(Carrier::Grid(ou_apply(g, t, v)))
        }
        _ => Err(Error::CarrierMismatch(format!(
            "{} carrier for {} semigroup",
            carrier_name(f),
            kind_name(s)
        ))),
    }
}

fn carrier_name(f: &Carrier) -> &'static str {
    match f {
        Carrier::Matrix(_) => "matrix",
        Carrier::Cyclic(_) => "cyclic",
        Carrier::Grid(_) => "grid",
    }
}

pub(crate) fn kind_name(s: &SemigroupSpec) -> &'static str {
    match s {
        SemigroupSpec::SchurLength { .. } => "schur_length",
        SemigroupSpec::CyclicMultiplier { .. } => "cyclic_multiplier",
        SemigroupSpec::OuGrid(_) => "ou_grid",
        SemigroupSpec::GroupSchur { .. } => "group_schur",
    }
}

/// `O_t f` at every node, trapezoid rule in the `mu`-weighted form.
fn ou_apply(g: &OuGrid, t: f64, f: &[f64]) -> Vec<f64> {
    if t == 0.0 {
        return f.to_vec();
    }
    let pts = g.points();
    let w = g.weights();
    let wf: Vec<f64> = (0..pts.len()).map(|j| w[j] * f[j] * (-pts[j] * pts[j]).exp()).collect();
    pts.iter()
        .map(|&x| pts.iter().zip(&wf).map(|(&y, &c)| ou_density(x, y, t) * c).sum())
        .collect()
}

/// `H_v f(e^{-t} x)` at every node with `v = (1 - e^{-2t}) / 4`, trapezoid rule in Lebesgue form.
fn heat_path(g: &OuGrid, t: f64, f: &[f64]) -> Vec<f64> {
    if t == 0.0 {
        return f.to_vec();
    }
    let pts = g.points();
    let w = g.weights();
    let v = -(-2.0 * t).exp_m1() / 4.0;
    let wf: Vec<f64> = (0..pts.len()).map(|j| w[j] * f[j]).collect();
    pts.iter()
        .map(|&x| {
            let z = (-t).exp() * x;
            pts.iter().zip(&wf).map(|(&y, &c)| heat_kernel_1d(z, y, v) * c).sum()
        })
        .collect()
}

/// Result of [`ou_heat_identity_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuHeatDefect {
    /// `sup |O_t f(x) - H_v f(e^{-t} x)|` over interior nodes.
    pub defect: f64,
    /// Estimated quadrature error: `sup|f|` times the worst kernel-mass error on interior nodes.
    pub quadrature_bound: f64,
    pub interior_nodes: usize,
}

/// Compares the Ornstein-Uhlenbeck semigroup with the rescaled heat semigroup,
/// `O_t f(x) = H_{v(t)} f(e^{-t} x)`, through two independent quadratures.
pub fn ou_heat_identity_check(grid: &OuGrid, f: &[f64], t: f64) -> Result<OuHeatDefect> {
    check_time(t)?;
    grid.validate()?;
    if f.len() != grid.nodes {
        return Err(Error::DimensionMismatch { expected: grid.nodes, got: f.len() });
    }
    let idx = grid.interior(t);
    if idx.is_empty() {
        return Err(Error::GridTooNarrow(format!("no interior nodes at t = {t}")));
    }
    let a = ou_apply(grid, t, f);
    let b = heat_path(grid, t, f);
    let ones = vec![1.0; grid.nodes];
    let mass = ou_apply(grid, t, &ones);
    let sup_f = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut defect = 0.0f64;
    let mut mass_err = 0.0f64;
    for &i in &idx {
        defect = defect.max((a[i] - b[i]).abs());
        mass_err = mass_err.max((mass[i] - 1.0).abs());
    }
    Ok(OuHeatDefect {
        defect,
        quadrature_bound: sup_f * mass_err,
        interior_nodes: idx.len(),
    })
}

/// Increasing list of sample times `t > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TGrid {
    values: Vec<f64>,
}

impl TGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParams("time grid needs at least 2 points".into()));
        }
        if values.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::InvalidParams("time grid values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("time grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `count` log-spaced points from `lo` to `hi` inclusive.
    pub fn log(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(Error::InvalidParams(format!("bad log grid {lo}:{hi}:{count}")));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let mut v: Vec<f64> = (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect();
        v[0] = lo;
        v[count - 1] = hi;
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True if `t` is the first or last grid point.
    pub fn is_endpoint(&self, t: f64) -> bool {
        t == self.values[0] || t == self.values[self.values.len() - 1]
    }
}

impl Default for TGrid {
    /// Log grid `1e-3 .. 1e3` with 60 points.
    fn default() -> Self {
        TGrid::log(1e-3, 1e3, 60).expect("default grid")
    }
}

impl TryFrom<Vec<f64>> for TGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TGrid::new(v)
    }
}

impl From<TGrid> for Vec<f64> {
    fn from(g: TGrid) -> Self {
        g.values
    }
}

impl FromStr for TGrid {
    type Err = Error;

    /// `log:LO:HI:COUNT` or `list:T1,T2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("time grid '{s}': expected log:LO:HI:COUNT or list:T1,T2,..."));
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].parse().map_err(|_| bad())?;
            let count: usize = parts[2].parse().map_err(|_| bad())?;
            TGrid::log(lo, hi, count)
        } else if let Some(rest) = s.strip_prefix("list:") {
            let v: Vec<f64> = rest
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            TGrid::new(v)
        } else {
            Err(bad())
        }
    }
}

/// One sampled time in a [`MarkovReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovSample {
    pub t: f64,
    pub unital_defect: f64,
    pub symmetry_defect: f64,
    /// Minimum symbol eigenvalue (Schur kinds) or minimum kernel value (grid kinds).
    pub cp_gap: f64,
    pub unital_ok: bool,
    pub symmetric_ok: bool,
    pub cp_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovReport {
    pub samples: Vec<MarkovSample>,
    pub pass: bool,
}

impl MarkovReport {
    pub fn cp_pass(&self) -> bool {
        self.samples.iter().all(|s| s.cp_ok)
    }
}

const MARKOV_TOL: f64 = 1e-10;
const CP_TOL: f64 = 1e-8;
const MARKOV_SEED: u64 = 0x6d61_726b_6f76;

/// Checks unitality, trace symmetry and complete positivity of `S_t` at each sample.
/// Sample times may include `0`.
pub fn markov_check(s: &SemigroupSpec, t_samples: &[f64]) -> Result<MarkovReport> {
    s.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(MARKOV_SEED);
    let n = s.dim();
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        check_time(t)?;
        let (unital_defect, symmetry_defect, cp_gap) = match s {
            SemigroupSpec::OuGrid(g) => {
                let ones = vec![1.0; n];
                let img = ou_apply(g, t, &ones);
                let idx = g.interior(t);
                let unital = idx.iter().fold(0.0f64, |m, &i| m.max((img[i] - 1.0).abs()));
                // symmetry with respect to the discrete measure w_j exp(-x_j^2)
                let pts = g.points();
                let w = g.weights();
                let mu: Vec<f64> = (0..n).map(|j| w[j] * (-pts[j] * pts[j]).exp()).collect();
                let mut sym = 0.0f64;
                for _ in 0..3 {
                    let f: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
                    let h: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
                    let of = ou_apply(g, t, &f);
                    let oh = ou_apply(g, t, &h);
                    let l: f64 = (0..n).map(|i| mu[i] * of[i] * h[i]).sum();
                    let r: f64 = (0..n).map(|i| mu[i] * f[i] * oh[i]).sum();
                    sym = sym.max((l - r).abs());
                }
                let cp = if t == 0.0 {
                    0.0
                } else {
                    let mut m = f64::INFINITY;
                    for &x in &pts {
                        for &y in &pts {
                            m = m.min(ou_density(x, y, t));
                        }
                    }
                    m
                };
                (unital, sym, cp)
            }
            SemigroupSpec::CyclicMultiplier { .. } => {
                let ones = Carrier::Cyclic(vec![C64::new(1.0, 0.0); n]);
                let Carrier::Cyclic(img) = semigroup_apply(s, t, &ones)? else { unreachable!() };
                let unital = img.iter().fold(0.0f64, |m, z| m.max((z - 1.0).norm()));
                let mut sym = 0.0f64;
                for _ in 0..3 {
                    let f = random_vec(n, &mut rng);
                    let h = random_vec(n, &mut rng);
                    let Carrier::Cyclic(sf) = semigroup_apply(s, t, &Carrier::Cyclic(f.clone()))? else {
                        unreachable!()
                    };
                    let Carrier::Cyclic(sh) = semigroup_apply(s, t, &Carrier::Cyclic(h.clone()))? else {
                        unreachable!()
                    };
                    let l: C64 = (0..n).map(|i| sf[i].conj() * h[i]).sum();
                    let r: C64 = (0..n).map(|i| f[i].conj() * sh[i]).sum();
                    sym = sym.max((l - r).norm());
                }
                let cp = hermitian_eigenvalues(&s.symbol_matrix(t)?)?[0];
                (unital, sym, cp)
            }
            SemigroupSpec::SchurLength { .. } | SemigroupSpec::GroupSchur { .. } => {
                let one = Carrier::Matrix(CMatrix::identity(n));
                let Carrier::Matrix(img) = semigroup_apply(s, t, &one)? else { unreachable!() };
                let unital = img.max_abs_diff(&CMatrix::identity(n));
                let mut sym = 0.0f64;
                for _ in 0..3 {
                    let f = CMatrix::random_gaussian(n, &mut rng);
                    let h = CMatrix::random_gaussian(n, &mut rng);
                    let Carrier::Matrix(sf) = semigroup_apply(s, t, &Carrier::Matrix(f.clone()))? else {
                        unreachable!()
                    };
                    let Carrier::Matrix(sh) = semigroup_apply(s, t, &Carrier::Matrix(h.clone()))? else {
                        unreachable!()
                    };
                    let l = (&sf.adjoint() * &h).trace();
                    let r = (&f.adjoint() * &sh).trace();
                    sym = sym.max((l - r).norm());
                }
                let cp = hermitian_eigenvalues(&s.symbol_matrix(t)?)?[0];
                (unital, sym, cp)
            }
        };
        let unital_ok = unital_defect <= MARKOV_TOL;
        let symmetric_ok = symmetry_defect <= MARKOV_TOL * (1.0 + n as f64);
        let cp_ok = cp_gap >= -CP_TOL;
        samples.push(MarkovSample {
            t,
            unital_defect,
            symmetry_defect,
            cp_gap,
            unital_ok,
            symmetric_ok,
            cp_ok,
        });
    }
    let pass = samples.iter().all(|s| s.unital_ok && s.symmetric_ok && s.cp_ok);
    Ok(MarkovReport { samples, pass })
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rand::Rng::random_range(rng, -1.0..1.0), rand::Rng::random_range(rng, -1.0..1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(c: &Carrier) -> &CMatrix {
        match c {
            Carrier::Matrix(a) => a,
            _ => panic!("not a matrix"),
        }
    }

    #[test]
    fn heat_schur_on_corner_unit() {
        let s = SemigroupSpec::heat_schur(3);
        for t in [0.1, 0.5, 2.0] {
            let out = semigroup_apply(&s, t, &Carrier::Matrix(CMatrix::unit(3, 0, 2))).unwrap();
            let expect = CMatrix::unit(3, 0, 2).scale_real((-4.0 * t).exp());
            assert!(mat(&out).max_abs_diff(&expect) < 1e-15);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let a = CMatrix::unit(3, 1, 2);
        let s = SemigroupSpec::poisson_schur(3);
        assert_eq!(semigroup_apply(&s, 0.0, &Carrier::Matrix(a.clone())).unwrap(), Carrier::Matrix(a));
        let v: Vec<C64> = (0..4).map(|i| C64::new(i as f64, 1.0)).collect();
        let c = SemigroupSpec::poisson_cyclic(4);
        assert_eq!(semigroup_apply(&c, 0.0, &Carrier::Cyclic(v.clone())).unwrap(), Carrier::Cyclic(v));
    }

    #[test]
    fn poisson_cyclic_delta_matches_four_point_dft() {
        let s = SemigroupSpec::poisson_cyclic(4);
        let t = 0.3;
        let mut delta = vec![C64::new(0.0, 0.0); 4];
        delta[0] = C64::new(1.0, 0.0);
        let Carrier::Cyclic(out) = semigroup_apply(&s, t, &Carrier::Cyclic(delta)).unwrap() else { panic!() };
        // inverse 4-point DFT of (1, a, b, a): x -> (1 + 2a cos(pi x / 2) + b cos(pi x)) / 4
        let (a, b) = ((-t as f64).exp(), (-2.0 * t as f64).exp());
        let oracle = [(1.0 + 2.0 * a + b) / 4.0, (1.0 - b) / 4.0, (1.0 - 2.0 * a + b) / 4.0, (1.0 - b) / 4.0];
        for x in 0..4 {
            assert!((out[x] - C64::new(oracle[x], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn negative_time_and_carrier_errors() {
        let s = SemigroupSpec::heat_schur(2);
        let a = Carrier::Matrix(CMatrix::identity(2));
        assert!(matches!(semigroup_apply(&s, -1.0, &a), Err(Error::NegativeTime(_))));
        assert!(matches!(
            semigroup_apply(&s, 1.0, &Carrier::Grid(vec![0.0; 2])),
            Err(Error::CarrierMismatch(_))
        ));
    }

    #[test]
    fn markov_check_heat_passes() {
        let r = markov_check(&SemigroupSpec::heat_schur(8), &[0.0, 0.01, 1.0, 100.0]).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn markov_check_detects_non_cnd_length() {
        let s = SemigroupSpec::CyclicMultiplier {
            big_n: 4,
            psi: Psi::Table { values: vec![0.0, 1.0, 10.0, 1.0] },
        };
        let r = markov_check(&s, &[0.05]).unwrap();
        let t: f64 = 0.05;
        let oracle = 1.0 - 2.0 * (-t).exp() + (-10.0 * t).exp();
        assert!(oracle < 0.0);
        assert!(!r.cp_pass());
        assert!((r.samples[0].cp_gap - oracle).abs() < 1e-12);
        assert!(r.samples[0].unital_ok && r.samples[0].symmetric_ok);
    }

    #[test]
    fn ou_heat_identity_on_gaussian() {
        let g = OuGrid::new(8.0, 2000).unwrap();
        let pts = g.points();
        let f: Vec<f64> = pts.iter().map(|x| (-x * x).exp()).collect();
        let d = ou_heat_identity_check(&g, &f, 0.3).unwrap();
        assert!(d.defect <= 1e-6, "{d:?}");
        // closed form: H_v exp(-y^2)(z) = (1 + 4v)^{-1/2} exp(-z^2 / (1 + 4v))
        let t: f64 = 0.3;
        let v = (1.0 - (-2.0 * t).exp()) / 4.0;
        let Carrier::Grid(o) = semigroup_apply(&SemigroupSpec::OuGrid(g.clone()), t, &Carrier::Grid(f)).unwrap() else {
            panic!()
        };
        for i in g.interior(t) {
            let z = (-t).exp() * pts[i];
            let exact = (-z * z / (1.0 + 4.0 * v)).exp() / (1.0 + 4.0 * v).sqrt();
            assert!((o[i] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn ou_unit_and_zero_time() {
        let g = OuGrid::new(8.0, 801).unwrap();
        let ones = vec![1.0; g.nodes];
        let d = ou_heat_identity_check(&g, &ones, 0.2).unwrap();
        assert!(d.defect < 1e-10);
        let f: Vec<f64> = g.points().iter().map(|x| x.sin()).collect();
        assert_eq!(ou_heat_identity_check(&g, &f, 0.0).unwrap().defect, 0.0);
        assert!(matches!(OuGrid::new(3.0, 100), Err(Error::GridTooNarrow(_))));
    }

    #[test]
    fn tgrid_parsing() {
        let g: TGrid = "log:1e-3:1e3:60".parse().unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!(g.values()[0], 1e-3);
        assert_eq!(g.values()[59], 1e3);
        assert_eq!(g, TGrid::default());
        let l: TGrid = "list:0.1,1,10".parse().unwrap();
        assert_eq!(l.values(), &[0.1, 1.0, 10.0]);
        assert!("list:1,0.5".parse::<TGrid>().is_err());
        assert!("lin:1:2:3".parse::<TGrid>().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = SemigroupSpec::CyclicMultiplier { big_n: 8, psi: Psi::power(1.0, 1.0) };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"kind":"cyclic_multiplier","N":8,"psi":{"form":"power","coef":1.0,"exponent":1.0}}"#);
        let back: SemigroupSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let h: SemigroupSpec = serde_json::from_str(r#"{"kind":"schur_length","n":3,"psi":{"form":"power","exponent":2}}"#).unwrap();
        assert_eq!(h, SemigroupSpec::heat_schur(3));
    }
}
