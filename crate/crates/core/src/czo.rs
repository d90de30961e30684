//! Calderón-Zygmund operators at finite dimension: triangular truncation,
//! Fourier multipliers on `Z_N` and on matrices, and numerical probes.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{centered, idft, multiply};
use crate::opalg::{norm, CMatrix, C64};
use crate::semigroup::{SemigroupSpec, TGrid};

/// `△(A) = sum_{m > k} a_{mk} e_{mk}`.
pub fn triangular_truncation(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.dim(), |m, k| if m > k { a.get(m, k) } else { C64::new(0.0, 0.0) })
}

/// `T = i (id - 2△)`.
pub fn hilbert_type_transform(a: &CMatrix) -> CMatrix {
    let i = C64::new(0.0, 1.0);
    CMatrix::from_fn(a.dim(), |m, k| {
        let z = a.get(m, k);
        if m > k {
            -i * z
        } else {
            i * z
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum MultiplierDomain {
    /// Frequencies `k mod N`.
    Cyclic {
        #[serde(rename = "N")]
        big_n: usize,
    },
    /// Schur multiplier on `M_n` depending on `m - k`.
    MatrixSchur { n: usize },
}

/// Symbol of a Fourier multiplier. Cyclic values are indexed by `k mod N`;
/// matrix values by `m - k + n - 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierSymbol {
    pub domain: MultiplierDomain,
    values: Vec<C64>,
}

impl MultiplierSymbol {
    pub fn new(domain: MultiplierDomain, values: Vec<C64>) -> Result<Self> {
        let expected = match domain {
            MultiplierDomain::Cyclic { big_n } => big_n,
            MultiplierDomain::MatrixSchur { n } => (2 * n).saturating_sub(1),
        };
        if expected == 0 || values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParams("symbol values must be finite".into()));
        }
        Ok(MultiplierSymbol { domain, values })
    }

    /// Cyclic symbol from a function of the centered frequency in `(-N/2, N/2]`.
    pub fn cyclic_from_fn(big_n: usize, f: impl Fn(i64) -> C64) -> Result<Self> {
        Self::new(
            MultiplierDomain::Cyclic { big_n },
            (0..big_n).map(|k| f(centered(k, big_n))).collect(),
        )
    }

    /// Matrix symbol from a function of `d = m - k`.
    pub fn schur_from_fn(n: usize, f: impl Fn(i64) -> C64) -> Result<Self> {
        Self::new(
            MultiplierDomain::MatrixSchur { n },
            (0..(2 * n).saturating_sub(1)).map(|i| f(i as i64 - n as i64 + 1)).collect(),
        )
    }

    /// `-i sgn(k)`, zero at `k = 0` and at the Nyquist frequency of even `N`.
    pub fn hilbert_cyclic(big_n: usize) -> Result<Self> {
        Self::cyclic_from_fn(big_n, move |k| {
            if k == 0 || (big_n % 2 == 0 && k == big_n as i64 / 2) {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, -(k.signum() as f64))
            }
        })
    }

    /// `-i sgn(m - k)` on matrices; `(id + iH)/2` is `id - △` off the diagonal.
    pub fn hilbert_schur(n: usize) -> Result<Self> {
        Self::schur_from_fn(n, |d| C64::new(0.0, -(d.signum() as f64)))
    }

    pub fn identity(domain: MultiplierDomain) -> Result<Self> {
        let len = match domain {
            MultiplierDomain::Cyclic { big_n } => big_n,
            MultiplierDomain::MatrixSchur { n } => (2 * n).saturating_sub(1),
        };
        Self::new(domain, vec![C64::new(1.0, 0.0); len])
    }

    /// Character `x -> exp(2 pi i k0 x / N)` viewed as a symbol.
    pub fn modulation(big_n: usize, k0: i64) -> Result<Self> {
        Self::new(
            MultiplierDomain::Cyclic { big_n },
            (0..big_n)
                .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k0 * k as i64) as f64 / big_n as f64))
                .collect(),
        )
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `L^2` operator norm, `max |symbol|`.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// For cyclic symbols: `m(-k) = conj(m(k))`, so real inputs stay real.
    pub fn preserves_real(&self) -> bool {
        match self.domain {
            MultiplierDomain::Cyclic { big_n } => {
                (0..big_n).all(|k| (self.values[(big_n - k) % big_n] - self.values[k].conj()).norm() < 1e-14)
            }
            MultiplierDomain::MatrixSchur { n } => {
                (0..2 * n - 1).all(|i| (self.values[2 * n - 2 - i] - self.values[i].conj()).norm() < 1e-14)
            }
        }
    }

    /// Convolution kernel `k(d)` on `Z_N`, the inverse transform of the symbol.
    pub fn kernel(&self) -> Result<Vec<C64>> {
        match self.domain {
            MultiplierDomain::Cyclic { .. } => Ok(idft(&self.values)),
            MultiplierDomain::MatrixSchur { .. } => Err(Error::CarrierMismatch("kernel needs a cyclic symbol".into())),
        }
    }
}

/// Input of [`fourier_multiplier_apply`].
#[derive(Clone, Debug, PartialEq)]
pub enum MultiplierCarrier {
    /// Values on `Z_N`.
    Cyclic(Vec<C64>),
    /// Fourier coefficients on `Z_N`, indexed by `k mod N`.
    Coefficients(Vec<C64>),
    /// Operator-valued `f: Z_N -> M_m`.
    OperatorValued(Vec<CMatrix>),
    Matrix(CMatrix),
}

pub fn fourier_multiplier_apply(sym: &MultiplierSymbol, f: &MultiplierCarrier) -> Result<MultiplierCarrier> {
    let mismatch = |what: &str| Error::CarrierMismatch(format!("{what} against a {:?} symbol", sym.domain));
    match (sym.domain, f) {
        (MultiplierDomain::Cyclic { big_n }, MultiplierCarrier::Cyclic(v)) => {
            if v.len() != big_n {
                return Err(Error::DimensionMismatch { expected: big_n, got: v.len() });
            }
            Ok(MultiplierCarrier::Cyclic(multiply(v, &sym.values)))
        }
        (MultiplierDomain::Cyclic { big_n }, MultiplierCarrier::Coefficients(c)) => {
            if c.len() != big_n {
                return Err(Error::DimensionMismatch { expected: big_n, got: c.len() });
            }
            Ok(MultiplierCarrier::Coefficients(
                c.iter().zip(&sym.values).map(|(a, b)| a * b).collect(),
            ))
        }
        (MultiplierDomain::Cyclic { big_n }, MultiplierCarrier::OperatorValued(fs)) => {
            if fs.len() != big_n {
                return Err(Error::DimensionMismatch { expected: big_n, got: fs.len() });
            }
            let m = fs[0].dim();
            if let Some(bad) = fs.iter().find(|a| a.dim() != m) {
                return Err(Error::DimensionMismatch { expected: m, got: bad.dim() });
            }
            let mut out: Vec<CMatrix> = (0..big_n).map(|_| CMatrix::zeros(m)).collect();
            for r in 0..m {
                for c in 0..m {
                    let series: Vec<C64> = fs.iter().map(|a| a.get(r, c)).collect();
                    for (x, z) in multiply(&series, &sym.values).into_iter().enumerate() {
                        out[x].set(r, c, z);
                    }
                }
            }
            Ok(MultiplierCarrier::OperatorValued(out))
        }
        (MultiplierDomain::MatrixSchur { n }, MultiplierCarrier::Matrix(a)) => {
            if a.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
            }
            Ok(MultiplierCarrier::Matrix(CMatrix::from_fn(n, |m, k| {
                a.get(m, k) * sym.values[m + n - 1 - k]
            })))
        }
        (_, MultiplierCarrier::Matrix(_)) => Err(mismatch("matrix carrier")),
        (_, MultiplierCarrier::Cyclic(_)) => Err(mismatch("cyclic carrier")),
        (_, MultiplierCarrier::Coefficients(_)) => Err(mismatch("coefficient carrier")),
        (_, MultiplierCarrier::OperatorValued(_)) => Err(mismatch("operator-valued carrier")),
    }
}

/// Power-iteration estimate of the `L^2` norm of a cyclic multiplier, run on
/// the circulant matrix rather than on the symbol.
pub fn multiplier_norm_power_iteration(sym: &MultiplierSymbol, iterations: usize) -> Result<f64> {
    let MultiplierDomain::Cyclic { big_n } = sym.domain else {
        return Err(Error::CarrierMismatch("power iteration needs a cyclic symbol".into()));
    };
    let k = sym.kernel()?;
    let circ = CMatrix::from_fn(big_n, |x, y| k[(x + big_n - y) % big_n]);
    let gram = &circ.adjoint() * &circ;
    let mut v: Vec<C64> = (0..big_n).map(|i| C64::new(1.0 + 0.1 * i as f64, 0.3 * (i as f64).sin())).collect();
    let mut est = 0.0;
    for _ in 0..iterations {
        let w: Vec<C64> = (0..big_n)
            .map(|i| (0..big_n).map(|j| gram.get(i, j) * v[j]).sum())
            .collect();
        let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nw == 0.0 {
            return Ok(0.0);
        }
        est = (nw / nv).sqrt();
        v = w.into_iter().map(|z| z / nw).collect();
    }
    Ok(est)
}

/// Largest entry modulus of
/// `[P_t|A|^2 - |P_t A|^2] - [P_t|TA|^2 - |P_t TA|^2]` over the grid, with
/// `T = i(id - 2△)`, `|X|^2 = X^* X` and the Poisson Schur semigroup `e^{-t|m-k|}`.
pub fn czo_bmo_identity_check(a: &CMatrix, grid: &TGrid) -> Result<f64> {
    let n = a.dim();
    let ta = hilbert_type_transform(a);
    let a2 = a.abs_sq();
    let ta2 = ta.abs_sq();
    let s = SemigroupSpec::poisson_schur(n);
    let mut defect = 0.0f64;
    for &t in grid.values() {
        let p = s.symbol_matrix(t)?;
        let pa = a.hadamard(&p);
        let pta = ta.hadamard(&p);
        let lhs = &a2.hadamard(&p) - &pa.abs_sq();
        let rhs = &ta2.hadamard(&p) - &pta.abs_sq();
        defect = defect.max(lhs.max_abs_diff(&rhs));
    }
    Ok(defect)
}

/// One row of a probe report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub probe: String,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub measured: f64,
    pub bound: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzoProbeReport {
    pub probe: String,
    pub rows: Vec<ProbeRow>,
    pub pass: bool,
}

impl CzoProbeReport {
    fn from_rows(probe: &str, rows: Vec<ProbeRow>) -> Self {
        let pass = rows.iter().all(|r| r.pass);
        CzoProbeReport {
            probe: probe.into(),
            rows,
            pass,
        }
    }

    pub fn measured(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.measured).collect()
    }
}

/// Empirical `max ||△A||_p / ||A||_p` over Gaussian samples, against `p^2/(p-1)`.
pub fn schatten_growth_probe(n: usize, samples: usize, p_list: &[f64], seed: u64) -> Result<CzoProbeReport> {
    if n < 2 || samples == 0 {
        return Err(Error::InvalidParams("need n >= 2 and at least one sample".into()));
    }
    if let Some(&p) = p_list.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
        return Err(Error::InvalidP(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats: Vec<(CMatrix, CMatrix)> = (0..samples)
        .map(|_| {
            let a = CMatrix::random_gaussian(n, &mut rng);
            let t = triangular_truncation(&a);
            (a, t)
        })
        .collect();
    let svs: Vec<(Vec<f64>, Vec<f64>)> = mats
        .iter()
        .map(|(a, t)| (crate::opalg::singular_values(a), crate::opalg::singular_values(t)))
        .collect();
    let mut rows = Vec::new();
    for &p in p_list {
        let mut worst = 0.0f64;
        for (sa, st) in &svs {
            let na = crate::opalg::schatten_from_singular(sa, p)?;
            let nt = crate::opalg::schatten_from_singular(st, p)?;
            worst = worst.max(nt / na);
        }
        let bound = p * p / (p - 1.0);
        rows.push(ProbeRow {
            probe: "schatten_growth".into(),
            params: BTreeMap::from([
                ("n".into(), n as f64),
                ("p".into(), p),
                ("samples".into(), samples as f64),
            ]),
            seed: Some(seed),
            measured: worst,
            bound: Some(bound),
            pass: worst <= bound,
        });
    }
    Ok(CzoProbeReport::from_rows("schatten_growth", rows))
}

/// Direct Schatten ratio through [`norm`], for spot checks.
pub fn truncation_ratio(a: &CMatrix, p: f64) -> Result<f64> {
    Ok(norm(&triangular_truncation(a), p)? / norm(a, p)?)
}

/// Discrete smoothness constant of a cyclic multiplier:
/// `sup_{y1, y2 in B} sum_{z not in lambda B} |k(y1 - z) - k(y2 - z)|`
/// for arcs `B = [c - r, c + r]` (translation invariance fixes `c = 0`).
pub fn hormander_probe(sym: &MultiplierSymbol, lambda: usize, radii: &[usize]) -> Result<CzoProbeReport> {
    let MultiplierDomain::Cyclic { big_n } = sym.domain else {
        return Err(Error::CarrierMismatch("the smoothness probe needs a cyclic symbol".into()));
    };
    if lambda < 2 {
        return Err(Error::InvalidParams("lambda must be at least 2".into()));
    }
    if radii.is_empty() {
        return Err(Error::EmptyRadii);
    }
    let rmax = *radii.iter().max().unwrap();
    if rmax == 0 || big_n < 4 * lambda * rmax {
        return Err(Error::RadiusTooLarge(format!(
            "N = {big_n} needs N >= 4 lambda r = {}",
            4 * lambda * rmax
        )));
    }
    let k = sym.kernel()?;
    let ni = big_n as i64;
    let at = |d: i64| k[d.rem_euclid(ni) as usize];
    let mut rows = Vec::new();
    for &r in radii {
        let r = r as i64;
        let outer = lambda as i64 * r;
        let outside: Vec<i64> = (outer + 1..ni - outer).collect();
        let mut best = 0.0f64;
        for y1 in -r..=r {
            for y2 in y1 + 1..=r {
                let s: f64 = outside.iter().map(|&z| (at(y1 - z) - at(y2 - z)).norm()).sum();
                best = best.max(s);
            }
        }
        rows.push(ProbeRow {
            probe: "hormander".into(),
            params: BTreeMap::from([
                ("N".into(), big_n as f64),
                ("lambda".into(), lambda as f64),
                ("r".into(), r as f64),
            ]),
            seed: None,
            measured: best,
            bound: None,
            pass: best.is_finite(),
        });
    }
    Ok(CzoProbeReport::from_rows("hormander", rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::norm;

    #[test]
    fn truncation_examples() {
        assert_eq!(triangular_truncation(&CMatrix::identity(4)), CMatrix::zeros(4));
        let e21 = CMatrix::unit(3, 1, 0);
        assert_eq!(triangular_truncation(&e21), e21);
        let ones = CMatrix::from_fn(3, |_, _| C64::new(1.0, 0.0));
        let t = triangular_truncation(&ones);
        assert!((norm(&t, 2.0).unwrap() - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn identity_e12() {
        let a = CMatrix::unit(2, 0, 1);
        assert_eq!(hilbert_type_transform(&a), a.scale(C64::new(0.0, 1.0)));
        let grid = TGrid::default();
        assert!(czo_bmo_identity_check(&a, &grid).unwrap() < 1e-15);
        assert_eq!(czo_bmo_identity_check(&CMatrix::zeros(3), &grid).unwrap(), 0.0);
    }

    #[test]
    fn hilbert_delta_against_naive_dft() {
        let n = 8;
        let h = MultiplierSymbol::hilbert_cyclic(n).unwrap();
        let mut delta = vec![C64::new(0.0, 0.0); n];
        delta[0] = C64::new(1.0, 0.0);
        let MultiplierCarrier::Cyclic(out) = fourier_multiplier_apply(&h, &MultiplierCarrier::Cyclic(delta)).unwrap()
        else {
            panic!()
        };
        for x in 0..n {
            let mut z = C64::new(0.0, 0.0);
            for k in 0..n {
                let kc = centered(k, n);
                let s = if kc == 0 || kc == 4 { 0.0 } else { -(kc.signum() as f64) };
                z += C64::new(0.0, s) * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * x) as f64 / n as f64);
            }
            assert!((out[x] - z / n as f64).norm() < 1e-12);
            assert!(out[x].im.abs() < 1e-15);
        }
        assert!(h.preserves_real());
    }

    #[test]
    fn modulation_kernel_is_shifted_delta() {
        let m = MultiplierSymbol::modulation(16, 1).unwrap();
        let r = hormander_probe(&m, 2, &[1, 2]).unwrap();
        assert!(r.rows.iter().all(|x| x.measured < 1e-12));
        let id = MultiplierSymbol::identity(MultiplierDomain::Cyclic { big_n: 16 }).unwrap();
        assert!(hormander_probe(&id, 2, &[2]).unwrap().rows[0].measured < 1e-12);
        assert!(matches!(hormander_probe(&id, 2, &[3]), Err(Error::RadiusTooLarge(_))));
    }

    #[test]
    fn schatten_two_is_contractive() {
        let r = schatten_growth_probe(8, 10, &[2.0], 1).unwrap();
        assert!(r.rows[0].measured <= 1.0);
        assert!(matches!(schatten_growth_probe(8, 1, &[1.0], 1), Err(Error::InvalidP(_))));
    }
}
