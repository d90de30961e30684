//! BMO norm engines.
//!
//! * [`bmo_semigroup_norm`]: `sup_t || (S_t|f|^2 - |S_t f|^2)^{1/2} ||` over a time grid;
//! * [`bmo_metric_norm`]: the Markov-metric norm with `M_t = R_{1,t}`,
//!   `sup_{t,j} || gamma_j^{-1} (R_j|f|^2 - |R_j f|^2 + |R_j f - R_1 f|^2)^{1/2} ||`;
//! * [`bmo_opval_ball_norm`]: `sup_B || (avg_B |f - f_B|^2)^{1/2} ||` for `f: Z_N -> M_m`.
//!
//! Norms of square roots of PSD elements are taken as square roots of norms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{MarkovMetricSpec, MetricVariant};
use crate::opalg::{apply_cpu, hermitian_eigenvalues, CMatrix, CpuMap, C64};
use crate::semigroup::{semigroup_apply, Carrier, SemigroupSpec, TGrid};

/// PSD gaps below `-POSITIVITY_TOL * scale` abort with [`Error::PositivityViolation`].
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BmoSide {
    Column,
    Row,
    Max,
}

impl std::str::FromStr for BmoSide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "column" => Ok(BmoSide::Column),
            "row" => Ok(BmoSide::Row),
            "max" => Ok(BmoSide::Max),
            _ => Err(Error::Parse(format!("side '{s}': expected column, row or max"))),
        }
    }
}

/// One evaluation point of a BMO supremum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmoSample {
    pub t: f64,
    pub j: Option<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmoReport {
    pub value: f64,
    pub side: BmoSide,
    /// Time of the maximum; for the ball engine, the radius.
    pub argmax_t: f64,
    /// Index of the maximum; for the ball engine, the arc center.
    pub argmax_j: Option<usize>,
    /// True when the maximum sits on an endpoint of the time grid.
    pub boundary: bool,
    pub samples: Vec<BmoSample>,
    pub note: Option<String>,
    /// Set by engines that estimate truncation bias by refinement.
    pub refinement_stable: Option<bool>,
}

impl BmoReport {
    pub(crate) fn from_samples(samples: Vec<BmoSample>, side: BmoSide, grid: Option<&TGrid>) -> Self {
        let mut best = 0usize;
        for (i, s) in samples.iter().enumerate() {
            if s.value > samples[best].value {
                best = i;
            }
        }
        let (value, argmax_t, argmax_j) = samples
            .get(best)
            .map(|s| (s.value, s.t, s.j))
            .unwrap_or((0.0, 0.0, None));
        let boundary = grid.map(|g| g.is_endpoint(argmax_t)).unwrap_or(false);
        BmoReport {
            value,
            side,
            argmax_t,
            argmax_j,
            boundary,
            samples,
            note: None,
            refinement_stable: None,
        }
    }

    /// Drops the per-sample table.
    pub fn terse(mut self) -> Self {
        self.samples.clear();
        self
    }
}

/// Largest eigenvalue of a Hermitian `g` after asserting `g >= -tol * scale`.
fn psd_top(g: &CMatrix, scale: f64) -> Result<f64> {
    let ev = hermitian_eigenvalues(&g.hermitian_part())?;
    let tol = POSITIVITY_TOL * scale.max(1.0);
    if ev[0] < -tol {
        return Err(Error::PositivityViolation { gap: ev[0], tol });
    }
    Ok(ev[ev.len() - 1].max(0.0))
}

/// `S_t|f|^2 - |S_t f|^2` (column) for a matrix carrier and a Schur-type map.
fn matrix_column_gap(phi: &CpuMap, f: &CMatrix) -> Result<CMatrix> {
    let sf = apply_cpu(phi, f)?;
    Ok(&apply_cpu(phi, &f.abs_sq())? - &sf.abs_sq())
}

fn matrix_semigroup_samples(f: &CMatrix, s: &SemigroupSpec, grid: &TGrid) -> Result<Vec<BmoSample>> {
    let f2 = f.abs_sq();
    let scale = f2.max_abs();
    grid.values()
        .iter()
        .map(|&t| {
            let Carrier::Matrix(sf) = semigroup_apply(s, t, &Carrier::Matrix(f.clone()))? else {
                unreachable!()
            };
            let Carrier::Matrix(sf2) = semigroup_apply(s, t, &Carrier::Matrix(f2.clone()))? else {
                unreachable!()
            };
            let g = &sf2 - &sf.abs_sq();
            Ok(BmoSample {
                t,
                j: None,
                value: psd_top(&g, scale)?.sqrt(),
            })
        })
        .collect()
}

fn scalar_gap_top(sf2: &[f64], sf: &[C64], idx: &[usize], scale: f64) -> Result<f64> {
    let tol = POSITIVITY_TOL * scale.max(1.0);
    let mut top = 0.0f64;
    for &i in idx {
        let g = sf2[i] - sf[i].norm_sqr();
        if g < -tol {
            return Err(Error::PositivityViolation { gap: g, tol });
        }
        top = top.max(g);
    }
    Ok(top)
}

/// Semigroup BMO norm on a time grid.
///
/// Matrix carriers use the column gap `S_t(f^* f) - (S_t f)^*(S_t f)`; the row
/// value is the column value of `f^*`. Function carriers are commutative, where
/// both sides agree.
pub fn bmo_semigroup_norm(f: &Carrier, s: &SemigroupSpec, grid: &TGrid, side: BmoSide) -> Result<BmoReport> {
    s.validate()?;
    let samples = match f {
        Carrier::Matrix(a) => match side {
            BmoSide::Column => matrix_semigroup_samples(a, s, grid)?,
            BmoSide::Row => matrix_semigroup_samples(&a.adjoint(), s, grid)?,
            BmoSide::Max => {
                let c = matrix_semigroup_samples(a, s, grid)?;
                let r = matrix_semigroup_samples(&a.adjoint(), s, grid)?;
                c.into_iter()
                    .zip(r)
                    .map(|(c, r)| BmoSample {
                        t: c.t,
                        j: None,
                        value: c.value.max(r.value),
                    })
                    .collect()
            }
        },
        Carrier::Cyclic(v) => {
            let sq: Vec<C64> = v.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
            let scale = sq.iter().fold(0.0f64, |m, z| m.max(z.re));
            let idx: Vec<usize> = (0..v.len()).collect();
            grid.values()
                .iter()
                .map(|&t| {
                    let Carrier::Cyclic(sf) = semigroup_apply(s, t, f)? else { unreachable!() };
                    let Carrier::Cyclic(sf2) = semigroup_apply(s, t, &Carrier::Cyclic(sq.clone()))? else {
                        unreachable!()
                    };
                    let re: Vec<f64> = sf2.iter().map(|z| z.re).collect();
                    Ok(BmoSample {
                        t,
                        j: None,
                        value: scalar_gap_top(&re, &sf, &idx, scale)?.sqrt(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Carrier::Grid(v) => {
            let SemigroupSpec::OuGrid(g) = s else {
                return Err(Error::CarrierMismatch("grid carrier needs the OU kind".into()));
            };
            let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
            let scale = sq.iter().fold(0.0f64, |m, x| m.max(*x));
            grid.values()
                .iter()
                .map(|&t| {
                    let Carrier::Grid(sf) = semigroup_apply(s, t, f)? else { unreachable!() };
                    let Carrier::Grid(sf2) = semigroup_apply(s, t, &Carrier::Grid(sq.clone()))? else {
                        unreachable!()
                    };
                    let sfc: Vec<C64> = sf.iter().map(|x| C64::new(*x, 0.0)).collect();
                    Ok(BmoSample {
                        t,
                        j: None,
                        value: scalar_gap_top(&sf2, &sfc, &g.interior(t), scale)?.sqrt(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(BmoReport::from_samples(samples, side, Some(grid)))
}

/// Markov-metric BMO norm (column side) with the fixed choice `M_t = R_{1,t}`.
///
/// Supported carriers: matrices for the sinc matrix metric, periodic samples
/// on `Z_N` (the circle of length 1) for the one-dimensional Euclidean metric.
/// The quantum-torus metric has its own engine in the `qtorus` module.
pub fn bmo_metric_norm(f: &Carrier, q: &MarkovMetricSpec, grid: &TGrid) -> Result<BmoReport> {
    let mut samples = Vec::new();
    match (q.variant(), f) {
        (MetricVariant::MatrixSinc { n }, Carrier::Matrix(a)) => {
            if a.dim() != *n {
                return Err(Error::DimensionMismatch { expected: *n, got: a.dim() });
            }
            let a2 = a.abs_sq();
            let scale = a2.max_abs();
            for &t in grid.values() {
                let big_j = q.truncation(t);
                let r1 = q.r_map(1, t, *n)?;
                let r1f = apply_cpu(&r1, a)?;
                for j in 1..=big_j {
                    let rj = q.r_map(j, t, *n)?;
                    let rjf = apply_cpu(&rj, a)?;
                    let g = &(&apply_cpu(&rj, &a2)? - &rjf.abs_sq()) + &(&rjf - &r1f).abs_sq();
                    let top = psd_top(&g, scale)?;
                    samples.push(BmoSample {
                        t,
                        j: Some(j),
                        value: (top / q.gamma_sq(j, t)?).sqrt(),
                    });
                }
            }
        }
        (MetricVariant::EuclideanHeat { n: 1 }, Carrier::Cyclic(v)) => {
            let big_n = v.len();
            let sq: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
            let scale = sq.iter().fold(0.0f64, |m, x| m.max(*x));
            for &t in grid.values() {
                let big_j = q.truncation(t);
                let r1f = kernel_apply(&q.r_map(1, t, big_n)?, v);
                for j in 1..=big_j {
                    let rj = q.r_map(j, t, big_n)?;
                    let rjf = kernel_apply(&rj, v);
                    let rjsq = kernel_apply_real(&rj, &sq);
                    let tol = POSITIVITY_TOL * scale.max(1.0);
                    let mut top = 0.0f64;
                    for x in 0..big_n {
                        let osc = rjsq[x] - rjf[x].norm_sqr();
                        if osc < -tol {
                            return Err(Error::PositivityViolation { gap: osc, tol });
                        }
                        top = top.max(osc + (rjf[x] - r1f[x]).norm_sqr());
                    }
                    samples.push(BmoSample {
                        t,
                        j: Some(j),
                        value: (top / q.gamma_sq(j, t)?).sqrt(),
                    });
                }
            }
        }
        (v, _) => {
            return Err(Error::MetricCarrierMismatch(format!(
                "{} metric with this carrier",
                v.name()
            )))
        }
    }
    let mut r = BmoReport::from_samples(samples, BmoSide::Column, Some(grid));
    r.note = Some("M_t fixed to R_{1,t}: upper bound for the infimum over cpu maps".into());
    Ok(r)
}

/// Same norm without the `|R_j f - R_1 f|^2` term.
pub fn bmo_metric_norm_without_mean(f: &Carrier, q: &MarkovMetricSpec, grid: &TGrid) -> Result<BmoReport> {
    let mut samples = Vec::new();
    match (q.variant(), f) {
        (MetricVariant::MatrixSinc { n }, Carrier::Matrix(a)) => {
            let scale = a.abs_sq().max_abs();
            for &t in grid.values() {
                for j in 1..=q.truncation(t) {
                    let rj = q.r_map(j, t, *n)?;
                    let top = psd_top(&matrix_column_gap(&rj, a)?, scale)?;
                    samples.push(BmoSample {
                        t,
                        j: Some(j),
                        value: (top / q.gamma_sq(j, t)?).sqrt(),
                    });
                }
            }
        }
        (MetricVariant::EuclideanHeat { n: 1 }, Carrier::Cyclic(v)) => {
            let sq: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
            let idx: Vec<usize> = (0..v.len()).collect();
            let scale = sq.iter().fold(0.0f64, |m, x| m.max(*x));
            for &t in grid.values() {
                for j in 1..=q.truncation(t) {
                    let rj = q.r_map(j, t, v.len())?;
                    let top = scalar_gap_top(&kernel_apply_real(&rj, &sq), &kernel_apply(&rj, v), &idx, scale)?;
                    samples.push(BmoSample {
                        t,
                        j: Some(j),
                        value: (top / q.gamma_sq(j, t)?).sqrt(),
                    });
                }
            }
        }
        (v, _) => {
            return Err(Error::MetricCarrierMismatch(format!(
                "{} metric with this carrier",
                v.name()
            )))
        }
    }
    Ok(BmoReport::from_samples(samples, BmoSide::Column, Some(grid)))
}

fn kernel_apply(phi: &CpuMap, v: &[C64]) -> Vec<C64> {
    match phi {
        CpuMap::GridKernel { weights, kernel, .. } => (0..v.len())
            .map(|i| (0..v.len()).map(|j| v[j] * (kernel[(i, j)] * weights[j])).sum())
            .collect(),
        _ => unreachable!("function carriers use grid kernels"),
    }
}

fn kernel_apply_real(phi: &CpuMap, v: &[f64]) -> Vec<f64> {
    match phi {
        CpuMap::GridKernel { weights, kernel, .. } => (0..v.len())
            .map(|i| (0..v.len()).map(|j| v[j] * kernel[(i, j)] * weights[j]).sum())
            .collect(),
        _ => unreachable!("function carriers use grid kernels"),
    }
}

/// Operator-valued ball BMO on `Z_N`.
///
/// Arcs are `{c - r, ..., c + r}` taken as a list of `2r + 1` points mod `N`
/// (for `r = N/2` at even `N` one point is counted twice).
pub fn bmo_opval_ball_norm(f: &[CMatrix], radii: &[usize]) -> Result<BmoReport> {
    if radii.is_empty() {
        return Err(Error::EmptyRadii);
    }
    let big_n = f.len();
    if big_n < 2 {
        return Err(Error::InvalidParams("need N >= 2 sample points".into()));
    }
    let m = f[0].dim();
    if let Some(bad) = f.iter().find(|a| a.dim() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad.dim() });
    }
    if let Some(&r) = radii.iter().find(|&&r| r == 0 || r > big_n / 2) {
        return Err(Error::InvalidParams(format!("radius {r} outside 1..={}", big_n / 2)));
    }
    let squares: Vec<CMatrix> = f.iter().map(|a| a.abs_sq()).collect();
    let scale = squares.iter().fold(0.0f64, |s, a| s.max(a.max_abs()));
    let mut samples = Vec::with_capacity(radii.len() * big_n);
    for &r in radii {
        let count = (2 * r + 1) as f64;
        for c in 0..big_n {
            let mut mean = CMatrix::zeros(m);
            let mut mean_sq = CMatrix::zeros(m);
            for off in 0..=2 * r {
                let x = (c + big_n * (r + 1) + off - r) % big_n;
                mean = &mean + &f[x];
                mean_sq = &mean_sq + &squares[x];
            }
            let mean = mean.scale_real(1.0 / count);
            let g = &mean_sq.scale_real(1.0 / count) - &mean.abs_sq();
            samples.push(BmoSample {
                t: r as f64,
                j: Some(c),
                value: psd_top(&g, scale)?.sqrt(),
            });
        }
    }
    let mut rep = BmoReport::from_samples(samples, BmoSide::Column, None);
    rep.note = Some("argmax_t is the arc radius, argmax_j the arc center".into());
    Ok(rep)
}
