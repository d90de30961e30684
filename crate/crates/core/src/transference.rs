//! Finite groups, convolution operators and transferred operators.
//!
//! For a kernel `k` on a finite group `G` the convolution operator on `l2(G)` is
//! `T = [k(g h^{-1})]_{g,h}`. Given a unitary representation `u`, the
//! conjugation action `f -> u_g f u_g^*` on `M_d` transfers `T` to
//!
//! ```text
//! V f = sum_g k(g) u_{g^{-1}} f u_{g^{-1}}^* ,
//! ```
//!
//! and the transference inequality `||V||_{B(S_2)} <= ||T||_{B(l2(G))}` holds
//! because the action preserves the trace.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opalg::{hermitian_eigenvalues, op_norm, CMatrix, C64};

const REP_TOL: f64 = 1e-12;
const CND_TOL: f64 = 1e-10;

/// Multiplication table of a finite group. Element 0 need not be the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroupJson", into = "GroupJson")]
pub struct FiniteGroupTable {
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    identity: usize,
    labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GroupJson {
    order: usize,
    mul: Vec<Vec<usize>>,
    #[serde(default)]
    labels: Vec<String>,
}

impl TryFrom<GroupJson> for FiniteGroupTable {
    type Error = Error;
    fn try_from(j: GroupJson) -> Result<Self> {
        if j.mul.len() != j.order {
            return Err(Error::InvalidGroup(format!("table has {} rows, order {}", j.mul.len(), j.order)));
        }
        let labels = if j.labels.is_empty() {
            (0..j.order).map(|i| format!("g{i}")).collect()
        } else {
            j.labels
        };
        FiniteGroupTable::from_table(j.mul, labels)
    }
}

impl From<FiniteGroupTable> for GroupJson {
    fn from(g: FiniteGroupTable) -> Self {
        GroupJson {
            order: g.order(),
            mul: g.mul,
            labels: g.labels,
        }
    }
}

impl FiniteGroupTable {
    /// Validates the group axioms exhaustively (orders up to 64).
    pub fn from_table(mul: Vec<Vec<usize>>, labels: Vec<String>) -> Result<Self> {
        let n = mul.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty group".into()));
        }
        if n > 64 {
            return Err(Error::InvalidGroup(format!("order {n} exceeds 64")));
        }
        if labels.len() != n {
            return Err(Error::InvalidGroup(format!("{} labels for order {n}", labels.len())));
        }
        for row in &mul {
            if row.len() != n || row.iter().any(|&x| x >= n) {
                return Err(Error::InvalidGroup("table entries out of range".into()));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| mul[e][g] == g && mul[g][e] == g))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inv = vec![0; n];
        for g in 0..n {
            inv[g] = (0..n)
                .find(|&h| mul[g][h] == identity && mul[h][g] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {g} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(Error::InvalidGroup(format!("associativity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        Ok(Self {
            mul,
            inv,
            identity,
            labels,
        })
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup("Z_0".into()));
        }
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(mul, (0..n).map(|i| i.to_string()).collect())
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.mul[a][b] == self.mul[b][a]))
    }
}

/// Built-in groups together with a faithful unitary representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedGroup {
    Cyclic(usize),
    S3,
    D4,
    Q8,
}

impl std::str::FromStr for NamedGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "s3" => Ok(NamedGroup::S3),
            "d4" => Ok(NamedGroup::D4),
            "q8" => Ok(NamedGroup::Q8),
            _ => {
                let digits = lower.strip_prefix('z').unwrap_or("");
                digits
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 1)
                    .map(NamedGroup::Cyclic)
                    .ok_or_else(|| Error::InvalidGroup(format!("unknown group '{s}' (Z<N>, S3, D4, Q8)")))
            }
        }
    }
}

impl NamedGroup {
    /// Group table and its defining representation (2-dimensional for S3, D4, Q8,
    /// the cyclic shift on `C^N` for `Z_N`).
    pub fn build(self) -> Result<(FiniteGroupTable, UnitaryRep)> {
        match self {
            NamedGroup::Cyclic(n) => {
                let g = FiniteGroupTable::cyclic(n)?;
                let rep = UnitaryRep::cyclic_shift(&g)?;
                Ok((g, rep))
            }
            NamedGroup::S3 => {
                let (c, s) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
                generated(&[("r", real2(c, -s, s, c)), ("s", real2(1.0, 0.0, 0.0, -1.0))])
            }
            NamedGroup::D4 => generated(&[("r", real2(0.0, -1.0, 1.0, 0.0)), ("s", real2(1.0, 0.0, 0.0, -1.0))]),
            NamedGroup::Q8 => {
                let i = C64::new(0.0, 1.0);
                let z = C64::new(0.0, 0.0);
                let qi = DMatrix::from_row_slice(2, 2, &[i, z, z, -i]);
                let qj = real2(0.0, 1.0, -1.0, 0.0);
                generated(&[("i", qi), ("j", qj)])
            }
        }
    }
}

fn real2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[a, b, c, d].map(|x| C64::new(x, 0.0)))
}

fn matrix_key(m: &DMatrix<C64>) -> Vec<i64> {
    m.iter()
        .flat_map(|z| [(z.re * 1e8).round() as i64, (z.im * 1e8).round() as i64])
        .collect()
}

/// Closes a set of unitary generators under multiplication. Elements are
/// listed in breadth-first order starting from the identity, labelled by words.
fn generated(gens: &[(&str, DMatrix<C64>)]) -> Result<(FiniteGroupTable, UnitaryRep)> {
    let d = gens[0].1.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let mut elems = vec![id.clone()];
    let mut labels = vec!["e".to_string()];
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    index.insert(matrix_key(&id), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (name, g) in gens {
            let m = &elems[i] * g;
            let key = matrix_key(&m);
            if !index.contains_key(&key) {
                if elems.len() >= 64 {
                    return Err(Error::InvalidGroup("generated group exceeds order 64".into()));
                }
                index.insert(key, elems.len());
                let label = if i == 0 { name.to_string() } else { format!("{}{}", labels[i], name) };
                labels.push(label);
                elems.push(m);
                queue.push_back(elems.len() - 1);
            }
        }
    }
    let n = elems.len();
    let mut mul = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let key = matrix_key(&(&elems[a] * &elems[b]));
            mul[a][b] = *index
                .get(&key)
                .ok_or_else(|| Error::InvalidGroup("generators are not closed".into()))?;
        }
    }
    let table = FiniteGroupTable::from_table(mul, labels)?;
    let mats = elems
        .into_iter()
        .map(CMatrix::from_dmatrix)
        .collect::<Result<Vec<_>>>()?;
    let rep = UnitaryRep::new(&table, mats)?;
    Ok((table, rep))
}

/// Complex-valued function on a finite group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupKernel {
    values: Vec<C64>,
}

impl GroupKernel {
    pub fn new(group: &FiniteGroupTable, values: Vec<C64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::DimensionMismatch { expected: group.order(), got: values.len() });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParams("kernel values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn delta(group: &FiniteGroupTable, g: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); group.order()];
        v[g] = C64::new(1.0, 0.0);
        Self { values: v }
    }

    /// Independent standard complex Gaussian values.
    pub fn random<R: Rng + ?Sized>(group: &FiniteGroupTable, rng: &mut R) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let values = (0..group.order())
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                C64::new(s * a, s * b)
            })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn l1_mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).sum()
    }
}

/// `[k(g h^{-1})]_{g,h}`, the left convolution by `k` on `l2(G)`.
pub fn convolution_matrix(group: &FiniteGroupTable, k: &GroupKernel) -> Result<CMatrix> {
    if k.values.len() != group.order() {
        return Err(Error::DimensionMismatch { expected: group.order(), got: k.values.len() });
    }
    Ok(CMatrix::from_fn(group.order(), |g, h| k.values[group.mul(g, group.inv(h))]))
}

/// Spectral norm of the convolution operator.
pub fn conv_l2_norm(group: &FiniteGroupTable, k: &GroupKernel) -> Result<f64> {
    Ok(op_norm(&convolution_matrix(group, k)?))
}

/// Unitary representation `g -> u_g`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryRep {
    mats: Vec<CMatrix>,
}

impl UnitaryRep {
    /// Checks `u(e) = I`, unitarity and the homomorphism law to `1e-12`.
    pub fn new(group: &FiniteGroupTable, mats: Vec<CMatrix>) -> Result<Self> {
        if mats.len() != group.order() {
            return Err(Error::InvalidRepresentation(format!(
                "{} matrices for a group of order {}",
                mats.len(),
                group.order()
            )));
        }
        let d = mats[0].dim();
        if mats.iter().any(|m| m.dim() != d) {
            return Err(Error::InvalidRepresentation("matrices of different sizes".into()));
        }
        let id = CMatrix::identity(d);
        if mats[group.identity()].max_abs_diff(&id) > REP_TOL {
            return Err(Error::InvalidRepresentation("u(e) is not the identity".into()));
        }
        for (g, u) in mats.iter().enumerate() {
            let dev = u.abs_sq().max_abs_diff(&id);
            if dev > REP_TOL {
                return Err(Error::InvalidRepresentation(format!("u({g}) not unitary ({dev:e})")));
            }
        }
        for g in 0..group.order() {
            for h in 0..group.order() {
                let dev = (&mats[g] * &mats[h]).max_abs_diff(&mats[group.mul(g, h)]);
                if dev > REP_TOL {
                    return Err(Error::InvalidRepresentation(format!(
                        "u({g}) u({h}) != u({g}{h}) ({dev:e})"
                    )));
                }
            }
        }
        Ok(Self { mats })
    }

    /// Left regular representation, `lambda_g e_h = e_{gh}`.
    pub fn regular(group: &FiniteGroupTable) -> Result<Self> {
        let n = group.order();
        let mats = (0..n)
            .map(|g| CMatrix::from_fn(n, |k, h| C64::new(if group.mul(g, h) == k { 1.0 } else { 0.0 }, 0.0)))
            .collect();
        Self::new(group, mats)
    }

    pub fn trivial(group: &FiniteGroupTable, d: usize) -> Result<Self> {
        Self::new(group, vec![CMatrix::identity(d); group.order()])
    }

    /// `u_g = S^g` for the cyclic shift `S e_x = e_{x+1}` on `C^N`; needs `G = Z_N` as built by
    /// [`FiniteGroupTable::cyclic`].
    pub fn cyclic_shift(group: &FiniteGroupTable) -> Result<Self> {
        let n = group.order();
        let mats = (0..n)
            .map(|g| CMatrix::from_fn(n, |x, y| C64::new(if x == (y + g) % n { 1.0 } else { 0.0 }, 0.0)))
            .collect();
        Self::new(group, mats)
    }

    /// Diagonal representation `u_g = diag(exp(2 pi i g m_r / N))` of `Z_N`.
    pub fn cyclic_characters(group: &FiniteGroupTable, freqs: &[i64]) -> Result<Self> {
        let n = group.order();
        if freqs.is_empty() {
            return Err(Error::InvalidRepresentation("no frequencies".into()));
        }
        let mats = (0..n)
            .map(|g| {
                let d: Vec<C64> = freqs
                    .iter()
                    .map(|&m| {
                        let k = (g as i64 * m).rem_euclid(n as i64);
                        C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
                    })
                    .collect();
                CMatrix::diag(&d)
            })
            .collect();
        Self::new(group, mats)
    }

    /// Block sum `u ⊕ w`.
    pub fn direct_sum(&self, other: &Self, group: &FiniteGroupTable) -> Result<Self> {
        let (a, b) = (self.dim(), other.dim());
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(u, w)| {
                CMatrix::from_fn(a + b, |i, j| {
                    if i < a && j < a {
                        u.get(i, j)
                    } else if i >= a && j >= a {
                        w.get(i - a, j - a)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Self::new(group, mats)
    }

    pub fn dim(&self) -> usize {
        self.mats[0].dim()
    }

    pub fn get(&self, g: usize) -> &CMatrix {
        &self.mats[g]
    }
}

/// `V f = sum_g k(g) u_{g^{-1}} f u_{g^{-1}}^*`.
pub fn transferred_apply(
    group: &FiniteGroupTable,
    k: &GroupKernel,
    rep: &UnitaryRep,
    f: &CMatrix,
) -> Result<CMatrix> {
    if f.dim() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), got: f.dim() });
    }
    let mut acc = CMatrix::zeros(f.dim());
    for (g, kg) in k.values.iter().enumerate() {
        if *kg == C64::new(0.0, 0.0) {
            continue;
        }
        let u = rep.get(group.inv(g));
        acc = &acc + &(&(u * f) * &u.adjoint()).scale(*kg);
    }
    Ok(acc)
}

/// Matrix of `V` on Hilbert-Schmidt space in the row-major basis `e_ij -> i d + j`:
/// `sum_g k(g) u_{g^{-1}} (x) conj(u_{g^{-1}})`.
pub fn transferred_matrix(group: &FiniteGroupTable, k: &GroupKernel, rep: &UnitaryRep) -> Result<CMatrix> {
    let d = rep.dim();
    let mut m = DMatrix::<C64>::zeros(d * d, d * d);
    for (g, kg) in k.values.iter().enumerate() {
        let u = rep.get(group.inv(g));
        for i in 0..d {
            for a in 0..d {
                let uia = u.get(i, a) * kg;
                for j in 0..d {
                    for b in 0..d {
                        m[(i * d + j, a * d + b)] += uia * u.get(j, b).conj();
                    }
                }
            }
        }
    }
    CMatrix::from_dmatrix(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferenceReport {
    pub v_norm: f64,
    pub t_norm: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Compares `||V||` on `S_2(C^d)` with `||T||` on `l2(G)`; passes iff `||V|| <= (1 + 1e-9) ||T||`.
pub fn transference_check(group: &FiniteGroupTable, k: &GroupKernel, rep: &UnitaryRep) -> Result<TransferenceReport> {
    let v_norm = op_norm(&transferred_matrix(group, k, rep)?);
    let t_norm = conv_l2_norm(group, k)?;
    let ratio = if t_norm > 0.0 {
        v_norm / t_norm
    } else if v_norm == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(TransferenceReport {
        v_norm,
        t_norm,
        ratio,
        pass: v_norm <= (1.0 + 1e-9) * t_norm,
    })
}

/// Checks `psi(e) = 0`, `psi >= 0` and `psi(g^{-1}) = psi(g)`.
pub fn validate_length(group: &FiniteGroupTable, psi: &[f64]) -> Result<()> {
    if psi.len() != group.order() {
        return Err(Error::DimensionMismatch { expected: group.order(), got: psi.len() });
    }
    if psi[group.identity()] != 0.0 {
        return Err(Error::AsymmetricPsi(format!("psi(e) = {}", psi[group.identity()])));
    }
    for g in 0..group.order() {
        if !psi[g].is_finite() || psi[g] < 0.0 {
            return Err(Error::AsymmetricPsi(format!("psi({g}) = {} is not a finite length", psi[g])));
        }
        if psi[g] != psi[group.inv(g)] {
            return Err(Error::AsymmetricPsi(format!("psi({g}) != psi({g}^-1)")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CndSample {
    pub t: f64,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CndReport {
    pub samples: Vec<CndSample>,
    pub pass: bool,
}

/// PSD test of `[exp(-t psi(g^{-1} h))]_{g,h}` at each sampled `t`.
pub fn cnd_length_check(group: &FiniteGroupTable, psi: &[f64], t_samples: &[f64]) -> Result<CndReport> {
    validate_length(group, psi)?;
    let n = group.order();
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        if t.is_nan() || t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let m = CMatrix::from_fn(n, |g, h| C64::new((-t * psi[group.mul(group.inv(g), h)]).exp(), 0.0));
        let min_eigenvalue = hermitian_eigenvalues(&m.hermitian_part())?[0];
        samples.push(CndSample {
            t,
            min_eigenvalue,
            pass: min_eigenvalue >= -CND_TOL,
        });
    }
    let pass = samples.iter().all(|s| s.pass);
    Ok(CndReport { samples, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn builtin_orders() {
        assert_eq!(NamedGroup::S3.build().unwrap().0.order(), 6);
        assert_eq!(NamedGroup::D4.build().unwrap().0.order(), 8);
        let (q8, _) = NamedGroup::Q8.build().unwrap();
        assert_eq!(q8.order(), 8);
        assert!(!q8.is_abelian());
        assert!(FiniteGroupTable::cyclic(6).unwrap().is_abelian());
        assert_eq!("z12".parse::<NamedGroup>().unwrap(), NamedGroup::Cyclic(12));
        assert!("foo".parse::<NamedGroup>().is_err());
    }

    #[test]
    fn conv_norm_examples() {
        let z2 = FiniteGroupTable::cyclic(2).unwrap();
        assert!((conv_l2_norm(&z2, &GroupKernel::delta(&z2, 0)).unwrap() - 1.0).abs() < 1e-14);
        let k = GroupKernel::new(&z2, vec![c(1.0), c(1.0)]).unwrap();
        assert!((conv_l2_norm(&z2, &k).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn conv_norm_matches_characters_on_abelian_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10;
        let g = FiniteGroupTable::cyclic(n).unwrap();
        for _ in 0..5 {
            let k = GroupKernel::random(&g, &mut rng);
            let oracle = (0..n)
                .map(|m| {
                    k.values()
                        .iter()
                        .enumerate()
                        .map(|(x, v)| v * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (m * x) as f64 / n as f64))
                        .sum::<C64>()
                        .norm()
                })
                .fold(0.0, f64::max);
            assert!((conv_l2_norm(&g, &k).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn transferred_examples() {
        let z2 = FiniteGroupTable::cyclic(2).unwrap();
        let rep = UnitaryRep::new(&z2, vec![CMatrix::identity(2), CMatrix::diag_real(&[1.0, -1.0])]).unwrap();
        let f = CMatrix::unit(2, 0, 1);
        let out = transferred_apply(&z2, &GroupKernel::delta(&z2, 1), &rep, &f).unwrap();
        assert!(out.max_abs_diff(&f.scale_real(-1.0)) < 1e-15);
        let id = transferred_apply(&z2, &GroupKernel::delta(&z2, 0), &rep, &f).unwrap();
        assert!(id.max_abs_diff(&f) < 1e-15);
        let k = GroupKernel::new(&z2, vec![c(0.5), c(2.0)]).unwrap();
        let triv = UnitaryRep::trivial(&z2, 2).unwrap();
        assert!(transferred_apply(&z2, &k, &triv, &f).unwrap().max_abs_diff(&f.scale_real(2.5)) < 1e-15);
    }

    #[test]
    fn transferred_matrix_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (g, rep) = NamedGroup::S3.build().unwrap();
        let k = GroupKernel::random(&g, &mut rng);
        let f = CMatrix::random_gaussian(2, &mut rng);
        let v = transferred_matrix(&g, &k, &rep).unwrap();
        let out = transferred_apply(&g, &k, &rep, &f).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let z: C64 = (0..4).map(|col| v.get(i * 2 + j, col) * f.get(col / 2, col % 2)).sum();
                assert!((z - out.get(i, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn regular_representation_ratio_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in [NamedGroup::Cyclic(6), NamedGroup::S3, NamedGroup::D4] {
            let (g, _) = name.build().unwrap();
            let reg = UnitaryRep::regular(&g).unwrap();
            for _ in 0..5 {
                let k = GroupKernel::random(&g, &mut rng);
                let r = transference_check(&g, &k, &reg).unwrap();
                assert!((r.ratio - 1.0).abs() < 1e-12, "{name:?} {r:?}");
            }
        }
    }

    #[test]
    fn cnd_examples() {
        let z2 = FiniteGroupTable::cyclic(2).unwrap();
        assert!(cnd_length_check(&z2, &[0.0, 0.0], &[0.1, 1.0]).unwrap().pass);
        let r = cnd_length_check(&z2, &[0.0, 1.0], &[0.3]).unwrap();
        assert!(r.pass);
        assert!((r.samples[0].min_eigenvalue - (1.0 - (-0.3f64).exp())).abs() < 1e-14);
        let z4 = FiniteGroupTable::cyclic(4).unwrap();
        let r = cnd_length_check(&z4, &[0.0, 1.0, 10.0, 1.0], &[0.05]).unwrap();
        assert!(!r.pass);
        assert!(matches!(
            cnd_length_check(&z4, &[0.0, 1.0, 10.0, 2.0], &[0.05]),
            Err(Error::AsymmetricPsi(_))
        ));
    }

    #[test]
    fn group_json_round_trip() {
        let (g, _) = NamedGroup::D4.build().unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: FiniteGroupTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<FiniteGroupTable>(r#"{"order":2,"mul":[[0,1],[1,1]]}"#).is_err());
    }

    #[test]
    fn bad_representation_rejected() {
        let z2 = FiniteGroupTable::cyclic(2).unwrap();
        let bad = UnitaryRep::new(&z2, vec![CMatrix::identity(2), CMatrix::diag_real(&[1.0, 2.0])]);
        assert!(matches!(bad, Err(Error::InvalidRepresentation(_))));
    }
}
