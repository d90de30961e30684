//! Named verification suites. Each suite resolves its parameters up front
//! (usage errors surface before any work) and returns independent tasks whose
//! checks are concatenated in task order.

use std::f64::consts::{PI, SQRT_2};

use clap::ValueEnum;
use ncbmo::bmo::{bmo_metric_norm, bmo_metric_norm_without_mean, bmo_semigroup_norm, BmoSide};
use ncbmo::czo::{
    czo_bmo_identity_check, hormander_probe, multiplier_norm_power_iteration, schatten_growth_probe,
    triangular_truncation, MultiplierSymbol,
};
use ncbmo::metric::{
    euclidean_samples, kernel_domination_check, kq_closed_form_1d, kq_constant, majorization_check,
    ou_integrability_check, ou_samples, MajorizationMethod, MarkovMetricSpec, MetricVariant, OuGammaRule,
};
use ncbmo::opalg::{apply_cpu, module_inner_product, op_norm, psd_order_gap, CMatrix, CpuMap, TensorElement, C64};
use ncbmo::qtorus::{
    gns_opnorm, harper_element, harper_rational_oracle, pi_theta_expectation, qt_bmo_norm, sigma_intertwine_check,
    tw_adjoint, tw_trace, twisted_mul, GnsBox, TwistParams, TwistedSeries,
};
use ncbmo::semigroup::{markov_check, ou_heat_identity_check, Carrier, OuGrid, SemigroupSpec, TGrid};
use ncbmo::transference::{cnd_length_check, transference_check, GroupKernel, NamedGroup, UnitaryRep};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::SuiteParams;
use crate::report::{Check, Status};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    MetricEuclidean,
    MetricOu,
    MetricSinc,
    BmoMatrix,
    CzoTriangular,
    CzoHormander,
    QtorusAll,
    TransferenceAll,
    #[value(name = "lemma11-properties")]
    ModuleProperties,
}

impl Suite {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

pub type Task = Box<dyn FnOnce() -> Vec<Check> + Send>;

pub struct Plan {
    pub params: Value,
    pub tasks: Vec<Task>,
}

/// Wraps a fallible check body; engine errors become a failed check.
fn task<F>(name: &'static str, body: F) -> Task
where
    F: FnOnce() -> ncbmo::error::Result<Vec<Check>> + Send + 'static,
{
    Box::new(move || body().unwrap_or_else(|e| vec![Check::failed(name, e.to_string())]))
}

fn flag(name: &str, pass: bool, measured: f64, units: &str) -> Check {
    Check {
        status: if pass { Status::Pass } else { Status::Fail },
        ..Check::info(name, measured, units)
    }
}

fn usage(e: ncbmo::error::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn parse_grid(s: &str) -> Result<TGrid, CliError> {
    s.parse::<TGrid>().map_err(|e| CliError::Usage(format!("--t-grid '{s}': {e}")))
}

const DEFAULT_GRID: &str = "log:1e-3:1e3:60";

pub fn plan(suite: Suite, p: &SuiteParams) -> Result<Plan, CliError> {
    p.validate()?;
    match suite {
        Suite::MetricEuclidean => metric_euclidean(p),
        Suite::MetricOu => metric_ou(p),
        Suite::MetricSinc => metric_sinc(p),
        Suite::BmoMatrix => bmo_matrix(p),
        Suite::CzoTriangular => czo_triangular(p),
        Suite::CzoHormander => czo_hormander(p),
        Suite::QtorusAll => qtorus_all(p),
        Suite::TransferenceAll => transference_all(p),
        Suite::ModuleProperties => module_properties(p),
    }
}

fn random_matrices(n: usize, count: usize, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| CMatrix::random_gaussian(n, &mut rng)).collect()
}

fn metric_euclidean(p: &SuiteParams) -> Result<Plan, CliError> {
    let dim = p.dim.unwrap_or(1);
    let grid_s = p.t_grid.clone().unwrap_or(DEFAULT_GRID.into());
    let grid = parse_grid(&grid_s)?;
    let samples = p.samples.unwrap_or(10_000);
    let seed = p.seed.unwrap_or(6);
    let tol = p.tol.unwrap_or(1e-12);
    let q = MarkovMetricSpec::euclidean(dim).map_err(usage)?;
    let params = json!({ "dim": dim, "t_grid": grid_s, "samples": samples, "seed": seed, "tol": tol });

    let mut tasks = Vec::new();
    let (q1, g1) = (q.clone(), grid.clone());
    tasks.push(task("k_q", move || {
        let r = kq_constant(&q1, &g1)?;
        let mut out = vec![
            Check::info("k_q", r.value, "").with_note(format!("sup attained at t = {}", r.argmax_t)),
            Check::at_most("k_q_tail_bound", r.tail, 1e-12, "absolute"),
        ];
        if dim == 1 {
            out.push(Check::at_most(
                "k_q_closed_form_error",
                (r.value - kq_closed_form_1d()).abs(),
                tol,
                "absolute",
            ));
        }
        Ok(out)
    }));
    tasks.push(task("kernel_domination", move || {
        let r = kernel_domination_check(&MetricVariant::EuclideanHeat { n: dim }, &euclidean_samples(samples, seed))?;
        Ok(vec![Check::at_most("kernel_domination", r.worst_ratio, r.constant, "h_t / corona sum")
            .with_note(format!("{} samples, worst at {:?}", r.count, r.worst_sample))])
    }));
    if dim == 1 {
        tasks.push(task("mean_term_domination", move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<C64> = (0..256).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
            let f = Carrier::Cyclic(f);
            let with = bmo_metric_norm(&f, &q, &grid)?.value;
            let without = bmo_metric_norm_without_mean(&f, &q, &grid)?.value;
            Ok(vec![Check::at_most("mean_term_domination", with / without, SQRT_2, "ratio")])
        }));
    }
    Ok(Plan { params, tasks })
}

fn parse_rule(s: Option<&str>) -> Result<OuGammaRule, CliError> {
    match s.unwrap_or("balanced") {
        "balanced" => Ok(OuGammaRule::Balanced),
        "symmetric" => Ok(OuGammaRule::Symmetric),
        other => Err(CliError::Usage(format!("--rule '{other}': expected balanced or symmetric"))),
    }
}

fn metric_ou(p: &SuiteParams) -> Result<Plan, CliError> {
    let rule = parse_rule(p.rule.as_deref())?;
    let samples = p.samples.unwrap_or(1000);
    let seed = p.seed.unwrap_or(7);
    let tol = p.tol.unwrap_or(1e-6);
    let params = json!({ "rule": rule, "samples": samples, "seed": seed, "tol": tol, "grid": {"half_width": 8.0, "nodes": 2000} });
    let mut tasks = Vec::new();
    tasks.push(task("conjugation_defect", move || {
        let grid = OuGrid::new(8.0, 2000)?;
        let f: Vec<f64> = grid
            .points()
            .iter()
            .map(|x| (1.3 * x).sin() + 0.5 * (-(x - 1.0).powi(2)).exp())
            .collect();
        let (mut defect, mut quad) = (0.0f64, 0.0f64);
        for t in [0.05, 0.3, 1.0] {
            let d = ou_heat_identity_check(&grid, &f, t)?;
            defect = defect.max(d.defect);
            quad = quad.max(d.quadrature_bound);
        }
        Ok(vec![Check::at_most("conjugation_defect", defect, tol, "sup norm")
            .with_note(format!("quadrature error estimate {quad:e}"))])
    }));
    tasks.push(task("kernel_domination", move || {
        let v = MetricVariant::OuCorona { rule, quad_nodes: 24 };
        let r = kernel_domination_check(&v, &ou_samples(samples, seed))?;
        Ok(vec![Check::at_most("kernel_domination", r.worst_ratio, r.constant, "kernel / corona sum")
            .with_note(format!("{} samples, worst at {:?}", r.count, r.worst_sample))])
    }));
    tasks.push(task("partial_sum_stability", move || {
        let r = ou_integrability_check(rule, 4.0, 21, 1e-3, 0.027, 8, 24)?;
        Ok(["minus_corona", "plus_corona", "ball_and_tail"]
            .iter()
            .zip(r.rel_change)
            .zip(r.fine)
            .map(|((name, rel), fine)| {
                Check::at_most(&format!("partial_sum_stability_{name}"), rel, 0.01, "relative change")
                    .with_note(format!("sup on the fine grid {fine:e}"))
            })
            .collect())
    }));
    tasks.push(task("minus_corona_growth", move || {
        let near = ou_integrability_check(rule, 4.0, 21, 1e-3, 0.027, 8, 24)?;
        let far = ou_integrability_check(rule, 8.0, 41, 1e-3, 0.027, 8, 24)?;
        Ok(vec![Check::info("minus_corona_growth", far.coarse[0] / near.coarse[0], "sup on [0,8] / sup on [0,4]")
            .with_note(format!("sup on [0,8] {:e}", far.coarse[0]))])
    }));
    tasks.push(task("ou_markov", move || {
        let r = markov_check(&SemigroupSpec::ou(8.0, 400)?, &[0.0, 0.1, 1.0])?;
        let unital = r.samples.iter().fold(0.0f64, |m, s| m.max(s.unital_defect));
        Ok(vec![flag("ou_markov", r.pass, unital, "unital defect")])
    }));
    Ok(Plan { params, tasks })
}

fn metric_sinc(p: &SuiteParams) -> Result<Plan, CliError> {
    let n = p.n.unwrap_or(8);
    let grid_s = p.t_grid.clone().unwrap_or("log:1e-3:1e2:60".into());
    let grid = parse_grid(&grid_s)?;
    let seed = p.seed.unwrap_or(4);
    let tol = p.tol.unwrap_or(1e-8);
    let q = MarkovMetricSpec::sinc(n).map_err(usage)?;
    let params = json!({ "n": n, "t_grid": grid_s, "seed": seed, "tol": tol });
    let mut tasks = Vec::new();
    let (q1, g1) = (q.clone(), grid.clone());
    tasks.push(task("majorization", move || {
        let s = SemigroupSpec::sinc_heat_schur(n);
        let mut worst = f64::INFINITY;
        for &t in g1.values() {
            worst = worst.min(majorization_check(&q1, &s, t, MajorizationMethod::SchurSymbolPsd)?.min_gap);
        }
        Ok(vec![Check::at_least("majorization_min_eigenvalue", worst, -tol, "eigenvalue")])
    }));
    let (q2, g2) = (q.clone(), grid.clone());
    tasks.push(task("k_q", move || {
        let r = kq_constant(&q2, &g2)?;
        Ok(vec![Check::at_most(
            "k_q_closed_form_error",
            (r.value - kq_closed_form_1d()).abs(),
            1e-12,
            "absolute",
        )])
    }));
    let g3 = grid.clone();
    tasks.push(task("markov", move || {
        let r = markov_check(&SemigroupSpec::sinc_heat_schur(n), g3.values())?;
        let gap = r.samples.iter().fold(f64::INFINITY, |m, s| m.min(s.cp_gap));
        Ok(vec![flag("companion_semigroup_markov", r.pass, gap, "min symbol eigenvalue")])
    }));
    tasks.push(task("mean_term_domination", move || {
        let a = Carrier::Matrix(random_matrices(n, 1, seed).remove(0));
        let with = bmo_metric_norm(&a, &q, &grid)?.value;
        let without = bmo_metric_norm_without_mean(&a, &q, &grid)?.value;
        Ok(vec![Check::at_most("mean_term_domination", with / without, SQRT_2, "ratio")])
    }));
    Ok(Plan { params, tasks })
}

fn bmo_matrix(p: &SuiteParams) -> Result<Plan, CliError> {
    let n = p.n.unwrap_or(16);
    let samples = p.samples.unwrap_or(20);
    let seed = p.seed.unwrap_or(2);
    let grid_s = p.t_grid.clone().unwrap_or(DEFAULT_GRID.into());
    let grid = parse_grid(&grid_s)?;
    let tol = p.tol.unwrap_or(1e-6);
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    let params = json!({ "n": n, "samples": samples, "seed": seed, "t_grid": grid_s, "tol": tol, "semigroup": "poisson_schur" });
    let s = SemigroupSpec::poisson_schur(n);
    let mut tasks = Vec::new();
    for (side, name) in [(BmoSide::Column, "truncation_contraction_column"), (BmoSide::Row, "truncation_contraction_row")] {
        let (s, grid) = (s.clone(), grid.clone());
        tasks.push(task(name, move || {
            let mut worst = 0.0f64;
            for a in random_matrices(n, samples, seed) {
                let base = bmo_semigroup_norm(&Carrier::Matrix(a.clone()), &s, &grid, side)?.value;
                let tri = bmo_semigroup_norm(&Carrier::Matrix(triangular_truncation(&a)), &s, &grid, side)?.value;
                worst = worst.max(tri / base);
            }
            Ok(vec![Check::at_most(name, worst, 1.0 + tol, "BMO ratio")])
        }));
    }
    let (s2, g2) = (s.clone(), grid.clone());
    tasks.push(task("row_column_adjoint", move || {
        let mut worst = 0.0f64;
        for a in random_matrices(n, samples, seed) {
            let row = bmo_semigroup_norm(&Carrier::Matrix(a.clone()), &s2, &g2, BmoSide::Row)?.value;
            let col = bmo_semigroup_norm(&Carrier::Matrix(a.adjoint()), &s2, &g2, BmoSide::Column)?.value;
            worst = worst.max((row - col).abs() / (1.0 + col));
        }
        Ok(vec![Check::at_most("row_equals_adjoint_column", worst, 1e-12, "relative")])
    }));
    tasks.push(task("markov", move || {
        let r = markov_check(&s, &[0.0, 0.1, 1.0, 10.0])?;
        let gap = r.samples.iter().fold(f64::INFINITY, |m, s| m.min(s.cp_gap));
        Ok(vec![flag("poisson_markov", r.pass, gap, "min symbol eigenvalue")])
    }));
    Ok(Plan { params, tasks })
}

fn czo_triangular(p: &SuiteParams) -> Result<Plan, CliError> {
    let n = p.n.unwrap_or(8);
    let samples = p.samples.unwrap_or(20);
    let seed = p.seed.unwrap_or(7);
    let tol = p.tol.unwrap_or(1e-12);
    let grid_s = p.t_grid.clone().unwrap_or(DEFAULT_GRID.into());
    let grid = parse_grid(&grid_s)?;
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    let ps = [1.2, 1.5, 2.0, 3.0, 4.0, 8.0];
    let params = json!({ "n": n, "samples": samples, "seed": seed, "tol": tol, "t_grid": grid_s, "p_list": ps });
    let mut tasks = Vec::new();
    let g1 = grid.clone();
    tasks.push(task("identity_defect", move || {
        let mut worst = 0.0f64;
        for a in random_matrices(n, samples, seed) {
            let nrm = op_norm(&a);
            worst = worst.max(czo_bmo_identity_check(&a, &g1)? / (1.0 + nrm * nrm));
        }
        Ok(vec![Check::at_most("identity_defect", worst, tol, "defect / (1 + |A|^2)")])
    }));
    tasks.push(task("schatten_growth", move || {
        let r = schatten_growth_probe(n, samples, &ps, seed)?;
        Ok(r.rows
            .iter()
            .map(|row| {
                // the constant is implicit, so a violation is flagged, not fatal
                Check::at_most(&format!("schatten_growth_p{}", row.params["p"]), row.measured, row.bound.unwrap_or(f64::INFINITY), "norm ratio").soft()
            })
            .collect())
    }));
    tasks.push(task("truncation_contraction", move || {
        let s = SemigroupSpec::poisson_schur(n);
        let mut worst = 0.0f64;
        for a in random_matrices(n, samples, seed) {
            let base = bmo_semigroup_norm(&Carrier::Matrix(a.clone()), &s, &grid, BmoSide::Column)?.value;
            let tri = bmo_semigroup_norm(&Carrier::Matrix(triangular_truncation(&a)), &s, &grid, BmoSide::Column)?.value;
            worst = worst.max(tri / base);
        }
        Ok(vec![Check::at_most("truncation_contraction", worst, 1.0 + 1e-6, "BMO ratio")])
    }));
    Ok(Plan { params, tasks })
}

fn czo_hormander(p: &SuiteParams) -> Result<Plan, CliError> {
    let big_n = p.n.unwrap_or(128);
    let lambda = p.lambda.unwrap_or(5);
    let tol = p.tol.unwrap_or(0.10);
    if lambda < 2 {
        return Err(CliError::Usage("--lambda must be at least 2".into()));
    }
    let rmax = (big_n / (4 * lambda)).min(6);
    if rmax == 0 || big_n % 2 == 1 {
        return Err(CliError::Usage(format!("--n {big_n} is odd or too small for lambda {lambda}")));
    }
    let radii: Vec<usize> = (1..=rmax).collect();
    let params = json!({ "N": big_n, "lambda": lambda, "radii": radii, "tol": tol });
    let mut tasks = Vec::new();
    tasks.push(task("hormander_stability", move || {
        // equal arcs on the unit circle: radius r on Z_N is radius 2r on Z_2N
        let fine_r: Vec<usize> = radii.iter().map(|r| 2 * r).collect();
        let coarse = hormander_probe(&MultiplierSymbol::hilbert_cyclic(big_n)?, lambda, &radii)?;
        let fine = hormander_probe(&MultiplierSymbol::hilbert_cyclic(2 * big_n)?, lambda, &fine_r)?;
        Ok(coarse
            .rows
            .iter()
            .zip(&fine.rows)
            .map(|(a, b)| {
                let rel = (b.measured - a.measured).abs() / a.measured;
                Check::at_most(&format!("hormander_stability_r{}", a.params["r"]), rel, tol, "relative change")
                    .with_note(format!("constant {} on Z_{big_n}, {} on Z_{}", a.measured, b.measured, 2 * big_n))
            })
            .collect())
    }));
    tasks.push(task("hilbert_l2_norm", move || {
        let nrm = multiplier_norm_power_iteration(&MultiplierSymbol::hilbert_cyclic(big_n)?, 200)?;
        Ok(vec![Check::at_most("hilbert_l2_norm_error", (nrm - 1.0).abs(), 1e-8, "absolute")])
    }));
    Ok(Plan { params, tasks })
}

fn qtorus_all(p: &SuiteParams) -> Result<Plan, CliError> {
    let theta = p.theta.unwrap_or((5f64.sqrt() - 1.0) / 2.0);
    let samples = p.samples.unwrap_or(100);
    let seed = p.seed.unwrap_or(8);
    let side = p.n.unwrap_or(256);
    let tol = p.tol.unwrap_or(1e-14);
    if side < 8 {
        return Err(CliError::Usage("--n (GNS box side) must be at least 8".into()));
    }
    let params = json!({ "theta": theta, "samples": samples, "seed": seed, "box": side, "tol": tol });
    let tp = TwistParams::plane(theta);
    let mut tasks = Vec::new();
    let p1 = tp.clone();
    tasks.push(task("sigma_intertwining", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let f = TwistedSeries::random(&p1, 4, 12, &mut rng);
            worst = worst.max(sigma_intertwine_check(&f, 0.7)? / f.l2_norm().max(1.0));
        }
        Ok(vec![Check::at_most("sigma_intertwining", worst, tol, "relative")])
    }));
    let p2 = tp.clone();
    tasks.push(task("algebra", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let (mut assoc, mut unit, mut pars, mut expect) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..samples {
            let f = TwistedSeries::random(&p2, 3, 6, &mut rng);
            let g = TwistedSeries::random(&p2, 3, 6, &mut rng);
            let h = TwistedSeries::random(&p2, 3, 6, &mut rng);
            let lhs = twisted_mul(&twisted_mul(&f, &g)?, &h)?;
            let rhs = twisted_mul(&f, &twisted_mul(&g, &h)?)?;
            assoc = assoc.max(lhs.max_abs_diff(&rhs)? / (f.l1_norm() * g.l1_norm() * h.l1_norm()));
            let l = TwistedSeries::lambda(&p2, &[f.support_radius(), -g.support_radius()]);
            unit = unit.max(twisted_mul(&tw_adjoint(&l), &l)?.max_abs_diff(&TwistedSeries::unit(&p2))?);
            let l2: f64 = f.coeffs().values().map(|z| z.norm_sqr()).sum();
            pars = pars.max((tw_trace(&twisted_mul(&tw_adjoint(&f), &f)?) - C64::new(l2, 0.0)).norm() / l2);
            let e = pi_theta_expectation(&p2, g.coeffs())?;
            let want = TwistedSeries::unit(&p2).scale(g.coeff(&[0, 0]));
            expect = expect.max(e.max_abs_diff(&want)?);
        }
        Ok(vec![
            Check::at_most("associativity", assoc, 1e-13, "relative"),
            Check::at_most("unitarity", unit, 1e-13, "absolute"),
            Check::at_most("trace_parseval", pars, 1e-13, "relative"),
            Check::at_most("pi_theta_expectation", expect, 1e-13, "absolute"),
        ])
    }));
    let p3 = tp.clone();
    tasks.push(task("gns_one_plus_u", move || {
        let f = TwistedSeries::new(p3.clone(), [(vec![0, 0], C64::new(1.0, 0.0)), (vec![1, 0], C64::new(1.0, 0.0))])?;
        let v = gns_opnorm(&f, &GnsBox::new(side))?;
        Ok(vec![Check::at_most("gns_norm_one_plus_u_error", (v - 2.0).abs(), 1e-2, "absolute")
            .with_note(format!("box norm {v}"))])
    }));
    tasks.push(task("gns_harper", move || {
        let v = gns_opnorm(&harper_element(&TwistParams::plane(0.5))?, &GnsBox::new(side))?;
        let oracle = harper_rational_oracle(1, 2, 64);
        Ok(vec![Check::at_most("gns_norm_harper_error", (v - oracle).abs(), 1e-2, "absolute")
            .with_note(format!("box norm {v}, rational oracle {oracle}"))])
    }));
    tasks.push(task("commutative_bmo", move || {
        let p1 = TwistParams::commutative(1)?;
        let i = C64::new(0.0, 1.0);
        let f = TwistedSeries::new(
            p1.clone(),
            [(vec![1], C64::new(0.5, 0.0)), (vec![-1], C64::new(0.5, 0.0)), (vec![2], -i * 0.25), (vec![-2], i * 0.25)],
        )?;
        let grid = TGrid::log(1e-3, 1.0, 16)?;
        let qt = qt_bmo_norm(&f, &MarkovMetricSpec::qtorus(p1)?, &grid, &GnsBox::new(64))?.value;
        let big_n = 512;
        let vals: Vec<C64> = (0..big_n)
            .map(|k| {
                let x = k as f64 / big_n as f64;
                C64::new((2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin(), 0.0)
            })
            .collect();
        let comm = bmo_metric_norm(&Carrier::Cyclic(vals), &MarkovMetricSpec::euclidean(1)?, &grid)?.value;
        Ok(vec![Check::at_most("commutative_bmo_agreement", (qt - comm).abs() / comm, 0.05, "relative")
            .with_note(format!("lattice {qt}, cyclic {comm}"))])
    }));
    Ok(Plan { params, tasks })
}

/// `psi(g) = d - Re tr u(g)`, conditionally negative definite for any unitary `u`;
/// averaged with `psi(g^-1)` so rounding cannot break the symmetry.
pub fn rep_length(rep: &UnitaryRep, table: &ncbmo::transference::FiniteGroupTable) -> Vec<f64> {
    let raw = |g: usize| rep.dim() as f64 - rep.get(g).trace().re;
    (0..table.order())
        .map(|g| if g == table.identity() { 0.0 } else { 0.5 * (raw(g) + raw(table.inv(g))) })
        .collect()
}

/// Transference and length-function checks for one group.
pub fn group_checks(
    label: &str,
    table: &ncbmo::transference::FiniteGroupTable,
    defining: &UnitaryRep,
    kernels: usize,
    seed: u64,
) -> ncbmo::error::Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let regular = UnitaryRep::regular(table)?;
    let padded = defining.direct_sum(&UnitaryRep::trivial(table, 1)?, table)?;
    let reps = [("defining", defining), ("regular", &regular), ("defining_plus_trivial", &padded)];
    let mut worst = [0.0f64; 3];
    let mut reg_dev = 0.0f64;
    for _ in 0..kernels {
        let k = GroupKernel::random(table, &mut rng);
        for (i, (_, rep)) in reps.iter().enumerate() {
            let r = transference_check(table, &k, rep)?;
            worst[i] = worst[i].max(r.ratio);
            if i == 1 {
                reg_dev = reg_dev.max((r.ratio - 1.0).abs());
            }
        }
    }
    let mut out: Vec<Check> = reps
        .iter()
        .zip(worst)
        .map(|((name, _), w)| Check::at_most(&format!("transference_{label}_{name}"), w, 1.0 + 1e-9, "|V| / |T|"))
        .collect();
    out.push(Check::at_most(&format!("regular_isometry_{label}"), reg_dev, 1e-12, "absolute"));
    let cnd = cnd_length_check(table, &rep_length(defining, table), &[0.1, 1.0, 10.0])?;
    let min_ev = cnd.samples.iter().fold(f64::INFINITY, |m, s| m.min(s.min_eigenvalue));
    out.push(flag(&format!("length_cnd_{label}"), cnd.pass, min_ev, "min eigenvalue"));
    Ok(out)
}

fn transference_all(p: &SuiteParams) -> Result<Plan, CliError> {
    let groups_s = p.groups.clone().unwrap_or("z6,z12,s3,d4,q8".into());
    let kernels = p.samples.unwrap_or(200);
    let seed = p.seed.unwrap_or(9);
    let mut built = Vec::new();
    for name in groups_s.split(',').map(str::trim) {
        let g: NamedGroup = name.parse().map_err(usage)?;
        built.push((name.to_ascii_lowercase(), g.build().map_err(usage)?));
    }
    let params = json!({ "groups": groups_s, "samples": kernels, "seed": seed });
    let tasks = built
        .into_iter()
        .enumerate()
        .map(|(i, (label, (table, rep)))| {
            task("transference", move || group_checks(&label, &table, &rep, kernels, seed + i as u64))
        })
        .collect();
    Ok(Plan { params, tasks })
}

fn module_properties(p: &SuiteParams) -> Result<Plan, CliError> {
    let samples = p.samples.unwrap_or(1000);
    let seed = p.seed.unwrap_or(10);
    let tol = p.tol.unwrap_or(1e-10);
    let params = json!({ "samples": samples, "seed": seed, "tol": tol, "dims": [2, 3, 4, 5, 6] });
    let tasks = vec![task("module_inequalities", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut gap_i, mut gap_iii, mut err_ii) = (f64::INFINITY, f64::INFINITY, 0.0f64);
        for inst in 0..samples {
            let n = 2 + inst % 5;
            let phi = CpuMap::random(n, &mut rng);
            let rand_xi = |rng: &mut ChaCha8Rng| {
                let k = 1 + rng.random_range(0..3usize);
                let terms = (0..k)
                    .map(|_| (CMatrix::random_gaussian(n, rng), CMatrix::random_gaussian(n, rng)))
                    .collect();
                TensorElement::new(terms)
            };
            let x1 = rand_xi(&mut rng)?;
            let x2 = rand_xi(&mut rng)?;
            let sum = module_inner_product(&x1.plus(&x2)?, &phi)?;
            let bound = &module_inner_product(&x1, &phi)?.scale_real(2.0) + &module_inner_product(&x2, &phi)?.scale_real(2.0);
            gap_i = gap_i.min(psd_order_gap(&sum, &bound)? / (1.0 + bound.max_abs()));

            let f = CMatrix::random_gaussian(n, &mut rng);
            let g = CMatrix::random_gaussian(n, &mut rng);
            let pf = apply_cpu(&phi, &f)?;
            let osc = module_inner_product(&TensorElement::oscillation(&f, &pf)?, &phi)?;
            let direct = &apply_cpu(&phi, &f.abs_sq())? - &pf.abs_sq();
            err_ii = err_ii.max(osc.max_abs_diff(&direct) / (1.0 + f.abs_sq().max_abs()));

            let lhs = (&pf - &g).abs_sq();
            let rhs = module_inner_product(&TensorElement::oscillation(&f, &g)?, &phi)?;
            gap_iii = gap_iii.min(psd_order_gap(&lhs, &rhs)? / (1.0 + rhs.max_abs()));
        }
        Ok(vec![
            Check::at_least("triangle_inequality_gap", gap_i, -tol, "relative eigenvalue"),
            Check::at_most("oscillation_identity_error", err_ii, 1e-12, "relative"),
            Check::at_least("best_approximation_gap", gap_iii, -tol, "relative eigenvalue"),
        ])
    })];
    Ok(Plan { params, tasks })
}
