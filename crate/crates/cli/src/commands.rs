//! One-shot subcommands on user-supplied inputs.

use std::path::Path;

use clap::ValueEnum;
use ncbmo::bmo::{bmo_semigroup_norm, BmoSide};
use ncbmo::metric::MarkovMetricSpec;
use ncbmo::opalg::CMatrix;
use ncbmo::qtorus::{
    gns_opnorm, gns_spectrum, qt_bmo_norm, qt_heat_apply, sigma_intertwine_check, tw_abs_sq, tw_adjoint, tw_trace,
    GnsBox, TwistedSeries,
};
use ncbmo::semigroup::{Carrier, SemigroupSpec};
use ncbmo::transference::{FiniteGroupTable, NamedGroup, UnitaryRep};
use serde_json::{json, Value};

use crate::report::{Check, CheckReport, Status};
use crate::suites::{group_checks, parse_grid};
use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn input_err(path: &Path) -> impl Fn(ncbmo::error::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{}: {e}", path.display()))
}

fn engine(name: &str) -> impl Fn(ncbmo::error::Error) -> Check + '_ {
    move |e| Check::failed(name, e.to_string())
}

/// `poisson`, `heat`, `sinc-heat`, inline JSON, or a JSON file.
fn parse_semigroup(s: &str, n: usize) -> Result<SemigroupSpec, CliError> {
    let spec = match s {
        "poisson" => SemigroupSpec::poisson_schur(n),
        "heat" => SemigroupSpec::heat_schur(n),
        "sinc-heat" => SemigroupSpec::sinc_heat_schur(n),
        _ => {
            let text = if s.trim_start().starts_with('{') { s.to_string() } else { read(Path::new(s))? };
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--semigroup: {e}")))?
        }
    };
    spec.validate().map_err(|e| CliError::Usage(format!("--semigroup: {e}")))?;
    if !matches!(spec, SemigroupSpec::SchurLength { .. } | SemigroupSpec::GroupSchur { .. }) {
        return Err(CliError::Usage("--semigroup must act on matrices (schur_length or group_schur)".into()));
    }
    if spec.dim() != n {
        return Err(CliError::Usage(format!("semigroup dimension {} does not match the {n}x{n} input", spec.dim())));
    }
    Ok(spec)
}

pub fn bmo(input: &Path, semigroup: &str, side: &str, t_grid: Option<&str>, terse: bool) -> Result<CheckReport, CliError> {
    let a = CMatrix::from_json_str(&read(input)?).map_err(input_err(input))?;
    let side: BmoSide = side.parse().map_err(|e: ncbmo::error::Error| CliError::Usage(e.to_string()))?;
    let grid_s = t_grid.unwrap_or("log:1e-3:1e3:60");
    let grid = parse_grid(grid_s)?;
    let s = parse_semigroup(semigroup, a.dim())?;
    let params = json!({ "input": input.display().to_string(), "semigroup": s, "side": side, "t_grid": grid_s });
    let (checks, result) = match bmo_semigroup_norm(&Carrier::Matrix(a), &s, &grid, side) {
        Ok(r) => {
            let mut c = Check::info("bmo_norm", r.value, "");
            if r.boundary {
                c.status = Status::Warn;
                c.note = Some(format!("maximum at the grid endpoint t = {}", r.argmax_t));
            }
            let r = if terse { r.terse() } else { r };
            (vec![c], serde_json::to_value(&r).ok())
        }
        Err(e) => (vec![engine("bmo_norm")(e)], None),
    };
    Ok(CheckReport::new("bmo", params, checks, result))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QtOp {
    Trace,
    Adjoint,
    AbsSq,
    Heat,
    SigmaCheck,
    GnsNorm,
    Spectrum,
    Bmo,
}

pub fn qtorus(
    op: QtOp,
    input: &Path,
    t: Option<f64>,
    side: Option<usize>,
    t_grid: Option<&str>,
) -> Result<CheckReport, CliError> {
    let f = TwistedSeries::from_json_str(&read(input)?).map_err(input_err(input))?;
    if let Some(t) = t {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--t must be a nonnegative time, got {t}")));
        }
    }
    let default_side = (2 * f.support_radius() as usize + 2).max(16);
    let side = side.unwrap_or(default_side);
    let need = f.support_radius() as usize + 1;
    if matches!(op, QtOp::GnsNorm | QtOp::Spectrum) && side < need {
        return Err(CliError::Usage(format!("--box {side} is too small for this series, need at least {need}")));
    }
    let op_name = op.to_possible_value().expect("no skipped variants").get_name().to_string();
    let mut params = json!({ "op": op_name, "input": input.display().to_string() });
    let series = |s: TwistedSeries| serde_json::from_str::<Value>(&s.to_json_string()).ok();
    let (checks, result) = match op {
        QtOp::Trace => {
            let z = tw_trace(&f);
            (vec![Check::info("trace_abs", z.norm(), "")], Some(json!({ "re": z.re, "im": z.im })))
        }
        QtOp::Adjoint => (vec![], series(tw_adjoint(&f))),
        QtOp::AbsSq => match tw_abs_sq(&f) {
            Ok(g) => (vec![], series(g)),
            Err(e) => (vec![engine("abs_sq")(e)], None),
        },
        QtOp::Heat => {
            let t = t.ok_or_else(|| CliError::Usage("heat needs --t".into()))?;
            params["t"] = json!(t);
            match qt_heat_apply(&f, t) {
                Ok(g) => (vec![], series(g)),
                Err(e) => (vec![engine("heat")(e)], None),
            }
        }
        QtOp::SigmaCheck => {
            let t = t.unwrap_or(1.0);
            params["t"] = json!(t);
            let c = sigma_intertwine_check(&f, t)
                .map(|d| Check::at_most("sigma_intertwining", d / f.l2_norm().max(1.0), 1e-14, "relative"))
                .unwrap_or_else(engine("sigma_intertwining"));
            (vec![c], None)
        }
        QtOp::GnsNorm => {
            params["box"] = json!(side);
            let c = GnsBox::new(side);
            let c = gns_opnorm(&f, &c)
                .map(|v| Check::info("gns_opnorm", v, "").with_note("box compression, a lower bound for the norm"))
                .unwrap_or_else(engine("gns_opnorm"));
            (vec![c], None)
        }
        QtOp::Spectrum => {
            params["box"] = json!(side);
            match gns_spectrum(&f, &GnsBox::new(side)) {
                Ok((lo, hi)) => (
                    vec![Check::info("spectrum_min", lo, ""), Check::info("spectrum_max", hi, "")],
                    Some(json!({ "min": lo, "max": hi })),
                ),
                Err(e) => (vec![engine("spectrum")(e)], None),
            }
        }
        QtOp::Bmo => {
            let grid_s = t_grid.unwrap_or("log:1e-3:1:16");
            let grid = parse_grid(grid_s)?;
            let side = side.max(2 * f.support_radius() as usize + 1);
            params["box"] = json!(side);
            params["t_grid"] = json!(grid_s);
            let q = MarkovMetricSpec::qtorus(f.params().clone()).map_err(input_err(input))?;
            match qt_bmo_norm(&f, &q, &grid, &GnsBox::new(side)) {
                Ok(r) => {
                    let mut c = Check::info("qt_bmo_norm", r.value, "");
                    if r.refinement_stable == Some(false) {
                        c = c.with_note("value moved by more than 2% when the box was doubled");
                        c.status = Status::Warn;
                    }
                    (vec![c], serde_json::to_value(r.terse()).ok())
                }
                Err(e) => (vec![engine("qt_bmo_norm")(e)], None),
            }
        }
    };
    Ok(CheckReport::new("qtorus", params, checks, result))
}

/// A built-in group name or a group-table JSON file.
pub fn transfer(group: &str, kernels: usize, seed: u64) -> Result<CheckReport, CliError> {
    if kernels == 0 {
        return Err(CliError::Usage("--kernels must be positive".into()));
    }
    let (label, table, rep) = match group.parse::<NamedGroup>() {
        Ok(g) => {
            let (t, r) = g.build().map_err(|e| CliError::Usage(e.to_string()))?;
            (group.to_ascii_lowercase(), t, r)
        }
        Err(_) if Path::new(group).is_file() => {
            let p = Path::new(group);
            let t: FiniteGroupTable =
                serde_json::from_str(&read(p)?).map_err(|e| CliError::Usage(format!("{group}: {e}")))?;
            let r = UnitaryRep::regular(&t).map_err(input_err(p))?;
            ("table".to_string(), t, r)
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let params = json!({ "group": group, "order": table.order(), "kernels": kernels, "seed": seed });
    let checks = group_checks(&label, &table, &rep, kernels, seed).unwrap_or_else(|e| vec![engine("transference")(e)]);
    Ok(CheckReport::new("transfer", params, checks, None))
}
