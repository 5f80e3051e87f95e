//! The `mfe` command line: one experiment per invocation, JSON out.
//!
//! Exit codes: 0 every verdict passes, 1 some verdict fails, 2 invalid
//! configuration or input, 3 resolution guard, 4 solver did not converge.

pub mod config;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::barycenter::{self, BarycenterMeasure, BubbleScale};
use crate::error::{MfeError, Result};
use crate::functional::{self, MfeParams};
use crate::operators::{DiscreteOperators, ScalarField};
use crate::solver::{self, ConcentrationReport, FamilyMember, Regime, SolveReport};
use crate::surface::SurfaceMesh;
pub use config::{ExperimentConfig, FamilyKind, MeshSpec, Rho};

#[derive(Debug, Parser)]
#[command(name = "mfe", version, about = "Mean field equation laboratory on closed surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Writes the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mesh statistics and the first eigenvalue.
    MeshInfo,
    /// Bubble asymptotics over the λ grid.
    VerifyAsymptotics,
    /// Critical point of the functional, method chosen from ρ.
    Solve,
    /// Moser–Trudinger sweeps over random fields and bubbles.
    MtSuite,
    /// Blow-up classification of a synthetic family.
    Blowup,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_NONCONVERGED: i32 = 4;

/// A command's JSON report with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

pub fn exit_code(err: &MfeError) -> i32 {
    match err {
        MfeError::Guard(_) => EXIT_GUARD,
        MfeError::Numerical { .. } => EXIT_NONCONVERGED,
        _ => EXIT_INPUT,
    }
}

fn error_kind(err: &MfeError) -> &'static str {
    match err {
        MfeError::InvalidArgument(_) => "invalid_argument",
        MfeError::Resource(_) => "resource",
        MfeError::DegenerateFace { .. } => "degenerate_face",
        MfeError::NotManifold(_) => "not_manifold",
        MfeError::Numerical { .. } => "numerical",
        MfeError::Guard(_) => "guard",
        MfeError::Parse(_) => "parse",
        MfeError::Io(_) => "io",
    }
}

fn error_report(command: Option<Command>, err: &MfeError) -> Value {
    json!({
        "command": command.map(command_name),
        "error": { "kind": error_kind(err), "message": err.to_string() },
    })
}

pub fn command_name(c: Command) -> &'static str {
    match c {
        Command::MeshInfo => "mesh-info",
        Command::VerifyAsymptotics => "verify-asymptotics",
        Command::Solve => "solve",
        Command::MtSuite => "mt-suite",
        Command::Blowup => "blowup",
    }
}

/// Parses arguments, runs the command, writes the report and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    crate::par::init_from_env();
    let outcome = match &cli.config {
        None => {
            let err = MfeError::invalid("--config <path> is required");
            Outcome {
                report: error_report(Some(cli.command), &err),
                code: EXIT_INPUT,
            }
        }
        Some(path) => run_path(cli.command, path, cli.seed),
    };
    if let Some(msg) = outcome.report.get("error").and_then(|e| e.get("message")) {
        eprintln!("mfe: {}", msg.as_str().unwrap_or_default());
    }
    let text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize") + "\n";
    let written = match &cli.out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("mfe: cannot write report: {e}");
        return EXIT_INPUT;
    }
    outcome.code
}

/// Loads the configuration at `path` and runs `command`.
pub fn run_path(command: Command, path: &Path, seed: Option<u64>) -> Outcome {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    match ExperimentConfig::load(path) {
        Ok(mut cfg) => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run(command, &cfg, &base)
        }
        Err(e) => Outcome {
            report: error_report(Some(command), &e),
            code: exit_code(&e),
        },
    }
}

/// Runs `command` on a parsed configuration; relative paths resolve against
/// `base`.
pub fn run(command: Command, cfg: &ExperimentConfig, base: &Path) -> Outcome {
    let result = match command {
        Command::MeshInfo => mesh_info(cfg, base),
        Command::VerifyAsymptotics => verify_asymptotics(cfg, base),
        Command::Solve => solve(cfg, base),
        Command::MtSuite => mt_suite(cfg, base),
        Command::Blowup => blowup(cfg, base),
    };
    match result {
        Ok((mut report, nonconverged)) => {
            let pass = report["verdicts"]
                .as_object()
                .is_some_and(|v| v.values().all(|b| b == &Value::Bool(true)));
            report["command"] = json!(command_name(command));
            report["seed"] = json!(cfg.seed);
            report["pass"] = json!(pass);
            let code = if nonconverged {
                EXIT_NONCONVERGED
            } else if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            };
            Outcome { report, code }
        }
        Err(e) => Outcome {
            report: error_report(Some(command), &e),
            code: exit_code(&e),
        },
    }
}

type Verdicts = BTreeMap<&'static str, bool>;

fn setup(cfg: &ExperimentConfig, base: &Path) -> Result<(SurfaceMesh, DiscreteOperators)> {
    let mesh = cfg.mesh.build(base)?;
    let ops = DiscreteOperators::assemble(&mesh)?;
    Ok((mesh, ops))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn mesh_info(cfg: &ExperimentConfig, base: &Path) -> Result<(Value, bool)> {
    let (mesh, ops) = setup(cfg, base)?;
    let lambda1 = ops.low_eigenpairs(2)?[1].value;
    let total_area = mesh.total_area();
    let verdicts: Verdicts = [("unit_area", (total_area - 1.0).abs() <= 1e-12)].into();
    Ok((
        json!({
            "mesh": {
                "V": mesh.num_vertices(),
                "E": mesh.num_edges(),
                "F": mesh.num_faces(),
                "chi": mesh.euler_characteristic(),
                "total_area": total_area,
                "max_edge": mesh.max_edge_length(),
                "mean_edge": mesh.mean_edge_length(),
                "lambda1": lambda1,
            },
            "verdicts": verdicts,
        }),
        false,
    ))
}

fn asymptotics_sigma(mesh: &SurfaceMesh, cfg: &ExperimentConfig) -> Result<BarycenterMeasure> {
    let a = &cfg.asymptotics;
    let atoms = if a.atoms.is_empty() {
        mesh.farthest_point_sample(a.k, 0)
    } else {
        a.atoms.clone()
    };
    let weights = if a.weights.is_empty() {
        vec![1.0 / a.k as f64; a.k]
    } else {
        a.weights.clone()
    };
    let sigma = BarycenterMeasure::new(weights.into_iter().zip(atoms))?;
    sigma.check_vertices(mesh)?;
    Ok(sigma)
}

fn verify_asymptotics(cfg: &ExperimentConfig, base: &Path) -> Result<(Value, bool)> {
    let a = &cfg.asymptotics;
    if a.lambda_grid.is_empty() {
        return Err(MfeError::invalid("asymptotics.lambda_grid is empty"));
    }
    let (mesh, ops) = setup(cfg, base)?;
    let sigma = asymptotics_sigma(&mesh, cfg)?;
    let r = barycenter::asymptotic_slopes(&mesh, &ops, &sigma, &a.lambda_grid, &a.slope)?;
    let unit = 32.0 * PI * r.k as f64;
    let verdicts: Verdicts = [
        ("mean_slope", (r.mean_slope + 2.0).abs() <= 2.0 * a.slope_tol),
        ("neg_exp_slope", (r.neg_exp_slope - 2.0).abs() <= 2.0 * a.slope_tol),
        ("dirichlet_coeff", r.dirichlet_coeff <= a.dirichlet_max * unit),
        ("pos_exp_spread", r.pos_exp_spread < a.spread_max),
        ("grad_bounds", r.grad_bounds_ok),
    ]
    .into();
    let pass = verdicts.values().all(|&v| v);
    Ok((
        json!({
            "sigma": sigma,
            "rows": r.rows,
            "summary": {
                "k": r.k,
                "mean_slope": r.mean_slope,
                "neg_exp_slope": r.neg_exp_slope,
                "dirichlet_coeff": r.dirichlet_coeff,
                "dirichlet_coeff_over_32kpi": r.dirichlet_coeff / unit,
                "pos_exp_spread": r.pos_exp_spread,
                "grad_bounds_ok": r.grad_bounds_ok,
                "pass": pass,
            },
            "verdicts": verdicts,
        }),
        false,
    ))
}

/// Solves with the method the regime of `ρ` calls for.
pub fn solve_config(mesh: &SurfaceMesh, ops: &DiscreteOperators, cfg: &ExperimentConfig) -> Result<SolveReport> {
    let p = MfeParams::new(cfg.params.rho1.0, cfg.params.rho2.0);
    p.validate()?;
    let info = solver::classify_regime(p.rho1, p.rho2);
    let s = &cfg.solve;
    if let Some(k) = info.minmax_k.or(info.minmax_k_swapped) {
        let mut mm = s.minmax.clone();
        mm.k = k;
        mm.seed = cfg.seed;
        mm.t0 = cfg.params.t0;
        return solver::minmax_solve(mesh, ops, &p, &mm);
    }
    let u0 = if s.initial_amplitude > 0.0 {
        let modes = ops.low_eigenpairs(31.min(ops.n()))?;
        let mut rng = functional::seeded_rng(cfg.seed, 0);
        functional::modal_field(ops, &modes[1..], s.initial_amplitude, &mut rng)
    } else {
        ops.zeros()
    };
    let mut report = solver::minimize(ops, &p, &u0, &s.descent)?;
    if info.regime != Regime::Subcritical {
        report
            .warnings
            .push(format!("{:?} regime without a min-max strip: minimized instead", info.regime).to_lowercase());
    }
    Ok(report)
}

fn solve(cfg: &ExperimentConfig, base: &Path) -> Result<(Value, bool)> {
    let (mesh, ops) = setup(cfg, base)?;
    let report = solve_config(&mesh, &ops, cfg)?;
    if let Some(p) = &cfg.solve.iterate_log {
        let file = std::fs::File::create(base.join(p))?;
        solver::write_iterate_csv(&report.log, std::io::BufWriter::new(file))?;
    }
    let verdicts: Verdicts = [("converged", report.converged)].into();
    let mut v = to_value(&report);
    v["verdicts"] = to_value(&verdicts);
    Ok((v, !report.converged))
}

fn mt_suite(cfg: &ExperimentConfig, base: &Path) -> Result<(Value, bool)> {
    let (mesh, ops) = setup(cfg, base)?;
    let m = &cfg.mt;
    let modes = ops.low_eigenpairs((m.modes + 1).min(ops.n()))?;
    let sweep = functional::mt_sweep(&ops, &modes[1..], m.fields, cfg.seed, m.scale)?;
    let zero = functional::mt_check(&ops, &ops.zeros());
    let lambdas = &m.bubble_lambdas;
    barycenter::check_lambda_grid(&mesh, lambdas, 10.0)?;
    let sigma = BarycenterMeasure::dirac(0);
    let bubbles: Vec<Value> = lambdas
        .iter()
        .map(|&l| -> Result<Value> {
            let phi = barycenter::test_function(&mesh, &sigma, BubbleScale::new(l)?);
            let r = functional::mt_check(&ops, &phi);
            Ok(json!({ "lambda": l, "lhs": r.lhs, "dirichlet_over_16pi": r.dirichlet / (16.0 * PI), "offset": r.offset }))
        })
        .collect::<Result<_>>()?;
    let offsets: Vec<f64> = bubbles
        .iter()
        .map(|b| b["offset"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let spread = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let pair = improved_pair_rows(&mesh, &ops, lambdas)?;
    let verdicts: Verdicts = [
        ("sweep_finite", sweep.finite && sweep.max_offset.is_finite()),
        ("halves_stable", sweep.half_variation < m.halves_tol),
        ("zero_row", zero.lhs == 0.0 && zero.offset == 0.0),
        (
            "bubble_offset_bounded",
            spread.is_finite() && spread <= m.bubble_offset_spread,
        ),
    ]
    .into();
    Ok((
        json!({
            "C_mesh": sweep.max_offset,
            "sweep": sweep,
            "scale": m.scale,
            "zero_row": zero,
            "bubbles": bubbles,
            "bubble_offset_spread": spread,
            "improved": pair,
            "verdicts": verdicts,
        }),
        false,
    ))
}

/// Improved inequality with `ℓ = 2` along two equal bubbles at far apart
/// points, sets being balls of a quarter of their distance.
fn improved_pair_rows(mesh: &SurfaceMesh, ops: &DiscreteOperators, lambdas: &[f64]) -> Result<Value> {
    let pts = mesh.farthest_point_sample(2, 0);
    let r = 0.25 * mesh.geodesic_distance(pts[0], pts[1]);
    let sets: Vec<Vec<usize>> = pts
        .iter()
        .map(|&p| mesh.ball(p, r).into_iter().map(|(v, _)| v).collect())
        .collect();
    let sigma = BarycenterMeasure::uniform(&pts)?;
    let rows = lambdas
        .iter()
        .map(|&l| -> Result<Value> {
            let phi = barycenter::test_function(mesh, &sigma, BubbleScale::new(l)?);
            let rep = functional::improved_mt_check(mesh, ops, &phi, &sets, 0.25, PI)?;
            Ok(json!({ "lambda": l, "report": rep }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "atoms": pts, "set_radius": r, "gamma0": 0.25, "eps_tilde": PI, "rows": rows }))
}

/// Builds the configured synthetic family.
pub fn blowup_family(mesh: &SurfaceMesh, ops: &DiscreteOperators, cfg: &ExperimentConfig) -> Result<Vec<FamilyMember>> {
    let b = &cfg.blowup;
    let n = mesh.num_vertices();
    if b.vertex >= n {
        return Err(MfeError::invalid(format!("blowup.vertex {} out of range", b.vertex)));
    }
    let (d1, d2) = match b.family {
        FamilyKind::OneSided => (8.0 * PI, 0.0),
        FamilyKind::TwoSided => (24.0 * PI, 8.0 * PI),
        FamilyKind::Bounded => (4.0, 4.0),
    };
    let rho1 = b.rho1.map_or(d1, |r| r.0);
    let rho2 = b.rho2.map_or(d2, |r| r.0);
    let bubble = |v: usize, l: f64| -> Result<ScalarField> {
        Ok(barycenter::test_function(
            mesh,
            &BarycenterMeasure::dirac(v),
            BubbleScale::new(l)?,
        ))
    };
    match b.family {
        FamilyKind::OneSided | FamilyKind::TwoSided => {
            let partner = if b.family == FamilyKind::TwoSided {
                let d = mesh.distances_from(b.vertex);
                let y = (0..n)
                    .filter(|&v| v != b.vertex)
                    .min_by(|&p, &q| (d[p] - b.separation).abs().total_cmp(&(d[q] - b.separation).abs()))
                    .ok_or_else(|| MfeError::invalid("mesh has a single vertex"))?;
                Some(y)
            } else {
                None
            };
            b.lambdas
                .iter()
                .map(|&l| {
                    let mut u = bubble(b.vertex, l)?;
                    if let Some(y) = partner {
                        u = u.add_scaled(-1.0, &bubble(y, l)?);
                    }
                    Ok(FamilyMember {
                        u: functional::normalize_exp(ops, &u),
                        rho1,
                        rho2,
                        param: l,
                    })
                })
                .collect()
        }
        FamilyKind::Bounded => {
            let modes = ops.low_eigenpairs(31.min(ops.n()))?;
            Ok((0..b.members)
                .map(|i| {
                    let mut rng = functional::seeded_rng(cfg.seed, i as u64);
                    let u = functional::modal_field(ops, &modes[1..], b.amplitude, &mut rng);
                    FamilyMember {
                        u: functional::normalize_exp(ops, &u),
                        rho1,
                        rho2,
                        param: i as f64,
                    }
                })
                .collect())
        }
    }
}

fn blowup_verdicts(kind: FamilyKind, r: &ConcentrationReport, cfg: &ExperimentConfig) -> Verdicts {
    let b = &cfg.blowup;
    let tol = b.quantization_tol * (8.0 * PI).powi(2);
    match kind {
        FamilyKind::OneSided => [
            ("one_sided", r.alternative == solver::Alternative::OneSided),
            (
                "mass_8pi",
                !r.one_sided.is_empty() && r.one_sided.iter().all(|o| o.relative_error.abs() <= b.mass_tol),
            ),
        ]
        .into(),
        FamilyKind::TwoSided => [
            ("two_sided", r.alternative == solver::Alternative::TwoSided),
            (
                "quantization",
                !r.quantization_residual.is_empty() && r.quantization_residual.iter().all(|q| q.residual.abs() <= tol),
            ),
        ]
        .into(),
        FamilyKind::Bounded => [("compactness", r.alternative == solver::Alternative::Compactness)].into(),
    }
}

fn blowup(cfg: &ExperimentConfig, base: &Path) -> Result<(Value, bool)> {
    let (mesh, ops) = setup(cfg, base)?;
    let family = blowup_family(&mesh, &ops, cfg)?;
    let r = solver::classify_concentration(&mesh, &ops, &family, &cfg.blowup.options)?;
    let verdicts = blowup_verdicts(cfg.blowup.family, &r, cfg);
    let mut v = to_value(&r);
    v["family"] = to_value(&cfg.blowup.family);
    v["params"] = json!(family.iter().map(|f| f.param).collect::<Vec<_>>());
    v["verdicts"] = to_value(&verdicts);
    Ok((v, false))
}
