//! Command-line front end: config parsing, command dispatch, and report
//! serialization. Exit codes: 0 success, 2 validation/config error,
//! 3 numerical failure.

use clap::{Parser, Subcommand, ValueEnum};
use contact_dynamics::algebra::{compose, conjugate, inverse, reparameterize, ContactDiffeo, Reparam};
use contact_dynamics::config::{
    self, envelope, load_config, to_json_string, RunConfig,
};
use contact_dynamics::error::ContactError;
use contact_dynamics::experiments::{
    cauchy_cantor, cauchy_divergent_factors, cauchy_divergent_isotopies, example_cantor,
    example_divergent_factors, example_divergent_isotopies, example_sphere,
    example_triangle_failure, reeb_conjugation_suite, ExperimentReport,
};
use contact_dynamics::flow::{integrate_system, ContactDynamicalSystem};
use contact_dynamics::hamfield::Hamiltonian;
use contact_dynamics::manifold::{quadrature_grid, ChartedManifold, Point};
use contact_dynamics::metrics::{contact_distance, contact_norm};
use contact_dynamics::symplectization::{admissible_norm, lift_system, SymplectizationPoint};
use contact_dynamics::Result;
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(
    name = "contact-dynamics",
    version,
    about = "Numerical toolkit for smooth contact Hamiltonian dynamics"
)]
struct Cli {
    /// JSON config file; flags override individual entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Override the integrator step size.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Override the per-axis grid resolution (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Manifold when no config is given: darboux or hopf.
    #[arg(long, global = true)]
    manifold: Option<String>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Integrate a Hamiltonian flow and emit the trajectories.
    Flow {
        /// Config name or inline chart-coordinate expression.
        #[arg(long)]
        hamiltonian: String,
    },
    /// Contact norm of a Hamiltonian (oscillation + |mean| time integral).
    Norm {
        #[arg(long)]
        hamiltonian: String,
    },
    /// Contact distance between the systems of two Hamiltonians.
    Distance {
        #[arg(long)]
        hamiltonian: String,
        #[arg(long)]
        other: String,
    },
    /// Compose two systems (group product) and summarize the result.
    Compose {
        #[arg(long)]
        hamiltonian: String,
        #[arg(long)]
        other: String,
    },
    /// Invert a system (group inverse) and summarize the result.
    Invert {
        #[arg(long)]
        hamiltonian: String,
    },
    /// Conjugate a system by the time-1 map of another.
    Conjugate {
        #[arg(long)]
        hamiltonian: String,
        #[arg(long)]
        other: String,
    },
    /// Linear time reparameterization of a system.
    Reparam {
        #[arg(long)]
        hamiltonian: String,
        /// Slope of the linear reparameterization.
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Lift a system to the symplectization and report the admissible norm.
    Lift {
        #[arg(long)]
        hamiltonian: String,
    },
    /// Run a named reproduction experiment.
    Experiment {
        /// One of: divergent_factors, divergent_isotopies, cantor, sphere,
        /// triangle, reeb.
        name: String,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Run a named Cauchy-sequence diagnostic table.
    Cauchy {
        /// One of: divergent_factors, divergent_isotopies, cantor.
        name: String,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ContactError::Config(_)
                | ContactError::Parse { .. }
                | ContactError::UnknownIdentifier(_) => 2,
                _ => 3,
            }
        }
    });
}

/// Per-seed terminal state of a system run.
#[derive(Serialize)]
struct TerminalRow {
    seed: Vec<f64>,
    point: Vec<f64>,
    conformal: f64,
}

#[derive(Serialize)]
struct SystemSummary {
    dt: f64,
    method: String,
    t_end: f64,
    hamiltonian_at_seeds_t_end: Vec<f64>,
    terminal: Vec<TerminalRow>,
}

fn summarize(sys: &ContactDynamicalSystem) -> Result<SystemSummary> {
    let t_end = *sys.time_grid.last().expect("non-empty time grid");
    let mut terminal = Vec::new();
    let mut values = Vec::new();
    for (i, seed) in sys.seed_set.iter().enumerate() {
        let (p, h) = sys.at_seed(i, t_end)?;
        terminal.push(TerminalRow {
            seed: seed.coords.clone(),
            point: p.coords.clone(),
            conformal: h,
        });
        values.push(sys.hamiltonian.value(&sys.manifold, t_end, seed)?);
    }
    Ok(SystemSummary {
        dt: sys.meta.dt,
        method: sys.meta.method.to_string(),
        t_end,
        hamiltonian_at_seeds_t_end: values,
        terminal,
    })
}

fn run(cli: Cli) -> Result<()> {
    let (mut cfg, sha) = match &cli.config {
        Some(path) => load_config(path)?,
        None => (RunConfig::default(), "none".to_string()),
    };
    if let Some(kind) = &cli.manifold {
        cfg.manifold.kind = kind.clone();
    }
    if let Some(dt) = cli.dt {
        cfg.flow.dt = dt;
    }
    if let Some(grid) = &cli.grid {
        cfg.grid = Some(grid.clone());
    }
    let format = match cli.format {
        Some(f) => f,
        None => match cfg.format.as_deref() {
            Some("csv") => Format::Csv,
            Some("json") | None => Format::Json,
            Some(other) => {
                return Err(ContactError::Config(format!(
                    "unknown format `{other}` (expected json or csv)"
                )))
            }
        },
    };

    let (verb_name, json, csv) = dispatch(&cli.verb, &cfg, &sha)?;
    let text = match format {
        Format::Json => json,
        Format::Csv => csv,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            ContactError::Config(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{text}"),
    }
    let _ = verb_name;
    Ok(())
}

/// Execute a verb; returns (verb name, JSON text, CSV text).
fn dispatch(verb: &Verb, cfg: &RunConfig, sha: &str) -> Result<(String, String, String)> {
    match verb {
        Verb::Flow { hamiltonian } => {
            let (m, sys) = build_system(cfg, hamiltonian)?;
            let _ = m;
            #[derive(Serialize)]
            struct FlowReport {
                summary: SystemSummary,
                time_grid: Vec<f64>,
                trajectories: Vec<Vec<Vec<f64>>>,
                conformal: Vec<Vec<f64>>,
            }
            let report = FlowReport {
                summary: summarize(&sys)?,
                time_grid: sys.time_grid.clone(),
                trajectories: sys
                    .trajectories
                    .iter()
                    .map(|tr| tr.iter().map(|p| p.coords.clone()).collect())
                    .collect(),
                conformal: sys.conformal.clone(),
            };
            let csv = trajectory_csv(&sys);
            let env = envelope("flow", sha, vec!["trajectories".into()], report);
            Ok(("flow".into(), to_json_string(&env)?, csv))
        }
        Verb::Norm { hamiltonian } => {
            let m = cfg.build_manifold()?;
            let field = cfg.resolve_field(&m, hamiltonian)?;
            let grid = quadrature_grid(&m, &cfg.grid_resolution(&m))?;
            let t_samples = cfg.param("t_samples", 9.0) as usize;
            let report = contact_norm(&m, field.as_ref(), &grid, t_samples)?;
            let env = envelope("norm", sha, vec![], report);
            let csv = scalar_csv(&[
                ("osc_integral", env.report.osc_integral),
                ("mean_abs_integral", env.report.mean_abs_integral),
                ("total", env.report.total),
                ("sup_variant", env.report.sup_variant),
            ]);
            Ok(("norm".into(), to_json_string(&env)?, csv))
        }
        Verb::Distance { hamiltonian, other } => {
            let (m, a) = build_system(cfg, hamiltonian)?;
            let (_, b) = build_system(cfg, other)?;
            let grid = quadrature_grid(&m, &cfg.grid_resolution(&m))?;
            let probes = cfg.seeds(&m)?;
            let times = cfg.times();
            let t_samples = cfg.param("t_samples", 9.0) as usize;
            let report = contact_distance(&a, &b, &probes, &times, &grid, t_samples)?;
            let csv = scalar_csv(&[
                ("d_m", report.d_m),
                ("d_bar_m", report.d_bar_m),
                ("conf_sup", report.conf_sup),
                ("ham_norm", report.ham_norm),
                ("d_alpha", report.d_alpha),
            ]);
            let env = envelope("distance", sha, vec![], report);
            Ok(("distance".into(), to_json_string(&env)?, csv))
        }
        Verb::Compose { hamiltonian, other } => {
            let (_, a) = build_system(cfg, hamiltonian)?;
            let (_, b) = build_system(cfg, other)?;
            let sys = compose(Arc::new(a), Arc::new(b))?;
            system_report("compose", sha, &sys)
        }
        Verb::Invert { hamiltonian } => {
            let (_, a) = build_system(cfg, hamiltonian)?;
            let sys = inverse(Arc::new(a))?;
            system_report("invert", sha, &sys)
        }
        Verb::Conjugate { hamiltonian, other } => {
            let (_, a) = build_system(cfg, hamiltonian)?;
            let (_, b) = build_system(cfg, other)?;
            let t_end = *b.time_grid.last().expect("non-empty time grid");
            let phi = ContactDiffeo::from_system(Arc::new(b), t_end);
            let sys = conjugate(Arc::new(a), &phi)?;
            system_report("conjugate", sha, &sys)
        }
        Verb::Reparam { hamiltonian, scale } => {
            let (_, a) = build_system(cfg, hamiltonian)?;
            let s = scale.unwrap_or_else(|| cfg.param("scale", 2.0));
            let sys = reparameterize(Arc::new(a), &Reparam::linear(s))?;
            system_report("reparam", sha, &sys)
        }
        Verb::Lift { hamiltonian } => {
            let (m, a) = build_system(cfg, hamiltonian)?;
            let a = Arc::new(a);
            let lifted = lift_system(a.clone());
            let band_lo = cfg.param("band_lo", 0.0);
            let band_hi = cfg.param("band_hi", std::f64::consts::LN_2);
            let grid = quadrature_grid(&m, &cfg.grid_resolution(&m))?;
            let t_samples = cfg.param("t_samples", 9.0) as usize;
            let norm = admissible_norm(&lifted, band_lo, band_hi, &grid, t_samples)?;
            #[derive(Serialize)]
            struct LiftReport {
                band_lo: f64,
                band_hi: f64,
                admissible_norm: f64,
                /// (base point, theta) images of the seeds at t_end with
                /// starting theta = 0.
                lifted_terminal: Vec<(Vec<f64>, f64)>,
            }
            let t_end = *a.time_grid.last().expect("non-empty time grid");
            let mut lifted_terminal = Vec::new();
            for seed in &a.seed_set {
                let w = lifted.lift_map(
                    t_end,
                    &SymplectizationPoint {
                        base: seed.clone(),
                        theta: 0.0,
                    },
                )?;
                lifted_terminal.push((w.base.coords.clone(), w.theta));
            }
            let report = LiftReport {
                band_lo,
                band_hi,
                admissible_norm: norm,
                lifted_terminal,
            };
            let csv = scalar_csv(&[("admissible_norm", norm)]);
            let env = envelope("lift", sha, vec![], report);
            Ok(("lift".into(), to_json_string(&env)?, csv))
        }
        Verb::Experiment { name, k } => {
            let report = match name.as_str() {
                "divergent_factors" => {
                    example_divergent_factors(k.unwrap_or(cfg.param("k", 4.0) as u32))?
                }
                "divergent_isotopies" => {
                    example_divergent_isotopies(k.unwrap_or(cfg.param("k", 8.0) as u32))?
                }
                "cantor" => example_cantor(k.unwrap_or(cfg.param("k", 3.0) as u32))?,
                "sphere" => example_sphere()?,
                "triangle" => example_triangle_failure(k.unwrap_or(cfg.param("k", 8.0) as u32))?,
                "reeb" => reeb_conjugation_suite()?,
                other => {
                    return Err(ContactError::Config(format!(
                        "unknown experiment `{other}` (expected divergent_factors, \
                         divergent_isotopies, cantor, sphere, triangle, or reeb)"
                    )))
                }
            };
            experiment_output("experiment", sha, report)
        }
        Verb::Cauchy { name } => {
            let report = match name.as_str() {
                "divergent_factors" => cauchy_divergent_factors()?,
                "divergent_isotopies" => cauchy_divergent_isotopies()?,
                "cantor" => cauchy_cantor()?,
                other => {
                    return Err(ContactError::Config(format!(
                        "unknown cauchy table `{other}` (expected divergent_factors, \
                         divergent_isotopies, or cantor)"
                    )))
                }
            };
            experiment_output("cauchy", sha, report)
        }
    }
}

fn build_system(
    cfg: &RunConfig,
    hamiltonian: &str,
) -> Result<(ChartedManifold, ContactDynamicalSystem)> {
    let m = cfg.build_manifold()?;
    let field: Arc<dyn Hamiltonian> = cfg.resolve_field(&m, hamiltonian)?;
    let seeds: Vec<Point> = cfg.seeds(&m)?;
    let sys = integrate_system(&m, field, seeds, &cfg.integrator_opts())?;
    Ok((m, sys))
}

fn system_report(
    verb: &str,
    sha: &str,
    sys: &ContactDynamicalSystem,
) -> Result<(String, String, String)> {
    let summary = summarize(sys)?;
    let csv = trajectory_csv(sys);
    let env = envelope(verb, sha, vec!["trajectories".into()], summary);
    Ok((verb.to_string(), to_json_string(&env)?, csv))
}

fn experiment_output(
    verb: &str,
    sha: &str,
    report: ExperimentReport,
) -> Result<(String, String, String)> {
    let mut csv = String::from("kind,name,value,target,tol,check,provenance,pass\n");
    for s in &report.scalars {
        csv.push_str(&format!(
            "scalar,{},{},{},{},{:?},{},{}\n",
            s.name,
            config::format_f64(s.value),
            config::format_f64(s.target),
            config::format_f64(s.tol),
            s.check,
            s.provenance,
            s.pass
        ));
    }
    for p in &report.pairs {
        csv.push_str(&format!(
            "pair,{}-{},{},{},,,,\n",
            p.i,
            p.j,
            config::format_f64(p.d_alpha),
            config::format_f64(p.ham_norm)
        ));
    }
    for s in &report.series {
        for (t, v) in s.t.iter().zip(&s.values) {
            csv.push_str(&format!(
                "series,{},{},{},,,,\n",
                s.name,
                config::format_f64(*t),
                config::format_f64(*v)
            ));
        }
    }
    let series_refs = report.series.iter().map(|s| s.name.clone()).collect();
    let env = envelope(verb, sha, series_refs, report);
    Ok((verb.to_string(), to_json_string(&env)?, csv))
}

/// CSV trajectory export: seed_id,t,coords...,h.
fn trajectory_csv(sys: &ContactDynamicalSystem) -> String {
    let names = sys.manifold.coord_names();
    let mut out = format!("seed_id,t,{},h\n", names.join(","));
    for (i, traj) in sys.trajectories.iter().enumerate() {
        for (j, p) in traj.iter().enumerate() {
            let coords: Vec<String> =
                p.coords.iter().map(|c| config::format_f64(*c)).collect();
            out.push_str(&format!(
                "{i},{},{},{}\n",
                config::format_f64(sys.time_grid[j]),
                coords.join(","),
                config::format_f64(sys.conformal[i][j])
            ));
        }
    }
    out
}

fn scalar_csv(rows: &[(&str, f64)]) -> String {
    let mut out = String::from("name,value\n");
    for (name, value) in rows {
        out.push_str(&format!("{name},{}\n", config::format_f64(*value)));
    }
    out
}
