use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddfv::calculus::duality_residual;
use ddfv::harness::{
    convergence_study, run_experiment, write_csv, write_vtk_overlay, ExperimentConfig,
    SimplicialOverlay,
};
use ddfv::mesh::{read_mesh, regularity_report, structured};
use ddfv::solver::assemble_coupled;
use ddfv::{DdfvError, Result};

/// Discrete duality finite volume solver for the bidomain model.
#[derive(Parser)]
#[command(name = "ddfv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the propagation experiment on one mesh.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a ladder of refined meshes against the finest one.
    Convergence {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of meshes, the finest being the reference.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a mesh file and print its regularity metrics.
    CheckMesh { file: PathBuf },
    /// Measure the discrete duality residual on random data.
    DualityCheck {
        /// Mesh file (a structured mesh is used with --level).
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        level: Option<usize>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

const DUALITY_TOLERANCE: f64 = 1e-11;

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| DdfvError::io(out, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| DdfvError::io(path, e))
}

fn run(config: &ExperimentConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mesh = config.mesh()?;
    write_text(
        &out.join("regularity.txt"),
        &format!("{}\n", regularity_report(&mesh)),
    )?;
    if config.dump_matrix {
        let op = assemble_coupled(&mesh, &config.tensors()?, config.epsilon, config.dt0)?;
        op.matrix.write_matrix_market(out.join("coupled.mtx"))?;
    }
    let result = run_experiment(config, &mesh, config.dt0, false)?;
    write_csv(&result.log, out.join("report.csv"))?;
    let overlay = SimplicialOverlay::new(&mesh);
    write_vtk_overlay(
        &overlay,
        &[("activation", result.activation.clone())],
        out.join("activation.vtk"),
    )?;
    for (t, v, ue) in &result.snapshots {
        let wrap = |f: &[f64]| f.iter().map(|&x| Some(x)).collect::<Vec<_>>();
        write_vtk_overlay(
            &overlay,
            &[("v", wrap(v)), ("ue", wrap(ue))],
            out.join(format!("v_t{t}.vtk")),
        )?;
    }
    let activated = result.activation.iter().filter(|t| t.is_some()).count();
    println!(
        "nodes {}  steps {}  activated {}/{}  monotone {}",
        result.nodes,
        result.summary.steps,
        activated,
        result.activation.len(),
        result.monotone
    );
    for w in &result.summary.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn convergence(config: &ExperimentConfig, levels: usize, out: &Path) -> Result<()> {
    create_dir(out)?;
    let report = convergence_study(config, levels)?;
    let table = report.to_table();
    write_csv(&table, out.join("report.csv"))?;
    let mut reg = String::new();
    for k in 0..levels {
        let n = config.level << k;
        reg.push_str(&format!(
            "# level {n}\n{}\n",
            regularity_report(&structured(config.dim, n)?)
        ));
    }
    write_text(&out.join("regularity.txt"), &reg)?;
    println!("{}", table.headers.join(","));
    for row in &table.rows {
        println!(
            "{}",
            row.iter()
                .map(|x| format!("{x:.4e}"))
                .collect::<Vec<_>>()
                .join(",")
        );
    }
    println!(
        "reference level {} ({} nodes); fitted orders: activation {}, e_q2 {:.3}",
        report.reference_level,
        report.reference_nodes,
        report
            .order_activation
            .map_or("n/a".to_string(), |o| format!("{o:.3}")),
        report.order_q2
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => load_config(&config).and_then(|c| run(&c, &out)),
        Command::Convergence {
            config,
            levels,
            out,
        } => load_config(&config).and_then(|c| convergence(&c, levels, &out)),
        Command::CheckMesh { file } => read_mesh(&file).map(|m| {
            println!("{}", regularity_report(&m));
        }),
        Command::DualityCheck {
            file,
            level,
            dim,
            trials,
            seed,
        } => {
            let mesh = match (file, level) {
                (Some(f), _) => read_mesh(f),
                (None, Some(n)) => structured(dim, n),
                (None, None) => Err(DdfvError::Input("give a mesh file or --level".into())),
            };
            mesh.and_then(|m| duality_residual(&m, trials, seed))
                .and_then(|r| {
                    println!("duality residual {r:.3e}");
                    if r <= DUALITY_TOLERANCE {
                        Ok(())
                    } else {
                        Err(DdfvError::Diagnostic {
                            step: 0,
                            reason: format!("duality residual {r:e} exceeds {DUALITY_TOLERANCE:e}"),
                        })
                    }
                })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
