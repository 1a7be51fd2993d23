use std::path::PathBuf;
use std::process::ExitCode;

use cbmor::commands::{self, Overrides};
use cbmor::config::{ModelKind, Scenario};
use cbmor::modes::ModeSpec;
use cbmor::persist::write_json;
use cbmor::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cbmor", version, about = "Reduced order models of tied 2D hyperelastic substructures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output` from the scenario, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a structured quadrilateral mesh.
    GenerateMesh {
        #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
        elements: Vec<usize>,
        #[arg(long, num_args = 2, value_names = ["LX", "LY"])]
        size: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["X0", "Y0"], default_values_t = [0.0, 0.0])]
        origin: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario with the full, reduced or penalty model.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        /// Mode counts `I[,I...][:C]`.
        #[arg(long)]
        modes: Option<ModeSpec>,
    },
    /// Build a substructure basis by randomized sampling.
    Sample {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// POD basis of a snapshot matrix file.
    Pod {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        modes: Option<usize>,
        /// Basis file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Force-curve and displacement errors of a run against a reference run.
    Compare {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Also write the comparison as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(args: &ScenarioArgs, scn: &Scenario) -> PathBuf {
    args.out
        .clone()
        .or_else(|| scn.config.output.as_ref().map(|p| scn.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?);
    Ok(())
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenerateMesh { elements, size, origin, out } => {
            let mesh =
                commands::generate_mesh([elements[0], elements[1]], [size[0], size[1]], [origin[0], origin[1]], &out)?;
            println!("wrote {} nodes and {} elements to {}", mesh.n_nodes(), mesh.elements.len(), out.display());
        }
        Command::Run { scenario, model, modes } => {
            let scn = Scenario::from_file(&scenario.config)?;
            let out = out_dir(&scenario, &scn);
            let report = commands::run(&scn, &Overrides { model, modes, seed: scenario.seed }, &out)?;
            print_json(&report.dofs)?;
            println!("wrote {}", out.display());
        }
        Command::Sample { scenario } => {
            let scn = Scenario::from_file(&scenario.config)?;
            let out = out_dir(&scenario, &scn);
            let summary = commands::sample(&scn, &Overrides { seed: scenario.seed, ..Default::default() }, &out)?;
            print_json(&summary)?;
        }
        Command::Pod { snapshots, modes, out } => {
            let meta = commands::pod(&snapshots, modes, &out)?;
            println!("wrote {} modes to {}", meta.cols, out.display());
        }
        Command::Compare { reference, test, out } => {
            let cmp = cbmor::report::compare_runs(&reference, &test)?;
            print_json(&cmp)?;
            if let Some(out) = out {
                write_json(&out, &cmp)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
