use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use inls::cli_io::{self, SweepAxis};
use inls::error::Result;
use inls::ground_state::{oracle_deviation, petviashvili_solve_with, recommended_grid, shooting_solve, PetviashviliOptions, Projection};
use inls::spectral_core::{build_grid, PhysicsParams};

#[derive(Parser)]
#[command(name = "inls", version, about = "Radial spectral lab for the cubic inhomogeneous NLS with an inverse-square potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectionArg {
    Galerkin,
    Collocation,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state Q and report thresholds and Pohozaev ratios
    GroundState {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// number of modes (defaults to the recommended grid)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, value_enum, default_value = "galerkin")]
        projection: ProjectionArg,
        /// also run the shooting oracle and report the sup-norm deviation
        #[arg(long)]
        oracle: bool,
        /// directory under the output root
        #[arg(long, default_value = "ground_state")]
        out: String,
    },
    /// Run the experiment described by a config file
    Evolve { config: PathBuf },
    /// Re-run the audits on a persisted run directory
    Diagnose { run_dir: PathBuf },
    /// Run a config once per value of one parameter
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// comma-separated values
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Round-trip random fields through the discrete Hankel transform
    DhtSelftest {
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn run(cli: Cli) -> Result<i32> {
    let root = cli_io::output_root();
    match cli.command {
        Command::GroundState { a, b, n, r_max, projection, oracle, out } => {
            let p = PhysicsParams::focusing(a, b)?;
            let (n0, r0) = recommended_grid(a, b);
            let grid = build_grid(p.nu(), n.unwrap_or(n0), r_max.unwrap_or(r0))?;
            let projection = match projection {
                ProjectionArg::Galerkin => Projection::Galerkin,
                ProjectionArg::Collocation => Projection::Collocation,
            };
            let g = petviashvili_solve_with(&p, grid, None, PetviashviliOptions { projection, ..Default::default() })?;
            let mut summary = cli_io::ground_state_summary(&g);
            if oracle {
                let s = shooting_solve(&p, 1e-13)?;
                summary.push_str(&format!("shooting c = {}\noracle deviation = {:.3e}\n", cli_io::fmt17(s.c), oracle_deviation(&g, &s)));
            }
            let dir = root.join(out);
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("summary.txt"), &summary)?;
            fs::write(dir.join("ground_state.txt"), cli_io::write_field(&g.q, &g.params, 0.0))?;
            print!("{summary}");
            Ok(0)
        }
        Command::Evolve { config } => {
            let cfg = cli_io::parse_config(&fs::read_to_string(config)?)?;
            let out = cli_io::run_experiment(&cfg, &root)?;
            println!("verdict = {}", out.verdict.label());
            println!("run directory = {}", out.dir.display());
            print!("{}", out.report.render());
            Ok(out.exit_code())
        }
        Command::Diagnose { run_dir } => {
            let report = cli_io::diagnose(&run_dir)?;
            print!("{}", report.render());
            Ok(0)
        }
        Command::Sweep { config, axis, values } => {
            let cfg = cli_io::parse_config(&fs::read_to_string(config)?)?;
            let axis: SweepAxis = axis.parse()?;
            let rows = cli_io::sweep(&cfg, axis, &values, &root)?;
            for r in &rows {
                println!("{} {} {} {} scattering_consistent={}", r.value, r.status, r.verdict, r.class, r.scattering_consistent);
            }
            println!("table = {}", root.join(&cfg.output_dir).join("sweep.csv").display());
            Ok(if rows.iter().all(|r| r.status == "ok") { 0 } else { 3 })
        }
        Command::DhtSelftest { nu, n, r_max, count, seed, tol } => {
            let r = cli_io::dht_selftest(nu, n, r_max, count, seed)?;
            println!("nu = {nu}, N = {n}, fields = {count}");
            println!("max relative L2 round-trip error = {:.3e}", r.max_rel_error);
            println!("round trips: {:.3} s (grid setup {:.3} s)", r.elapsed.as_secs_f64(), r.setup.as_secs_f64());
            println!("{}", if r.passed(tol) { "PASS" } else { "FAIL" });
            Ok(if r.passed(tol) { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli_io::exit_code(&e) as u8)
        }
    }
}
