use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use strang_split::bench::{
    by_scheme, efficiency_ranking, observed_order, read_csv_file, run_sweep, write_csv, write_csv_file, SweepConfig,
};

#[derive(Parser)]
#[command(name = "strang-bench", version, about = "Convergence and efficiency sweeps for Strang splitting schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write one CSV row per (scheme, k).
    Run(Box<RunArgs>),
    /// Print observed orders and the efficiency ranking of a results file.
    Order {
        file: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Shipped step-size study: fig1, fig2, fig3 or fig4.
    #[arg(long)]
    preset: Option<String>,
    /// File of `key = value` settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// p1d, p2da or p2db.
    #[arg(long)]
    problem: Option<String>,
    /// spectral or fd.
    #[arg(long)]
    disc: Option<String>,
    /// Interior nodes per axis (spectral).
    #[arg(long)]
    nodes: Option<usize>,
    /// Mesh width (finite differences).
    #[arg(long)]
    h: Option<f64>,
    /// Comma-separated schemes: eo1, eo2, eo2nd, acr1, acr2, acr2nd.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated step sizes, strictly decreasing; applied to every scheme.
    #[arg(long)]
    k: Option<String>,
    /// dense, krylov or dst.
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    krylov_tol: Option<f64>,
    #[arg(long)]
    krylov_max_basis: Option<usize>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Timed repetitions per point; the median is reported.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Skip repeated timing and run points in parallel.
    #[arg(long)]
    untimed: bool,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut push = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k.to_string(), val));
            }
        };
        push("preset", self.preset.clone());
        push("problem", self.problem.clone());
        push("disc", self.disc.clone());
        push("resolution", self.nodes.map(|n| n.to_string()));
        push("resolution", self.h.map(|h| h.to_string()));
        push("schemes", self.scheme.clone());
        push("stepsizes", self.k.clone());
        push("phi", self.phi.clone());
        push("krylov_tol", self.krylov_tol.map(|x| x.to_string()));
        push("krylov_max_basis", self.krylov_max_basis.map(|x| x.to_string()));
        push("rtol", self.rtol.map(|x| x.to_string()));
        push("atol", self.atol.map(|x| x.to_string()));
        push("repetitions", self.repetitions.map(|x| x.to_string()));
        push("timed", self.untimed.then(|| "false".to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        v
    }
}

fn run(args: RunArgs) -> strang_split::Result<bool> {
    let cfg = SweepConfig::load(args.config.as_deref(), &args.overrides())?;
    log::info!("running {} points", cfg.point_count());
    let records = run_sweep(&cfg)?;
    match &cfg.out {
        Some(path) => write_csv_file(&records, path)?,
        None => write_csv(&records, std::io::stdout().lock())?,
    }
    let failed = records.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", records.len());
    }
    Ok(failed == 0)
}

fn order(file: PathBuf) -> strang_split::Result<bool> {
    let records = read_csv_file(&file)?;
    for (scheme, rs) in by_scheme(&records) {
        match observed_order(&rs) {
            Ok(o) => {
                let pairs: Vec<String> = o.pairwise.iter().map(|s| format!("{s:.3}")).collect();
                println!("{scheme:<7} slope {:.3}  pairwise [{}]", o.regression, pairs.join(", "));
            }
            Err(e) => println!("{scheme:<7} {e}"),
        }
    }
    match efficiency_ranking(&records) {
        Ok(r) => print!("{r}"),
        Err(e) => println!("no ranking: {e}"),
    }
    Ok(!records.iter().any(|r| r.failed()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::Order { file } => order(file),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
