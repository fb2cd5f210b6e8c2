use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ssp_omd::harness::{
    run_experiment, run_sweep, rw_max_expectation, rw_min_steps, write_json, write_sweep_csv, ExperimentConfig,
    Instance, InstanceSpec, Mode, SweepConfig,
};
use ssp_omd::instances::{SparseLbParams, UnknownTransParams};
use ssp_omd::mdp::{check_flow_constraints, fast_policy_and_diameter, write_cost_stream, MdpDocument};

#[derive(Parser)]
#[command(name = "ssp-omd", version, about = "Adversarial SSP experiments with online mirror descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Expected,
    Montecarlo,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Expected => Mode::Expected,
            ModeArg::Montecarlo => Mode::Montecarlo,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    Failure,
    SparseLb,
    UnknownTrans,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it as an MDP document with metadata.
    GenInstance {
        construction: Construction,
        #[arg(long)]
        num_states: usize,
        #[arg(long, default_value_t = 2)]
        num_actions: usize,
        #[arg(long)]
        diameter: Option<f64>,
        #[arg(long)]
        t_star: Option<f64>,
        #[arg(long)]
        sparsity: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Skip the magnitude preconditions of the sparse construction.
        #[arg(long)]
        relaxed: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write this many episodes of the cost process next to the MDP.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config; writes one CSV per seed and a JSON summary.
    Run {
        config: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a config once per value of one parameter and aggregate the results.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimate of the expected maximum of `d` biased random walks.
    RwLb {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        d: usize,
        /// Walk length; defaults to the smallest admissible `n`.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check an MDP document and, optionally, an occupancy vector against it.
    Validate {
        mdp: PathBuf,
        /// JSON array with one entry per state-action pair.
        #[arg(long)]
        occupancy: Option<PathBuf>,
        /// Hitting-time cap for the occupancy check (defaults to its mass).
        #[arg(long)]
        bound: Option<f64>,
    },
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let f = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| format!("--{flag} is required for this construction").into())
}

fn gen_instance(cmd: Command) -> CliResult<()> {
    let Command::GenInstance {
        construction,
        num_states,
        num_actions,
        diameter,
        t_star,
        sparsity,
        epsilon,
        relaxed,
        seed,
        episodes,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let spec = match construction {
        Construction::Failure => InstanceSpec::Failure { num_states },
        Construction::SparseLb => InstanceSpec::SparseLb(SparseLbParams {
            num_states,
            num_actions,
            diameter: require(diameter, "diameter")?,
            t_star: require(t_star, "t-star")?,
            sparsity: require(sparsity, "sparsity")?,
            seed,
            relaxed,
        }),
        Construction::UnknownTrans => InstanceSpec::UnknownTrans(UnknownTransParams {
            num_states,
            num_actions,
            diameter: require(diameter, "diameter")?,
            epsilon,
            seed,
        }),
    };
    let inst = Instance::load(&spec)?;
    for w in inst.meta.iter().flat_map(|m| &m.warnings) {
        eprintln!("warning: {w}");
    }
    let meta = inst.meta.as_ref().map(serde_json::to_value).transpose()?;
    let doc = MdpDocument::from_mdp(&inst.mdp, meta);
    write_json(&out, &doc)?;
    if let Some(k) = episodes {
        let path = out.with_extension("costs.jsonl");
        let mut w = BufWriter::new(File::create(&path)?);
        write_cost_stream(&mut w, &inst.costs(k, seed)?, inst.mdp.num_actions())?;
        w.flush()?;
        eprintln!("wrote {} episodes to {}", k, path.display());
    }
    Ok(())
}

fn run(config: &Path, seed: Option<u64>, mode: Option<ModeArg>, out: Option<PathBuf>) -> CliResult<bool> {
    let mut cfg: ExperimentConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    if let Some(m) = mode {
        cfg.mode = m.into();
    }
    if out.is_some() {
        cfg.out = out;
    }
    let outcome = run_experiment(&cfg)?;
    let s = &outcome.summary;
    for seed in &s.seeds {
        match &seed.error {
            None => println!(
                "seed {}: regret {:.4} (expected {:.4}) over {} episodes",
                seed.seed, seed.total_regret, seed.expected_regret, seed.episodes_completed
            ),
            Some(e) => println!("seed {}: failed after {} episodes: {e}", seed.seed, seed.episodes_completed),
        }
    }
    println!("mean regret {:.4} (se {:.4})", s.mean_regret, s.se_regret);
    Ok(s.seeds.iter().all(|x| x.error.is_none()))
}

fn validate(mdp: &Path, occupancy: Option<PathBuf>, bound: Option<f64>) -> CliResult<bool> {
    let doc: MdpDocument = read_json(mdp)?;
    let mdp = doc.to_mdp()?;
    let mut report = json!({
        "num_states": mdp.num_states(),
        "num_actions": mdp.num_actions(),
        "transitions": mdp.nnz(),
    });
    let mut ok = true;
    match fast_policy_and_diameter(&mdp) {
        Ok(fast) => {
            report["diameter"] = json!(fast.diameter);
            report["fast_hitting_time"] = json!(fast.start_hitting_time(&mdp));
        }
        Err(e) => {
            report["error"] = json!(e.to_string());
            ok = false;
        }
    }
    if let Some(path) = occupancy {
        let q: Vec<f64> = read_json(&path)?;
        if q.len() != mdp.num_pairs() {
            return Err(format!("occupancy has {} entries, expected {}", q.len(), mdp.num_pairs()).into());
        }
        let t = bound.unwrap_or_else(|| q.iter().sum());
        let flow = check_flow_constraints(&q, &mdp, t);
        ok &= flow.member;
        report["occupancy"] = json!({
            "member": flow.member,
            "max_residual": flow.max_residual,
            "worst_state": flow.worst_state,
            "mass_slack": flow.mass_slack,
            "min_entry": flow.min_entry,
            "tol": flow.tol,
        });
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        cmd @ Command::GenInstance { .. } => gen_instance(cmd).map(|_| true),
        Command::Run { config, seed, mode, out } => run(&config, seed, mode, out),
        Command::Sweep { config, out } => (|| -> CliResult<bool> {
            let sweep: SweepConfig = read_json(&config)?;
            let rows = run_sweep(&sweep)?;
            write_sweep_csv(&rows, File::create(&out)?)?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(rows.iter().all(|r| r.error.is_none()))
        })(),
        Command::RwLb { p, d, n, trials, seed } => (|| -> CliResult<bool> {
            let n = n.unwrap_or_else(|| rw_min_steps(p, d));
            let e = rw_max_expectation(n, p, d, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&e)?);
            Ok(true)
        })(),
        Command::Validate { mdp, occupancy, bound } => validate(&mdp, occupancy, bound),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
