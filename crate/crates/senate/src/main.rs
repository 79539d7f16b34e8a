//! Thin command-line front end over the library: one subcommand per
//! operational surface, everything else lives in `senate`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use senate::geometry::{seesaw_leakage_mc, seesaw_leakage_theory, LeakageParams};
use senate::harness::{run_baseline, run_episode_detailed, run_sweep, write_csv};
use senate::sortition::{nash_probability, transmit_payoff};
use senate::ScenarioConfig;

#[derive(Parser)]
#[command(name = "senate", about = "Sybil-resistant wireless consensus simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override single config keys, e.g. `--set attack.shout_offset=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> senate::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        for item in &self.overrides {
            let Some((key, value)) = item.split_once('=') else {
                return Err(senate::Error::Config(format!(
                    "--set expects KEY=VALUE, got `{item}`"
                )));
            };
            cfg.apply(key.trim(), value.trim())
                .map_err(senate::Error::Config)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and print its outcome.
    Episode {
        #[command(flatten)]
        config: ConfigArgs,
        /// Episode seed (defaults to the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Dump the embedding trace as CSV (round,candidate,x,y,error).
        #[arg(long)]
        trace_wnc: bool,
        /// Dump the agreement rounds as CSV (round,leader,proposal,accepts).
        #[arg(long)]
        trace_ba: bool,
    },
    /// Sweep the number of faulty nodes and emit one CSV row per point.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated faulty counts, e.g. `0,10,20,30`.
        #[arg(long)]
        faulty: String,
        /// Episodes per point (defaults to the config value).
        #[arg(long)]
        episodes: Option<usize>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Direct all-node agreement, no sortition or selection.
    Baseline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        faulty: String,
        #[arg(long)]
        episodes: Option<usize>,
        /// Let faulty nodes field their pseudonym identities (sanity arm).
        #[arg(long)]
        sybil: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of the seesaw-leakage law; prints one CSV row.
    SeesawMc {
        /// Good-node count M.
        #[arg(long, default_value_t = 20)]
        m: usize,
        /// Coordinate variance σ².
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Attack strength ς².
        #[arg(long, default_value_t = 1.0)]
        varsigma2: f64,
        /// Embedding dimension L.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Equilibrium audit: (cost, population, p*, payoff-at-p*) grid as CSV.
    NashCheck {
        /// Comma-separated costs (default 0.05..0.95 step 0.05).
        #[arg(long)]
        costs: Option<String>,
        /// Comma-separated populations (default 2..=50).
        #[arg(long)]
        populations: Option<String>,
    },
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> senate::Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| senate::Error::Config(format!("bad {what} entry `{p}`")))
        })
        .collect()
}

fn emit(out: Option<PathBuf>, bytes: &[u8]) -> senate::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> senate::Result<()> {
    match cli.command {
        Command::Episode { config, seed, trace_wnc, trace_ba } => {
            let cfg = config.load()?;
            let seed = seed.unwrap_or(cfg.seed);
            let detail = run_episode_detailed(&cfg, seed)?;
            let r = &detail.result;
            println!("seed = {}", r.seed);
            println!("slots_elapsed = {}", r.slots_elapsed);
            println!("sybil_seats = {}", r.sybil_seats);
            println!("distinct_owners = {}", r.distinct_owners);
            println!(
                "removed = {}",
                r.removed.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
            );
            println!(
                "senators = {}",
                r.senators.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
            );
            println!("valid_senate = {}", r.valid_senate);
            println!("faulty_senators = {}", r.faulty_senators);
            match r.decision {
                Some(d) => println!("decision = {d}"),
                None => println!(
                    "decision = none ({})",
                    r.failure.map(|f| f.to_string()).unwrap_or_default()
                ),
            }
            println!("agreement_ok = {}", r.agreement_ok);
            println!("median_valid = {}", r.median_valid);
            println!("wnc_rounds = {}", r.wnc_rounds);
            if trace_wnc {
                println!("trace_wnc:");
                println!("round,candidate,x,y,error");
                for row in &detail.wnc_trace {
                    println!(
                        "{},{},{:.6},{:.6},{:.6}",
                        row.round, row.candidate, row.x, row.y, row.error
                    );
                }
            }
            if trace_ba {
                println!("trace_ba:");
                println!("round,leader,proposal,accepts");
                if let Some(tr) = &detail.transcript {
                    for (i, round) in tr.rounds.iter().enumerate() {
                        let proposal = round
                            .leader_value
                            .map(|v| format!("{v:.6}"))
                            .unwrap_or_else(|| "silent".into());
                        println!("{},{},{},{}", i + 1, round.leader, proposal, round.accepts);
                    }
                }
            }
        }
        Command::Sweep { config, faulty, episodes, out } => {
            let cfg = config.load()?;
            let faulty: Vec<usize> = parse_list(&faulty, "faulty count")?;
            let episodes = episodes.unwrap_or(cfg.episodes);
            let rows = run_sweep(&cfg, &faulty, episodes)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(out, &buf)?;
        }
        Command::Baseline { config, faulty, episodes, sybil, out } => {
            let cfg = config.load()?;
            let faulty: Vec<usize> = parse_list(&faulty, "faulty count")?;
            let episodes = episodes.unwrap_or(cfg.episodes);
            let rows = run_baseline(&cfg, &faulty, episodes, sybil)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(out, &buf)?;
        }
        Command::SeesawMc { m, sigma2, varsigma2, dim, trials, seed } => {
            let params = LeakageParams { m_good: m, sigma2, varsigma2, dim };
            let theory = seesaw_leakage_theory(&params);
            let est = seesaw_leakage_mc(&params, trials, seed)?;
            println!("m,sigma2,varsigma2,dim,trials,seed,theory,gram_schmidt,gram_schmidt_se,eigen,eigen_se");
            println!(
                "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                m, sigma2, varsigma2, dim, trials, seed, theory, est.gram_schmidt,
                est.gram_schmidt_se, est.eigen, est.eigen_se
            );
        }
        Command::NashCheck { costs, populations } => {
            let costs: Vec<f64> = match costs {
                Some(s) => parse_list(&s, "cost")?,
                None => (1..=19).map(|i| i as f64 * 0.05).collect(),
            };
            let populations: Vec<f64> = match populations {
                Some(s) => parse_list(&s, "population")?,
                None => (2..=50).map(|n| n as f64).collect(),
            };
            println!("cost,population,p_star,payoff_at_p_star");
            for &c in &costs {
                for &n in &populations {
                    let p = nash_probability(c, n)?;
                    let payoff = transmit_payoff(1.0, p, n, c);
                    println!("{c:.6},{n},{p:.9},{payoff:.3e}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
