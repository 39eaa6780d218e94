//! `stv`: simulate, sample, profile, ablate, verify and plan quantum
//! circuits in the grid-circuit text format.
//!
//! Results go to stdout; timing output goes to stderr so stdout stays
//! byte-identical across runs of the same invocation.

mod gen;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stv_core::circuit::Circuit;
use stv_core::exec::{
    ablation_report, profile_table, simulate, standard_ablation_configs, DisabledOpts, ExecConfig,
};
use stv_core::oracle;
use stv_core::planner::build_plan;
use stv_core::state::{dump_line, format_bitstring, StateVector};

#[derive(Parser)]
#[command(name = "stv", version, about = "Schrodinger state-vector circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Circuit file (grid-circuit text format).
    #[arg(long)]
    circuit: PathBuf,
    /// Worker threads (default: $STV_THREADS or 1).
    #[arg(long)]
    threads: Option<usize>,
    /// Flush the global 1/sqrt(2) exponent when it reaches this value.
    #[arg(long, default_value_t = stv_core::state::DEFAULT_FLUSH_THRESHOLD)]
    flush_threshold: u32,
    /// Low/high qubit boundary (amplitude-bit position); default ceil(n/2).
    #[arg(long)]
    boundary: Option<u32>,
    /// Comma-separated optimizations to disable:
    /// diag_fusion,pairing,recursive_transform,aligned_lanes,gray_codes,all.
    #[arg(long, value_name = "OPT[,OPT...]")]
    off: Option<String>,
    /// Check for NaN/Inf at pass boundaries.
    #[arg(long, default_value_t = false)]
    debug_checks: bool,
}

impl CommonOpts {
    fn config(&self) -> Result<ExecConfig> {
        let threads = self
            .threads
            .or_else(|| {
                std::env::var("STV_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(1);
        let disabled = match &self.off {
            Some(list) => DisabledOpts::parse(list)?,
            None => DisabledOpts::none(),
        };
        Ok(ExecConfig {
            workers: threads.max(1),
            flush_threshold: self.flush_threshold,
            disabled,
            boundary: self.boundary,
            debug_checks: self.debug_checks,
        })
    }

    fn load(&self) -> Result<Circuit> {
        let text = std::fs::read_to_string(&self.circuit)
            .with_context(|| format!("reading {}", self.circuit.display()))?;
        let circuit = Circuit::parse(&text)?;
        circuit
            .validate()
            .map_err(|errs| anyhow!("invalid circuit: {}", errs[0]))?;
        Ok(circuit)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a circuit; print gate counts, the norm, and requested
    /// amplitudes.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated amplitude indices, or `all` (guarded above n=26).
        #[arg(long)]
        amplitudes: Option<String>,
    },
    /// Simulate and draw measurement samples.
    Sample {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 1)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate and print a per-category runtime profile (table on stderr).
    Profile {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the ablation matrix; per-configuration timings go to stderr.
    Ablate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Simulate with both the engine and the brute-force oracle and compare.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Failure threshold for the max per-amplitude |delta|.
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
    /// Print the simulation plan without running it.
    Plan {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Generate a random grid benchmark circuit on stdout.
    Gen {
        #[arg(long)]
        rows: u32,
        #[arg(long)]
        cols: u32,
        /// Number of middle cycles (total depth is 1+depth+1).
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_amplitude_list(spec: &str, sv: &StateVector) -> Result<Vec<u64>> {
    if spec == "all" {
        if sv.num_qubits() > 26 {
            bail!("refusing to dump all amplitudes above 26 qubits");
        }
        return Ok((0..sv.len()).collect());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let j: u64 = s.parse().with_context(|| format!("bad amplitude index `{s}`"))?;
            if j >= sv.len() {
                bail!("amplitude index {j} out of range");
            }
            Ok(j)
        })
        .collect()
}

fn print_gate_counts(circuit: &Circuit) {
    let counts = circuit.gate_counts();
    println!(
        "gates all={} two_qubit={} t={}",
        counts.all, counts.two_qubit, counts.t
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, amplitudes } => {
            let circuit = common.load()?;
            let cfg = common.config()?;
            let t0 = Instant::now();
            let (sv, _) = simulate(&circuit, &cfg)?;
            eprintln!("simulated in {:.3}s", t0.elapsed().as_secs_f64());
            print_gate_counts(&circuit);
            println!("norm {:.8e}", sv.norm());
            if let Some(spec) = amplitudes {
                for j in parse_amplitude_list(&spec, &sv)? {
                    println!("{}", dump_line(&sv, j)?);
                }
            }
        }
        Command::Sample { common, shots, seed } => {
            let circuit = common.load()?;
            let cfg = common.config()?;
            let (sv, _) = simulate(&circuit, &cfg)?;
            for j in sv.sample_measurement(seed, shots)? {
                println!("{}", format_bitstring(sv.num_qubits(), j));
            }
        }
        Command::Profile { common } => {
            let circuit = common.load()?;
            let cfg = common.config()?;
            let (sv, profiles) = simulate(&circuit, &cfg)?;
            print_gate_counts(&circuit);
            println!("norm {:.8e}", sv.norm());
            // category + gate counts are stable; timings go to stderr
            for row in stv_core::exec::aggregate_profile(&profiles) {
                println!("category {:<28} gates {}", row.category.to_string(), row.gates);
            }
            eprint!("{}", profile_table(&profiles));
        }
        Command::Ablate { common } => {
            let circuit = common.load()?;
            let base = common.config()?;
            let configs = match &common.off {
                // With --off, compare all-on against exactly that config.
                Some(list) => vec![
                    ("all_on".to_string(), ExecConfig {
                        disabled: DisabledOpts::none(),
                        ..base.clone()
                    }),
                    (format!("off:{list}"), base.clone()),
                ],
                None => standard_ablation_configs(&base),
            };
            let rows = ablation_report(&circuit, &configs)?;
            let all_on = rows[0].seconds;
            for row in &rows {
                println!("config {:<24} agreement_ok max_delta={:.3e}", row.name, row.max_delta);
                eprintln!(
                    "config {:<24} {:>10.3}s  speedup_vs_all_on {:>7.2}x",
                    row.name,
                    row.seconds,
                    row.seconds / all_on.max(1e-12)
                );
            }
        }
        Command::Verify { common, tolerance } => {
            let circuit = common.load()?;
            if circuit.num_qubits > oracle::ORACLE_MAX_QUBITS {
                bail!(
                    "verify supports at most {} qubits (oracle memory guard)",
                    oracle::ORACLE_MAX_QUBITS
                );
            }
            let cfg = common.config()?;
            let (sv, _) = simulate(&circuit, &cfg)?;
            let want = oracle::oracle_run(&circuit)?;
            let cmp = oracle::compare_states(&want, &sv)?;
            if cmp.passes(tolerance) {
                println!("PASS maxDelta={:.3e} worst_index={}", cmp.max_delta, cmp.worst_index);
            } else {
                println!("FAIL maxDelta={:.3e} worst_index={}", cmp.max_delta, cmp.worst_index);
                bail!("verification mismatch");
            }
        }
        Command::Plan { common } => {
            let circuit = common.load()?;
            let cfg = common.config()?;
            let plan = build_plan(&circuit, &cfg.plan_options());
            print!("{}", plan.dump());
        }
        Command::Gen { rows, cols, depth, seed } => {
            let text = gen::grid_circuit(rows, cols, depth, seed)?;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
