use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use taibleson::baseline::{default_path, BaselineKey, Baselines, SLACK};
use taibleson::calculus::RademacherRecord;
use taibleson::gamma::{gamma_qn, reflection_defect, GammaConfig};
use taibleson::kernel::{kernel_sweep, kernel_value, standard_sweep_grid, SWEEP_HEADER};
use taibleson::verify::{rbound_ratio, RBoundSetup, Scope, Suite, DEFAULT_SEED};
use taibleson::{ComplexTime, Exec, FieldParams, KernelEvalConfig};

mod evolve;

#[derive(Parser)]
#[command(name = "taibleson", version, about = "Heat kernels, Gamma functions and maximal operators on local fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Gamma function Γ_q^(n)(z) and its reflection defect.
    Gamma {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: u32,
        /// Complex argument as RE,IM.
        #[arg(long, value_parser = parse_z, allow_hyphen_values = true)]
        z: Complex64,
    },
    /// Evaluate the heat kernel K_z at one crown, at the origin, or over the standard sweep.
    Kernel {
        #[command(flatten)]
        field: FieldArgs,
        /// Complex time as RE,IM with RE > 0.
        #[arg(long, value_parser = parse_z, allow_hyphen_values = true, required_unless_present = "sweep")]
        z: Option<Complex64>,
        /// Crown index of x (‖x‖ = q^-K); the origin when omitted.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "sweep")]
        kx: Option<i64>,
        /// Print the sector sweep as CSV instead of a single value.
        #[arg(long, conflicts_with = "z")]
        sweep: bool,
    },
    /// Run a verification suite and print its JSON verdict.
    Verify {
        /// One of: sphere, gamma, levy, kernel-agreement, semigroup, kernel-bounds,
        /// taibleson, calculus, squarefn, doob, domination, rbound, maxreg.
        suite: String,
        /// Restrict the suite to one field (requires --n).
        #[arg(long, requires = "n")]
        q: Option<u32>,
        #[arg(long, requires = "q")]
        n: Option<u32>,
        #[arg(long, requires = "q", default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Rewrite the guarded constants in the baseline file with the measured values.
        #[arg(long)]
        update_baselines: bool,
        #[arg(long)]
        sequential: bool,
    },
    /// Solve y' + D^α y = f from a config file and write the time series as CSV.
    ///
    /// The config has sections [field] (q, n, alpha), [window] (kmin, kmax),
    /// [initial] (values), [forcing] (times, f0, f1, ...) and
    /// [output] (times, optional file). Value lists are comma separated, one
    /// entry per crown kmin..=kmax, each a real number or RE:IM. Forcing row fI
    /// holds on [times[I], times[I+1]). Profiles must have zero mean.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Empirical Rademacher ratio of {cos(arg z) T_z} over a sector.
    Rbound {
        #[command(flatten)]
        field: FieldArgs,
        /// Half-angle of the sector.
        #[arg(long, default_value_t = 1.3)]
        theta: f64,
        #[arg(long, default_value_t = 16)]
        points: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

impl FieldArgs {
    fn params(&self) -> taibleson::Result<FieldParams> {
        FieldParams::new(self.q, self.n, self.alpha)
    }
}

enum Failure {
    Usage(String),
    Numeric(taibleson::Error),
    Verification,
}

impl From<taibleson::Error> for Failure {
    fn from(e: taibleson::Error) -> Self {
        Failure::Numeric(e)
    }
}

fn parse_z(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re: f64 = re.trim().parse().map_err(|_| format!("`{s}` is not RE,IM"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("`{s}` is not RE,IM"))?;
    Ok(Complex64::new(re, im))
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn error_kind(e: &taibleson::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(['(', ' ', '{']).next().unwrap_or("Error").to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut out = String::new();
    let result = run(cli.command, &mut out);
    let _ = std::io::stdout().write_all(out.as_bytes());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, out: &mut String) -> Result<(), Failure> {
    match command {
        Command::Gamma { q, n, z } => {
            let params = FieldParams::new(q, n, 1.0)?;
            let cfg = GammaConfig::default();
            let value = gamma_qn(z, &params, &cfg)?;
            let defect = reflection_defect(z, &params, &cfg)?;
            let value = if value.im == 0.0 {
                format!("{:.10e}", value.re)
            } else {
                format!("{:.10e},{:.10e}", value.re, value.im)
            };
            let defect = if defect <= 1e-12 { "<=1e-12".to_string() } else { format!("={defect:.3e}") };
            out.push_str(&format!("value={value} reflection_defect{defect}\n"));
            Ok(())
        }
        Command::Kernel { field, z, kx, sweep } => {
            let params = field.params()?;
            let cfg = KernelEvalConfig::default();
            if sweep {
                let (times, kxs) = standard_sweep_grid();
                let rows = kernel_sweep(&params, &times, &kxs, &cfg, Exec::default())?;
                out.push_str(SWEEP_HEADER);
                out.push('\n');
                for r in rows {
                    out.push_str(&r.csv());
                    out.push('\n');
                }
            } else {
                let z = ComplexTime::new(z.expect("clap enforces --z without --sweep"))?;
                let v = kernel_value(z, kx, &params, &cfg)?;
                // + 0.0 turns a negative zero into zero
                out.push_str(&format!(
                    "value={:.15e},{:.15e} tail_bound={:.3e} terms={}\n",
                    v.value.re + 0.0,
                    v.value.im + 0.0,
                    v.tail_bound,
                    v.terms
                ));
            }
            Ok(())
        }
        Command::Verify { suite, q, n, alpha, seed, update_baselines, sequential } => {
            let suite = Suite::from_name(&suite).ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Failure::Usage(format!("unknown suite `{suite}` (expected one of {})", names.join(", ")))
            })?;
            let params = match (q, n) {
                (Some(q), Some(n)) => {
                    FieldParams::new(q, n, alpha)?;
                    Some((q, n, alpha))
                }
                _ => None,
            };
            let scope = Scope { params, seed, exec: exec(sequential) };
            let path = default_path();
            let mut baselines = Baselines::load(&path)?;
            let mut verdict = suite.run(&scope, &baselines)?;
            if update_baselines {
                verdict.record(&mut baselines);
                baselines.save(&path)?;
                verdict = suite.run(&scope, &baselines)?;
            }
            let text = serde_json::to_string_pretty(&verdict.to_json()).expect("JSON values serialize");
            out.push_str(&text);
            out.push('\n');
            if verdict.pass {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Evolve { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Usage(format!("--config {}: {e}", config.display())))?;
            let run = evolve::EvolveConfig::parse(&text).map_err(Failure::Usage)?;
            let csv = run.solve()?;
            match &run.output_file {
                Some(file) => std::fs::write(file, csv)
                    .map_err(|e| Failure::Usage(format!("[output] file {}: {e}", file.display())))?,
                None => out.push_str(&csv),
            }
            Ok(())
        }
        Command::Rbound { field, theta, points, trials, seed, sequential } => {
            let params = field.params()?;
            let setup = RBoundSetup { theta, points, trials };
            let ratio = rbound_ratio(&params, setup, seed, exec(sequential))?;
            let baseline = if setup == RBoundSetup::default() {
                Baselines::load_default()?.get(&BaselineKey::new("rbound", &params, "ratio"))
            } else {
                None
            };
            let pass = baseline.map(|b| ratio <= b * SLACK);
            let record = RademacherRecord {
                family: format!("cos(arg z) T_z, |arg z| <= {theta}, {points} points"),
                p: 2.0,
                trials,
                seed,
                ratio,
                baseline,
                pass,
            };
            let mut v = serde_json::to_value(&record).expect("record serializes");
            v["q"] = json!(params.q());
            v["n"] = json!(params.n());
            v["alpha"] = json!(params.alpha());
            out.push_str(&serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            out.push('\n');
            if pass == Some(false) {
                Err(Failure::Verification)
            } else {
                Ok(())
            }
        }
    }
}
