mod problem;
mod tasks;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fblab_core::homfun::parse_expr_with;
use fblab_core::{Budget, Method, Space};
use serde_json::{json, Value};

use problem::ProblemFile;
use tasks::{Context, Task, TaskOutput, WitnessKind};

/// Input that failed validation before any computation started.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(name = "fblab", version, about = "Free Banach lattice norm laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Optimizer multi-starts per norm evaluation.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit CSV tables instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Args)]
struct Inputs {
    /// Space descriptor, e.g. `l1:3`, `lp:1.5:2`, `wl1:0.5,2`.
    #[arg(long)]
    space: String,
    /// Lattice expression; later ones may refer to earlier ones as e1, e2, ...
    #[arg(long = "expr", required = true)]
    exprs: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundMethod {
    Cover,
    Maximal,
}

#[derive(Subcommand)]
enum Command {
    /// FBL norm of each expression.
    Norm {
        #[command(flatten)]
        inputs: Inputs,
        /// Fixed tuple length; omitted means adaptive doubling.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Plateau tolerance of the adaptive schedule.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Also run the brute-force net oracle at this mesh.
        #[arg(long)]
        oracle_eta: Option<f64>,
    },
    /// Upper bound for the family generated by the expressions.
    Bound {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        method: BoundMethod,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Take the expressions as an increasing family instead of directifying them.
        #[arg(long)]
        as_given: bool,
    },
    /// Maximal majorant of one expression on a weighted l1 space.
    Maximal {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = fblab_core::nakano::DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Norms across tuple lengths and their ratio to the first one.
    ProbeLambda {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        k_list: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Norm and truncation of g_phi.
    Gphi {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        phi: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// 0-based coordinates kept by the truncation.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
    },
    /// Reproduce a counterexample construction.
    Witness {
        #[command(subcommand)]
        which: WitnessCmd,
    },
    /// Built-in checks with known answers.
    Selftest,
    /// Execute a TOML problem file.
    Run { file: PathBuf },
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// Increasing family in c0 with no strong upper bound.
    C0 {
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Dyadic step functions in L1.
    L1 {
        #[arg(long, default_value_t = 4)]
        m: u32,
        /// Random block-constant functionals to test.
        #[arg(long, default_value_t = 5)]
        checks: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FBLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Invalid(format!("FBLAB_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let validation = e.chain().any(|c| {
        c.is::<Invalid>()
            || c.downcast_ref::<fblab_core::Error>().is_some_and(|e| e.is_validation())
    });
    if validation {
        2
    } else {
        3
    }
}

/// Runs the command; `Ok(false)` means a check reported failure.
fn run(cli: Cli) -> Result<bool> {
    let mut budget = Budget::default();
    if let Some(s) = cli.seed {
        budget.seed = s;
    }
    if let Some(s) = cli.starts {
        budget.starts = s;
    }
    budget.validate()?;
    let (outputs, ok, header) = match cli.command {
        Command::Selftest => {
            let (out, ok) = tasks::selftest(&budget)?;
            (vec![out], ok, None)
        }
        Command::Run { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Invalid(format!("cannot read {}: {e}", file.display())))?;
            let (ctx, list) = ProblemFile::parse(&text)?.resolve(cli.seed, cli.starts)?;
            if list.is_empty() {
                return Err(Invalid("problem file has no [[task]] entries".into()).into());
            }
            let mut outs = Vec::new();
            for (i, t) in list.iter().enumerate() {
                let out = tasks::execute(&ctx, t)
                    .with_context(|| format!("task {} ({})", i + 1, t.name()))?;
                outs.push(out);
            }
            let header = json!({ "file": file.display().to_string(), "seed": ctx.budget.seed });
            (outs, true, Some(header))
        }
        cmd => {
            let (ctx, list) = flag_tasks(cmd, budget)?;
            let outs = list
                .iter()
                .map(|t| tasks::execute(&ctx, t))
                .collect::<Result<Vec<_>>>()?;
            (outs, true, None)
        }
    };
    let text = if cli.csv {
        render_csv(&outputs)?
    } else {
        render_json(outputs, header)?
    };
    match cli.out {
        Some(path) => std::fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(ok)
}

fn flag_tasks(cmd: Command, budget: Budget) -> Result<(Context, Vec<Task>)> {
    let mut ctx = Context {
        space: None,
        budget,
        exprs: HashMap::new(),
        families: HashMap::new(),
        directified: HashMap::new(),
    };
    let load = |ctx: &mut Context, inputs: &Inputs| -> Result<Vec<String>> {
        let space: Space = inputs.space.parse().context("--space")?;
        let mut names = Vec::new();
        for (i, src) in inputs.exprs.iter().enumerate() {
            let name = format!("e{}", i + 1);
            let e = parse_expr_with(src, Some(space.dim()), &ctx.exprs)
                .with_context(|| format!("--expr {name}"))?;
            ctx.exprs.insert(name.clone(), e);
            names.push(name);
        }
        ctx.space = Some(space);
        Ok(names)
    };
    let list = match cmd {
        Command::Norm { inputs, k, p, eps, oracle_eta } => load(&mut ctx, &inputs)?
            .into_iter()
            .map(|expr| Task::Norm { expr, k, p, eps, oracle_eta })
            .collect(),
        Command::Bound { inputs, method, k, p, eps, as_given } => {
            let names = load(&mut ctx, &inputs)?;
            ctx.families.insert("family".into(), names);
            ctx.directified.insert("family".into(), !as_given);
            let method = match method {
                BoundMethod::Cover => Method::Cover,
                BoundMethod::Maximal => Method::Maximal,
            };
            vec![Task::Bound { family: "family".into(), method, k, p, eps }]
        }
        Command::Maximal { inputs, p, samples } => load(&mut ctx, &inputs)?
            .into_iter()
            .map(|expr| Task::Maximal { expr, p, samples })
            .collect(),
        Command::ProbeLambda { inputs, k_list, p } => load(&mut ctx, &inputs)?
            .into_iter()
            .map(|expr| Task::Probe { expr, k_list: k_list.clone(), p })
            .collect(),
        Command::Gphi { phi, p, support } => vec![Task::Gphi { phi, p, support }],
        Command::Witness { which } => vec![match which {
            WitnessCmd::C0 { n } => Task::Witness { witness: WitnessKind::C0, n: Some(n), m: None, checks: 0 },
            WitnessCmd::L1 { m, checks } => Task::Witness { witness: WitnessKind::L1, n: None, m: Some(m), checks },
        }],
        Command::Selftest | Command::Run { .. } => unreachable!(),
    };
    Ok((ctx, list))
}

fn render_json(outputs: Vec<TaskOutput>, header: Option<Value>) -> Result<String> {
    let value = match header {
        Some(mut h) => {
            h["results"] = Value::Array(outputs.into_iter().map(|o| o.json).collect());
            h
        }
        None if outputs.len() == 1 => outputs.into_iter().next().unwrap().json,
        None => json!({ "results": outputs.into_iter().map(|o| o.json).collect::<Vec<_>>() }),
    };
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn render_csv(outputs: &[TaskOutput]) -> Result<String> {
    let mut buf = Vec::new();
    for (i, out) in outputs.iter().enumerate() {
        if i > 0 {
            buf.push(b'\n');
        }
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(std::iter::once("task").chain(out.table.headers.iter().map(String::as_str)))?;
        let task = out.json["task"].as_str().unwrap_or("");
        for row in &out.table.rows {
            w.write_record(std::iter::once(task).chain(row.iter().map(String::as_str)))?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf)?)
}
