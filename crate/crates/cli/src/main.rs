use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use regimelab::harness::{run_all, suite_competence, Artifacts, PolicyCache, Report, SuiteConfig};
use regimelab::hierarchy::{check_causal_closure, classify_regime, read_trace};
use regimelab::metarl::{load_checkpoint, new_policy, save_checkpoint, train, write_curve_csv};

#[derive(Parser, Debug)]
#[command(name = "regimelab", version, about = "Rule-hierarchy self-modification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML suite configuration; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the base seed, the training seed and the sandbox seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Frozen policy to use instead of training one.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the recurrent policy, save `policy.json`, and check competence.
    Train(Common),
    /// Run the five-phase protocol over conditions and structure factors.
    Protocol(Common),
    /// Kamin blocking with the Rescorla-Wagner learner.
    Blocking(Common),
    /// Intact vs lesioned card sorting plus the conditioning control.
    Wcst(Common),
    /// Norm-edit sandbox over the conservatism grid.
    Sandbox(Common),
    /// Classify trace files, or the canonical agent traces if none are given.
    Classify {
        #[command(flatten)]
        common: Common,
        traces: Vec<PathBuf>,
    },
    /// Print a saved summary and exit with its verdict.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Every suite listed in the configuration.
    All(Common),
}

fn load_config(c: &Common) -> anyhow::Result<SuiteConfig> {
    let mut cfg = match &c.config {
        Some(p) => SuiteConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
        cfg.protocol.training.seed = s;
        cfg.sandbox.seed = s;
    }
    Ok(cfg)
}

fn run_suites(c: &Common, suites: Option<&[&str]>) -> anyhow::Result<Report> {
    let mut cfg = load_config(c)?;
    if let Some(s) = suites {
        cfg.suites = s.iter().map(|x| x.to_string()).collect();
    }
    let checkpoint = match &c.checkpoint {
        Some(p) => Some(load_checkpoint(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let art = run_all(&cfg, checkpoint.as_ref())?;
    art.write(&c.out)?;
    Ok(art.report)
}

fn train_cmd(c: &Common) -> anyhow::Result<Report> {
    let cfg = load_config(c)?;
    let (tree, tc) = (&cfg.protocol.tree, &cfg.protocol.training);
    let out = train(new_policy(tree, tc), tc, tree)?;
    fs::create_dir_all(&c.out)?;
    let hash = save_checkpoint(&out.policy, &c.out.join("policy.json"))?;
    eprintln!("saved {} ({hash})", c.out.join("policy.json").display());

    let mut art = Artifacts::default();
    let mut curve = Vec::new();
    write_curve_csv(&out.curve, &mut curve)?;
    art.tables.push(("training_curve.csv".into(), String::from_utf8(curve)?));
    art.traces.push(("training".into(), out.trace));
    let mut cache = PolicyCache::new(&cfg, Some(&out.policy));
    let suite = suite_competence(&cfg, &mut cache, &mut art)?;
    art.push_suite(suite);
    art.write(&c.out)?;
    Ok(art.report)
}

fn classify_cmd(c: &Common, traces: &[PathBuf]) -> anyhow::Result<Report> {
    if traces.is_empty() {
        return run_suites(c, Some(&["regime"]));
    }
    let mut ok = true;
    for p in traces {
        let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let trace = read_trace(std::io::BufReader::new(f))?;
        let label = classify_regime(&trace)?;
        let closure = check_causal_closure(&trace)?;
        ok &= closure.passed;
        println!(
            "{}\t{}\tclosure={}",
            p.display(),
            serde_json::to_string(&label)?,
            closure.passed
        );
    }
    Ok(Report {
        passed: ok,
        suites: Vec::new(),
    })
}

fn report_cmd(out: &Path) -> anyhow::Result<Report> {
    let path = out.join("summary.json");
    let body = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let report: Report = serde_json::from_str(&body)?;
    if report.suites.is_empty() && !report.passed {
        bail!("{} holds no suites", path.display());
    }
    Ok(report)
}

fn print_report(r: &Report) {
    for s in &r.suites {
        println!("[{}] {}", if s.passed { "PASS" } else { "FAIL" }, s.suite);
        if let Some(e) = &s.error {
            println!("    error: {e}");
        }
        for c in &s.checks {
            println!(
                "    {} {:<28} {:>12.6}  ({})",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.requirement
            );
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(c) => train_cmd(c),
        Command::Protocol(c) => run_suites(c, Some(&["protocol"])),
        Command::Blocking(c) => run_suites(c, Some(&["blocking"])),
        Command::Wcst(c) => run_suites(c, Some(&["dissociation"])),
        Command::Sandbox(c) => run_suites(c, Some(&["sandbox"])),
        Command::Classify { common, traces } => classify_cmd(common, traces),
        Command::Report { out } => report_cmd(out),
        Command::All(c) => run_suites(c, None),
    };
    match result {
        Ok(report) => {
            print_report(&report);
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
