//! Command-line front end: run conformance suites and print or save the
//! seeded reports, or run the flow-descent demonstration.
//!
//! Exit codes: 0 all checks passed, 1 at least one violation, 2 usage or
//! runtime error.

use affeq::integrators::suite::run_descent_demo;
use affeq::integrators::method_by_name;
use affeq::registry::{ClassFilter, Registry, SuiteConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "affeq", about = "Affine equivariance conformance harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run conformance suites and report violations.
    Check(CheckArgs),
    /// Integrate a surjectively related pair of systems and report how far
    /// the projected high-dimensional trajectory drifts from the
    /// low-dimensional one.
    DemoDescend(DemoArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Suites to run (default: all registered suites).
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Map classes to check: bijective, injective, surjective.
    #[arg(long = "classes", value_delimiter = ',')]
    classes: Vec<String>,
    /// Dimension pairs as m:n (repeatable); entries inconsistent with a
    /// class are skipped for that class.
    #[arg(long = "dims")]
    dims: Vec<String>,
    /// Trials per report (default 200).
    #[arg(long)]
    trials: Option<u64>,
    /// Residual tolerance override (default: per-suite).
    #[arg(long)]
    tol: Option<f64>,
    /// Master seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for per-suite JSON reports (default: print to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to the named algorithms (repeatable).
    #[arg(long = "algorithms", value_delimiter = ',')]
    algorithms: Vec<String>,
}

#[derive(Args)]
struct DemoArgs {
    /// One-step method to integrate with.
    #[arg(long, default_value = "rk4")]
    method: String,
    /// Dimensions m:n of the surjective map, m > n.
    #[arg(long, default_value = "2:1")]
    dims: String,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(':')
        .ok_or_else(|| format!("dims must look like m:n, got `{s}`"))?;
    let m = m.parse().map_err(|_| format!("bad dimension `{m}`"))?;
    let n = n.parse().map_err(|_| format!("bad dimension `{n}`"))?;
    if m == 0 || n == 0 {
        return Err(format!("dimensions must be positive, got `{s}`"));
    }
    Ok((m, n))
}

fn run_check(args: &CheckArgs) -> Result<bool, String> {
    let registry = Registry::with_builtin();
    let mut classes = Vec::new();
    for c in &args.classes {
        classes.push(
            ClassFilter::parse(c)
                .ok_or_else(|| format!("unknown class `{c}` (bijective|injective|surjective)"))?,
        );
    }
    let dims = if args.dims.is_empty() {
        None
    } else {
        Some(
            args.dims
                .iter()
                .map(|s| parse_dims(s))
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    let cfg = SuiteConfig {
        classes,
        dims,
        trials: args.trials,
        tolerance: args.tol,
        seed: args.seed,
        algorithms: if args.algorithms.is_empty() {
            None
        } else {
            Some(args.algorithms.clone())
        },
    };

    let selected: Vec<&str> = if args.suites.is_empty() {
        registry.names()
    } else {
        args.suites.iter().map(String::as_str).collect()
    };

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {dir:?}: {e}"))?;
    }

    let mut all_passed = true;
    for name in selected {
        let runner = registry
            .get(name)
            .ok_or_else(|| format!("unknown suite `{name}` ({:?})", registry.names()))?;
        let reports = runner.run(&cfg).map_err(|e| format!("suite {name}: {e}"))?;
        let json = serde_json::to_string_pretty(&reports)
            .map_err(|e| format!("serializing {name} reports: {e}"))?;
        if let Some(dir) = &args.out {
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, format!("{json}\n"))
                .map_err(|e| format!("writing {path:?}: {e}"))?;
        } else {
            println!("{json}");
        }
        for r in &reports {
            let status = if r.passed() { "pass" } else { "FAIL" };
            eprintln!(
                "{status} {} (max residual {:.3e}, tol {:.1e}, {} trials)",
                r.suite, r.max_residual, r.tolerance, r.trials
            );
            all_passed &= r.passed();
        }
    }
    Ok(all_passed)
}

fn run_demo(args: &DemoArgs) -> Result<(), String> {
    let dims = parse_dims(&args.dims)?;
    if dims.0 <= dims.1 {
        return Err(format!(
            "demo needs a surjective map, so m > n; got {}:{}",
            dims.0, dims.1
        ));
    }
    let method = method_by_name(&args.method)
        .ok_or_else(|| format!("unknown method `{}`", args.method))?;
    let demo = run_descent_demo(method.as_ref(), dims, args.steps, args.h, args.seed)
        .map_err(|e| e.to_string())?;

    let fmt = |v: &nalgebra::DVector<f64>| {
        let cells: Vec<String> = v.iter().map(|x| format!("{x:>12.6}")).collect();
        cells.join(" ")
    };
    println!("step  high-dimensional trajectory (R^{})", dims.0);
    for (i, x) in demo.high_trajectory.iter().enumerate() {
        println!("{i:>4}  {}", fmt(x));
    }
    println!();
    println!("step  projected (R^{})  vs  low-dimensional (R^{})", dims.1, dims.1);
    for (i, (p, y)) in demo
        .projected
        .iter()
        .zip(&demo.low_trajectory)
        .enumerate()
    {
        println!("{i:>4}  {}    {}", fmt(p), fmt(y));
    }
    println!();
    println!("max_deviation={:.6e}", demo.max_deviation);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(args) => run_check(args),
        Command::DemoDescend(args) => run_demo(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
