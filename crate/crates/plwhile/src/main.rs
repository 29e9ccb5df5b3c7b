use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plwhile::dist::fmt_rational;
use plwhile::frontend::printer::print_goal;
use plwhile::frontend::{parse, print_assertion, check_script, Outcome, SourceFile};
use plwhile::game::optimal_advantage;
use plwhile::interp::{exec, run_proc, Memory, DEFAULT_FUEL};
use plwhile::lang::{guard_check, well_formed, Value};
use plwhile::relational::Counterexample;

#[derive(Parser)]
#[command(name = "plw", about = "Run, check and compare plWhile programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the exact output distribution of a procedure after `init`.
    Run {
        file: String,
        #[arg(long = "proc")]
        proc_name: String,
        #[arg(long, num_args = 0..)]
        args: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u32,
    },
    /// Check proof scripts; without --goal every goal with a proof.
    Check {
        file: String,
        #[arg(long)]
        goal: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u32,
    },
    /// Exact optimal distinguishing advantage between two modules.
    Advantage {
        file: String,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u32,
    },
    /// Type checks and the labeled-syntax guard.
    Lint { file: String },
}

fn load(path: &str) -> Result<SourceFile, String> {
    let src = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    parse(&src).map_err(|e| format!("{path}:{e}"))
}

fn parse_value(f: &SourceFile, s: &str) -> Result<Value, String> {
    match s {
        "true" => Ok(Value::Bool(true)),
        "false" => Ok(Value::Bool(false)),
        _ => f.decls.elem(s).map(Value::Elem).ok_or_else(|| format!("unknown value `{s}`")),
    }
}

fn run(f: &SourceFile, target: &str, args: &[String], fuel: u32) -> Result<(), String> {
    let (m, p) = target.split_once('.').ok_or("--proc expects M.p")?;
    let module = f.decls.module(m).ok_or_else(|| format!("unknown module `{m}`"))?;
    let args = args.iter().map(|a| parse_value(f, a)).collect::<Result<Vec<_>, _>>()?;
    let start = match module.proc("init") {
        Some(init) => exec(&f.decls, &init.body, &Memory::new(), fuel).map_err(|e| e.to_string())?,
        None => plwhile::dist::Dist::dirac(Memory::new()),
    };
    let out = start
        .try_bind(|mem| run_proc(&f.decls, m, p, &args, mem, fuel))
        .map_err(|e| e.to_string())?;
    println!("{}", out.render(|(mem, v)| format!("({}, {})", mem.render(&f.decls), f.decls.show_value(v))));
    Ok(())
}

fn report_cex(f: &SourceFile, c: &Counterexample) {
    let d = &f.decls;
    println!("  left memory:  {}", c.m1.render(d));
    println!("  right memory: {}", c.m2.render(d));
    match &c.fault {
        Some(e) if c.d1.is_empty() || c.d2.is_empty() => println!("  fault: {e}"),
        fault => {
            println!("  left output:  {}", c.d1.render(|m| m.render(d)));
            println!("  right output: {}", c.d2.render(|m| m.render(d)));
            if let Some(e) = fault {
                println!("  fault: {e}");
            }
        }
    }
    for a in &c.failed {
        println!("  fails: {}", print_assertion(a));
    }
    if c.lost_mass {
        println!("  output mass below one");
    }
}

fn check(f: &SourceFile, goal: Option<&str>, fuel: u32) -> Result<bool, String> {
    let names: Vec<String> = match goal {
        Some(g) => vec![g.to_string()],
        None => f.proofs.iter().map(|p| p.goal.clone()).collect(),
    };
    let mut ok = true;
    for name in names {
        match check_script(f, &name, fuel)? {
            Outcome::Proven => println!("{name}: proven"),
            Outcome::Stuck(g, why) => {
                ok = false;
                println!("{name}: stuck at {}: {why}", g.name);
                print!("{}", print_goal(&g));
            }
            Outcome::Counterexample(g, c) => {
                ok = false;
                println!("{name}: counterexample in {}", g.name);
                report_cex(f, &c);
            }
        }
    }
    Ok(ok)
}

fn lint(f: &SourceFile) -> bool {
    let mut clean = true;
    for m in &f.decls.modules {
        if let Err(errs) = well_formed(&f.decls, m) {
            clean = false;
            errs.iter().for_each(|e| println!("type error: {e}"));
        }
        if let Err(errs) = guard_check(&f.decls, m) {
            clean = false;
            errs.iter().for_each(|e| println!("guard violation: {e}"));
        }
    }
    if clean {
        println!("ok");
    }
    clean
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.cmd {
        Cmd::Run { file, .. } | Cmd::Check { file, .. } | Cmd::Advantage { file, .. } | Cmd::Lint { file } => file,
    };
    let f = match load(file) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.cmd {
        Cmd::Run { proc_name, args, fuel, .. } => run(&f, proc_name, args, *fuel).map(|_| ExitCode::SUCCESS),
        Cmd::Check { goal, fuel, .. } => check(&f, goal.as_deref(), *fuel).map(|ok| ExitCode::from(if ok { 0 } else { 1 })),
        Cmd::Advantage { left, right, depth, fuel, .. } => optimal_advantage(&f.decls, left, right, *depth, *fuel)
            .map_err(|e| e.to_string())
            .map(|adv| {
                println!("{}", fmt_rational(&adv.value));
                if adv.value > num_traits::Zero::zero() {
                    let accepts = if adv.swapped { right } else { left };
                    println!("witness (accept means {accepts}):");
                    print!("{}", adv.witness.render(&f.decls));
                    ExitCode::from(1)
                } else {
                    ExitCode::SUCCESS
                }
            }),
        Cmd::Lint { .. } => Ok(ExitCode::from(if lint(&f) { 0 } else { 2 })),
    };
    result.unwrap_or_else(|e| {
        eprintln!("{e}");
        ExitCode::from(2)
    })
}
