//! Batch driver tying the toolkit together: check processes under the three
//! typing disciplines, infer priorities, reduce and explore, and compile
//! functional programs down to processes.
//!
//! Exit codes: 0 when the request succeeds (accepted, deadlock free, or ran
//! to completion), 1 when a checker rejects or a deadlock is found, 2 on
//! file, parse, or usage errors.

mod wire;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use sessio_core::lastn::{
    print_funtype, trans_config, trans_type, typecheck_config, Configuration, TransResult,
};
use sessio_core::{
    check_acp, check_ap, check_apcp, explore, parse_context, parse_process, parse_term,
    print_process, print_type, render_trace, run, ApcpReport, CheckFailure, Name,
    PrioritySolution, SessionType, Strategy, TypingContext, DEFAULT_MAX_STATES,
    DEFAULT_MAX_STEPS,
};

#[derive(Parser)]
#[command(name = "sessio", version, about = "Driver for the session process toolkit")]
struct Cli {
    /// Emit one JSON object instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DisciplineArg {
    /// Session conformance only.
    Ap,
    /// Cut-restricted composition: deadlock freedom on tree topologies.
    Acp,
    /// Priority inference: deadlock freedom on cyclic topologies.
    Apcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// Always take the first redex in canonical order.
    First,
    /// Pick redexes with a seeded generator.
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a process under the chosen discipline.
    Check {
        /// Process file.
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = DisciplineArg::Ap)]
        discipline: DisciplineArg,
        /// Context file with `name : type` entries for the free names.
        #[arg(long)]
        context: Option<PathBuf>,
        /// Print the generated constraint set (priority discipline only).
        #[arg(long)]
        emit_constraints: bool,
        /// Print the solved priorities or the conflict cycle (priority
        /// discipline only).
        #[arg(long)]
        emit_priorities: bool,
    },
    /// Annotate a closed process with priorities and solve the constraints.
    Infer {
        /// Process file.
        file: PathBuf,
        /// Print the generated constraint set.
        #[arg(long)]
        emit_constraints: bool,
        /// Print the solved priorities or the conflict cycle.
        #[arg(long)]
        emit_priorities: bool,
    },
    /// Reduce a process and print the trace.
    Run {
        /// Process file.
        file: PathBuf,
        /// Step budget.
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::First)]
        strategy: StrategyArg,
        /// Seed for the random strategy; the SESSIO_SEED environment
        /// variable overrides this flag.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustively explore the reduction graph and report terminal states.
    Explore {
        /// Process file.
        file: PathBuf,
        /// State budget.
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
    },
    /// Compile a closed functional program and write the process image.
    Translate {
        /// Functional source file.
        file: PathBuf,
        /// Output process file; gets a header recording the typing.
        out: PathBuf,
    },
    /// Compile a functional program, then check the image under the
    /// priority discipline: acceptance proves the source deadlock free.
    Pipeline {
        /// Functional source file.
        file: PathBuf,
        /// Print the generated constraint set.
        #[arg(long)]
        emit_constraints: bool,
        /// Print the solved priorities or the conflict cycle.
        #[arg(long)]
        emit_priorities: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_process(path: &Path) -> anyhow::Result<sessio_core::Process> {
    parse_process(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_context(path: Option<&PathBuf>) -> anyhow::Result<TypingContext> {
    match path {
        None => Ok(TypingContext::new()),
        Some(p) => parse_context(&read(p)?).map_err(|e| anyhow!("{}: {e}", p.display())),
    }
}

fn emit_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn print_apcp_extras(report: &ApcpReport, constraints: bool, priorities: bool) {
    if constraints {
        for c in &report.constraints {
            println!("constraint: {c}");
        }
    }
    if priorities {
        match &report.solution {
            Some(PrioritySolution::Assignment(map)) => {
                for (var, value) in map {
                    println!("priority: {var} = {value}");
                }
            }
            Some(PrioritySolution::Infeasible(cycle)) => {
                for c in cycle {
                    println!("cycle: {c}");
                }
            }
            None => {}
        }
    }
}

/// A compiled functional program: the image, its delivery name, and the
/// types recorded for the header.
struct Compiled {
    trans: TransResult,
    result_type: SessionType,
    source_type: String,
}

fn compile(path: &Path) -> anyhow::Result<Result<Compiled, CheckFailure>> {
    let term = parse_term(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let config = Configuration::main(term);
    let verdict = typecheck_config(&config, &[]);
    if !verdict.accepted {
        return Ok(Err(verdict.failure.expect("rejection carries a failure")));
    }
    let ret = verdict.return_type.expect("acceptance carries the type");
    match trans_config(&config, &[], Name::intern("z")) {
        Ok(trans) => Ok(Ok(Compiled {
            trans,
            result_type: trans_type(&ret),
            source_type: print_funtype(&ret),
        })),
        Err(f) => Ok(Err(f)),
    }
}

fn render_source_reject(f: &CheckFailure) -> String {
    format!("REJECT: {} at {}: {}", f.rule, f.path, f.message)
}

fn fun_reject_dto(f: &CheckFailure) -> wire::FunVerdictDto {
    wire::FunVerdictDto {
        accepted: false,
        return_type: None,
        failure: Some(wire::FailureDto {
            rule: f.rule.clone(),
            path: f.path.clone(),
            message: f.message.clone(),
        }),
    }
}

/// Header plus process in the grammars the parsers read back.
fn image_file(c: &Compiled) -> String {
    let entries: Vec<String> = c
        .trans
        .context_image
        .iter()
        .map(|(n, t)| format!("{} : {}", n.origin(), print_type(t)))
        .collect();
    format!(
        "-- context: {}\n-- result: {} : {}\n{}\n",
        entries.join(", "),
        c.trans.result_name.origin(),
        print_type(&c.result_type),
        print_process(&c.trans.process),
    )
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Check { file, discipline, context, emit_constraints, emit_priorities } => {
            let p = load_process(file)?;
            let ctx = load_context(context.as_ref())?;
            match discipline {
                DisciplineArg::Ap | DisciplineArg::Acp => {
                    let v = if *discipline == DisciplineArg::Ap {
                        check_ap(&p, &ctx)
                    } else {
                        check_acp(&p, &ctx)
                    };
                    if cli.json {
                        emit_json(&wire::verdict_dto(&v))?;
                    } else {
                        println!("{}", v.render());
                    }
                    Ok(v.accepted)
                }
                DisciplineArg::Apcp => {
                    let report = check_apcp(&p, &ctx);
                    if cli.json {
                        emit_json(&wire::apcp_dto(&report))?;
                    } else {
                        println!("{}", report.verdict.render());
                        print_apcp_extras(&report, *emit_constraints, *emit_priorities);
                    }
                    Ok(report.verdict.accepted)
                }
            }
        }
        Command::Infer { file, emit_constraints, emit_priorities } => {
            let p = load_process(file)?;
            let report = check_apcp(&p, &TypingContext::new());
            if cli.json {
                emit_json(&wire::apcp_dto(&report))?;
            } else {
                println!("{}", report.verdict.render());
                println!("{}", print_process(&report.process));
                print_apcp_extras(&report, *emit_constraints, *emit_priorities);
            }
            Ok(report.verdict.accepted)
        }
        Command::Run { file, steps, strategy, seed } => {
            let p = load_process(file)?;
            let strat = match strategy {
                StrategyArg::First => Strategy::First,
                StrategyArg::Random => {
                    let seed = match std::env::var("SESSIO_SEED") {
                        Ok(s) => s
                            .trim()
                            .parse::<u64>()
                            .map_err(|_| anyhow!("SESSIO_SEED must be an unsigned number"))?,
                        Err(_) => seed.unwrap_or(0),
                    };
                    Strategy::Random(seed)
                }
            };
            let trace = run(&p, *steps, strat);
            let dto = wire::trace_dto(&trace);
            if cli.json {
                emit_json(&dto)?;
            } else {
                print!("{}", render_trace(&trace));
                println!("steps: {}", dto.steps.len());
                println!("terminal: {}", dto.terminal);
                println!("deadlocked: {}", dto.deadlocked);
            }
            Ok(!dto.deadlocked)
        }
        Command::Explore { file, max_states } => {
            let p = load_process(file)?;
            let report = explore(&p, *max_states);
            if cli.json {
                emit_json(&wire::explore_dto(&report))?;
            } else {
                println!("states visited: {}", report.states_visited);
                println!("terminals: {}", report.terminals.len());
                println!("deadlocked: {}", report.deadlocked.len());
                println!("truncated: {}", report.truncated);
                for t in &report.deadlocked {
                    println!("stuck: {}", print_process(&t.residual));
                }
            }
            Ok(report.deadlocked.is_empty())
        }
        Command::Translate { file, out } => match compile(file)? {
            Err(f) => {
                if cli.json {
                    emit_json(&fun_reject_dto(&f))?;
                } else {
                    println!("{}", render_source_reject(&f));
                }
                Ok(false)
            }
            Ok(c) => {
                fs::write(out, image_file(&c))
                    .with_context(|| format!("cannot write {}", out.display()))?;
                if cli.json {
                    emit_json(&wire::TranslateDto {
                        process: print_process(&c.trans.process),
                        result_name: c.trans.result_name.origin(),
                        result_type: print_type(&c.result_type),
                        context: wire::entries(&c.trans.context_image),
                    })?;
                } else {
                    println!("result: {} : {}", c.trans.result_name.origin(),
                        print_type(&c.result_type));
                    println!("wrote: {}", out.display());
                }
                Ok(true)
            }
        },
        Command::Pipeline { file, emit_constraints, emit_priorities } => match compile(file)? {
            Err(f) => {
                if cli.json {
                    emit_json(&wire::PipelineDto {
                        source: fun_reject_dto(&f),
                        result_type: None,
                        check: None,
                        deadlock_free: false,
                    })?;
                } else {
                    println!("{}", render_source_reject(&f));
                    println!("deadlock-free: not proven");
                }
                Ok(false)
            }
            Ok(c) => {
                let mut ctx = c.trans.context_image.clone();
                ctx.insert(c.trans.result_name, c.result_type.clone())
                    .map_err(|n| anyhow!("duplicate context entry '{}'", n.origin()))?;
                let report = check_apcp(&c.trans.process, &ctx);
                let proven = report.verdict.accepted;
                if cli.json {
                    emit_json(&wire::PipelineDto {
                        source: wire::FunVerdictDto {
                            accepted: true,
                            return_type: Some(c.source_type.clone()),
                            failure: None,
                        },
                        result_type: Some(print_type(&c.result_type)),
                        check: Some(wire::apcp_dto(&report)),
                        deadlock_free: proven,
                    })?;
                } else {
                    println!("result: {} : {}", c.trans.result_name.origin(),
                        print_type(&c.result_type));
                    println!("{}", report.verdict.render());
                    print_apcp_extras(&report, *emit_constraints, *emit_priorities);
                    println!(
                        "deadlock-free: {}",
                        if proven { "yes" } else { "not proven" }
                    );
                }
                Ok(proven)
            }
        },
    }
}
