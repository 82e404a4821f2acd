use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use behcomp::approx::{check_exact, synthesize};
use behcomp::engine::{Request, RequestSpace, Resolver, Session, SessionError};
use behcomp::game::{build_game, extract_approx_from_game, solve_safety, Mode};
use behcomp::io::{
    enacted_to_dot, export_ispl, full_to_dot, ltfs_to_dot, parse_problem_with, pruned_to_dot, serialize_problem,
    Problem,
};
use behcomp::model::TerminalPolicy;
use behcomp::product::{enacted_system, full_enacted_system};

#[derive(Parser)]
#[command(name = "behcomp", version, about = "Behavior composition and optimal target approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal approximation of the target.
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Problem)]
        format: Format,
    },
    /// Check whether the target has an exact composition.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Approximation through the safety game (deterministic behaviors only).
    GameApprox {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = GameMode::Existential)]
        mode: GameMode,
        #[arg(long, value_enum, default_value_t = Format::Problem)]
        format: Format,
    },
    /// Run the imported controller against a stream of requests.
    Run {
        #[command(flatten)]
        common: Common,
        /// Request file, one `from action to` per line.
        #[arg(long, conflicts_with = "interactive")]
        requests: Option<PathBuf>,
        /// Read requests from standard input.
        #[arg(long)]
        interactive: bool,
        /// Whether requests name target or approximation transitions.
        #[arg(long, value_enum, default_value_t = Space::Target)]
        space: Space,
        #[arg(long, value_enum, default_value_t = ResolverKind::Random)]
        resolver: ResolverKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Export a model as DOT, ISPL or a problem document.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        /// Model to render as DOT.
        #[arg(long, value_enum, default_value_t = Graph::Target)]
        graph: Graph,
        /// Draw removed states and transitions of the pruned graph dashed.
        #[arg(long)]
        show_removed: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the document's terminal-state policy.
    #[arg(long, value_enum)]
    fix_terminal: Option<Policy>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Ispl,
    Problem,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameMode {
    Existential,
    Universal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    Target,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResolverKind {
    Random,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Reject,
    Loop,
}

#[derive(Clone, Copy, ValueEnum)]
enum Graph {
    Target,
    Behaviors,
    Enacted,
    Full,
    Pruned,
    Approx,
}

impl Common {
    fn load(&self) -> Result<Problem> {
        let text = fs::read_to_string(&self.input).with_context(|| format!("reading {}", self.input.display()))?;
        let policy = self.fix_terminal.map(|p| match p {
            Policy::Reject => TerminalPolicy::Reject,
            Policy::Loop => TerminalPolicy::Loop,
        });
        Ok(parse_problem_with(&text, policy)?)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn render(p: &Problem, target: &behcomp::Ltfs, format: Format) -> Result<String> {
    Ok(match format {
        Format::Problem => serialize_problem(&p.system, target, p.policy),
        Format::Dot => ltfs_to_dot(target),
        Format::Ispl => export_ispl(&p.system, target)?,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Approx { common, format } => {
            let p = common.load()?;
            let s = synthesize(&p.system, &p.target);
            common.emit(&render(&p, s.approximation(), format)?)?;
        }
        Command::Check { common } => {
            let p = common.load()?;
            let exact = check_exact(&p.system, &p.target);
            common.emit(&format!("exact: {exact}\n"))?;
            if !exact {
                return Ok(ExitCode::from(1));
            }
        }
        Command::GameApprox { common, mode, format } => {
            let p = common.load()?;
            let g = build_game(&p.system, &p.target)?;
            let mode = match mode {
                GameMode::Existential => Mode::Existential,
                GameMode::Universal => Mode::Universal,
            };
            let w = solve_safety(&g, mode);
            let approx = extract_approx_from_game(&g, &w).rename(format!("{}_approx", p.target.name()));
            common.emit(&render(&p, &approx, format)?)?;
        }
        Command::Export {
            common,
            format,
            graph,
            show_removed,
        } => {
            let p = common.load()?;
            let text = match format {
                Format::Problem => serialize_problem(&p.system, &p.target, p.policy),
                Format::Ispl => export_ispl(&p.system, &p.target)?,
                Format::Dot => match graph {
                    Graph::Target => ltfs_to_dot(&p.target),
                    Graph::Behaviors => p.system.behaviors().iter().map(ltfs_to_dot).collect(),
                    Graph::Enacted => enacted_to_dot(&enacted_system(&p.system)),
                    Graph::Full => full_to_dot(&full_enacted_system(&enacted_system(&p.system), &p.target)),
                    Graph::Pruned => pruned_to_dot(synthesize(&p.system, &p.target).pruned(), show_removed),
                    Graph::Approx => ltfs_to_dot(synthesize(&p.system, &p.target).approximation()),
                },
            };
            common.emit(&text)?;
        }
        Command::Run {
            common,
            requests,
            interactive,
            space,
            resolver,
            seed,
            max_steps,
        } => {
            let p = common.load()?;
            let synthesis = synthesize(&p.system, &p.target);
            let space = match space {
                Space::Target => RequestSpace::Target,
                Space::Approx => RequestSpace::Approximation,
            };
            let mut session = Session::imported(&synthesis, space);
            if let Some(max) = max_steps {
                session = session.with_max_steps(max);
            }
            let mut resolver = match resolver {
                ResolverKind::Random => Resolver::random(seed),
                ResolverKind::Adversarial => Resolver::Adversarial,
            };
            let input: Box<dyn BufRead> = match (&requests, interactive) {
                (Some(path), _) => Box::new(io::BufReader::new(
                    fs::File::open(path).with_context(|| format!("reading {}", path.display()))?,
                )),
                (None, true) => Box::new(io::stdin().lock()),
                (None, false) => bail!("run needs --requests FILE or --interactive"),
            };
            let mut out: Box<dyn Write> = match &common.output {
                Some(path) => Box::new(fs::File::create(path)?),
                None => Box::new(io::stdout().lock()),
            };
            for line in input.lines() {
                let line = line?;
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some(request) = Request::parse(line) else {
                    writeln!(out, "rejected")?;
                    out.flush()?;
                    continue;
                };
                match session.step(&request, &mut resolver) {
                    Ok(step) => {
                        write!(out, "honored k={} sys={}", step.index, p.system.format_tuple(&step.system_after))?;
                        // An outcome may land outside the requested block.
                        if space == RequestSpace::Approximation {
                            write!(out, " at={}", session.request_ltfs().state_name(session.request_state()))?;
                        }
                        writeln!(out)?;
                    }
                    Err(SessionError::RequestRejected(_)) => writeln!(out, "rejected")?,
                    Err(SessionError::SessionClosed) => {
                        writeln!(out, "closed")?;
                        break;
                    }
                }
                out.flush()?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
