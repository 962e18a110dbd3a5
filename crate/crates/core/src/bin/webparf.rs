use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use webparf::engine::{
    frontier_dump, load_config, render_report, run_crawl, Backend, Config, ConfigError,
    CrawlReport, EngineError, KillSpec, SimSource,
};
use webparf::simweb::{generate, GraphParams, SyntheticWeb};

#[derive(Parser)]
#[command(
    name = "webparf",
    version,
    about = "Domain-partitioned parallel web crawler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl as described by a config file and print the report JSON.
    Crawl {
        #[arg(long)]
        config: PathBuf,
        /// `<worker>@<round>`
        #[arg(long)]
        kill_worker: Option<KillSpec>,
    },
    /// Generate or load a synthetic web, crawl it and print the report JSON.
    Simulate(SimulateArgs),
    /// Print the queue of one domain as a fresh crawl would start it.
    FrontierDump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        domain: String,
    },
    /// Pretty-print a saved report.
    Metrics {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph parameters as a JSON file, or inline JSON starting with `{`.
    #[arg(
        long,
        conflicts_with = "graph_file",
        required_unless_present = "graph_file"
    )]
    graph_params: Option<String>,
    /// A web saved with --dump-graph.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// Fill in this many built-in topics when the parameters name no domains.
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    inbox_capacity: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_pages: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long)]
    kill_worker: Option<KillSpec>,
    /// Write the generated web as JSON here.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn read_params(arg: &str, topics: Option<usize>) -> Result<GraphParams, ConfigError> {
    let (text, path) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), PathBuf::from("<graph-params>"))
    } else {
        let path = PathBuf::from(arg);
        let text = fs::read_to_string(&path).map_err(|source| match source.kind() {
            io::ErrorKind::NotFound => ConfigError::NotFound(path.clone()),
            _ => ConfigError::Io {
                path: path.clone(),
                source,
            },
        })?;
        (text, path)
    };
    let mut params: GraphParams = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if params.domains.is_empty() {
        match topics {
            Some(n) => params.domains = webparf::simweb::topic_profiles(n),
            None => {
                return Err(ConfigError::Invariant(
                    "graph parameters name no domains; pass --topics N".into(),
                ))
            }
        }
    }
    Ok(params)
}

fn simulate(a: SimulateArgs) -> Result<CrawlReport, EngineError> {
    let source = match (&a.graph_params, &a.graph_file) {
        (Some(p), _) => {
            let params = read_params(p, a.topics)?;
            if let Some(out) = &a.dump_graph {
                generate(&params).map_err(ConfigError::from)?.save(out)?;
            }
            SimSource {
                params: Some(params),
                graph_file: None,
            }
        }
        (None, Some(f)) => {
            if let Some(out) = &a.dump_graph {
                SyntheticWeb::load(f)
                    .map_err(ConfigError::from)?
                    .save(out)?;
            }
            SimSource {
                params: None,
                graph_file: Some(f.clone()),
            }
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let mut config = Config::new(Backend::Sim(source));
    config.workers = a.workers;
    if let Some(c) = a.inbox_capacity {
        config.inbox_capacity = c;
    }
    if let Some(b) = a.batch_size {
        config.batch_size = b;
    }
    config.max_pages = a.max_pages;
    config.max_rounds = a.max_rounds;
    config.kill_worker = a.kill_worker;
    config.output_dir = a.output_dir;
    run_crawl(&config)
}

fn run(cli: Cli) -> Result<(), EngineError> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Crawl {
            config,
            kill_worker,
        } => {
            let mut config = load_config(&config)?;
            if kill_worker.is_some() {
                config.kill_worker = kill_worker;
            }
            let report = run_crawl(&config)?;
            writeln!(stdout, "{}", report.to_json())?;
        }
        Command::Simulate(args) => {
            let report = simulate(args)?;
            writeln!(stdout, "{}", report.to_json())?;
        }
        Command::FrontierDump { config, domain } => {
            let config = load_config(&config)?;
            frontier_dump(&config, &domain, &mut stdout)?;
        }
        Command::Metrics { report } => {
            let text = fs::read_to_string(&report).map_err(|source| match source.kind() {
                io::ErrorKind::NotFound => ConfigError::NotFound(report.clone()),
                _ => ConfigError::Io {
                    path: report.clone(),
                    source,
                },
            })?;
            let parsed: CrawlReport =
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                    path: report.clone(),
                    line: e.line(),
                    column: e.column(),
                    message: e.to_string(),
                })?;
            write!(stdout, "{}", render_report(&parsed))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("webparf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
