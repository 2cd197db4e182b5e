//! The `forestqb` command line.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::compiler::compile;
use crate::discovery::discover_sensors;
use crate::endpoint::EndpointClient;
use crate::model::{apply_mutation, parse_query_with_default_limit, serialize_query, AbstractQuery};
use crate::nlu::{classify, respond};
use crate::oracle::{evaluate, parse_sparql_subset};
use crate::rdf::Graph;
use crate::service::{self, run_query, RunError, ServiceConfig};
use crate::table::ResultTable;

#[derive(Debug, Parser)]
#[command(name = "forestqb", version, about = "Build, compile and run SOSA observation queries")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the endpoint URL from the configuration.
    #[arg(long, global = true)]
    pub endpoint_url: Option<String>,
    /// Overrides the listen address from the configuration.
    #[arg(long, global = true)]
    pub listen: Option<String>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the sensor catalog of the endpoint as JSON.
    Discover,
    /// Compile a query document to SPARQL.
    Compile { document: PathBuf },
    /// Compile a query document and execute it against the endpoint.
    Run {
        document: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Interactive chat over a session query.
    Chat,
    /// Start the HTTP API.
    Serve,
    /// Evaluate a query document over a local N-Triples file, offline.
    Eval {
        document: PathBuf,
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A failure with its exit status: 1 for document problems, 2 for I/O,
/// network and configuration problems.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn io(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Validation(report) => invalid(describe_report(&report)),
            RunError::Compile(e) => invalid(e.to_string()),
            RunError::Endpoint(e) => io(e.to_string()),
        }
    }
}

fn describe_report(report: &crate::model::ValidationReport) -> String {
    let lines: Vec<String> = report.fatals().map(|d| format!("{}: {} ({})", d.path, d.message, d.code)).collect();
    format!("document has fatal diagnostics:\n  {}", lines.join("\n  "))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_max_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn config_for(cli: &Cli) -> Result<ServiceConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => ServiceConfig::load(path).map_err(|e| io(e.to_string()))?,
        None => ServiceConfig::default(),
    };
    if let Some(url) = &cli.endpoint_url {
        config.endpoint.url = url.clone();
    }
    if let Some(addr) = &cli.listen {
        config.listen_address = addr.clone();
    }
    config.check().map_err(|e| io(e.to_string()))?;
    Ok(config)
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Runtime::new().map_err(|e| io(format!("cannot start runtime: {e}")))
}

fn read_document(path: &Path, default_limit: u64) -> Result<AbstractQuery, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io(format!("cannot read {}: {e}", path.display())))?;
    parse_query_with_default_limit(&text, default_limit).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn render(table: &ResultTable, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(table).expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

fn client(config: &ServiceConfig) -> Result<EndpointClient, Failure> {
    EndpointClient::new(config.endpoint.clone()).map_err(|e| io(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = config_for(&cli)?;
    let coords = config.coordinates();
    let mut out = std::io::stdout().lock();
    let mut emit = |text: &str| out.write_all(text.as_bytes()).map_err(|e| io(e.to_string()));

    match &cli.command {
        Command::Compile { document } => {
            let q = read_document(document, config.default_limit)?;
            let sparql = compile(&q, &coords).map_err(RunError::from)?;
            emit(&sparql.text)
        }
        Command::Eval { document, graph, format } => {
            let q = read_document(document, config.default_limit)?;
            let sparql = compile(&q, &coords).map_err(RunError::from)?;
            let nt = std::fs::read_to_string(graph).map_err(|e| io(format!("cannot read {}: {e}", graph.display())))?;
            let graph = Graph::parse_ntriples(&nt).map_err(|e| io(format!("{}: {e}", graph.display())))?;
            let ast = parse_sparql_subset(&sparql.text).map_err(|e| invalid(format!("compiled query: {e}")))?;
            emit(&render(&evaluate(&ast, &graph), *format))
        }
        Command::Run { document, format } => {
            let q = read_document(document, config.default_limit)?;
            let client = client(&config)?;
            let (_, table) = runtime()?.block_on(run_query(&client, &q, &coords))?;
            emit(&render(&table, *format))
        }
        Command::Discover => {
            let client = client(&config)?;
            let catalog = runtime()?
                .block_on(discover_sensors(&client, config.discovery_override().as_ref()))
                .map_err(|e| io(e.to_string()))?;
            let mut text = serde_json::to_string_pretty(&catalog).expect("catalogs serialize");
            text.push('\n');
            emit(&text)
        }
        Command::Serve => runtime()?.block_on(service::serve(config)).map_err(|e| io(e.to_string())),
        Command::Chat => chat(&config, &mut std::io::stdin().lock(), &mut std::io::stdout().lock()),
    }
}

/// One line per message. `:query` prints the session document, `:quit`
/// ends the session.
fn chat(config: &ServiceConfig, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), Failure> {
    let rt = runtime()?;
    let client = client(config)?;
    let coords = config.coordinates();
    let catalog = rt
        .block_on(discover_sensors(&client, config.discovery_override().as_ref()))
        .map_err(|e| io(e.to_string()))?;
    let mut q = AbstractQuery {
        limit: config.default_limit,
        ..AbstractQuery::empty()
    };
    let mut say = |text: &str| writeln!(out, "{text}").map_err(|e| io(e.to_string()));
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line).map_err(|e| io(e.to_string()))? == 0 {
            return Ok(());
        }
        let message = line.trim();
        match message {
            "" => continue,
            ":quit" => return Ok(()),
            ":query" => {
                say(serialize_query(&q).trim_end())?;
                continue;
            }
            _ => {}
        }
        let outcome = respond(&classify(message, &catalog), &q, &catalog, &coords);
        for m in &outcome.mutations {
            q = apply_mutation(&q, m).expect("chat outcomes are pre-validated");
        }
        say(&outcome.reply)?;
        if outcome.trigger_search {
            match rt.block_on(run_query(&client, &q, &coords)) {
                Ok((_, table)) => say(table.to_csv().trim_end())?,
                Err(e) => say(&format!("The query failed: {e}"))?,
            }
        }
    }
}
