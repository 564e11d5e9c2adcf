use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use vobe_core::dsl::parse_classes;
use vobe_core::mapss::{define_spec, SpecDocument, Variant};
use vobe_core::matching::WeightSpec;
use vobe_core::model::{validate_record, ContextTriple, OrganizationRecord};
use vobe_core::social::SocialNetwork;
use vobe_registry::config::Config;
use vobe_registry::service::{DocumentKind, InceptRequest, PlanRequest, RegistryError, SearchRequest, Service};

#[derive(Parser)]
#[command(name = "vobe", version, about = "Competence registry and VO partner selection")]
struct Cli {
    /// Data directory of the registry.
    #[arg(long, global = true, env = "VOBE_DATA", default_value = "vobe-data")]
    data: PathBuf,
    /// TOML configuration file.
    #[arg(long, global = true, env = "VOBE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Store records, class files, networks or specifications.
    Ingest {
        files: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
    /// Check documents without storing them.
    Validate {
        files: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
    /// Rank stored organizations against a class.
    Search {
        classfile: PathBuf,
        /// JSON weights: a list aligned with the requirements or a map keyed
        /// by requirement text.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Generate ranked variants for a specification file or stored id.
    Plan {
        spec: String,
        /// Context statement `object=subject`, read as `(object, is, subject)`.
        #[arg(long = "context", value_parser = parse_context)]
        context: Vec<ContextTriple>,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        exclude_discrepant: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Verify an organization's claims against the social network.
    Verify { org_id: String },
    /// Create a VO from the variant at `variant_index` of a fresh plan.
    Incept {
        spec_id: String,
        variant_index: usize,
        #[arg(long = "context", value_parser = parse_context)]
        context: Vec<ContextTriple>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Print the whole registry state as canonical JSON.
    Export {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fold the log into a new compacted generation.
    Compact,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Record,
    Classfile,
    Network,
    Spec,
}

impl From<Kind> for DocumentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Record => DocumentKind::Record,
            Kind::Classfile => DocumentKind::Classfile,
            Kind::Network => DocumentKind::Network,
            Kind::Spec => DocumentKind::Spec,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_context(text: &str) -> Result<ContextTriple, String> {
    match text.split_once('=') {
        Some((object, subject)) if !object.is_empty() && !subject.is_empty() => {
            Ok(ContextTriple::new(object, "is", subject))
        }
        _ => Err(format!("expected object=subject, got `{text}`")),
    }
}

enum Failure {
    Registry(RegistryError),
    Io(String),
    Invalid(String),
}

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Self {
        Failure::Registry(e)
    }
}

impl Failure {
    fn report(&self) -> u8 {
        match self {
            Failure::Registry(e) => {
                eprintln!("error: {e}");
                if let RegistryError::Invalid { problems, .. } = e {
                    for p in problems.iter().filter(|p| p.message != e.to_string()) {
                        let at = p.path.as_deref().map(|p| format!(" at {p}")).unwrap_or_default();
                        match &p.rule {
                            Some(rule) => eprintln!("  [{rule}]{at}: {}", p.message),
                            None => eprintln!("  {}{at}", p.message),
                        }
                    }
                }
                e.exit_code() as u8
            }
            Failure::Io(message) => {
                eprintln!("error: {message}");
                2
            }
            Failure::Invalid(message) => {
                eprintln!("error: {message}");
                1
            }
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn kind_of(path: &Path, text: &str, kind: Option<Kind>) -> Result<DocumentKind, Failure> {
    kind.map(DocumentKind::from)
        .or_else(|| DocumentKind::detect(&path.to_string_lossy(), text))
        .ok_or_else(|| Failure::Invalid(format!("cannot tell what kind of document {} is; use --kind", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Invalid(e.to_string()))?;
    stdout(format!("{text}\n").as_bytes())
}

fn stdout(bytes: &[u8]) -> Outcome {
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Io(e.to_string())),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => ExitCode::from(f.report()),
    }
}

fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| match e {
            vobe_registry::config::ConfigError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        })?,
        None => Config::default(),
    };
    let service = || Service::open(&cli.data, config.clone()).map_err(Failure::from);

    match cli.command {
        Command::Ingest { files, kind } => {
            let service = service()?;
            for path in &files {
                let text = read(path)?;
                for stored in service.ingest_text(kind_of(path, &text, kind)?, &text)? {
                    print_json(&stored)?;
                }
            }
            Ok(())
        }
        Command::Validate { files, kind } => {
            let service = service()?;
            for path in &files {
                let text = read(path)?;
                validate(&service, kind_of(path, &text, kind)?, &text)?;
                stdout(format!("{}: ok\n", path.display()).as_bytes())?;
            }
            Ok(())
        }
        Command::Search { classfile, weights } => {
            let weights = match weights {
                Some(path) => Some(
                    serde_json::from_str::<WeightSpec>(&read(&path)?)
                        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?,
                ),
                None => None,
            };
            let request = SearchRequest {
                class: None,
                class_text: Some(read(&classfile)?),
                weights,
            };
            print_json(&service()?.search(&request)?)
        }
        Command::Plan {
            spec,
            context,
            verify,
            exclude_discrepant,
            format,
        } => {
            let service = service()?;
            let request = PlanRequest {
                context,
                preferences: None,
                verify,
                exclude_discrepant,
            };
            let path = Path::new(&spec);
            let plan = if path.is_file() {
                let document = SpecDocument::from_json_str(&read(path)?).map_err(RegistryError::from)?;
                service.plan_document(document, &request)?
            } else {
                service.plan(&spec, &request)?
            };
            match format {
                Format::Json => print_json(&plan),
                Format::Csv => write_csv(&plan.variants),
            }
        }
        Command::Verify { org_id } => print_json(&service()?.verify(&org_id)?),
        Command::Incept {
            spec_id,
            variant_index,
            context,
        } => {
            let request = InceptRequest::Index {
                index: variant_index,
                plan: PlanRequest {
                    context,
                    ..PlanRequest::default()
                },
            };
            print_json(&service()?.incept(&spec_id, &request)?)
        }
        Command::Serve { port, host } => serve(service()?, SocketAddr::new(host, port)),
        Command::Export { output } => {
            let text = service()?.export();
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
                None => stdout(text.as_bytes()),
            }
        }
        Command::Compact => {
            let seq = service()?.compact()?;
            stdout(format!("compacted through operation {seq}\n").as_bytes())
        }
    }
}

fn validate(service: &Service, kind: DocumentKind, text: &str) -> Outcome {
    match kind {
        DocumentKind::Record => {
            let record = OrganizationRecord::from_json_str(text).map_err(|e| Failure::Invalid(e.to_string()))?;
            let report = validate_record(&record);
            if !report.is_valid() {
                for v in &report.violations {
                    eprintln!("  {v}");
                }
                return Err(Failure::Invalid(format!(
                    "record `{}` violates {} rule(s)",
                    record.org_id(),
                    report.violations.len()
                )));
            }
        }
        DocumentKind::Classfile => {
            parse_classes(text).map_err(|e| Failure::Invalid(e.to_string()))?;
        }
        DocumentKind::Network => {
            SocialNetwork::from_json_str(text).map_err(|e| Failure::Invalid(e.to_string()))?;
        }
        DocumentKind::Spec => {
            let document = SpecDocument::from_json_str(text).map_err(|e| Failure::Invalid(e.to_string()))?;
            let snapshot = service.snapshot();
            define_spec(document, |name| snapshot.classes.get(name).cloned())
                .map_err(|e| Failure::Invalid(e.to_string()))?;
        }
    }
    Ok(())
}

fn write_csv(variants: &[Variant]) -> Outcome {
    let mut out = csv::Writer::from_writer(std::io::stdout());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    out.write_record([
        "rank",
        "assignment",
        "competenceScore",
        "socialScore",
        "socialSatisfied",
        "totalCost",
        "currency",
        "totalDuration",
        "unpriced",
    ])
    .map_err(io)?;
    for (k, v) in variants.iter().enumerate() {
        let assignment: Vec<String> = v
            .assignment
            .iter()
            .map(|(role, a)| format!("{role}={}", a.org_id))
            .collect();
        out.write_record([
            k.to_string(),
            assignment.join(";"),
            v.competence_score.to_string(),
            v.social_score.to_string(),
            v.social_satisfied.to_string(),
            v.total_cost.amount.to_string(),
            v.total_cost.currency.clone(),
            v.total_duration.to_string(),
            v.unpriced.join(";"),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| Failure::Io(e.to_string()))
}

fn serve(service: Arc<Service>, addr: SocketAddr) -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Io(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?;
        println!("listening on http://{local}");
        tracing::info!(%local, "serving");
        vobe_registry::http::serve(service, listener)
            .await
            .map_err(|e| Failure::Io(e.to_string()))
    })
}
