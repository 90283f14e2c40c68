//! Command-line front end for the clustered regenerating codes.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parameter or regime
//! error, 3 I/O or format error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use clustered_regen::capacity::{capacity_eval, operating_point, parse_rational, rational_json, Mode};
use clustered_regen::code::{self, bytes_to_symbols, node_content_json, symbols_to_bytes};
use clustered_regen::config::{parse_config, CodeSpec, ConfigEntry};
use clustered_regen::harness::{identity_sweep, run_system, RunOptions, VerificationReport, SWEEP_HEADER};
use clustered_regen::topology::{parse_node_list, ClusterTopology, NodeId};
use clustered_regen::{CodeKind, Error, Field, FieldSpec, Placement};

#[derive(Parser)]
#[command(name = "cregen", version, about = "Regenerating codes for clustered distributed storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resource pair at the MBR or MSR point.
    Params {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value = "0")]
        epsilon: String,
        #[arg(long, value_parser = ["mbr", "msr"])]
        mode: String,
    },
    /// Evaluate the capacity C(α, β_I, β_c).
    Capacity {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        alpha: String,
        #[arg(long = "beta-i")]
        beta_i: String,
        #[arg(long = "beta-c")]
        beta_c: String,
    },
    /// Encode a raw byte file into a placement.
    Build {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the outer generator matrix as hex CSV.
        #[arg(long = "dump-generator")]
        dump_generator: Option<PathBuf>,
    },
    /// Regenerate one node from helper transmissions.
    Repair {
        #[arg(long)]
        placement: PathBuf,
        /// Failed node as `l,j`.
        #[arg(long)]
        node: String,
        /// Defaults to standard output.
        #[arg(long = "transcript-out")]
        transcript_out: Option<PathBuf>,
        #[arg(long = "node-out")]
        node_out: Option<PathBuf>,
    },
    /// Recover the source bytes from a set of nodes.
    Reconstruct {
        #[arg(long)]
        placement: PathBuf,
        /// Space-separated `l,j` pairs.
        #[arg(long)]
        nodes: String,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification harness.
    Verify {
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        config: Option<PathBuf>,
        /// Identity checks over every topology up to --n-max.
        #[arg(long, requires = "n_max")]
        sweep: bool,
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        /// Check every contact set even above the sampling threshold.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Identity checks as CSV.
    Sweep {
        #[arg(long = "n-max")]
        n_max: usize,
    },
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long = "L", visible_alias = "clusters")]
    clusters: usize,
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long, conflicts_with_all = ["code", "n", "k", "clusters", "epsilon", "chi"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    code: Option<CodeKind>,
    #[arg(long, required_unless_present = "config")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    k: Option<usize>,
    #[arg(long = "L", visible_alias = "clusters", required_unless_present = "config")]
    clusters: Option<usize>,
    #[arg(long, conflicts_with = "chi")]
    epsilon: Option<String>,
    #[arg(long)]
    chi: Option<String>,
    /// Field degree (8 or 16) with its default polynomial.
    #[arg(long = "field-m")]
    field_m: Option<u32>,
}

impl CodeArgs {
    fn spec(&self) -> Result<CodeSpec, Failure> {
        if let Some(path) = &self.config {
            let entries = parse_config(&read_text(path)?)?;
            let [entry] = entries.as_slice() else {
                return Err(Error::Parameter(format!("build needs one config entry, found {}", entries.len())).into());
            };
            return Ok(entry.spec()?);
        }
        let entry = ConfigEntry {
            n: self.n.unwrap_or_default(),
            k: self.k.unwrap_or_default(),
            clusters: self.clusters.unwrap_or_default(),
            code: self.code.unwrap_or(CodeKind::Mbr0),
            chi: self.chi.clone(),
            epsilon: self.epsilon.clone(),
            field: match self.field_m {
                None => None,
                Some(8) => Some(FieldSpec::gf256()),
                Some(16) => Some(FieldSpec::gf65536()),
                Some(m) => return Err(Error::InvalidField(format!("--field-m must be 8 or 16, got {m}")).into()),
            },
            seed: 0,
            file_size: None,
        };
        Ok(entry.spec()?)
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Format(_) => 3,
            Error::Inconsistent | Error::Singular | Error::Repair(_) | Error::ZeroInverse => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { code: 3, message: format!("{}: {e}", path.display()) }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    match path {
        Some(p) => write_file(p, text.as_bytes()),
        None => write_stdout(text.as_bytes()),
    }
}

fn write_stdout(bytes: &[u8]) -> Result<(), Failure> {
    io::stdout().write_all(bytes).map_err(|e| Failure { code: 3, message: format!("stdout: {e}") })
}

fn read_placement(path: &Path) -> Result<Placement, Failure> {
    let v: Value = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure { code: 3, message: format!("{}: {e}", path.display()) })?;
    Placement::from_json(&v).map_err(|e| Failure { code: 3, message: format!("{}: {e}", path.display()) })
}

fn topology(s: &SystemArgs) -> Result<ClusterTopology, Failure> {
    Ok(ClusterTopology::new(s.n, s.k, s.clusters)?)
}

fn print_reports(reports: &[VerificationReport]) -> Result<bool, Failure> {
    let value = match reports {
        [one] => one.to_json(),
        many => Value::Array(many.iter().map(VerificationReport::to_json).collect()),
    };
    write_json(None, &value)?;
    Ok(reports.iter().all(VerificationReport::passed))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Params { system, epsilon, mode } => {
            let mode: Mode = mode.parse()?;
            let point = operating_point(&topology(&system)?, mode, parse_rational(&epsilon)?)?;
            write_json(None, &point.to_json())?;
        }
        Command::Capacity { system, alpha, beta_i, beta_c } => {
            let t = topology(&system)?;
            let (a, bi, bc) = (parse_rational(&alpha)?, parse_rational(&beta_i)?, parse_rational(&beta_c)?);
            let c = capacity_eval(&t, a, bi, bc);
            write_json(
                None,
                &json!({
                    "n": t.n(), "k": t.k(), "L": t.clusters(),
                    "alpha": rational_json(&a), "beta_i": rational_json(&bi), "beta_c": rational_json(&bc),
                    "capacity": rational_json(&c),
                }),
            )?;
        }
        Command::Build { code: args, source, out, dump_generator } => {
            let spec = args.spec()?;
            let code = spec.instantiate()?;
            let bytes = fs::read(&source).map_err(|e| io_failure(&source, e))?;
            let symbols = bytes_to_symbols(&bytes, code.field())?;
            let m = code.params().file_size;
            if symbols.is_empty() || symbols.len() % m != 0 {
                return Err(Error::Parameter(format!(
                    "source holds {} symbols, not a positive multiple of M = {m}",
                    symbols.len()
                ))
                .into());
            }
            let placement = code::build(code.as_ref(), &symbols)?;
            write_json(Some(&out), &placement.to_json(code.field()))?;
            if let Some(path) = dump_generator {
                let g = code.generator().ok_or_else(|| {
                    Failure::from(Error::Parameter(format!("{} has no single outer generator", code.kind())))
                })?;
                let width = if code.field().degree() > 8 { 4 } else { 2 };
                write_file(&path, g.to_hex_csv(width).as_bytes())?;
            }
            eprintln!(
                "{}: {} stripe(s), M = {}, α = {}, γ = {}",
                code.kind(),
                placement.stripes,
                m,
                code.params().alpha,
                code.params().gamma
            );
        }
        Command::Repair { placement, node, transcript_out, node_out } => {
            let placement = read_placement(&placement)?;
            let failed: NodeId = node.parse()?;
            let code = CodeSpec::of_placement(&placement)?.instantiate()?;
            let (transcript, content) = code::repair(code.as_ref(), &placement, failed)?;
            write_json(transcript_out.as_deref(), &transcript.to_json(code.field()))?;
            if let Some(path) = node_out {
                write_json(Some(&path), &node_content_json(&content, code.field()))?;
            }
            let original = placement.node(failed)?;
            if &content != original {
                eprintln!("regenerated {failed} differs from the stored content");
                return Ok(false);
            }
        }
        Command::Reconstruct { placement, nodes, out } => {
            let placement = read_placement(&placement)?;
            let nodes = parse_node_list(&nodes)?;
            let code = CodeSpec::of_placement(&placement)?.instantiate()?;
            let source = code::reconstruct(code.as_ref(), &placement, &nodes)?;
            let bytes = symbols_to_bytes(&source, &Field::from_spec(placement.field)?);
            match out {
                Some(path) => write_file(&path, &bytes)?,
                None => write_stdout(&bytes)?,
            }
        }
        Command::Verify { config, sweep, n_max, exhaustive } => {
            if sweep {
                return verify_sweep(n_max.unwrap_or_default());
            }
            let path = config.expect("clap requires --config without --sweep");
            let entries = parse_config(&read_text(&path)?)?;
            let mut reports = Vec::with_capacity(entries.len());
            for entry in &entries {
                let options = RunOptions { seed: entry.seed, file_size: entry.file_size, exhaustive };
                reports.push(run_system(&entry.spec()?, options)?);
            }
            return print_reports(&reports);
        }
        Command::Sweep { n_max } => {
            let rows = identity_sweep(n_max);
            let mut text = format!("{SWEEP_HEADER}\n");
            for row in &rows {
                text.push_str(&row.csv());
                text.push('\n');
            }
            write_stdout(text.as_bytes())?;
            return Ok(rows.iter().all(|r| r.pass));
        }
    }
    Ok(true)
}

fn verify_sweep(n_max: usize) -> Result<bool, Failure> {
    use clustered_regen::harness::CheckResult;
    let started = std::time::Instant::now();
    let rows = identity_sweep(n_max);
    let mut names: Vec<&str> = rows.iter().map(|r| r.check).collect();
    names.dedup();
    names.sort_unstable();
    names.dedup();
    let checks: Vec<CheckResult> = names
        .iter()
        .map(|&name| {
            let failure = rows
                .iter()
                .find(|r| r.check == name && !r.pass)
                .map(|r| json!({ "n": r.n, "k": r.k, "L": r.clusters }));
            let count = rows.iter().filter(|r| r.check == name).count();
            CheckResult::from_failure(format!("{name} ({count} topologies)"), failure)
        })
        .collect();
    let report = VerificationReport {
        system: json!({ "sweep": { "n_max": n_max, "rows": rows.len() } }),
        checks,
        elapsed_ms: started.elapsed().as_millis(),
    };
    print_reports(std::slice::from_ref(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
