//! `treepred`: compress, decompress, simulate, bound, kraft.
//!
//! Every command echoes its fully resolved configuration as one JSON line on
//! standard error; `simulate --config` accepts that JSON back.

mod tokens;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use treepred::lab::{self, McConfig, Mode};
use treepred::{
    AdditiveEstimator, CodeRule, CodeTreePredictor, Descriptor, PredictorSpec, PredictorTree, PrefixCode, SourceSpec,
    TreeSpec,
};

use tokens::Tokenize;

#[derive(Parser)]
#[command(name = "treepred", version, about = "Tree predictors, arithmetic coding and redundancy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a file into a self-describing stream.
    Compress(CompressArgs),
    /// Restore a file from a stream.
    Decompress(DecompressArgs),
    /// Estimate redundancy r^t and write a CSV report.
    Simulate(SimulateArgs),
    /// Evaluate the tree redundancy bound with its per-vertex terms.
    Bound(BoundArgs),
    /// Check a prefix code: Kraft sum, prefix-freeness, mean length.
    Kraft(KraftArgs),
}

#[derive(Args, Clone)]
struct PredictorArgs {
    /// laplace, krichevsky, additive:<δ>, escape or escape-kt. With --tree or
    /// --code only the estimator part is used.
    #[arg(long, default_value = "laplace")]
    predictor: String,
    /// Tree topology as JSON (file path or inline).
    #[arg(long, conflicts_with = "code")]
    tree: Option<String>,
    /// Prefix code: unary, elias-gamma, exp-unary, or JSON (file path or inline).
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    alphabet_size: Option<u64>,
}

#[derive(Args)]
struct CompressArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "words")]
    tokenize: Tokenize,
    #[command(flatten)]
    model: PredictorArgs,
}

#[derive(Args)]
struct DecompressArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// A previously echoed configuration; replaces all model flags.
    #[arg(long, conflicts_with_all = ["source", "tree", "code", "t"])]
    config: Option<String>,
    #[command(flatten)]
    model: PredictorArgs,
    /// uniform:<n>, geometric:<r>, finite:<p0,p1,…>, or JSON (file path or inline).
    #[arg(long)]
    source: Option<String>,
    /// Horizons, comma-separated.
    #[arg(long, value_delimiter = ',')]
    t: Vec<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tail_eps: Option<f64>,
    /// auto, exact or monte-carlo.
    #[arg(long)]
    mode: Option<String>,
    /// Add the R^t column.
    #[arg(long)]
    cumulative: bool,
    /// Print an aligned table instead of CSV.
    #[arg(long)]
    table: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    model: PredictorArgs,
    #[arg(long)]
    source: String,
    #[arg(long)]
    t: u64,
    #[arg(long, default_value_t = 1e-9)]
    tail_eps: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct KraftArgs {
    #[arg(long)]
    code: String,
    /// Codewords enumerated for generator rules.
    #[arg(long, default_value_t = 64)]
    letters: u64,
    /// Source for the mean codeword length.
    #[arg(long)]
    source: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tail_eps: f64,
}

/// Everything `simulate` needs; echoed and accepted by `--config`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    predictor: PredictorSpec,
    source: SourceSpec,
    t: Vec<u64>,
    lab: McConfig,
    #[serde(default)]
    cumulative: bool,
}

fn echo<T: Serialize>(config: &T) -> Result<()> {
    eprintln!("config {}", serde_json::to_string(config)?);
    Ok(())
}

/// Inline JSON, or the contents of a file.
fn json_arg(arg: &str) -> Result<String> {
    if arg.trim_start().starts_with(['{', '[']) {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

/// Deserializes with the JSON path of any error in the message.
fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| anyhow::anyhow!("invalid {what} at `{}`: {}", e.path(), e.inner()))
}

fn parse_source(arg: &str) -> Result<SourceSpec> {
    let (kind, rest) = arg.split_once(':').unwrap_or((arg, ""));
    let src = match kind {
        "uniform" => SourceSpec::uniform(rest.parse().context("uniform:<n>")?)?,
        "geometric" => SourceSpec::geometric(rest.parse().context("geometric:<ratio>")?)?,
        "finite" => SourceSpec::finite(
            rest.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().context("finite:<p0,p1,…>")?,
        )?,
        _ => parse_json(&json_arg(arg)?, "source")?,
    };
    Ok(src)
}

fn parse_code(arg: &str) -> Result<PrefixCode> {
    match arg {
        "unary" => Ok(PrefixCode::Rule(CodeRule::Unary)),
        "elias-gamma" => Ok(PrefixCode::Rule(CodeRule::EliasGamma)),
        "exp-unary" => Ok(PrefixCode::Rule(CodeRule::ExpUnary)),
        _ => parse_json(&json_arg(arg)?, "code"),
    }
}

impl PredictorArgs {
    /// Resolves the flags to a predictor; `alphabet_size` is the fallback
    /// when `--alphabet-size` is absent.
    fn resolve(&self, fallback_size: Option<u64>) -> Result<PredictorSpec> {
        let estimator = || -> Result<AdditiveEstimator> {
            self.predictor.parse().with_context(|| format!("--predictor {:?} is not an estimator", self.predictor))
        };
        if let Some(tree) = &self.tree {
            let tree: TreeSpec = parse_json(&json_arg(tree)?, "tree")?;
            return Ok(PredictorSpec::Tree { tree, estimator: estimator()? });
        }
        if let Some(code) = &self.code {
            return Ok(PredictorSpec::Code { code: parse_code(code)?, estimator: estimator()? });
        }
        let size = self.alphabet_size.or(fallback_size).context("--alphabet-size is required for this predictor")?;
        Ok(PredictorSpec::from_name(&self.predictor, size)?)
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn compress(args: CompressArgs) -> Result<()> {
    let input = fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let tokens = tokens::tokenize(&input, args.tokenize)?;
    let fallback = tokens.alphabet_size.max(args.model.alphabet_size.unwrap_or(0)).max(2);
    let predictor = args.model.resolve(Some(fallback))?;
    echo(&json!({
        "command": "compress",
        "input": args.input,
        "out": args.out,
        "tokenize": args.tokenize,
        "predictor": predictor,
    }))?;
    let descriptor = Descriptor { predictor, metadata: Some(tokens.metadata) };
    let (stream, stats) = treepred::encode(&descriptor, &tokens.letters)?;
    write_out(&args.out, &stream)?;
    println!("symbols {}", stats.symbols);
    println!("header_bytes {}", stats.header_bytes);
    println!("payload_bits {}", stats.payload_bits);
    println!("bits_per_symbol {:.6}", stats.bits_per_symbol());
    println!("ideal_bits {:.6}", stats.ideal_bits);
    Ok(())
}

fn decompress(args: DecompressArgs) -> Result<()> {
    echo(&json!({ "command": "decompress", "input": args.input, "out": args.out }))?;
    let stream = fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let decoded = treepred::decode(&stream).context("corrupt stream")?;
    let bytes = tokens::detokenize(&decoded.letters, decoded.descriptor.metadata.as_ref())?;
    write_out(&args.out, &bytes)?;
    println!("symbols {}", decoded.letters.len());
    Ok(())
}

fn parse_mode(s: &str) -> Result<Mode> {
    Ok(match s {
        "auto" => Mode::Auto,
        "exact" => Mode::Exact,
        "monte-carlo" | "monte_carlo" => Mode::MonteCarlo,
        _ => bail!("--mode must be auto, exact or monte-carlo"),
    })
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = match &args.config {
        Some(c) => parse_json::<SimConfig>(&json_arg(c)?, "config")?,
        None => {
            let source = parse_source(args.source.as_deref().context("--source is required")?)?;
            if args.t.is_empty() {
                bail!("--t is required");
            }
            let defaults = McConfig::default();
            let lab = McConfig {
                trials: args.trials.unwrap_or(defaults.trials),
                seed: args.seed.unwrap_or(source.seed()),
                tail_eps: args.tail_eps.unwrap_or(defaults.tail_eps),
                mode: args.mode.as_deref().map(parse_mode).transpose()?.unwrap_or_default(),
                ..defaults
            };
            let predictor = args.model.resolve(source.alphabet_size())?;
            SimConfig { predictor, source, t: args.t.clone(), lab, cumulative: args.cumulative }
        }
    };
    echo(&config)?;
    let report = lab::redundancy_report(&config.predictor, &config.source, &config.t, &config.lab, config.cumulative)?;
    let text = if args.table { report.to_table() } else { report.to_csv() };
    match &args.out {
        Some(path) => write_out(path, text.as_bytes()),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn bound(args: BoundArgs) -> Result<()> {
    let source = parse_source(&args.source)?;
    let predictor = args.model.resolve(source.alphabet_size())?;
    echo(
        &json!({ "command": "bound", "predictor": predictor, "source": source, "t": args.t, "tail_eps": args.tail_eps }),
    )?;
    let report = match &predictor {
        PredictorSpec::Flat { alphabet_size, estimator } => {
            PredictorTree::flat(*alphabet_size, *estimator)?.redundancy_bound(&source, args.t)?
        }
        PredictorSpec::Tree { tree, estimator } => {
            PredictorTree::from_spec(tree, *estimator)?.redundancy_bound(&source, args.t)?
        }
        PredictorSpec::Code { code, estimator } => {
            CodeTreePredictor::new(code.clone(), *estimator)?.redundancy_bound(&source, args.t, args.tail_eps)?
        }
        PredictorSpec::Escape { .. } => bail!("the tree bound does not apply to the escape predictor"),
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("bound_bits {:.6}", report.total_bits);
    if report.remainder_bits > 0.0 {
        println!("remainder_bits {:.3e}", report.remainder_bits);
    }
    println!("{:<16} {:>6} {:>12} {:>12}", "vertex", "sons", "mass", "bits");
    for term in &report.terms {
        let path: Vec<String> = term.path.iter().map(|p| p.to_string()).collect();
        let name = if path.is_empty() { "root".to_string() } else { path.join(".") };
        println!("{:<16} {:>6} {:>12.6} {:>12.6}", name, term.sigma, term.mass, term.bits);
    }
    Ok(())
}

fn kraft(args: KraftArgs) -> Result<()> {
    let code = parse_code(&args.code)?;
    let source = args.source.as_deref().map(parse_source).transpose()?;
    echo(
        &json!({ "command": "kraft", "code": code, "letters": args.letters, "source": source, "tail_eps": args.tail_eps }),
    )?;
    let report = code.kraft_check(args.letters)?;
    println!("letters {}", report.letters);
    println!("kraft_sum {}", report.sum);
    println!("prefix_free {}", report.violation.is_none());
    if let Some(v) = &report.violation {
        println!("violation {}={} {}={}", v.first_letter, v.first, v.second_letter, v.second);
    }
    if let Some(src) = source {
        let m = code.expected_codeword_length(&src, args.tail_eps)?;
        if m.divergent {
            println!("mean_length divergent (partial sum {:.6} after {} letters)", m.mean, m.letters);
        } else {
            println!("mean_length {:.12}", m.mean);
            println!("remainder {:.3e}", m.remainder);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Simulate(a) => simulate(a),
        Command::Bound(a) => bound(a),
        Command::Kraft(a) => kraft(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
