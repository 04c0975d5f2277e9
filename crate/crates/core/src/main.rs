use std::collections::{BTreeMap, HashMap};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use repairbench::analysis::{agreement_table, annotate_loop, render_agreement, AnnotationItem, AnnotationRecord};
use repairbench::backends::Registry;
use repairbench::corpus::{classify_fix, DatasetKind, ExternalCounts, FixCategory, RepairSample, Split, SplitSpec};
use repairbench::harness::{
    self, annotation_sample, ingest_pairs, ingest_records, load_store, resplit, IngestOptions, RunConfig, RunContext,
    SplitPool, TokenCounter,
};
use repairbench::retrieval::TfidfIndex;
use repairbench::store::{read_jsonl, read_jsonl_or_empty, write_jsonl, Appender};

#[derive(Parser)]
#[command(name = "repairbench", version, about = "Review-guided program repair benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw dataset into a sample store.
    Ingest(IngestArgs),
    /// Assign train/validation/test labels.
    Split(SplitArgs),
    /// Recompute fix categories from the token diff.
    Classify {
        #[arg(long)]
        store: PathBuf,
    },
    /// Build the review index over Train samples.
    Index {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write prompts for the eval set.
    Prompt(RunArgs),
    /// Generate predictions (resumable).
    Predict(RunArgs),
    /// Clean raw predictions.
    Clean(RunArgs),
    /// Score cleaned predictions.
    Eval(RunArgs),
    /// Print the summary tables of a run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Draw the human-evaluation sample for one backend.
    Sample {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        backend: String,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rate sampled candidates interactively on stdin.
    Annotate {
        #[arg(long)]
        rater: String,
        #[arg(long)]
        backend: String,
        /// Items written by `sample`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "annotations.jsonl")]
        output: PathBuf,
        /// Continue an earlier session instead of refusing to overwrite it.
        #[arg(long)]
        resume: bool,
    },
    /// Inter-rater agreement per backend.
    Kappa {
        #[arg(long)]
        input: PathBuf,
    },
    /// All stages end to end, then the report.
    Run(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// tufano or r4r
    #[arg(long)]
    kind: DatasetKind,
    /// Structured JSON-lines input.
    #[arg(long, conflicts_with_all = ["source", "target"])]
    records: Option<PathBuf>,
    /// Source lines with inline review (paired with --target).
    #[arg(long, requires = "target")]
    source: Option<PathBuf>,
    #[arg(long, requires = "source")]
    target: Option<PathBuf>,
    #[arg(long, default_value = "unassigned")]
    split: Split,
    /// Input length cap; 0 disables it.
    #[arg(long, default_value_t = 512)]
    max_tokens: usize,
    /// `{"id", "tokens"}` lines from an external tokenizer.
    #[arg(long)]
    token_counts: Option<PathBuf>,
    #[arg(long, default_value = "")]
    id_prefix: String,
    #[arg(long)]
    out: PathBuf,
    /// Add to an existing store instead of replacing it.
    #[arg(long)]
    append: bool,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    store: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.9,0.05,0.05")]
    fractions: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `train` reshuffles only Train/Unassigned samples; `all` everything.
    #[arg(long, default_value = "train")]
    pool: SplitPool,
    /// Defaults to rewriting the store in place.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run_dir` from the config.
    #[arg(long)]
    run_dir: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunContext> {
        let config = RunConfig::load(&self.config)?;
        let run_dir = self
            .run_dir
            .clone()
            .or_else(|| config.run_dir.clone())
            .context("no run directory: pass --run-dir or set run_dir in the config")?;
        Ok(RunContext::load(config, &run_dir)?)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<u8> {
    let counter = match &args.token_counts {
        Some(p) => TokenCounter::External(ExternalCounts::from_jsonl(&read(p)?).context("token counts")?),
        None => TokenCounter::Lexical,
    };
    let opts = IngestOptions {
        kind: args.kind,
        split: args.split,
        max_tokens: (args.max_tokens > 0).then_some(args.max_tokens),
        counter,
        id_prefix: args.id_prefix,
    };
    let (samples, report) = match (&args.records, &args.source, &args.target) {
        (Some(r), _, _) => ingest_records(&read(r)?, &opts),
        (None, Some(s), Some(t)) => ingest_pairs(&read(s)?, &read(t)?, &opts)?,
        _ => bail!("pass --records, or --source with --target"),
    };
    let mut all: Vec<RepairSample> = if args.append { read_jsonl_or_empty(&args.out)? } else { Vec::new() };
    let mut seen: std::collections::HashSet<String> = all.iter().map(|s| s.id.clone()).collect();
    for s in samples {
        if !seen.insert(s.id.clone()) {
            bail!("duplicate sample id {}", s.id);
        }
        all.push(s);
    }
    write_jsonl(&args.out, &all)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.tokenizer_dependent {
        eprintln!(
            "note: {} samples removed by the length cap as measured by {}; counts depend on the tokenizer",
            report.removed(),
            report.counter
        );
    }
    Ok(if report.rejected.is_empty() { 0 } else { 2 })
}

fn split(args: SplitArgs) -> Result<u8> {
    let spec = SplitSpec::parse(&args.fractions, args.seed)?;
    let samples: Vec<RepairSample> = read_jsonl(&args.store)?;
    let samples = resplit(samples, &spec, args.pool);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry(s.split.to_string()).or_default() += 1;
    }
    write_jsonl(args.out.as_ref().unwrap_or(&args.store), &samples)?;
    println!("{}", serde_json::to_string_pretty(&counts)?);
    Ok(0)
}

fn classify(store: &Path) -> Result<u8> {
    let mut samples: Vec<RepairSample> = read_jsonl(store)?;
    let mut counts: BTreeMap<FixCategory, usize> = BTreeMap::new();
    let mut degenerate = 0;
    for s in &mut samples {
        let c = classify_fix(s);
        s.category = c.category;
        degenerate += usize::from(c.degenerate);
        *counts.entry(c.category).or_default() += 1;
    }
    write_jsonl(store, &samples)?;
    for (cat, n) in &counts {
        println!("{cat}\t{n}");
    }
    println!("degenerate\t{degenerate}");
    Ok(0)
}

fn index(store: &Path, out: &Path) -> Result<u8> {
    let (samples, _) = load_store(store)?;
    let train = samples.iter().filter(|s| s.split == Split::Train);
    let index = TfidfIndex::build(train.map(|s| (s.id.as_str(), s.review.as_str())))?;
    let file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    index.write_to(std::io::BufWriter::new(file))?;
    println!("indexed {} Train reviews", index.len());
    Ok(0)
}

fn stage(args: &RunArgs, which: &str) -> Result<u8> {
    let ctx = args.load()?;
    std::fs::create_dir_all(&ctx.run_dir)?;
    match which {
        "prompt" => {
            let prompts = ctx.prompts()?;
            for w in prompts.iter().filter_map(|p| p.warning.as_ref()) {
                eprintln!("warning: {w}");
            }
            println!("{} prompts", prompts.len());
            Ok(0)
        }
        "predict" => {
            let backends = ctx.build_backends(&Registry::default())?;
            let prompts = ctx.prompts()?;
            let mut code = 0;
            for b in &backends {
                let p = ctx.predict(b.as_ref(), &prompts, &std::thread::sleep)?;
                println!("{}: {} generated, {} skipped, {} failed", p.backend, p.generated, p.skipped, p.failed);
                if p.failed > 0 {
                    code = 2;
                }
            }
            Ok(code)
        }
        "clean" => {
            for b in &ctx.config.backends {
                println!("{}: {} predictions cleaned", b.name, ctx.clean(&b.name)?);
            }
            Ok(0)
        }
        _ => {
            let records = ctx.score()?;
            print!("{}", harness::render_report(&records));
            let failed = records.iter().any(|r| r.category == "All" && r.card.n_failed > 0);
            Ok(if failed { 2 } else { 0 })
        }
    }
}

fn run(args: &RunArgs) -> Result<u8> {
    let config = RunConfig::load(&args.config)?;
    let run_dir = args
        .run_dir
        .clone()
        .or_else(|| config.run_dir.clone())
        .context("no run directory: pass --run-dir or set run_dir in the config")?;
    let outcome = harness::run(config, &run_dir, &Registry::default())?;
    for w in &outcome.manifest.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", outcome.report);
    Ok(outcome.exit_code as u8)
}

fn report(run_dir: &Path) -> Result<u8> {
    let text = harness::report(run_dir)?;
    let path = run_dir.join("report.txt");
    std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    Ok(0)
}

fn annotate(rater: &str, backend: &str, input: &Path, output: &Path, resume: bool) -> Result<u8> {
    let items: Vec<AnnotationItem> = read_jsonl(input)?;
    let previous: Vec<AnnotationRecord> = read_jsonl_or_empty(output)?;
    let done: HashMap<String, u8> = previous
        .iter()
        .filter(|r| r.rater_id == rater && r.backend_name == backend)
        .map(|r| (r.sample_id.clone(), r.score))
        .collect();
    if !done.is_empty() && !resume {
        bail!(
            "{} already holds {} ratings by {rater} for {backend}; pass --resume to continue",
            output.display(),
            done.len()
        );
    }
    let mut sink = Appender::open(output)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let rated = annotate_loop(&items, rater, backend, &done, BufReader::new(stdin.lock()), stdout.lock(), |rec| {
        sink.append(&rec).map_err(std::io::Error::other)
    })?;
    let total = done.len() + rated;
    writeln!(std::io::stdout(), "\n{rated} rated this session, {total}/{} overall", items.len())?;
    Ok(if total < items.len() { 2 } else { 0 })
}

fn kappa(input: &Path) -> Result<u8> {
    let records: Vec<AnnotationRecord> = read_jsonl(input)?;
    let rows = agreement_table(&records);
    print!("{}", render_agreement(&rows));
    Ok(if rows.iter().any(|r| r.incomplete) { 2 } else { 0 })
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Split(a) => split(a),
        Command::Classify { store } => classify(&store),
        Command::Index { store, out } => index(&store, &out),
        Command::Prompt(a) => stage(&a, "prompt"),
        Command::Predict(a) => stage(&a, "predict"),
        Command::Clean(a) => stage(&a, "clean"),
        Command::Eval(a) => stage(&a, "eval"),
        Command::Report { run_dir } => report(&run_dir),
        Command::Sample { run_dir, backend, confidence, margin, seed, out } => {
            let items = annotation_sample(&run_dir, &backend, confidence, margin, seed)?;
            write_jsonl(&out, &items)?;
            println!("{} items written to {}", items.len(), out.display());
            Ok(0)
        }
        Command::Annotate { rater, backend, input, output, resume } => {
            annotate(&rater, &backend, &input, &output, resume)
        }
        Command::Kappa { input } => kappa(&input),
        Command::Run(a) => run(&a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
