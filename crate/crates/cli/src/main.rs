use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rtfx_core::benchkit::{
    build_tasks, class_rows, delta_curves, descriptor_by_name, evaluate, extract_features, read_results_csv,
    result_rows, summary_csv, summary_table, synthetic_corpus, write_csv, BenchConfig, FeatureCache, Task,
};
use rtfx_core::chromanorm::Normalizer;
use rtfx_core::codebook::{train_models, CodebookModels, CODEBOOK_DESCRIPTORS};
use rtfx_core::lightsim::{condition_catalog, load_dataset, write_dataset};

#[derive(Parser)]
#[command(name = "rtfx", version, about = "Color texture descriptors under changing light")]
struct Cli {
    /// JSON file with pipeline parameters; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic corpus as `<out>/<class>/<condition>.png`.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn the codebook models used by bovw, vlad and fv.
    TrainCodebook {
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract one descriptor from every patch of a dataset into a cache.
    Extract {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        descriptor: String,
        #[arg(long, default_value = "none")]
        normalize: String,
        #[arg(long)]
        cache: PathBuf,
        /// Directory of trained codebook models.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Run 1-NN classification on one or more caches.
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        cache: Vec<PathBuf>,
        /// A task name or `all`.
        #[arg(long, default_value = "all")]
        task: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-class accuracies here.
        #[arg(long)]
        per_class: Option<PathBuf>,
    },
    /// Summarize a results CSV as "avg (min)" per task.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Mean accuracy against the lighting-parameter difference.
    Curves {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        task: String,
    },
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

fn load_config(path: Option<&Path>) -> Result<BenchConfig> {
    match path {
        Some(p) => BenchConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(BenchConfig::default()),
    }
}

fn synth(config: &BenchConfig, out: &Path, classes: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut corpus = config.corpus.clone();
    corpus.classes = classes.unwrap_or(corpus.classes);
    corpus.seed = seed.unwrap_or(corpus.seed);
    if corpus.classes == 0 || corpus.classes > u16::MAX as usize {
        bail!("class count must be between 1 and {}", u16::MAX);
    }
    let source = synthetic_corpus(&corpus);
    write_dataset(&source, out, source.specs())?;
    eprintln!("wrote {} classes x {} conditions to {}", corpus.classes, condition_catalog().len(), out.display());
    Ok(())
}

fn extract(
    config: &BenchConfig,
    dataset: &Path,
    descriptor: &str,
    normalize: &str,
    cache: &Path,
    models: Option<&Path>,
) -> Result<()> {
    let normalizer: Normalizer = normalize.parse()?;
    let data = load_dataset(dataset)?;
    if !data.is_complete() {
        bail!("dataset {} is missing {}", dataset.display(), data.missing().join(", "));
    }
    let models = match models {
        Some(dir) => Some(CodebookModels::load(dir).with_context(|| format!("loading models from {}", dir.display()))?),
        None if CODEBOOK_DESCRIPTORS.contains(&descriptor) => bail!("`{descriptor}` needs --models"),
        None => None,
    };
    let d = descriptor_by_name(descriptor, &config.descriptors, models.as_ref(), &config.codebook.sift)?;
    let mut caches = extract_features(&data, &[d], normalizer, &config.normalize, &mut |class, cond| {
        if cond == "I100" {
            eprintln!("class {class}");
        }
    })?;
    let out = caches.pop().expect("one descriptor");
    out.save(cache)?;
    eprintln!("{} entries of dim {} written to {}", out.entries.len(), out.dim, cache.display());
    Ok(())
}

fn eval(caches: &[PathBuf], task: &str, out: &Path, per_class: Option<&Path>) -> Result<()> {
    let suites = build_tasks(&condition_catalog())?;
    let selected: Vec<_> = if task == "all" {
        suites
    } else {
        let t: Task = task.parse()?;
        suites.into_iter().filter(|s| s.task == t).collect()
    };
    let mut results = Vec::new();
    for path in caches {
        let cache = FeatureCache::load(path).with_context(|| format!("reading cache {}", path.display()))?;
        for suite in &selected {
            results.push(evaluate(&cache, suite)?);
        }
    }
    write_csv(&result_rows(&results), fs::File::create(out)?)?;
    if let Some(p) = per_class {
        write_csv(&class_rows(&results), fs::File::create(p)?)?;
    }
    Ok(())
}

fn report(input: &Path, format: Format) -> Result<()> {
    let rows = read_results_csv(fs::File::open(input)?)?;
    let stdout = io::stdout();
    match format {
        Format::Csv => summary_csv(&rows, stdout.lock())?,
        Format::Table => stdout.lock().write_all(summary_table(&rows)?.as_bytes())?,
    }
    Ok(())
}

fn curves(input: &Path, task: &str) -> Result<()> {
    let rows = read_results_csv(fs::File::open(input)?)?;
    let mut out = io::stdout().lock();
    writeln!(out, "descriptor,normalizer,delta,accuracy,subsets")?;
    for c in delta_curves(&rows, task.parse()?)? {
        for (delta, acc, n) in &c.points {
            writeln!(out, "{},{},{delta},{acc},{n}", c.descriptor, c.normalizer)?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Synth { out, classes, seed } => synth(&config, &out, classes, seed),
        Command::TrainCodebook { out } => {
            let models = train_models(&config.codebook)?;
            models.save(&out)?;
            eprintln!("models written to {}", out.display());
            Ok(())
        }
        Command::Extract {
            dataset,
            descriptor,
            normalize,
            cache,
            models,
        } => extract(&config, &dataset, &descriptor, &normalize, &cache, models.as_deref()),
        Command::Eval {
            cache,
            task,
            out,
            per_class,
        } => eval(&cache, &task, &out, per_class.as_deref()),
        Command::Report { input, format } => report(&input, format),
        Command::Curves { input, task } => curves(&input, &task),
        Command::Config => {
            println!("{}", config.to_json()?);
            Ok(())
        }
    }
}
