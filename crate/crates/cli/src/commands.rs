use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use simalign::baselines::{tune_threshold, AlignStrategy};
use simalign::corpus::{load_annotations, load_corpus, save_corpus, write_annotations, AnnotationRecord, DocumentPair};
use simalign::crf::{load_model, save_model, train, CrfModel};
use simalign::eval::{evaluate, evaluate_corpus, EvalReport, GoldStandard, Task};
use simalign::pipeline::{matrix_file_name, prediction_records, Pipeline, PipelineConfig};
use simalign::similarity::save_matrix;
use simalign::synthetic::{generate, SyntheticConfig};
use simalign::Error;

use crate::args::{Cli, Command, StrategyArg, TaskArg};
use crate::service;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::Align {
            corpus,
            model,
            out,
            gold,
            report,
        } => align(&config, &corpus, model, out.as_deref(), gold.as_deref(), report.as_deref()),
        Command::Train {
            corpus,
            gold,
            model_out,
            log,
        } => train_cmd(&config, &corpus, &gold, &model_out, log.as_deref()),
        Command::Eval {
            corpus,
            gold,
            predictions,
            out,
        } => eval_cmd(&corpus, &gold, &predictions, out.as_deref()),
        Command::Tune {
            corpus,
            gold,
            task,
            strategy,
            out,
        } => tune(&config, &corpus, &gold, task, strategy, out.as_deref()),
        Command::SimMatrix { corpus, out_dir } => sim_matrix(&config, &corpus, &out_dir),
        Command::Synth {
            pairs,
            out_corpus,
            out_gold,
        } => synth(&config, pairs, &out_corpus, &out_gold),
        Command::Serve {
            corpus,
            predictions,
            state,
            bind,
            static_dir,
        } => {
            let pairs = load_corpus(&corpus)?;
            let predicted = match predictions {
                Some(path) => load_annotations(path)?,
                None => Vec::new(),
            };
            let pipeline = Pipeline::new(&config, &pairs)?;
            let svc = service::AnnotationService::new(pairs, predicted, &pipeline, &state)?;
            service::serve(svc, bind, static_dir)
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut config = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
        config.train.seed = seed;
    }
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?))
}

fn io_error(path: &Path, source: io::Error) -> CliError {
    CliError::Data(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_error(path, e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

/// Gold standards in corpus order. Records naming a pair outside the corpus
/// are rejected.
fn gold_for(corpus: &[DocumentPair], records: &[AnnotationRecord]) -> Result<Vec<GoldStandard>> {
    let mut by_pair: HashMap<&str, Vec<&AnnotationRecord>> = HashMap::new();
    for rec in records {
        by_pair.entry(rec.pair_id.as_str()).or_default().push(rec);
    }
    if let Some(unknown) = by_pair
        .keys()
        .find(|id| !corpus.iter().any(|p| p.pair_id == **id))
    {
        return Err(Error::UnknownPair(unknown.to_string()).into());
    }
    corpus
        .iter()
        .map(|p| {
            let recs = by_pair.get(p.pair_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            GoldStandard::from_records(p, recs.iter().copied()).map_err(CliError::from)
        })
        .collect()
}

fn reports(preds: &[BTreeSet<(usize, usize)>], gold: &[GoldStandard]) -> Result<Vec<EvalReport>> {
    Task::BOTH
        .iter()
        .map(|&task| {
            let per_pair: Vec<EvalReport> = preds.iter().zip(gold).map(|(p, g)| evaluate(p, g, task)).collect();
            if per_pair.is_empty() {
                return Ok(EvalReport::from_counts(task, 0, 0, 0, 0));
            }
            Ok(evaluate_corpus(&per_pair)?)
        })
        .collect()
}

fn resolve_model(config: &PipelineConfig, flag: Option<PathBuf>) -> Result<CrfModel> {
    let path = flag
        .or_else(|| config.model.clone())
        .ok_or_else(|| CliError::Usage("no model given: pass --model or set \"model\" in the config".into()))?;
    load_model(&path).map_err(CliError::Model)
}

fn align(
    config: &PipelineConfig,
    corpus_path: &Path,
    model: Option<PathBuf>,
    out: Option<&Path>,
    gold: Option<&Path>,
    report: Option<&Path>,
) -> Result<()> {
    let model = resolve_model(config, model)?;
    let corpus = load_corpus(corpus_path)?;
    let pipeline = Pipeline::new(config, &corpus)?;
    let predictions = pipeline.align_corpus(&model, &corpus)?;
    let records = prediction_records(&predictions);
    match out {
        Some(path) => {
            let w = create(path)?;
            write_annotations(w, &records).map_err(|e| io_error(path, e))?;
        }
        None => write_annotations(io::stdout().lock(), &records).map_err(|e| io_error(Path::new("<stdout>"), e))?,
    }
    if let Some(gold_path) = gold {
        let gold = gold_for(&corpus, &load_annotations(gold_path)?)?;
        let preds: Vec<BTreeSet<(usize, usize)>> =
            predictions.iter().map(|p| p.pairs.iter().copied().collect()).collect();
        let reports = reports(&preds, &gold)?;
        let table = EvalReport::table(&reports);
        if out.is_some() {
            print!("{table}");
        } else {
            eprint!("{table}");
        }
        if let Some(path) = report {
            write_json(path, &reports)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EpochLog {
    epoch: usize,
    nll: f64,
}

fn train_cmd(config: &PipelineConfig, corpus_path: &Path, gold_path: &Path, model_out: &Path, log: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(corpus_path)?;
    let records = load_annotations(gold_path)?;
    gold_for(&corpus, &records)?;
    let pipeline = Pipeline::new(config, &corpus)?;
    let data = pipeline.training_set(&corpus, &records)?;
    let outcome = train(&data, &config.train)?;
    save_model(&outcome.model, model_out)?;
    let lines: Vec<String> = outcome
        .epoch_nll
        .iter()
        .enumerate()
        .map(|(i, &nll)| serde_json::to_string(&EpochLog { epoch: i + 1, nll }).expect("log line serializes"))
        .collect();
    match log {
        Some(path) => {
            let mut w = create(path)?;
            for line in &lines {
                writeln!(w, "{line}").map_err(|e| io_error(path, e))?;
            }
            w.flush().map_err(|e| io_error(path, e))?;
        }
        None => {
            for line in &lines {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn eval_cmd(corpus_path: &Path, gold_path: &Path, predictions: &Path, out: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(corpus_path)?;
    let gold = gold_for(&corpus, &load_annotations(gold_path)?)?;
    let predicted = load_annotations(predictions)?;
    gold_for(&corpus, &predicted)?;
    let index: HashMap<&str, usize> = corpus.iter().enumerate().map(|(i, p)| (p.pair_id.as_str(), i)).collect();
    let reports: Vec<EvalReport> = Task::BOTH
        .iter()
        .map(|&task| {
            let mut preds = vec![BTreeSet::new(); corpus.len()];
            for rec in predicted.iter().filter(|r| task.is_positive(r.label)) {
                preds[index[rec.pair_id.as_str()]].insert((rec.simple_sent, rec.complex_sent));
            }
            let per_pair: Vec<EvalReport> = preds.iter().zip(&gold).map(|(p, g)| evaluate(p, g, task)).collect();
            evaluate_corpus(&per_pair).unwrap_or_else(|_| EvalReport::from_counts(task, 0, 0, 0, 0))
        })
        .collect();
    print!("{}", EvalReport::table(&reports));
    if let Some(path) = out {
        write_json(path, &reports)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TuneReport {
    threshold: f64,
    strategy: AlignStrategy,
    report: EvalReport,
}

fn tune(
    config: &PipelineConfig,
    corpus_path: &Path,
    gold_path: &Path,
    task: TaskArg,
    strategy: StrategyArg,
    out: Option<&Path>,
) -> Result<()> {
    let corpus = load_corpus(corpus_path)?;
    let gold = gold_for(&corpus, &load_annotations(gold_path)?)?;
    let pipeline = Pipeline::new(config, &corpus)?;
    let sims = corpus
        .par_iter()
        .map(|p| pipeline.similarity(p))
        .collect::<simalign::Result<Vec<_>>>()?;
    let task = match task {
        TaskArg::Task1 => Task::Task1,
        TaskArg::Task2 => Task::Task2,
    };
    let strategy = match strategy {
        StrategyArg::Greedy => AlignStrategy::Greedy,
        StrategyArg::Classify => AlignStrategy::Classify,
    };
    let dev: Vec<_> = sims.into_iter().zip(gold).collect();
    let (threshold, report) = tune_threshold(&dev, task, strategy)?;
    println!("threshold\t{threshold}");
    println!("f1\t{}", report.f1);
    if let Some(path) = out {
        write_json(
            path,
            &TuneReport {
                threshold,
                strategy,
                report,
            },
        )?;
    }
    Ok(())
}

fn sim_matrix(config: &PipelineConfig, corpus_path: &Path, out_dir: &Path) -> Result<()> {
    let corpus = load_corpus(corpus_path)?;
    let pipeline = Pipeline::new(config, &corpus)?;
    let matrices = corpus
        .par_iter()
        .map(|p| pipeline.similarity(p))
        .collect::<simalign::Result<Vec<_>>>()?;
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut seen = HashMap::new();
    for m in &matrices {
        let name = matrix_file_name(&m.pair_id);
        if let Some(other) = seen.insert(name.clone(), m.pair_id.clone()) {
            return Err(CliError::Data(Error::InvalidArgument(format!(
                "pairs {other:?} and {:?} map to the same file {name}",
                m.pair_id
            ))));
        }
        save_matrix(out_dir.join(name), m)?;
    }
    Ok(())
}

fn synth(config: &PipelineConfig, pairs: usize, out_corpus: &Path, out_gold: &Path) -> Result<()> {
    let corpus = generate(&SyntheticConfig {
        pairs,
        seed: config.seed,
        ..SyntheticConfig::default()
    })?;
    create(out_corpus)?;
    save_corpus(out_corpus, &corpus.pairs)?;
    let w = create(out_gold)?;
    write_annotations(w, &corpus.gold).map_err(|e| io_error(out_gold, e))?;
    Ok(())
}
