use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context as _;
use cwb_core::classify::{
    load_embeddings, predict_all, random_baseline, train_cooccurrence_embeddings, train_linear, train_recurrent,
    BackendClient, BackendHandle, Endpoint, FinetuneConfig, Model, Prediction, Weighting,
};
use cwb_core::corpus::{
    build_balanced_pair_dataset, extract_sentences, parse_noun_list, partition_lexicon, read_jsonl,
    synthesize_detection_dataset, write_jsonl, CodewordTable, LabeledSample, PairConfig, RawDocument, SynthesisConfig,
    TrigramLanguageId,
};
use cwb_core::metrics::{render_table, report_for, MetricReport};
use cwb_core::tagger::LexiconTagger;
use cwb_service::{check_id, ServeConfig, Store, StoredRun};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{
    user, Context, EnronArgs, EvalArgs, ModelKind, RedditArgs, ReportArgs, ReportFormat, ServeArgs, TrainArgs,
};

pub const DEFAULT_DATA_DIR: &str = "cwb-data";
pub const DEFAULT_EMBEDDING_DIM: usize = 50;
const EMBEDDING_WINDOW: usize = 2;

/// A model file as written by `cwb train`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SavedModel {
    Local { name: String, model: Model },
    Random { seed: u64 },
    Backend { endpoint: Endpoint, model_id: String, config: FinetuneConfig },
}

impl SavedModel {
    pub fn name(&self) -> &str {
        match self {
            SavedModel::Local { name, .. } => name,
            SavedModel::Random { .. } => "random",
            SavedModel::Backend { .. } => "backend",
        }
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| user(format!("cannot open {}: {e}", path.display())))
}

fn read_docs(path: &Path) -> anyhow::Result<Vec<RawDocument>> {
    read_jsonl(open(path)?).map_err(|e| user(format!("{}: {e}", path.display())))
}

pub fn read_samples(path: &Path) -> anyhow::Result<Vec<LabeledSample>> {
    read_jsonl(open(path)?).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("create {}", path.display()))?);
    write_jsonl(&mut out, items)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("write {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).map_err(|e| user(format!("cannot create {}: {e}", dir.display())))
}

pub fn synthesis_config(ctx: &Context, a: &EnronArgs) -> SynthesisConfig {
    let base = if a.desk { SynthesisConfig::desk() } else { SynthesisConfig::default() };
    let f = &ctx.file.synth;
    SynthesisConfig {
        min_len: a.min_len.or(f.min_len).unwrap_or(base.min_len),
        max_len: a.max_len.or(f.max_len).unwrap_or(base.max_len),
        train_size: a.train_size.or(f.train_size).unwrap_or(base.train_size),
        val_size: a.val_size.or(f.val_size).unwrap_or(base.val_size),
        test_size: a.test_size.or(f.test_size).unwrap_or(base.test_size),
        test_positives: a.test_positives.or(f.test_positives).unwrap_or(base.test_positives),
        balance: f.balance.unwrap_or(base.balance),
        rng_seed: ctx.seed,
    }
}

pub fn synth_enron(ctx: &Context, a: EnronArgs) -> anyhow::Result<()> {
    let cfg = synthesis_config(ctx, &a);
    cfg.validate().map_err(user)?;
    let docs = read_docs(&a.corpus)?;
    let noun_text =
        fs::read_to_string(&a.nouns).map_err(|e| user(format!("cannot read {}: {e}", a.nouns.display())))?;
    let ratios = ctx.file.synth.lexicon_ratios.unwrap_or([0.8, 0.1, 0.1]);
    let lexicon =
        partition_lexicon(&parse_noun_list(&noun_text), (ratios[0], ratios[1], ratios[2]), ctx.seed).map_err(user)?;
    let dataset =
        synthesize_detection_dataset(&docs, &lexicon, &cfg, &LexiconTagger::bundled(), ctx.execution).map_err(user)?;

    create_dir(&a.out)?;
    write_lines(&a.out.join("train.jsonl"), &dataset.train)?;
    write_lines(&a.out.join("val.jsonl"), &dataset.val)?;
    write_lines(&a.out.join("test.jsonl"), &dataset.test)?;
    write_json(&a.out.join("lexicon.json"), &lexicon)?;
    let positives = |s: &[LabeledSample]| s.iter().filter(|x| x.label == 1).count();
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "kind": "enron",
            "config": cfg,
            "lexicon_ratios": ratios,
            "counts": { "train": dataset.train.len(), "val": dataset.val.len(), "test": dataset.test.len() },
            "positives": {
                "train": positives(&dataset.train),
                "val": positives(&dataset.val),
                "test": positives(&dataset.test),
            },
        }),
    )?;
    println!(
        "wrote {}/{}/{} samples ({} test positives) to {}",
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len(),
        positives(&dataset.test),
        a.out.display()
    );
    Ok(())
}

pub fn synth_reddit(ctx: &Context, a: RedditArgs) -> anyhow::Result<()> {
    let table_text =
        fs::read_to_string(&a.codewords).map_err(|e| user(format!("cannot read {}: {e}", a.codewords.display())))?;
    let table = CodewordTable::parse_tsv(&table_text).map_err(user)?;
    let comments = read_docs(&a.comments)?;
    let (negatives, positives) = match &a.drug_comments {
        Some(p) => (comments, read_docs(p)?),
        None => comments.into_iter().partition(|d| !extract_sentences(d).iter().any(|s| table.mentions(s))),
    };
    let f = &ctx.file.reddit;
    let mut cfg = PairConfig::per_class(a.per_class.or(f.per_class).unwrap_or(PairConfig::default().negatives));
    if let Some(l) = &f.language {
        cfg.language = l.clone();
    }
    if let Some(c) = f.min_confidence {
        cfg.min_confidence = c;
    }
    let samples =
        build_balanced_pair_dataset(negatives, positives, &table, &cfg, &TrigramLanguageId::bundled()).map_err(user)?;
    create_dir(&a.out)?;
    write_lines(&a.out.join("test.jsonl"), &samples)?;
    write_json(
        &a.out.join("manifest.json"),
        &json!({ "kind": "reddit", "config": cfg, "counts": { "test": samples.len() } }),
    )?;
    println!("wrote {} samples to {}", samples.len(), a.out.join("test.jsonl").display());
    Ok(())
}

fn backend_handle(ctx: &Context, endpoint: Option<String>, config: FinetuneConfig) -> anyhow::Result<BackendHandle> {
    let endpoint = endpoint
        .or_else(|| ctx.file.backend.endpoint.clone())
        .ok_or_else(|| user("no backend endpoint: pass --backend/--endpoint, set CWB_BACKEND or [backend].endpoint"))?;
    Ok(BackendHandle { endpoint: Endpoint::parse(&endpoint).map_err(user)?, config })
}

pub fn train(ctx: &Context, a: TrainArgs) -> anyhow::Result<()> {
    let train_path = a.data.join("train.jsonl");
    let val_path = a.data.join("val.jsonl");
    let train = read_samples(&train_path)?;
    let val = read_samples(&val_path)?;
    let t = &ctx.file.train;
    let saved = match a.model {
        ModelKind::Bow | ModelKind::Tfidf => {
            let weighting = if a.model == ModelKind::Bow { Weighting::Counts } else { Weighting::TfIdf };
            let mut cfg = t.logistic.clone().unwrap_or_default();
            cfg.seed = ctx.seed;
            if let Some(e) = a.epochs {
                cfg.max_epochs = e;
            }
            let ngram_max = a.ngram_max.or(t.ngram_max).unwrap_or(3);
            let min_df = a.min_doc_freq.or(t.min_doc_freq).unwrap_or(3);
            let model =
                train_linear(&train, &val, weighting, (1, ngram_max), min_df, &cfg, ctx.execution).map_err(user)?;
            SavedModel::Local { name: a.model.name().into(), model }
        }
        ModelKind::Rnn => {
            let mut cfg = t.recurrent.clone().unwrap_or_default();
            cfg.seed = ctx.seed;
            if let Some(e) = a.epochs {
                cfg.max_epochs = e;
            }
            if let Some(lr) = a.learning_rate {
                cfg.learning_rate = lr;
            }
            if let Some(h) = a.hidden {
                cfg.hidden = h;
            }
            let embeddings = match a.embeddings.as_ref().or(t.embeddings.as_ref()) {
                Some(p) => load_embeddings(p).map_err(user)?,
                None => {
                    let texts: Vec<String> = train.iter().chain(&val).map(|s| s.text.clone()).collect();
                    let dim = t.embedding_dim.unwrap_or(DEFAULT_EMBEDDING_DIM);
                    train_cooccurrence_embeddings(&texts, dim, EMBEDDING_WINDOW, ctx.seed).map_err(user)?
                }
            };
            let model = train_recurrent(&train, &val, &embeddings, &cfg, ctx.execution).map_err(user)?;
            SavedModel::Local { name: "rnn".into(), model: Model::Recurrent { model } }
        }
        ModelKind::Backend => {
            let mut config = ctx.file.backend.finetune.unwrap_or_default();
            config.seed = ctx.seed;
            if let Some(e) = a.epochs {
                config.epochs = u32::try_from(e).map_err(user)?;
            }
            if let Some(lr) = a.learning_rate {
                config.learning_rate = lr;
            }
            let handle = backend_handle(ctx, a.backend, config)?;
            let client = BackendClient::new(handle.clone()).map_err(user)?;
            let abs = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
            let model_id = client.finetune(&abs(&train_path), &abs(&val_path)).map_err(user)?;
            SavedModel::Backend { endpoint: handle.endpoint, model_id, config }
        }
        ModelKind::Random => SavedModel::Random { seed: ctx.seed },
    };
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(&a.out, serde_json::to_vec(&saved)?).with_context(|| format!("write {}", a.out.display()))?;
    match &saved {
        SavedModel::Local { model, .. } => {
            let r = model.report();
            println!(
                "trained {} for {} epochs (best val loss {:.4}); wrote {}",
                saved.name(),
                r.epochs,
                r.best_val_loss.unwrap_or(f64::NAN),
                a.out.display()
            );
        }
        _ => println!("wrote {} model to {}", saved.name(), a.out.display()),
    }
    Ok(())
}

pub fn load_model(path: &Path) -> anyhow::Result<SavedModel> {
    let mut saved: SavedModel =
        serde_json::from_reader(open(path)?).map_err(|e| user(format!("{}: not a model file: {e}", path.display())))?;
    if let SavedModel::Local { model, .. } = &mut saved {
        model.after_load();
    }
    Ok(saved)
}

pub fn predictions(ctx: &Context, model: &SavedModel, samples: &[LabeledSample]) -> anyhow::Result<Vec<Prediction>> {
    Ok(match model {
        SavedModel::Local { model, .. } => predict_all(model, samples, ctx.execution).map_err(user)?,
        SavedModel::Random { seed } => random_baseline(samples, *seed),
        SavedModel::Backend { endpoint, model_id, config } => {
            let client =
                BackendClient::new(BackendHandle { endpoint: endpoint.clone(), config: *config }).map_err(user)?;
            client.predict(model_id, samples).map_err(user)?
        }
    })
}

fn write_report(path: &Path, report: &MetricReport) -> anyhow::Result<()> {
    if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json")) {
        write_json(path, report)
    } else {
        fs::write(path, format!("{}\n{}\n", MetricReport::tsv_header(), report.tsv_row()))
            .with_context(|| format!("write {}", path.display()))
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' }).collect()
}

fn data_dir(ctx: &Context, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| ctx.file.data_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

fn store_error(e: cwb_service::ApiError) -> anyhow::Error {
    if e.status.is_client_error() {
        user(e.message)
    } else {
        anyhow::anyhow!(e.message)
    }
}

pub fn eval(ctx: &Context, a: EvalArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model)?;
    let samples = read_samples(&a.split)?;
    let preds = predictions(ctx, &model, &samples)?;
    let report = report_for(&preds, &samples).map_err(user)?;
    print!("{}", render_table(&[(model.name().to_string(), report.clone())]));
    if let Some(path) = &a.report {
        write_report(path, &report)?;
    }
    if a.data_dir.is_some() || a.run_id.is_some() || ctx.file.data_dir.is_some() {
        let store = Store::open(data_dir(ctx, a.data_dir)).map_err(|e| user(format!("data dir: {e}")))?;
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let id = match a.run_id {
            Some(id) => id,
            None => {
                let stem = |p: &Path| p.file_stem().map(|s| slug(&s.to_string_lossy())).unwrap_or_default();
                let base = format!("{}-{}-{created_at}", model.name(), stem(&a.split));
                (0..)
                    .map(|i| if i == 0 { base.clone() } else { format!("{base}-{i}") })
                    .find(|id| store.run(id).is_err())
                    .expect("unbounded")
            }
        };
        check_id("run", &id).map_err(store_error)?;
        let run = StoredRun::new(&id, model.name(), a.split.display().to_string(), created_at, &samples, &preds)
            .map_err(user)?;
        store.put_run(&run).map_err(store_error)?;
        println!("stored run {id}");
    }
    Ok(())
}

pub fn report(ctx: &Context, a: ReportArgs) -> anyhow::Result<()> {
    let dir = data_dir(ctx, a.data_dir);
    if !dir.is_dir() {
        return Err(user(format!("data dir {} does not exist", dir.display())));
    }
    let store = Store::open(&dir).map_err(|e| user(format!("data dir: {e}")))?;
    let runs = a.runs.iter().map(|id| store.run(id).map_err(store_error)).collect::<anyhow::Result<Vec<_>>>()?;
    match a.format {
        ReportFormat::Table => {
            let rows: Vec<(String, MetricReport)> = runs.iter().map(|r| (r.model.clone(), r.report.clone())).collect();
            print!("{}", render_table(&rows));
        }
        ReportFormat::Tsv => {
            println!("run\tmodel\t{}", MetricReport::tsv_header());
            for r in &runs {
                println!("{}\t{}\t{}", r.id, r.model, r.report.tsv_row());
            }
        }
        ReportFormat::Json => {
            let out: Vec<_> =
                runs.iter().map(|r| json!({ "run_id": r.id, "model": r.model, "report": r.report })).collect();
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(())
}

pub fn serve(ctx: &Context, a: ServeArgs) -> anyhow::Result<()> {
    let host = a.host.or_else(|| ctx.file.serve.host.clone()).unwrap_or_else(|| "127.0.0.1".into());
    let cfg = ServeConfig {
        host: host.parse::<IpAddr>().map_err(|e| user(format!("invalid host {host:?}: {e}")))?,
        port: a.port.or(ctx.file.serve.port).unwrap_or(cwb_service::DEFAULT_PORT),
        data_dir: data_dir(ctx, a.data_dir),
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let (listener, state) = cwb_service::bind(&cfg).await.map_err(user)?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        cwb_service::serve(listener, state, shutdown).await?;
        Ok(())
    })
}

pub fn backend_ping(ctx: &Context, endpoint: Option<String>) -> anyhow::Result<()> {
    let handle = backend_handle(ctx, endpoint, FinetuneConfig::default())?;
    BackendClient::new(handle).map_err(user)?.ping().map_err(user)?;
    println!("ok");
    Ok(())
}

pub fn backend_stub(tcp: bool) -> anyhow::Result<()> {
    use cwb_core::classify::backend::stub;
    if tcp {
        let addr = stub::spawn_tcp()?;
        println!("tcp://{addr}");
        std::io::stdout().flush()?;
        loop {
            std::thread::park();
        }
    }
    stub::serve_pipes(std::io::stdin().lock(), std::io::stdout().lock())?;
    Ok(())
}
