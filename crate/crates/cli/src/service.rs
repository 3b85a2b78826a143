//! Annotation service: serves documents, candidate pairs and labels to the
//! browser UI and appends human labels to a durable log.
//!
//! Every accepted label is written and fsynced to the state file before the
//! response is sent, so an acknowledged label survives a crash. Writes go
//! through one appender; reads share a lock over the in-memory view.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use simalign::corpus::{
    merge_annotations, parse_annotations, select_candidates, write_annotations, AlignmentLabelKind,
    AnnotationRecord, Document, DocumentPair, LabelSource,
};
use simalign::pipeline::Pipeline;
use simalign::similarity::{MatrixScorer, Scorer, SimilarityMatrix};
use simalign::Error;
use tower_http::services::ServeDir;

use crate::CliError;

type Cell = (usize, usize);

struct PairEntry {
    pair: DocumentPair,
    sim: SimilarityMatrix,
    predicted: BTreeMap<Cell, AlignmentLabelKind>,
    /// Predicted cells plus each scorer's best match per simple sentence.
    candidates: BTreeSet<Cell>,
}

struct Appender {
    path: PathBuf,
    file: File,
}

impl Appender {
    fn append(&mut self, rec: &AnnotationRecord) -> io::Result<()> {
        let mut line = serde_json::to_vec(rec)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }
}

struct Inner {
    pairs: Vec<PairEntry>,
    index: HashMap<String, usize>,
    predictions: Vec<AnnotationRecord>,
    human: RwLock<Vec<BTreeMap<Cell, AnnotationRecord>>>,
    /// Human records in write order, for export.
    log: RwLock<Vec<AnnotationRecord>>,
    appender: Mutex<Appender>,
}

#[derive(Clone)]
pub struct AnnotationService {
    inner: Arc<Inner>,
}

/// Reads the label log. A trailing line without a newline that fails to
/// parse is an interrupted write that was never acknowledged: it is dropped
/// and cut from the file.
fn recover_log(path: &Path) -> simalign::Result<Vec<AnnotationRecord>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::Io { path: path.into(), source: e }),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let records = parse_annotations(&bytes[..complete])?;
    if complete < bytes.len() {
        let tail = &bytes[complete..];
        match serde_json::from_slice::<AnnotationRecord>(tail) {
            Ok(rec) => {
                let mut all = records;
                all.push(rec);
                // terminate the line so later appends stay separate
                let mut f = OpenOptions::new().append(true).open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
                f.write_all(b"\n").and_then(|_| f.sync_data()).map_err(|e| Error::Io { path: path.into(), source: e })?;
                return Ok(all);
            }
            Err(_) => {
                let f = OpenOptions::new().write(true).open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
                f.set_len(complete as u64)
                    .and_then(|_| f.sync_data())
                    .map_err(|e| Error::Io { path: path.into(), source: e })?;
            }
        }
    }
    Ok(records)
}

fn check_cell(pair: &DocumentPair, s: usize, c: usize) -> Result<(), String> {
    let (m, n) = (pair.simple.sentence_count(), pair.complex.sentence_count());
    if s >= m || c >= n {
        return Err(format!("sentence pair ({s}, {c}) outside {m}x{n} for pair {:?}", pair.pair_id));
    }
    Ok(())
}

fn place(index: &HashMap<String, usize>, pairs: &[PairEntry], rec: &AnnotationRecord) -> simalign::Result<usize> {
    let idx = *index.get(&rec.pair_id).ok_or_else(|| Error::UnknownPair(rec.pair_id.clone()))?;
    check_cell(&pairs[idx].pair, rec.simple_sent, rec.complex_sent).map_err(Error::Index)?;
    Ok(idx)
}

impl AnnotationService {
    pub fn new(
        corpus: Vec<DocumentPair>,
        predictions: Vec<AnnotationRecord>,
        pipeline: &Pipeline,
        state_path: &Path,
    ) -> Result<Self, CliError> {
        let index: HashMap<String, usize> =
            corpus.iter().enumerate().map(|(i, p)| (p.pair_id.clone(), i)).collect();
        let ngram = Scorer::char_ngram();
        let mut pairs = Vec::with_capacity(corpus.len());
        for pair in corpus {
            let sim = pipeline.similarity(&pair)?;
            let top = select_candidates(&pair, &[&MatrixScorer(&sim), &ngram])?;
            pairs.push(PairEntry {
                candidates: top.into_iter().collect(),
                predicted: BTreeMap::new(),
                pair,
                sim,
            });
        }
        for rec in &predictions {
            let idx = place(&index, &pairs, rec)?;
            let cell = (rec.simple_sent, rec.complex_sent);
            pairs[idx].predicted.insert(cell, rec.label);
            pairs[idx].candidates.insert(cell);
        }

        let log = recover_log(state_path)?;
        let mut human = vec![BTreeMap::new(); pairs.len()];
        for rec in &log {
            let idx = place(&index, &pairs, rec)?;
            human[idx].insert((rec.simple_sent, rec.complex_sent), rec.clone());
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(state_path)
            .map_err(|e| CliError::Data(Error::Io { path: state_path.into(), source: e }))?;
        Ok(AnnotationService {
            inner: Arc::new(Inner {
                pairs,
                index,
                predictions,
                human: RwLock::new(human),
                log: RwLock::new(log),
                appender: Mutex::new(Appender {
                    path: state_path.to_path_buf(),
                    file,
                }),
            }),
        })
    }

    pub fn router(&self, static_dir: Option<PathBuf>) -> Router {
        let api = Router::new()
            .route("/api/pairs", get(list_pairs))
            .route("/api/pairs/{id}", get(get_pair))
            .route("/api/pairs/{id}/labels", axum::routing::post(post_label))
            .route("/api/export", get(export))
            .with_state(self.clone());
        match static_dir {
            Some(dir) => api.fallback_service(ServeDir::new(dir)),
            None => api.route("/", get(placeholder)),
        }
    }

    /// Merged annotation file: predictions, then human labels in write
    /// order, last write winning per sentence pair.
    pub fn export(&self) -> Vec<AnnotationRecord> {
        let log = self.inner.log.read().expect("log lock");
        merge_annotations(self.inner.predictions.iter().chain(log.iter()).cloned())
    }
}

/// Binds `addr`, prints the bound address on stdout and serves until the
/// process is stopped.
pub fn serve(service: AnnotationService, addr: SocketAddr, static_dir: Option<PathBuf>) -> Result<(), CliError> {
    let io_err = |e: io::Error| {
        CliError::Data(Error::Io {
            path: PathBuf::from(addr.to_string()),
            source: e,
        })
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(io_err)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(io_err)?;
        let local = listener.local_addr().map_err(io_err)?;
        println!("listening on http://{local}");
        io::stdout().flush().map_err(io_err)?;
        axum::serve(listener, service.router(static_dir)).await.map_err(io_err)
    })
}

#[derive(Serialize)]
struct ApiError {
    error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ApiError { error: msg.into() })).into_response()
}

#[derive(Serialize)]
struct PairSummary<'a> {
    pair_id: &'a str,
    simple_doc_id: &'a str,
    labeled_count: usize,
    total_candidates: usize,
}

/// Candidate cells: the static set plus anything labeled by hand.
fn view_cells(entry: &PairEntry, human: &BTreeMap<Cell, AnnotationRecord>) -> BTreeSet<Cell> {
    entry.candidates.iter().chain(human.keys()).copied().collect()
}

async fn list_pairs(State(svc): State<AnnotationService>) -> Response {
    let human = svc.inner.human.read().expect("label lock");
    let out: Vec<PairSummary> = svc
        .inner
        .pairs
        .iter()
        .zip(human.iter())
        .map(|(e, h)| PairSummary {
            pair_id: &e.pair.pair_id,
            simple_doc_id: &e.pair.simple.doc_id,
            labeled_count: h.len(),
            total_candidates: view_cells(e, h).len(),
        })
        .collect();
    Json(out).into_response()
}

#[derive(Serialize)]
struct SentenceView<'a> {
    sent_index: usize,
    text: &'a str,
}

#[derive(Serialize)]
struct DocumentView<'a> {
    doc_id: &'a str,
    level: Option<i32>,
    paragraphs: Vec<Vec<SentenceView<'a>>>,
}

impl<'a> DocumentView<'a> {
    fn new(doc: &'a Document) -> Self {
        DocumentView {
            doc_id: &doc.doc_id,
            level: doc.level,
            paragraphs: doc
                .paragraphs
                .iter()
                .map(|p| {
                    p.iter()
                        .map(|s| SentenceView {
                            sent_index: s.sent_index,
                            text: &s.text,
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct CandidateView<'a> {
    simple_sent: usize,
    complex_sent: usize,
    similarity: f64,
    predicted: Option<AlignmentLabelKind>,
    human: Option<&'a AnnotationRecord>,
}

#[derive(Serialize)]
struct PairView<'a> {
    pair_id: &'a str,
    simple: DocumentView<'a>,
    complex: DocumentView<'a>,
    candidates: Vec<CandidateView<'a>>,
}

async fn get_pair(State(svc): State<AnnotationService>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(&idx) = svc.inner.index.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown pair {id:?}"));
    };
    let entry = &svc.inner.pairs[idx];
    let human = svc.inner.human.read().expect("label lock");
    let labels = &human[idx];
    let candidates = view_cells(entry, labels)
        .into_iter()
        .map(|(s, c)| CandidateView {
            simple_sent: s,
            complex_sent: c,
            similarity: entry.sim.get(s, c),
            predicted: entry.predicted.get(&(s, c)).copied(),
            human: labels.get(&(s, c)),
        })
        .collect();
    Json(PairView {
        pair_id: &entry.pair.pair_id,
        simple: DocumentView::new(&entry.pair.simple),
        complex: DocumentView::new(&entry.pair.complex),
        candidates,
    })
    .into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRequest {
    simple_sent: usize,
    complex_sent: usize,
    label: AlignmentLabelKind,
}

async fn post_label(
    State(svc): State<AnnotationService>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<LabelRequest>, JsonRejection>,
) -> Response {
    let Some(&idx) = svc.inner.index.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown pair {id:?}"));
    };
    let req = match body {
        Ok(Json(req)) => req,
        Err(rejection) => return error(StatusCode::BAD_REQUEST, rejection.body_text()),
    };
    if let Err(msg) = check_cell(&svc.inner.pairs[idx].pair, req.simple_sent, req.complex_sent) {
        return error(StatusCode::BAD_REQUEST, msg);
    }
    let rec = AnnotationRecord {
        pair_id: id,
        simple_sent: req.simple_sent,
        complex_sent: req.complex_sent,
        label: req.label,
        source: LabelSource::Human,
        timestamp: Utc::now(),
    };
    let inner = svc.inner.clone();
    let stored = rec.clone();
    let written = tokio::task::spawn_blocking(move || {
        let mut appender = inner.appender.lock().expect("appender lock");
        appender
            .append(&stored)
            .map_err(|e| format!("{}: {e}", appender.path.display()))?;
        // Published while the appender is held, so memory follows file order.
        inner.human.write().expect("label lock")[idx].insert((stored.simple_sent, stored.complex_sent), stored.clone());
        inner.log.write().expect("log lock").push(stored);
        Ok::<(), String>(())
    })
    .await;
    match written {
        Ok(Ok(())) => Json(rec).into_response(),
        Ok(Err(msg)) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("label not saved: {msg}")),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("label not saved: {e}")),
    }
}

async fn export(State(svc): State<AnnotationService>) -> Response {
    let mut body = Vec::new();
    if let Err(e) = write_annotations(&mut body, &svc.export()) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><title>simalign annotation</title>\
         <p>No UI assets configured. Start the service with <code>--static-dir</code>, \
         or use the JSON API under <code>/api/pairs</code>.</p>",
    )
}
