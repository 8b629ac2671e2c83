//! HTTP service for the pairwise preference study.
//!
//! | route            | behaviour                                              |
//! |------------------|--------------------------------------------------------|
//! | `GET /api/pair`  | issues a pair: `{pair_id, video_id, left_url, right_url}` |
//! | `POST /api/vote` | `{pair_id, choice, session_id}`; 404 unknown or expired pair, 409 repeat vote |
//! | `GET /api/tally` | per-method appearances, wins and win rate              |
//! | `GET /media/{token}` | stimulus file, with range requests                 |
//!
//! The vote log is the source of truth. Each accepted vote is appended as one
//! line and synced before the acknowledgement is sent; at startup the log is
//! replayed to rebuild the tally and the set of spent pair ids.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::body::Body;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use theval_core::study::{sample_balanced_pair, sample_pair, Choice, PairDraw, StudyPlan, Tally, VoteRecord};
use tower::ServiceExt;
use tower_http::services::{ServeDir, ServeFile};

use crate::error::{Error, Result};
use crate::format::{read_json, read_jsonl, resolve};

pub const MAX_SESSION_ID: usize = 128;

/// On-disk service configuration; relative paths are taken from the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfigFile {
    /// Stimulus directory per method. A file `<video_id>.<ext>` is one
    /// stimulus.
    pub methods: BTreeMap<String, PathBuf>,
    pub votes_path: PathBuf,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ttl")]
    pub pair_ttl_s: u64,
    /// Draw the least-issued pairs first instead of uniformly.
    #[serde(default)]
    pub balance_pairs: bool,
    /// Served at `/` when present, for the rating frontend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_dir: Option<PathBuf>,
}

fn default_port() -> u16 {
    8080
}

fn default_ttl() -> u64 {
    3600
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// `method -> video_id -> stimulus file`, restricted to common videos.
    pub stimuli: BTreeMap<String, BTreeMap<String, PathBuf>>,
    pub votes_path: PathBuf,
    pub port: u16,
    pub seed: u64,
    pub pair_ttl: Duration,
    pub balance_pairs: bool,
    pub static_dir: Option<PathBuf>,
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let file: StudyConfigFile = read_json(path)?;
        Self::from_file(file, path.parent().unwrap_or(Path::new("")))
    }

    pub fn from_file(file: StudyConfigFile, root: &Path) -> Result<Self> {
        let mut stimuli = BTreeMap::new();
        for (method, dir) in &file.methods {
            let dir = resolve(root, dir);
            stimuli.insert(method.clone(), scan_stimuli(&dir)?);
        }
        let mut common: Option<Vec<String>> = None;
        for files in stimuli.values() {
            common = Some(match common {
                None => files.keys().cloned().collect(),
                Some(c) => c.into_iter().filter(|v| files.contains_key(v)).collect(),
            });
        }
        let common = common.unwrap_or_default();
        for files in stimuli.values_mut() {
            files.retain(|v, _| common.contains(v));
        }
        Ok(Self {
            stimuli,
            votes_path: resolve(root, &file.votes_path),
            port: file.port,
            seed: file.seed,
            pair_ttl: Duration::from_secs(file.pair_ttl_s),
            balance_pairs: file.balance_pairs,
            static_dir: file.static_dir.map(|d| resolve(root, &d)),
        })
    }

    pub fn methods(&self) -> Vec<String> {
        self.stimuli.keys().cloned().collect()
    }

    pub fn videos(&self) -> Vec<String> {
        self.stimuli.values().next().map(|f| f.keys().cloned().collect()).unwrap_or_default()
    }
}

fn scan_stimuli(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let entry = entry.map_err(Error::io(dir))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            if stem.starts_with('.') {
                continue;
            }
            if out.insert(stem.to_owned(), path.clone()).is_some() {
                return Err(Error::Data(format!("{}: two stimuli share the video id `{stem}`", dir.display())));
            }
        }
    }
    Ok(out)
}

/// Opaque, stable name of one stimulus.
fn media_token(seed: u64, method: &str, video: &str) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(method.as_bytes());
    h.update([0]);
    h.update(video.as_bytes());
    h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

struct Issued {
    draw: PairDraw,
    issued_at: u64,
    expires: Instant,
}

struct Sampler {
    rng: ChaCha8Rng,
    issued: HashMap<String, Issued>,
    expiry: VecDeque<(Instant, String)>,
    spent: HashSet<String>,
    pair_counts: Vec<u64>,
    tally: Tally,
}

pub struct StudyState {
    plan: StudyPlan,
    ttl: Duration,
    balance: bool,
    media: HashMap<String, PathBuf>,
    tokens: BTreeMap<(String, String), String>,
    sampler: Mutex<Sampler>,
    /// The single writer. Held across the whole acceptance of a vote so the
    /// log order and the tally order agree.
    log: Mutex<File>,
    static_dir: Option<PathBuf>,
}

/// Response of `GET /api/pair`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAssignment {
    pub pair_id: String,
    pub video_id: String,
    pub left_url: String,
    pub right_url: String,
}

/// Body of `POST /api/vote`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRequest {
    pub pair_id: String,
    pub choice: Choice,
    pub session_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteStatus {
    Recorded,
    UnknownPair,
    Expired,
    Duplicate,
    InvalidSession,
    StorageError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteResponse {
    pub status: VoteStatus,
}

impl IntoResponse for VoteStatus {
    fn into_response(self) -> Response {
        let code = match self {
            VoteStatus::Recorded => StatusCode::OK,
            VoteStatus::UnknownPair | VoteStatus::Expired => StatusCode::NOT_FOUND,
            VoteStatus::Duplicate => StatusCode::CONFLICT,
            VoteStatus::InvalidSession => StatusCode::BAD_REQUEST,
            VoteStatus::StorageError => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (code, Json(VoteResponse { status: self })).into_response()
    }
}

impl StudyState {
    /// Builds the state, replaying any existing vote log.
    pub fn open(config: &StudyConfig) -> Result<Self> {
        let plan = StudyPlan::new(config.methods(), config.videos()).map_err(|e| Error::Data(e.to_string()))?;
        let mut media = HashMap::new();
        let mut tokens = BTreeMap::new();
        for (method, files) in &config.stimuli {
            for (video, path) in files {
                let t = media_token(config.seed, method, video);
                media.insert(t.clone(), path.clone());
                tokens.insert((method.clone(), video.clone()), t);
            }
        }

        let mut tally = Tally::new(plan.methods().iter().cloned());
        let mut spent = HashSet::new();
        let mut pair_counts = vec![0u64; plan.pair_count()];
        if config.votes_path.exists() {
            let records: Vec<VoteRecord> = read_jsonl(&config.votes_path)?;
            for r in &records {
                tally.apply(r);
                spent.insert(r.pair_id.clone());
                if let Some(rank) = pair_rank(&plan, &r.left_method, &r.right_method) {
                    pair_counts[rank] += 1;
                }
            }
            tracing::info!(votes = records.len(), path = %config.votes_path.display(), "replayed vote log");
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&config.votes_path)
            .map_err(Error::io(&config.votes_path))?;
        // Restarts continue with a fresh stream rather than reissuing the
        // pair sequence of the previous run.
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ tally.votes.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Ok(Self {
            plan,
            ttl: config.pair_ttl,
            balance: config.balance_pairs,
            media,
            tokens,
            sampler: Mutex::new(Sampler { rng, issued: HashMap::new(), expiry: VecDeque::new(), spent, pair_counts, tally }),
            log: Mutex::new(log),
            static_dir: config.static_dir.clone(),
        })
    }

    pub fn plan(&self) -> &StudyPlan {
        &self.plan
    }

    pub fn issue_pair(&self) -> PairAssignment {
        let mut s = self.sampler.lock().expect("sampler lock");
        let now = Instant::now();
        while let Some((t, _)) = s.expiry.front() {
            if *t > now {
                break;
            }
            let (_, id) = s.expiry.pop_front().expect("front exists");
            s.issued.remove(&id);
        }
        let s = &mut *s;
        let draw = if self.balance {
            sample_balanced_pair(&self.plan, &mut s.pair_counts, &mut s.rng)
        } else {
            sample_pair(&self.plan, &mut s.rng)
        };
        let pair_id = loop {
            let id = format!("{:016x}", s.rng.random::<u64>());
            if !s.spent.contains(&id) && !s.issued.contains_key(&id) {
                break id;
            }
        };
        let url = |m: &str| format!("/media/{}", self.tokens[&(m.to_owned(), draw.video_id.clone())]);
        let assignment = PairAssignment {
            pair_id: pair_id.clone(),
            video_id: draw.video_id.clone(),
            left_url: url(&draw.left_method),
            right_url: url(&draw.right_method),
        };
        let expires = now + self.ttl;
        s.expiry.push_back((expires, pair_id.clone()));
        s.issued.insert(pair_id, Issued { draw, issued_at: now_ms(), expires });
        assignment
    }

    /// Validates, persists and counts one vote. Blocking.
    pub fn record_vote(&self, req: &VoteRequest) -> VoteStatus {
        if req.session_id.len() > MAX_SESSION_ID {
            return VoteStatus::InvalidSession;
        }
        let mut log = self.log.lock().expect("log lock");
        let (record, issued) = {
            let mut s = self.sampler.lock().expect("sampler lock");
            if s.spent.contains(&req.pair_id) {
                return VoteStatus::Duplicate;
            }
            let Some(issued) = s.issued.remove(&req.pair_id) else {
                return VoteStatus::UnknownPair;
            };
            if issued.expires <= Instant::now() {
                return VoteStatus::Expired;
            }
            let record = VoteRecord {
                pair_id: req.pair_id.clone(),
                video_id: issued.draw.video_id.clone(),
                left_method: issued.draw.left_method.clone(),
                right_method: issued.draw.right_method.clone(),
                choice: req.choice,
                issued_at: issued.issued_at,
                voted_at: now_ms().max(issued.issued_at),
                session_id: req.session_id.clone(),
            };
            s.spent.insert(req.pair_id.clone());
            (record, issued)
        };

        let mut line = serde_json::to_vec(&record).expect("vote records serialize");
        line.push(b'\n');
        if let Err(e) = log.write_all(&line).and_then(|_| log.sync_data()) {
            tracing::error!(error = %e, "vote log write failed");
            let mut s = self.sampler.lock().expect("sampler lock");
            s.spent.remove(&req.pair_id);
            s.issued.insert(req.pair_id.clone(), issued);
            return VoteStatus::StorageError;
        }
        self.sampler.lock().expect("sampler lock").tally.apply(&record);
        drop(log);
        VoteStatus::Recorded
    }

    /// The draw behind an issued, not yet voted pair.
    pub fn issued_draw(&self, pair_id: &str) -> Option<PairDraw> {
        self.sampler.lock().expect("sampler lock").issued.get(pair_id).map(|i| i.draw.clone())
    }

    pub fn tally(&self) -> Tally {
        self.sampler.lock().expect("sampler lock").tally.clone()
    }

    fn media_path(&self, token: &str) -> Option<&PathBuf> {
        self.media.get(token)
    }
}

fn pair_rank(plan: &StudyPlan, a: &str, b: &str) -> Option<usize> {
    let ia = plan.methods().iter().position(|m| m == a)?;
    let ib = plan.methods().iter().position(|m| m == b)?;
    let (i, j) = (ia.min(ib), ia.max(ib));
    if i == j {
        return None;
    }
    let k = plan.methods().len();
    Some(i * (2 * k - i - 1) / 2 + (j - i - 1))
}

async fn get_pair(State(state): State<Arc<StudyState>>) -> Json<PairAssignment> {
    Json(state.issue_pair())
}

async fn post_vote(State(state): State<Arc<StudyState>>, Json(req): Json<VoteRequest>) -> VoteStatus {
    tokio::task::spawn_blocking(move || state.record_vote(&req)).await.unwrap_or(VoteStatus::StorageError)
}

async fn get_tally(State(state): State<Arc<StudyState>>) -> Json<Tally> {
    Json(state.tally())
}

async fn get_media(State(state): State<Arc<StudyState>>, UrlPath(token): UrlPath<String>, req: Request) -> Response {
    let Some(path) = state.media_path(&token) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    match ServeFile::new(path).oneshot(req).await {
        Ok(resp) => resp.map(Body::new),
        Err(never) => match never {},
    }
}

pub fn router(state: Arc<StudyState>) -> Router {
    let router = Router::new()
        .route("/api/pair", get(get_pair))
        .route("/api/vote", post(post_vote))
        .route("/api/tally", get(get_tally))
        .route("/media/{token}", get(get_media));
    let router = match &state.static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    };
    router.with_state(state)
}

/// Binds the configured port and serves until interrupted.
pub async fn serve(config: StudyConfig) -> Result<()> {
    let state = Arc::new(StudyState::open(&config)?);
    let addr = std::net::SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::Data(format!("cannot bind {addr}: {e}")))?;
    tracing::info!(%addr, methods = state.plan.methods().len(), videos = state.plan.videos().len(), "study service listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Data(format!("server error: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_rank_matches_unrank() {
        let methods: Vec<String> = (0..7).map(|i| format!("m{i}")).collect();
        let plan = StudyPlan::new(methods.clone(), vec!["v".into()]).unwrap();
        for r in 0..plan.pair_count() {
            let (i, j) = plan.unrank_pair(r);
            assert_eq!(pair_rank(&plan, &methods[j], &methods[i]), Some(r));
        }
    }

    #[test]
    fn media_tokens_are_distinct_and_opaque() {
        let a = media_token(1, "hallo2", "v1");
        assert_eq!(a.len(), 24);
        assert!(!a.contains("hallo2"));
        assert_ne!(a, media_token(1, "hallo2", "v2"));
        assert_ne!(a, media_token(2, "hallo2", "v1"));
        assert_ne!(media_token(0, "ab", "c"), media_token(0, "a", "bc"));
    }
}
