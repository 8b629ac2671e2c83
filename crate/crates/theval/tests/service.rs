//! HTTP surface of the study service, as used by the rating frontend.

mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use common::study_config;
use theval::correlate::read_votes;
use theval::engine::stats::win_rates;
use theval::engine::study::{Choice, Tally};
use theval::service::{router, PairAssignment, StudyConfig, StudyState, VoteRequest, VoteResponse, VoteStatus};
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn pair(app: &Router) -> PairAssignment {
    let (status, body) = call(app, Request::get("/api/pair").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_slice(&body).unwrap()
}

async fn vote(app: &Router, pair_id: &str, choice: Choice, session: &str) -> (StatusCode, VoteStatus) {
    let body = serde_json::to_vec(&VoteRequest { pair_id: pair_id.into(), choice, session_id: session.into() }).unwrap();
    let req = Request::post("/api/vote").header("content-type", "application/json").body(Body::from(body)).unwrap();
    let (status, body) = call(app, req).await;
    (status, serde_json::from_slice::<VoteResponse>(&body).unwrap().status)
}

fn app(config: &StudyConfig) -> (Arc<StudyState>, Router) {
    let state = Arc::new(StudyState::open(config).unwrap());
    (state.clone(), router(state))
}

#[tokio::test]
async fn pair_vote_and_tally() {
    let dir = tempfile::tempdir().unwrap();
    let config = study_config(dir.path(), 4, 3, 1);
    let (state, app) = app(&config);

    let p = pair(&app).await;
    assert_eq!(p.pair_id.len(), 16);
    assert!(p.left_url.starts_with("/media/") && p.right_url.starts_with("/media/"));
    assert_ne!(p.left_url, p.right_url);
    let draw = state.issued_draw(&p.pair_id).unwrap();
    assert_eq!(draw.video_id, p.video_id);

    assert_eq!(vote(&app, &p.pair_id, Choice::Left, "s1").await, (StatusCode::OK, VoteStatus::Recorded));
    assert_eq!(vote(&app, &p.pair_id, Choice::Left, "s1").await, (StatusCode::CONFLICT, VoteStatus::Duplicate));
    assert_eq!(vote(&app, "0000000000000000", Choice::Left, "s1").await, (StatusCode::NOT_FOUND, VoteStatus::UnknownPair));

    let (status, body) = call(&app, Request::get("/api/tally").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    let tally: Tally = serde_json::from_slice(&body).unwrap();
    assert_eq!(tally.votes, 1);
    assert_eq!(tally.methods[&draw.left_method].wins, 1);
    assert_eq!(tally.methods[&draw.right_method].appearances, 1);
    assert_eq!(tally.methods[&draw.right_method].wins, 0);
}

#[tokio::test]
async fn media_urls_serve_the_stimulus_without_naming_the_method() {
    let dir = tempfile::tempdir().unwrap();
    let config = study_config(dir.path(), 3, 2, 2);
    let (state, app) = app(&config);
    let p = pair(&app).await;
    let draw = state.issued_draw(&p.pair_id).unwrap();
    for m in config.methods() {
        assert!(!p.left_url.contains(&m) && !p.right_url.contains(&m));
    }
    let (status, body) = call(&app, Request::get(&p.left_url).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, std::fs::read(&config.stimuli[&draw.left_method][&draw.video_id]).unwrap());
    let (status, _) = call(&app, Request::get("/media/ffffffffffffffffffffffff").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn overlong_session_is_rejected_without_spending_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let config = study_config(dir.path(), 3, 2, 3);
    let (_, app) = app(&config);
    let p = pair(&app).await;
    assert_eq!(vote(&app, &p.pair_id, Choice::Right, &"x".repeat(129)).await, (StatusCode::BAD_REQUEST, VoteStatus::InvalidSession));
    assert_eq!(vote(&app, &p.pair_id, Choice::Right, "ok").await.1, VoteStatus::Recorded);
}

#[tokio::test]
async fn expired_pairs_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = study_config(dir.path(), 3, 2, 4);
    config.pair_ttl = Duration::ZERO;
    let (_, app) = app(&config);
    let p = pair(&app).await;
    assert_eq!(vote(&app, &p.pair_id, Choice::Left, "s").await, (StatusCode::NOT_FOUND, VoteStatus::Expired));
}

#[test]
fn log_replay_reproduces_the_tally_and_matches_win_rates() {
    let dir = tempfile::tempdir().unwrap();
    let config = study_config(dir.path(), 5, 3, 5);
    let state = StudyState::open(&config).unwrap();
    for k in 0..200 {
        let p = state.issue_pair();
        let choice = if k % 3 == 0 { Choice::Right } else { Choice::Left };
        assert_eq!(state.record_vote(&VoteRequest { pair_id: p.pair_id, choice, session_id: format!("s{}", k % 7) }), VoteStatus::Recorded);
    }
    let live = state.tally();
    drop(state);

    let votes = read_votes(&config.votes_path).unwrap();
    assert_eq!(votes.len(), 200);
    let rates = win_rates(&votes, &config.methods()).unwrap();
    assert_eq!(rates.methods, live.methods);

    let reopened = StudyState::open(&config).unwrap();
    assert_eq!(reopened.tally(), live);
    // Spent ids survive the restart.
    let spent = &votes[0].pair_id;
    assert_eq!(
        reopened.record_vote(&VoteRequest { pair_id: spent.clone(), choice: Choice::Left, session_id: "s".into() }),
        VoteStatus::Duplicate
    );
    // A restarted service does not replay the same pair ids.
    let fresh = reopened.issue_pair();
    assert!(votes.iter().all(|v| v.pair_id != fresh.pair_id));
}

#[test]
fn balanced_mode_keeps_pair_counts_level() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = study_config(dir.path(), 6, 2, 6);
    config.balance_pairs = true;
    let state = StudyState::open(&config).unwrap();
    let methods = config.methods();
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..15 * 4 {
        let p = state.issue_pair();
        let d = state.issued_draw(&p.pair_id).unwrap();
        let key = if d.left_method < d.right_method { (d.left_method, d.right_method) } else { (d.right_method, d.left_method) };
        *counts.entry(key).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), methods.len() * (methods.len() - 1) / 2);
    assert!(counts.values().all(|&c| c == 4), "{counts:?}");
}

#[test]
fn same_seed_same_sequence() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = StudyState::open(&study_config(a.path(), 5, 3, 42)).unwrap();
    let sb = StudyState::open(&study_config(b.path(), 5, 3, 42)).unwrap();
    for _ in 0..50 {
        let (pa, pb) = (sa.issue_pair(), sb.issue_pair());
        assert_eq!(pa, pb);
    }
}
