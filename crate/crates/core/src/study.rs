//! Pairwise preference study: pair sampling, vote records and tallies.
//!
//! Every unordered pair of methods (ground truth included) is equally
//! likely, the video is drawn uniformly from the set all methods share, and
//! sides are assigned by an independent fair coin.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StudyError {
    TooFewMethods(usize),
    DuplicateMethod(String),
    NoCommonVideos,
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewMethods(n) => write!(f, "a study needs at least two methods, got {n}"),
            Self::DuplicateMethod(m) => write!(f, "method `{m}` listed twice"),
            Self::NoCommonVideos => f.write_str("methods share no video"),
        }
    }
}

impl core::error::Error for StudyError {}

/// Methods and the video ids every one of them covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudyPlan {
    methods: Vec<String>,
    videos: Vec<String>,
}

impl StudyPlan {
    pub fn new(methods: Vec<String>, videos: Vec<String>) -> Result<Self, StudyError> {
        if methods.len() < 2 {
            return Err(StudyError::TooFewMethods(methods.len()));
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for m in &methods {
            if !seen.insert(m.as_str()) {
                return Err(StudyError::DuplicateMethod(m.clone()));
            }
        }
        if videos.is_empty() {
            return Err(StudyError::NoCommonVideos);
        }
        Ok(Self { methods, videos })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn videos(&self) -> &[String] {
        &self.videos
    }

    /// Number of unordered method pairs, `k (k - 1) / 2`.
    pub fn pair_count(&self) -> usize {
        let k = self.methods.len();
        k * (k - 1) / 2
    }

    /// Maps `0..pair_count()` onto `(i, j)` with `i < j`, row by row.
    pub fn unrank_pair(&self, mut r: usize) -> (usize, usize) {
        let k = self.methods.len();
        let mut i = 0;
        while r >= k - 1 - i {
            r -= k - 1 - i;
            i += 1;
        }
        (i, i + 1 + r)
    }
}

/// One issued comparison before a vote arrives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDraw {
    pub video_id: String,
    pub left_method: String,
    pub right_method: String,
}

pub fn sample_pair<R: Rng + ?Sized>(plan: &StudyPlan, rng: &mut R) -> PairDraw {
    let (i, j) = plan.unrank_pair(rng.random_range(0..plan.pair_count()));
    let video = &plan.videos[rng.random_range(0..plan.videos.len())];
    let (left, right) = if rng.random_bool(0.5) { (j, i) } else { (i, j) };
    PairDraw {
        video_id: video.clone(),
        left_method: plan.methods[left].clone(),
        right_method: plan.methods[right].clone(),
    }
}

/// Like [`sample_pair`], but the unordered pair is drawn uniformly among
/// those issued least often so far. `issued[r]` counts pair rank `r` and is
/// incremented for the drawn pair.
pub fn sample_balanced_pair<R: Rng + ?Sized>(plan: &StudyPlan, issued: &mut [u64], rng: &mut R) -> PairDraw {
    assert_eq!(issued.len(), plan.pair_count(), "one counter per unordered pair");
    let low = issued.iter().copied().min().unwrap_or(0);
    let candidates: Vec<usize> = (0..issued.len()).filter(|&r| issued[r] == low).collect();
    let r = candidates[rng.random_range(0..candidates.len())];
    issued[r] += 1;
    let (i, j) = plan.unrank_pair(r);
    let video = &plan.videos[rng.random_range(0..plan.videos.len())];
    let (left, right) = if rng.random_bool(0.5) { (j, i) } else { (i, j) };
    PairDraw {
        video_id: video.clone(),
        left_method: plan.methods[left].clone(),
        right_method: plan.methods[right].clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Left,
    Right,
}

/// One rater judgment, as stored in the vote log. Timestamps are Unix
/// milliseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub pair_id: String,
    pub video_id: String,
    pub left_method: String,
    pub right_method: String,
    pub choice: Choice,
    pub issued_at: u64,
    pub voted_at: u64,
    pub session_id: String,
}

impl VoteRecord {
    pub fn winner(&self) -> &str {
        match self.choice {
            Choice::Left => &self.left_method,
            Choice::Right => &self.right_method,
        }
    }

    pub fn loser(&self) -> &str {
        match self.choice {
            Choice::Left => &self.right_method,
            Choice::Right => &self.left_method,
        }
    }
}

/// Appearance and win counts of one method.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodTally {
    pub appearances: u64,
    pub wins: u64,
    /// `wins / appearances`; `None` for a method never shown.
    pub win_rate: Option<f64>,
}

/// Running per-method counts, updated one vote at a time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub methods: BTreeMap<String, MethodTally>,
    pub votes: u64,
}

impl Tally {
    pub fn new<I, S>(methods: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { methods: methods.into_iter().map(|m| (m.into(), MethodTally::default())).collect(), votes: 0 }
    }

    pub fn apply(&mut self, vote: &VoteRecord) {
        for (method, won) in [(vote.winner(), true), (vote.loser(), false)] {
            let t = self.methods.entry(String::from(method)).or_default();
            t.appearances += 1;
            t.wins += won as u64;
            t.win_rate = Some(t.wins as f64 / t.appearances as f64);
        }
        self.votes += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plan(k: usize, v: usize) -> StudyPlan {
        StudyPlan::new((0..k).map(|i| format!("m{i}")).collect(), (0..v).map(|i| format!("v{i}")).collect()).unwrap()
    }

    #[test]
    fn unrank_covers_every_pair_once() {
        let p = plan(18, 1);
        assert_eq!(p.pair_count(), 153);
        let mut seen = alloc::collections::BTreeSet::new();
        for r in 0..p.pair_count() {
            let (i, j) = p.unrank_pair(r);
            assert!(i < j && j < 18);
            assert!(seen.insert((i, j)));
        }
    }

    #[test]
    fn two_methods_always_pair_together() {
        let p = plan(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut left_m0 = 0;
        for _ in 0..2000 {
            let d = sample_pair(&p, &mut rng);
            assert_eq!(d.video_id, "v0");
            assert_ne!(d.left_method, d.right_method);
            left_m0 += (d.left_method == "m0") as u32;
        }
        assert!((900..1100).contains(&left_m0), "{left_m0}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = plan(5, 7);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_pair(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn balanced_sampling_keeps_counts_level() {
        let p = plan(6, 2);
        let mut counts = vec![0u64; p.pair_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=200 {
            sample_balanced_pair(&p, &mut counts, &mut rng);
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "after {k} draws: {counts:?}");
        }
    }

    #[test]
    fn plan_validation() {
        assert_eq!(StudyPlan::new(vec!["a".into()], vec!["v".into()]), Err(StudyError::TooFewMethods(1)));
        assert_eq!(StudyPlan::new(vec!["a".into(), "a".into()], vec!["v".into()]), Err(StudyError::DuplicateMethod("a".into())));
        assert_eq!(StudyPlan::new(vec!["a".into(), "b".into()], vec![]), Err(StudyError::NoCommonVideos));
    }

    #[test]
    fn tally_counts() {
        let mut t = Tally::new(["a", "b", "c"]);
        let vote = |l: &str, r: &str, c| VoteRecord {
            pair_id: "p".into(),
            video_id: "v".into(),
            left_method: l.into(),
            right_method: r.into(),
            choice: c,
            issued_at: 0,
            voted_at: 1,
            session_id: "s".into(),
        };
        t.apply(&vote("a", "b", Choice::Left));
        t.apply(&vote("b", "a", Choice::Right));
        assert_eq!(t.methods["a"].wins, 2);
        assert_eq!(t.methods["b"].win_rate, Some(0.0));
        assert_eq!(t.methods["c"].win_rate, None);
        assert_eq!(t.votes, 2);
    }
}
