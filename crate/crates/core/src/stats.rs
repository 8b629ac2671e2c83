//! Rank correlation between metric scores and human win rates.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::study::{MethodTally, VoteRecord};

/// Largest sample size for which p-values come from full permutation
/// enumeration.
pub const EXACT_PVALUE_MAX_N: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    LengthMismatch { x: usize, y: usize, labels: usize },
    TooFewPoints(usize),
    NonFinite { index: usize },
    ConstantSeries,
    InvalidLevel(f64),
    NoResamples,
    AllResamplesDegenerate { resamples: usize },
    UnknownMethod { pair_id: String, method: String },
    SelfComparison { pair_id: String },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LengthMismatch { x, y, labels } => {
                write!(f, "series lengths differ (x {x}, y {y}, labels {labels})")
            }
            Self::TooFewPoints(n) => write!(f, "at least 3 paired points are required, got {n}"),
            Self::NonFinite { index } => write!(f, "point {index} is not finite"),
            Self::ConstantSeries => f.write_str("correlation is undefined for a constant series"),
            Self::InvalidLevel(l) => write!(f, "confidence level {l} is outside (0, 1)"),
            Self::NoResamples => f.write_str("resample count must be positive"),
            Self::AllResamplesDegenerate { resamples } => {
                write!(f, "all {resamples} bootstrap resamples were degenerate; no interval available")
            }
            Self::UnknownMethod { pair_id, method } => {
                write!(f, "vote {pair_id} names unknown method `{method}`")
            }
            Self::SelfComparison { pair_id } => write!(f, "vote {pair_id} compares a method with itself"),
        }
    }
}

impl core::error::Error for StatsError {}

/// Model-level paired observations: a score per model and its human win
/// rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    pub labels: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedSeries {
    pub fn new(labels: Vec<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        if x.len() != y.len() || labels.len() != x.len() {
            return Err(StatsError::LengthMismatch { x: x.len(), y: y.len(), labels: labels.len() });
        }
        if x.len() < 3 {
            return Err(StatsError::TooFewPoints(x.len()));
        }
        if let Some(index) = x.iter().zip(&y).position(|(a, b)| !(a.is_finite() && b.is_finite())) {
            return Err(StatsError::NonFinite { index });
        }
        Ok(Self { labels, x, y })
    }

    /// Unlabelled series, labels are point indices.
    pub fn unlabelled(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        let labels = (0..x.len()).map(|i| alloc::format!("{i}")).collect();
        Self::new(labels, x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

fn rho_of(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Pearson correlation of average ranks.
pub fn spearman_rho(series: &PairedSeries) -> Result<f64, StatsError> {
    rho_of(&series.x, &series.y).ok_or(StatsError::ConstantSeries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactPermutation,
    StudentT,
}

/// Two-sided p-value for a Spearman coefficient under independence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub value: f64,
    pub method: PValueMethod,
    /// The t approximation degenerates at `|rho| = 1`; the value is 0 and
    /// should be read as "below machine precision".
    pub at_floor: bool,
}

/// Two-sided p-value of `rho` for `n` untied points: full permutation
/// enumeration for `n <= 9`, the Student t approximation with `n - 2`
/// degrees of freedom beyond.
pub fn spearman_pvalue(rho: f64, n: usize) -> Result<PValue, StatsError> {
    if n < 3 {
        return Err(StatsError::TooFewPoints(n));
    }
    if !rho.is_finite() {
        return Err(StatsError::NonFinite { index: 0 });
    }
    let rho = rho.clamp(-1.0, 1.0);
    if n <= EXACT_PVALUE_MAX_N {
        return Ok(PValue { value: exact_pvalue(rho, n), method: PValueMethod::ExactPermutation, at_floor: false });
    }
    if rho.abs() >= 1.0 {
        return Ok(PValue { value: 0.0, method: PValueMethod::StudentT, at_floor: true });
    }
    let df = (n - 2) as f64;
    let t2 = rho * rho * df / (1.0 - rho * rho);
    let value = regularized_incomplete_beta(df / (df + t2), df / 2.0, 0.5).clamp(0.0, 1.0);
    Ok(PValue { value, method: PValueMethod::StudentT, at_floor: false })
}

/// Share of the `n!` rank permutations whose |rho| reaches `|rho|`.
fn exact_pvalue(rho: f64, n: usize) -> f64 {
    let denom = (n * (n * n - 1)) as f64;
    // rho = 1 - 6 D / denom, D = sum of squared rank differences (an integer)
    let mut counts = alloc::vec![0u64; n * (n * n - 1) / 3 + 1];
    let mut perm: Vec<usize> = (0..n).collect();
    let d2 = |p: &[usize]| p.iter().enumerate().map(|(i, &v)| (i as i64 - v as i64).pow(2)).sum::<i64>() as usize;
    counts[d2(&perm)] += 1;
    // Heap's algorithm
    let mut c = alloc::vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            counts[d2(&perm)] += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let target = rho.abs() - 1e-12;
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(d, _)| (1.0 - 6.0 * *d as f64 / denom).abs() >= target)
        .map(|(_, &k)| k)
        .sum();
    extreme as f64 / total as f64
}

/// `I_x(a, b)` by the continued fraction, with the symmetry swap for
/// fast convergence.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: 10_000, level: 0.95, seed: 0 }
    }
}

/// Percentile interval of the resampled coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub low: f64,
    pub high: f64,
    pub resamples: usize,
    /// Resamples skipped because a column came out constant.
    pub degenerate: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn percentile_interval(mut rhos: Vec<f64>, config: &BootstrapConfig) -> Result<BootstrapCi, StatsError> {
    let degenerate = config.resamples - rhos.len();
    if rhos.is_empty() {
        return Err(StatsError::AllResamplesDegenerate { resamples: config.resamples });
    }
    rhos.sort_by(f64::total_cmp);
    let tail = (1.0 - config.level) / 2.0;
    Ok(BootstrapCi {
        low: quantile_sorted(&rhos, tail),
        high: quantile_sorted(&rhos, 1.0 - tail),
        resamples: config.resamples,
        degenerate,
    })
}

fn check_config(config: &BootstrapConfig) -> Result<(), StatsError> {
    if config.resamples == 0 {
        return Err(StatsError::NoResamples);
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(StatsError::InvalidLevel(config.level));
    }
    Ok(())
}

/// Percentile bootstrap over model-level paired points, resampled with
/// replacement. Deterministic for a given seed.
pub fn bootstrap_ci(series: &PairedSeries, config: &BootstrapConfig) -> Result<BootstrapCi, StatsError> {
    check_config(config)?;
    let n = series.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rhos = Vec::with_capacity(config.resamples);
    let mut xs = alloc::vec![0.0; n];
    let mut ys = alloc::vec![0.0; n];
    for _ in 0..config.resamples {
        for k in 0..n {
            let i = rng.random_range(0..n);
            xs[k] = series.x[i];
            ys[k] = series.y[i];
        }
        if let Some(r) = rho_of(&xs, &ys) {
            rhos.push(r);
        }
    }
    percentile_interval(rhos, config)
}

/// Bootstrap that resamples individual votes and recomputes win rates,
/// holding the per-method scores fixed. Methods absent from a resample are
/// dropped from that resample's correlation.
pub fn bootstrap_ci_votes(
    scores: &BTreeMap<String, f64>,
    votes: &[VoteRecord],
    config: &BootstrapConfig,
) -> Result<BootstrapCi, StatsError> {
    check_config(config)?;
    if votes.is_empty() {
        return Err(StatsError::TooFewPoints(0));
    }
    let index: BTreeMap<&str, usize> = scores.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let mut outcomes = Vec::with_capacity(votes.len());
    for v in votes {
        let w = index.get(v.winner()).copied();
        let l = index.get(v.loser()).copied();
        if let (Some(w), Some(l)) = (w, l) {
            outcomes.push((w, l));
        }
    }
    if outcomes.is_empty() {
        return Err(StatsError::TooFewPoints(0));
    }
    let score_vec: Vec<f64> = scores.values().copied().collect();
    let m = score_vec.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rhos = Vec::with_capacity(config.resamples);
    let mut wins = alloc::vec![0u64; m];
    let mut apps = alloc::vec![0u64; m];
    for _ in 0..config.resamples {
        wins.iter_mut().for_each(|w| *w = 0);
        apps.iter_mut().for_each(|a| *a = 0);
        for _ in 0..outcomes.len() {
            let (w, l) = outcomes[rng.random_range(0..outcomes.len())];
            wins[w] += 1;
            apps[w] += 1;
            apps[l] += 1;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..m)
            .filter(|&i| apps[i] > 0)
            .map(|i| (score_vec[i], wins[i] as f64 / apps[i] as f64))
            .unzip();
        if xs.len() >= 3 {
            if let Some(r) = rho_of(&xs, &ys) {
                rhos.push(r);
            }
        }
    }
    percentile_interval(rhos, config)
}

/// Coefficient, significance and interval for one metric row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub n: usize,
    pub rho: f64,
    pub p_value: f64,
    pub p_method: PValueMethod,
    pub p_at_floor: bool,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
    pub degenerate_resamples: usize,
}

pub fn correlate(series: &PairedSeries, config: &BootstrapConfig) -> Result<CorrelationResult, StatsError> {
    let rho = spearman_rho(series)?;
    let p = spearman_pvalue(rho, series.len())?;
    let ci = bootstrap_ci(series, config)?;
    Ok(CorrelationResult {
        n: series.len(),
        rho,
        p_value: p.value,
        p_method: p.method,
        p_at_floor: p.at_floor,
        ci_low: ci.low,
        ci_high: ci.high,
        resamples: ci.resamples,
        degenerate_resamples: ci.degenerate,
    })
}

/// Per-method win rates from a vote log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WinRates {
    pub methods: BTreeMap<String, MethodTally>,
    /// Methods that never appeared in any vote.
    pub unseen: Vec<String>,
}

impl WinRates {
    pub fn rate(&self, method: &str) -> Option<f64> {
        self.methods.get(method).and_then(|t| t.win_rate)
    }
}

/// `wins / appearances` for each of `methods`. Votes naming any other
/// method are rejected.
pub fn win_rates(votes: &[VoteRecord], methods: &[String]) -> Result<WinRates, StatsError> {
    let mut wins: BTreeMap<&str, u64> = methods.iter().map(|m| (m.as_str(), 0)).collect();
    let mut apps: BTreeMap<&str, u64> = wins.clone();
    for v in votes {
        if v.left_method == v.right_method {
            return Err(StatsError::SelfComparison { pair_id: v.pair_id.clone() });
        }
        for m in [&v.left_method, &v.right_method] {
            match apps.get_mut(m.as_str()) {
                Some(a) => *a += 1,
                None => return Err(StatsError::UnknownMethod { pair_id: v.pair_id.clone(), method: m.clone() }),
            }
        }
        *wins.get_mut(v.winner()).expect("winner checked above") += 1;
    }
    let mut out = WinRates::default();
    for m in methods {
        let a = apps[m.as_str()];
        let w = wins[m.as_str()];
        if a == 0 {
            out.unseen.push(m.clone());
        }
        out.methods.insert(
            m.clone(),
            MethodTally { appearances: a, wins: w, win_rate: (a > 0).then(|| w as f64 / a as f64) },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::{Choice, Tally};
    use alloc::{format, vec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn series(x: &[f64], y: &[f64]) -> PairedSeries {
        PairedSeries::unlabelled(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_relative_eq!(spearman_rho(&series(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0])).unwrap(), 1.0);
        assert_relative_eq!(spearman_rho(&series(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])).unwrap(), -1.0);
        let r = spearman_rho(&series(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0])).unwrap();
        assert_relative_eq!(r, 0.8, epsilon = 1e-12);
        assert_eq!(spearman_rho(&series(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0])), Err(StatsError::ConstantSeries));
        assert_eq!(PairedSeries::unlabelled(vec![1.0, 2.0], vec![1.0, 2.0]), Err(StatsError::TooFewPoints(2)));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn pvalue_examples() {
        let p = spearman_pvalue(1.0, 5).unwrap();
        assert_eq!(p.method, PValueMethod::ExactPermutation);
        assert_relative_eq!(p.value, 2.0 / 120.0, epsilon = 1e-15);
        assert_relative_eq!(spearman_pvalue(0.0, 5).unwrap().value, 1.0);
        assert_relative_eq!(spearman_pvalue(0.0, 30).unwrap().value, 1.0, epsilon = 1e-12);
        assert!(spearman_pvalue(0.87, 18).unwrap().value < 1e-4);
        let floor = spearman_pvalue(1.0, 20).unwrap();
        assert!(floor.at_floor && floor.value == 0.0);
    }

    #[test]
    fn exact_pvalue_matches_brute_force_at_n4() {
        // rank permutations of 4: count |rho| >= 0.8
        let base = [0usize, 1, 2, 3];
        let mut count = 0;
        let mut total = 0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        if (0..4).all(|v| p.contains(&v)) {
                            total += 1;
                            let d2: i64 = p.iter().zip(base).map(|(&x, y)| (x as i64 - y as i64).pow(2)).sum();
                            let rho = 1.0 - 6.0 * d2 as f64 / 60.0;
                            count += (rho.abs() >= 0.8 - 1e-12) as i32;
                        }
                    }
                }
            }
        }
        assert_relative_eq!(spearman_pvalue(0.8, 4).unwrap().value, count as f64 / total as f64);
    }

    #[test]
    fn student_t_tail_matches_reference() {
        // two-sided t tail, df = 10, t = 2.228138851986 -> 0.05
        let df = 10.0;
        let t: f64 = 2.228138851986;
        let p = regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
        assert_relative_eq!(p, 0.05, epsilon = 1e-9);
        // df = 1 is Cauchy: P(|T| > 1) = 0.5
        assert_relative_eq!(regularized_incomplete_beta(0.5, 0.5, 0.5), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bootstrap_on_monotone_series_is_degenerate_at_one() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + 1.0).collect();
        let ci = bootstrap_ci(&series(&x, &y), &BootstrapConfig { resamples: 2000, level: 0.95, seed: 1 }).unwrap();
        assert_eq!((ci.low, ci.high), (1.0, 1.0));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let x = [0.3, 0.9, 0.1, 0.5, 0.7, 0.2, 0.8];
        let y = [0.2, 0.7, 0.3, 0.4, 0.9, 0.1, 0.6];
        let s = series(&x, &y);
        let cfg = BootstrapConfig { resamples: 500, level: 0.95, seed: 9 };
        let a = bootstrap_ci(&s, &cfg).unwrap();
        assert_eq!(a, bootstrap_ci(&s, &cfg).unwrap());
        assert!(a.low <= a.high);
        assert!(bootstrap_ci(&s, &BootstrapConfig { resamples: 0, ..cfg }).is_err());
    }

    #[test]
    fn bootstrap_of_identical_points_fails() {
        let s = PairedSeries::unlabelled(vec![1.0, 1.0, 1.0], vec![2.0, 3.0, 4.0]).unwrap();
        let err = bootstrap_ci(&s, &BootstrapConfig { resamples: 10, level: 0.95, seed: 0 });
        assert_eq!(err, Err(StatsError::AllResamplesDegenerate { resamples: 10 }));
    }

    fn vote(id: usize, l: &str, r: &str, c: Choice) -> VoteRecord {
        VoteRecord {
            pair_id: format!("p{id}"),
            video_id: "v".into(),
            left_method: l.into(),
            right_method: r.into(),
            choice: c,
            issued_at: 0,
            voted_at: 0,
            session_id: "s".into(),
        }
    }

    #[test]
    fn win_rate_examples() {
        let methods: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let mut votes = Vec::new();
        for i in 0..10 {
            votes.push(vote(i, "a", "b", if i < 7 { Choice::Left } else { Choice::Right }));
        }
        let wr = win_rates(&votes, &methods).unwrap();
        assert_relative_eq!(wr.rate("a").unwrap(), 0.7);
        assert_relative_eq!(wr.rate("b").unwrap(), 0.3);
        assert_eq!(wr.unseen, vec![String::from("c")]);

        let bad = vec![vote(99, "a", "z", Choice::Left)];
        assert_eq!(
            win_rates(&bad, &methods),
            Err(StatsError::UnknownMethod { pair_id: "p99".into(), method: "z".into() })
        );
    }

    #[test]
    fn vote_level_bootstrap_runs() {
        let mut scores = BTreeMap::new();
        for (m, s) in [("a", 0.9), ("b", 0.6), ("c", 0.3), ("d", 0.1)] {
            scores.insert(String::from(m), s);
        }
        let names = ["a", "b", "c", "d"];
        let mut votes = Vec::new();
        let mut id = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                for k in 0..10 {
                    // better-scored method wins 8 of 10
                    let c = if k < 8 { Choice::Left } else { Choice::Right };
                    votes.push(vote(id, names[i], names[j], c));
                    id += 1;
                }
            }
        }
        let ci = bootstrap_ci_votes(&scores, &votes, &BootstrapConfig { resamples: 300, level: 0.9, seed: 4 }).unwrap();
        assert!(ci.low <= ci.high);
        assert!(ci.high <= 1.0 && ci.low > 0.0);
    }

    proptest! {
        #[test]
        fn rho_properties(pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..30)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(r) = spearman_rho(&series(&x, &y)) {
                prop_assert!((-1.0..=1.0).contains(&r));
                let swapped = spearman_rho(&series(&y, &x)).unwrap();
                prop_assert!((r - swapped).abs() < 1e-12);
                let tx: Vec<f64> = x.iter().map(|v| libm::exp(v / 50.0) * 3.0 + 1.0).collect();
                prop_assert_eq!(spearman_rho(&series(&tx, &y)).unwrap(), r);
            }
        }

        #[test]
        fn win_rates_agree_with_tally(choices in prop::collection::vec((0usize..4, 0usize..4, any::<bool>()), 0..60)) {
            let names = ["a", "b", "c", "d"];
            let methods: Vec<String> = names.iter().map(|s| String::from(*s)).collect();
            let votes: Vec<VoteRecord> = choices
                .iter()
                .enumerate()
                .filter(|(_, (l, r, _))| l != r)
                .map(|(i, &(l, r, left))| vote(i, names[l], names[r], if left { Choice::Left } else { Choice::Right }))
                .collect();
            let wr = win_rates(&votes, &methods).unwrap();
            let mut tally = Tally::new(names);
            for v in &votes {
                tally.apply(v);
            }
            prop_assert_eq!(&wr.methods, &tally.methods);
            let total_wins: u64 = wr.methods.values().map(|t| t.wins).sum();
            prop_assert_eq!(total_wins as usize, votes.len());
        }
    }
}
