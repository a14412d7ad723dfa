//! Logistic influence classifier and the snowball labeling loop.
//!
//! Accounts are scored from four activity features (retweet rate, reply
//! rate, link rate, median text length). The model standardizes features
//! with its own per-feature scaler, applies a five-coefficient logistic
//! form, and calls an account media-driven (MDI) when the probability
//! clears the threshold, interaction-driven (IDI) otherwise. The snowball
//! loop alternates extracting the most-retweeted unlabeled accounts,
//! labeling them with the current model, and refitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{aggregate_account_stats, AccountStats, Document};

/// The two influence classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InfluenceClass {
    /// Media-driven influence: link-heavy broadcast behavior. Label 1.
    Mdi,
    /// Interaction-driven influence: reply-heavy conversational behavior. Label 0.
    Idi,
}

impl InfluenceClass {
    pub fn label(self) -> u8 {
        match self {
            InfluenceClass::Mdi => 1,
            InfluenceClass::Idi => 0,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            1 => Some(InfluenceClass::Mdi),
            0 => Some(InfluenceClass::Idi),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InfluenceClass::Mdi => "MDI",
            InfluenceClass::Idi => "IDI",
        }
    }
}

impl std::fmt::Display for InfluenceClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const FEATURE_NAMES: [&str; 4] = ["retweet_rate", "reply_rate", "link_rate", "median_length"];

/// Per-account classifier inputs.
///
/// Derived from [`AccountStats`], the rates land in [0, 1] and the length
/// is non-negative; the struct itself only requires finite values so
/// synthetic feature vectors can exercise the model on wider ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityFeatures {
    /// x1: retweet_count / tweet_count.
    pub retweet_rate: f64,
    /// x2: reply_count / tweet_count.
    pub reply_rate: f64,
    /// x3: link_count / tweet_count.
    pub link_rate: f64,
    /// x4: median raw text length in characters.
    pub median_length: f64,
}

impl ActivityFeatures {
    pub fn new(retweet_rate: f64, reply_rate: f64, link_rate: f64, median_length: f64) -> Self {
        ActivityFeatures { retweet_rate, reply_rate, link_rate, median_length }
    }

    pub fn from_stats(stats: &AccountStats) -> Self {
        let n = stats.tweet_count.max(1) as f64;
        ActivityFeatures {
            retweet_rate: stats.retweet_count as f64 / n,
            reply_rate: stats.reply_count as f64 / n,
            link_rate: stats.link_count as f64 / n,
            median_length: stats.median_length,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.retweet_rate, self.reply_rate, self.link_rate, self.median_length]
    }

    fn check_finite(&self) -> Result<()> {
        for (value, name) in self.as_array().iter().zip(FEATURE_NAMES) {
            if !value.is_finite() {
                return Err(Error::NonFiniteFeature { feature: name });
            }
        }
        Ok(())
    }
}

/// One feature's standardization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub mean: f64,
    pub std: f64,
}

/// A labeled account, either from the seed file or from the model.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAccount {
    pub account_id: String,
    pub label: InfluenceClass,
    pub source: LabelSource,
    /// Model probability; absent for manual labels.
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Manual,
    Model,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Manual => "manual",
            LabelSource::Model => "model",
        }
    }
}

/// The logistic model: intercept plus four feature coefficients applied to
/// scaler-standardized features, with a decision threshold on the class probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LRModel {
    /// Intercept followed by the four feature coefficients.
    pub beta: [f64; 5],
    /// Standardization applied to raw features before the dot product.
    pub scaler: [FeatureScale; 4],
    /// MDI decision cutoff on the class probability, in (0, 1).
    pub threshold: f64,
}

impl LRModel {
    /// Built-in default coefficient set: intercept -0.96, retweet 0.35,
    /// reply -1.76, link 2.82, length 0.61, threshold 0.7.
    ///
    /// Shipped with an identity scaler because the scaling convention these
    /// coefficients were estimated under is not known; prefer refitting via
    /// [`fit_lr`] when labeled data is available.
    pub fn default_model() -> Self {
        LRModel {
            beta: [-0.96, 0.35, -1.76, 2.82, 0.61],
            scaler: identity_scaler(),
            threshold: 0.7,
        }
    }

    fn standardize(&self, x: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (x[i] - self.scaler[i].mean) / self.scaler[i].std;
        }
        out
    }

    /// Probability of the MDI class. Always finite and inside (0, 1).
    pub fn score(&self, features: &ActivityFeatures) -> Result<f64> {
        features.check_finite()?;
        let x = self.standardize(features.as_array());
        let g = self.beta[0]
            + self.beta[1] * x[0]
            + self.beta[2] * x[1]
            + self.beta[3] * x[2]
            + self.beta[4] * x[3];
        Ok(sigmoid(g))
    }

    /// Decision rule: MDI iff the probability reaches the threshold.
    pub fn classify(&self, features: &ActivityFeatures) -> Result<(InfluenceClass, f64)> {
        let p = self.score(features)?;
        let class =
            if p >= self.threshold { InfluenceClass::Mdi } else { InfluenceClass::Idi };
        Ok((class, p))
    }

    /// Coefficients mapped back to raw-feature space, so that
    /// applying them to unstandardized features gives the model's g.
    pub fn raw_coefficients(&self) -> [f64; 5] {
        let mut raw = [0.0; 5];
        raw[0] = self.beta[0];
        for i in 0..4 {
            raw[i + 1] = self.beta[i + 1] / self.scaler[i].std;
            raw[0] -= self.beta[i + 1] * self.scaler[i].mean / self.scaler[i].std;
        }
        raw
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::data(format!(
                "model threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        for (scale, name) in self.scaler.iter().zip(FEATURE_NAMES) {
            if !(scale.std > 0.0) || !scale.std.is_finite() || !scale.mean.is_finite() {
                return Err(Error::data(format!("model scaler for {name} is degenerate")));
            }
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::data("model coefficients must be finite"));
        }
        Ok(())
    }
}

pub fn identity_scaler() -> [FeatureScale; 4] {
    [FeatureScale { mean: 0.0, std: 1.0 }; 4]
}

/// Numerically stable logistic function, clamped into the open interval
/// so downstream log/threshold arithmetic never sees exactly 0 or 1.
fn sigmoid(g: f64) -> f64 {
    let p = if g >= 0.0 { 1.0 / (1.0 + (-g).exp()) } else { let e = g.exp(); e / (1.0 + e) };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// log(1 + e^g) without overflow for large |g|.
fn softplus(g: f64) -> f64 {
    g.max(0.0) + (-g.abs()).exp().ln_1p()
}

/// L2-penalized mean log-likelihood over standardized features.
/// The data term is averaged so its scale, the gradient tolerance, and the
/// penalty weight are all independent of sample size. The intercept is not
/// penalized.
pub fn penalized_log_likelihood(beta: &[f64; 5], xs: &[[f64; 4]], ys: &[f64], l2: f64) -> f64 {
    let mut ll = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let g = beta[0] + beta[1] * x[0] + beta[2] * x[1] + beta[3] * x[2] + beta[4] * x[3];
        ll += y * g - softplus(g);
    }
    let penalty: f64 = beta[1..].iter().map(|b| b * b).sum();
    ll / xs.len() as f64 - 0.5 * l2 * penalty
}

/// Analytic gradient of [`penalized_log_likelihood`].
pub fn penalized_gradient(beta: &[f64; 5], xs: &[[f64; 4]], ys: &[f64], l2: f64) -> [f64; 5] {
    let mut grad = [0.0; 5];
    for (x, &y) in xs.iter().zip(ys) {
        let g = beta[0] + beta[1] * x[0] + beta[2] * x[1] + beta[3] * x[2] + beta[4] * x[3];
        let resid = y - sigmoid(g);
        grad[0] += resid;
        for i in 0..4 {
            grad[i + 1] += resid * x[i];
        }
    }
    let n = xs.len() as f64;
    for g in grad.iter_mut() {
        *g /= n;
    }
    for i in 1..5 {
        grad[i] -= l2 * beta[i];
    }
    grad
}

/// True when the fitted direction puts every example strictly on its own
/// side, so scaling the coefficients up would increase the likelihood forever.
fn perfectly_separated(beta: &[f64; 5], xs: &[[f64; 4]], ys: &[f64]) -> bool {
    if beta.iter().all(|b| *b == 0.0) {
        return false;
    }
    xs.iter().zip(ys).all(|(x, y)| {
        let g = beta[0] + (0..4).map(|i| beta[i + 1] * x[i]).sum::<f64>();
        (2.0 * y - 1.0) * g > 0.0
    })
}

/// Knobs for [`fit_lr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Decision threshold stamped on the fitted model.
    pub threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { l2: 1e-3, max_iter: 10_000, tol: 1e-8, threshold: 0.7 }
    }
}

/// A fitted model plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: LRModel,
    pub converged: bool,
    pub iterations: usize,
    pub warning: Option<String>,
}

/// Fits the scaler on the examples, then maximizes the penalized
/// log-likelihood by gradient ascent with backtracking line search.
/// Stops when the gradient max-norm drops below `tol` or at `max_iter`.
pub fn fit_lr(
    examples: &[(ActivityFeatures, InfluenceClass)],
    opts: &FitOptions,
) -> Result<FitOutcome> {
    if examples.len() < 2 {
        return Err(Error::TooFewExamples { found: examples.len(), need: 2 });
    }
    if opts.l2 < 0.0 {
        return Err(Error::usage(format!("l2 must be >= 0, got {}", opts.l2)));
    }
    let mdi = examples.iter().filter(|(_, c)| *c == InfluenceClass::Mdi).count();
    if mdi == 0 || mdi == examples.len() {
        return Err(Error::SingleClass);
    }
    for (f, _) in examples {
        f.check_finite()?;
    }

    let scaler = fit_scaler(examples.iter().map(|(f, _)| f.as_array()))?;
    let xs: Vec<[f64; 4]> = examples
        .iter()
        .map(|(f, _)| {
            let raw = f.as_array();
            std::array::from_fn(|i| (raw[i] - scaler[i].mean) / scaler[i].std)
        })
        .collect();
    let ys: Vec<f64> = examples.iter().map(|(_, c)| c.label() as f64).collect();

    let mut beta = [0.0f64; 5];
    let mut ll = penalized_log_likelihood(&beta, &xs, &ys, opts.l2);
    let mut converged = false;
    let mut iterations = 0;
    let mut stalled = false;
    // Gradient ascent with a Barzilai-Borwein step guess and a monotone
    // Armijo backtracking safeguard.
    let mut prev: Option<([f64; 5], [f64; 5])> = None;
    // Mean-scale curvature of the logistic loss is at most 1/4, so a unit
    // step is a safe starting guess before the Barzilai-Borwein estimate
    // takes over.
    let fallback = 1.0;
    for _ in 0..opts.max_iter {
        let grad = penalized_gradient(&beta, &xs, &ys, opts.l2);
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < opts.tol {
            converged = true;
            break;
        }
        let mut t = fallback;
        if let Some((pb, pg)) = prev {
            let mut sy = 0.0;
            let mut yy = 0.0;
            for i in 0..5 {
                let s = beta[i] - pb[i];
                let y = pg[i] - grad[i];
                sy += s * y;
                yy += y * y;
            }
            if sy > 0.0 && yy > 0.0 {
                t = (sy / yy).clamp(1e-16, 1e12);
            }
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        let mut accepted = false;
        for _ in 0..80 {
            let cand: [f64; 5] = std::array::from_fn(|i| beta[i] + t * grad[i]);
            if cand == beta {
                // The step underflowed against beta; halving further can
                // only re-accept a no-op, so report a stall instead.
                break;
            }
            let cand_ll = penalized_log_likelihood(&cand, &xs, &ys, opts.l2);
            if cand_ll >= ll + 1e-4 * t * gnorm2 {
                prev = Some((beta, grad));
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        iterations += 1;
        if !accepted {
            // No representable step improves the objective any further.
            stalled = true;
            break;
        }
    }

    let mut warning = if converged {
        None
    } else if stalled {
        Some("fit stalled below the requested tolerance at f64 precision".to_string())
    } else {
        Some(format!("fit stopped at max_iter {} without converging", opts.max_iter))
    };
    if opts.l2 == 0.0 && perfectly_separated(&beta, &xs, &ys) {
        let extra = "training data is linearly separable; with l2 = 0 the maximizer is \
                     unbounded and the returned coefficients are where the search stopped";
        warning = Some(match warning {
            Some(w) => format!("{w}; {extra}"),
            None => extra.to_string(),
        });
    }

    Ok(FitOutcome {
        model: LRModel { beta, scaler, threshold: opts.threshold },
        converged,
        iterations,
        warning,
    })
}

/// Population-statistics scaler fit. A constant column is a hard error
/// naming the feature, since it cannot be standardized.
fn fit_scaler(rows: impl Iterator<Item = [f64; 4]> + Clone) -> Result<[FeatureScale; 4]> {
    let mut n = 0usize;
    let mut min = [f64::INFINITY; 4];
    let mut max = [f64::NEG_INFINITY; 4];
    let mut sum = [0.0f64; 4];
    for row in rows.clone() {
        n += 1;
        for i in 0..4 {
            min[i] = min[i].min(row[i]);
            max[i] = max[i].max(row[i]);
            sum[i] += row[i];
        }
    }
    let mut scaler = identity_scaler();
    for i in 0..4 {
        if min[i] == max[i] {
            return Err(Error::ZeroVariance { feature: FEATURE_NAMES[i] });
        }
        scaler[i].mean = sum[i] / n as f64;
    }
    let mut sq = [0.0f64; 4];
    for row in rows {
        for i in 0..4 {
            let d = row[i] - scaler[i].mean;
            sq[i] += d * d;
        }
    }
    for i in 0..4 {
        scaler[i].std = (sq[i] / n as f64).sqrt();
    }
    Ok(scaler)
}

/// Knobs for [`snowball_label`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnowballOptions {
    /// Accounts labeled per iteration.
    pub batch_size: usize,
    /// Stop once at least this many accounts are labeled.
    pub target: usize,
    pub fit: FitOptions,
}

impl Default for SnowballOptions {
    fn default() -> Self {
        SnowballOptions { batch_size: 170, target: 1750, fit: FitOptions::default() }
    }
}

/// What the snowball loop produced.
#[derive(Debug, Clone)]
pub struct SnowballOutcome {
    pub labels: Vec<LabeledAccount>,
    pub model: LRModel,
    pub fit_passes: usize,
    pub warnings: Vec<String>,
}

/// Grows the labeled set from seeds: rank unlabeled archive authors by
/// retweet mentions received from the labeled set, label the top batch
/// with the current model, refit, repeat until `target` is reached or no
/// unlabeled account is reachable.
///
/// Candidates are accounts that author at least one archive document;
/// accounts that are only retweet targets have no feature inputs and are
/// never rankable. Mention ties break by ascending account id.
pub fn snowball_label(
    docs: &[Document],
    seeds: &[LabeledAccount],
    opts: &SnowballOptions,
) -> Result<SnowballOutcome> {
    if seeds.is_empty() {
        return Err(Error::usage("snowball requires a non-empty seed set"));
    }
    if opts.batch_size < 1 {
        return Err(Error::usage("batch size must be >= 1"));
    }
    if opts.target < seeds.len() {
        return Err(Error::usage(format!(
            "target {} is below the seed count {}",
            opts.target,
            seeds.len()
        )));
    }
    let stats = aggregate_account_stats(docs);
    let mut missing: Vec<String> = seeds
        .iter()
        .filter(|s| !stats.contains_key(&s.account_id))
        .map(|s| s.account_id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::SeedsNotInArchive { ids: missing });
    }

    let features: BTreeMap<&str, ActivityFeatures> = stats
        .iter()
        .map(|(id, st)| (id.as_str(), ActivityFeatures::from_stats(st)))
        .collect();

    let mut labels: Vec<LabeledAccount> = seeds.to_vec();
    let mut labeled: HashSet<String> = seeds.iter().map(|s| s.account_id.clone()).collect();
    let mut warnings = Vec::new();

    let refit = |labels: &[LabeledAccount], warnings: &mut Vec<String>| -> Result<LRModel> {
        let examples: Vec<(ActivityFeatures, InfluenceClass)> =
            labels.iter().map(|l| (features[l.account_id.as_str()], l.label)).collect();
        let outcome = fit_lr(&examples, &opts.fit)?;
        if let Some(w) = outcome.warning {
            warnings.push(w);
        }
        Ok(outcome.model)
    };

    let mut model = refit(&labels, &mut warnings)?;
    let mut fit_passes = 1;

    while labels.len() < opts.target {
        // Rank unlabeled authors by retweet mentions from the labeled set.
        let mut mentions: HashMap<&str, u64> = HashMap::new();
        for doc in docs {
            if !labeled.contains(&doc.author_id) {
                continue;
            }
            if let Some(rt) = &doc.retweet_of_author {
                if !labeled.contains(rt) && features.contains_key(rt.as_str()) {
                    *mentions.entry(rt.as_str()).or_insert(0) += 1;
                }
            }
        }
        if mentions.is_empty() {
            warnings.push("no reachable accounts".to_string());
            break;
        }
        let mut ranked: Vec<(&str, u64)> = mentions.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(opts.batch_size);

        for (account, _) in ranked {
            let (label, p) = model.classify(&features[account])?;
            labels.push(LabeledAccount {
                account_id: account.to_string(),
                label,
                source: LabelSource::Model,
                probability: Some(p),
            });
            labeled.insert(account.to_string());
        }
        model = refit(&labels, &mut warnings)?;
        fit_passes += 1;
    }

    Ok(SnowballOutcome { labels, model, fit_passes, warnings })
}

// ---- file formats ----

#[derive(Serialize, Deserialize)]
struct LabelRow {
    account_id: String,
    label: u8,
    source: String,
}

/// Reads a labels/seeds CSV with header `account_id,label,source`.
pub fn read_labels_csv(path: &Path) -> Result<Vec<LabeledAccount>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::data(format!("{}: {other:?}", path.display())),
        })?;
    let mut out = Vec::new();
    for (idx, row) in reader.deserialize::<LabelRow>().enumerate() {
        let row = row.map_err(|e| {
            Error::data(format!("{} row {}: {e}", path.display(), idx + 1))
        })?;
        let label = InfluenceClass::from_label(row.label).ok_or_else(|| {
            Error::data(format!(
                "{} row {}: label must be 0 or 1, got {}",
                path.display(),
                idx + 1,
                row.label
            ))
        })?;
        let source = match row.source.as_str() {
            "manual" => LabelSource::Manual,
            "model" => LabelSource::Model,
            other => {
                return Err(Error::data(format!(
                    "{} row {}: source must be manual or model, got {other:?}",
                    path.display(),
                    idx + 1
                )))
            }
        };
        let probability = None;
        out.push(LabeledAccount { account_id: row.account_id, label, source, probability });
    }
    Ok(out)
}

/// Writes labels in the same CSV format `read_labels_csv` accepts.
pub fn write_labels_csv(path: &Path, labels: &[LabeledAccount]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::data(format!("{}: {other:?}", path.display())),
        })?;
    for l in labels {
        writer
            .serialize(LabelRow {
                account_id: l.account_id.clone(),
                label: l.label.label(),
                source: l.source.as_str().to_string(),
            })
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads and validates a model JSON file.
pub fn read_model_json(path: &Path) -> Result<LRModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: LRModel = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    model.validate()?;
    Ok(model)
}

/// Writes a model as pretty-printed JSON.
pub fn write_model_json(path: &Path, model: &LRModel) -> Result<()> {
    let text = serde_json::to_string_pretty(model)
        .map_err(|e| Error::data(format!("serialize model: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
