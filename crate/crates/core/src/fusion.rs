//! Trained-rule score fusion and the identification / verification metrics:
//! minimum detection cost, DET points and identification rate.
//!
//! All scores are distances: smaller means more likely genuine, and a trial is
//! accepted iff its score is `<= threshold`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dtw::DtwConfig;
use crate::error::{Error, Result};
use crate::model::UserModel;
use crate::signal::{FeatureMatrix, SplitSpec};

/// Distances of one test signature against the two channel-set models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub d1: f64,
    pub d2: Option<f64>,
}

impl ScorePair {
    pub fn new(d1: f64, d2: Option<f64>) -> Self {
        ScorePair { d1, d2 }
    }

    /// `a * p` for both components.
    pub fn scaled(&self, a: f64) -> Self {
        ScorePair::new(self.d1 * a, self.d2.map(|d| d * a))
    }
}

/// `alpha * d1 + (1 - alpha) * d2`. Without a second score only `alpha = 1` is defined.
pub fn fuse(pair: ScorePair, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    match pair.d2 {
        Some(d2) => Ok(alpha * pair.d1 + (1.0 - alpha) * d2),
        None if alpha == 1.0 => Ok(pair.d1),
        None => Err(Error::AlphaNeedsSet2(alpha)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub c_miss: f64,
    pub c_fa: f64,
    pub p_true: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            c_miss: 1.0,
            c_fa: 1.0,
            p_true: 0.5,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_miss > 0.0 && self.c_fa > 0.0) {
            return Err(Error::InvalidConfig("costs must be positive".into()));
        }
        if !(self.p_true > 0.0 && self.p_true < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "p_true {} must lie strictly between 0 and 1",
                self.p_true
            )));
        }
        Ok(())
    }
}

/// `C_miss * P_miss * P_true + C_fa * P_fa * (1 - P_true)`, rates as fractions.
pub fn dcf(p_miss: f64, p_fa: f64, cost: &CostConfig) -> f64 {
    cost.c_miss * p_miss * cost.p_true + cost.c_fa * p_fa * (1.0 - cost.p_true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinDcf {
    pub min_dcf: f64,
    /// Smallest threshold reaching the minimum; `-inf` means reject everything.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_miss: f64,
}

fn sorted_scores(xs: &[f64], what: &'static str) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Empty(what));
    }
    if xs.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidConfig(format!("{what}: NaN score")));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Error rates at every distinct threshold: `-inf` (reject all) followed by
/// each distinct pooled score in ascending order. Beyond the largest score
/// nothing changes, so no `+inf` point is emitted.
pub fn det_points(genuine: &[f64], impostor: &[f64]) -> Result<Vec<DetPoint>> {
    let g = sorted_scores(genuine, "no genuine scores")?;
    let i = sorted_scores(impostor, "no impostor scores")?;
    let mut thresholds: Vec<f64> = g.iter().chain(&i).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (ng, ni) = (g.len() as f64, i.len() as f64);
    let mut out = Vec::with_capacity(thresholds.len() + 1);
    out.push(DetPoint {
        threshold: f64::NEG_INFINITY,
        p_fa: 0.0,
        p_miss: 1.0,
    });
    let (mut gi, mut ii) = (0, 0);
    for th in thresholds {
        while gi < g.len() && g[gi] <= th {
            gi += 1;
        }
        while ii < i.len() && i[ii] <= th {
            ii += 1;
        }
        out.push(DetPoint {
            threshold: th,
            p_fa: ii as f64 / ni,
            p_miss: (g.len() - gi) as f64 / ng,
        });
    }
    Ok(out)
}

pub fn min_dcf(genuine: &[f64], impostor: &[f64], cost: &CostConfig) -> Result<MinDcf> {
    let mut best = MinDcf {
        min_dcf: f64::INFINITY,
        threshold: f64::NEG_INFINITY,
    };
    for p in det_points(genuine, impostor)? {
        let c = dcf(p.p_miss, p.p_fa, cost);
        if c < best.min_dcf {
            best = MinDcf {
                min_dcf: c,
                threshold: p.threshold,
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Genuine,
    RandomForgery,
    SkilledForgery,
}

impl TrialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialKind::Genuine => "genuine",
            TrialKind::RandomForgery => "random_forgery",
            TrialKind::SkilledForgery => "skilled_forgery",
        }
    }
}

impl fmt::Display for TrialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genuine" => Ok(TrialKind::Genuine),
            "random_forgery" | "random" => Ok(TrialKind::RandomForgery),
            "skilled_forgery" | "skilled" => Ok(TrialKind::SkilledForgery),
            _ => Err(Error::InvalidConfig(format!("unknown trial kind `{s}`"))),
        }
    }
}

/// Which impostor trials a verification metric is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpostorKind {
    Random,
    Skilled,
}

impl ImpostorKind {
    pub fn trial_kind(self) -> TrialKind {
        match self {
            ImpostorKind::Random => TrialKind::RandomForgery,
            ImpostorKind::Skilled => TrialKind::SkilledForgery,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub claimed: String,
    pub true_user: String,
    pub kind: TrialKind,
    pub pair: ScorePair,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub trials: Vec<Trial>,
}

impl ScoreTable {
    pub fn has_set2(&self) -> bool {
        !self.trials.is_empty() && self.trials.iter().all(|t| t.pair.d2.is_some())
    }

    /// Fused genuine and impostor score lists at one alpha.
    pub fn fused(&self, impostor: ImpostorKind, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let want = impostor.trial_kind();
        let mut gen = Vec::new();
        let mut imp = Vec::new();
        for t in &self.trials {
            if t.kind == TrialKind::Genuine {
                gen.push(fuse(t.pair, alpha)?);
            } else if t.kind == want {
                imp.push(fuse(t.pair, alpha)?);
            }
        }
        Ok((gen, imp))
    }

    pub fn min_dcf_at(
        &self,
        impostor: ImpostorKind,
        alpha: f64,
        cost: &CostConfig,
    ) -> Result<MinDcf> {
        let (g, i) = self.fused(impostor, alpha)?;
        min_dcf(&g, &i, cost)
    }
}

/// `{0, step, 2*step, ..., 1}` with both endpoints always present.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "alpha grid step {step} must lie in (0, 0.5]"
        )));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() < 1e-9 {
        let n = n as usize;
        return Ok((0..=n).map(|i| i as f64 / n as f64).collect());
    }
    let mut grid: Vec<f64> = (0..)
        .map(|i| i as f64 * step)
        .take_while(|&a| a < 1.0 - 1e-12)
        .collect();
    grid.push(1.0);
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub alpha_opt: f64,
    pub min_dcf_at_opt: f64,
    pub per_alpha: Vec<(f64, MinDcf)>,
}

impl AlphaSweep {
    pub fn at(&self, alpha: f64) -> Option<MinDcf> {
        self.per_alpha
            .iter()
            .find(|(a, _)| *a == alpha)
            .map(|(_, m)| *m)
    }
}

/// Evaluates minDCF on every grid alpha and keeps the smallest alpha with the
/// lowest cost. Tables without second scores only evaluate `alpha = 1`.
pub fn sweep_alpha(
    table: &ScoreTable,
    impostor: ImpostorKind,
    cost: &CostConfig,
    grid_step: f64,
) -> Result<AlphaSweep> {
    cost.validate()?;
    if table.trials.is_empty() {
        return Err(Error::Empty("score table has no trials"));
    }
    let grid = if table.has_set2() {
        alpha_grid(grid_step)?
    } else {
        alpha_grid(grid_step)?;
        vec![1.0]
    };
    let mut per_alpha = Vec::with_capacity(grid.len());
    for a in grid {
        per_alpha.push((a, table.min_dcf_at(impostor, a, cost)?));
    }
    let (alpha_opt, best) = per_alpha
        .iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1.min_dcf < best.1.min_dcf {
                cur
            } else {
                best
            }
        })
        .expect("grid is never empty");
    Ok(AlphaSweep {
        alpha_opt,
        min_dcf_at_opt: best.min_dcf,
        per_alpha,
    })
}

/// Smallest (score, user) pair; equal scores resolve to the lexicographically
/// smallest user id.
pub(crate) fn better(a: (f64, &str), b: (f64, &str)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Equal => a.1 < b.1,
        Ordering::Greater => false,
    }
}

/// 1:N search: the model with the smallest fused distance names the user.
pub fn identify(
    models: &[UserModel],
    test: &FeatureMatrix,
    spec: &SplitSpec,
    alpha: f64,
    dtw: &DtwConfig,
) -> Result<String> {
    let first = models.first().ok_or(Error::Empty("no enrolled models"))?;
    if models.iter().any(|m| m.engine() != first.engine()) {
        return Err(Error::EngineMismatch);
    }
    let mut best: Option<(f64, &str)> = None;
    for m in models {
        let s = fuse(m.score(test, spec, dtw)?, alpha)?;
        let cand = (s, m.user_id.as_str());
        if best.is_none_or(|b| better(cand, b)) {
            best = Some(cand);
        }
    }
    Ok(best.expect("models is non-empty").1.to_string())
}

/// Fraction of `(true_user, signature)` probes that `identify` assigns correctly.
pub fn idr(
    models: &[UserModel],
    tests: &[(String, FeatureMatrix)],
    spec: &SplitSpec,
    alpha: f64,
    dtw: &DtwConfig,
) -> Result<f64> {
    if tests.is_empty() {
        return Err(Error::Empty("no identification probes"));
    }
    let mut hits = 0usize;
    for (truth, m) in tests {
        if identify(models, m, spec, alpha, dtw)? == *truth {
            hits += 1;
        }
    }
    Ok(hits as f64 / tests.len() as f64)
}
