//! End-to-end experiments: feature extraction, enrollment, trial scoring,
//! alpha selection and report rows.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dtw::{dtw_enroll, DtwConfig};
use crate::error::{Error, Result};
use crate::features::{extract, DeltaConfig};
use crate::fusion::{
    alpha_grid, better, det_points, fuse, sweep_alpha, CostConfig, DetPoint, ImpostorKind,
    ScorePair, ScoreTable, Trial, TrialKind,
};
use crate::io::{split_protocol, write_det_csv, write_score_table, Protocol, ProtocolSplit};
use crate::model::{Engine, UserModel};
use crate::signal::{Dataset, FeatureMatrix, SplitName, SplitSpec};
use crate::vq::{vq_enroll, LbgConfig};

/// How the fusion weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Tuned on the same trials it is reported on (optimistic).
    #[default]
    Oracle,
    /// Tuned on even-indexed users, reported on odd-indexed users.
    HeldOut,
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaMode::Oracle => "oracle",
            AlphaMode::HeldOut => "held_out",
        })
    }
}

impl FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "oracle" => Ok(AlphaMode::Oracle),
            "held_out" | "heldout" => Ok(AlphaMode::HeldOut),
            _ => Err(Error::InvalidConfig(format!("unknown alpha mode `{s}`"))),
        }
    }
}

/// Everything about a run except the grid cell being evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub delta: DeltaConfig,
    pub grid_step: f64,
    pub cost: CostConfig,
    pub dtw: DtwConfig,
    pub lbg: LbgConfig,
    pub alpha_mode: AlphaMode,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            delta: DeltaConfig::default(),
            grid_step: 0.01,
            cost: CostConfig::default(),
            dtw: DtwConfig::default(),
            lbg: LbgConfig::default(),
            alpha_mode: AlphaMode::Oracle,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        alpha_grid(self.grid_step)?;
        self.cost.validate()?;
        self.lbg.validate()
    }
}

/// One cell of the protocol grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Experiment {
    pub engine: Engine,
    pub n_train: usize,
    pub split: SplitName,
    /// Codebook size in bits; `None` for DTW.
    pub bits: Option<u32>,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        match (self.engine, self.bits) {
            (Engine::Vq, None) => Err(Error::InvalidConfig("vq engine needs bits".into())),
            (Engine::Vq, Some(b)) if !(1..=16).contains(&b) => {
                Err(Error::InvalidConfig(format!("bits {b} outside 1..=16")))
            }
            (Engine::Dtw, Some(_)) => Err(Error::InvalidConfig("dtw engine takes no bits".into())),
            _ if self.n_train == 0 => {
                Err(Error::InvalidConfig("n_train must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Short label such as `vq5_TEST1_b6` or `dtw1_WHOLE`.
    pub fn label(&self) -> String {
        let mut s = format!("{}{}_{}", self.engine, self.n_train, self.split);
        if let Some(b) = self.bits {
            s.push_str(&format!("_b{b}"));
        }
        s
    }
}

/// Cartesian product of engines, protocols, splits and (VQ only) bit depths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub engines: Vec<Engine>,
    pub n_train: Vec<usize>,
    pub splits: Vec<SplitName>,
    pub bits: Vec<u32>,
}

impl Grid {
    pub fn experiments(&self) -> Vec<Experiment> {
        let mut out = Vec::new();
        for &engine in &self.engines {
            for &n_train in &self.n_train {
                for &split in &self.splits {
                    match engine {
                        Engine::Dtw => out.push(Experiment {
                            engine,
                            n_train,
                            split,
                            bits: None,
                        }),
                        Engine::Vq => out.extend(self.bits.iter().map(|&b| Experiment {
                            engine,
                            n_train,
                            split,
                            bits: Some(b),
                        })),
                    }
                }
            }
        }
        out
    }
}

/// Splits the dataset by protocol and extracts z-scored features for every signature.
pub fn extract_protocol(
    ds: &Dataset,
    n_train: usize,
    delta: DeltaConfig,
) -> Result<ProtocolSplit<FeatureMatrix>> {
    let raw = split_protocol(ds, Protocol::new(n_train)?)?;
    let users = raw
        .users
        .par_iter()
        .map(|u| {
            let f = |v: &[crate::signal::RawSignature]| {
                v.iter()
                    .map(|s| extract(s, delta))
                    .collect::<Result<Vec<_>>>()
            };
            Ok(crate::io::UserSplit {
                user_id: u.user_id.clone(),
                train: f(&u.train)?,
                test_genuine: f(&u.test_genuine)?,
                test_skilled: f(&u.test_skilled)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolSplit { users })
}

pub fn enroll(
    user_id: &str,
    train: &[FeatureMatrix],
    exp: &Experiment,
    lbg: &LbgConfig,
) -> Result<UserModel> {
    let spec = SplitSpec::new(exp.split);
    match exp.engine {
        Engine::Vq => vq_enroll(user_id, train, &spec, exp.bits.unwrap_or(0), lbg),
        Engine::Dtw => dtw_enroll(user_id, train, &spec),
    }
}

/// Enrolls every user in parallel; models come back in user order.
pub fn enroll_all(
    split: &ProtocolSplit<FeatureMatrix>,
    exp: &Experiment,
    lbg: &LbgConfig,
) -> Result<Vec<UserModel>> {
    exp.validate()?;
    split
        .users
        .par_iter()
        .map(|u| enroll(&u.user_id, &u.train, exp, lbg))
        .collect()
}

/// Raw scores for every probe, kept in a form that supports both
/// verification tables and 1:N identification.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    /// Model owners, in model order.
    pub users: Vec<String>,
    /// Genuine test probes: owner index and one pair per model.
    pub genuine: Vec<(usize, Vec<ScorePair>)>,
    /// Skilled forgeries: target index and the pair against the target's model.
    pub skilled: Vec<(usize, ScorePair)>,
}

/// Scores every genuine test probe against every model and every skilled
/// forgery against its target's model.
pub fn score_all(
    models: &[UserModel],
    split: &ProtocolSplit<FeatureMatrix>,
    spec: &SplitSpec,
    dtw: &DtwConfig,
) -> Result<ScoreMatrix> {
    if models.len() != split.users.len()
        || models
            .iter()
            .zip(&split.users)
            .any(|(m, u)| m.user_id != u.user_id)
    {
        return Err(Error::Shape(
            "models do not line up with protocol users".into(),
        ));
    }
    let probes: Vec<(usize, &FeatureMatrix)> = split
        .users
        .iter()
        .enumerate()
        .flat_map(|(i, u)| u.test_genuine.iter().map(move |m| (i, m)))
        .collect();
    let genuine = probes
        .par_iter()
        .map(|&(i, m)| {
            let row = models
                .iter()
                .map(|model| model.score(m, spec, dtw))
                .collect::<Result<Vec<_>>>()?;
            Ok((i, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let forgeries: Vec<(usize, &FeatureMatrix)> = split
        .users
        .iter()
        .enumerate()
        .flat_map(|(i, u)| u.test_skilled.iter().map(move |m| (i, m)))
        .collect();
    let skilled = forgeries
        .par_iter()
        .map(|&(i, m)| Ok((i, models[i].score(m, spec, dtw)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreMatrix {
        users: models.iter().map(|m| m.user_id.clone()).collect(),
        genuine,
        skilled,
    })
}

impl ScoreMatrix {
    pub fn has_set2(&self) -> bool {
        self.genuine
            .iter()
            .flat_map(|(_, r)| r)
            .chain(self.skilled.iter().map(|(_, p)| p))
            .all(|p| p.d2.is_some())
    }

    /// Verification trials for the claimed users accepted by `keep`: per user,
    /// genuine trials, then random forgeries (other users' genuine probes),
    /// then skilled forgeries.
    pub fn table_for(&self, keep: impl Fn(usize) -> bool) -> ScoreTable {
        let mut trials = Vec::new();
        for (c, claimed) in self.users.iter().enumerate().filter(|(c, _)| keep(*c)) {
            let trial = |t: usize, kind, pair| Trial {
                claimed: claimed.clone(),
                true_user: self.users[t].clone(),
                kind,
                pair,
            };
            for (t, row) in self.genuine.iter().filter(|(t, _)| *t == c) {
                trials.push(trial(*t, TrialKind::Genuine, row[c]));
            }
            for (t, row) in self.genuine.iter().filter(|(t, _)| *t != c) {
                trials.push(trial(*t, TrialKind::RandomForgery, row[c]));
            }
            for (_, p) in self.skilled.iter().filter(|(t, _)| *t == c) {
                trials.push(trial(c, TrialKind::SkilledForgery, *p));
            }
        }
        ScoreTable { trials }
    }

    pub fn table(&self) -> ScoreTable {
        self.table_for(|_| true)
    }

    /// Identification rate over the genuine probes whose owner passes `keep`.
    pub fn idr_for(&self, alpha: f64, keep: impl Fn(usize) -> bool) -> Result<f64> {
        let mut hits = 0usize;
        let mut total = 0usize;
        for (truth, row) in self.genuine.iter().filter(|(t, _)| keep(*t)) {
            let mut best: Option<(f64, &str)> = None;
            for (pair, user) in row.iter().zip(&self.users) {
                let cand = (fuse(*pair, alpha)?, user.as_str());
                if best.is_none_or(|b| better(cand, b)) {
                    best = Some(cand);
                }
            }
            total += 1;
            if best.map(|b| b.1) == Some(self.users[*truth].as_str()) {
                hits += 1;
            }
        }
        if total == 0 {
            return Err(Error::Empty("no identification probes"));
        }
        Ok(hits as f64 / total as f64)
    }

    pub fn idr(&self, alpha: f64) -> Result<f64> {
        self.idr_for(alpha, |_| true)
    }
}

/// Metric value at the tuned alpha and at both endpoints. `alpha_0` is absent
/// when the split has no second set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cells {
    pub alpha_opt: f64,
    pub alpha_0: Option<f64>,
    pub alpha_1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaOpt {
    pub idr: f64,
    pub random: f64,
    pub skilled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub users: usize,
    pub genuine: usize,
    pub random_forgery: usize,
    pub skilled_forgery: usize,
}

/// One report line. IDR and DCF values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub test_name: SplitName,
    pub engine: Engine,
    pub n_train: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bits: Option<u32>,
    pub p_true: f64,
    pub grid_step: f64,
    pub alpha_mode: AlphaMode,
    pub alpha_opt: AlphaOpt,
    pub idr: Cells,
    pub dcf_random: Cells,
    pub dcf_skilled: Cells,
    pub trials: TrialCounts,
}

impl ReportRow {
    pub fn experiment(&self) -> Experiment {
        Experiment {
            engine: self.engine,
            n_train: self.n_train,
            split: self.test_name,
            bits: self.bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub experiment: Experiment,
    pub row: ReportRow,
    /// Trials the reported numbers are computed on.
    pub table: ScoreTable,
    pub det_random: Vec<DetPoint>,
    pub det_skilled: Vec<DetPoint>,
}

type UserFilter = Box<dyn Fn(usize) -> bool>;

fn best_idr(m: &ScoreMatrix, grid: &[f64], keep: &dyn Fn(usize) -> bool) -> Result<f64> {
    let mut best = (grid[0], m.idr_for(grid[0], keep)?);
    for &a in &grid[1..] {
        let v = m.idr_for(a, keep)?;
        if v > best.1 {
            best = (a, v);
        }
    }
    Ok(best.0)
}

/// Computes the report row for one experiment from its score matrix.
pub fn evaluate(matrix: &ScoreMatrix, exp: Experiment, s: &EvalSettings) -> Result<Evaluation> {
    s.validate()?;
    let set2 = matrix.has_set2();
    let (tune, report): (UserFilter, UserFilter) = match s.alpha_mode {
        AlphaMode::Oracle => (Box::new(|_| true), Box::new(|_| true)),
        AlphaMode::HeldOut => {
            if matrix.users.len() < 2 {
                return Err(Error::InvalidConfig(
                    "held-out alpha needs at least two users".into(),
                ));
            }
            (Box::new(|i| i % 2 == 0), Box::new(|i| i % 2 == 1))
        }
    };
    let tune_table = matrix.table_for(&tune);
    let table = matrix.table_for(&report);
    for (kind, what) in [
        (TrialKind::Genuine, "no genuine trials"),
        (TrialKind::RandomForgery, "no random-forgery trials"),
        (TrialKind::SkilledForgery, "no skilled-forgery trials"),
    ] {
        if !tune_table.trials.iter().any(|t| t.kind == kind)
            || !table.trials.iter().any(|t| t.kind == kind)
        {
            return Err(Error::Empty(what));
        }
    }

    let grid = if set2 {
        alpha_grid(s.grid_step)?
    } else {
        vec![1.0]
    };
    let a_idr = best_idr(matrix, &grid, &tune)?;
    let a_rand = sweep_alpha(&tune_table, ImpostorKind::Random, &s.cost, s.grid_step)?.alpha_opt;
    let a_skill = sweep_alpha(&tune_table, ImpostorKind::Skilled, &s.cost, s.grid_step)?.alpha_opt;

    let pct = |v: f64| 100.0 * v;
    let idr_at = |a: f64| matrix.idr_for(a, &report).map(pct);
    let dcf_at = |k, a| table.min_dcf_at(k, a, &s.cost).map(|m| pct(m.min_dcf));
    let cells = |opt: f64, f: &dyn Fn(f64) -> Result<f64>| -> Result<Cells> {
        Ok(Cells {
            alpha_opt: f(opt)?,
            alpha_0: if set2 { Some(f(0.0)?) } else { None },
            alpha_1: f(1.0)?,
        })
    };
    let idr = cells(a_idr, &idr_at)?;
    let dcf_random = cells(a_rand, &|a| dcf_at(ImpostorKind::Random, a))?;
    let dcf_skilled = cells(a_skill, &|a| dcf_at(ImpostorKind::Skilled, a))?;

    let det = |k: ImpostorKind, a: f64| -> Result<Vec<DetPoint>> {
        let (g, i) = table.fused(k, a)?;
        det_points(&g, &i)
    };
    let count = |k: TrialKind| table.trials.iter().filter(|t| t.kind == k).count();
    let row = ReportRow {
        test_name: exp.split,
        engine: exp.engine,
        n_train: exp.n_train,
        bits: exp.bits,
        p_true: s.cost.p_true,
        grid_step: s.grid_step,
        alpha_mode: s.alpha_mode,
        alpha_opt: AlphaOpt {
            idr: a_idr,
            random: a_rand,
            skilled: a_skill,
        },
        idr,
        dcf_random,
        dcf_skilled,
        trials: TrialCounts {
            users: (0..matrix.users.len()).filter(|&i| report(i)).count(),
            genuine: count(TrialKind::Genuine),
            random_forgery: count(TrialKind::RandomForgery),
            skilled_forgery: count(TrialKind::SkilledForgery),
        },
    };
    Ok(Evaluation {
        experiment: exp,
        det_random: det(ImpostorKind::Random, a_rand)?,
        det_skilled: det(ImpostorKind::Skilled, a_skill)?,
        row,
        table,
    })
}

/// Enrolls, scores and evaluates one grid cell on pre-extracted features.
pub fn run_experiment(
    split: &ProtocolSplit<FeatureMatrix>,
    exp: Experiment,
    s: &EvalSettings,
) -> Result<Evaluation> {
    let models = enroll_all(split, &exp, &s.lbg)?;
    let matrix = score_all(&models, split, &SplitSpec::new(exp.split), &s.dtw)?;
    evaluate(&matrix, exp, s)
}

/// Runs every cell of `grid`, extracting features once per protocol.
pub fn run_grid(ds: &Dataset, grid: &Grid, s: &EvalSettings) -> Result<Vec<Evaluation>> {
    s.validate()?;
    let exps = grid.experiments();
    if exps.is_empty() {
        return Err(Error::InvalidConfig("experiment grid is empty".into()));
    }
    for e in &exps {
        e.validate()?;
    }
    let mut cache: BTreeMap<usize, ProtocolSplit<FeatureMatrix>> = BTreeMap::new();
    let mut out = Vec::with_capacity(exps.len());
    for exp in exps {
        let split = match cache.entry(exp.n_train) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(extract_protocol(ds, exp.n_train, s.delta)?)
            }
        };
        out.push(run_experiment(split, exp, s)?);
    }
    Ok(out)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash of a report row together with the settings that produced it.
pub fn run_hash(row: &ReportRow, s: &EvalSettings) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(row)?);
    h.update(serde_json::to_vec(&(
        s.delta.half_window(),
        &s.cost,
        &s.dtw,
        &s.lbg,
    ))?);
    Ok(hex(&h.finalize())[..12].to_string())
}

/// Writes `path` only if it does not exist yet; an existing file with the same
/// bytes is accepted, a different one is an error.
fn write_once(path: &Path, body: &[u8]) -> Result<()> {
    match fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
    {
        Ok(mut f) => f.write_all(body).map_err(|e| Error::io(path, e)),
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            let old = fs::read(path).map_err(|e| Error::io(path, e))?;
            if old == body {
                Ok(())
            } else {
                Err(Error::Report(format!(
                    "{} already exists with different content",
                    path.display()
                )))
            }
        }
        Err(e) => Err(Error::io(path, e)),
    }
}

pub const REPORT_PREFIX: &str = "report_";

/// Writes the JSON row, both DET curves and (optionally) the score table.
/// File names carry the run hash, so reruns never overwrite different results.
pub fn write_evaluation(
    out_dir: &Path,
    ev: &Evaluation,
    s: &EvalSettings,
    with_scores: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let hash = run_hash(&ev.row, s)?;
    let stem = format!("{}_{}", ev.experiment.label(), hash);
    let mut written = Vec::new();

    let json = out_dir.join(format!("{REPORT_PREFIX}{stem}.json"));
    let mut body = serde_json::to_vec_pretty(&ev.row)?;
    body.push(b'\n');
    write_once(&json, &body)?;
    written.push(json);

    for (tag, pts) in [("random", &ev.det_random), ("skilled", &ev.det_skilled)] {
        let p = out_dir.join(format!("det_{tag}_{stem}.csv"));
        let mut buf = Vec::new();
        write_det_csv(pts, &mut buf)?;
        write_once(&p, &buf)?;
        written.push(p);
    }
    if with_scores {
        let p = out_dir.join(format!("scores_{stem}.csv"));
        let mut buf = Vec::new();
        write_score_table(&ev.table, &mut buf)?;
        write_once(&p, &buf)?;
        written.push(p);
    }
    Ok(written)
}

/// Rows parsed from a report directory plus the files that could not be read.
#[derive(Debug, Default)]
pub struct ReportSet {
    pub rows: Vec<(String, ReportRow)>,
    pub problems: Vec<String>,
}

/// Reads every `report_*.json` in `dir`. Unreadable files are listed in
/// `problems`; the call fails only when no row could be read.
pub fn load_reports(dir: &Path) -> Result<ReportSet> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(REPORT_PREFIX))
        })
        .collect();
    names.sort();
    let mut set = ReportSet::default();
    for p in names {
        let name = p
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("?")
            .to_string();
        match fs::read(&p)
            .map_err(|e| e.to_string())
            .and_then(|b| serde_json::from_slice::<ReportRow>(&b).map_err(|e| e.to_string()))
        {
            Ok(row) => set.rows.push((name, row)),
            Err(e) => set.problems.push(format!("{}: {e}", p.display())),
        }
    }
    if set.rows.is_empty() {
        let mut msg = format!("no valid reports in {}", dir.display());
        for p in &set.problems {
            msg.push_str("\n  ");
            msg.push_str(p);
        }
        return Err(Error::Report(msg));
    }
    set.rows
        .sort_by(|a, b| (a.1.experiment(), &a.0).cmp(&(b.1.experiment(), &b.0)));
    Ok(set)
}

pub const SUMMARY_HEADER: [&str; 19] = [
    "engine",
    "n_train",
    "test_name",
    "bits",
    "alpha_mode",
    "p_true",
    "grid_step",
    "alpha_opt_idr",
    "alpha_opt_random",
    "alpha_opt_skilled",
    "idr_opt",
    "idr_a0",
    "idr_a1",
    "dcf_random_opt",
    "dcf_random_a0",
    "dcf_random_a1",
    "dcf_skilled_opt",
    "dcf_skilled_a0",
    "dcf_skilled_a1",
];

fn summary_fields(r: &ReportRow) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
    let mut f = vec![
        r.engine.to_string(),
        r.n_train.to_string(),
        r.test_name.to_string(),
        r.bits.map(|b| b.to_string()).unwrap_or_default(),
        r.alpha_mode.to_string(),
        r.p_true.to_string(),
        r.grid_step.to_string(),
        r.alpha_opt.idr.to_string(),
        r.alpha_opt.random.to_string(),
        r.alpha_opt.skilled.to_string(),
    ];
    for c in [r.idr, r.dcf_random, r.dcf_skilled] {
        f.push(opt(Some(c.alpha_opt)));
        f.push(opt(c.alpha_0));
        f.push(opt(Some(c.alpha_1)));
    }
    f
}

pub fn summary_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record(summary_fields(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Markdown tables, one per (engine, n_train, alpha mode). In each metric
/// column the best value (highest IDR, lowest DCF) is bold.
pub fn summary_markdown(rows: &[ReportRow]) -> String {
    let mut groups: BTreeMap<(Engine, usize, String), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.engine, r.n_train, r.alpha_mode.to_string()))
            .or_default()
            .push(r);
    }
    let mut out = String::new();
    for ((engine, n, mode), rs) in groups {
        out.push_str(&format!(
            "## {}{} ({mode} alpha, p_true {})\n\n",
            engine.to_string().to_uppercase(),
            n,
            rs[0].p_true
        ));
        out.push_str("| split | bits | alpha idr/r/s | IDR opt | IDR a=0 | IDR a=1 | DCFr opt | DCFr a=0 | DCFr a=1 | DCFs opt | DCFs a=0 | DCFs a=1 |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
        let values: Vec<[Option<f64>; 9]> = rs
            .iter()
            .map(|r| {
                let c = |c: Cells| [Some(c.alpha_opt), c.alpha_0, Some(c.alpha_1)];
                let (a, b, d) = (c(r.idr), c(r.dcf_random), c(r.dcf_skilled));
                [a[0], a[1], a[2], b[0], b[1], b[2], d[0], d[1], d[2]]
            })
            .collect();
        let best: Vec<Option<f64>> = (0..9)
            .map(|j| {
                let col = values.iter().filter_map(|v| v[j]);
                if j < 3 {
                    col.reduce(f64::max)
                } else {
                    col.reduce(f64::min)
                }
            })
            .collect();
        for (r, v) in rs.iter().zip(&values) {
            out.push_str(&format!(
                "| {} | {} | {:.2}/{:.2}/{:.2} |",
                r.test_name,
                r.bits.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
                r.alpha_opt.idr,
                r.alpha_opt.random,
                r.alpha_opt.skilled
            ));
            for (j, x) in v.iter().enumerate() {
                match x {
                    Some(x) if Some(*x) == best[j] => out.push_str(&format!(" **{x:.2}** |")),
                    Some(x) => out.push_str(&format!(" {x:.2} |")),
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
