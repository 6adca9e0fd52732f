use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sigsplit::dtw::{DtwConfig, LocalDistance};
use sigsplit::features::DeltaConfig;
use sigsplit::fusion::CostConfig;
use sigsplit::io::{load_dataset, Manifest};
use sigsplit::model::{Engine, Matcher, UserModel};
use sigsplit::pipeline::{
    enroll_all, evaluate, extract_protocol, load_reports, run_grid, score_all, summary_csv,
    summary_markdown, write_evaluation, AlphaMode, EvalSettings, Experiment, Grid, ReportRow,
};
use sigsplit::signal::{SplitName, SplitSpec};
use sigsplit::synth::{generate, write_corpus, SynthConfig};
use sigsplit::vq::LbgConfig;
use sigsplit::Error;

#[derive(Parser)]
#[command(
    name = "sigsplit",
    version,
    about = "Online signature verification with split feature sets"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic SVC corpus with its manifest.
    Generate(GenerateArgs),
    /// Run the protocol grid and write one report per cell.
    Run(RunArgs),
    /// Merge report files into summary.csv and summary.md.
    Report(ReportArgs),
    /// Enroll every user for one grid cell and save the models as JSON.
    Train(TrainArgs),
    /// Score saved models against the test probes and write a report.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    genuine: Option<usize>,
    #[arg(long)]
    skilled: Option<usize>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    sigma_g: Option<f64>,
    #[arg(long)]
    sigma_f: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Options shared by every command that reads a dataset and scores it.
#[derive(Args)]
struct DataArgs {
    /// key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset root; manifest paths resolve against it.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Defaults to <data>/manifest.txt.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    delta_m: Option<usize>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    c_miss: Option<f64>,
    #[arg(long)]
    c_fa: Option<f64>,
    #[arg(long)]
    p_true: Option<f64>,
    /// squared_euclidean or euclidean.
    #[arg(long)]
    local_distance: Option<String>,
    /// Divide DTW costs by the sum of the sequence lengths.
    #[arg(long)]
    path_normalize: Option<bool>,
    #[arg(long)]
    perturbation: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rel_threshold: Option<f64>,
    /// Seed for codebook training tie-breaks.
    #[arg(long)]
    seed: Option<u64>,
    /// oracle or held_out.
    #[arg(long)]
    alpha_mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-trial score table.
    #[arg(long)]
    write_scores: Option<bool>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated: vq, dtw.
    #[arg(long)]
    engine: Option<String>,
    /// List or range, e.g. `4..8` or `4,6`.
    #[arg(long)]
    bits: Option<String>,
    /// List, e.g. `1,5`.
    #[arg(long)]
    n_train: Option<String>,
    /// Comma-separated split names, or `all`.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Directory written by `train`.
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    n_train: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding report_*.json files.
    #[arg(long)]
    dir: PathBuf,
    /// Output directory for summary.csv and summary.md (default: --dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    module: &'static str,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            module: "config",
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            module: e.module(),
            msg: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Parsed key=value config file.
struct ConfigFile {
    path: String,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let mut cfg = ConfigFile {
            path: String::new(),
            values: BTreeMap::new(),
        };
        let Some(path) = path else { return Ok(cfg) };
        cfg.path = path.display().to_string();
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Failure::config(format!("{}:{}: expected key=value", cfg.path, i + 1))
            })?;
            let key = k.trim().replace('-', "_");
            if !allowed.contains(&key.as_str()) {
                return Err(Failure::config(format!(
                    "{}:{}: unknown key `{}`",
                    cfg.path,
                    i + 1,
                    k.trim()
                )));
            }
            cfg.values.insert(key, v.trim().to_string());
        }
        Ok(cfg)
    }

    /// Flag value if given, else the config file entry, else `None`.
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Failure::config(format!("{}: `{key}` = `{v}`: {e}", self.path))),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}

const DATA_KEYS: &[&str] = &[
    "data",
    "manifest",
    "delta_m",
    "grid_step",
    "c_miss",
    "c_fa",
    "p_true",
    "local_distance",
    "path_normalize",
    "perturbation",
    "max_iters",
    "rel_threshold",
    "seed",
    "alpha_mode",
    "out",
    "write_scores",
    "engine",
    "bits",
    "n_train",
    "split",
];

fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|e| Failure::config(format!("{what} `{t}`: {e}")))
        })
        .collect()
}

fn parse_bits(s: &str) -> CliResult<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u32 = a
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("bits range `{s}`")))?;
        let hi: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| Failure::config(format!("bits range `{s}`")))?;
        if lo > hi {
            return Err(Failure::config(format!("bits range `{s}` is empty")));
        }
        return Ok((lo..=hi).collect());
    }
    parse_list(s, "bits")
}

fn parse_splits(s: &str) -> CliResult<Vec<SplitName>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(SplitName::ALL.to_vec());
    }
    parse_list(s, "split")
}

struct Loaded {
    settings: EvalSettings,
    out: PathBuf,
    write_scores: bool,
}

fn settings(a: &DataArgs, cfg: &ConfigFile) -> CliResult<Loaded> {
    let m = cfg.or(a.delta_m, "delta_m", DeltaConfig::default().half_window())?;
    let delta = DeltaConfig::new(m)?;
    let def_cost = CostConfig::default();
    let cost = CostConfig {
        c_miss: cfg.or(a.c_miss, "c_miss", def_cost.c_miss)?,
        c_fa: cfg.or(a.c_fa, "c_fa", def_cost.c_fa)?,
        p_true: cfg.or(a.p_true, "p_true", def_cost.p_true)?,
    };
    let def_dtw = DtwConfig::default();
    let dtw = DtwConfig {
        local_distance: cfg.or(
            a.local_distance
                .as_deref()
                .map(LocalDistance::from_str)
                .transpose()?,
            "local_distance",
            def_dtw.local_distance,
        )?,
        path_normalize: cfg.or(a.path_normalize, "path_normalize", def_dtw.path_normalize)?,
    };
    let def_lbg = LbgConfig::default();
    let lbg = LbgConfig {
        perturbation: cfg.or(a.perturbation, "perturbation", def_lbg.perturbation)?,
        max_kmeans_iters: cfg.or(a.max_iters, "max_iters", def_lbg.max_kmeans_iters)?,
        rel_improvement_threshold: cfg.or(
            a.rel_threshold,
            "rel_threshold",
            def_lbg.rel_improvement_threshold,
        )?,
        rng_seed: cfg.or(a.seed, "seed", def_lbg.rng_seed)?,
    };
    let alpha_mode = cfg.or(
        a.alpha_mode
            .as_deref()
            .map(AlphaMode::from_str)
            .transpose()?,
        "alpha_mode",
        AlphaMode::Oracle,
    )?;
    let s = EvalSettings {
        delta,
        grid_step: cfg.or(a.grid_step, "grid_step", 0.01)?,
        cost,
        dtw,
        lbg,
        alpha_mode,
    };
    s.validate()?;
    Ok(Loaded {
        settings: s,
        out: cfg.or(a.out.clone(), "out", PathBuf::from("reports"))?,
        write_scores: cfg.or(a.write_scores, "write_scores", false)?,
    })
}

fn load_data(
    a: &DataArgs,
    cfg: &ConfigFile,
    delta: DeltaConfig,
) -> CliResult<sigsplit::signal::Dataset> {
    let root: PathBuf = cfg
        .get(a.data.clone(), "data")?
        .ok_or_else(|| Failure::config("--data is required"))?;
    if !root.is_dir() {
        return Err(Failure::config(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let manifest = cfg
        .get(a.manifest.clone(), "manifest")?
        .unwrap_or_else(|| root.join("manifest.txt"));
    if !manifest.is_file() {
        return Err(Failure::config(format!(
            "manifest {} does not exist",
            manifest.display()
        )));
    }
    let m = Manifest::load(&manifest)?;
    Ok(load_dataset(&root, &m, delta.min_len())?)
}

fn cmd_generate(a: GenerateArgs) -> CliResult<()> {
    const KEYS: &[&str] = &[
        "out", "users", "genuine", "skilled", "min_len", "max_len", "sigma_g", "sigma_f", "seed",
    ];
    let cfg = ConfigFile::load(a.config.as_deref(), KEYS)?;
    let d = SynthConfig::default();
    let sc = SynthConfig {
        n_users: cfg.or(a.users, "users", d.n_users)?,
        genuine_per_user: cfg.or(a.genuine, "genuine", d.genuine_per_user)?,
        skilled_per_user: cfg.or(a.skilled, "skilled", d.skilled_per_user)?,
        length_range: (
            cfg.or(a.min_len, "min_len", d.length_range.0)?,
            cfg.or(a.max_len, "max_len", d.length_range.1)?,
        ),
        intra_user_noise: cfg.or(a.sigma_g, "sigma_g", d.intra_user_noise)?,
        forgery_distortion: cfg.or(a.sigma_f, "sigma_f", d.forgery_distortion)?,
        rng_seed: cfg.or(a.seed, "seed", d.rng_seed)?,
    };
    let out: PathBuf = cfg
        .get(a.out, "out")?
        .ok_or_else(|| Failure::config("--out is required"))?;
    sc.validate(DeltaConfig::default())?;
    let corpus = generate(&sc)?;
    write_corpus(&corpus, &out)?;
    println!(
        "wrote {} signatures for {} users to {} (seed {}, genuine/skilled mean DTW {:.4}/{:.4})",
        corpus.manifest.entries.len(),
        sc.n_users,
        out.display(),
        corpus.check.seed_used,
        corpus.check.genuine_mean,
        corpus.check.skilled_mean
    );
    Ok(())
}

fn print_row(r: &ReportRow) {
    let bits = r.bits.map(|b| format!(" b={b}")).unwrap_or_default();
    println!(
        "{}{} {}{bits}: IDR {:.2}% DCF_r {:.2}% DCF_s {:.2}% (alpha {:.2}/{:.2}/{:.2}, {})",
        r.engine,
        r.n_train,
        r.test_name,
        r.idr.alpha_opt,
        r.dcf_random.alpha_opt,
        r.dcf_skilled.alpha_opt,
        r.alpha_opt.idr,
        r.alpha_opt.random,
        r.alpha_opt.skilled,
        r.alpha_mode
    );
}

fn cmd_run(a: RunArgs) -> CliResult<()> {
    let cfg = ConfigFile::load(a.data.config.as_deref(), DATA_KEYS)?;
    let l = settings(&a.data, &cfg)?;
    let engines: Vec<Engine> =
        parse_list(&cfg.or(a.engine, "engine", "vq,dtw".to_string())?, "engine")?;
    let bits_arg: Option<String> = cfg.get(a.bits, "bits")?;
    let has_vq = engines.contains(&Engine::Vq);
    let bits = match (&bits_arg, has_vq) {
        (Some(b), true) => parse_bits(b)?,
        (None, true) => return Err(Failure::config("--bits is required for the vq engine")),
        (Some(_), false) => return Err(Failure::config("--bits only applies to the vq engine")),
        (None, false) => Vec::new(),
    };
    let grid = Grid {
        engines,
        n_train: parse_list(&cfg.or(a.n_train, "n_train", "5".to_string())?, "n_train")?,
        splits: parse_splits(&cfg.or(a.split, "split", "all".to_string())?)?,
        bits,
    };
    let ds = load_data(&a.data, &cfg, l.settings.delta)?;
    let evs = run_grid(&ds, &grid, &l.settings)?;
    for ev in &evs {
        print_row(&ev.row);
        write_evaluation(&l.out, ev, &l.settings, l.write_scores)?;
    }
    println!("{} report rows written to {}", evs.len(), l.out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let cfg = ConfigFile::load(a.data.config.as_deref(), DATA_KEYS)?;
    let l = settings(&a.data, &cfg)?;
    let engine: Engine = cfg
        .get(
            a.engine.as_deref().map(Engine::from_str).transpose()?,
            "engine",
        )?
        .ok_or_else(|| Failure::config("--engine is required"))?;
    let exp = Experiment {
        engine,
        n_train: cfg.or(a.n_train, "n_train", 5)?,
        split: cfg
            .get(
                a.split.as_deref().map(SplitName::from_str).transpose()?,
                "split",
            )?
            .ok_or_else(|| Failure::config("--split is required"))?,
        bits: cfg.get(a.bits, "bits")?,
    };
    exp.validate()?;
    let ds = load_data(&a.data, &cfg, l.settings.delta)?;
    let split = extract_protocol(&ds, exp.n_train, l.settings.delta)?;
    let models = enroll_all(&split, &exp, &l.settings.lbg)?;
    fs::create_dir_all(&l.out)
        .map_err(|e| Failure::from(Error::Report(format!("{}: {e}", l.out.display()))))?;
    for m in &models {
        m.save(&l.out.join(format!("{}.json", m.user_id)))?;
    }
    println!(
        "{} {} models written to {}",
        models.len(),
        exp.label(),
        l.out.display()
    );
    Ok(())
}

fn load_models(dir: &Path) -> CliResult<Vec<UserModel>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| Failure::config(format!("models directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut models = Vec::with_capacity(paths.len());
    for p in paths {
        models.push(UserModel::load(&p)?);
    }
    models.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    if models.is_empty() {
        return Err(Failure::config(format!("no models in {}", dir.display())));
    }
    Ok(models)
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult<()> {
    let cfg = ConfigFile::load(a.data.config.as_deref(), DATA_KEYS)?;
    let l = settings(&a.data, &cfg)?;
    let models = load_models(&a.models)?;
    let first = &models[0];
    if models
        .iter()
        .any(|m| m.engine() != first.engine() || m.split != first.split)
    {
        return Err(Error::EngineMismatch.into());
    }
    let bits = match &first.matcher {
        Matcher::Vq { cb1, .. } => Some(cb1.bits()),
        Matcher::Dtw { .. } => None,
    };
    let exp = Experiment {
        engine: first.engine(),
        n_train: cfg.or(a.n_train, "n_train", 5)?,
        split: first.split,
        bits,
    };
    let ds = load_data(&a.data, &cfg, l.settings.delta)?;
    let mut split = extract_protocol(&ds, exp.n_train, l.settings.delta)?;
    split
        .users
        .retain(|u| models.iter().any(|m| m.user_id == u.user_id));
    if split.users.len() != models.len() {
        return Err(Failure::from(Error::Validation(vec![format!(
            "{} models but only {} of their users are in the dataset",
            models.len(),
            split.users.len()
        )])));
    }
    let matrix = score_all(&models, &split, &SplitSpec::new(exp.split), &l.settings.dtw)?;
    let ev = evaluate(&matrix, exp, &l.settings)?;
    print_row(&ev.row);
    write_evaluation(&l.out, &ev, &l.settings, l.write_scores)?;
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult<()> {
    let set = load_reports(&a.dir)?;
    for p in &set.problems {
        eprintln!("warning[dataset_io]: skipped {p}");
    }
    let rows: Vec<ReportRow> = set.rows.into_iter().map(|(_, r)| r).collect();
    let out = a.out.unwrap_or(a.dir);
    fs::create_dir_all(&out)
        .map_err(|e| Failure::from(Error::Report(format!("{}: {e}", out.display()))))?;
    let csv_path = out.join("summary.csv");
    let md_path = out.join("summary.md");
    let write = |p: &Path, body: String| {
        fs::write(p, body)
            .map_err(|e| Failure::from(Error::Report(format!("{}: {e}", p.display()))))
    };
    write(&csv_path, summary_csv(&rows)?)?;
    write(&md_path, summary_markdown(&rows))?;
    println!(
        "{} rows merged into {} and {}",
        rows.len(),
        csv_path.display(),
        md_path.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("--workers: {e}")))?;
    }
    match cli.cmd {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Report(a) => cmd_report(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error[{}]: {}", f.module, f.msg);
            ExitCode::from(f.code)
        }
        Err(_) => {
            eprintln!("error[internal]: unexpected panic (this is a bug)");
            ExitCode::from(3)
        }
    }
}
