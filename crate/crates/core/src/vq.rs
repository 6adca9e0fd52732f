//! LBG codebook training and quantization-distortion scoring.
//!
//! Codebooks grow from the global mean by repeated splitting: every centroid
//! `c` becomes `c(1+eps)` and `c(1-eps)` (components with `|c| < 1e-12` are
//! offset by `±eps` instead), followed by k-means refinement with squared
//! Euclidean assignment. Ties in assignment go to the lowest centroid index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::ScorePair;
use crate::model::{Matcher, UserModel};
use crate::signal::{apply_split, describe_columns, ColumnTag, FeatureMatrix, SplitSpec};

const ZERO_COMPONENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbgConfig {
    pub perturbation: f64,
    pub max_kmeans_iters: usize,
    pub rel_improvement_threshold: f64,
    pub rng_seed: u64,
}

impl Default for LbgConfig {
    fn default() -> Self {
        LbgConfig {
            perturbation: 0.01,
            max_kmeans_iters: 100,
            rel_improvement_threshold: 1e-5,
            rng_seed: 0,
        }
    }
}

impl LbgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.perturbation > 0.0) || !(self.rel_improvement_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "LBG perturbation and improvement threshold must be positive".into(),
            ));
        }
        if self.max_kmeans_iters == 0 {
            return Err(Error::InvalidConfig("max_kmeans_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// `2^bits` centroids over a fixed column list. Serialized as a flat record
/// `{bits, dim, channels, centroids}` with centroids row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodebookRecord")]
pub struct Codebook {
    bits: u32,
    dim: usize,
    channels: Vec<ColumnTag>,
    centroids: Vec<f64>,
}

#[derive(Deserialize)]
struct CodebookRecord {
    bits: u32,
    dim: usize,
    channels: Vec<ColumnTag>,
    centroids: Vec<f64>,
}

impl TryFrom<CodebookRecord> for Codebook {
    type Error = Error;

    fn try_from(r: CodebookRecord) -> Result<Self> {
        if r.dim != r.channels.len() {
            return Err(Error::Shape(format!(
                "codebook dim {} with {} channels",
                r.dim,
                r.channels.len()
            )));
        }
        Codebook::new(r.bits, r.channels, r.centroids)
    }
}

impl Codebook {
    pub fn new(bits: u32, channels: Vec<ColumnTag>, centroids: Vec<f64>) -> Result<Self> {
        let dim = channels.len();
        let k = 1usize << bits;
        if centroids.len() != k * dim {
            return Err(Error::Shape(format!(
                "{} values for {k} centroids of dimension {dim}",
                centroids.len()
            )));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "codebook has a non-finite centroid".into(),
            ));
        }
        Ok(Codebook {
            bits,
            dim,
            channels,
            centroids,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[ColumnTag] {
        &self.channels
    }

    pub fn centroid(&self, k: usize) -> &[f64] {
        &self.centroids[k * self.dim..(k + 1) * self.dim]
    }

    pub fn centroids(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.centroids.chunks_exact(self.dim.max(1))
    }

    /// Index and squared distance of the nearest centroid.
    pub fn nearest(&self, v: &[f64]) -> (usize, f64) {
        nearest(&self.centroids, self.dim, v)
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[f64], dim: usize, v: &[f64]) -> (usize, f64) {
    if dim == 0 {
        return (0, 0.0);
    }
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(c, v);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Distortion values recorded while training, one list per codebook size.
/// Each list starts with the distortion right after splitting and has one
/// entry per (update, assign) iteration after that.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LbgTrace {
    pub levels: Vec<Vec<f64>>,
}

pub fn lbg_train(vectors: &FeatureMatrix, bits: u32, cfg: &LbgConfig) -> Result<Codebook> {
    lbg_train_traced(vectors, bits, cfg).map(|(cb, _)| cb)
}

pub fn lbg_train_traced(
    vectors: &FeatureMatrix,
    bits: u32,
    cfg: &LbgConfig,
) -> Result<(Codebook, LbgTrace)> {
    cfg.validate()?;
    if bits >= usize::BITS - 1 {
        return Err(Error::InvalidConfig(format!("{bits} bits is too large")));
    }
    let n = vectors.rows();
    let dim = vectors.cols();
    let k_final = 1usize << bits;
    if dim == 0 {
        return Err(Error::Empty("codebook training vectors have no columns"));
    }
    if n < k_final {
        return Err(Error::NotEnoughVectors {
            set: describe_columns(vectors.columns()),
            needed: k_final,
            available: n,
        });
    }
    let data = vectors.data();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut trace = LbgTrace::default();

    let mut centroids = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (c, v) in centroids.iter_mut().zip(row) {
            *c += v;
        }
    }
    centroids.iter_mut().for_each(|c| *c /= n as f64);

    for _ in 0..bits {
        centroids = split(&centroids, dim, cfg.perturbation);
        let level = refine(data, dim, &mut centroids, cfg, &mut rng);
        trace.levels.push(level);
    }
    Ok((
        Codebook::new(bits, vectors.columns().to_vec(), centroids)?,
        trace,
    ))
}

fn split(centroids: &[f64], dim: usize, eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(centroids.len() * 2);
    for c in centroids.chunks_exact(dim) {
        for sign in [1.0, -1.0] {
            out.extend(c.iter().map(|&v| {
                if v.abs() < ZERO_COMPONENT {
                    v + sign * eps
                } else {
                    v * (1.0 + sign * eps)
                }
            }));
        }
    }
    out
}

struct Assignment {
    labels: Vec<usize>,
    counts: Vec<usize>,
    distortion: f64,
}

fn assign(data: &[f64], dim: usize, centroids: &[f64]) -> Assignment {
    let n = data.len() / dim;
    let k = centroids.len() / dim;
    let mut labels = Vec::with_capacity(n);
    let mut counts = vec![0; k];
    let mut total = 0.0;
    for v in data.chunks_exact(dim) {
        let (j, d) = nearest(centroids, dim, v);
        labels.push(j);
        counts[j] += 1;
        total += d;
    }
    Assignment {
        labels,
        counts,
        distortion: total / n as f64,
    }
}

/// k-means refinement in place; returns the distortion after each assignment.
/// Empty cells are repaired even past `max_kmeans_iters` (up to `k` extra
/// passes), so the refined codebook has no dead centroid whenever the data
/// holds at least `k` distinct vectors.
fn refine(
    data: &[f64],
    dim: usize,
    centroids: &mut [f64],
    cfg: &LbgConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let k = centroids.len() / dim;
    let mut a = assign(data, dim, centroids);
    let mut history = vec![a.distortion];
    let mut iter = 0;
    loop {
        let has_empty = a.counts.contains(&0);
        if iter >= cfg.max_kmeans_iters && (!has_empty || iter >= cfg.max_kmeans_iters + k) {
            break;
        }
        iter += 1;

        update_means(data, dim, centroids, &a);
        let repaired = has_empty && repair_empty(data, dim, centroids, &a.counts, rng);
        let prev = a.distortion;
        a = assign(data, dim, centroids);
        history.push(a.distortion);

        let still_empty = a.counts.contains(&0);
        if still_empty {
            if has_empty && !repaired {
                // every vector already sits on a centroid
                break;
            }
            continue;
        }
        let improvement = if prev > 0.0 {
            (prev - a.distortion) / prev
        } else {
            0.0
        };
        if a.distortion == 0.0 || improvement < cfg.rel_improvement_threshold {
            break;
        }
    }
    history
}

fn update_means(data: &[f64], dim: usize, centroids: &mut [f64], a: &Assignment) {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0; k * dim];
    for (v, &j) in data.chunks_exact(dim).zip(&a.labels) {
        for (s, x) in sums[j * dim..(j + 1) * dim].iter_mut().zip(v) {
            *s += x;
        }
    }
    for j in 0..k {
        if a.counts[j] == 0 {
            continue;
        }
        let inv = a.counts[j] as f64;
        for (c, s) in centroids[j * dim..(j + 1) * dim]
            .iter_mut()
            .zip(&sums[j * dim..(j + 1) * dim])
        {
            *c = s / inv;
        }
    }
}

/// Moves each empty centroid onto the vector farthest from its nearest
/// centroid. Equally far candidates are chosen between with the seeded RNG.
/// Returns false if no vector had a positive distance.
fn repair_empty(
    data: &[f64],
    dim: usize,
    centroids: &mut [f64],
    counts: &[usize],
    rng: &mut ChaCha8Rng,
) -> bool {
    let live: Vec<usize> = (0..counts.len()).filter(|&j| counts[j] > 0).collect();
    let mut dist: Vec<f64> = data
        .chunks_exact(dim)
        .map(|v| {
            live.iter()
                .map(|&j| sq_dist(&centroids[j * dim..(j + 1) * dim], v))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut moved = false;
    for j in (0..counts.len()).filter(|&j| counts[j] == 0) {
        let far = dist.iter().copied().fold(0.0, f64::max);
        if far <= 0.0 {
            break;
        }
        let ties: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] == far).collect();
        let pick = ties[rng.gen_range(0..ties.len())];
        let v = &data[pick * dim..(pick + 1) * dim];
        centroids[j * dim..(j + 1) * dim].copy_from_slice(v);
        for (d, w) in dist.iter_mut().zip(data.chunks_exact(dim)) {
            *d = d.min(sq_dist(v, w));
        }
        moved = true;
    }
    moved
}

/// Mean over rows of the squared distance to the nearest centroid.
pub fn distortion(cb: &Codebook, m: &FeatureMatrix) -> Result<f64> {
    m.ensure_columns(cb.channels())?;
    if m.rows() == 0 {
        return Err(Error::Empty("cannot quantize a matrix with no rows"));
    }
    let total: f64 = m.iter_rows().map(|r| cb.nearest(r).1).sum();
    Ok(total / m.rows() as f64)
}

fn pool(mats: &[FeatureMatrix]) -> Result<FeatureMatrix> {
    let first = mats.first().ok_or(Error::Empty("no training signatures"))?;
    let mut data = Vec::with_capacity(mats.iter().map(|m| m.data().len()).sum());
    for m in mats {
        m.ensure_columns(first.columns())?;
        data.extend_from_slice(m.data());
    }
    let rows = mats.iter().map(FeatureMatrix::rows).sum();
    FeatureMatrix::new(first.columns().to_vec(), rows, data)
}

/// Trains one codebook per channel set on the pooled rows of all training
/// signatures.
pub fn vq_enroll(
    user_id: &str,
    train_sigs: &[FeatureMatrix],
    spec: &SplitSpec,
    bits: u32,
    cfg: &LbgConfig,
) -> Result<UserModel> {
    if train_sigs.is_empty() {
        return Err(Error::Empty("no training signatures"));
    }
    let mut set1 = Vec::with_capacity(train_sigs.len());
    let mut set2 = Vec::with_capacity(train_sigs.len());
    for m in train_sigs {
        let (a, b) = apply_split(m, spec)?;
        set1.push(a);
        set2.push(b);
    }
    let label = |set: &str, e: Error| match e {
        Error::NotEnoughVectors {
            needed, available, ..
        } => Error::NotEnoughVectors {
            set: format!("user {user_id} {set}"),
            needed,
            available,
        },
        other => other,
    };
    let cb1 = lbg_train(&pool(&set1)?, bits, cfg).map_err(|e| label("set1", e))?;
    let cb2 = if spec.has_set2() {
        Some(lbg_train(&pool(&set2)?, bits, cfg).map_err(|e| label("set2", e))?)
    } else {
        None
    };
    Ok(UserModel {
        user_id: user_id.to_string(),
        split: spec.name,
        matcher: Matcher::Vq { cb1, cb2 },
    })
}

pub(crate) fn score_codebooks(
    cb1: &Codebook,
    cb2: Option<&Codebook>,
    test: &FeatureMatrix,
    spec: &SplitSpec,
) -> Result<ScorePair> {
    let (a, b) = apply_split(test, spec)?;
    let d1 = distortion(cb1, &a)?;
    let d2 = match cb2 {
        Some(cb) => Some(distortion(cb, &b)?),
        None => None,
    };
    Ok(ScorePair::new(d1, d2))
}

pub fn vq_score(model: &UserModel, test: &FeatureMatrix, spec: &SplitSpec) -> Result<ScorePair> {
    model.check_split(spec)?;
    match &model.matcher {
        Matcher::Vq { cb1, cb2 } => score_codebooks(cb1, cb2.as_ref(), test, spec),
        Matcher::Dtw { .. } => Err(Error::EngineMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Channel, SplitName};
    use rand::Rng;

    fn mat(rows: &[Vec<f64>]) -> FeatureMatrix {
        let d = rows[0].len();
        let ch: Vec<Channel> = Channel::all().into_iter().take(d).collect();
        FeatureMatrix::from_rows(&ch, rows).unwrap()
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect()
    }

    /// Exhaustive nearest-centroid distortion.
    fn distortion_oracle(cb: &Codebook, rows: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for r in rows {
            let mut best = f64::INFINITY;
            for k in 0..cb.size() {
                let c = cb.centroid(k);
                let d: f64 = (0..r.len()).map(|i| (r[i] - c[i]).powi(2)).sum();
                best = best.min(d);
            }
            total += best;
        }
        total / rows.len() as f64
    }

    #[test]
    fn two_clusters_are_found() {
        let mut rows = vec![vec![0.0, 0.0]; 10];
        rows.extend(vec![vec![10.0, 10.0]; 10]);
        let cb = lbg_train(&mat(&rows), 1, &LbgConfig::default()).unwrap();
        let mut cs: Vec<Vec<f64>> = cb.centroids().map(<[f64]>::to_vec).collect();
        cs.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        // optimal 2-means of this set is the two point masses
        for (c, want) in cs.iter().zip([[0.0, 0.0], [10.0, 10.0]]) {
            assert!(
                (c[0] - want[0]).abs() < 1e-6 && (c[1] - want[1]).abs() < 1e-6,
                "{cs:?}"
            );
        }
    }

    #[test]
    fn zero_bits_gives_the_mean() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let cb = lbg_train(&mat(&rows), 0, &LbgConfig::default()).unwrap();
        assert_eq!(cb.size(), 1);
        assert!((cb.centroid(0)[0] - 3.0).abs() < 1e-12);
        assert!((cb.centroid(0)[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_does_not_worsen_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows = random_rows(&mut rng, 50, 3);
        let m = mat(&rows);
        let cfg = LbgConfig::default();
        let d1 = distortion(&lbg_train(&m, 1, &cfg).unwrap(), &m).unwrap();
        let d2 = distortion(&lbg_train(&m, 2, &cfg).unwrap(), &m).unwrap();
        assert!(d2 <= d1, "{d2} > {d1}");
    }

    #[test]
    fn too_few_vectors() {
        let rows = vec![vec![0.0]; 3];
        assert!(matches!(
            lbg_train(&mat(&rows), 2, &LbgConfig::default()),
            Err(Error::NotEnoughVectors {
                needed: 4,
                available: 3,
                ..
            })
        ));
    }

    #[test]
    fn distortion_cases() {
        let ch = vec![
            ColumnTag::base(Channel::all()[0]),
            ColumnTag::base(Channel::all()[1]),
        ];
        let origin = Codebook::new(0, ch.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(distortion(&origin, &mat(&[vec![3.0, 4.0]])).unwrap(), 25.0);

        let cb = Codebook::new(1, ch, vec![1.0, 1.0, -2.0, 0.5]).unwrap();
        assert_eq!(
            distortion(&cb, &mat(&[vec![1.0, 1.0], vec![-2.0, 0.5]])).unwrap(),
            0.0
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let train = mat(&random_rows(&mut rng, 40, 2));
        let cb4 = lbg_train(&train, 2, &LbgConfig::default()).unwrap();
        let rows = random_rows(&mut rng, 20, 2);
        let got = distortion(&cb4, &mat(&rows)).unwrap();
        let want = distortion_oracle(&cb4, &rows);
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn distortion_checks_channels() {
        let cb = Codebook::new(0, vec![ColumnTag::base(Channel::all()[1])], vec![0.0]).unwrap();
        assert!(matches!(
            distortion(&cb, &mat(&[vec![1.0]])),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn additive_split_for_zero_components() {
        let s = split(&[0.0, 2.0], 2, 0.01);
        assert_eq!(s, vec![0.01, 2.02, -0.01, 1.98]);
    }

    #[test]
    fn seeded_training_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = mat(&random_rows(&mut rng, 80, 4));
        let cfg = LbgConfig {
            rng_seed: 9,
            ..LbgConfig::default()
        };
        let a = lbg_train(&m, 3, &cfg).unwrap();
        let b = lbg_train(&m, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn memorizes_when_codebook_matches_row_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows = random_rows(&mut rng, 16, 3);
        let m = mat(&rows);
        let cb = lbg_train(&m, 4, &LbgConfig::default()).unwrap();
        assert_eq!(distortion(&cb, &m).unwrap(), 0.0);
    }

    fn full_rows(rng: &mut ChaCha8Rng, n: usize) -> FeatureMatrix {
        FeatureMatrix::from_rows(&Channel::all(), &random_rows(rng, n, 15)).unwrap()
    }

    #[test]
    fn enroll_and_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigs: Vec<FeatureMatrix> = (0..5).map(|_| full_rows(&mut rng, 30)).collect();
        let spec = SplitSpec::new(SplitName::Test1);
        let model = vq_enroll("u1", &sigs, &spec, 4, &LbgConfig::default()).unwrap();
        match &model.matcher {
            Matcher::Vq { cb1, cb2 } => {
                assert_eq!((cb1.size(), cb1.dim()), (16, 6));
                let cb2 = cb2.as_ref().unwrap();
                assert_eq!((cb2.size(), cb2.dim()), (16, 2));
            }
            _ => unreachable!(),
        }
        let s = vq_score(&model, &sigs[0], &spec).unwrap();
        assert!(s.d1 >= 0.0 && s.d2.unwrap() >= 0.0);

        let whole = SplitSpec::new(SplitName::Whole);
        let m1 = vq_enroll("u1", &sigs[..1], &whole, 4, &LbgConfig::default()).unwrap();
        assert!(matches!(m1.matcher, Matcher::Vq { cb2: None, .. }));
        assert_eq!(vq_score(&m1, &sigs[1], &whole).unwrap().d2, None);
        assert!(matches!(
            vq_score(&m1, &sigs[1], &spec),
            Err(Error::SplitMismatch { .. })
        ));
    }

    #[test]
    fn enroll_reports_short_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigs: Vec<FeatureMatrix> = (0..2).map(|_| full_rows(&mut rng, 30)).collect();
        let spec = SplitSpec::new(SplitName::Test1);
        let err = vq_enroll("u7", &sigs, &spec, 6, &LbgConfig::default()).unwrap_err();
        match err {
            Error::NotEnoughVectors {
                set,
                needed,
                available,
            } => {
                assert!(set.contains("u7") && set.contains("set1"));
                assert_eq!((needed, available), (64, 60));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn memorized_training_signature_scores_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sig = full_rows(&mut rng, 32);
        let spec = SplitSpec::new(SplitName::Test3);
        let model = vq_enroll(
            "u",
            std::slice::from_ref(&sig),
            &spec,
            5,
            &LbgConfig::default(),
        )
        .unwrap();
        let s = vq_score(&model, &sig, &spec).unwrap();
        assert_eq!((s.d1, s.d2), (0.0, Some(0.0)));
    }
}
