//! Dynamic time warping between feature matrices, and template models scored
//! by the minimum distance over their references.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::ScorePair;
use crate::model::{Matcher, UserModel};
use crate::signal::{apply_split, FeatureMatrix, SplitSpec};
use crate::vq::sq_dist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalDistance {
    #[default]
    SquaredEuclidean,
    Euclidean,
}

impl FromStr for LocalDistance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_euclidean" | "sqeuclidean" => Ok(LocalDistance::SquaredEuclidean),
            "euclidean" => Ok(LocalDistance::Euclidean),
            _ => Err(Error::InvalidConfig(format!(
                "unknown local distance `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DtwConfig {
    pub local_distance: LocalDistance,
    /// Divide the path cost by `La + Lb`.
    pub path_normalize: bool,
}

impl Default for DtwConfig {
    fn default() -> Self {
        DtwConfig {
            local_distance: LocalDistance::SquaredEuclidean,
            path_normalize: true,
        }
    }
}

impl DtwConfig {
    #[inline]
    fn local(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = sq_dist(a, b);
        match self.local_distance {
            LocalDistance::SquaredEuclidean => d,
            LocalDistance::Euclidean => d.sqrt(),
        }
    }
}

/// Optimal warping cost with the symmetric three-way step
/// `C(i,j) = d(a_i, b_j) + min(C(i-1,j), C(i,j-1), C(i-1,j-1))`, no band.
/// Memory is one row over the shorter sequence.
pub fn dtw(a: &FeatureMatrix, b: &FeatureMatrix, cfg: &DtwConfig) -> Result<f64> {
    b.ensure_columns(a.columns())?;
    if a.rows() == 0 || b.rows() == 0 {
        return Err(Error::Empty("DTW needs non-empty sequences"));
    }
    let (outer, inner) = if a.rows() >= b.rows() { (a, b) } else { (b, a) };
    let w = inner.rows();
    let mut row = vec![0.0; w];

    let first = outer.row(0);
    let mut acc = 0.0;
    for (j, cell) in row.iter_mut().enumerate() {
        acc += cfg.local(first, inner.row(j));
        *cell = acc;
    }
    for i in 1..outer.rows() {
        let oi = outer.row(i);
        let mut diag = row[0];
        row[0] += cfg.local(oi, inner.row(0));
        for j in 1..w {
            let up = row[j];
            let best = diag.min(up).min(row[j - 1]);
            row[j] = cfg.local(oi, inner.row(j)) + best;
            diag = up;
        }
    }
    let cost = row[w - 1];
    Ok(if cfg.path_normalize {
        cost / (a.rows() + b.rows()) as f64
    } else {
        cost
    })
}

/// Stores the projected references verbatim.
pub fn dtw_enroll(
    user_id: &str,
    train_sigs: &[FeatureMatrix],
    spec: &SplitSpec,
) -> Result<UserModel> {
    if train_sigs.is_empty() {
        return Err(Error::Empty("DTW enrollment needs at least one signature"));
    }
    let mut refs1 = Vec::with_capacity(train_sigs.len());
    let mut refs2 = Vec::new();
    for m in train_sigs {
        let (a, b) = apply_split(m, spec)?;
        refs1.push(a);
        if spec.has_set2() {
            refs2.push(b);
        }
    }
    Ok(UserModel {
        user_id: user_id.to_string(),
        split: spec.name,
        matcher: Matcher::Dtw { refs1, refs2 },
    })
}

fn min_over(refs: &[FeatureMatrix], test: &FeatureMatrix, cfg: &DtwConfig) -> Result<f64> {
    let mut best = f64::INFINITY;
    for r in refs {
        best = best.min(dtw(r, test, cfg)?);
    }
    if refs.is_empty() {
        return Err(Error::Empty("DTW model has no references"));
    }
    Ok(best)
}

pub(crate) fn score_references(
    refs1: &[FeatureMatrix],
    refs2: &[FeatureMatrix],
    test: &FeatureMatrix,
    spec: &SplitSpec,
    cfg: &DtwConfig,
) -> Result<ScorePair> {
    let (a, b) = apply_split(test, spec)?;
    let d1 = min_over(refs1, &a, cfg)?;
    let d2 = if spec.has_set2() {
        Some(min_over(refs2, &b, cfg)?)
    } else {
        None
    };
    Ok(ScorePair::new(d1, d2))
}

pub fn dtw_score(
    model: &UserModel,
    test: &FeatureMatrix,
    spec: &SplitSpec,
    cfg: &DtwConfig,
) -> Result<ScorePair> {
    model.check_split(spec)?;
    match &model.matcher {
        Matcher::Dtw { refs1, refs2 } => score_references(refs1, refs2, test, spec, cfg),
        Matcher::Vq { .. } => Err(Error::EngineMismatch),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::signal::{Channel, SplitName};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn seq(rows: &[Vec<f64>]) -> FeatureMatrix {
        let d = rows.first().map_or(1, Vec::len);
        let ch: Vec<Channel> = Channel::all().into_iter().take(d).collect();
        FeatureMatrix::from_rows(&ch, rows).unwrap()
    }

    fn seq1(v: &[f64]) -> FeatureMatrix {
        seq(&v.iter().map(|&x| vec![x]).collect::<Vec<_>>())
    }

    /// Minimum cost over every monotone path from (0,0) to (La-1,Lb-1).
    pub(crate) fn brute_force(a: &FeatureMatrix, b: &FeatureMatrix, cfg: &DtwConfig) -> f64 {
        fn walk(i: usize, j: usize, a: &FeatureMatrix, b: &FeatureMatrix, cfg: &DtwConfig) -> f64 {
            let here = cfg.local(a.row(i), b.row(j));
            if i == a.rows() - 1 && j == b.rows() - 1 {
                return here;
            }
            let mut best = f64::INFINITY;
            if i + 1 < a.rows() {
                best = best.min(walk(i + 1, j, a, b, cfg));
            }
            if j + 1 < b.rows() {
                best = best.min(walk(i, j + 1, a, b, cfg));
            }
            if i + 1 < a.rows() && j + 1 < b.rows() {
                best = best.min(walk(i + 1, j + 1, a, b, cfg));
            }
            here + best
        }
        let c = walk(0, 0, a, b, cfg);
        if cfg.path_normalize {
            c / (a.rows() + b.rows()) as f64
        } else {
            c
        }
    }

    const RAW: DtwConfig = DtwConfig {
        local_distance: LocalDistance::SquaredEuclidean,
        path_normalize: false,
    };

    #[test]
    fn identity_and_constant() {
        let a = seq(&[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 3.0]]);
        assert_eq!(dtw(&a, &a, &DtwConfig::default()).unwrap(), 0.0);
        assert_eq!(
            dtw(&seq1(&[0.0]), &seq1(&[0.0, 0.0, 0.0]), &RAW).unwrap(),
            0.0
        );
    }

    #[test]
    fn small_case_against_enumeration() {
        let a = seq1(&[1.0, 2.0, 3.0]);
        let b = seq1(&[1.0, 3.0]);
        // best path (0,0),(1,0),(2,1): 0 + 1 + 0
        assert_eq!(brute_force(&a, &b, &RAW), 1.0);
        assert_eq!(dtw(&a, &b, &RAW).unwrap(), 1.0);
        let norm = dtw(&a, &b, &DtwConfig::default()).unwrap();
        assert!((norm - 0.2).abs() < 1e-15);
    }

    #[test]
    fn euclidean_local_distance() {
        let cfg = DtwConfig {
            local_distance: LocalDistance::Euclidean,
            path_normalize: false,
        };
        let a = seq(&[vec![0.0, 0.0]]);
        let b = seq(&[vec![3.0, 4.0]]);
        assert_eq!(dtw(&a, &b, &cfg).unwrap(), 5.0);
    }

    #[test]
    fn rejects_mismatch_and_empty() {
        let a = seq1(&[1.0]);
        let b = seq(&[vec![1.0, 2.0]]);
        assert!(matches!(
            dtw(&a, &b, &RAW),
            Err(Error::ChannelMismatch { .. })
        ));
        let empty = FeatureMatrix::from_rows(&[Channel::all()[0]], &[]).unwrap();
        assert!(dtw(&a, &empty, &RAW).is_err());
    }

    fn full(rng: &mut ChaCha8Rng, n: usize) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..15).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        FeatureMatrix::from_rows(&Channel::all(), &rows).unwrap()
    }

    #[test]
    fn enroll_and_min_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sigs: Vec<FeatureMatrix> = (0..5).map(|i| full(&mut rng, 20 + i)).collect();
        let spec = SplitSpec::new(SplitName::Test3);
        let model = dtw_enroll("a", &sigs, &spec).unwrap();
        match &model.matcher {
            Matcher::Dtw { refs1, refs2 } => {
                assert_eq!(refs1.len(), 5);
                assert_eq!(refs2.len(), 5);
                assert_eq!((refs1[0].cols(), refs2[0].cols()), (8, 4));
            }
            _ => unreachable!(),
        }
        let cfg = DtwConfig::default();
        let s = dtw_score(&model, &sigs[2], &spec, &cfg).unwrap();
        assert_eq!((s.d1, s.d2), (0.0, Some(0.0)));

        let test = full(&mut rng, 25);
        let five = dtw_score(&model, &test, &spec, &cfg).unwrap();
        let one = dtw_score(
            &dtw_enroll("a", &sigs[3..4], &spec).unwrap(),
            &test,
            &spec,
            &cfg,
        )
        .unwrap();
        assert!(five.d1 <= one.d1 && five.d2.unwrap() <= one.d2.unwrap());
        let (t1, _) = apply_split(&test, &spec).unwrap();
        let direct = sigs
            .iter()
            .map(|s| dtw(&apply_split(s, &spec).unwrap().0, &t1, &cfg).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(five.d1, direct);

        let whole = SplitSpec::new(SplitName::Whole);
        let m1 = dtw_enroll("a", &sigs[..1], &whole).unwrap();
        assert!(matches!(&m1.matcher, Matcher::Dtw { refs2, .. } if refs2.is_empty()));
        assert_eq!(dtw_score(&m1, &test, &whole, &cfg).unwrap().d2, None);
        assert!(dtw_enroll("a", &[], &whole).is_err());
    }

    fn small_seq() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=6, 1usize..=3).prop_flat_map(|(n, d)| {
            prop::collection::vec(prop::collection::vec(-5f64..5.0, d..=d), n..=n)
        })
    }

    proptest! {
        #[test]
        fn matches_enumeration_and_is_symmetric(a in small_seq(), lb in 1usize..=6, seed in any::<u64>()) {
            let d = a[0].len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<Vec<f64>> = (0..lb).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            let (a, b) = (seq(&a), seq(&b));
            for cfg in [RAW, DtwConfig::default()] {
                let fast = dtw(&a, &b, &cfg).unwrap();
                let slow = brute_force(&a, &b, &cfg);
                prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1e-300));
                prop_assert_eq!(fast, dtw(&b, &a, &cfg).unwrap());
                prop_assert!(fast >= 0.0);
            }
        }
    }
}
