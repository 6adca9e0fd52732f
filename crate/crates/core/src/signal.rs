//! Shared data model: pen samples, raw signatures, the 15 feature channels,
//! feature matrices and the TEST1..TEST4 / WHOLE channel splits.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One tablet sample. Angles are kept as plain scalars, no wrap-around handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub az: f64,
    pub al: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl Sample {
    pub fn new(x: f64, y: f64, p: f64, az: f64, al: f64) -> Self {
        Sample {
            x,
            y,
            p,
            az,
            al,
            t: None,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn get(&self, feature: BaseFeature) -> f64 {
        match feature {
            BaseFeature::X => self.x,
            BaseFeature::Y => self.y,
            BaseFeature::P => self.p,
            BaseFeature::Az => self.az,
            BaseFeature::Al => self.al,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureKind {
    Genuine,
    SkilledForgery,
}

impl SignatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignatureKind::Genuine => "genuine",
            SignatureKind::SkilledForgery => "skilled",
        }
    }
}

impl FromStr for SignatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "genuine" | "g" => Ok(SignatureKind::Genuine),
            "skilled" | "skilled_forgery" | "forgery" | "f" => Ok(SignatureKind::SkilledForgery),
            other => Err(Error::InvalidConfig(format!(
                "unknown signature kind `{other}` (expected genuine or skilled)"
            ))),
        }
    }
}

/// A single signing act: a time series of 5-channel pen samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSignature {
    pub user_id: String,
    pub kind: SignatureKind,
    pub session: Option<u32>,
    samples: Vec<Sample>,
}

impl RawSignature {
    pub fn new(
        user_id: impl Into<String>,
        kind: SignatureKind,
        session: Option<u32>,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        if let Some((index, s)) = samples.iter().enumerate().find(|(_, s)| !(s.p >= 0.0)) {
            return Err(Error::NegativePressure { index, value: s.p });
        }
        Ok(RawSignature {
            user_id: user_id.into(),
            kind,
            session,
            samples,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Rejects signatures shorter than `min_len` (2M+1 for a delta half-window M).
    pub fn check_min_len(&self, min_len: usize) -> Result<()> {
        if self.samples.len() < min_len {
            return Err(Error::SignalTooShort {
                len: self.samples.len(),
                min: min_len,
            });
        }
        Ok(())
    }

    pub fn channel(&self, feature: BaseFeature) -> Vec<f64> {
        self.samples.iter().map(|s| s.get(feature)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseFeature {
    X,
    Y,
    P,
    Az,
    Al,
}

impl BaseFeature {
    pub const ALL: [BaseFeature; 5] = [
        BaseFeature::X,
        BaseFeature::Y,
        BaseFeature::P,
        BaseFeature::Az,
        BaseFeature::Al,
    ];

    fn name(self) -> &'static str {
        match self {
            BaseFeature::X => "x",
            BaseFeature::Y => "y",
            BaseFeature::P => "p",
            BaseFeature::Az => "az",
            BaseFeature::Al => "al",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivOrder {
    Base,
    Delta,
    DeltaDelta,
}

impl DerivOrder {
    pub const ALL: [DerivOrder; 3] = [DerivOrder::Base, DerivOrder::Delta, DerivOrder::DeltaDelta];

    fn prefix(self) -> &'static str {
        match self {
            DerivOrder::Base => "",
            DerivOrder::Delta => "d",
            DerivOrder::DeltaDelta => "dd",
        }
    }
}

/// One of the 15 feature channels: a base tablet feature and its derivative order.
/// Written as `x`, `dx` (delta) and `ddx` (delta-delta).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel {
    pub feature: BaseFeature,
    pub order: DerivOrder,
}

impl Channel {
    pub const fn new(feature: BaseFeature, order: DerivOrder) -> Self {
        Channel { feature, order }
    }

    /// All channels in canonical order: bases, then deltas, then delta-deltas.
    pub fn all() -> Vec<Channel> {
        DerivOrder::ALL
            .iter()
            .flat_map(|&o| BaseFeature::ALL.iter().map(move |&f| Channel::new(f, o)))
            .collect()
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.order.prefix(), self.feature.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (order, rest) = if let Some(r) = s.strip_prefix("dd") {
            (DerivOrder::DeltaDelta, r)
        } else if let Some(r) = s.strip_prefix('d') {
            (DerivOrder::Delta, r)
        } else {
            (DerivOrder::Base, s)
        };
        let feature = BaseFeature::ALL
            .iter()
            .copied()
            .find(|f| f.name() == rest)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown channel `{s}`")))?;
        Ok(Channel::new(feature, order))
    }
}

mod ch {
    use super::{BaseFeature as F, Channel, DerivOrder as O};

    pub const X: Channel = Channel::new(F::X, O::Base);
    pub const Y: Channel = Channel::new(F::Y, O::Base);
    pub const P: Channel = Channel::new(F::P, O::Base);
    pub const AZ: Channel = Channel::new(F::Az, O::Base);
    pub const AL: Channel = Channel::new(F::Al, O::Base);
    pub const DX: Channel = Channel::new(F::X, O::Delta);
    pub const DY: Channel = Channel::new(F::Y, O::Delta);
    pub const DP: Channel = Channel::new(F::P, O::Delta);
    pub const DAZ: Channel = Channel::new(F::Az, O::Delta);
    pub const DAL: Channel = Channel::new(F::Al, O::Delta);
    pub const DDX: Channel = Channel::new(F::X, O::DeltaDelta);
    pub const DDY: Channel = Channel::new(F::Y, O::DeltaDelta);
}

/// Column identity inside a feature matrix. `frame` is the sample offset
/// inside a stacked row and is 0 for unstacked matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnTag {
    pub channel: Channel,
    pub frame: u32,
}

impl ColumnTag {
    pub fn base(channel: Channel) -> Self {
        ColumnTag { channel, frame: 0 }
    }
}

impl fmt::Display for ColumnTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frame == 0 {
            write!(f, "{}", self.channel)
        } else {
            write!(f, "{}@{}", self.channel, self.frame)
        }
    }
}

impl FromStr for ColumnTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('@') {
            Some((c, fr)) => Ok(ColumnTag {
                channel: c.parse()?,
                frame: fr
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad frame index in `{s}`")))?,
            }),
            None => Ok(ColumnTag::base(s.parse()?)),
        }
    }
}

impl Serialize for ColumnTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ColumnTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn describe_columns(cols: &[ColumnTag]) -> String {
    cols.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Row-major L×D matrix of feature values with one tag per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord")]
pub struct FeatureMatrix {
    rows: usize,
    columns: Vec<ColumnTag>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixRecord {
    rows: usize,
    columns: Vec<ColumnTag>,
    data: Vec<f64>,
}

impl TryFrom<MatrixRecord> for FeatureMatrix {
    type Error = Error;

    fn try_from(r: MatrixRecord) -> Result<Self> {
        FeatureMatrix::new(r.columns, r.rows, r.data)
    }
}

impl FeatureMatrix {
    pub fn new(columns: Vec<ColumnTag>, rows: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * columns.len() {
            return Err(Error::Shape(format!(
                "{} values for {} rows x {} columns",
                data.len(),
                rows,
                columns.len()
            )));
        }
        let mut seen = HashSet::with_capacity(columns.len());
        for c in &columns {
            if !seen.insert(*c) {
                return Err(Error::DuplicateColumn(c.to_string()));
            }
        }
        Ok(FeatureMatrix {
            rows,
            columns,
            data,
        })
    }

    /// Builds a matrix from per-column series of equal length.
    pub fn from_columns(channels: &[Channel], series: &[Vec<f64>]) -> Result<Self> {
        if channels.len() != series.len() {
            return Err(Error::Shape(format!(
                "{} channels for {} series",
                channels.len(),
                series.len()
            )));
        }
        let rows = series.first().map_or(0, Vec::len);
        if series.iter().any(|s| s.len() != rows) {
            return Err(Error::Shape("columns differ in length".into()));
        }
        let cols = series.len();
        let mut data = vec![0.0; rows * cols];
        for (j, s) in series.iter().enumerate() {
            for (i, &v) in s.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        let tags = channels.iter().copied().map(ColumnTag::base).collect();
        FeatureMatrix::new(tags, rows, data)
    }

    /// Builds an unstacked matrix from rows of values.
    pub fn from_rows(channels: &[Channel], rows: &[Vec<f64>]) -> Result<Self> {
        let cols = channels.len();
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Shape(format!(
                "row of {} values for {} channels",
                r.len(),
                cols
            )));
        }
        let data = rows.iter().flatten().copied().collect();
        let tags = channels.iter().copied().map(ColumnTag::base).collect();
        FeatureMatrix::new(tags, rows.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnTag] {
        &self.columns
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics, and a 0-column matrix still has `rows` empty rows.
        let d = self.cols().max(1);
        let empty = self.cols() == 0;
        let rows = self.rows;
        self.data
            .chunks_exact(d)
            .chain(std::iter::repeat_n(&[][..], if empty { rows } else { 0 }))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.cols();
        (0..self.rows).map(|i| self.data[i * d + j]).collect()
    }

    pub fn column_index(&self, tag: ColumnTag) -> Option<usize> {
        self.columns.iter().position(|&c| c == tag)
    }

    /// Distinct frame offsets present, ascending.
    pub fn frames(&self) -> Vec<u32> {
        let mut f: Vec<u32> = self.columns.iter().map(|c| c.frame).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select(&self, tags: &[ColumnTag]) -> Result<FeatureMatrix> {
        let idx = tags
            .iter()
            .map(|&t| {
                self.column_index(t)
                    .ok_or_else(|| Error::MissingChannel(t.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        FeatureMatrix::new(tags.to_vec(), self.rows, data)
    }

    pub(crate) fn ensure_columns(&self, expected: &[ColumnTag]) -> Result<()> {
        if self.columns != expected {
            return Err(Error::ChannelMismatch {
                expected: describe_columns(expected),
                found: describe_columns(&self.columns),
            });
        }
        Ok(())
    }
}

/// Concatenates `frames` consecutive rows into one, without overlap. Trailing
/// rows that do not fill a whole frame are dropped.
pub fn stack_frames(m: &FeatureMatrix, frames: usize) -> Result<FeatureMatrix> {
    if frames == 0 || m.rows() / frames == 0 {
        return Err(Error::NoFrames {
            rows: m.rows(),
            frames,
        });
    }
    let out_rows = m.rows() / frames;
    let src_span = m.frames().last().map_or(1, |&f| f + 1);
    let mut columns = Vec::with_capacity(m.cols() * frames);
    for s in 0..frames as u32 {
        columns.extend(m.columns().iter().map(|c| ColumnTag {
            channel: c.channel,
            frame: s * src_span + c.frame,
        }));
    }
    let take = out_rows * frames * m.cols();
    FeatureMatrix::new(columns, out_rows, m.data()[..take].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitName {
    Test1,
    Test2,
    Test3,
    Test4,
    Whole,
}

impl SplitName {
    pub const ALL: [SplitName; 5] = [
        SplitName::Test1,
        SplitName::Test2,
        SplitName::Test3,
        SplitName::Test4,
        SplitName::Whole,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Test1 => "TEST1",
            SplitName::Test2 => "TEST2",
            SplitName::Test3 => "TEST3",
            SplitName::Test4 => "TEST4",
            SplitName::Whole => "WHOLE",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SplitName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown split `{s}`")))
    }
}

impl Serialize for SplitName {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SplitName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Assignment of channels to the two matcher inputs. Column order inside each
/// set is fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub name: SplitName,
    pub set1: Vec<Channel>,
    pub set2: Vec<Channel>,
}

impl SplitSpec {
    pub fn new(name: SplitName) -> Self {
        use ch::*;
        let shape = vec![X, Y, DX, DY, DDX, DDY];
        let shape_p = vec![X, Y, P, DX, DY, DP, DDX, DDY];
        let (set1, set2) = match name {
            SplitName::Test1 => (shape, vec![P, DP]),
            SplitName::Test2 => (shape, vec![P, AZ, AL, DP, DAZ, DAL]),
            SplitName::Test3 => (shape_p, vec![AZ, AL, DAZ, DAL]),
            SplitName::Test4 => (shape_p, vec![P, AZ, AL, DP, DAZ, DAL]),
            SplitName::Whole => (Channel::all(), Vec::new()),
        };
        SplitSpec { name, set1, set2 }
    }

    pub fn has_set2(&self) -> bool {
        !self.set2.is_empty()
    }
}

fn project(m: &FeatureMatrix, set: &[Channel]) -> Result<FeatureMatrix> {
    let tags: Vec<ColumnTag> = m
        .frames()
        .into_iter()
        .flat_map(|frame| set.iter().map(move |&channel| ColumnTag { channel, frame }))
        .collect();
    m.select(&tags)
}

/// Projects a matrix onto the split's two channel sets. For stacked matrices
/// the projection is applied per frame, frame-major. A channel listed in both
/// sets is copied into both outputs; set2 has zero columns for WHOLE.
pub fn apply_split(m: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    Ok((project(m, &spec.set1)?, project(m, &spec.set2)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub user_id: String,
    pub genuine: Vec<RawSignature>,
    pub skilled: Vec<RawSignature>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub users: Vec<UserRecord>,
}

impl Dataset {
    pub fn user(&self, id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == id)
    }

    pub fn signature_count(&self) -> usize {
        self.users
            .iter()
            .map(|u| u.genuine.len() + u.skilled.len())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(rows: usize, cols: usize) -> FeatureMatrix {
        let chans: Vec<Channel> = Channel::all().into_iter().take(cols).collect();
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|i| (0..cols).map(|j| (i * 10 + j) as f64).collect())
            .collect();
        FeatureMatrix::from_rows(&chans, &data).unwrap()
    }

    fn full(rows: usize) -> FeatureMatrix {
        toy(rows, 15)
    }

    #[test]
    fn channel_enum_has_fifteen_distinct_names() {
        let all = Channel::all();
        assert_eq!(all.len(), 15);
        let names: HashSet<String> = all.iter().map(ToString::to_string).collect();
        assert_eq!(names.len(), 15);
        for c in &all {
            assert_eq!(c.to_string().parse::<Channel>().unwrap(), *c);
        }
        assert_eq!(all[5].to_string(), "dx");
        assert_eq!(all[14].to_string(), "ddal");
    }

    #[test]
    fn stack_two_frames() {
        let m = toy(4, 2);
        let s = stack_frames(&m, 2).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 4));
        assert_eq!(s.row(0), &[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(s.row(1), &[20.0, 21.0, 30.0, 31.0]);
        assert_eq!(s.columns()[2].frame, 1);
        assert_eq!(s.columns()[2].to_string(), "x@1");
    }

    #[test]
    fn stack_identity_and_drop() {
        let m = toy(5, 3);
        assert_eq!(stack_frames(&m, 1).unwrap(), m);
        let s = stack_frames(&m, 2).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 6));
        // source row 4 is dropped
        assert_eq!(s.row(1), &[20.0, 21.0, 22.0, 30.0, 31.0, 32.0]);
        assert!(matches!(stack_frames(&m, 6), Err(Error::NoFrames { .. })));
        assert!(stack_frames(&m, 0).is_err());
    }

    #[test]
    fn split_column_counts() {
        let m = full(4);
        let counts: Vec<(usize, usize)> = SplitName::ALL
            .iter()
            .map(|&n| {
                let (a, b) = apply_split(&m, &SplitSpec::new(n)).unwrap();
                (a.cols(), b.cols())
            })
            .collect();
        assert_eq!(counts, vec![(6, 2), (6, 6), (8, 4), (8, 6), (15, 0)]);
        let (_, b) = apply_split(&m, &SplitSpec::new(SplitName::Whole)).unwrap();
        assert_eq!(b.rows(), 4);
    }

    #[test]
    fn test4_duplicates_pressure() {
        let m = full(6);
        let (a, b) = apply_split(&m, &SplitSpec::new(SplitName::Test4)).unwrap();
        let p = ColumnTag::base(ch::P);
        let pa = a.column(a.column_index(p).unwrap());
        let pb = b.column(b.column_index(p).unwrap());
        assert_eq!(pa, pb);
        assert_eq!(pa, m.column(2));
    }

    #[test]
    fn split_missing_channel_is_named() {
        let m = toy(3, 5);
        let err = apply_split(&m, &SplitSpec::new(SplitName::Test1)).unwrap_err();
        assert!(
            matches!(err, Error::MissingChannel(ref c) if c == "dx"),
            "{err}"
        );
    }

    #[test]
    fn split_of_stacked_matrix_keeps_frames() {
        let m = stack_frames(&full(6), 2).unwrap();
        let (a, b) = apply_split(&m, &SplitSpec::new(SplitName::Test1)).unwrap();
        assert_eq!((a.cols(), b.cols()), (12, 4));
        assert_eq!(a.columns()[6].to_string(), "x@1");
    }

    #[test]
    fn negative_pressure_rejected() {
        let s = vec![Sample::new(0.0, 0.0, -1.0, 0.0, 0.0)];
        assert!(RawSignature::new("u", SignatureKind::Genuine, None, s).is_err());
    }

    #[test]
    fn duplicate_columns_rejected() {
        let c = ColumnTag::base(ch::X);
        assert!(FeatureMatrix::new(vec![c, c], 1, vec![0.0, 1.0]).is_err());
    }

    fn unstack(s: &FeatureMatrix, frames: usize) -> Vec<Vec<f64>> {
        let d = s.cols() / frames;
        s.iter_rows()
            .flat_map(|r| r.chunks(d).map(<[f64]>::to_vec).collect::<Vec<_>>())
            .collect()
    }

    proptest! {
        #[test]
        fn unstack_restores_prefix(rows in 1usize..40, cols in 1usize..6, frames in 1usize..6) {
            prop_assume!(rows >= frames);
            let m = toy(rows, cols);
            let s = stack_frames(&m, frames).unwrap();
            let back = unstack(&s, frames);
            prop_assert_eq!(back.len(), frames * (rows / frames));
            for (i, r) in back.iter().enumerate() {
                prop_assert_eq!(r.as_slice(), m.row(i));
            }
        }

        #[test]
        fn split_is_exact_projection(rows in 1usize..20, seed in any::<u64>()) {
            let vals: Vec<Vec<f64>> = (0..rows)
                .map(|i| (0..15).map(|j| ((seed >> (j % 60)) as f64) * 1e-3 + (i * j) as f64).collect())
                .collect();
            let m = FeatureMatrix::from_rows(&Channel::all(), &vals).unwrap();
            for name in SplitName::ALL {
                let (a, b) = apply_split(&m, &SplitSpec::new(name)).unwrap();
                for part in [&a, &b] {
                    for (j, tag) in part.columns().iter().enumerate() {
                        let src = m.column_index(*tag).unwrap();
                        prop_assert_eq!(part.column(j), m.column(src));
                    }
                }
            }
        }
    }
}
