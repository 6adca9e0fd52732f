//! Signature file formats, the dataset manifest, protocol splits and the
//! score-table / DET CSV formats.
//!
//! SVC2004 files are plain text: a point count on the first line, then one
//! line per point with seven integers `X Y timestamp button azimuth altitude
//! pressure`. The button column is not kept; on output it is derived from
//! pressure (`1` iff `p > 0`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result, SvcError};
use crate::fusion::{DetPoint, ScorePair, ScoreTable, Trial};
use crate::signal::{Dataset, RawSignature, Sample, SignatureKind, UserRecord};

pub fn parse_svc(bytes: &[u8]) -> Result<Vec<Sample>, SvcError> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or(SvcError::Empty)?;
    let declared: usize = header.parse().map_err(|_| SvcError::BadHeader {
        token: header.to_string(),
    })?;

    let mut points = Vec::with_capacity(declared);
    for (line, l) in lines {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != 7 {
            return Err(SvcError::FieldCount {
                line,
                found: tokens.len(),
            });
        }
        let mut v = [0i64; 7];
        for (slot, tok) in v.iter_mut().zip(&tokens) {
            *slot = tok.parse().map_err(|_| SvcError::NonNumeric {
                line,
                token: tok.to_string(),
            })?;
        }
        let [x, y, t, _button, az, al, p] = v;
        if p < 0 {
            return Err(SvcError::NegativePressure { line, value: p });
        }
        points.push(
            Sample::new(x as f64, y as f64, p as f64, az as f64, al as f64).with_time(t as f64),
        );
    }
    if points.len() != declared {
        return Err(SvcError::CountMismatch {
            declared,
            found: points.len(),
        });
    }
    Ok(points)
}

/// Writes samples in SVC layout. Values are rounded to integers; a missing
/// timestamp is written as `10 * index` (100 Hz).
pub fn write_svc(samples: &[Sample]) -> String {
    let mut out = String::with_capacity(samples.len() * 32);
    let _ = writeln!(out, "{}", samples.len());
    for (i, s) in samples.iter().enumerate() {
        let t = s.t.unwrap_or(i as f64 * 10.0);
        let button = i64::from(s.p > 0.0);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            s.x.round() as i64,
            s.y.round() as i64,
            t.round() as i64,
            button,
            s.az.round() as i64,
            s.al.round() as i64,
            s.p.round() as i64
        );
    }
    out
}

/// Generic CSV signature: header `x,y,p,az,al` with an optional trailing `t`.
pub fn parse_csv_signature(bytes: &[u8], path: &str) -> Result<Vec<Sample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_ascii_lowercase).collect();
    let has_t = match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["x", "y", "p", "az", "al"] => false,
        ["x", "y", "p", "az", "al", "t"] => true,
        _ => {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                msg: format!(
                    "expected header x,y,p,az,al[,t], found {}",
                    header.join(",")
                ),
            })
        }
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let nums = rec
            .iter()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.into(),
                    line,
                    msg: format!("non-numeric token `{tok}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut s = Sample::new(nums[0], nums[1], nums[2], nums[3], nums[4]);
        if has_t {
            s = s.with_time(nums[5]);
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_csv_signature(samples: &[Sample]) -> Result<String> {
    let has_t = samples.iter().all(|s| s.t.is_some()) && !samples.is_empty();
    let mut w = csv::Writer::from_writer(Vec::new());
    if has_t {
        w.write_record(["x", "y", "p", "az", "al", "t"])?;
    } else {
        w.write_record(["x", "y", "p", "az", "al"])?;
    }
    for s in samples {
        let mut rec = vec![
            s.x.to_string(),
            s.y.to_string(),
            s.p.to_string(),
            s.az.to_string(),
            s.al.to_string(),
        ];
        if has_t {
            rec.push(s.t.unwrap_or_default().to_string());
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One manifest line: `relative-path user-id kind session`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub user_id: String,
    pub kind: SignatureKind,
    pub session: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// `# key=value` lines, kept for provenance.
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut m = Manifest::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(note) = line.strip_prefix('#') {
                m.notes.push(note.trim().to_string());
                continue;
            }
            let bad = |msg: String| Error::Parse {
                path: path.into(),
                line: i + 1,
                msg,
            };
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 4 {
                return Err(bad(format!(
                    "expected `path user kind session`, found {} fields",
                    tok.len()
                )));
            }
            m.entries.push(ManifestEntry {
                path: PathBuf::from(tok[0]),
                user_id: tok[1].to_string(),
                kind: tok[2].parse().map_err(|e: Error| bad(e.to_string()))?,
                session: tok[3]
                    .parse()
                    .map_err(|_| bad(format!("session `{}` is not an integer", tok[3])))?,
            });
        }
        Ok(m)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                e.path.display(),
                e.user_id,
                e.kind.as_str(),
                e.session
            );
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text, &path.display().to_string())
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads one signature file, SVC or CSV by extension.
pub fn read_signature_file(path: &Path) -> Result<Vec<Sample>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    if is_csv(path) {
        parse_csv_signature(&bytes, &name)
    } else {
        parse_svc(&bytes).map_err(|source| Error::Svc { path: name, source })
    }
}

/// Loads every manifest entry under `root`. All problems (unreadable or
/// malformed files, signatures shorter than `min_len`) are gathered into a
/// single validation error. Users come out sorted by id, signatures by
/// (session, path).
pub fn load_dataset(root: &Path, manifest: &Manifest, min_len: usize) -> Result<Dataset> {
    use rayon::prelude::*;

    if manifest.entries.is_empty() {
        return Err(Error::NoUsers);
    }
    let loaded: Vec<Result<RawSignature>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let path = root.join(&e.path);
            let samples = read_signature_file(&path)?;
            let sig = RawSignature::new(e.user_id.clone(), e.kind, Some(e.session), samples)?;
            sig.check_min_len(min_len)
                .map_err(|err| Error::Report(format!("{}: {err}", path.display())))?;
            Ok(sig)
        })
        .collect();

    let mut problems = Vec::new();
    let mut users: BTreeMap<String, UserRecord> = BTreeMap::new();
    let mut order: BTreeMap<String, Vec<(u32, PathBuf, RawSignature)>> = BTreeMap::new();
    for (entry, res) in manifest.entries.iter().zip(loaded) {
        match res {
            Ok(sig) => order.entry(entry.user_id.clone()).or_default().push((
                entry.session,
                entry.path.clone(),
                sig,
            )),
            Err(Error::Report(msg)) => problems.push(msg),
            Err(e) => problems.push(e.to_string()),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    for (user_id, mut sigs) in order {
        sigs.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let rec = users.entry(user_id.clone()).or_insert_with(|| UserRecord {
            user_id,
            genuine: Vec::new(),
            skilled: Vec::new(),
        });
        for (_, _, s) in sigs {
            match s.kind {
                SignatureKind::Genuine => rec.genuine.push(s),
                SignatureKind::SkilledForgery => rec.skilled.push(s),
            }
        }
    }
    Ok(Dataset {
        users: users.into_values().collect(),
    })
}

/// Reads `manifest` (relative paths resolve against `root`).
pub fn load_dataset_dir(root: &Path, manifest_path: &Path, min_len: usize) -> Result<Dataset> {
    let manifest = Manifest::load(manifest_path)?;
    load_dataset(root, &manifest, min_len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub n_train: usize,
}

impl Protocol {
    pub fn new(n_train: usize) -> Result<Self> {
        if n_train == 0 {
            return Err(Error::InvalidConfig("n_train must be at least 1".into()));
        }
        Ok(Protocol { n_train })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSplit<T> {
    pub user_id: String,
    pub train: Vec<T>,
    pub test_genuine: Vec<T>,
    pub test_skilled: Vec<T>,
}

/// Train/test partition of a dataset. Random-forgery probes for a user are the
/// other users' `test_genuine` signatures.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSplit<T> {
    pub users: Vec<UserSplit<T>>,
}

impl<T> ProtocolSplit<T> {
    pub fn random_pool<'a>(
        &'a self,
        user_id: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a T)> + 'a {
        self.users
            .iter()
            .filter(move |u| u.user_id != user_id)
            .flat_map(|u| u.test_genuine.iter().map(move |s| (u.user_id.as_str(), s)))
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(&T) -> Result<U>) -> Result<ProtocolSplit<U>> {
        let mut users = Vec::with_capacity(self.users.len());
        for u in &self.users {
            let mut conv = |v: &[T]| v.iter().map(&mut f).collect::<Result<Vec<U>>>();
            users.push(UserSplit {
                user_id: u.user_id.clone(),
                train: conv(&u.train)?,
                test_genuine: conv(&u.test_genuine)?,
                test_skilled: conv(&u.test_skilled)?,
            });
        }
        Ok(ProtocolSplit { users })
    }
}

/// First `n_train` genuine signatures (session order) train; the remaining
/// genuine ones and all skilled forgeries are test probes.
pub fn split_protocol(ds: &Dataset, proto: Protocol) -> Result<ProtocolSplit<RawSignature>> {
    if ds.users.is_empty() {
        return Err(Error::NoUsers);
    }
    let mut users = Vec::with_capacity(ds.users.len());
    for u in &ds.users {
        if u.genuine.len() < proto.n_train + 1 {
            return Err(Error::InsufficientSignatures {
                user: u.user_id.clone(),
                have: u.genuine.len(),
                need: proto.n_train + 1,
            });
        }
        users.push(UserSplit {
            user_id: u.user_id.clone(),
            train: u.genuine[..proto.n_train].to_vec(),
            test_genuine: u.genuine[proto.n_train..].to_vec(),
            test_skilled: u.skilled.clone(),
        });
    }
    Ok(ProtocolSplit { users })
}

pub const SCORE_HEADER: [&str; 5] = ["claimed", "true", "kind", "d1", "d2"];

pub fn write_score_table<W: Write>(table: &ScoreTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCORE_HEADER)?;
    for t in &table.trials {
        w.write_record([
            t.claimed.clone(),
            t.true_user.clone(),
            t.kind.to_string(),
            t.pair.d1.to_string(),
            t.pair.d2.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))?;
    Ok(())
}

pub fn read_score_table<R: Read>(input: R) -> Result<ScoreTable> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SCORE_HEADER {
        return Err(Error::Parse {
            path: "score table".into(),
            line: 1,
            msg: format!("expected header {}", SCORE_HEADER.join(",")),
        });
    }
    let mut trials = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |msg: String| Error::Parse {
            path: "score table".into(),
            line,
            msg,
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("non-numeric score `{s}`")))
        };
        let d2 = match rec.get(4).unwrap_or("") {
            "" => None,
            s => Some(num(s)?),
        };
        trials.push(Trial {
            claimed: rec[0].to_string(),
            true_user: rec[1].to_string(),
            kind: rec[2].parse().map_err(|e: Error| bad(e.to_string()))?,
            pair: ScorePair::new(num(&rec[3])?, d2),
        });
    }
    Ok(ScoreTable { trials })
}

/// Two-column `p_fa,p_miss` CSV, one row per threshold.
pub fn write_det_csv<W: Write>(points: &[DetPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_fa", "p_miss"])?;
    for p in points {
        w.write_record([p.p_fa.to_string(), p.p_miss.to_string()])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::TrialKind;
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_svc() {
        let s = parse_svc(b"2\n0 0 0 1 900 450 100\n10 5 10 1 900 450 120\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(
            s.iter().map(|p| p.p).collect::<Vec<_>>(),
            vec![100.0, 120.0]
        );
        assert_eq!(
            (s[1].x, s[1].y, s[1].az, s[1].al, s[1].t),
            (10.0, 5.0, 900.0, 450.0, Some(10.0))
        );
    }

    #[test]
    fn svc_errors_are_structured() {
        assert_eq!(
            parse_svc(b"3\n0 0 0 1 900 450 100\n10 5 10 1 900 450 120\n"),
            Err(SvcError::CountMismatch {
                declared: 3,
                found: 2
            })
        );
        assert_eq!(
            parse_svc(b"1\n1 2 3 4 5 6\n"),
            Err(SvcError::FieldCount { line: 2, found: 6 })
        );
        assert_eq!(
            parse_svc(b"2\n1 2 3 4 5 6 7\n1 2 x 4 5 6 7\n"),
            Err(SvcError::NonNumeric {
                line: 3,
                token: "x".into()
            })
        );
        assert!(matches!(
            parse_svc(b"abc\n"),
            Err(SvcError::BadHeader { .. })
        ));
        assert_eq!(parse_svc(b""), Err(SvcError::Empty));
        assert!(matches!(
            parse_svc(b"1\n1 2 3 4 5 6 -7\n"),
            Err(SvcError::NegativePressure { .. })
        ));
        assert!(SvcError::CountMismatch {
            declared: 3,
            found: 2
        }
        .to_string()
        .starts_with("line count mismatch"));
    }

    #[test]
    fn csv_signature_round_trip() {
        let samples = vec![
            Sample::new(1.5, 2.0, 3.0, 4.0, 5.0).with_time(0.0),
            Sample::new(-1.0, 0.25, 0.0, 4.0, 5.0).with_time(10.0),
        ];
        let text = write_csv_signature(&samples).unwrap();
        assert!(text.starts_with("x,y,p,az,al,t\n"));
        assert_eq!(
            parse_csv_signature(text.as_bytes(), "s.csv").unwrap(),
            samples
        );
        let no_t = parse_csv_signature(b"x,y,p,az,al\n1,2,3,4,5\n", "s.csv").unwrap();
        assert_eq!(no_t[0].t, None);
        assert!(parse_csv_signature(b"a,b\n1,2\n", "s.csv").is_err());
        assert!(matches!(
            parse_csv_signature(b"x,y,p,az,al\n1,2,q,4,5\n", "s.csv"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn manifest_round_trip_and_errors() {
        let text = "# seed=7\na/g1.svc u1 genuine 1\na/f1.svc u1 skilled 1\n";
        let m = Manifest::parse(text, "m").unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.notes, vec!["seed=7"]);
        assert_eq!(m.render(), text);
        assert!(Manifest::parse("a u1 genuine\n", "m").is_err());
        assert!(Manifest::parse("a u1 bogus 1\n", "m").is_err());
    }

    fn write_sig(dir: &Path, rel: &str, n: usize) {
        let samples: Vec<Sample> = (0..n)
            .map(|i| {
                Sample::new(i as f64, (i * 2) as f64, 100.0, 900.0, 450.0)
                    .with_time(i as f64 * 10.0)
            })
            .collect();
        let p = dir.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, write_svc(&samples)).unwrap();
    }

    #[test]
    fn loads_two_users() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::default();
        for u in ["u2", "u1"] {
            for s in (1..=3).rev() {
                let rel = format!("{u}/g{s}.svc");
                write_sig(dir.path(), &rel, 10 + s as usize);
                m.entries.push(ManifestEntry {
                    path: rel.into(),
                    user_id: u.into(),
                    kind: SignatureKind::Genuine,
                    session: s,
                });
            }
        }
        let ds = load_dataset(dir.path(), &m, 5).unwrap();
        assert_eq!(ds.users.len(), 2);
        assert_eq!(ds.users[0].user_id, "u1");
        let sessions: Vec<_> = ds.users[0].genuine.iter().map(|s| s.session).collect();
        assert_eq!(sessions, vec![Some(1), Some(2), Some(3)]);
        assert_eq!(load_dataset(dir.path(), &m, 5).unwrap(), ds);

        let err = load_dataset(dir.path(), &m, 12).unwrap_err();
        match err {
            Error::Validation(p) => {
                assert_eq!(p.len(), 2);
                assert!(p[0].contains("g1.svc"), "{p:?}");
            }
            e => panic!("{e}"),
        }
        m.entries.push(ManifestEntry {
            path: "missing.svc".into(),
            user_id: "u3".into(),
            kind: SignatureKind::Genuine,
            session: 1,
        });
        assert!(matches!(
            load_dataset(dir.path(), &m, 5),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_dataset(dir.path(), &Manifest::default(), 5),
            Err(Error::NoUsers)
        ));
    }

    fn dataset(genuine: usize, users: usize) -> Dataset {
        let sig = |u: &str, k, s| {
            RawSignature::new(
                u,
                k,
                Some(s),
                vec![Sample::new(s as f64, 0.0, 1.0, 0.0, 0.0); 5],
            )
            .unwrap()
        };
        Dataset {
            users: (0..users)
                .map(|i| {
                    let u = format!("u{i}");
                    UserRecord {
                        genuine: (0..genuine as u32)
                            .map(|s| sig(&u, SignatureKind::Genuine, s))
                            .collect(),
                        skilled: (0..2)
                            .map(|s| sig(&u, SignatureKind::SkilledForgery, s))
                            .collect(),
                        user_id: u,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn protocol_partitions_genuine() {
        let ds = dataset(10, 3);
        let sp = split_protocol(&ds, Protocol::new(5).unwrap()).unwrap();
        for (u, rec) in sp.users.iter().zip(&ds.users) {
            assert_eq!(
                (u.train.len(), u.test_genuine.len(), u.test_skilled.len()),
                (5, 5, 2)
            );
            let mut all: Vec<_> = u.train.iter().chain(&u.test_genuine).cloned().collect();
            all.sort_by_key(|s| s.session);
            assert_eq!(all, rec.genuine);
            assert!(u.train.iter().all(|t| !u.test_genuine.contains(t)));
        }
        assert_eq!(sp.random_pool("u0").count(), 10);
        assert!(sp.random_pool("u0").all(|(owner, _)| owner != "u0"));

        let one = split_protocol(&ds, Protocol::new(1).unwrap()).unwrap();
        assert_eq!(one.users[0].train.len(), 1);
        assert_eq!(one.users[0].train[0].session, Some(0));

        match split_protocol(&dataset(5, 2), Protocol::new(5).unwrap()) {
            Err(Error::InsufficientSignatures {
                user,
                have: 5,
                need: 6,
            }) => assert_eq!(user, "u0"),
            other => panic!("{other:?}"),
        }
        assert!(Protocol::new(0).is_err());
    }

    #[test]
    fn score_table_csv_round_trip() {
        let table = ScoreTable {
            trials: vec![
                Trial {
                    claimed: "u1".into(),
                    true_user: "u1".into(),
                    kind: TrialKind::Genuine,
                    pair: ScorePair::new(0.1234567890123, Some(1e-20)),
                },
                Trial {
                    claimed: "u1".into(),
                    true_user: "u2".into(),
                    kind: TrialKind::RandomForgery,
                    pair: ScorePair::new(3.0, None),
                },
            ],
        };
        let mut buf = Vec::new();
        write_score_table(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("claimed,true,kind,d1,d2\n"));
        assert!(text.contains("u1,u2,random_forgery,3,\n"));
        assert_eq!(read_score_table(buf.as_slice()).unwrap(), table);
        assert!(read_score_table(&b"a,b\n"[..]).is_err());
    }

    #[test]
    fn det_csv_layout() {
        let mut buf = Vec::new();
        let pts = [DetPoint {
            threshold: 0.0,
            p_fa: 0.5,
            p_miss: 0.25,
        }];
        write_det_csv(&pts, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p_fa,p_miss\n0.5,0.25\n");
    }

    proptest! {
        #[test]
        fn svc_round_trip(rows in prop::collection::vec(
            (-5000i64..5000, -5000i64..5000, 0i64..3600, 0i64..900, 0i64..1024), 1..40)
        ) {
            let samples: Vec<Sample> = rows.iter().enumerate()
                .map(|(i, &(x, y, az, al, p))| Sample::new(x as f64, y as f64, p as f64, az as f64, al as f64)
                    .with_time(i as f64 * 10.0))
                .collect();
            let text = write_svc(&samples);
            let parsed = parse_svc(text.as_bytes()).unwrap();
            prop_assert_eq!(&parsed, &samples);
            prop_assert_eq!(write_svc(&parsed), text);
        }

        #[test]
        fn svc_parser_is_total(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
            let _ = parse_svc(&bytes);
        }
    }
}
