//! Per-user matcher state and its JSON persistence.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dtw::{score_references, DtwConfig};
use crate::error::{Error, Result};
use crate::fusion::ScorePair;
use crate::signal::{FeatureMatrix, SplitName, SplitSpec};
use crate::vq::{score_codebooks, Codebook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Vq,
    Dtw,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Vq => "vq",
            Engine::Dtw => "dtw",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vq" => Ok(Engine::Vq),
            "dtw" => Ok(Engine::Dtw),
            _ => Err(Error::InvalidConfig(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum Matcher {
    /// One codebook per channel set; `cb2` is absent for WHOLE.
    Vq {
        cb1: Codebook,
        cb2: Option<Codebook>,
    },
    /// Projected training signatures; `refs2` is empty for WHOLE.
    Dtw {
        refs1: Vec<FeatureMatrix>,
        refs2: Vec<FeatureMatrix>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub user_id: String,
    pub split: SplitName,
    pub matcher: Matcher,
}

impl UserModel {
    pub fn engine(&self) -> Engine {
        match self.matcher {
            Matcher::Vq { .. } => Engine::Vq,
            Matcher::Dtw { .. } => Engine::Dtw,
        }
    }

    pub fn check_split(&self, spec: &SplitSpec) -> Result<()> {
        if self.split != spec.name {
            return Err(Error::SplitMismatch {
                model: self.split.to_string(),
                test: spec.name.to_string(),
            });
        }
        Ok(())
    }

    /// Scores a full 15-channel test matrix with whichever matcher this model holds.
    pub fn score(
        &self,
        test: &FeatureMatrix,
        spec: &SplitSpec,
        dtw: &DtwConfig,
    ) -> Result<ScorePair> {
        self.check_split(spec)?;
        match &self.matcher {
            Matcher::Vq { cb1, cb2 } => score_codebooks(cb1, cb2.as_ref(), test, spec),
            Matcher::Dtw { refs1, refs2 } => score_references(refs1, refs2, test, spec, dtw),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_vec(self)?;
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&body)?)
    }
}
