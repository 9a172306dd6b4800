//! JSON-lines pair files. One [`PairRecord`] per line; blank lines are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{CameraIntrinsics, ImagePoint, Mat3, Match, ModelKind, RelativePose, Vec3};

/// Ground-truth relative pose with `x₂ = R·x₁ + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
}

impl GroundTruth {
    pub fn from_pose(rotation: &Mat3, translation: &Vec3) -> Self {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rotation[(i, j)];
            }
        }
        Self {
            r,
            t: [translation.x, translation.y, translation.z],
        }
    }

    pub fn rotation(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.r[i][j])
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::new(self.t[0], self.t[1], self.t[2])
    }

    /// Pose with the translation kept at its stored length.
    pub fn pose(&self) -> RelativePose {
        RelativePose {
            rotation: self.rotation(),
            translation: self.translation(),
        }
    }
}

/// One image pair: intrinsics, pixel matches `(x1, y1, x2, y2)` and optional ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    #[serde(rename = "K1", default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<[[f64; 3]; 3]>,
    #[serde(rename = "K2", default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<[[f64; 3]; 3]>,
    pub matches: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_matches: Option<Vec<[f64; 4]>>,
}

impl PairRecord {
    fn invalid(&self, message: impl Into<String>) -> HarnessError {
        HarnessError::InvalidRecord {
            pair_id: self.pair_id.clone(),
            message: message.into(),
        }
    }

    /// Both intrinsics, or `None` when either is missing.
    pub fn intrinsics(&self) -> Result<Option<(CameraIntrinsics, CameraIntrinsics)>, HarnessError> {
        match (&self.k1, &self.k2) {
            (Some(a), Some(b)) => {
                let k1 = CameraIntrinsics::from_matrix(a).map_err(|e| self.invalid(format!("K1: {e}")))?;
                let k2 = CameraIntrinsics::from_matrix(b).map_err(|e| self.invalid(format!("K2: {e}")))?;
                Ok(Some((k1, k2)))
            }
            _ => Ok(None),
        }
    }

    /// Matches prepared for `kind`; essential estimation needs both intrinsics.
    pub fn to_matches(&self, kind: ModelKind) -> Result<Vec<Match>, HarnessError> {
        let ks = self.intrinsics()?;
        if kind == ModelKind::Essential && ks.is_none() {
            return Err(HarnessError::CalibrationRequired {
                pair_id: self.pair_id.clone(),
            });
        }
        self.matches
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let p1 = ImagePoint::new(q[0], q[1]);
                let p2 = ImagePoint::new(q[2], q[3]);
                if !(p1.is_finite() && p2.is_finite()) {
                    return Err(self.invalid(format!("match {i} is not finite")));
                }
                Ok(match &ks {
                    Some((k1, k2)) => Match {
                        p1,
                        p2,
                        n1: k1.normalize(p1),
                        n2: k2.normalize(p2),
                    },
                    None => Match::uncalibrated(p1, p2),
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if let Some(gt) = &self.gt {
            let r = gt.rotation();
            let err = (r.transpose() * r - Mat3::identity()).norm();
            if !(err < 1e-6) {
                return Err(self.invalid(format!("gt rotation is not orthonormal (error {err:.3e})")));
            }
        }
        self.intrinsics()?;
        Ok(())
    }
}

/// Lazy reader over a pair file.
pub struct PairReader {
    lines: Lines<BufReader<File>>,
    line: usize,
}

impl Iterator for PairReader {
    type Item = Result<PairRecord, HarnessError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => {
                    self.line += 1;
                    return Some(Err(HarnessError::Schema {
                        line: self.line,
                        message: e.to_string(),
                    }));
                }
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            let rec = serde_json::from_str::<PairRecord>(&text)
                .map_err(|e| HarnessError::Schema {
                    line,
                    message: e.to_string(),
                })
                .and_then(|r| {
                    r.validate().map_err(|e| HarnessError::Schema {
                        line,
                        message: e.to_string(),
                    })?;
                    Ok(r)
                });
            return Some(rec);
        }
    }
}

/// Opens a pair file for streaming.
pub fn load_pairs(path: &Path) -> Result<PairReader, HarnessError> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(PairReader {
        lines: BufReader::new(f).lines(),
        line: 0,
    })
}

/// Reads every record, stopping at the first error.
pub fn load_all(path: &Path) -> Result<Vec<PairRecord>, HarnessError> {
    load_pairs(path)?.collect()
}

pub fn write_pairs<'a>(path: &Path, records: impl IntoIterator<Item = &'a PairRecord>) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| HarnessError::InvalidRecord {
            pair_id: r.pair_id.clone(),
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
