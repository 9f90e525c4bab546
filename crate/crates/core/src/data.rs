//! Feature vectors, labels and the dataset CSV format.
//!
//! Datasets are UTF-8 CSV with LF line endings and the header
//! `resilience,distance,intensity,state`. Features are written with six
//! decimals; `state` is `+1` (outage) or `-1` (operational).

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OutageError, Result};

pub const CSV_HEADER: [&str; 4] = ["resilience", "distance", "intensity", "state"];

/// The three normalized classifier inputs, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct FeatureVector {
    pub resilience: f64,
    pub distance: f64,
    pub intensity: f64,
}

impl FeatureVector {
    pub const fn new(resilience: f64, distance: f64, intensity: f64) -> Self {
        Self {
            resilience,
            distance,
            intensity,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.resilience, self.distance, self.intensity]
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.resilience * other.resilience
            + self.distance * other.distance
            + self.intensity * other.intensity
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let dr = self.resilience - other.resilience;
        let dd = self.distance - other.distance;
        let di = self.intensity - other.intensity;
        dr * dr + dd * dd + di * di
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Checks that every feature is finite and inside `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in CSV_HEADER.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(OutageError::Data(format!("{name} is not finite")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(OutageError::Data(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl From<[f64; 3]> for FeatureVector {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<FeatureVector> for [f64; 3] {
    fn from(x: FeatureVector) -> Self {
        x.to_array()
    }
}

/// Component state. Outage is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Outage,
    Operational,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Outage => 1.0,
            Label::Operational => -1.0,
        }
    }

    /// Sign of a score, with an exact zero mapped to `Outage`.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Outage
        } else {
            Label::Operational
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Outage
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "1.0" | "+1.0" => Ok(Label::Outage),
            "-1" | "-1.0" => Ok(Label::Operational),
            other => Err(OutageError::Data(format!(
                "state must be +1 or -1, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Outage => "+1",
            Label::Operational => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(features: FeatureVector, label: Label) -> Self {
        Self { features, label }
    }

    pub fn y(&self) -> f64 {
        self.label.sign()
    }
}

/// Number of outage and operational samples.
pub fn class_counts(samples: &[LabeledSample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.label.is_positive()).count();
    (pos, samples.len() - pos)
}

pub fn write_dataset_csv<W: Write>(mut out: W, samples: &[LabeledSample]) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for s in samples {
        let f = s.features;
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{}",
            f.resilience, f.distance, f.intensity, s.label
        )?;
    }
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, samples: &[LabeledSample]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(samples.len() * 40);
    write_dataset_csv(&mut buf, samples).map_err(|e| OutageError::io(path, e))?;
    fs::write(path, buf).map_err(|e| OutageError::io(path, e))
}

/// A data row that failed validation, with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// One parsed CSV row: features plus an optional state column.
pub type FeatureRow = (FeatureVector, Option<Label>);

/// Parses feature rows, keeping per-row failures instead of aborting.
///
/// The header must start with `resilience,distance,intensity`; a trailing
/// `state` column is optional.
pub fn read_feature_rows<R: Read>(
    input: R,
) -> Result<Vec<std::result::Result<FeatureRow, RowError>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(h) => h.map_err(|e| OutageError::Data(format!("unreadable header: {e}")))?,
    };
    let cols: Vec<&str> = header.iter().collect();
    let has_state = match cols.as_slice() {
        ["resilience", "distance", "intensity"] => false,
        ["resilience", "distance", "intensity", "state"] => true,
        _ => {
            return Err(OutageError::Data(format!(
                "expected header `resilience,distance,intensity[,state]`, got `{}`",
                cols.join(",")
            )))
        }
    };
    let width = if has_state { 4 } else { 3 };

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let position = match &rec {
            Ok(r) => r.position(),
            Err(e) => e.position(),
        };
        let line = position.map_or(i + 2, |p| p.line() as usize);
        let row = rec
            .map_err(|e| e.to_string())
            .and_then(|rec| {
                if rec.len() != width {
                    return Err(format!("expected {width} fields, found {}", rec.len()));
                }
                let mut vals = [0.0; 3];
                for (k, v) in vals.iter_mut().enumerate() {
                    *v = rec[k]
                        .parse::<f64>()
                        .map_err(|_| format!("{} `{}` is not a number", CSV_HEADER[k], &rec[k]))?;
                }
                let x = FeatureVector::from(vals);
                x.validate().map_err(|e| e.to_string())?;
                let state = if has_state {
                    Some(Label::parse(&rec[3]).map_err(|e| e.to_string())?)
                } else {
                    None
                };
                Ok((x, state))
            })
            .map_err(|message| RowError { line, message });
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a labeled dataset; any invalid row fails the whole read.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<LabeledSample>> {
    let rows = read_feature_rows(input)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        match row {
            Ok((x, Some(label))) => out.push(LabeledSample::new(x, label)),
            Ok((_, None)) => {
                return Err(OutageError::Data(
                    "dataset is missing the `state` column".into(),
                ))
            }
            Err(e) => return Err(OutageError::Data(e.to_string())),
        }
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledSample>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| OutageError::io(path, e))?;
    read_dataset_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_at_six_decimals() {
        let samples = vec![
            LabeledSample::new(FeatureVector::new(0.1234567, 0.5, 1.0), Label::Outage),
            LabeledSample::new(FeatureVector::new(0.0, 0.25, 0.75), Label::Operational),
        ];
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "resilience,distance,intensity,state\n0.123457,0.500000,1.000000,+1\n0.000000,0.250000,0.750000,-1\n"
        );
        let back = read_dataset_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].features.resilience, 0.123457);
        assert_eq!(back[1].label, Label::Operational);
    }

    #[test]
    fn rows_are_validated_individually() {
        let input = "resilience,distance,intensity\n0.1,0.2,0.3\n1.5,0.2,0.3\nx,0,0\n0.1,0.2\n";
        let rows = read_feature_rows(input.as_bytes()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].is_ok());
        let err = rows[1].as_ref().unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("outside [0, 1]"), "{}", err.message);
        assert!(rows[2].is_err());
        assert!(rows[3].is_err());
    }

    #[test]
    fn empty_input_and_bad_header() {
        assert!(read_feature_rows("".as_bytes()).unwrap().is_empty());
        assert!(
            read_feature_rows("resilience,distance,intensity\n".as_bytes())
                .unwrap()
                .is_empty()
        );
        assert!(read_feature_rows("a,b,c\n".as_bytes()).is_err());
        assert!(
            read_dataset_csv("resilience,distance,intensity\n0.1,0.1,0.1\n".as_bytes()).is_err()
        );
    }

    #[test]
    fn label_parsing_and_tie_break() {
        assert_eq!(Label::parse("+1").unwrap(), Label::Outage);
        assert_eq!(Label::parse("1").unwrap(), Label::Outage);
        assert_eq!(Label::parse("-1").unwrap(), Label::Operational);
        assert!(Label::parse("0").is_err());
        assert_eq!(Label::from_score(0.0), Label::Outage);
        assert_eq!(Label::from_score(-0.0), Label::Outage);
        assert_eq!(Label::from_score(-1e-300), Label::Operational);
    }

    #[test]
    fn feature_vector_serializes_as_triple() {
        let x = FeatureVector::new(0.1, 0.2, 0.3);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[0.1,0.2,0.3]");
        let back: FeatureVector = serde_json::from_str("[0.1,0.2,0.3]").unwrap();
        assert_eq!(back, x);
    }
}
