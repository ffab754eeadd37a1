//! Machine-readable pass/fail records shared by every validator.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// JSON has no infinities: non-finite values travel as `"inf"`, `"-inf"`, `"nan"`.
mod lossless {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub location: String,
    #[serde(with = "lossless")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub status: Status,
    #[serde(with = "lossless")]
    pub worst_violation: f64,
    #[serde(with = "lossless")]
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
    pub config_hash: String,
}

impl VerificationReport {
    /// Pass iff `worst_violation <= tolerance`. A failing value whose error
    /// bar reaches back below the tolerance is reported as inconclusive.
    pub fn from_measurement(
        check_name: impl Into<String>,
        worst_violation: f64,
        tolerance: f64,
        error_bar: f64,
    ) -> Self {
        let status = if worst_violation <= tolerance {
            Status::Pass
        } else if worst_violation - error_bar.abs() <= tolerance {
            Status::Inconclusive
        } else {
            Status::Fail
        };
        Self {
            check_name: check_name.into(),
            status,
            worst_violation,
            tolerance,
            witnesses: Vec::new(),
            config_hash: String::new(),
        }
    }

    pub fn with_witness(mut self, location: impl Into<String>, value: f64) -> Self {
        self.witnesses.push(Witness {
            location: location.into(),
            value,
        });
        self
    }

    pub fn with_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = hash.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Fixed-width table, one row per report.
pub fn summary_table(reports: &[VerificationReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.check_name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:<12}  {:>12}  {:>12}",
        "check", "status", "worst", "tolerance"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:<12}  {:>12.4e}  {:>12.4e}",
            r.check_name,
            r.status.to_string(),
            r.worst_violation,
            r.tolerance
        );
    }
    out
}

/// Hex SHA-256 of the JSON serialization of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex_digest(&bytes)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}
