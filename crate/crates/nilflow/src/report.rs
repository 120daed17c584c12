//! Machine-readable check reports.
//!
//! All floats are serialized with 17 significant digits so reports are
//! byte-identical across runs with the same seed.

use serde::Serialize;

use crate::error::Result;
use crate::state::TangentState;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct StateDump {
    pub p: Vec<f64>,
    pub y: Vec<f64>,
}

impl StateDump {
    pub fn from_state(state: &TangentState) -> Self {
        StateDump {
            p: state.point.iter().copied().collect(),
            y: state.velocity.as_vector().iter().copied().collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub sample: u64,
    pub context: String,
    pub residual: f64,
    pub state: StateDump,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub schema: u32,
    pub check: String,
    pub samples: usize,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        CheckReport {
            schema: SCHEMA_VERSION,
            check: check.into(),
            samples: 0,
            max_abs_residual: 0.0,
            tolerance,
            passed: true,
            failures: Vec::new(),
            details: None,
        }
    }

    /// Fold one residual into the report, recording a failure when it
    /// exceeds the tolerance. Non-finite residuals always fail.
    pub fn record(
        &mut self,
        sample: u64,
        context: impl Into<String>,
        residual: f64,
        state: &TangentState,
    ) {
        if residual.is_finite() {
            self.max_abs_residual = self.max_abs_residual.max(residual.abs());
        } else {
            self.max_abs_residual = f64::INFINITY;
        }
        if !residual.is_finite() || residual.abs() > self.tolerance {
            self.passed = false;
            self.failures.push(Failure {
                sample,
                context: context.into(),
                residual,
                state: StateDump::from_state(state),
            });
        }
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.passed = false;
        let notes = self.details.get_or_insert_with(|| serde_json::json!({}));
        let list = notes
            .as_object_mut()
            .expect("details is an object")
            .entry("notes")
            .or_insert_with(|| serde_json::json!([]));
        list.as_array_mut()
            .expect("notes is an array")
            .push(serde_json::Value::String(note.into()));
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = Some(details);
        self
    }
}

struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value with deterministic float formatting.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits utf-8"))
}
