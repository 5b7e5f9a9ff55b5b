//! Structured residual reports shared by the verification suite and the
//! geometrodynamics checks.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    /// Tensor identity evaluated componentwise at a point.
    Pointwise,
    /// Differential forms evaluated on coordinate basis vectors.
    FormLevel,
    /// Wedges between dynamical variables read as contracted products, `dt` factors divided out.
    ScalarDynamical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub interpretation: Interpretation,
    pub max_residual: f64,
    pub tolerance: Option<f64>,
    /// Asserted identities decide the exit status; the rest are measurements.
    pub asserted: bool,
    pub passed: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub notes: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

impl IdentityReport {
    pub fn asserted(identity: &str, interpretation: Interpretation, tolerance: f64) -> Self {
        Self {
            identity: identity.to_string(),
            interpretation,
            max_residual: 0.0,
            tolerance: Some(tolerance),
            asserted: true,
            passed: true,
            samples: 0,
            notes: String::new(),
            trace: Vec::new(),
        }
    }

    pub fn measured(identity: &str, interpretation: Interpretation) -> Self {
        Self {
            tolerance: None,
            asserted: false,
            ..Self::asserted(identity, interpretation, 0.0)
        }
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    /// Folds one sample's residual in. NaN counts as a failure.
    pub fn record(&mut self, residual: f64) {
        self.samples += 1;
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = if residual.is_nan() { f64::NAN } else { residual };
        }
        self.refresh();
    }

    pub fn merge(&mut self, other: &IdentityReport) {
        let m = self.max_residual;
        self.max_residual = if m.is_nan() || other.max_residual.is_nan() {
            f64::NAN
        } else {
            m.max(other.max_residual)
        };
        self.samples += other.samples;
        self.trace.extend(other.trace.iter().cloned());
        self.refresh();
    }

    fn refresh(&mut self) {
        self.passed = match self.tolerance {
            Some(tol) if self.asserted => self.max_residual <= tol,
            _ => !self.max_residual.is_nan(),
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralReport {
    pub metric: String,
    pub identities: Vec<IdentityReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

impl StructuralReport {
    pub fn new(metric: &str) -> Self {
        Self {
            metric: metric.to_string(),
            identities: Vec::new(),
            notices: Vec::new(),
        }
    }

    pub fn get(&self, identity: &str) -> Option<&IdentityReport> {
        self.identities.iter().find(|r| r.identity == identity)
    }

    pub fn asserted_failures(&self) -> Vec<&IdentityReport> {
        self.identities
            .iter()
            .filter(|r| r.asserted && !r.passed)
            .collect()
    }

    pub fn all_asserted_pass(&self) -> bool {
        self.asserted_failures().is_empty()
    }
}
