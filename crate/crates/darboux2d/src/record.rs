//! Serializable description of a transformation chain. A record lists the
//! operations in order; together with the named seed fields it determines
//! the final potential and solutions completely, so a chain can be replayed
//! from its record.

use serde::{Deserialize, Serialize};

/// One operation in a transformation chain. String fields name entries in
/// the chain's table of named scalar fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TransformStep {
    /// Sets the current potential to −Δh + |∇h|² for the named drift field.
    DriftPotential { h: String },
    /// Sets the current potential to the named field directly.
    SeedPotential { field: String },
    /// Recovers the nonlocal variable for the pair (y, yh) and makes it the
    /// current one.
    RecoverQ {
        y: String,
        yh: String,
        base: [f64; 2],
        additive_constant: f64,
        panels_per_unit: u32,
    },
    /// Replaces the potential via the shift transformation with drift h and
    /// shift s.
    ShiftPotential { h: String, s: String },
    /// Maps the named solution through the shift transformation, consuming
    /// the current nonlocal variable, and stores the result under `output`.
    ShiftSolution {
        h: String,
        s: String,
        y: String,
        output: String,
    },
    /// Replaces the potential via the Moutard transformation with the named
    /// seed solution.
    MoutardPotential { seed: String },
    /// Divides the current nonlocal variable by the seed and stores the
    /// transformed solution under `output`.
    MoutardSolution { seed: String, output: String },
    /// Replaces the potential via the twofold Moutard transformation built
    /// on the pair (y1, y2); the current nonlocal variable must have been
    /// recovered from that pair.
    TwofoldPotential { y1: String, y2: String },
    /// Divides y1 by the current nonlocal variable and stores the result
    /// under `output`.
    TwofoldSolution { y1: String, output: String },
    /// Rescales a named field in place.
    Normalize { field: String, factor: f64 },
}

/// An ordered list of transformation steps.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct TransformRecord {
    pub steps: Vec<TransformStep>,
}

impl TransformRecord {
    pub fn new(steps: Vec<TransformStep>) -> Self {
        Self { steps }
    }

    /// Appends the steps of `other`, returning the combined record.
    pub fn extended(&self, extra: impl IntoIterator<Item = TransformStep>) -> Self {
        let mut steps = self.steps.clone();
        steps.extend(extra);
        Self { steps }
    }
}
