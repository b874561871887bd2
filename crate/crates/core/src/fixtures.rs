//! Reference shifts and integrals shipped with the crate.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::test_functions::{FunctionKind, TestFunction};

const REFERENCE_TOML: &str = include_str!("../fixtures/reference_values.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceRun {
    pub shifts: Vec<Vec<f64>>,
    pub final_n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct ReferenceIntegral {
    pub a: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceValues {
    pub quad1d: ReferenceRun,
    pub quad2d: ReferenceRun,
    pub f1_square: Vec<ReferenceIntegral>,
}

impl ReferenceRun {
    pub fn shift_points(&self) -> Vec<Point> {
        self.shifts.iter().map(|s| Point::new(s)).collect()
    }

    pub fn function(&self, kind: FunctionKind, a: f64) -> Result<TestFunction> {
        TestFunction::new(kind, a, self.shift_points())
    }
}

/// Parse a reference file in the shipped schema.
pub fn parse(text: &str) -> Result<ReferenceValues> {
    toml::from_str(text).map_err(|e| Error::Fixture(e.to_string()))
}

/// The reference values compiled into the crate.
pub fn reference() -> &'static ReferenceValues {
    static VALUES: OnceLock<ReferenceValues> = OnceLock::new();
    VALUES.get_or_init(|| parse(REFERENCE_TOML).expect("shipped reference file parses"))
}
