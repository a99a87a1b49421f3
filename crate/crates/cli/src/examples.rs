//! Runs corpus examples and script files, comparing their output with the
//! expected lines.

use std::sync::Arc;

use ldk_derivation::standard_registry;
use ldk_transform::corpus::{self, Example, EXAMPLES};
use ldk_transform::{compile, Interpreter, ScriptError};

/// Marks an expected output line inside a script file.
pub const EXPECT_PREFIX: &str = "// expect: ";

pub fn names() -> impl Iterator<Item = &'static str> {
    EXAMPLES.iter().map(|e| e.name)
}

pub fn find(name: &str) -> Option<&'static Example> {
    corpus::find(name)
}

/// Output lines of `source`, or the first error it raised.
pub fn run_source(source: &str) -> Result<Vec<String>, ScriptError> {
    let interp = Interpreter::new(Arc::new(standard_registry()));
    interp.load(&compile(source, true)?, None, &[])?;
    Ok(interp.output().lines())
}

/// Lines a script file declares it should print.
pub fn embedded_expectation(source: &str) -> Option<Vec<String>> {
    let lines: Vec<String> = source
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix(EXPECT_PREFIX))
        .map(str::to_string)
        .collect();
    (!lines.is_empty()).then_some(lines)
}

#[derive(Debug)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub expected: Option<Vec<String>>,
}

impl Outcome {
    pub fn matches(&self) -> bool {
        self.expected.as_ref().is_none_or(|e| *e == self.lines)
    }
}

pub fn run_example(example: &Example) -> Result<Outcome, ScriptError> {
    Ok(Outcome {
        lines: run_source(example.source)?,
        expected: Some(example.expected.iter().map(|s| s.to_string()).collect()),
    })
}

pub fn run_file(source: &str) -> Result<Outcome, ScriptError> {
    Ok(Outcome {
        lines: run_source(source)?,
        expected: embedded_expectation(source),
    })
}
