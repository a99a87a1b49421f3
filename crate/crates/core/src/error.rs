use std::fmt;

use crate::descriptor::DomainDescriptor;
use crate::value::Value;

/// One node of the search performed by a failed resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchNode {
    pub domain: DomainDescriptor,
    /// Name of the derivation rule that led here, `None` at the root.
    pub via: Option<String>,
    pub children: Vec<SearchNode>,
    pub depth_exhausted: bool,
}

impl SearchNode {
    pub fn new(domain: DomainDescriptor, via: Option<String>) -> Self {
        SearchNode {
            domain,
            via,
            children: Vec::new(),
            depth_exhausted: false,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SearchNode::size).sum::<usize>()
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = "  ".repeat(indent);
        match &self.via {
            Some(rule) => write!(f, "{pad}{rule} -> {}", self.domain)?,
            None => write!(f, "{pad}{}", self.domain)?,
        }
        if self.depth_exhausted {
            f.write_str(" (depth exhausted)")?;
        }
        writeln!(f)?;
        for child in &self.children {
            child.render(f, indent + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for SearchNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, 0)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DslError {
    #[error("protocol violation: interpretation for `{expected}` applied to keyword `{found}`")]
    Protocol { expected: String, found: String },

    #[error("duplicate instance for `{kind}` with pattern {pattern}")]
    Duplicate { kind: String, pattern: String },

    #[error("registry is frozen")]
    Frozen,

    #[error("registry must be frozen before resolution")]
    NotFrozen,

    #[error("no interpretation of `{kind}` for domain {domain}\nsearch tree:\n{tree}")]
    Resolution {
        kind: String,
        domain: DomainDescriptor,
        tree: Box<SearchNode>,
    },

    #[error("derivation depth limit {limit} reached resolving `{kind}` for domain {domain}")]
    DepthLimit {
        kind: String,
        domain: DomainDescriptor,
        limit: usize,
        tree: Box<SearchNode>,
    },

    #[error("uncaught: {0}")]
    Thrown(Value),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("channel error: {0}")]
    Channel(String),
}

impl DslError {
    pub fn eval(msg: impl Into<String>) -> Self {
        DslError::Eval(msg.into())
    }

    /// The error as a first-class value, for delivery to a failure handler.
    pub fn into_value(self) -> Value {
        match self {
            DslError::Thrown(v) => v,
            other => Value::Error(std::sync::Arc::new(other)),
        }
    }

    /// Inverse of [`DslError::into_value`].
    pub fn from_value(value: Value) -> Self {
        match value {
            Value::Error(e) => (*e).clone(),
            other => DslError::Thrown(other),
        }
    }
}

pub type Result<T, E = DslError> = std::result::Result<T, E>;
