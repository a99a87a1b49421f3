use std::fmt;
use std::sync::Arc;

use crate::descriptor::DomainDescriptor;
use crate::value::Value;

/// An immutable request for an operation, interpreted per domain.
///
/// `type_arg` carries the type parameter that selects between
/// interpretations of the same kind: the state type read by `Get`, the
/// answer type of the continuation inside `Shift`. `None` means unknown,
/// which matches any candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordValue {
    pub kind: Arc<str>,
    pub payload: Vec<Value>,
    pub value_type: DomainDescriptor,
    pub type_arg: Option<DomainDescriptor>,
}

impl KeywordValue {
    pub fn new(kind: &str, payload: Vec<Value>, value_type: DomainDescriptor) -> Self {
        KeywordValue {
            kind: Arc::from(kind),
            payload,
            value_type,
            type_arg: None,
        }
    }

    pub fn with_type_arg(mut self, ty: Option<DomainDescriptor>) -> Self {
        self.type_arg = ty;
        self
    }

    pub fn payload(&self, index: usize) -> &Value {
        self.payload.get(index).unwrap_or(&Value::Unit)
    }

    pub fn sig(&self) -> KeywordSig {
        KeywordSig {
            kind: self.kind.clone(),
            type_arg: self.type_arg.clone(),
        }
    }

    pub fn into_value(self) -> Value {
        Value::Keyword(Arc::new(self))
    }
}

impl fmt::Display for KeywordValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        if let Some(ty) = &self.type_arg {
            write!(f, "[{ty}]")?;
        }
        f.write_str("(")?;
        for (i, p) in self.payload.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// The part of a keyword that resolution looks at.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeywordSig {
    pub kind: Arc<str>,
    pub type_arg: Option<DomainDescriptor>,
}

impl KeywordSig {
    pub fn new(kind: &str) -> Self {
        KeywordSig {
            kind: Arc::from(kind),
            type_arg: None,
        }
    }

    pub fn with_type_arg(mut self, ty: DomainDescriptor) -> Self {
        self.type_arg = Some(ty);
        self
    }

    /// Whether a pattern position bound to the keyword's type argument
    /// accepts `domain`.
    pub fn accepts(&self, domain: &DomainDescriptor) -> bool {
        self.type_arg.as_ref().is_none_or(|t| t.compatible(domain))
    }
}

impl From<&str> for KeywordSig {
    fn from(kind: &str) -> Self {
        KeywordSig::new(kind)
    }
}

impl fmt::Display for KeywordSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        if let Some(ty) = &self.type_arg {
            write!(f, "[{ty}]")?;
        }
        Ok(())
    }
}
