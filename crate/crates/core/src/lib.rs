//! Keyword values, domain descriptors and the instance resolution engine.

pub mod descriptor;
pub mod error;
pub mod keyword;
pub mod probe;
pub mod registry;
pub mod value;

pub use descriptor::{CollectionKind, Desc, DomainDescriptor};
pub use error::{DslError, Result, SearchNode};
pub use keyword::{KeywordSig, KeywordValue};
pub use registry::{
    cps_apply, ApplyFn, BoundApply, DerivationRule, DomainPattern, InstanceRegistry,
    Interpretation, ResolutionTrace, Resolved, DEFAULT_MAX_DEPTH,
};
pub use value::{Func, Object, Value};
