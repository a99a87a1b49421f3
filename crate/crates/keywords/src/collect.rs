//! Sequence sources and collection building.

use ldk_core::{Desc, DslError, Result, Value};

use crate::stream::{self, LazyStream};

/// Elements of an ordered source: collections, ranges, strings (as
/// characters), tuples and finite streams.
pub fn elements(source: &Value) -> Result<Vec<Value>> {
    if let Some(seq) = source.sequence() {
        return Ok(seq.collect());
    }
    if source.downcast::<LazyStream>().is_some() {
        return stream::to_vec(source);
    }
    Err(DslError::eval(format!(
        "cannot iterate over {} `{source}`",
        source.type_name()
    )))
}

/// The items a handler result contributes to a collection domain: a
/// collection result is spliced in, anything else is a single element.
pub fn into_collection_items(domain: &Desc, v: Value) -> Vec<Value> {
    let elem_is_collection =
        matches!(domain, Desc::Collection(_, e) if matches!(**e, Desc::Collection(..)));
    match v {
        Value::Collection(_, items)
            if !elem_is_collection || items.iter().all(|i| matches!(i, Value::Collection(..))) =>
        {
            items.as_ref().clone()
        }
        other => vec![other],
    }
}

/// Lifts a value into the collection domain `domain`.
pub fn lift_into(domain: &Desc, v: Value) -> Value {
    match domain {
        Desc::Collection(kind, _) => Value::collection(*kind, into_collection_items(domain, v)),
        Desc::Stream(_) => to_stream(v),
        _ => v,
    }
}

/// A stream value as is, anything else as a one-element stream.
pub fn to_stream(v: Value) -> Value {
    if v.downcast::<LazyStream>().is_some() {
        v
    } else {
        LazyStream::from_values(vec![v])
    }
}

pub fn empty_of(domain: &Desc) -> Result<Value> {
    match domain {
        Desc::Collection(kind, _) => Ok(Value::collection(*kind, Vec::new())),
        Desc::Stream(_) => Ok(LazyStream::empty()),
        other => Err(DslError::eval(format!("no empty value for domain {other}"))),
    }
}
