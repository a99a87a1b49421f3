//! Constructors for the built-in keyword values.

use ldk_core::{Desc, KeywordValue, Value};

pub const YIELD: &str = "Yield";
pub const AWAIT: &str = "Await";
pub const SHIFT: &str = "Shift";
pub const RETURN: &str = "Return";
pub const GET: &str = "Get";
pub const PUT: &str = "Put";
pub const EACH: &str = "Each";
pub const CONTINUE: &str = "Continue";

fn nothing() -> Desc {
    Desc::scalar("Nothing")
}

pub fn yield_kw(element: Value) -> KeywordValue {
    KeywordValue::new(YIELD, vec![element], Desc::Unit)
}

/// `deferred` must be a [`crate::Deferred`] value.
pub fn await_kw(deferred: Value) -> KeywordValue {
    KeywordValue::new(AWAIT, vec![deferred], Desc::any())
}

/// `answer` is the answer type of `continuation`, when known.
pub fn shift_kw(continuation: Value, answer: Option<Desc>) -> KeywordValue {
    KeywordValue::new(SHIFT, vec![continuation], Desc::any()).with_type_arg(answer)
}

pub fn return_kw(value: Value) -> KeywordValue {
    KeywordValue::new(RETURN, vec![value], nothing())
}

/// `state` selects which curried parameter is read.
pub fn get_kw(state: Option<Desc>) -> KeywordValue {
    let value_type = state.clone().unwrap_or_else(Desc::any);
    KeywordValue::new(GET, vec![], value_type).with_type_arg(state)
}

pub fn put_kw(value: Value, state: Option<Desc>) -> KeywordValue {
    KeywordValue::new(PUT, vec![value], Desc::Unit).with_type_arg(state)
}

/// `source` is any ordered sequence: collection, range, string or stream.
pub fn each_kw(source: Value) -> KeywordValue {
    KeywordValue::new(EACH, vec![source], Desc::any())
}

pub fn continue_kw() -> KeywordValue {
    KeywordValue::new(CONTINUE, vec![], nothing())
}
