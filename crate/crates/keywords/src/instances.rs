//! Direct interpretations of the built-in keywords.
//!
//! Handler invocation counts: Yield once (lazily, on tail forcing), Await
//! once on success and never on failure, Shift as often as the
//! continuation chooses, Return and Continue never, Get and Put once per
//! application of the resulting state function, Each once per element.

use std::sync::Arc;
use std::time::Duration;

use ldk_core::{
    Desc, DomainPattern, DslError, InstanceRegistry, Interpretation, KeywordSig, Result, Value,
};
use parking_lot::Mutex;

use crate::collect::{elements, empty_of, into_collection_items, to_stream};
use crate::deferred::{as_deferred, Deferred};
use crate::kw;
use crate::stream::{append, as_stream, LazyStream};

static STREAM_AWAIT_TIMEOUT: Mutex<Option<Duration>> = Mutex::new(None);

/// Bounds the blocking wait performed when forcing the tail of an
/// asynchronous generator. `None` waits indefinitely.
pub fn set_stream_await_timeout(timeout: Option<Duration>) {
    *STREAM_AWAIT_TIMEOUT.lock() = timeout;
}

pub fn stream_await_timeout() -> Option<Duration> {
    *STREAM_AWAIT_TIMEOUT.lock()
}

fn any() -> Box<DomainPattern> {
    Box::new(DomainPattern::Any)
}

fn is_plain(d: &Desc, _: &KeywordSig) -> bool {
    !matches!(d, Desc::Fn(..) | Desc::Error(_) | Desc::Trampoline(_))
}

fn is_sequence_domain(d: &Desc, _: &KeywordSig) -> bool {
    matches!(d, Desc::Collection(..) | Desc::Stream(_))
}

/// `Yield` into `Stream[Deferred[_]]`: the head is an already settled deferred.
pub fn deferred_stream_yield() -> Interpretation {
    Interpretation::new(
        "deferredStreamYieldDsl",
        kw::YIELD,
        DomainPattern::Stream(Box::new(DomainPattern::Deferred(any()))),
        |_, k, handler| {
            let head = Deferred::succeeded(k.payload(0).clone()).to_value();
            Ok(LazyStream::cons(head, move || handler.apply(Value::Unit)))
        },
    )
}

/// `Yield` into a plain stream.
pub fn stream_yield() -> Interpretation {
    Interpretation::new(
        "yieldDsl",
        kw::YIELD,
        DomainPattern::Stream(any()),
        |_, k, handler| {
            Ok(LazyStream::cons(k.payload(0).clone(), move || {
                handler.apply(Value::Unit)
            }))
        },
    )
}

/// `Await` into a deferred: chains the handler after the awaited value.
pub fn deferred_await() -> Interpretation {
    Interpretation::new(
        "awaitDsl",
        kw::AWAIT,
        DomainPattern::Deferred(any()),
        |_, k, handler| {
            let awaited = as_deferred(k.payload(0))?;
            Ok(awaited.flat_map(move |v| handler.apply(v)).to_value())
        },
    )
}

/// `Await` into an asynchronous generator. The head follows the head of
/// the handler's stream; forcing the tail blocks until the awaited value
/// and the handler's stream are available.
pub fn deferred_stream_await() -> Interpretation {
    Interpretation::new(
        "deferredStreamAwaitDsl",
        kw::AWAIT,
        DomainPattern::Stream(Box::new(DomainPattern::Deferred(any()))),
        |_, k, handler| {
            let awaited = as_deferred(k.payload(0))?;
            let mapped = awaited.map(move |v| handler.apply(v));
            let head = mapped.flat_map(|stream| {
                let s = as_stream(&stream)?;
                s.head()
                    .cloned()
                    .ok_or_else(|| DslError::eval("asynchronous generator produced no element"))
            });
            Ok(LazyStream::cons(head.to_value(), move || {
                let stream = mapped.wait(stream_await_timeout())?;
                as_stream(&stream)?.force_tail()
            }))
        },
    )
}

/// `Shift` forwards the handler to the continuation unchanged.
pub fn shift() -> Interpretation {
    Interpretation::new(
        "shiftDsl",
        kw::SHIFT,
        DomainPattern::KeywordArg,
        |_, k, handler| k.payload(0).apply(handler),
    )
}

/// `Return` in a non-function domain is the returned value itself.
pub fn return_value() -> Interpretation {
    Interpretation::new(
        "returnDsl",
        kw::RETURN,
        DomainPattern::Custom("plain", is_plain),
        |domain, k, _| {
            let v = k.payload(0).clone();
            match domain {
                Desc::Collection(kind, _) => {
                    Ok(Value::collection(*kind, into_collection_items(domain, v)))
                }
                _ => Ok(v),
            }
        },
    )
}

fn state_pattern() -> DomainPattern {
    DomainPattern::func(DomainPattern::KeywordArg, DomainPattern::Any)
}

/// `Get` reads the state parameter and threads it on unchanged.
pub fn get() -> Interpretation {
    Interpretation::new("getDsl", kw::GET, state_pattern(), |_, _, handler| {
        Ok(Value::func(move |s: Value| {
            handler.apply(s.clone())?.apply(s)
        }))
    })
}

/// `Put` discards the incoming state and continues with the new one.
pub fn put() -> Interpretation {
    Interpretation::new("putDsl", kw::PUT, state_pattern(), |_, k, handler| {
        let value = k.payload(0).clone();
        Ok(Value::func(move |_previous: Value| {
            handler.apply(Value::Unit)?.apply(value.clone())
        }))
    })
}

fn each_into_stream(items: Arc<Vec<Value>>, start: usize, handler: Value) -> Result<Value> {
    let mut i = start;
    while i < items.len() {
        let s = to_stream(handler.apply(items[i].clone())?);
        i += 1;
        if !as_stream(&s)?.is_empty() {
            let rest_items = items.clone();
            let rest_handler = handler.clone();
            return append(s, move || each_into_stream(rest_items, i, rest_handler));
        }
    }
    Ok(LazyStream::empty())
}

/// `Each` concatenates the handler's results over all source elements,
/// building the domain's own collection kind.
pub fn each() -> Interpretation {
    Interpretation::new(
        "eachDsl",
        kw::EACH,
        DomainPattern::Custom("sequence", is_sequence_domain),
        |domain, k, handler| {
            let items = elements(k.payload(0))?;
            match domain {
                Desc::Stream(_) => each_into_stream(Arc::new(items), 0, handler),
                Desc::Collection(kind, _) => {
                    let mut out = Vec::new();
                    for item in items {
                        out.extend(into_collection_items(domain, handler.apply(item)?));
                    }
                    Ok(Value::collection(*kind, out))
                }
                other => Err(DslError::eval(format!("Each cannot build {other}"))),
            }
        },
    )
}

/// `Continue` yields the empty collection of the domain.
pub fn continue_skip() -> Interpretation {
    Interpretation::new(
        "continueDsl",
        kw::CONTINUE,
        DomainPattern::Custom("sequence", is_sequence_domain),
        |domain, _, _| empty_of(domain),
    )
}

/// Every direct interpretation in this crate, in priority order.
pub fn all() -> Vec<Interpretation> {
    vec![
        deferred_stream_yield(),
        stream_yield(),
        deferred_await(),
        deferred_stream_await(),
        shift(),
        return_value(),
        get(),
        put(),
        each(),
        continue_skip(),
    ]
}

pub fn register_all(mut registry: InstanceRegistry) -> Result<InstanceRegistry> {
    for interp in all() {
        registry = registry.register(interp)?;
    }
    Ok(registry)
}
