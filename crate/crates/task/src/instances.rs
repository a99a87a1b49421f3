//! Direct interpretations for continuation and task domains.
//!
//! Handler invocation counts: Return and Continue never; Fork and Each once
//! per element; Await once on success and never on failure.

use std::sync::Arc;

use ldk_core::{Desc, DomainPattern, InstanceRegistry, Interpretation, Result, Value};
use ldk_keywords::collect::{empty_of, lift_into};
use ldk_keywords::{as_deferred, kw};

use crate::fork::{each_sequential, fork_join, FORK};
use crate::task::drive;
use crate::trampoline::{suspend_in, Trampoline};

fn any() -> DomainPattern {
    DomainPattern::Any
}

/// `Return` in `Cont(answer, value)`: the handler is skipped and the
/// returned value goes straight to the final continuation.
pub fn return_continuation() -> Interpretation {
    Interpretation::new(
        "returnContinuationDsl",
        kw::RETURN,
        DomainPattern::cont(any(), any()),
        |domain, k, _| {
            let (answer, value) = domain
                .as_cont()
                .map(|(a, v)| (a.clone(), v.clone()))
                .unwrap_or_else(|| (Desc::any(), Desc::any()));
            let returned = lift_into(&value, k.payload(0).clone());
            Ok(Value::func(move |cont: Value| {
                let returned = returned.clone();
                suspend_in(&answer, Arc::new(move || cont.apply(returned.clone())))
            }))
        },
    )
}

/// `Continue` in `Cont(answer, collection)` delivers the empty collection.
pub fn continue_continuation() -> Interpretation {
    Interpretation::new(
        "continueContinuationDsl",
        kw::CONTINUE,
        DomainPattern::cont(any(), DomainPattern::collection(any())),
        |domain, _, _| {
            let (answer, value) = domain
                .as_cont()
                .map(|(a, v)| (a.clone(), v.clone()))
                .unwrap_or_else(|| (Desc::any(), Desc::any()));
            let empty = empty_of(&value)?;
            Ok(Value::func(move |cont: Value| {
                let empty = empty.clone();
                suspend_in(&answer, Arc::new(move || cont.apply(empty.clone())))
            }))
        },
    )
}

pub fn fork() -> Interpretation {
    Interpretation::new(
        "forkDsl",
        FORK,
        DomainPattern::task(DomainPattern::collection(any())),
        |domain, k, handler| fork_join(domain, k.payload(0), handler),
    )
}

pub fn task_each() -> Interpretation {
    Interpretation::new(
        "taskEachDsl",
        kw::EACH,
        DomainPattern::task(DomainPattern::collection(any())),
        |domain, k, handler| each_sequential(domain, k.payload(0), handler),
    )
}

/// `Await` in the task answer domain: suspends until the deferred settles,
/// then continues with its value or raises its failure.
pub fn task_await() -> Interpretation {
    Interpretation::new(
        "taskAwaitDsl",
        kw::AWAIT,
        DomainPattern::Exact(Desc::task_answer()),
        |_, k, handler| {
            let awaited = as_deferred(k.payload(0))?.clone();
            Ok(Value::func(move |raise: Value| {
                let (handler, raise) = (handler.clone(), raise.clone());
                awaited.on_complete(move |r| {
                    drive(match r {
                        Ok(v) => handler
                            .apply(v)
                            .and_then(|answer| answer.apply(raise.clone()))
                            .or_else(|e| raise.apply(e.into_value())),
                        Err(e) => raise.apply(e.into_value()),
                    })
                });
                Ok(Trampoline::done(Value::Unit))
            }))
        },
    )
}

/// Every direct interpretation in this crate, in priority order.
pub fn all() -> Vec<Interpretation> {
    vec![
        return_continuation(),
        continue_continuation(),
        fork(),
        task_each(),
        task_await(),
    ]
}

pub fn register_all(mut registry: InstanceRegistry) -> Result<InstanceRegistry> {
    for interp in all() {
        registry = registry.register(interp)?;
    }
    Ok(registry)
}
