//! Parallel and sequential traversal of a source inside the task domain.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ldk_core::{Desc, DslError, KeywordValue, Result, Value};
use ldk_keywords::collect::{elements, into_collection_items};
use parking_lot::Mutex;

use crate::scheduler;
use crate::task::{drive, resume, run_task, start, task};
use crate::trampoline::Trampoline;

pub const FORK: &str = "Fork";

/// Duplicates the control flow once per element of `source`.
pub fn fork_kw(source: Value) -> KeywordValue {
    KeywordValue::new(FORK, vec![source], Desc::any())
}

fn collection_domain(domain: &Desc) -> Result<Desc> {
    match domain.as_task() {
        Some(c @ Desc::Collection(..)) => Ok(c.clone()),
        _ => Err(DslError::eval(format!(
            "expected a task of a collection, found {domain}"
        ))),
    }
}

fn build(domain: &Desc, items: Vec<Value>) -> Value {
    match domain {
        Desc::Collection(kind, _) => Value::collection(*kind, items),
        _ => Value::list(items),
    }
}

/// Starts `handler(a)` for every element as its own scheduler job and joins
/// the branch results in input order. All branches settle before a failure
/// is reported; the reported failure is the first in input order.
pub fn fork_join(domain: &Desc, source: &Value, handler: Value) -> Result<Value> {
    let coll = collection_domain(domain)?;
    let items = elements(source)?;
    Ok(task(coll.clone(), move |k, raise| {
        let n = items.len();
        if n == 0 {
            return resume(k, build(&coll, Vec::new()), raise);
        }
        let slots: Arc<Mutex<Vec<Option<Result<Value>>>>> = Arc::new(Mutex::new(vec![None; n]));
        let remaining = Arc::new(AtomicUsize::new(n));
        let coll = coll.clone();
        let join = Arc::new(move |slots: &Mutex<Vec<Option<Result<Value>>>>| {
            let settled = std::mem::take(&mut *slots.lock());
            let mut out = Vec::new();
            for r in settled.into_iter().flatten() {
                match r {
                    Ok(v) => out.extend(into_collection_items(&coll, v)),
                    Err(e) => return drive(raise.apply(e.into_value())),
                }
            }
            drive(resume(k.clone(), build(&coll, out), raise.clone()))
        });
        let sched = scheduler::current();
        for (i, item) in items.iter().enumerate() {
            let (handler, item) = (handler.clone(), item.clone());
            let (slots, remaining, join) = (slots.clone(), remaining.clone(), join.clone());
            sched.submit(Box::new(move || {
                let settle = move |r: Result<Value>| {
                    slots.lock()[i] = Some(r);
                    if remaining.fetch_sub(1, Ordering::SeqCst) == 1 {
                        join(&slots);
                    }
                };
                match handler.apply(item) {
                    Ok(branch) => run_task(&branch, settle),
                    Err(e) => settle(Err(e)),
                }
            }));
        }
        Ok(Trampoline::done(Value::Unit))
    }))
}

struct Sequential {
    items: Vec<Value>,
    handler: Value,
    domain: Desc,
    k: Value,
    raise: Value,
    acc: Mutex<Vec<Value>>,
}

fn sequential_step(state: Arc<Sequential>, i: usize) -> Result<Value> {
    if i == state.items.len() {
        let out = std::mem::take(&mut *state.acc.lock());
        return resume(
            state.k.clone(),
            build(&state.domain, out),
            state.raise.clone(),
        );
    }
    let branch = match state.handler.apply(state.items[i].clone()) {
        Ok(b) => b,
        Err(e) => return state.raise.apply(e.into_value()),
    };
    let next = state.clone();
    let k = Value::func(move |v: Value| {
        next.acc
            .lock()
            .extend(into_collection_items(&next.domain, v));
        let next = next.clone();
        Ok(Value::func(move |_| {
            let next = next.clone();
            Ok(Trampoline::more(move || {
                sequential_step(next.clone(), i + 1)
            }))
        }))
    });
    start(&branch, k, state.raise.clone())
}

/// Runs `handler(a)` for each element in turn; a failure skips the rest.
pub fn each_sequential(domain: &Desc, source: &Value, handler: Value) -> Result<Value> {
    let coll = collection_domain(domain)?;
    let items = elements(source)?;
    Ok(task(coll.clone(), move |k, raise| {
        let state = Sequential {
            items: items.clone(),
            handler: handler.clone(),
            domain: coll.clone(),
            k,
            raise,
            acc: Mutex::new(Vec::new()),
        };
        sequential_step(Arc::new(state), 0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{blocking_await, task_delay, task_raise, task_unit};

    fn domain() -> Desc {
        Desc::task(Desc::list(Desc::int()))
    }

    fn ints(v: &[i64]) -> Value {
        Value::list(v.iter().map(|&i| Value::Int(i)).collect())
    }

    #[test]
    fn fork_joins_in_input_order_despite_delays() {
        let handler = Value::func(|a: Value| {
            let n = a.as_int()?;
            Ok(task_delay(
                (10 - n) as u64,
                Value::list(vec![Value::Int(n)]),
            ))
        });
        let t = fork_join(&domain(), &ints(&[1, 2, 3, 4]), handler).unwrap();
        assert_eq!(blocking_await(&t, None).unwrap(), ints(&[1, 2, 3, 4]));
    }

    #[test]
    fn fork_over_empty_source() {
        let t = fork_join(&domain(), &ints(&[]), Value::func(|_| panic!("started"))).unwrap();
        assert_eq!(blocking_await(&t, None).unwrap(), ints(&[]));
    }

    #[test]
    fn sequential_failure_stops_remaining_branches() {
        let calls = Arc::new(AtomicUsize::new(0));
        let seen = calls.clone();
        let handler = Value::func(move |a: Value| {
            seen.fetch_add(1, Ordering::SeqCst);
            if a.as_int()? == 2 {
                Ok(task_raise(DslError::eval("second")))
            } else {
                Ok(task_unit(Value::list(vec![a])))
            }
        });
        let t = each_sequential(&domain(), &ints(&[1, 2, 3]), handler).unwrap();
        assert!(blocking_await(&t, None).is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }
}
