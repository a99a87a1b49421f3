//! Task values: `k -> raise -> trampoline`, tagged with their descriptor.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use ldk_core::{Desc, DslError, Func, Result, Value};
use ldk_keywords::{set_wait_helper, Deferred};

use crate::scheduler;
use crate::trampoline::{run, suspend_in, Trampoline};

/// Builds a task from its body `(success, raise) -> trampoline`.
pub fn task(
    value_type: Desc,
    body: impl Fn(Value, Value) -> Result<Value> + Send + Sync + 'static,
) -> Value {
    let body = Arc::new(body);
    let f = Func::unary(move |k: Value| {
        let body = body.clone();
        Ok(Value::func(move |raise: Value| body(k.clone(), raise)))
    });
    Value::Func(f.with_desc(Desc::task(value_type)))
}

/// Starts `t`, routing a synchronous failure to `raise`.
pub fn start(t: &Value, k: Value, raise: Value) -> Result<Value> {
    match t.apply(k).and_then(|answer| answer.apply(raise.clone())) {
        Ok(tramp) => Ok(tramp),
        Err(e) => raise.apply(e.into_value()),
    }
}

/// Delivers `v` to `k` in a fresh trampoline step.
pub fn resume(k: Value, v: Value, raise: Value) -> Result<Value> {
    suspend_in(&Desc::task_answer(), Arc::new(move || k.apply(v.clone())))?.apply(raise)
}

pub fn task_unit(v: Value) -> Value {
    task(Desc::any(), move |k, raise| resume(k, v.clone(), raise))
}

pub fn task_raise(error: DslError) -> Value {
    let e = error.into_value();
    task(Desc::any(), move |_, raise| {
        let (raise, e) = (raise.clone(), e.clone());
        Ok(Trampoline::more(move || raise.apply(e.clone())))
    })
}

/// Runs a trampoline produced on a scheduler thread to completion.
pub fn drive(tramp: Result<Value>) {
    let _ = tramp.and_then(run);
}

/// Completes with `v` from a job on the current scheduler, `ticks` later.
pub fn task_delay(ticks: u64, v: Value) -> Value {
    task(Desc::any(), move |k, raise| {
        let v = v.clone();
        scheduler::current().submit_after(ticks, Box::new(move || drive(resume(k, v, raise))));
        Ok(Trampoline::done(Value::Unit))
    })
}

/// Completes with `v` from a job on the current scheduler.
pub fn task_async(v: Value) -> Value {
    task_delay(0, v)
}

/// Runs `t`, reporting its outcome exactly once.
pub fn run_task(t: &Value, on_outcome: impl Fn(Result<Value>) + Send + Sync + 'static) {
    let reported = Arc::new(AtomicBool::new(false));
    let report = Arc::new(move |r: Result<Value>| {
        if !reported.swap(true, Ordering::SeqCst) {
            on_outcome(r);
        }
    });
    let on_success = report.clone();
    let k = Value::func(move |v: Value| {
        let on_success = on_success.clone();
        Ok(Value::func(move |_raise: Value| {
            on_success(Ok(v.clone()));
            Ok(Trampoline::done(Value::Unit))
        }))
    });
    let on_failure = report.clone();
    let raise = Value::func(move |e: Value| {
        on_failure(Err(DslError::from_value(e)));
        Ok(Trampoline::done(Value::Unit))
    });
    if let Err(e) = start(t, k, raise).and_then(run) {
        report(Err(e));
    }
}

pub fn to_deferred(t: &Value) -> Deferred {
    let d = Deferred::new();
    let target = d.clone();
    run_task(t, move |r| {
        target.complete(r);
    });
    d
}

/// Runs `t` and blocks until it settles; the current scheduler's queue is
/// drained while waiting.
pub fn blocking_await(t: &Value, timeout: Option<Duration>) -> Result<Value> {
    with_wait_helper(|| to_deferred(t).wait(timeout))
}

/// Runs `f` with deferred waits on this thread draining the current
/// scheduler's queue.
pub fn with_wait_helper<R>(f: impl FnOnce() -> R) -> R {
    let sched = scheduler::current();
    let previous = set_wait_helper(Some(std::rc::Rc::new(move || sched.run_one())));
    let out = f();
    set_wait_helper(previous);
    out
}

/// Runs `body`; on failure runs `on_error` when given; always runs
/// `finalizer` exactly once before the outcome propagates. A failing
/// finalizer replaces the pending outcome.
pub fn try_protect(body: Value, on_error: Option<Value>, finalizer: Option<Value>) -> Value {
    task(Desc::any(), move |k, raise| {
        let deliver_k = k.clone();
        let deliver_raise = raise.clone();
        let deliver = Arc::new(move |outcome: Result<Value>| -> Result<Value> {
            match outcome {
                Ok(v) => match deliver_k
                    .apply(v)
                    .and_then(|a| a.apply(deliver_raise.clone()))
                {
                    Ok(t) => Ok(t),
                    Err(e) => deliver_raise.apply(e.into_value()),
                },
                Err(e) => deliver_raise.apply(e.into_value()),
            }
        });
        let fin_raise = raise.clone();
        let finalizer = finalizer.clone();
        let finish: Arc<dyn Fn(Result<Value>) -> Result<Value> + Send + Sync> =
            Arc::new(move |outcome: Result<Value>| match &finalizer {
                None => deliver(outcome),
                Some(fin) => {
                    let deliver = deliver.clone();
                    let after = Value::func(move |_| {
                        let deliver = deliver.clone();
                        let outcome = outcome.clone();
                        Ok(Value::func(move |_| deliver(outcome.clone())))
                    });
                    let fin_raise = fin_raise.clone();
                    start(fin, after, Value::func(move |fe| fin_raise.apply(fe)))
                }
            });
        let finish_ok = finish.clone();
        let succeed = Value::func(move |v: Value| {
            let finish = finish_ok.clone();
            Ok(Value::func(move |_| finish(Ok(v.clone()))))
        });
        let on_error = on_error.clone();
        let finish_err = finish.clone();
        let fail = Value::func(move |e: Value| {
            let finish = finish_err.clone();
            match &on_error {
                None => finish(Err(DslError::from_value(e))),
                Some(handler) => match handler.apply(e) {
                    Ok(recovery) => {
                        let finish_ok = finish.clone();
                        let recovered = Value::func(move |v: Value| {
                            let finish = finish_ok.clone();
                            Ok(Value::func(move |_| finish(Ok(v.clone()))))
                        });
                        let failed =
                            Value::func(move |e2: Value| finish(Err(DslError::from_value(e2))));
                        start(&recovery, recovered, failed)
                    }
                    Err(e2) => finish(Err(e2)),
                },
            }
        });
        start(&body, succeed, fail)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn counter_task(c: &Arc<AtomicUsize>) -> Value {
        let c = c.clone();
        task(Desc::Unit, move |k, raise| {
            c.fetch_add(1, Ordering::SeqCst);
            resume(k, Value::Unit, raise)
        })
    }

    #[test]
    fn unit_and_raise() {
        assert_eq!(
            blocking_await(&task_unit(Value::Int(5)), None).unwrap(),
            Value::Int(5)
        );
        let err = blocking_await(&task_raise(DslError::Thrown(Value::str("e"))), None).unwrap_err();
        assert!(matches!(err, DslError::Thrown(Value::Str(ref s)) if &**s == "e"));
    }

    #[test]
    fn delayed_task_completes_under_deterministic_scheduler() {
        assert_eq!(
            blocking_await(&task_delay(3, Value::Int(1)), None).unwrap(),
            Value::Int(1)
        );
    }

    #[test]
    fn never_completing_task_times_out() {
        let never = task(Desc::any(), |_, _| Ok(Trampoline::done(Value::Unit)));
        assert!(matches!(
            blocking_await(&never, Some(Duration::from_millis(50))),
            Err(DslError::Timeout(_))
        ));
    }

    #[test]
    fn finalizer_runs_once_on_every_path() {
        let c = Arc::new(AtomicUsize::new(0));
        let ok = try_protect(task_unit(Value::Int(1)), None, Some(counter_task(&c)));
        assert_eq!(blocking_await(&ok, None).unwrap(), Value::Int(1));
        let failing = || task_raise(DslError::eval("x"));
        let handled = try_protect(
            failing(),
            Some(Value::func(|_| Ok(task_unit(Value::Int(0))))),
            Some(counter_task(&c)),
        );
        assert_eq!(blocking_await(&handled, None).unwrap(), Value::Int(0));
        let unhandled = try_protect(failing(), None, Some(counter_task(&c)));
        assert!(blocking_await(&unhandled, None).is_err());
        assert_eq!(c.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn failing_finalizer_supersedes() {
        let t = try_protect(
            task_unit(Value::Int(1)),
            None,
            Some(task_raise(DslError::eval("fin"))),
        );
        assert!(blocking_await(&t, None)
            .unwrap_err()
            .to_string()
            .contains("fin"));
    }
}
