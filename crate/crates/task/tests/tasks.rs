use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use ldk_core::{probe, Desc, DslError, Value};
use ldk_task::task::{resume, start};
use ldk_task::{
    as_channel, blocking_await, each_sequential, fork_join, run, run_task, task, task_async,
    task_delay, task_raise, task_unit, try_protect, with_scheduler, AsyncChannel, Buffer,
    Deterministic, Pool, Scheduler, Trampoline,
};
use parking_lot::Mutex;
use proptest::prelude::*;

fn list_task() -> Desc {
    Desc::task(Desc::list(Desc::any()))
}

fn deterministic<R>(f: impl FnOnce() -> R) -> R {
    let sched: Arc<dyn Scheduler> = Deterministic::new();
    with_scheduler(sched, f)
}

fn thrown(code: i64) -> DslError {
    DslError::Thrown(Value::Int(code))
}

fn counting(counter: &Arc<AtomicUsize>, v: i64) -> Value {
    let counter = counter.clone();
    task(Desc::int(), move |k, raise| {
        counter.fetch_add(1, Ordering::SeqCst);
        resume(k, Value::Int(v), raise)
    })
}

fn countdown(n: u64) -> ldk_core::Result<Value> {
    if n == 0 {
        Ok(Trampoline::done(Value::Int(0)))
    } else {
        Ok(Trampoline::more(move || countdown(n - 1)))
    }
}

#[test]
fn long_trampolines_run_in_constant_depth() {
    probe::reset();
    let base = probe::current_depth();
    assert_eq!(run(countdown(1_000_000).unwrap()).unwrap(), Value::Int(0));
    assert!(
        probe::max_depth() - base <= 2,
        "depth {}",
        probe::max_depth() - base
    );
}

#[test]
fn run_task_reports_a_single_outcome() {
    let twice = task(Desc::int(), |k, raise| {
        let first = k.apply(Value::Int(1))?.apply(raise.clone())?;
        run(first)?;
        let second = k.apply(Value::Int(2))?.apply(raise.clone())?;
        run(second)?;
        raise.apply(Value::Int(3))
    });
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = seen.clone();
    run_task(&twice, move |r| {
        sink.lock().push(r.map_err(|e| e.to_string()))
    });
    assert_eq!(*seen.lock(), [Ok(Value::Int(1))]);
}

#[test]
fn delays_complete_in_tick_order() {
    deterministic(|| {
        let order = Arc::new(Mutex::new(Vec::new()));
        for (ticks, tag) in [(3, 30), (1, 10), (2, 20), (0, 0)] {
            let sink = order.clone();
            run_task(&task_delay(ticks, Value::Int(tag)), move |r| {
                sink.lock().push(r.unwrap().as_int().unwrap())
            });
        }
        assert!(order.lock().is_empty());
        ldk_task::current().run_one();
        while ldk_task::current().run_one() {}
        assert_eq!(*order.lock(), [0, 10, 20, 30]);
    });
}

#[test]
fn blocking_await_times_out_on_a_silent_task() {
    let silent = task(Desc::int(), |_, _| Ok(Trampoline::done(Value::Unit)));
    let out = deterministic(|| blocking_await(&silent, Some(Duration::from_millis(20))));
    assert!(matches!(out, Err(DslError::Timeout(_))), "{out:?}");
}

#[test]
fn pool_runs_many_async_tasks() {
    let pool = Pool::new(4);
    with_scheduler(pool.scheduler(), || {
        let items = Value::list((0..2000).map(Value::Int).collect());
        let handler = Value::func(|v: Value| Ok(task_async(Value::Int(v.as_int()? * 2))));
        let joined = fork_join(&list_task(), &items, handler).unwrap();
        let out = blocking_await(&joined, Some(Duration::from_secs(20))).unwrap();
        let got: Vec<i64> = out
            .sequence()
            .unwrap()
            .map(|v| v.as_int().unwrap())
            .collect();
        assert_eq!(got, (0..2000).map(|i| i * 2).collect::<Vec<_>>());
    });
}

#[test]
fn failing_finalizer_replaces_the_outcome() {
    deterministic(|| {
        let protected = try_protect(task_unit(Value::Int(1)), None, Some(task_raise(thrown(7))));
        assert!(matches!(
            blocking_await(&protected, None),
            Err(DslError::Thrown(Value::Int(7)))
        ));
        let recovered = try_protect(
            task_raise(thrown(1)),
            Some(Value::func(|e: Value| {
                Ok(task_unit(Value::Int(e.as_int()? + 100)))
            })),
            None,
        );
        assert_eq!(blocking_await(&recovered, None).unwrap(), Value::Int(101));
    });
}

#[test]
fn synchronous_errors_reach_raise() {
    let broken = task(Desc::int(), |_, _| Err(thrown(5)));
    let seen = Arc::new(Mutex::new(None));
    let sink = seen.clone();
    let k = Value::func(|_| panic!("success path taken"));
    let raise = Value::func(move |e: Value| {
        *sink.lock() = Some(e);
        Ok(Trampoline::done(Value::Unit))
    });
    run(start(&broken, k, raise).unwrap()).unwrap();
    assert_eq!(*seen.lock(), Some(Value::Int(5)));
}

#[test]
fn channel_rejects_use_after_shutdown_or_close() {
    deterministic(|| {
        let value = AsyncChannel::open();
        let ch = as_channel(&value).unwrap();
        assert_eq!(
            blocking_await(&ch.write(Buffer::wrap(b"abc")), None).unwrap(),
            Value::Int(3)
        );
        ch.shutdown_output();
        assert!(matches!(
            blocking_await(&ch.write(Buffer::wrap(b"d")), None),
            Err(DslError::Channel(_))
        ));
        let buf = Buffer::allocate(8);
        assert_eq!(
            blocking_await(&ch.read(buf.clone()), None).unwrap(),
            Value::Int(3)
        );
        assert_eq!(blocking_await(&ch.read(buf), None).unwrap(), Value::Int(-1));
        ch.close();
        assert!(ch.is_closed());
        assert!(matches!(
            blocking_await(&ch.read(Buffer::allocate(1)), None),
            Err(DslError::Channel(_))
        ));
        assert_eq!(ch.written(), b"abc");
    });
}

proptest! {
    #[test]
    fn fork_join_keeps_input_order(delays in proptest::collection::vec(0u64..10, 0..16)) {
        let n = delays.len();
        let out = deterministic(|| {
            let delays = delays.clone();
            let handler = Value::func(move |i: Value| {
                let i = i.as_int()?;
                Ok(task_delay(delays[i as usize], Value::Int(i)))
            });
            let items = Value::list((0..n as i64).map(Value::Int).collect());
            blocking_await(&fork_join(&list_task(), &items, handler).unwrap(), None)
        }).unwrap();
        let got: Vec<i64> = out.sequence().unwrap().map(|v| v.as_int().unwrap()).collect();
        prop_assert_eq!(got, (0..n as i64).collect::<Vec<_>>());
    }

    #[test]
    fn fork_join_settles_every_branch_and_reports_the_first_failure(
        fails in proptest::collection::vec(any::<bool>(), 1..10),
        delays in proptest::collection::vec(0u64..6, 10),
    ) {
        let started = Arc::new(AtomicUsize::new(0));
        let counter = started.clone();
        let (fails2, n) = (fails.clone(), fails.len());
        let out = deterministic(move || {
            let handler = Value::func(move |i: Value| {
                let i = i.as_int()? as usize;
                let body = if fails2[i] { task_raise(thrown(i as i64)) } else { counting(&counter, i as i64) };
                let delayed = task_delay(delays[i], Value::Unit);
                Ok(task(Desc::int(), move |k, raise| {
                    let body = body.clone();
                    let then = Value::func(move |_| {
                        let (body, k) = (body.clone(), k.clone());
                        Ok(Value::func(move |raise: Value| start(&body, k.clone(), raise)))
                    });
                    start(&delayed, then, raise)
                }))
            });
            let items = Value::list((0..n as i64).map(Value::Int).collect());
            blocking_await(&fork_join(&list_task(), &items, handler).unwrap(), None)
        });
        prop_assert_eq!(started.load(Ordering::SeqCst), fails.iter().filter(|f| !**f).count());
        match fails.iter().position(|&f| f) {
            Some(first) => prop_assert!(matches!(out, Err(DslError::Thrown(Value::Int(c))) if c == first as i64)),
            None => prop_assert_eq!(out.unwrap().sequence().unwrap().count(), fails.len()),
        }
    }

    #[test]
    fn each_sequential_stops_at_the_first_failure(fails in proptest::collection::vec(any::<bool>(), 0..10)) {
        let started = Arc::new(AtomicUsize::new(0));
        let counter = started.clone();
        let (flags, n) = (fails.clone(), fails.len());
        let out = deterministic(move || {
            let handler = Value::func(move |i: Value| {
                let i = i.as_int()? as usize;
                counter.fetch_add(1, Ordering::SeqCst);
                Ok(if flags[i] { task_raise(thrown(i as i64)) } else { task_async(Value::Int(i as i64)) })
            });
            let items = Value::list((0..n as i64).map(Value::Int).collect());
            blocking_await(&each_sequential(&list_task(), &items, handler).unwrap(), None)
        });
        match fails.iter().position(|&f| f) {
            Some(first) => {
                prop_assert!(matches!(out, Err(DslError::Thrown(Value::Int(c))) if c == first as i64));
                prop_assert_eq!(started.load(Ordering::SeqCst), first + 1);
            }
            None => {
                let got: Vec<i64> = out.unwrap().sequence().unwrap().map(|v| v.as_int().unwrap()).collect();
                prop_assert_eq!(got, (0..fails.len() as i64).collect::<Vec<_>>());
                prop_assert_eq!(started.load(Ordering::SeqCst), fails.len());
            }
        }
    }
}
