use std::any::Any;
use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ldk_core::{DslError, Object, Result, Value};
use parking_lot::{Condvar, Mutex};

type Callback = Box<dyn FnOnce(Result<Value>) + Send>;

enum State {
    Pending(Vec<Callback>),
    Done(Result<Value>),
}

struct Inner {
    state: Mutex<State>,
    ready: Condvar,
}

/// A one-shot result cell with ordered completion callbacks.
#[derive(Clone)]
pub struct Deferred {
    inner: Arc<Inner>,
}

thread_local! {
    static WAIT_HELPER: RefCell<Option<Rc<dyn Fn() -> bool>>> = const { RefCell::new(None) };
}

/// Installs a hook that [`Deferred::wait`] calls while the result is
/// pending; it returns `true` when it made progress. Lets a single-threaded
/// scheduler run queued work instead of blocking.
pub fn set_wait_helper(helper: Option<Rc<dyn Fn() -> bool>>) -> Option<Rc<dyn Fn() -> bool>> {
    WAIT_HELPER.with(|h| std::mem::replace(&mut *h.borrow_mut(), helper))
}

fn wait_helper() -> Option<Rc<dyn Fn() -> bool>> {
    WAIT_HELPER.with(|h| h.borrow().clone())
}

impl Default for Deferred {
    fn default() -> Self {
        Self::new()
    }
}

impl Deferred {
    pub fn new() -> Self {
        Deferred {
            inner: Arc::new(Inner {
                state: Mutex::new(State::Pending(Vec::new())),
                ready: Condvar::new(),
            }),
        }
    }

    pub fn succeeded(value: Value) -> Self {
        let d = Deferred::new();
        d.complete(Ok(value));
        d
    }

    pub fn failed(error: DslError) -> Self {
        let d = Deferred::new();
        d.complete(Err(error));
        d
    }

    pub fn to_value(&self) -> Value {
        Value::object(self.clone())
    }

    /// Settles the cell; returns `false` if it was already settled.
    pub fn complete(&self, result: Result<Value>) -> bool {
        let callbacks = {
            let mut state = self.inner.state.lock();
            match &mut *state {
                State::Done(_) => return false,
                State::Pending(callbacks) => {
                    let callbacks = std::mem::take(callbacks);
                    *state = State::Done(result.clone());
                    callbacks
                }
            }
        };
        self.inner.ready.notify_all();
        for cb in callbacks {
            cb(result.clone());
        }
        true
    }

    pub fn peek(&self) -> Option<Result<Value>> {
        match &*self.inner.state.lock() {
            State::Done(r) => Some(r.clone()),
            State::Pending(_) => None,
        }
    }

    pub fn is_completed(&self) -> bool {
        self.peek().is_some()
    }

    /// Runs `cb` on completion, or immediately if already complete.
    pub fn on_complete(&self, cb: impl FnOnce(Result<Value>) + Send + 'static) {
        let done = {
            let mut state = self.inner.state.lock();
            match &mut *state {
                State::Pending(callbacks) => {
                    callbacks.push(Box::new(cb));
                    return;
                }
                State::Done(r) => r.clone(),
            }
        };
        cb(done);
    }

    /// Blocks until settled. `None` waits without bound.
    pub fn wait(&self, timeout: Option<Duration>) -> Result<Value> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let helper = wait_helper();
        loop {
            if let Some(result) = self.peek() {
                return result;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(DslError::Timeout(timeout.unwrap_or_default()));
            }
            if let Some(h) = &helper {
                if h() {
                    continue;
                }
            }
            let slice = if helper.is_some() {
                Some(Duration::from_millis(2))
            } else {
                None
            };
            let limit = match (deadline, slice) {
                (Some(d), Some(s)) => Some(d.min(Instant::now() + s)),
                (Some(d), None) => Some(d),
                (None, Some(s)) => Some(Instant::now() + s),
                (None, None) => None,
            };
            let mut state = self.inner.state.lock();
            if let State::Pending(_) = &*state {
                match limit {
                    Some(at) => {
                        self.inner.ready.wait_until(&mut state, at);
                    }
                    None => self.inner.ready.wait(&mut state),
                }
            }
            drop(state);
            if let Some(d) = deadline {
                if Instant::now() >= d && !self.is_completed() {
                    return Err(DslError::Timeout(timeout.unwrap_or_default()));
                }
            }
        }
    }

    /// A deferred settled by `f` applied to this one's success value;
    /// `f` returns another deferred value to follow.
    pub fn flat_map(&self, f: impl FnOnce(Value) -> Result<Value> + Send + 'static) -> Deferred {
        let out = Deferred::new();
        let target = out.clone();
        self.on_complete(move |r| match r.and_then(f) {
            Ok(next) => match next.downcast::<Deferred>() {
                Some(d) => {
                    let t = target.clone();
                    d.on_complete(move |r| {
                        t.complete(r);
                    });
                }
                None => {
                    target.complete(Err(DslError::eval(format!(
                        "expected Deferred from handler, found {} `{next}`",
                        next.type_name()
                    ))));
                }
            },
            Err(e) => {
                target.complete(Err(e));
            }
        });
        out
    }

    /// A deferred holding `f` applied to this one's success value.
    pub fn map(&self, f: impl FnOnce(Value) -> Result<Value> + Send + 'static) -> Deferred {
        let out = Deferred::new();
        let target = out.clone();
        self.on_complete(move |r| {
            target.complete(r.and_then(f));
        });
        out
    }

    pub fn ptr_eq(&self, other: &Deferred) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

/// Views a value as a deferred.
pub fn as_deferred(v: &Value) -> Result<&Deferred> {
    v.downcast::<Deferred>()
        .ok_or_else(|| DslError::eval(format!("expected Deferred, found {} `{v}`", v.type_name())))
}

impl Object for Deferred {
    fn type_name(&self) -> &'static str {
        "Deferred"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.peek() {
            None => f.write_str("Deferred(<pending>)"),
            Some(Ok(v)) => write!(f, "Deferred({v})"),
            Some(Err(e)) => write!(f, "Deferred(<failed: {e}>)"),
        }
    }
}

impl fmt::Debug for Deferred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completes_once_and_preserves_callback_order() {
        let d = Deferred::new();
        let log = Arc::new(Mutex::new(Vec::new()));
        for i in 0..3 {
            let log = log.clone();
            d.on_complete(move |_| log.lock().push(i));
        }
        assert!(d.complete(Ok(Value::Int(1))));
        assert!(!d.complete(Ok(Value::Int(2))));
        let late = log.clone();
        d.on_complete(move |_| late.lock().push(3));
        assert_eq!(*log.lock(), vec![0, 1, 2, 3]);
        assert_eq!(d.wait(None).unwrap(), Value::Int(1));
    }

    #[test]
    fn wait_times_out() {
        let d = Deferred::new();
        assert!(matches!(
            d.wait(Some(Duration::from_millis(20))),
            Err(DslError::Timeout(_))
        ));
    }

    #[test]
    fn completion_from_another_thread_wakes_waiter() {
        let d = Deferred::new();
        let c = d.clone();
        let t = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(10));
            c.complete(Ok(Value::Int(7)));
        });
        assert_eq!(d.wait(Some(Duration::from_secs(5))).unwrap(), Value::Int(7));
        t.join().unwrap();
    }
}
