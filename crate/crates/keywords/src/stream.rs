use std::any::Any;
use std::fmt;

use ldk_core::{DslError, Object, Result, Value};
use parking_lot::Mutex;

type Thunk = Box<dyn FnOnce() -> Result<Value> + Send>;

enum Tail {
    Pending(Thunk),
    Forcing,
    Forced(Result<Value>),
}

enum Node {
    Empty,
    Cons { head: Value, tail: Mutex<Tail> },
}

/// An immutable, lazily built sequence with a memoized tail.
pub struct LazyStream {
    node: Node,
}

impl LazyStream {
    pub fn empty() -> Value {
        Value::object(LazyStream { node: Node::Empty })
    }

    pub fn cons(head: Value, tail: impl FnOnce() -> Result<Value> + Send + 'static) -> Value {
        Value::object(LazyStream {
            node: Node::Cons {
                head,
                tail: Mutex::new(Tail::Pending(Box::new(tail))),
            },
        })
    }

    /// A stream whose tail is already evaluated.
    pub fn strict_cons(head: Value, tail: Value) -> Value {
        Value::object(LazyStream {
            node: Node::Cons {
                head,
                tail: Mutex::new(Tail::Forced(Ok(tail))),
            },
        })
    }

    pub fn from_values(values: Vec<Value>) -> Value {
        values
            .into_iter()
            .rev()
            .fold(LazyStream::empty(), |tail, head| {
                LazyStream::strict_cons(head, tail)
            })
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.node, Node::Empty)
    }

    pub fn head(&self) -> Option<&Value> {
        match &self.node {
            Node::Empty => None,
            Node::Cons { head, .. } => Some(head),
        }
    }

    /// Evaluates the tail on first use and returns the memoized result after.
    pub fn force_tail(&self) -> Result<Value> {
        let Node::Cons { tail, .. } = &self.node else {
            return Err(DslError::eval("tail of empty stream"));
        };
        let thunk = {
            let mut guard = tail.lock();
            match std::mem::replace(&mut *guard, Tail::Forcing) {
                Tail::Pending(thunk) => thunk,
                Tail::Forced(result) => {
                    *guard = Tail::Forced(result.clone());
                    return result;
                }
                Tail::Forcing => return Err(DslError::eval("stream tail forced re-entrantly")),
            }
        };
        let result = thunk().and_then(|v| {
            if v.downcast::<LazyStream>().is_some() {
                Ok(v)
            } else {
                Err(DslError::eval(format!(
                    "stream tail evaluated to {} `{v}`",
                    v.type_name()
                )))
            }
        });
        *tail.lock() = Tail::Forced(result.clone());
        result
    }

    fn forced_tail(&self) -> Option<Value> {
        match &self.node {
            Node::Cons { tail, .. } => match &*tail.lock() {
                Tail::Forced(Ok(v)) => Some(v.clone()),
                _ => None,
            },
            Node::Empty => None,
        }
    }
}

/// Views a value as a stream.
pub fn as_stream(v: &Value) -> Result<&LazyStream> {
    v.downcast::<LazyStream>()
        .ok_or_else(|| DslError::eval(format!("expected Stream, found {} `{v}`", v.type_name())))
}

/// Iterates a stream value, forcing tails on demand.
pub fn iter(stream: Value) -> StreamIter {
    StreamIter {
        current: Some(stream),
        consumed: false,
    }
}

pub struct StreamIter {
    current: Option<Value>,
    /// The head of `current` was already returned; its tail is forced on
    /// the next call.
    consumed: bool,
}

impl Iterator for StreamIter {
    type Item = Result<Value>;

    fn next(&mut self) -> Option<Result<Value>> {
        let mut current = self.current.take()?;
        if std::mem::take(&mut self.consumed) {
            let tail = match as_stream(&current).and_then(|s| s.force_tail()) {
                Ok(t) => t,
                Err(e) => return Some(Err(e)),
            };
            current = tail;
        }
        let head = match as_stream(&current) {
            Ok(s) => s.head()?.clone(),
            Err(e) => return Some(Err(e)),
        };
        self.current = Some(current);
        self.consumed = true;
        Some(Ok(head))
    }
}

/// The first `n` elements, forcing exactly what is needed.
pub fn take(stream: &Value, n: usize) -> Result<Vec<Value>> {
    let mut out = Vec::with_capacity(n.min(1024));
    let mut current = stream.clone();
    while out.len() < n {
        let s = as_stream(&current)?;
        let Some(head) = s.head() else { break };
        out.push(head.clone());
        if out.len() == n {
            break;
        }
        let next = s.force_tail()?;
        current = next;
    }
    Ok(out)
}

/// Every element of a finite stream.
pub fn to_vec(stream: &Value) -> Result<Vec<Value>> {
    take(stream, usize::MAX)
}

/// Lazily appends the stream produced by `rest` after `front`.
pub fn append(
    front: Value,
    rest: impl FnOnce() -> Result<Value> + Send + 'static,
) -> Result<Value> {
    let s = as_stream(&front)?;
    match s.head() {
        None => rest(),
        Some(head) => {
            let head = head.clone();
            let front = front.clone();
            Ok(LazyStream::cons(head, move || {
                let tail = as_stream(&front)?.force_tail()?;
                append(tail, rest)
            }))
        }
    }
}

impl Object for LazyStream {
    fn type_name(&self) -> &'static str {
        "Stream"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Stream(")?;
        let (Some(head), mut next) = (self.head(), self.forced_tail()) else {
            return f.write_str(")");
        };
        write!(f, "{head}")?;
        let mut unforced = next.is_none() && !self.is_empty();
        while let Some(current) = next.take() {
            let Some(s) = current.downcast::<LazyStream>() else {
                break;
            };
            let Some(head) = s.head() else { break };
            write!(f, ", {head}")?;
            next = s.forced_tail();
            unforced = next.is_none();
        }
        if unforced {
            f.write_str(", ?")?;
        }
        f.write_str(")")
    }
}

impl Drop for LazyStream {
    // Unlinks uniquely owned successors one by one so that dropping a long
    // forced stream does not recurse.
    fn drop(&mut self) {
        let mut next = match &mut self.node {
            Node::Cons { tail, .. } => take_forced(tail.get_mut()),
            Node::Empty => None,
        };
        while let Some(Value::Object(obj)) = next.take() {
            if std::sync::Arc::strong_count(&obj) != 1 {
                break;
            }
            if let Some(Node::Cons { tail, .. }) =
                obj.as_any().downcast_ref::<LazyStream>().map(|s| &s.node)
            {
                next = take_forced(&mut tail.lock());
            }
        }
    }
}

fn take_forced(tail: &mut Tail) -> Option<Value> {
    match std::mem::replace(tail, Tail::Forcing) {
        Tail::Forced(Ok(v)) => Some(v),
        other => {
            *tail = other;
            None
        }
    }
}

impl fmt::Debug for LazyStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn tail_is_memoized_and_lazy() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let s = LazyStream::cons(Value::Int(1), move || {
            c.fetch_add(1, Ordering::SeqCst);
            Ok(LazyStream::empty())
        });
        assert_eq!(calls.load(Ordering::SeqCst), 0);
        let stream = as_stream(&s).unwrap();
        stream.force_tail().unwrap();
        stream.force_tail().unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn append_is_lazy_concatenation() {
        let a = LazyStream::from_values(vec![Value::Int(1), Value::Int(2)]);
        let joined = append(a, || Ok(LazyStream::from_values(vec![Value::Int(3)]))).unwrap();
        assert_eq!(
            to_vec(&joined).unwrap(),
            vec![Value::Int(1), Value::Int(2), Value::Int(3)]
        );
    }

    #[test]
    fn rendering_shows_forced_prefix() {
        let s = LazyStream::cons(Value::Int(1), || Ok(LazyStream::empty()));
        assert_eq!(s.to_string(), "Stream(1, ?)");
        as_stream(&s).unwrap().force_tail().unwrap();
        assert_eq!(s.to_string(), "Stream(1)");
    }

    #[test]
    fn long_forced_stream_drops_without_recursion() {
        let s = LazyStream::from_values((0..200_000).map(Value::Int).collect());
        assert_eq!(take(&s, 3).unwrap().len(), 3);
        drop(s);
    }
}
