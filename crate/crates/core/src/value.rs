use std::any::Any;
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::descriptor::{CollectionKind, DomainDescriptor};
use crate::error::{DslError, Result};
use crate::keyword::KeywordValue;
use crate::probe;

/// Runtime values defined outside this crate: streams, deferreds,
/// trampolines, channels, buffers.
pub trait Object: Any + Send + Sync + fmt::Debug {
    fn type_name(&self) -> &'static str;

    fn as_any(&self) -> &dyn Any;

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.type_name())
    }

    /// Objects that carry their own `cpsApply` bypass the registry.
    fn cps_apply(&self, _handler: Value) -> Option<Result<Value>> {
        None
    }
}

type UnaryFn = dyn Fn(Value) -> Result<Value> + Send + Sync;
type NaryFn = dyn Fn(&[DomainDescriptor], Vec<Value>) -> Result<Value> + Send + Sync;

enum Body {
    Unary(Box<UnaryFn>),
    Nary {
        arity: Option<usize>,
        f: Box<NaryFn>,
    },
}

/// A callable value, optionally tagged with its own type.
#[derive(Clone)]
pub struct Func {
    body: Arc<Body>,
    desc: Option<Arc<DomainDescriptor>>,
}

impl Func {
    pub fn unary(f: impl Fn(Value) -> Result<Value> + Send + Sync + 'static) -> Self {
        Func {
            body: Arc::new(Body::Unary(Box::new(f))),
            desc: None,
        }
    }

    /// A function taking `arity` arguments (`None` for variadic) and
    /// optional explicit type arguments.
    pub fn nary(
        arity: Option<usize>,
        f: impl Fn(&[DomainDescriptor], Vec<Value>) -> Result<Value> + Send + Sync + 'static,
    ) -> Self {
        Func {
            body: Arc::new(Body::Nary {
                arity,
                f: Box::new(f),
            }),
            desc: None,
        }
    }

    pub fn desc(&self) -> Option<&DomainDescriptor> {
        self.desc.as_deref()
    }

    pub fn with_desc(&self, desc: DomainDescriptor) -> Self {
        Func {
            body: self.body.clone(),
            desc: Some(Arc::new(desc)),
        }
    }

    pub fn arity(&self) -> Option<usize> {
        match self.body.as_ref() {
            Body::Unary(_) => Some(1),
            Body::Nary { arity, .. } => *arity,
        }
    }

    pub fn call(&self, arg: Value) -> Result<Value> {
        let _guard = probe::enter();
        match self.body.as_ref() {
            Body::Unary(f) => f(arg),
            Body::Nary { arity, f } => match arity {
                Some(0) => f(&[], Vec::new()),
                Some(1) | None => f(&[], vec![arg]),
                Some(n) => Err(DslError::eval(format!(
                    "function of {n} parameters applied to 1 argument"
                ))),
            },
        }
    }

    pub fn call_with(&self, types: &[DomainDescriptor], args: Vec<Value>) -> Result<Value> {
        let _guard = probe::enter();
        match self.body.as_ref() {
            Body::Unary(f) => {
                if !types.is_empty() {
                    return Err(DslError::eval(
                        "type arguments given to an ordinary function",
                    ));
                }
                match args.len() {
                    0 => f(Value::Unit),
                    1 => f(args.into_iter().next().unwrap_or(Value::Unit)),
                    n => Err(DslError::eval(format!(
                        "function of 1 parameter applied to {n} arguments"
                    ))),
                }
            }
            Body::Nary { arity, f } => match arity {
                Some(n) if *n != args.len() => Err(DslError::eval(format!(
                    "function of {n} parameters applied to {} arguments",
                    args.len()
                ))),
                _ => f(types, args),
            },
        }
    }

    pub fn ptr_eq(&self, other: &Func) -> bool {
        Arc::ptr_eq(&self.body, &other.body)
    }
}

impl fmt::Debug for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.desc {
            Some(d) => write!(f, "<function: {d}>"),
            None => f.write_str("<function>"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Float(f64),
    Char(char),
    Str(Arc<str>),
    /// Ordered collections and sets; sets hold no duplicates.
    Collection(CollectionKind, Arc<Vec<Value>>),
    /// Half-open integer range `[start, end)` advancing by `step`.
    Range {
        start: i64,
        end: i64,
        step: i64,
    },
    Tuple(Arc<Vec<Value>>),
    Func(Func),
    Keyword(Arc<KeywordValue>),
    Error(Arc<DslError>),
    Object(Arc<dyn Object>),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::Collection(CollectionKind::List, Arc::new(items))
    }

    pub fn set(items: Vec<Value>) -> Value {
        Value::collection(CollectionKind::Set, items)
    }

    /// Builds a collection of `kind`, collapsing duplicates for sets.
    pub fn collection(kind: CollectionKind, items: Vec<Value>) -> Value {
        if kind == CollectionKind::Set {
            let mut unique: Vec<Value> = Vec::with_capacity(items.len());
            for item in items {
                if !unique.contains(&item) {
                    unique.push(item);
                }
            }
            Value::Collection(kind, Arc::new(unique))
        } else {
            Value::Collection(kind, Arc::new(items))
        }
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Arc::new(items))
    }

    pub fn func(f: impl Fn(Value) -> Result<Value> + Send + Sync + 'static) -> Value {
        Value::Func(Func::unary(f))
    }

    pub fn object(o: impl Object) -> Value {
        Value::Object(Arc::new(o))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Unit => "Unit",
            Value::Bool(_) => "Bool",
            Value::Int(_) => "Int",
            Value::Float(_) => "Double",
            Value::Char(_) => "Char",
            Value::Str(_) => "String",
            Value::Collection(kind, _) => kind.name(),
            Value::Range { .. } => "Range",
            Value::Tuple(_) => "Tuple",
            Value::Func(_) => "Function",
            Value::Keyword(_) => "Keyword",
            Value::Error(_) => "Error",
            Value::Object(o) => o.type_name(),
        }
    }

    fn mismatch(&self, expected: &str) -> DslError {
        DslError::eval(format!(
            "expected {expected}, found {} `{self}`",
            self.type_name()
        ))
    }

    pub fn as_int(&self) -> Result<i64> {
        match self {
            Value::Int(i) => Ok(*i),
            other => Err(other.mismatch("Int")),
        }
    }

    pub fn as_float(&self) -> Result<f64> {
        match self {
            Value::Float(x) => Ok(*x),
            Value::Int(i) => Ok(*i as f64),
            other => Err(other.mismatch("Double")),
        }
    }

    pub fn as_bool(&self) -> Result<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(other.mismatch("Bool")),
        }
    }

    pub fn as_str(&self) -> Result<&str> {
        match self {
            Value::Str(s) => Ok(s),
            other => Err(other.mismatch("String")),
        }
    }

    pub fn as_func(&self) -> Result<&Func> {
        match self {
            Value::Func(f) => Ok(f),
            other => Err(other.mismatch("function")),
        }
    }

    pub fn as_keyword(&self) -> Option<&KeywordValue> {
        match self {
            Value::Keyword(k) => Some(k),
            _ => None,
        }
    }

    pub fn downcast<T: Object>(&self) -> Option<&T> {
        match self {
            Value::Object(o) => o.as_any().downcast_ref::<T>(),
            _ => None,
        }
    }

    /// Applies a function value to one argument.
    pub fn apply(&self, arg: Value) -> Result<Value> {
        self.as_func()?.call(arg)
    }

    pub fn apply2(&self, a: Value, b: Value) -> Result<Value> {
        self.apply(a)?.apply(b)
    }

    /// Elements of a core sequence source, in order: collections, ranges,
    /// strings as characters, tuples. `None` for anything else.
    pub fn sequence(&self) -> Option<Box<dyn Iterator<Item = Value> + '_>> {
        match self {
            Value::Collection(_, items) | Value::Tuple(items) => {
                Some(Box::new(items.iter().cloned()))
            }
            Value::Str(s) => Some(Box::new(s.chars().map(Value::Char))),
            Value::Range { start, end, step } => {
                Some(Box::new(range_iter(*start, *end, *step).map(Value::Int)))
            }
            _ => None,
        }
    }
}

pub fn range_iter(start: i64, end: i64, step: i64) -> impl Iterator<Item = i64> {
    let mut next = start;
    std::iter::from_fn(move || {
        let more = if step > 0 {
            next < end
        } else if step < 0 {
            next > end
        } else {
            false
        };
        if more {
            let current = next;
            next = next.saturating_add(step);
            Some(current)
        } else {
            None
        }
    })
}

fn variant_rank(v: &Value) -> u8 {
    match v {
        Value::Unit => 0,
        Value::Bool(_) => 1,
        Value::Int(_) | Value::Float(_) => 2,
        Value::Char(_) => 3,
        Value::Str(_) => 4,
        Value::Collection(..) => 5,
        Value::Range { .. } => 6,
        Value::Tuple(_) => 7,
        Value::Keyword(_) => 8,
        Value::Error(_) => 9,
        Value::Func(_) => 10,
        Value::Object(_) => 11,
    }
}

/// A total order used to print sets deterministically.
pub fn canonical_cmp(a: &Value, b: &Value) -> Ordering {
    let rank = variant_rank(a).cmp(&variant_rank(b));
    if rank != Ordering::Equal {
        return rank;
    }
    match (a, b) {
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
            let (x, y) = (a.as_float().unwrap_or(0.0), b.as_float().unwrap_or(0.0));
            x.total_cmp(&y)
        }
        (Value::Char(x), Value::Char(y)) => x.cmp(y),
        (Value::Str(x), Value::Str(y)) => x.cmp(y),
        (Value::Collection(_, x), Value::Collection(_, y)) | (Value::Tuple(x), Value::Tuple(y)) => {
            for (p, q) in x.iter().zip(y.iter()) {
                let c = canonical_cmp(p, q);
                if c != Ordering::Equal {
                    return c;
                }
            }
            x.len().cmp(&y.len())
        }
        _ => a.to_string().cmp(&b.to_string()),
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Unit, Value::Unit) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a == b,
            (Value::Char(a), Value::Char(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (
                Value::Collection(CollectionKind::Set, a),
                Value::Collection(CollectionKind::Set, b),
            ) => a.len() == b.len() && a.iter().all(|x| b.contains(x)),
            (Value::Collection(k1, a), Value::Collection(k2, b)) => k1 == k2 && a == b,
            (
                Value::Range {
                    start: s1,
                    end: e1,
                    step: t1,
                },
                Value::Range {
                    start: s2,
                    end: e2,
                    step: t2,
                },
            ) => (s1, e1, t1) == (s2, e2, t2),
            (Value::Tuple(a), Value::Tuple(b)) => a == b,
            (Value::Func(a), Value::Func(b)) => a.ptr_eq(b),
            (Value::Keyword(a), Value::Keyword(b)) => a == b,
            (Value::Error(a), Value::Error(b)) => a.to_string() == b.to_string(),
            (Value::Object(a), Value::Object(b)) => {
                std::ptr::addr_eq(Arc::as_ptr(a), Arc::as_ptr(b))
            }
            _ => false,
        }
    }
}

fn write_items<'a>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = &'a Value>,
) -> fmt::Result {
    for (i, item) in items.enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.is_finite() && x.fract() == 0.0 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Char(c) => write!(f, "{c}"),
            Value::Str(s) => f.write_str(s),
            Value::Collection(CollectionKind::Set, items) => {
                let mut sorted: Vec<&Value> = items.iter().collect();
                sorted.sort_by(|a, b| canonical_cmp(a, b));
                f.write_str("Set(")?;
                write_items(f, sorted.into_iter())?;
                f.write_str(")")
            }
            Value::Collection(kind, items) => {
                write!(f, "{}(", kind.name())?;
                write_items(f, items.iter())?;
                f.write_str(")")
            }
            Value::Range { start, end, step } => write!(f, "Range({start}, {end}, {step})"),
            Value::Tuple(items) => {
                f.write_str("(")?;
                write_items(f, items.iter())?;
                f.write_str(")")
            }
            Value::Func(func) => write!(f, "{func:?}"),
            Value::Keyword(k) => write!(f, "{k}"),
            Value::Error(e) => write!(f, "{e}"),
            Value::Object(o) => o.render(f),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_equality_ignores_order() {
        let a = Value::set(vec![Value::Int(3), Value::Int(1), Value::Int(3)]);
        let b = Value::set(vec![Value::Int(1), Value::Int(3)]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "Set(1, 3)");
    }

    #[test]
    fn scala_like_rendering() {
        let v = Value::list(vec![
            Value::list(vec![Value::Int(1)]),
            Value::str("x"),
            Value::Float(0.5),
            Value::Float(2.0),
        ]);
        assert_eq!(v.to_string(), "List(List(1), x, 0.5, 2.0)");
    }

    #[test]
    fn ranges_iterate_half_open() {
        let r = Value::Range {
            start: 4,
            end: 15,
            step: 2,
        };
        let xs: Vec<Value> = r.sequence().unwrap().collect();
        assert_eq!(xs.len(), 6);
        assert_eq!(xs[5], Value::Int(14));
    }
}
