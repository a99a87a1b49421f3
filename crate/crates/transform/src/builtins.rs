//! Built-in functions and keyword constructors available to scripts.

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use ldk_core::{CollectionKind, Desc, DslError, Object, Result, Value};
use ldk_keywords::collect::elements;
use ldk_keywords::kw::{
    await_kw, continue_kw, each_kw, get_kw, put_kw, return_kw, shift_kw, yield_kw,
};
use ldk_keywords::{as_deferred, stream, LazyStream};
use ldk_task::{
    as_buffer, as_channel, blocking_await, fork_kw, task_delay, task_unit, to_deferred,
    try_protect, with_wait_helper, AsyncChannel, Buffer,
};
use parking_lot::Mutex;

pub struct Signature {
    pub name: &'static str,
    pub min: usize,
    pub max: usize,
    /// May be written without an argument list.
    pub constant: bool,
}

const fn f(name: &'static str, min: usize, max: usize) -> Signature {
    Signature {
        name,
        min,
        max,
        constant: false,
    }
}

const fn constant(name: &'static str) -> Signature {
    Signature {
        name,
        min: 0,
        max: 0,
        constant: true,
    }
}

const TABLE: &[Signature] = &[
    f("Yield", 1, 1),
    f("Await", 1, 1),
    f("Shift", 1, 1),
    f("Return", 1, 1),
    f("Get", 0, 0),
    f("Put", 1, 1),
    f("Each", 1, 1),
    constant("Continue"),
    f("Fork", 1, 1),
    f("Read", 2, 2),
    f("Write", 2, 2),
    constant("StringPlaceholder"),
    constant("IntPlaceholder"),
    f("shift", 1, 1),
    f("i32xor", 2, 2),
    f("i32shl", 2, 2),
    f("i32ushr", 2, 2),
    f("head", 1, 1),
    f("tail", 1, 1),
    f("isEmpty", 1, 1),
    f("cons", 2, 2),
    f("append", 2, 2),
    f("size", 1, 1),
    f("contains", 2, 2),
    f("mkString", 1, 2),
    f("toList", 1, 1),
    f("take", 2, 2),
    f("range", 2, 3),
    f("reverse", 1, 1),
    f("upper", 1, 1),
    f("last", 1, 1),
    f("toString", 1, 1),
    f("sqrt", 1, 1),
    f("ceil", 1, 1),
    f("toInt", 1, 1),
    f("toFloat", 1, 1),
    f("not", 1, 1),
    f("const", 1, 1),
    f("println", 1, 1),
    f("printEach", 1, 1),
    f("blockingAwait", 1, 1),
    f("taskUnit", 1, 1),
    f("taskDelay", 2, 2),
    f("tryProtect", 3, 3),
    f("toDeferred", 1, 1),
    f("waitAll", 1, 1),
    f("openChannel", 0, 0),
    f("allocate", 1, 1),
    f("wrap", 1, 1),
    f("remaining", 1, 1),
    f("flip", 1, 1),
    f("decode", 1, 1),
    f("shutdownOutput", 1, 1),
    f("close", 1, 1),
];

pub fn lookup(name: &str) -> Option<&'static Signature> {
    TABLE.iter().find(|s| s.name == name)
}

pub fn is_constant(name: &str) -> bool {
    lookup(name).is_some_and(|s| s.constant)
}

/// Lines written by `println` and `printEach`.
#[derive(Clone, Default)]
pub struct Output(Arc<Mutex<Vec<String>>>);

impl Output {
    pub fn push(&self, line: String) {
        self.0.lock().push(line);
    }

    pub fn lines(&self) -> Vec<String> {
        self.0.lock().clone()
    }

    pub fn take(&self) -> Vec<String> {
        std::mem::take(&mut *self.0.lock())
    }
}

/// The descriptor a value's runtime shape implies, when it has one.
pub fn desc_of(v: &Value) -> Option<Desc> {
    Some(match v {
        Value::Unit => Desc::Unit,
        Value::Bool(_) => Desc::scalar("Boolean"),
        Value::Int(_) => Desc::int(),
        Value::Float(_) => Desc::scalar("Double"),
        Value::Char(_) => Desc::scalar("Char"),
        Value::Str(_) => Desc::string(),
        Value::Collection(kind, _) => Desc::collection(*kind, Desc::any()),
        Value::Func(f) => return f.desc().cloned(),
        _ => return None,
    })
}

/// A continuation applied directly to its handler, whatever the domain.
#[derive(Debug)]
pub struct PolymorphicShift(Value);

impl Object for PolymorphicShift {
    fn type_name(&self) -> &'static str {
        "PolymorphicShift"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn cps_apply(&self, handler: Value) -> Option<Result<Value>> {
        Some(self.0.apply(handler))
    }
}

/// Format placeholders: the handler itself becomes the result, so each
/// placeholder adds one parameter to the enclosing function.
#[derive(Debug)]
pub enum Placeholder {
    Str,
    Int,
}

impl Object for Placeholder {
    fn type_name(&self) -> &'static str {
        match self {
            Placeholder::Str => "StringPlaceholder",
            Placeholder::Int => "IntPlaceholder",
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.type_name())
    }

    fn cps_apply(&self, handler: Value) -> Option<Result<Value>> {
        Some(Ok(match self {
            Placeholder::Str => Value::func(move |s: Value| {
                s.as_str()?;
                handler.apply(s)
            }),
            Placeholder::Int => {
                Value::func(move |i: Value| handler.apply(Value::str(&i.as_int()?.to_string())))
            }
        }))
    }
}

fn u32_of(v: &Value) -> Result<u32> {
    Ok(v.as_int()? as u32)
}

fn items_of(v: &Value) -> Result<(CollectionKind, Vec<Value>)> {
    match v {
        Value::Collection(kind, items) => Ok((*kind, items.as_ref().clone())),
        other => Ok((CollectionKind::List, elements(other)?)),
    }
}

fn opt(v: Value) -> Option<Value> {
    match v {
        Value::Unit => None,
        other => Some(other),
    }
}

pub fn call(name: &str, types: &[Desc], args: Vec<Value>, out: &Output) -> Result<Value> {
    let mut it = args.into_iter();
    let mut arg = || it.next().unwrap_or(Value::Unit);
    let ty = types.first().cloned();
    Ok(match name {
        "Yield" => yield_kw(arg()).into_value(),
        "Await" => {
            let d = arg();
            as_deferred(&d)?;
            await_kw(d).into_value()
        }
        "Shift" => {
            let c = arg();
            let answer = ty.or_else(|| desc_of(&c).and_then(|d| d.cps_result().cloned()));
            shift_kw(c, answer).into_value()
        }
        "Return" => return_kw(arg()).into_value(),
        "Get" => get_kw(ty).into_value(),
        "Put" => {
            let v = arg();
            let state = ty.or_else(|| desc_of(&v));
            put_kw(v, state).into_value()
        }
        "Each" => each_kw(arg()).into_value(),
        "Continue" => continue_kw().into_value(),
        "Fork" => fork_kw(arg()).into_value(),
        "Read" => {
            let ch = arg();
            as_channel(&ch)?.read(arg())
        }
        "Write" => {
            let ch = arg();
            as_channel(&ch)?.write(arg())
        }
        "StringPlaceholder" => Value::object(Placeholder::Str),
        "IntPlaceholder" => Value::object(Placeholder::Int),
        "shift" => Value::object(PolymorphicShift(arg())),
        "i32xor" => Value::Int((u32_of(&arg())? ^ u32_of(&arg())?) as i64),
        "i32shl" => Value::Int(u32_of(&arg())?.wrapping_shl(u32_of(&arg())?) as i64),
        "i32ushr" => Value::Int(u32_of(&arg())?.wrapping_shr(u32_of(&arg())?) as i64),
        "head" => {
            let s = arg();
            if let Some(st) = s.downcast::<LazyStream>() {
                return st
                    .head()
                    .cloned()
                    .ok_or_else(|| DslError::eval("head of empty stream"));
            }
            match &s {
                Value::Collection(_, items) => items.first().cloned(),
                other => items_of(other)?.1.into_iter().next(),
            }
            .ok_or_else(|| DslError::eval("head of empty collection"))?
        }
        "tail" => {
            let s = arg();
            if let Some(st) = s.downcast::<LazyStream>() {
                return st.force_tail();
            }
            let (kind, items) = items_of(&s)?;
            if items.is_empty() {
                return Err(DslError::eval("tail of empty collection"));
            }
            Value::collection(kind, items[1..].to_vec())
        }
        "isEmpty" => {
            let s = arg();
            match s.downcast::<LazyStream>() {
                Some(st) => Value::Bool(st.is_empty()),
                None => match &s {
                    Value::Collection(_, items) => Value::Bool(items.is_empty()),
                    other => Value::Bool(items_of(other)?.1.is_empty()),
                },
            }
        }
        "cons" => {
            let x = arg();
            let s = arg();
            if s.downcast::<LazyStream>().is_some() {
                return Ok(LazyStream::strict_cons(x, s));
            }
            let (kind, mut items) = items_of(&s)?;
            items.insert(0, x);
            Value::collection(kind, items)
        }
        "append" => {
            let (kind, mut items) = items_of(&arg())?;
            items.push(arg());
            Value::collection(kind, items)
        }
        "size" => Value::Int(elements(&arg())?.len() as i64),
        "contains" => {
            let s = arg();
            let x = arg();
            match (&s, &x) {
                (Value::Str(s), Value::Str(x)) => Value::Bool(s.contains(x.as_ref())),
                _ => Value::Bool(elements(&s)?.contains(&x)),
            }
        }
        "mkString" => {
            let items = elements(&arg())?;
            let sep = match arg() {
                Value::Unit => String::new(),
                v => v.as_str()?.to_string(),
            };
            Value::str(
                &items
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(&sep),
            )
        }
        "toList" => Value::list(elements(&arg())?),
        "take" => {
            let s = arg();
            let n = arg().as_int()?.max(0) as usize;
            if s.downcast::<LazyStream>().is_some() {
                Value::list(stream::take(&s, n)?)
            } else {
                Value::list(elements(&s)?.into_iter().take(n).collect())
            }
        }
        "range" => {
            let start = arg().as_int()?;
            let end = arg().as_int()?;
            let step = match arg() {
                Value::Unit => 1,
                v => v.as_int()?,
            };
            if step == 0 {
                return Err(DslError::eval("range step must not be zero"));
            }
            Value::Range { start, end, step }
        }
        "reverse" => {
            let (kind, mut items) = items_of(&arg())?;
            items.reverse();
            Value::collection(kind, items)
        }
        "upper" => match arg() {
            Value::Char(c) => Value::Char(c.to_uppercase().next().unwrap_or(c)),
            v => Value::str(&v.as_str()?.to_uppercase()),
        },
        "last" => match arg() {
            Value::Str(s) => Value::Char(
                s.chars()
                    .last()
                    .ok_or_else(|| DslError::eval("last of empty string"))?,
            ),
            v => elements(&v)?
                .pop()
                .ok_or_else(|| DslError::eval("last of empty collection"))?,
        },
        "toString" => Value::str(&arg().to_string()),
        "sqrt" => Value::Float(arg().as_float()?.sqrt()),
        "ceil" => Value::Float(arg().as_float()?.ceil()),
        "toInt" => match arg() {
            Value::Float(x) => Value::Int(x as i64),
            Value::Char(c) => Value::Int(c as i64),
            v => Value::Int(v.as_int()?),
        },
        "toFloat" => Value::Float(arg().as_float()?),
        "not" => Value::Bool(!arg().as_bool()?),
        "const" => {
            let v = arg();
            Value::func(move |_| Ok(v.clone()))
        }
        "println" => {
            out.push(arg().to_string());
            Value::Unit
        }
        "printEach" => {
            let s = arg();
            with_wait_helper(|| -> Result<()> {
                if s.downcast::<LazyStream>().is_some() {
                    for v in stream::iter(s) {
                        out.push(v?.to_string());
                    }
                } else {
                    for v in elements(&s)? {
                        out.push(v.to_string());
                    }
                }
                Ok(())
            })?;
            Value::Unit
        }
        "blockingAwait" => blocking_await(&arg(), None)?,
        "taskUnit" => task_unit(arg()),
        "taskDelay" => {
            let ticks = arg().as_int()?.max(0) as u64;
            task_delay(ticks, arg())
        }
        "tryProtect" => {
            let body = arg();
            let on_error = opt(arg());
            try_protect(body, on_error, opt(arg()))
        }
        "toDeferred" => to_deferred(&arg()).to_value(),
        "waitAll" => {
            let s = arg();
            with_wait_helper(|| -> Result<Value> {
                let items = if s.downcast::<LazyStream>().is_some() {
                    stream::iter(s).collect::<Result<Vec<_>>>()?
                } else {
                    elements(&s)?
                };
                let mut settled = Vec::with_capacity(items.len());
                for d in items {
                    settled.push(as_deferred(&d)?.wait(None)?);
                }
                Ok(Value::list(settled))
            })?
        }
        "openChannel" => AsyncChannel::open(),
        "allocate" => Buffer::allocate(arg().as_int()?.max(0) as usize),
        "wrap" => Buffer::wrap(arg().as_str()?.as_bytes()),
        "remaining" => Value::Int(as_buffer(&arg())?.remaining() as i64),
        "flip" => {
            as_buffer(&arg())?.flip();
            Value::Unit
        }
        "decode" => Value::str(&as_buffer(&arg())?.decode()),
        "shutdownOutput" => {
            as_channel(&arg())?.shutdown_output();
            Value::Unit
        }
        "close" => {
            as_channel(&arg())?.close();
            Value::Unit
        }
        other => return Err(DslError::eval(format!("unknown builtin `{other}`"))),
    })
}
