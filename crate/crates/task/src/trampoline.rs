use std::any::Any;
use std::fmt;
use std::sync::Arc;

use ldk_core::{probe, Desc, DslError, Func, Object, Result, Value};

pub type Step = Arc<dyn Fn() -> Result<Value> + Send + Sync>;

/// A computation that is either finished or one suspended step away.
pub enum Trampoline {
    Done(Value),
    More(Step),
}

impl Trampoline {
    pub fn done(v: Value) -> Value {
        Value::object(Trampoline::Done(v))
    }

    pub fn more(step: impl Fn() -> Result<Value> + Send + Sync + 'static) -> Value {
        Value::object(Trampoline::More(Arc::new(step)))
    }
}

impl Object for Trampoline {
    fn type_name(&self) -> &'static str {
        "Trampoline"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trampoline::Done(v) => write!(f, "Done({v})"),
            Trampoline::More(_) => f.write_str("More(<step>)"),
        }
    }
}

impl fmt::Debug for Trampoline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f)
    }
}

/// Drives a trampoline value to completion in a loop.
pub fn run(mut current: Value) -> Result<Value> {
    loop {
        let step = match current.downcast::<Trampoline>() {
            Some(Trampoline::Done(v)) => return Ok(v.clone()),
            Some(Trampoline::More(step)) => step.clone(),
            None => {
                return Err(DslError::eval(format!(
                    "expected Trampoline, found {} `{current}`",
                    current.type_name()
                )))
            }
        };
        let _guard = probe::enter();
        current = step()?;
    }
}

/// Builds a value of domain `domain` that performs `thunk` lazily: one
/// trampoline step once every function and error layer has been supplied
/// its argument. Domains without a trampoline leaf run `thunk` directly.
pub fn suspend_in(domain: &Desc, thunk: Step) -> Result<Value> {
    match domain {
        Desc::Trampoline(_) => Ok(Value::object(Trampoline::More(thunk))),
        Desc::Error(inner) if domain.has_trampoline_leaf() => {
            let inner = (**inner).clone();
            Ok(Value::Func(Func::unary(move |raise: Value| {
                let thunk = thunk.clone();
                let raise_step = raise.clone();
                suspend_in(
                    &inner,
                    Arc::new(
                        move || match thunk().and_then(|d| d.apply(raise_step.clone())) {
                            Ok(next) => Ok(next),
                            Err(e) => raise_step.apply(e.into_value()),
                        },
                    ),
                )
            })))
        }
        Desc::Fn(_, result) if domain.has_trampoline_leaf() => {
            let result = (**result).clone();
            Ok(Value::Func(Func::unary(move |arg: Value| {
                let thunk = thunk.clone();
                suspend_in(&result, Arc::new(move || thunk()?.apply(arg.clone())))
            })))
        }
        _ => thunk(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_down(n: i64) -> Value {
        if n == 0 {
            Trampoline::done(Value::Int(0))
        } else {
            Trampoline::more(move || Ok(count_down(n - 1)))
        }
    }

    #[test]
    fn runs_long_chains_iteratively() {
        probe::reset();
        assert_eq!(run(count_down(100_000)).unwrap(), Value::Int(0));
        assert!(probe::max_depth() <= 2);
    }

    #[test]
    fn suspension_in_error_layer_routes_failures() {
        let d = Desc::task_answer();
        let s = suspend_in(&d, Arc::new(|| Err(DslError::eval("boom")))).unwrap();
        let raise = Value::func(|e| Ok(Trampoline::done(Value::list(vec![e]))));
        let out = run(s.apply(raise).unwrap()).unwrap();
        assert!(out.to_string().contains("boom"));
    }
}
