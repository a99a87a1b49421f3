//! Interpreter for transformed scripts.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use ldk_core::{cps_apply, DslError, InstanceRegistry, Result, Value};
use ldk_core::{CollectionKind, Desc, Func};
use ldk_keywords::kw::shift_kw;
use ldk_keywords::LazyStream;
use ldk_task::{suspend_in, with_wait_helper};
use parking_lot::RwLock;

use crate::ast::{BinOp, Expr, Lit, SeqKind, Stmt};
use crate::builtins::{self, Output};
use crate::error::ScriptError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Function,
    Handler,
    Cont,
}

#[derive(Debug)]
struct Code {
    kind: Kind,
    params: Vec<Arc<str>>,
    domain: Option<Desc>,
    body: Node,
}

#[derive(Debug)]
enum Node {
    Lit(Value),
    Var(Arc<str>),
    Block(Vec<Step>, Box<Node>),
    Closure(Arc<Code>),
    Apply(Box<Node>, Vec<Node>),
    Builtin {
        name: Arc<str>,
        types: Vec<Desc>,
        args: Vec<Node>,
    },
    Binary(BinOp, Box<Node>, Box<Node>),
    Neg(Box<Node>),
    If(Box<Node>, Box<Node>, Option<Box<Node>>),
    While(Box<Node>, Box<Node>),
    Try {
        body: Box<Node>,
        catch: Option<(Arc<str>, Box<Node>)>,
        finally: Option<Box<Node>>,
    },
    Throw(Box<Node>),
    Collection(SeqKind, Vec<Node>),
    Reset(Option<Desc>, Box<Node>),
    CpsApply(Box<Node>, Box<Node>),
}

#[derive(Debug)]
enum Step {
    Let {
        name: Arc<str>,
        value: Node,
        recursive: bool,
    },
    Eval(Node),
}

/// A top-level definition: a function, or a body evaluated on each
/// reference when it has no parameter list.
#[derive(Debug)]
enum Global {
    Function(Arc<Code>),
    Thunk(Option<Desc>, Arc<Node>),
}

fn compile(
    e: &Expr,
    defs: &mut Vec<(String, Global)>,
    top: bool,
) -> std::result::Result<Node, ScriptError> {
    let many = |es: &[Expr],
                defs: &mut Vec<(String, Global)>|
     -> std::result::Result<Vec<Node>, ScriptError> {
        es.iter().map(|e| compile(e, defs, false)).collect()
    };
    let boxed = |e: &Expr, defs: &mut Vec<(String, Global)>| compile(e, defs, false).map(Box::new);
    Ok(match e {
        Expr::Lit(l) => Node::Lit(match l {
            Lit::Unit => Value::Unit,
            Lit::Bool(b) => Value::Bool(*b),
            Lit::Int(i) => Value::Int(*i),
            Lit::Float(x) => Value::Float(*x),
            Lit::Char(c) => Value::Char(*c),
            Lit::Str(s) => Value::str(s),
        }),
        Expr::Var(v) => Node::Var(Arc::from(v.as_str())),
        Expr::Block(stmts, result) => {
            let mut steps = Vec::new();
            for s in stmts {
                match s {
                    Stmt::Let(name, rhs) => {
                        let recursive = matches!(
                            rhs,
                            Expr::Lambda(_) | Expr::ContLambda(_) | Expr::Handler(..)
                        ) && rhs.mentions(name);
                        steps.push(Step::Let {
                            name: Arc::from(name.as_str()),
                            value: boxed(rhs, defs).map(|b| *b)?,
                            recursive,
                        });
                    }
                    Stmt::Expr(e) => steps.push(Step::Eval(compile(e, defs, false)?)),
                    Stmt::Def(d) => {
                        if !top {
                            return Err(ScriptError::transform(format!(
                                "`def {}` is only allowed at top level",
                                d.name
                            )));
                        }
                        let body = compile(&d.body, defs, false)?;
                        let global = match &d.params {
                            Some(ps) => Global::Function(Arc::new(Code {
                                kind: Kind::Function,
                                params: ps.iter().map(|p| Arc::from(p.as_str())).collect(),
                                domain: d.domain.clone(),
                                body,
                            })),
                            None => Global::Thunk(d.domain.clone(), Arc::new(body)),
                        };
                        defs.push((d.name.clone(), global));
                    }
                }
            }
            Node::Block(steps, Box::new(compile(result, defs, false)?))
        }
        Expr::Bang(_) => {
            return Err(ScriptError::transform(
                "`!` left in a script given to the interpreter",
            ))
        }
        Expr::Lambda(l) => Node::Closure(Arc::new(Code {
            kind: Kind::Function,
            params: l.params.iter().map(|p| Arc::from(p.as_str())).collect(),
            domain: l.domain.clone(),
            body: compile(&l.body, defs, false)?,
        })),
        Expr::ContLambda(c) => {
            let Some(param) = &c.param else {
                return Err(ScriptError::transform(
                    "`cont` block without a bound callback; apply auto_reset first",
                ));
            };
            Node::Closure(Arc::new(Code {
                kind: Kind::Cont,
                params: vec![Arc::from(param.as_str())],
                domain: c.domain.clone(),
                body: compile(&c.body, defs, false)?,
            }))
        }
        Expr::Handler(p, body) => Node::Closure(Arc::new(Code {
            kind: Kind::Handler,
            params: vec![Arc::from(p.as_str())],
            domain: None,
            body: compile(body, defs, false)?,
        })),
        Expr::Apply(f, args) => Node::Apply(boxed(f, defs)?, many(args, defs)?),
        Expr::Builtin { name, types, args } => Node::Builtin {
            name: Arc::from(name.as_str()),
            types: types.clone(),
            args: many(args, defs)?,
        },
        Expr::Binary(op, a, b) => Node::Binary(*op, boxed(a, defs)?, boxed(b, defs)?),
        Expr::Neg(a) => Node::Neg(boxed(a, defs)?),
        Expr::If(c, t, e) => Node::If(
            boxed(c, defs)?,
            boxed(t, defs)?,
            match e {
                Some(e) => Some(boxed(e, defs)?),
                None => None,
            },
        ),
        Expr::While(c, b) => Node::While(boxed(c, defs)?, boxed(b, defs)?),
        Expr::Try {
            body,
            catch,
            finally,
        } => Node::Try {
            body: boxed(body, defs)?,
            catch: match catch {
                Some(c) => Some((Arc::from(c.name.as_str()), boxed(&c.body, defs)?)),
                None => None,
            },
            finally: match finally {
                Some(f) => Some(boxed(f, defs)?),
                None => None,
            },
        },
        Expr::Throw(a) => Node::Throw(boxed(a, defs)?),
        Expr::Collection(kind, items) => Node::Collection(*kind, many(items, defs)?),
        Expr::Reset(d, body) => Node::Reset(d.clone(), boxed(body, defs)?),
        Expr::CpsApply(k, h) => Node::CpsApply(boxed(k, defs)?, boxed(h, defs)?),
    })
}

#[derive(Debug)]
enum Slot {
    Value(Value),
    Recursive(Arc<OnceLock<Value>>),
}

#[derive(Debug)]
struct Frame {
    name: Arc<str>,
    slot: Slot,
    next: Env,
}

type Env = Option<Arc<Frame>>;

fn bind(env: &Env, name: Arc<str>, slot: Slot) -> Env {
    if &*name == "_" {
        return env.clone();
    }
    Some(Arc::new(Frame {
        name,
        slot,
        next: env.clone(),
    }))
}

#[derive(Clone)]
struct Scope {
    env: Env,
    domain: Option<Desc>,
}

struct Machine {
    registry: Arc<InstanceRegistry>,
    globals: RwLock<HashMap<String, Arc<Global>>>,
    output: Output,
}

/// Runs transformed scripts against an instance registry. Top-level
/// definitions accumulate across [`Interpreter::load`] calls.
#[derive(Clone)]
pub struct Interpreter {
    machine: Arc<Machine>,
}

impl Interpreter {
    pub fn new(registry: Arc<InstanceRegistry>) -> Self {
        Interpreter {
            machine: Arc::new(Machine {
                registry,
                globals: RwLock::new(HashMap::new()),
                output: Output::default(),
            }),
        }
    }

    /// Lines printed so far.
    pub fn output(&self) -> &Output {
        &self.machine.output
    }

    /// Registers the script's definitions, then evaluates its remaining
    /// statements in `domain` with `env` bound.
    pub fn load(
        &self,
        ast: &Expr,
        domain: Option<Desc>,
        env: &[(&str, Value)],
    ) -> std::result::Result<Value, ScriptError> {
        let mut defs = Vec::new();
        let node = compile(ast, &mut defs, true)?;
        {
            let mut globals = self.machine.globals.write();
            for (name, g) in defs {
                globals.insert(name, Arc::new(g));
            }
        }
        let mut scope = Scope { env: None, domain };
        for (name, v) in env {
            scope.env = bind(&scope.env, Arc::from(*name), Slot::Value(v.clone()));
        }
        let m = self.machine.clone();
        Ok(with_wait_helper(|| m.eval(&node, &scope))?)
    }

    /// The value of a top-level definition.
    pub fn global(&self, name: &str) -> Result<Value> {
        let m = self.machine.clone();
        with_wait_helper(|| m.lookup_global(name))
    }

    /// Calls a top-level function.
    pub fn call(&self, name: &str, args: Vec<Value>) -> Result<Value> {
        let m = self.machine.clone();
        with_wait_helper(|| m.lookup_global(name)?.as_func()?.call_with(&[], args))
    }
}

/// Evaluates a transformed script and returns the value of its last
/// statement.
pub fn evaluate(
    ast: &Expr,
    registry: Arc<InstanceRegistry>,
    domain: Option<Desc>,
    env: &[(&str, Value)],
) -> std::result::Result<Value, ScriptError> {
    Interpreter::new(registry).load(ast, domain, env)
}

fn closure(m: &Arc<Machine>, code: &Arc<Code>, scope: &Scope) -> Value {
    let (m, code, env) = (m.clone(), code.clone(), scope.env.clone());
    match code.kind {
        Kind::Function => {
            let arity = code.params.len();
            Value::Func(Func::nary(Some(arity), move |_, args| {
                let mut env = env.clone();
                for (p, a) in code.params.iter().zip(args) {
                    env = bind(&env, p.clone(), Slot::Value(a));
                }
                let out = m.eval(
                    &code.body,
                    &Scope {
                        env,
                        domain: code.domain.clone(),
                    },
                )?;
                Ok(match (out, &code.domain) {
                    (Value::Func(f), Some(d)) if f.desc().is_none() && d.is_function() => {
                        Value::Func(f.with_desc(d.clone()))
                    }
                    (out, _) => out,
                })
            }))
        }
        Kind::Handler => {
            let domain = scope.domain.clone();
            Value::func(move |a| {
                let env = bind(&env, code.params[0].clone(), Slot::Value(a));
                m.eval(
                    &code.body,
                    &Scope {
                        env,
                        domain: domain.clone(),
                    },
                )
            })
        }
        Kind::Cont => {
            let tag = code.domain.clone();
            let answer = tag
                .as_ref()
                .and_then(|d| d.as_cont())
                .map(|(a, _)| a.clone());
            let bounce = answer.as_ref().is_some_and(Desc::has_trampoline_leaf);
            let f = Func::unary(move |k: Value| {
                // Deliveries to the callback are trampoline steps.
                let k = match &answer {
                    Some(a) if bounce => {
                        let a = a.clone();
                        Value::func(move |v| {
                            let k = k.clone();
                            suspend_in(&a, Arc::new(move || k.apply(v.clone())))
                        })
                    }
                    _ => k,
                };
                let env = bind(&env, code.params[0].clone(), Slot::Value(k));
                m.eval(
                    &code.body,
                    &Scope {
                        env,
                        domain: answer.clone(),
                    },
                )
            });
            Value::Func(match tag {
                Some(d) => f.with_desc(d),
                None => f,
            })
        }
    }
}

fn truthy(v: &Value) -> Result<bool> {
    v.as_bool()
}

fn collection_kind(kind: SeqKind) -> Option<CollectionKind> {
    CollectionKind::from_name(kind.name())
}

fn numeric(op: BinOp, a: &Value, b: &Value) -> Result<Value> {
    use BinOp::*;
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(match op {
            Add => Value::Int(x.wrapping_add(*y)),
            Sub => Value::Int(x.wrapping_sub(*y)),
            Mul => Value::Int(x.wrapping_mul(*y)),
            Div | Rem if *y == 0 => return Err(DslError::eval("division by zero")),
            Div => Value::Int(x.wrapping_div(*y)),
            Rem => Value::Int(x.wrapping_rem(*y)),
            Lt => Value::Bool(x < y),
            Le => Value::Bool(x <= y),
            Gt => Value::Bool(x > y),
            Ge => Value::Bool(x >= y),
            _ => unreachable!(),
        }),
        (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
            let (x, y) = (a.as_float()?, b.as_float()?);
            Ok(match op {
                Add => Value::Float(x + y),
                Sub => Value::Float(x - y),
                Mul => Value::Float(x * y),
                Div => Value::Float(x / y),
                Rem => Value::Float(x % y),
                Lt => Value::Bool(x < y),
                Le => Value::Bool(x <= y),
                Gt => Value::Bool(x > y),
                Ge => Value::Bool(x >= y),
                _ => unreachable!(),
            })
        }
        (Value::Str(x), Value::Str(y)) if matches!(op, Lt | Le | Gt | Ge) => {
            Ok(Value::Bool(match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                _ => x >= y,
            }))
        }
        (Value::Char(x), Value::Char(y)) if matches!(op, Lt | Le | Gt | Ge) => {
            Ok(Value::Bool(match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                _ => x >= y,
            }))
        }
        _ => Err(DslError::eval(format!(
            "`{}` is not defined on {} and {}",
            op.symbol(),
            a.type_name(),
            b.type_name()
        ))),
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value> {
    match op {
        BinOp::Eq => Ok(Value::Bool(a == b)),
        BinOp::Ne => Ok(Value::Bool(a != b)),
        BinOp::Add => match (&a, &b) {
            (Value::Str(_), _) | (_, Value::Str(_)) => Ok(Value::str(&format!("{a}{b}"))),
            (Value::Collection(kind, xs), Value::Collection(_, ys)) => {
                let mut items = xs.as_ref().clone();
                items.extend(ys.iter().cloned());
                Ok(Value::collection(*kind, items))
            }
            _ => numeric(op, &a, &b),
        },
        _ => numeric(op, &a, &b),
    }
}

impl Machine {
    fn lookup_global(self: &Arc<Self>, name: &str) -> Result<Value> {
        let global = self.globals.read().get(name).cloned();
        match global.as_deref() {
            Some(Global::Function(code)) => Ok(closure(
                self,
                code,
                &Scope {
                    env: None,
                    domain: None,
                },
            )),
            Some(Global::Thunk(domain, body)) => self.eval(
                body,
                &Scope {
                    env: None,
                    domain: domain.clone(),
                },
            ),
            None => Err(DslError::eval(format!("unbound name `{name}`"))),
        }
    }

    fn lookup(self: &Arc<Self>, name: &str, scope: &Scope) -> Result<Value> {
        let mut frame = scope.env.as_deref();
        while let Some(f) = frame {
            if &*f.name == name {
                return match &f.slot {
                    Slot::Value(v) => Ok(v.clone()),
                    Slot::Recursive(cell) => cell
                        .get()
                        .cloned()
                        .ok_or_else(|| DslError::eval(format!("`{name}` used before definition"))),
                };
            }
            frame = f.next.as_deref();
        }
        self.lookup_global(name)
    }

    fn eval(self: &Arc<Self>, node: &Node, scope: &Scope) -> Result<Value> {
        match node {
            Node::Lit(v) => Ok(v.clone()),
            Node::Var(name) => self.lookup(name, scope),
            Node::Block(steps, result) => {
                let mut scope = scope.clone();
                for step in steps {
                    match step {
                        Step::Let {
                            name,
                            value,
                            recursive: false,
                        } => {
                            let v = self.eval(value, &scope)?;
                            scope.env = bind(&scope.env, name.clone(), Slot::Value(v));
                        }
                        Step::Let {
                            name,
                            value,
                            recursive: true,
                        } => {
                            let cell = Arc::new(OnceLock::new());
                            scope.env =
                                bind(&scope.env, name.clone(), Slot::Recursive(cell.clone()));
                            let v = self.eval(value, &scope)?;
                            let _ = cell.set(v);
                        }
                        Step::Eval(e) => {
                            self.eval(e, &scope)?;
                        }
                    }
                }
                self.eval(result, &scope)
            }
            Node::Closure(code) => Ok(closure(self, code, scope)),
            Node::Apply(f, args) => {
                let f = self.eval(f, scope)?;
                let args = args
                    .iter()
                    .map(|a| self.eval(a, scope))
                    .collect::<Result<Vec<_>>>()?;
                match &f {
                    Value::Func(f) => f.call_with(&[], args),
                    other => Err(DslError::eval(format!(
                        "{} is not a function",
                        other.type_name()
                    ))),
                }
            }
            Node::Builtin { name, types, args } => {
                let args = args
                    .iter()
                    .map(|a| self.eval(a, scope))
                    .collect::<Result<Vec<_>>>()?;
                builtins::call(name, types, args, &self.output)
            }
            Node::Binary(BinOp::And, a, b) => {
                if truthy(&self.eval(a, scope)?)? {
                    Ok(Value::Bool(truthy(&self.eval(b, scope)?)?))
                } else {
                    Ok(Value::Bool(false))
                }
            }
            Node::Binary(BinOp::Or, a, b) => {
                if truthy(&self.eval(a, scope)?)? {
                    Ok(Value::Bool(true))
                } else {
                    Ok(Value::Bool(truthy(&self.eval(b, scope)?)?))
                }
            }
            Node::Binary(op, a, b) => {
                let a = self.eval(a, scope)?;
                let b = self.eval(b, scope)?;
                binary(*op, a, b)
            }
            Node::Neg(a) => match self.eval(a, scope)? {
                Value::Int(i) => Ok(Value::Int(i.wrapping_neg())),
                Value::Float(x) => Ok(Value::Float(-x)),
                other => Err(DslError::eval(format!(
                    "cannot negate {}",
                    other.type_name()
                ))),
            },
            Node::If(c, t, e) => {
                if truthy(&self.eval(c, scope)?)? {
                    self.eval(t, scope)
                } else if let Some(e) = e {
                    self.eval(e, scope)
                } else {
                    Ok(Value::Unit)
                }
            }
            Node::While(c, body) => {
                while truthy(&self.eval(c, scope)?)? {
                    self.eval(body, scope)?;
                }
                Ok(Value::Unit)
            }
            Node::Try {
                body,
                catch,
                finally,
            } => {
                let mut out = self.eval(body, scope);
                if let (Err(e), Some((name, handler))) = (&out, catch) {
                    let env = bind(
                        &scope.env,
                        name.clone(),
                        Slot::Value(e.clone().into_value()),
                    );
                    out = self.eval(
                        handler,
                        &Scope {
                            env,
                            domain: scope.domain.clone(),
                        },
                    );
                }
                if let Some(f) = finally {
                    self.eval(f, scope)?;
                }
                out
            }
            Node::Throw(a) => Err(DslError::Thrown(self.eval(a, scope)?)),
            Node::Collection(kind, items) => {
                let items = items
                    .iter()
                    .map(|a| self.eval(a, scope))
                    .collect::<Result<Vec<_>>>()?;
                Ok(match collection_kind(*kind) {
                    Some(k) => Value::collection(k, items),
                    None => LazyStream::from_values(items),
                })
            }
            Node::Reset(domain, body) => {
                let domain = domain.clone().or_else(|| scope.domain.clone());
                self.eval(
                    body,
                    &Scope {
                        env: scope.env.clone(),
                        domain,
                    },
                )
            }
            Node::CpsApply(k, h) => {
                let k = self.eval(k, scope)?;
                let h = self.eval(h, scope)?;
                self.cps_apply(k, h, scope)
            }
        }
    }

    fn cps_apply(self: &Arc<Self>, k: Value, h: Value, scope: &Scope) -> Result<Value> {
        let keyword = match &k {
            Value::Keyword(kw) => kw.as_ref().clone(),
            Value::Object(o) => {
                return o.cps_apply(h).unwrap_or_else(|| {
                    Err(DslError::eval(format!("{} has no cpsApply", o.type_name())))
                })
            }
            Value::Func(f) => match (f.desc().and_then(|d| d.cps_result()), &scope.domain) {
                (Some(answer), Some(_)) => shift_kw(k.clone(), Some(answer.clone())),
                _ => return f.call(h),
            },
            other => {
                return Err(DslError::eval(format!(
                    "{} is not a keyword",
                    other.type_name()
                )))
            }
        };
        let Some(domain) = &scope.domain else {
            return Err(DslError::eval(format!(
                "keyword {keyword} used where no domain is declared"
            )));
        };
        let resolved = self.registry.resolve(&keyword.sig(), domain)?;
        cps_apply(&keyword, h, &resolved)
    }
}
