//! Auto-reset marking, the name-based CPS rewrite and tail eta reduction.

use std::collections::{HashSet, VecDeque};

use ldk_core::Desc;

use crate::ast::{BinOp, ContLambda, Expr, Lit, Stmt};
use crate::error::ScriptError;

type Result<T> = std::result::Result<T, ScriptError>;

/// Fresh-name supply and the reset boundary currently being rewritten.
pub struct TransformContext {
    pub fresh_name_counter: usize,
    pub in_reset: bool,
    domain: Option<Desc>,
    taken: HashSet<String>,
}

impl TransformContext {
    /// A context whose fresh names avoid every variable in `ast`.
    pub fn for_tree(ast: &Expr) -> Self {
        let mut taken = HashSet::new();
        ast.walk(&mut |e| {
            if let Expr::Var(v) = e {
                taken.insert(v.clone());
            }
        });
        TransformContext {
            fresh_name_counter: 0,
            in_reset: false,
            domain: None,
            taken,
        }
    }

    /// A `$`-prefixed name; user scripts never bind these.
    pub fn fresh(&mut self, base: &str) -> String {
        loop {
            let name = format!("${base}{}", self.fresh_name_counter);
            self.fresh_name_counter += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn answer_of(domain: Option<&Desc>) -> Option<Desc> {
    domain
        .and_then(|d| d.as_cont())
        .map(|(answer, _)| answer.clone())
}

/// Marks every function body as a reset boundary and binds the callback
/// of each `cont` block, whose final value is passed to it.
pub fn auto_reset(ast: Expr) -> Expr {
    let mut cx = TransformContext::for_tree(&ast);
    mark(&mut cx, ast)
}

fn mark(cx: &mut TransformContext, e: Expr) -> Expr {
    let e = match e {
        Expr::Block(stmts, result) => {
            let stmts = stmts
                .into_iter()
                .map(|s| match s {
                    Stmt::Def(mut d) => {
                        if let Expr::ContLambda(c) = &mut d.body {
                            if c.domain.is_none() {
                                c.domain = d.domain.clone();
                            }
                        }
                        d.reset = true;
                        Stmt::Def(d)
                    }
                    other => other,
                })
                .collect();
            Expr::Block(stmts, result)
        }
        Expr::Lambda(mut l) => {
            l.reset = true;
            Expr::Lambda(l)
        }
        Expr::ContLambda(mut c) => {
            if c.param.is_none() {
                let k = cx.fresh("k");
                c.body = Expr::apply(Expr::var(&k), vec![c.body]);
                c.param = Some(k);
            }
            c.reset = true;
            Expr::ContLambda(c)
        }
        other => other,
    };
    let marked: std::result::Result<Expr, std::convert::Infallible> =
        e.map_children(&mut |child| Ok(mark(cx, child)));
    match marked {
        Ok(e) => e,
        Err(never) => match never {},
    }
}

/// Whether a Bang occurs at this boundary level (not inside nested
/// functions or explicit resets).
pub fn has_bang(e: &Expr) -> bool {
    match e {
        Expr::Bang(_) => true,
        Expr::Lambda(_) | Expr::ContLambda(_) | Expr::Reset(..) => false,
        Expr::Block(stmts, result) => {
            stmts.iter().any(|s| match s {
                Stmt::Let(_, e) | Stmt::Expr(e) => has_bang(e),
                Stmt::Def(_) => false,
            }) || has_bang(result)
        }
        other => {
            let mut found = false;
            let _ = other.clone().map_children(&mut |c| {
                found |= has_bang(&c);
                Ok::<Expr, ()>(c)
            });
            found
        }
    }
}

type Next = Box<dyn FnOnce(&mut TransformContext, Expr) -> Result<Expr>>;
type NextMany = Box<dyn FnOnce(&mut TransformContext, Vec<Expr>) -> Result<Expr>>;

/// Rewrites every Bang into a `cpsApply` whose handler holds the rest of
/// its reset boundary.
pub fn cps_transform(ast: Expr) -> Result<Expr> {
    let mut cx = TransformContext::for_tree(&ast);
    cx.walk(ast)
}

fn seq(value: Expr, rest: Expr) -> Expr {
    if value.is_atomic() {
        rest
    } else {
        Expr::prepend(Stmt::Expr(value), rest)
    }
}

fn jump(target: String) -> Next {
    Box::new(move |_, v| Ok(Expr::apply(Expr::Var(target), vec![v])))
}

impl TransformContext {
    /// Rewrites nested boundaries of an expression with no Bang at the
    /// current level.
    fn walk(&mut self, e: Expr) -> Result<Expr> {
        match e {
            Expr::Bang(_) => Err(ScriptError::transform("`!` outside any reset boundary")),
            Expr::Lambda(mut l) => {
                l.body = if l.reset {
                    self.boundary(l.body, l.domain.clone())?
                } else {
                    self.unmarked(l.body)?
                };
                Ok(Expr::Lambda(l))
            }
            Expr::ContLambda(mut c) => {
                c.body = if c.reset {
                    self.boundary(c.body, answer_of(c.domain.as_ref()))?
                } else {
                    self.unmarked(c.body)?
                };
                Ok(Expr::ContLambda(c))
            }
            Expr::Reset(d, body) => {
                let body = self.boundary(*body, d.clone())?;
                Ok(Expr::Reset(d, Box::new(body)))
            }
            Expr::Block(stmts, result) => {
                let mut out = Vec::with_capacity(stmts.len());
                for s in stmts {
                    out.push(match s {
                        Stmt::Def(mut d) => {
                            d.body = if d.reset {
                                self.boundary(d.body, d.domain.clone())?
                            } else {
                                self.unmarked(d.body)?
                            };
                            Stmt::Def(d)
                        }
                        Stmt::Let(n, e) => Stmt::Let(n, self.walk(e)?),
                        Stmt::Expr(e) => Stmt::Expr(self.walk(e)?),
                    });
                }
                Ok(Expr::Block(out, Box::new(self.walk(*result)?)))
            }
            other => other.map_children(&mut |c| self.walk(c)),
        }
    }

    /// A function body that was never marked as a boundary.
    fn unmarked(&mut self, body: Expr) -> Result<Expr> {
        let saved = std::mem::replace(&mut self.in_reset, false);
        let out = self.walk(body);
        self.in_reset = saved;
        out
    }

    fn boundary(&mut self, body: Expr, domain: Option<Desc>) -> Result<Expr> {
        let saved_reset = std::mem::replace(&mut self.in_reset, true);
        let saved_domain = std::mem::replace(&mut self.domain, domain);
        let out = self.cps(body, Box::new(|_, v| Ok(v)));
        self.in_reset = saved_reset;
        self.domain = saved_domain;
        out
    }

    fn cps(&mut self, e: Expr, k: Next) -> Result<Expr> {
        if !has_bang(&e) {
            let w = self.walk(e)?;
            return k(self, w);
        }
        match e {
            Expr::Bang(inner) => self.cps(
                *inner,
                Box::new(move |cx, a| {
                    let v = cx.fresh("t");
                    let rest = k(cx, Expr::var(&v))?;
                    Ok(Expr::cps_apply(a, Expr::handler(&v, rest)))
                }),
            ),
            Expr::Block(stmts, result) => self.cps_block(stmts.into(), *result, k),
            Expr::If(c, t, e) => {
                let branches_suspend = has_bang(&t) || e.as_deref().is_some_and(has_bang);
                self.cps(
                    *c,
                    Box::new(move |cx, c| {
                        if !branches_suspend {
                            let t = cx.walk(*t)?;
                            let e = e.map(|e| cx.walk(*e).map(Box::new)).transpose()?;
                            return k(cx, Expr::If(Box::new(c), Box::new(t), e));
                        }
                        let (j, v) = (cx.fresh("j"), cx.fresh("v"));
                        let rest = k(cx, Expr::var(&v))?;
                        let forwarded = match &rest {
                            Expr::Apply(f, args) if args.len() == 1 && args[0] == Expr::var(&v) => {
                                match &**f {
                                    Expr::Var(name) if *name != v => Some(name.clone()),
                                    _ => None,
                                }
                            }
                            _ => None,
                        };
                        let target = forwarded.clone().unwrap_or_else(|| j.clone());
                        let t = cx.cps(*t, jump(target.clone()))?;
                        let e = cx.cps(e.map(|e| *e).unwrap_or_else(Expr::unit), jump(target))?;
                        let branch = Expr::If(Box::new(c), Box::new(t), Some(Box::new(e)));
                        Ok(match forwarded {
                            Some(_) => branch,
                            None => Expr::Block(
                                vec![Stmt::Let(j, Expr::handler(&v, rest))],
                                Box::new(branch),
                            ),
                        })
                    }),
                )
            }
            Expr::While(c, body) => {
                let lp = self.fresh("loop");
                let exit = k(self, Expr::unit())?;
                let again = lp.clone();
                let body = self.cps(
                    *body,
                    Box::new(move |_, v| {
                        Ok(seq(v, Expr::apply(Expr::Var(again), vec![Expr::unit()])))
                    }),
                )?;
                let test = self.cps(
                    *c,
                    Box::new(move |_, c| {
                        Ok(Expr::If(Box::new(c), Box::new(body), Some(Box::new(exit))))
                    }),
                )?;
                Ok(Expr::Block(
                    vec![Stmt::Let(lp.clone(), Expr::handler("_", test))],
                    Box::new(Expr::apply(Expr::Var(lp), vec![Expr::unit()])),
                ))
            }
            Expr::Try {
                body,
                catch,
                finally,
            } => {
                if !self.domain.as_ref().is_some_and(Desc::has_error_layer) {
                    let shown = self
                        .domain
                        .as_ref()
                        .map(|d| d.to_string())
                        .unwrap_or_else(|| "an undeclared domain".into());
                    return Err(ScriptError::transform(format!(
                        "`try` around `!` needs a domain with an error layer, found {shown}"
                    )));
                }
                let body = self.section(*body)?;
                let on_error = match catch {
                    Some(c) => {
                        let section = self.section(c.body)?;
                        Expr::Handler(c.name, Box::new(section))
                    }
                    None => Expr::unit(),
                };
                let finalizer = match finally {
                    Some(f) => self.section(*f)?,
                    None => Expr::unit(),
                };
                let call = Expr::Builtin {
                    name: "tryProtect".into(),
                    types: Vec::new(),
                    args: vec![body, on_error, finalizer],
                };
                let v = self.fresh("t");
                let rest = k(self, Expr::var(&v))?;
                Ok(Expr::cps_apply(call, Expr::handler(&v, rest)))
            }
            Expr::Throw(inner) => self.cps(
                *inner,
                Box::new(move |cx, a| k(cx, Expr::Throw(Box::new(a)))),
            ),
            Expr::Handler(..) => Err(ScriptError::transform("`!` inside a continuation handler")),
            Expr::Binary(BinOp::And, a, b) if has_bang(&b) => self.cps(
                Expr::If(a, b, Some(Box::new(Expr::Lit(Lit::Bool(false))))),
                k,
            ),
            Expr::Binary(BinOp::Or, a, b) if has_bang(&b) => self.cps(
                Expr::If(a, Box::new(Expr::Lit(Lit::Bool(true))), Some(b)),
                k,
            ),
            Expr::Binary(op, a, b) => self.cps_operands(
                VecDeque::from([*a, *b]),
                Vec::new(),
                Box::new(move |cx, mut ops| {
                    let b = ops.pop().unwrap_or_else(Expr::unit);
                    let a = ops.pop().unwrap_or_else(Expr::unit);
                    k(cx, Expr::Binary(op, Box::new(a), Box::new(b)))
                }),
            ),
            Expr::Neg(a) => self.cps(*a, Box::new(move |cx, a| k(cx, Expr::Neg(Box::new(a))))),
            Expr::Apply(f, args) => {
                let mut ops = VecDeque::from([*f]);
                ops.extend(args);
                self.cps_operands(
                    ops,
                    Vec::new(),
                    Box::new(move |cx, mut ops| {
                        let f = ops.remove(0);
                        k(cx, Expr::Apply(Box::new(f), ops))
                    }),
                )
            }
            Expr::Builtin { name, types, args } => self.cps_operands(
                args.into(),
                Vec::new(),
                Box::new(move |cx, args| k(cx, Expr::Builtin { name, types, args })),
            ),
            Expr::Collection(kind, items) => self.cps_operands(
                items.into(),
                Vec::new(),
                Box::new(move |cx, items| k(cx, Expr::Collection(kind, items))),
            ),
            Expr::CpsApply(a, b) => self.cps_operands(
                VecDeque::from([*a, *b]),
                Vec::new(),
                Box::new(move |cx, mut ops| {
                    let b = ops.pop().unwrap_or_else(Expr::unit);
                    let a = ops.pop().unwrap_or_else(Expr::unit);
                    k(cx, Expr::cps_apply(a, b))
                }),
            ),
            other => Err(ScriptError::transform(format!(
                "cannot rewrite `{}`",
                other
            ))),
        }
    }

    /// A try/catch/finally section as a task in the error-capable domain.
    fn section(&mut self, body: Expr) -> Result<Expr> {
        let k = self.fresh("k");
        let c = ContLambda {
            param: Some(k.clone()),
            domain: Some(Desc::task(Desc::any())),
            body: Expr::apply(Expr::var(&k), vec![body]),
            reset: true,
        };
        self.walk(Expr::ContLambda(Box::new(c)))
    }

    /// Operands evaluate left to right; an operand already evaluated
    /// before a later suspension is bound to a fresh name first.
    fn cps_operands(
        &mut self,
        mut ops: VecDeque<Expr>,
        mut done: Vec<Expr>,
        k: NextMany,
    ) -> Result<Expr> {
        loop {
            let Some(op) = ops.pop_front() else {
                return k(self, done);
            };
            let later = ops.iter().any(has_bang);
            if has_bang(&op) {
                return self.cps(
                    op,
                    Box::new(move |cx, a| {
                        if later && !a.is_atomic() {
                            let t = cx.fresh("t");
                            done.push(Expr::var(&t));
                            let rest = cx.cps_operands(ops, done, k)?;
                            Ok(Expr::prepend(Stmt::Let(t, a), rest))
                        } else {
                            done.push(a);
                            cx.cps_operands(ops, done, k)
                        }
                    }),
                );
            }
            let w = self.walk(op)?;
            if later && !w.is_atomic() {
                let t = self.fresh("t");
                done.push(Expr::var(&t));
                let rest = self.cps_operands(ops, done, k)?;
                return Ok(Expr::prepend(Stmt::Let(t, w), rest));
            }
            done.push(w);
        }
    }

    fn cps_block(&mut self, mut stmts: VecDeque<Stmt>, result: Expr, k: Next) -> Result<Expr> {
        let Some(s) = stmts.pop_front() else {
            return self.cps(result, k);
        };
        match s {
            Stmt::Let(name, Expr::Bang(inner)) => self.cps(
                *inner,
                Box::new(move |cx, a| {
                    let rest = cx.cps_block(stmts, result, k)?;
                    Ok(Expr::cps_apply(a, Expr::Handler(name, Box::new(rest))))
                }),
            ),
            Stmt::Let(name, rhs) if has_bang(&rhs) => self.cps(
                rhs,
                Box::new(move |cx, a| {
                    let rest = cx.cps_block(stmts, result, k)?;
                    Ok(Expr::prepend(Stmt::Let(name, a), rest))
                }),
            ),
            Stmt::Expr(Expr::Bang(inner)) => self.cps(
                *inner,
                Box::new(move |cx, a| {
                    let rest = cx.cps_block(stmts, result, k)?;
                    Ok(Expr::cps_apply(a, Expr::handler("_", rest)))
                }),
            ),
            Stmt::Expr(e) if has_bang(&e) => self.cps(
                e,
                Box::new(move |cx, a| {
                    let rest = cx.cps_block(stmts, result, k)?;
                    Ok(seq(a, rest))
                }),
            ),
            other => {
                let walked = match other {
                    Stmt::Let(name, rhs) => Stmt::Let(name, self.walk(rhs)?),
                    Stmt::Expr(e) => Stmt::Expr(self.walk(e)?),
                    Stmt::Def(d) => {
                        match self.walk(Expr::Block(vec![Stmt::Def(d)], Box::new(Expr::unit())))? {
                            Expr::Block(mut s, _) => s.remove(0),
                            _ => unreachable!(),
                        }
                    }
                };
                let rest = self.cps_block(stmts, result, k)?;
                Ok(Expr::prepend(walked, rest))
            }
        }
    }
}

/// Replaces `e.cpsApply({ v => k(v) })` by `e.cpsApply(k)` wherever `k`
/// is a variable other than `v`.
pub fn eta_reduce_tail(ast: Expr) -> Expr {
    let reduced: std::result::Result<Expr, std::convert::Infallible> =
        ast.map_children(&mut |c| Ok(eta_reduce_tail(c)));
    let e = match reduced {
        Ok(e) => e,
        Err(never) => match never {},
    };
    match e {
        Expr::CpsApply(kw, h) => {
            let reduced = match *h {
                Expr::Handler(param, body) => match *body {
                    Expr::Apply(f, args)
                        if param != "_"
                            && matches!(&*f, Expr::Var(g) if *g != param)
                            && matches!(args.as_slice(), [Expr::Var(a)] if *a == param) =>
                    {
                        *f
                    }
                    body => Expr::Handler(param, Box::new(body)),
                },
                other => other,
            };
            Expr::CpsApply(kw, Box::new(reduced))
        }
        other => other,
    }
}
