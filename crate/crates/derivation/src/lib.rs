//! Derivation rules that lift an interpretation for an inner domain to a
//! domain with one more function, error or trampoline layer, and the
//! standard registry assembled from every built-in instance.

use std::sync::Arc;

use ldk_core::{BoundApply, DerivationRule, Desc, InstanceRegistry, Result, Value};
use ldk_task::suspend_in;

pub const DERIVE_FUNCTION: &str = "derive_function";
pub const DERIVE_ERROR: &str = "derive_error";
pub const DERIVE_TRAMPOLINE: &str = "derive_trampoline";

fn is_trampolined_cont(domain: &Desc) -> bool {
    domain
        .as_cont()
        .is_some_and(|(answer, _)| answer.has_trampoline_leaf())
}

/// `Fn(S, D)` from `D`: the state is captured and handed back to each
/// handler result. Continuations into trampolined answers are left to
/// [`derive_trampoline`].
pub fn derive_function() -> DerivationRule {
    DerivationRule::new(
        DERIVE_FUNCTION,
        |domain| match domain {
            Desc::Fn(_, result) if !is_trampolined_cont(domain) => Some((**result).clone()),
            _ => None,
        },
        |_, _, inner| -> BoundApply {
            Arc::new(move |kw, handler| {
                let (inner, kw) = (inner.clone(), kw.clone());
                Ok(Value::func(move |state: Value| {
                    let handler = handler.clone();
                    let resupply = Value::func(move |v| handler.apply(v)?.apply(state.clone()));
                    inner.apply(&kw, resupply)
                }))
            })
        },
    )
}

/// `Error(D)` from `D`: failures raised synchronously by the handler are
/// routed to the failure continuation.
pub fn derive_error() -> DerivationRule {
    DerivationRule::new(
        DERIVE_ERROR,
        |domain| match domain {
            Desc::Error(inner) => Some((**inner).clone()),
            _ => None,
        },
        |_, _, inner| -> BoundApply {
            Arc::new(move |kw, handler| {
                let (inner, kw) = (inner.clone(), kw.clone());
                Ok(Value::func(move |raise: Value| {
                    let handler = handler.clone();
                    let guard_raise = raise.clone();
                    let guarded = Value::func(move |v| {
                        match handler.apply(v).and_then(|d| d.apply(guard_raise.clone())) {
                            Ok(out) => Ok(out),
                            Err(e) => guard_raise.apply(e.into_value()),
                        }
                    });
                    inner.apply(&kw, guarded)
                }))
            })
        },
    )
}

/// `Cont(A, V)` from `A` when `A` ends in a trampoline: every handler call
/// becomes one suspended step, so chains of keywords run in constant stack.
pub fn derive_trampoline() -> DerivationRule {
    DerivationRule::new(
        DERIVE_TRAMPOLINE,
        |domain| match domain.as_cont() {
            Some((answer, _)) if answer.has_trampoline_leaf() => Some(answer.clone()),
            _ => None,
        },
        |_, answer, inner| -> BoundApply {
            let answer = answer.clone();
            Arc::new(move |kw, handler| {
                let (inner, kw, answer) = (inner.clone(), kw.clone(), answer.clone());
                Ok(Value::func(move |k: Value| {
                    let (handler, answer) = (handler.clone(), answer.clone());
                    let suspended = Value::func(move |v: Value| {
                        let (handler, k) = (handler.clone(), k.clone());
                        suspend_in(
                            &answer,
                            Arc::new(move || handler.apply(v.clone())?.apply(k.clone())),
                        )
                    });
                    inner.apply(&kw, suspended)
                }))
            })
        },
    )
}

/// The rules in their default priority order.
pub fn rules() -> Vec<DerivationRule> {
    vec![derive_function(), derive_error(), derive_trampoline()]
}

/// Every built-in instance and rule, not yet frozen.
pub fn standard_builder() -> Result<InstanceRegistry> {
    let mut registry = ldk_keywords::instances::register_all(InstanceRegistry::new())?;
    registry = ldk_task::instances::register_all(registry)?;
    for rule in rules() {
        registry = registry.register_rule(rule)?;
    }
    Ok(registry)
}

/// The frozen standard registry.
pub fn standard_registry() -> InstanceRegistry {
    standard_builder()
        .expect("built-in instances are consistent")
        .freeze()
}
