//! Interpretations, derivation rules and the resolution engine.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::descriptor::DomainDescriptor;
use crate::error::{DslError, Result, SearchNode};
use crate::keyword::{KeywordSig, KeywordValue};
use crate::value::Value;

/// Body of an interpretation: `(matched domain, keyword, handler) -> domain value`.
pub type ApplyFn =
    Arc<dyn Fn(&DomainDescriptor, &KeywordValue, Value) -> Result<Value> + Send + Sync>;

/// An interpretation already bound to its domain.
pub type BoundApply = Arc<dyn Fn(&KeywordValue, Value) -> Result<Value> + Send + Sync>;

/// The domain shapes a direct instance accepts.
#[derive(Clone)]
pub enum DomainPattern {
    Any,
    /// Any domain that is not a function.
    NonFunction,
    /// The domain must be compatible with the keyword's type argument.
    KeywordArg,
    Exact(DomainDescriptor),
    Stream(Box<DomainPattern>),
    Deferred(Box<DomainPattern>),
    Trampoline(Box<DomainPattern>),
    Error(Box<DomainPattern>),
    /// A collection of any kind.
    Collection(Box<DomainPattern>),
    Fn(Box<DomainPattern>, Box<DomainPattern>),
    /// `Cont(answer, value)`.
    Cont(Box<DomainPattern>, Box<DomainPattern>),
    Task(Box<DomainPattern>),
    /// A named predicate, compared by name for duplicate detection.
    Custom(&'static str, fn(&DomainDescriptor, &KeywordSig) -> bool),
}

impl DomainPattern {
    pub fn stream(p: DomainPattern) -> Self {
        DomainPattern::Stream(Box::new(p))
    }

    pub fn deferred(p: DomainPattern) -> Self {
        DomainPattern::Deferred(Box::new(p))
    }

    pub fn collection(p: DomainPattern) -> Self {
        DomainPattern::Collection(Box::new(p))
    }

    pub fn func(param: DomainPattern, result: DomainPattern) -> Self {
        DomainPattern::Fn(Box::new(param), Box::new(result))
    }

    pub fn cont(answer: DomainPattern, value: DomainPattern) -> Self {
        DomainPattern::Cont(Box::new(answer), Box::new(value))
    }

    pub fn task(value: DomainPattern) -> Self {
        DomainPattern::Task(Box::new(value))
    }

    pub fn error(p: DomainPattern) -> Self {
        DomainPattern::Error(Box::new(p))
    }

    pub fn matches(&self, domain: &DomainDescriptor, sig: &KeywordSig) -> bool {
        use DomainDescriptor as D;
        use DomainPattern as P;
        match (self, domain) {
            (P::Any, _) => true,
            (P::NonFunction, d) => !d.is_function(),
            (P::KeywordArg, d) => sig.accepts(d),
            (P::Exact(e), d) => e == d,
            (P::Stream(p), D::Stream(e))
            | (P::Deferred(p), D::Deferred(e))
            | (P::Trampoline(p), D::Trampoline(e))
            | (P::Error(p), D::Error(e))
            | (P::Collection(p), D::Collection(_, e)) => p.matches(e, sig),
            (P::Fn(pp, pr), D::Fn(dp, dr)) => pp.matches(dp, sig) && pr.matches(dr, sig),
            (P::Cont(pa, pv), d) => d
                .as_cont()
                .is_some_and(|(a, v)| pa.matches(a, sig) && pv.matches(v, sig)),
            (P::Task(pv), d) => d.as_task().is_some_and(|v| pv.matches(v, sig)),
            (P::Custom(_, f), d) => f(d, sig),
            _ => false,
        }
    }
}

impl PartialEq for DomainPattern {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl fmt::Display for DomainPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DomainPattern as P;
        match self {
            P::Any => f.write_str("_"),
            P::NonFunction => f.write_str("<non-function>"),
            P::KeywordArg => f.write_str("<type argument>"),
            P::Exact(d) => write!(f, "{d}"),
            P::Stream(p) => write!(f, "Stream[{p}]"),
            P::Deferred(p) => write!(f, "Deferred[{p}]"),
            P::Trampoline(p) => write!(f, "Trampoline[{p}]"),
            P::Error(p) => write!(f, "Error[{p}]"),
            P::Collection(p) => write!(f, "Collection[{p}]"),
            P::Fn(a, b) => write!(f, "({a} => {b})"),
            P::Cont(a, v) => write!(f, "Cont[{a}, {v}]"),
            P::Task(v) => write!(f, "Task[{v}]"),
            P::Custom(name, _) => write!(f, "<{name}>"),
        }
    }
}

impl fmt::Debug for DomainPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A direct instance of the protocol for one keyword kind.
#[derive(Clone)]
pub struct Interpretation {
    pub name: Arc<str>,
    pub kind: Arc<str>,
    pub pattern: DomainPattern,
    apply: ApplyFn,
}

impl Interpretation {
    pub fn new(
        name: &str,
        kind: &str,
        pattern: DomainPattern,
        apply: impl Fn(&DomainDescriptor, &KeywordValue, Value) -> Result<Value> + Send + Sync + 'static,
    ) -> Self {
        Interpretation {
            name: Arc::from(name),
            kind: Arc::from(kind),
            pattern,
            apply: Arc::new(apply),
        }
    }

    pub fn apply(
        &self,
        domain: &DomainDescriptor,
        keyword: &KeywordValue,
        handler: Value,
    ) -> Result<Value> {
        check_kind(&self.kind, keyword)?;
        (self.apply)(domain, keyword, handler)
    }

    /// Binds the interpretation to `domain`, yielding a one-step resolution.
    pub fn bind(&self, domain: &DomainDescriptor) -> Resolved {
        let apply = self.apply.clone();
        let domain_owned = domain.clone();
        Resolved {
            kind: self.kind.clone(),
            domain: domain.clone(),
            trace: ResolutionTrace {
                steps: vec![self.name.to_string()],
            },
            apply: Arc::new(move |kw, h| apply(&domain_owned, kw, h)),
        }
    }
}

impl fmt::Debug for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} in {})", self.name, self.kind, self.pattern)
    }
}

fn check_kind(expected: &str, keyword: &KeywordValue) -> Result<()> {
    if *keyword.kind == *expected {
        Ok(())
    } else {
        Err(DslError::Protocol {
            expected: expected.to_string(),
            found: keyword.kind.to_string(),
        })
    }
}

/// Rule names and instance names applied, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolutionTrace {
    pub steps: Vec<String>,
}

impl fmt::Display for ResolutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.steps.join(", "))
    }
}

/// The outcome of a successful resolution.
#[derive(Clone)]
pub struct Resolved {
    pub kind: Arc<str>,
    pub domain: DomainDescriptor,
    pub trace: ResolutionTrace,
    apply: BoundApply,
}

impl Resolved {
    pub fn new(
        kind: Arc<str>,
        domain: DomainDescriptor,
        trace: ResolutionTrace,
        apply: BoundApply,
    ) -> Self {
        Resolved {
            kind,
            domain,
            trace,
            apply,
        }
    }

    pub fn apply(&self, keyword: &KeywordValue, handler: Value) -> Result<Value> {
        check_kind(&self.kind, keyword)?;
        (self.apply)(keyword, handler)
    }
}

impl fmt::Debug for Resolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {} via {}", self.kind, self.domain, self.trace)
    }
}

/// Dispatches a keyword to a resolved interpretation.
pub fn cps_apply(keyword: &KeywordValue, handler: Value, interp: &Resolved) -> Result<Value> {
    interp.apply(keyword, handler)
}

type MatchFn = dyn Fn(&DomainDescriptor) -> Option<DomainDescriptor> + Send + Sync;
type LiftFn = dyn Fn(&DomainDescriptor, &DomainDescriptor, Resolved) -> BoundApply + Send + Sync;

/// Lifts an interpretation for an inner domain to a domain with one more layer.
#[derive(Clone)]
pub struct DerivationRule {
    pub name: Arc<str>,
    matches: Arc<MatchFn>,
    lift: Arc<LiftFn>,
}

impl DerivationRule {
    /// `matches` peels one layer off a domain; `lift` receives the outer
    /// domain, the inner domain and the inner resolution.
    pub fn new(
        name: &str,
        matches: impl Fn(&DomainDescriptor) -> Option<DomainDescriptor> + Send + Sync + 'static,
        lift: impl Fn(&DomainDescriptor, &DomainDescriptor, Resolved) -> BoundApply
            + Send
            + Sync
            + 'static,
    ) -> Self {
        DerivationRule {
            name: Arc::from(name),
            matches: Arc::new(matches),
            lift: Arc::new(lift),
        }
    }

    pub fn peel(&self, domain: &DomainDescriptor) -> Option<DomainDescriptor> {
        (self.matches)(domain)
    }

    pub fn lift(&self, outer: &DomainDescriptor, inner: Resolved) -> Option<Resolved> {
        let inner_domain = self.peel(outer)?;
        let apply = (self.lift)(outer, &inner_domain, inner.clone());
        let mut steps = vec![self.name.to_string()];
        steps.extend(inner.trace.steps);
        Some(Resolved {
            kind: inner.kind,
            domain: outer.clone(),
            trace: ResolutionTrace { steps },
            apply,
        })
    }
}

impl fmt::Debug for DerivationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

pub const DEFAULT_MAX_DEPTH: usize = 16;

/// Ordered direct instances and derivation rules.
pub struct InstanceRegistry {
    direct: Vec<Interpretation>,
    rules: Vec<DerivationRule>,
    max_depth: usize,
    frozen: bool,
    cache: Mutex<HashMap<(KeywordSig, DomainDescriptor), Resolved>>,
}

impl Default for InstanceRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for InstanceRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InstanceRegistry")
            .field("direct", &self.direct)
            .field("rules", &self.rules)
            .field("max_depth", &self.max_depth)
            .field("frozen", &self.frozen)
            .finish()
    }
}

enum Search {
    Found(Resolved),
    Missing { depth_hit: bool },
}

impl InstanceRegistry {
    pub fn new() -> Self {
        InstanceRegistry {
            direct: Vec::new(),
            rules: Vec::new(),
            max_depth: DEFAULT_MAX_DEPTH,
            frozen: false,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth.max(1);
        self
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn direct(&self) -> &[Interpretation] {
        &self.direct
    }

    pub fn rules(&self) -> &[DerivationRule] {
        &self.rules
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn register(mut self, interp: Interpretation) -> Result<Self> {
        if self.frozen {
            return Err(DslError::Frozen);
        }
        if self
            .direct
            .iter()
            .any(|d| d.kind == interp.kind && d.pattern == interp.pattern)
        {
            return Err(DslError::Duplicate {
                kind: interp.kind.to_string(),
                pattern: interp.pattern.to_string(),
            });
        }
        self.direct.push(interp);
        Ok(self)
    }

    pub fn register_rule(mut self, rule: DerivationRule) -> Result<Self> {
        if self.frozen {
            return Err(DslError::Frozen);
        }
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(DslError::Duplicate {
                kind: "derivation".into(),
                pattern: rule.name.to_string(),
            });
        }
        self.rules.push(rule);
        Ok(self)
    }

    pub fn freeze(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn resolve_kind(&self, kind: &str, domain: &DomainDescriptor) -> Result<Resolved> {
        self.resolve(&KeywordSig::new(kind), domain)
    }

    /// Direct instances first, in registration order; otherwise a
    /// depth-first search through the derivation rules.
    pub fn resolve(&self, sig: &KeywordSig, domain: &DomainDescriptor) -> Result<Resolved> {
        if !self.frozen {
            return Err(DslError::NotFrozen);
        }
        let key = (sig.clone(), domain.clone());
        if let Some(hit) = self.cache.lock().get(&key) {
            return Ok(hit.clone());
        }
        let mut root = SearchNode::new(domain.clone(), None);
        match self.search(sig, domain, 0, &mut root) {
            Search::Found(resolved) => {
                self.cache.lock().insert(key, resolved.clone());
                Ok(resolved)
            }
            Search::Missing { depth_hit: true } => Err(DslError::DepthLimit {
                kind: sig.to_string(),
                domain: domain.clone(),
                limit: self.max_depth,
                tree: Box::new(root),
            }),
            Search::Missing { depth_hit: false } => Err(DslError::Resolution {
                kind: sig.to_string(),
                domain: domain.clone(),
                tree: Box::new(root),
            }),
        }
    }

    fn search(
        &self,
        sig: &KeywordSig,
        domain: &DomainDescriptor,
        depth: usize,
        node: &mut SearchNode,
    ) -> Search {
        if let Some(interp) = self
            .direct
            .iter()
            .find(|d| *d.kind == *sig.kind && d.pattern.matches(domain, sig))
        {
            return Search::Found(interp.bind(domain));
        }
        let mut depth_hit = false;
        for rule in &self.rules {
            let Some(inner) = rule.peel(domain) else {
                continue;
            };
            let mut child = SearchNode::new(inner.clone(), Some(rule.name.to_string()));
            if depth + 1 > self.max_depth {
                child.depth_exhausted = true;
                node.children.push(child);
                depth_hit = true;
                continue;
            }
            let outcome = self.search(sig, &inner, depth + 1, &mut child);
            node.children.push(child);
            match outcome {
                Search::Found(found) => {
                    if let Some(lifted) = rule.lift(domain, found) {
                        return Search::Found(lifted);
                    }
                }
                Search::Missing { depth_hit: hit } => depth_hit |= hit,
            }
        }
        Search::Missing { depth_hit }
    }

    /// Rebuilds a resolution from the names in `trace`.
    pub fn replay(
        &self,
        sig: &KeywordSig,
        domain: &DomainDescriptor,
        trace: &ResolutionTrace,
    ) -> Result<Resolved> {
        let fail = || DslError::Resolution {
            kind: sig.to_string(),
            domain: domain.clone(),
            tree: Box::new(SearchNode::new(domain.clone(), None)),
        };
        let (leaf_name, rule_names) = trace.steps.split_last().ok_or_else(fail)?;
        let mut domains = vec![domain.clone()];
        for name in rule_names {
            let rule = self
                .rules
                .iter()
                .find(|r| *r.name == **name)
                .ok_or_else(fail)?;
            let current = domains.last().ok_or_else(fail)?;
            let inner = rule.peel(current).ok_or_else(fail)?;
            domains.push(inner);
        }
        let innermost = domains.pop().ok_or_else(fail)?;
        let interp = self
            .direct
            .iter()
            .find(|d| {
                *d.name == **leaf_name && *d.kind == *sig.kind && d.pattern.matches(&innermost, sig)
            })
            .ok_or_else(fail)?;
        let mut resolved = interp.bind(&innermost);
        for name in rule_names.iter().rev() {
            let rule = self
                .rules
                .iter()
                .find(|r| *r.name == **name)
                .ok_or_else(fail)?;
            let outer = domains.pop().ok_or_else(fail)?;
            resolved = rule.lift(&outer, resolved).ok_or_else(fail)?;
        }
        Ok(resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::Desc;

    fn constant(name: &str, kind: &str, pattern: DomainPattern, out: i64) -> Interpretation {
        Interpretation::new(name, kind, pattern, move |_, _, _| Ok(Value::Int(out)))
    }

    fn peel_fn() -> DerivationRule {
        DerivationRule::new(
            "peel",
            |d| match d {
                Desc::Fn(_, r) => Some((**r).clone()),
                _ => None,
            },
            |_, _, inner| Arc::new(move |kw, h| inner.apply(kw, h)),
        )
    }

    #[test]
    fn unfrozen_registry_refuses_resolution() {
        let reg = InstanceRegistry::new();
        assert!(matches!(
            reg.resolve_kind("X", &Desc::int()),
            Err(DslError::NotFrozen)
        ));
    }

    #[test]
    fn duplicates_and_frozen_registration_rejected() {
        let reg = InstanceRegistry::new()
            .register(constant("a", "X", DomainPattern::Any, 1))
            .unwrap();
        assert!(matches!(
            reg.register(constant("b", "X", DomainPattern::Any, 2)),
            Err(DslError::Duplicate { .. })
        ));
        let frozen = InstanceRegistry::new().freeze();
        assert!(matches!(
            frozen.register(constant("a", "X", DomainPattern::Any, 1)),
            Err(DslError::Frozen)
        ));
    }

    #[test]
    fn derivation_peels_until_direct_match() {
        let reg = InstanceRegistry::new()
            .register(constant(
                "leaf",
                "X",
                DomainPattern::Exact(Desc::string()),
                7,
            ))
            .unwrap()
            .register_rule(peel_fn())
            .unwrap()
            .freeze();
        let domain = Desc::func(Desc::int(), Desc::func(Desc::int(), Desc::string()));
        let resolved = reg.resolve_kind("X", &domain).unwrap();
        assert_eq!(resolved.trace.steps, vec!["peel", "peel", "leaf"]);
        let replayed = reg
            .replay(&KeywordSig::new("X"), &domain, &resolved.trace)
            .unwrap();
        assert_eq!(replayed.trace, resolved.trace);
    }

    #[test]
    fn failure_carries_search_tree() {
        let reg = InstanceRegistry::new()
            .register_rule(peel_fn())
            .unwrap()
            .freeze();
        let err = reg
            .resolve_kind("X", &Desc::func(Desc::int(), Desc::int()))
            .unwrap_err();
        match err {
            DslError::Resolution { tree, .. } => assert_eq!(tree.size(), 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn depth_limit_reported() {
        let reg = InstanceRegistry::new()
            .with_max_depth(2)
            .register_rule(peel_fn())
            .unwrap()
            .freeze();
        let mut d = Desc::int();
        for _ in 0..5 {
            d = Desc::func(Desc::int(), d);
        }
        assert!(matches!(
            reg.resolve_kind("X", &d),
            Err(DslError::DepthLimit { limit: 2, .. })
        ));
    }

    #[test]
    fn protocol_violation_on_kind_mismatch() {
        let interp = constant("a", "X", DomainPattern::Any, 1);
        let kw = KeywordValue::new("Y", vec![], Desc::Unit);
        assert!(matches!(
            cps_apply(&kw, Value::Unit, &interp.bind(&Desc::int())),
            Err(DslError::Protocol { .. })
        ));
    }
}
