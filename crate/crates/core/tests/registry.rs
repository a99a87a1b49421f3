use ldk_core::{
    probe, CollectionKind, DerivationRule, Desc, DomainPattern, DslError, InstanceRegistry,
    Interpretation, KeywordSig, Value,
};
use proptest::prelude::*;

fn constant(name: &str, kind: &str, pattern: DomainPattern, out: i64) -> Interpretation {
    Interpretation::new(name, kind, pattern, move |_, _, _| Ok(Value::Int(out)))
}

/// Peels one function layer and wraps the inner result in a constant function.
fn peel_result() -> DerivationRule {
    DerivationRule::new(
        "peelResult",
        |d| match d {
            Desc::Fn(_, r) => Some((**r).clone()),
            _ => None,
        },
        |_, _, inner| {
            std::sync::Arc::new(move |kw, handler| {
                let v = inner.apply(kw, handler)?;
                Ok(Value::func(move |_| Ok(v.clone())))
            })
        },
    )
}

fn nested_fn(depth: usize, leaf: Desc) -> Desc {
    (0..depth).fold(leaf, |acc, _| Desc::func(Desc::int(), acc))
}

#[test]
fn resolution_requires_a_frozen_registry() {
    let open = InstanceRegistry::new()
        .register(constant("a", "K", DomainPattern::Any, 1))
        .unwrap();
    assert!(matches!(
        open.resolve_kind("K", &Desc::int()),
        Err(DslError::NotFrozen)
    ));
    assert!(matches!(
        open.freeze()
            .register(constant("b", "K", DomainPattern::Any, 2)),
        Err(DslError::Frozen)
    ));
    let frozen = InstanceRegistry::new().freeze();
    assert!(matches!(
        frozen.register_rule(peel_result()),
        Err(DslError::Frozen)
    ));
}

#[test]
fn duplicate_kind_and_pattern_is_rejected() {
    let reg = || {
        InstanceRegistry::new()
            .register(constant("a", "K", DomainPattern::Exact(Desc::int()), 1))
            .unwrap()
    };
    let again = reg().register(constant("b", "K", DomainPattern::Exact(Desc::int()), 2));
    assert!(matches!(again, Err(DslError::Duplicate { .. })));
    reg()
        .register(constant("c", "L", DomainPattern::Exact(Desc::int()), 3))
        .unwrap();
    reg()
        .register(constant("d", "K", DomainPattern::Exact(Desc::string()), 4))
        .unwrap();
}

#[test]
fn direct_instance_wins_over_derivation() {
    let domain = Desc::func(Desc::int(), Desc::int());
    let reg = InstanceRegistry::new()
        .register(constant("leaf", "K", DomainPattern::Exact(Desc::int()), 1))
        .unwrap()
        .register_rule(peel_result())
        .unwrap()
        .register(constant(
            "direct",
            "K",
            DomainPattern::Exact(domain.clone()),
            2,
        ))
        .unwrap()
        .freeze();
    let r = reg.resolve_kind("K", &domain).unwrap();
    assert_eq!(r.trace.steps, ["direct"]);
    let derived = reg
        .resolve_kind("K", &Desc::func(Desc::string(), Desc::int()))
        .unwrap();
    assert_eq!(derived.trace.steps, ["peelResult", "leaf"]);
    let f = derived
        .apply(
            &ldk_core::KeywordValue::new("K", vec![], Desc::any()),
            Value::Unit,
        )
        .unwrap();
    assert_eq!(f.apply(Value::str("ignored")).unwrap(), Value::Int(1));
}

#[test]
fn first_registered_direct_instance_wins() {
    let reg = InstanceRegistry::new()
        .register(constant("first", "K", DomainPattern::NonFunction, 1))
        .unwrap()
        .register(constant("second", "K", DomainPattern::Any, 2))
        .unwrap()
        .freeze();
    assert_eq!(
        reg.resolve_kind("K", &Desc::int()).unwrap().trace.steps,
        ["first"]
    );
    let f = Desc::func(Desc::int(), Desc::int());
    assert_eq!(reg.resolve_kind("K", &f).unwrap().trace.steps, ["second"]);
}

#[test]
fn failure_reports_the_search_tree() {
    let reg = InstanceRegistry::new()
        .register(constant(
            "leaf",
            "K",
            DomainPattern::Exact(Desc::string()),
            1,
        ))
        .unwrap()
        .register_rule(peel_result())
        .unwrap()
        .freeze();
    match reg.resolve_kind("K", &nested_fn(2, Desc::int())) {
        Err(DslError::Resolution { tree, domain, .. }) => {
            assert_eq!(domain, nested_fn(2, Desc::int()));
            assert_eq!(tree.size(), 3);
            let text = tree.to_string();
            assert!(text.contains("peelResult"), "{text}");
        }
        other => panic!("expected a resolution failure, got {other:?}"),
    }
}

#[test]
fn depth_limit_is_reported_separately() {
    let reg = InstanceRegistry::new()
        .with_max_depth(2)
        .register(constant("leaf", "K", DomainPattern::Exact(Desc::int()), 1))
        .unwrap()
        .register_rule(peel_result())
        .unwrap()
        .freeze();
    assert_eq!(
        reg.resolve_kind("K", &nested_fn(2, Desc::int()))
            .unwrap()
            .trace
            .steps
            .len(),
        3
    );
    assert!(matches!(
        reg.resolve_kind("K", &nested_fn(3, Desc::int())),
        Err(DslError::DepthLimit { limit: 2, .. })
    ));
}

#[test]
fn replay_rebuilds_the_same_resolution() {
    let reg = InstanceRegistry::new()
        .register(constant("leaf", "K", DomainPattern::Exact(Desc::int()), 7))
        .unwrap()
        .register_rule(peel_result())
        .unwrap()
        .freeze();
    let domain = nested_fn(3, Desc::int());
    let sig = KeywordSig::new("K");
    let r = reg.resolve(&sig, &domain).unwrap();
    let again = reg.replay(&sig, &domain, &r.trace).unwrap();
    assert_eq!(again.trace, r.trace);
}

#[test]
fn probe_tracks_nesting_and_resets() {
    probe::reset();
    let base = probe::current_depth();
    {
        let _a = probe::enter();
        let _b = probe::enter();
        assert_eq!(probe::current_depth(), base + 2);
    }
    assert_eq!(probe::current_depth(), base);
    assert_eq!(probe::max_depth(), base + 2);
    probe::reset();
    assert_eq!(probe::max_depth(), base);
}

fn desc() -> impl Strategy<Value = Desc> {
    let leaf = prop_oneof![
        Just(Desc::int()),
        Just(Desc::string()),
        Just(Desc::any()),
        Just(Desc::Unit)
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Desc::stream),
            inner.clone().prop_map(Desc::list),
            inner
                .clone()
                .prop_map(|e| Desc::collection(CollectionKind::Vector, e)),
            inner.clone().prop_map(Desc::error),
            inner.clone().prop_map(Desc::trampoline),
            (inner.clone(), inner).prop_map(|(p, r)| Desc::func(p, r)),
        ]
    })
}

proptest! {
    #[test]
    fn compatibility_is_reflexive_and_symmetric(a in desc(), b in desc()) {
        prop_assert!(a.compatible(&a));
        prop_assert_eq!(a.compatible(&b), b.compatible(&a));
        prop_assert!(a.compatible(&Desc::any()));
    }

    #[test]
    fn equal_descriptors_print_equally(a in desc(), b in desc()) {
        if a == b {
            prop_assert_eq!(a.to_string(), b.to_string());
        }
        prop_assert_eq!(a.clone(), a);
    }

    #[test]
    fn sets_ignore_order_and_duplicates(mut xs in proptest::collection::vec(-20i64..20, 0..12)) {
        let forward = Value::set(xs.iter().copied().map(Value::Int).collect());
        xs.reverse();
        let doubled: Vec<Value> = xs.iter().chain(&xs).copied().map(Value::Int).collect();
        let backward = Value::set(doubled);
        prop_assert_eq!(forward.to_string(), backward.to_string());
        let mut distinct = xs.clone();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(forward.sequence().unwrap().count(), distinct.len());
    }

    #[test]
    fn resolution_is_deterministic(depth in 0usize..5) {
        let reg = InstanceRegistry::new()
            .register(constant("leaf", "K", DomainPattern::Exact(Desc::int()), 1)).unwrap()
            .register_rule(peel_result()).unwrap()
            .freeze();
        let domain = nested_fn(depth, Desc::int());
        let first = reg.resolve_kind("K", &domain).unwrap().trace;
        prop_assert_eq!(first.steps.len(), depth + 1);
        for _ in 0..5 {
            prop_assert_eq!(&reg.resolve_kind("K", &domain).unwrap().trace, &first);
        }
    }
}
