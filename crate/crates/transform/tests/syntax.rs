use ldk_core::Desc;
use ldk_transform::corpus::{self, EXAMPLES};
use ldk_transform::{
    auto_reset, compile, parse, parse_type, pretty_print, Expr, Lit, ScriptError, SeqKind, Stmt,
};
use proptest::prelude::*;

fn sources() -> impl Iterator<Item = (&'static str, &'static str)> {
    EXAMPLES
        .iter()
        .chain([&corpus::TAIL_BANG])
        .flat_map(|e| [(e.name, e.source), (e.name, e.cps)])
        .chain([("bang-block", corpus::BANG_BLOCK)])
}

#[test]
fn let_bang_then_variable() {
    let ast = parse("let x = !Get(); x").unwrap();
    let get = Expr::Builtin {
        name: "Get".into(),
        types: vec![],
        args: vec![],
    };
    assert_eq!(
        ast,
        Expr::Block(
            vec![Stmt::Let("x".into(), Expr::Bang(Box::new(get)))],
            Box::new(Expr::var("x"))
        )
    );
}

#[test]
fn unbalanced_brace_reports_position() {
    let err = parse("def f(x) = {\n  let y = x\n  y\n").unwrap_err();
    match err {
        ScriptError::Syntax { line, col, .. } => assert_eq!((line, col), (4, 1)),
        other => panic!("expected a syntax error, got {other}"),
    }
    let err = parse("let a = (1 + 2").unwrap_err();
    assert!(
        matches!(
            err,
            ScriptError::Syntax {
                line: 1,
                col: 15,
                ..
            }
        ),
        "{err}"
    );
}

#[test]
fn stray_tokens_and_bad_names_are_rejected() {
    for bad in [
        "let x = 1 2",
        "let Yield = 3",
        "def f(List) = 1",
        "Get",
        "fun(x) { x } }",
        "let = 4",
        "if (x) 1",
    ] {
        assert!(
            matches!(parse(bad), Err(ScriptError::Syntax { .. })),
            "{bad} should not parse"
        );
    }
    assert!(parse("{ let x = 1; x }").is_ok());
}

#[test]
fn xorshift_is_one_function_with_one_bang() {
    let ast = parse(corpus::find("xorshift").unwrap().source).unwrap();
    let Expr::Block(stmts, _) = &ast else {
        panic!("expected a block")
    };
    let Some(Stmt::Def(def)) = stmts.first() else {
        panic!("expected a definition")
    };
    assert_eq!(def.name, "xorShiftRandomGenerator");
    assert_eq!(def.params.as_deref(), Some(&["seed".to_string()][..]));
    assert_eq!(def.domain, Some(Desc::stream(Desc::int())));
    assert_eq!(def.body.count_bangs(), 1);
    let Expr::Block(body, result) = &def.body else {
        panic!("expected a block body")
    };
    assert_eq!(body.len(), 4);
    assert!(matches!(&body[3], Stmt::Expr(Expr::Bang(_))));
    assert!(matches!(&**result, Expr::Apply(f, _) if **f == Expr::var("xorShiftRandomGenerator")));
}

#[test]
fn types_parse_with_right_associative_arrows() {
    assert_eq!(
        parse_type("Double => Int => String").unwrap(),
        Desc::func(
            Desc::scalar("Double"),
            Desc::func(Desc::int(), Desc::string())
        )
    );
    assert_eq!(
        parse_type("(Int => Int) => Int").unwrap(),
        Desc::func(Desc::func(Desc::int(), Desc::int()), Desc::int())
    );
    assert_eq!(
        parse_type("Task[List[String]]").unwrap(),
        Desc::task(Desc::list(Desc::string()))
    );
    assert_eq!(
        parse_type("Cont[Stream[String], Int]").unwrap(),
        Desc::cont(Desc::stream(Desc::string()), Desc::int())
    );
    assert!(parse_type("Stream").is_err());
    assert!(parse_type("Cont[Int]").is_err());
}

#[test]
fn negative_literals_and_escapes_survive_printing() {
    let src = "let a = -3\nlet b = -(x)\nlet c = \"tab\\t\\\"q\\\"\"\nlet d = '\\n'\nlet e = 2.0 - -1.5\na";
    let ast = parse(src).unwrap();
    assert_eq!(parse(&pretty_print(&ast)).unwrap(), ast);
    let Expr::Block(stmts, _) = &ast else {
        panic!()
    };
    assert_eq!(stmts[0], Stmt::Let("a".into(), Expr::Lit(Lit::Int(-3))));
    assert_eq!(
        stmts[1],
        Stmt::Let("b".into(), Expr::Neg(Box::new(Expr::var("x"))))
    );
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for (name, src) in sources() {
        let ast = parse(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let text = pretty_print(&ast);
        assert_eq!(
            parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}")),
            ast,
            "{name}"
        );
        assert_eq!(
            pretty_print(&parse(&text).unwrap()),
            text,
            "{name}: printing is not stable"
        );
    }
}

#[test]
fn transformed_corpus_round_trips_through_the_printer() {
    for eta in [true, false] {
        for (name, src) in sources() {
            let t = compile(src, eta).unwrap_or_else(|e| panic!("{name}: {e}"));
            let text = pretty_print(&t);
            let reparsed = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(auto_reset(reparsed), t, "{name}");
        }
    }
}

#[test]
fn script_without_bang_is_printed_unchanged() {
    let src = corpus::find("printf").unwrap().cps;
    let printed = pretty_print(&compile(src, true).unwrap());
    let expected = pretty_print(&parse(src).unwrap());
    assert_eq!(printed, expected);
}

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "xs", "acc", "k"]).prop_map(String::from)
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        any::<i32>().prop_map(|i| Expr::Lit(Lit::Int(i as i64))),
        any::<bool>().prop_map(|b| Expr::Lit(Lit::Bool(b))),
        "[a-z ]{0,6}".prop_map(|s| Expr::Lit(Lit::Str(s))),
        Just(Expr::unit()),
        name().prop_map(Expr::Var),
    ];
    leaf.prop_recursive(4, 40, 4, |inner| {
        let ops = prop::sample::select(vec![
            ldk_transform::BinOp::Add,
            ldk_transform::BinOp::Sub,
            ldk_transform::BinOp::Mul,
            ldk_transform::BinOp::Eq,
            ldk_transform::BinOp::Lt,
            ldk_transform::BinOp::And,
            ldk_transform::BinOp::Or,
        ]);
        prop_oneof![
            (ops, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Binary(
                op,
                Box::new(a),
                Box::new(b)
            )),
            inner.clone().prop_map(|a| Expr::Bang(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(f, a)| Expr::apply(f, a)),
            prop::collection::vec(inner.clone(), 0..3)
                .prop_map(|a| Expr::Collection(SeqKind::List, a)),
            (
                inner.clone(),
                inner.clone(),
                prop::option::of(inner.clone())
            )
                .prop_map(|(c, t, e)| Expr::If(
                    Box::new(c),
                    Box::new(t),
                    e.map(Box::new)
                )),
            (name(), inner.clone()).prop_map(|(p, b)| Expr::handler(&p, b)),
            (inner.clone(), inner.clone()).prop_map(|(k, h)| Expr::cps_apply(k, h)),
            (name(), inner.clone(), inner.clone())
                .prop_map(|(n, v, r)| Expr::Block(vec![Stmt::Let(n, v)], Box::new(r))),
            inner.clone().prop_map(|a| Expr::Throw(Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in expr()) {
        let text = pretty_print(&e);
        let back = parse(&text);
        prop_assert!(back.is_ok(), "{}\n{:?}", text, back);
        prop_assert_eq!(back.unwrap(), e);
    }
}
