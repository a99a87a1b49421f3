use ldk_transform::corpus::{self, EXAMPLES};
use ldk_transform::{
    auto_reset, compile, cps_transform, eta_reduce_tail, has_bang, parse, pretty_print, Expr,
    ScriptError, Stmt,
};

fn all_sources() -> impl Iterator<Item = (&'static str, &'static str)> {
    EXAMPLES
        .iter()
        .chain([&corpus::TAIL_BANG])
        .flat_map(|e| [(e.name, e.source), (e.name, e.cps)])
        .chain([("bang-block", corpus::BANG_BLOCK)])
}

fn transform_err(src: &str) -> String {
    match compile(src, true) {
        Err(ScriptError::Transform(msg)) => msg,
        other => panic!("expected a transform error for {src:?}, got {other:?}"),
    }
}

fn defs(ast: &Expr) -> Vec<&ldk_transform::Def> {
    let Expr::Block(stmts, _) = ast else {
        return Vec::new();
    };
    stmts
        .iter()
        .filter_map(|s| {
            if let Stmt::Def(d) = s {
                Some(&**d)
            } else {
                None
            }
        })
        .collect()
}

/// Keyword operands of each `cpsApply` along the chain of nested handlers.
fn chain(mut e: &Expr) -> Vec<String> {
    let mut out = Vec::new();
    loop {
        match e {
            Expr::CpsApply(kw, h) => {
                out.push(pretty_print(kw).trim_end().to_string());
                match &**h {
                    Expr::Handler(_, body) => e = body,
                    _ => return out,
                }
            }
            Expr::Block(_, result) => e = result,
            _ => return out,
        }
    }
}

#[test]
fn bang_block_becomes_nested_chain() {
    let golden = auto_reset(parse(corpus::BANG_BLOCK_GOLDEN).unwrap());
    for eta in [true, false] {
        assert_eq!(compile(corpus::BANG_BLOCK, eta).unwrap(), golden);
    }
    let printed = pretty_print(&golden);
    assert_eq!(
        printed.trim_end(),
        "def f = e0.cpsApply({ v0 => e1.cpsApply({ v1 => e2.cpsApply({ v2 => r }) }) })"
    );
}

#[test]
fn xorshift_prints_explicit_chain() {
    let ex = corpus::find("xorshift").unwrap();
    let printed = pretty_print(&compile(ex.source, true).unwrap());
    assert_eq!(printed.trim_end(), corpus::XORSHIFT_GOLDEN.trim_end());
    assert_eq!(printed.matches(".cpsApply(").count(), 1);
}

#[test]
fn tail_bang_loses_exactly_one_wrapper() {
    let eta = pretty_print(&compile(corpus::TAIL_BANG.source, true).unwrap());
    let plain = pretty_print(&compile(corpus::TAIL_BANG.source, false).unwrap());
    assert_eq!(eta.trim_end(), corpus::TAIL_BANG_GOLDEN.trim_end());
    assert_eq!(plain.trim_end(), corpus::TAIL_BANG_NO_ETA_GOLDEN.trim_end());

    let differing: Vec<_> = eta
        .lines()
        .zip(plain.lines())
        .filter(|(a, b)| a != b)
        .collect();
    assert_eq!(eta.lines().count(), plain.lines().count());
    assert_eq!(differing.len(), 1);
    let (short, long) = differing[0];
    assert_eq!(long.matches("=>").count(), short.matches("=>").count() + 1);
}

#[test]
fn eta_reduction_is_idempotent() {
    for (name, src) in all_sources() {
        let plain = compile(src, false).unwrap();
        let once = eta_reduce_tail(plain);
        let twice = eta_reduce_tail(once.clone());
        assert_eq!(once, twice, "{name}");
    }
}

#[test]
fn eta_leaves_non_tail_binds_alone() {
    let src = "def f(): Cont[Int, Int] = { let a = !g(); a + 1 }";
    assert_eq!(compile(src, true).unwrap(), compile(src, false).unwrap());
}

#[test]
fn no_bang_survives() {
    for eta in [true, false] {
        for (name, src) in all_sources() {
            let t = compile(src, eta).unwrap();
            assert_eq!(t.count_bangs(), 0, "{name}");
            assert!(!has_bang(&t), "{name}");
        }
    }
}

#[test]
fn bang_outside_reset_is_rejected() {
    let msg = transform_err("println(!Get())");
    assert!(msg.contains("outside"), "{msg}");
    // Unmarked trees have no boundaries at all.
    assert!(matches!(
        cps_transform(parse("def f = !g").unwrap()),
        Err(ScriptError::Transform(_))
    ));
}

#[test]
fn try_needs_error_layer() {
    let msg =
        transform_err("def f(): Stream[Int] = { try { !Yield(1) } catch (e) { 0 }; Stream() }");
    assert!(msg.contains("error layer"), "{msg}");
    compile(
        "def f(): Task[Int] = { try { !g() } catch (e) { 0 } }",
        true,
    )
    .unwrap();
    compile(
        "def f(): Stream[Int] = { try { 1 } catch (e) { 0 }; Stream() }",
        true,
    )
    .unwrap();
}

#[test]
fn bang_in_handler_is_rejected() {
    let msg = transform_err("def f(): Cont[Int, Int] = g().cpsApply({ x => !h(x) })");
    assert!(msg.contains("handler"), "{msg}");
}

#[test]
fn lambda_without_bang_is_unchanged() {
    for src in [
        "let f = fun(x) { x + 1 }\nf(2)",
        "def f1 = \"Hello World!\"",
        "def g(a, b) = if (a) { b } else { 0 }",
    ] {
        let parsed = auto_reset(parse(src).unwrap());
        assert_eq!(compile(src, true).unwrap(), parsed, "{src}");
    }
}

#[test]
fn two_placeholders_nest_two_binds() {
    let t = compile(corpus::find("printf").unwrap().source, true).unwrap();
    let d = defs(&t);
    let f3 = d.iter().find(|d| d.name == "f3").unwrap();
    assert_eq!(chain(&f3.body), ["StringPlaceholder", "IntPlaceholder"]);
    let f1 = d.iter().find(|d| d.name == "f1").unwrap();
    assert!(chain(&f1.body).is_empty());
}

#[test]
fn operands_are_hoisted_left_to_right_innermost_first() {
    let t = compile("def f(): Cont[Int, Int] = g(!a, h(!b, !c), !d)", false).unwrap();
    assert_eq!(chain(&defs(&t)[0].body), ["a", "b", "c", "d"]);
    let t = compile("def f(): Cont[Int, Int] = !outer(!inner)", false).unwrap();
    assert_eq!(chain(&defs(&t)[0].body), ["inner", "outer($t0)"]);
}

#[test]
fn inner_lambda_gets_its_own_boundary() {
    let src = "def outer(): Stream[Int] = {\n  let gen = fun(): Stream[Int] { !Yield(1); Stream() }\n  !Yield(0)\n  gen()\n}";
    let t = compile(src, false).unwrap();
    let outer = defs(&t)[0];
    assert_eq!(chain(&outer.body), ["Yield(0)"]);
    let Expr::Block(stmts, _) = &outer.body else {
        panic!()
    };
    let Stmt::Let(_, Expr::Lambda(gen)) = &stmts[0] else {
        panic!("{}", pretty_print(&outer.body))
    };
    assert!(gen.reset);
    assert_eq!(chain(&gen.body), ["Yield(1)"]);
}

#[test]
fn transform_output_is_closed_under_the_pipeline() {
    for (name, src) in all_sources() {
        let once = compile(src, true).unwrap();
        let again = compile(&pretty_print(&once), true).unwrap();
        assert_eq!(again, once, "{name}");
    }
}
