//! Example scripts with their expected output and hand-written CPS versions.

pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
    /// The same program written directly in continuation-passing style.
    pub cps: &'static str,
    pub expected: &'static [&'static str],
}

macro_rules! example {
    ($name:literal, [$($line:literal),* $(,)?]) => {
        Example {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".dsl")),
            cps: include_str!(concat!("../corpus/cps/", $name, ".dsl")),
            expected: &[$($line),*],
        }
    };
}

pub const EXAMPLES: &[Example] = &[
    example!(
        "xorshift",
        [
            "723471715",
            "2497366906",
            "2064144800",
            "2008045182",
            "3532304609",
            "374114282",
            "1350636274",
            "691148861",
            "746858951",
            "2653896249"
        ]
    ),
    example!(
        "returnable-generator",
        [
            "before returnableGenerator",
            "inside returnableGenerator",
            "after returnableGenerator",
            "the return value of returnableGenerator is 1"
        ]
    ),
    example!(
        "early-generator",
        [
            "before earlyGenerator",
            "inside earlyGenerator",
            "early return",
            "after earlyGenerator",
            "the return value of earlyGenerator is 1"
        ]
    ),
    example!(
        "printf",
        ["Hello World!", "Hello World!", "The value of x is 3."]
    ),
    example!("prefix", ["List(List(1), List(1, 2), List(1, 2, 3))"]),
    example!("state-single", ["O"]),
    example!("state-formatter", ["x=0.5,y=42"]),
    example!("composite", ["Set(4, 6, 8, 9, 10, 12, 14)"]),
    example!("primes", ["List(2, 3, 5, 7, 11, 13)"]),
    example!(
        "heterogeneous",
        ["List(fooL, fooD, fooK, barL, barD, barK, bazL, bazD, bazK)"]
    ),
    example!(
        "gcc-flags",
        ["List(gcc, -c, main.c, -I, lib1/include, -I, lib2/include)"]
    ),
    example!(
        "async-generator",
        ["<html>example.com</html>", "<html>example.net</html>"]
    ),
    example!("fork-demo", ["echo: alpha", "echo: beta", "echo: gamma"]),
    example!("channel-echo", ["hello over an in-memory channel"]),
];

/// A tail recursive sum, used to show the effect of eta reduction.
pub const TAIL_BANG: Example = example!("tail-bang", ["10"]);

/// A block of bound `!` statements.
pub const BANG_BLOCK: &str = include_str!("../corpus/bang-block.dsl");

pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

/// Expected rewrite of [`BANG_BLOCK`].
pub const BANG_BLOCK_GOLDEN: &str = include_str!("../corpus/golden/bang-block.dsl");

/// Exact printed rewrite of the xorshift example.
pub const XORSHIFT_GOLDEN: &str = include_str!("../corpus/golden/xorshift.dsl");

/// Exact printed rewrites of [`TAIL_BANG`] with and without eta reduction.
pub const TAIL_BANG_GOLDEN: &str = include_str!("../corpus/golden/tail-bang.dsl");
pub const TAIL_BANG_NO_ETA_GOLDEN: &str = include_str!("../corpus/golden/tail-bang.no-eta.dsl");
