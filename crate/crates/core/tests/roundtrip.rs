mod common;

use proptest::prelude::*;
use zero2hero::ast::{canonicalize, emit, parse_math, tokenize};
use zero2hero::metric::score;

use common::{gen_equation, gen_expr, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parse_of_emit_is_canonical_form(seed in any::<u64>(), depth in 1u32..5) {
        let e = gen_equation(&mut rng(seed), depth);
        let text = emit(&e);
        let parsed = parse_math(&text);
        prop_assert!(parsed.is_ok(), "{text:?} failed: {:?}", parsed.err());
        prop_assert_eq!(parsed.unwrap(), canonicalize(&e), "source {}", text);
    }

    #[test]
    fn emission_is_a_fixed_point(seed in any::<u64>(), depth in 1u32..5) {
        let e = gen_equation(&mut rng(seed), depth);
        let once = emit(&e);
        prop_assert_eq!(&once, &emit(&e));
        let twice = emit(&parse_math(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn score_survives_reparsing(seed in any::<u64>(), depth in 1u32..5) {
        let e = canonicalize(&gen_expr(&mut rng(seed), depth));
        let again = parse_math(&emit(&e)).unwrap();
        prop_assert_eq!(score(&e), score(&again));
    }

    #[test]
    fn subterms_never_outscore_their_parent(seed in any::<u64>(), depth in 1u32..5) {
        let e = canonicalize(&gen_expr(&mut rng(seed), depth));
        let total = score(&e).total;
        for child in e.children() {
            prop_assert!(score(child).total < total);
        }
    }

    #[test]
    fn parser_is_total_on_token_soup(parts in prop::collection::vec(prop::sample::select(vec![
        "x", "y", "2", "+", "-", "=", "^", "_", "{", "}", "(", ")", "[", "]", "|", "&", "\\\\", ",",
        "\\frac", "\\sum", "\\int", "\\oint", "\\partial", "\\left(", "\\right)", "\\alpha", "\\sin",
        "\\begin{aligned}", "\\end{aligned}", "d", "e", "\\hat", "\\mathcal", "\\sqrt", "\\,", " ", "\\label{a}",
        "\\foo", "%", "\n", "\\Bigg[", "\\Bigg]", ".", "\\cdot", "1.5",
    ]), 0..40)) {
        let src: String = parts.concat();
        if tokenize(&src).is_ok() {
            // Either outcome is fine; it must simply return.
            let _ = parse_math(&src);
        }
    }
}

#[test]
fn generator_covers_every_node_kind() {
    use std::collections::BTreeSet;
    let mut kinds = BTreeSet::new();
    for seed in 0..400 {
        gen_equation(&mut rng(seed), 4).visit(&mut |n, _| {
            kinds.insert(format!("{:?}", n.kind()));
        });
    }
    for k in [
        "Number",
        "Symbol",
        "Greek",
        "Constant",
        "Neg",
        "BinOp",
        "Relation",
        "Fraction",
        "Function",
        "BigOp",
        "Partial",
        "Group",
        "Opaque",
        "Rows",
        "Annotated",
    ] {
        assert!(kinds.contains(k), "missing {k}");
    }
}
