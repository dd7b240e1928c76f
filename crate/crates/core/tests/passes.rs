mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use zero2hero::ast::{all_names, canonicalize, BigOpKind, Expr};
use zero2hero::metric::score;
use zero2hero::oracle::{eval, random_assignment, verify_equiv, Assignment, Verdict};
use zero2hero::passes::{standard, Pass, PassContext, RewriteResult};
use zero2hero::rng::{from_u64, stream, Stream};

use common::{gen_constant_integral, gen_equation, gen_evaluable, rng};

fn rewrite(pass: &dyn Pass, e: &Expr, seed: u64) -> RewriteResult {
    pass.apply(e, &mut PassContext::for_equation(seed, 0, e))
}

fn binders(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.visit(&mut |n, _| {
        if let Expr::BigOp(b) = n {
            if let Some(v) = &b.var {
                out.insert(v.key());
            }
        }
    });
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_pass_preserves_value(seed in any::<u64>()) {
        let e = canonicalize(&gen_evaluable(&mut rng(seed), 3));
        for pass in standard().iter() {
            if !pass.applicable(&e) {
                continue;
            }
            let out = rewrite(pass, &e, seed);
            let mut r = stream(seed, 0, Stream::Verify);
            if let Ok(report) = verify_equiv(&e, &out.expr, out.renaming.as_ref(), 20, 1e-9, &mut r) {
                prop_assert_ne!(report.verdict, Verdict::Fail, "{} on {:?}", pass.id(), e);
            }
        }
    }

    #[test]
    fn renaming_is_exact(seed in any::<u64>()) {
        let e = canonicalize(&gen_evaluable(&mut rng(seed), 3));
        let pass = standard().get("greek-rename").unwrap();
        if pass.applicable(&e) {
            let out = rewrite(pass, &e, seed);
            let sigma = out.renaming.expect("renaming pass reports its map");
            let mut r = from_u64(seed);
            for _ in 0..20 {
                let a = random_assignment(&e, &mut r);
                match (eval(&e, &a), eval(&out.expr, &a.renamed(&sigma))) {
                    (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                    (x, y) => prop_assert_eq!(x.is_ok(), y.is_ok()),
                }
            }
        }
    }

    #[test]
    fn introduced_names_are_fresh(seed in any::<u64>()) {
        let base = gen_equation(&mut rng(seed), 3);
        let crowded = Expr::add(
            Expr::add(Expr::sym("kappa"), Expr::sym("tau")),
            Expr::add(Expr::sym("varphi"), base.clone()),
        );
        let e = canonicalize(&Expr::add(crowded, Expr::sym("xi")));
        let taken = all_names(&e);
        for pass in standard().iter() {
            if !pass.applicable(&e) {
                continue;
            }
            let out = rewrite(pass, &e, seed);
            for v in binders(&out.expr).difference(&binders(&e)) {
                prop_assert!(!taken.contains(v), "{} reused {v}", pass.id());
            }
            if let Some(sigma) = &out.renaming {
                for (_, new) in sigma.iter() {
                    prop_assert!(!taken.contains(new), "{} renamed onto {new}", pass.id());
                }
            }
        }
    }

    #[test]
    fn every_pass_strictly_raises_the_score(seed in any::<u64>(), depth in 1u32..5) {
        let e = canonicalize(&gen_equation(&mut rng(seed), depth));
        let before = score(&e).total;
        for pass in standard().iter() {
            if pass.applicable(&e) {
                let after = score(&canonicalize(&rewrite(pass, &e, seed).expr)).total;
                prop_assert!(after > before, "{}: {before} -> {after}", pass.id());
            }
        }
    }

    #[test]
    fn constant_integrals_match_midpoint_quadrature(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (integral, lo, hi) = gen_constant_integral(&mut g);
        let body = match &integral {
            Expr::BigOp(b) if b.kind == BigOpKind::Integral => b.body.clone(),
            _ => unreachable!(),
        };
        let a = random_assignment(&integral, &mut from_u64(seed));
        if let (Ok(value), Ok(f)) = (eval(&integral, &a), eval(&body, &a)) {
            let n = 64;
            let h = (hi - lo) / n as f64;
            let quad: f64 = (0..n).map(|_| f * h).sum();
            let scale = value.abs().max(1.0);
            prop_assert!((value - quad).abs() / scale <= 1e-9, "{value} vs {quad}");
        }
    }

    #[test]
    fn zero_times_anything_is_zero(seed in any::<u64>()) {
        let d = gen_equation(&mut rng(seed), 3);
        let e = Expr::mul(Expr::num("0"), Expr::group(d.clone()));
        prop_assert_eq!(eval(&e, &Assignment::new()).unwrap(), 0.0);
        let imul = Expr::imul(Expr::num("0"), Expr::group(d));
        prop_assert_eq!(eval(&imul, &Assignment::new()).unwrap(), 0.0);
    }

    #[test]
    fn an_equation_verifies_against_itself(seed in any::<u64>()) {
        let e = canonicalize(&gen_equation(&mut rng(seed), 3));
        let mut r = from_u64(seed);
        if let Ok(report) = verify_equiv(&e, &e, None, 20, 1e-9, &mut r) {
            prop_assert_ne!(report.verdict, Verdict::Fail);
        }
    }
}

#[test]
fn evaluable_generator_is_mostly_evaluable() {
    let mut ok = 0;
    for seed in 0..300 {
        let e = gen_evaluable(&mut rng(seed), 3);
        let a = random_assignment(&e, &mut from_u64(seed));
        ok += eval(&e, &a).is_ok() as usize;
    }
    assert!(ok >= 250, "only {ok} of 300 evaluate");
}
