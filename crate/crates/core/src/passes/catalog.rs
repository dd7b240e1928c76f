use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{Pass, PassContext, Renaming, RewriteResult, SemanticsClass, FRESH_DOMAINS};
use crate::ast::{free_atoms, opaque_identifiers, rename_free, Atom, BigOpKind, Constant, Expr};

fn one() -> Expr {
    Expr::num("1")
}

fn symbol(a: Atom) -> Expr {
    Expr::Symbol(a)
}

/// `\sum_{κ=1}^{1} e`
pub struct UnitSum;

impl Pass for UnitSum {
    fn id(&self) -> &'static str {
        "unit-sum"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "wrap in a one-term sum"
    }

    fn rewrite_term(&self, term: &Expr, cx: &mut PassContext) -> Expr {
        let k = cx.fresh.fresh(&["kappa"]);
        Expr::big_op(BigOpKind::Sum, Some(k), Some(one()), Some(one()), term.clone())
    }
}

/// `\prod_{ξ=1}^{1} e`
pub struct UnitProd;

impl Pass for UnitProd {
    fn id(&self) -> &'static str {
        "unit-prod"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "wrap in a one-factor product"
    }

    fn rewrite_term(&self, term: &Expr, cx: &mut PassContext) -> Expr {
        let k = cx.fresh.fresh(&["xi"]);
        Expr::big_op(BigOpKind::Prod, Some(k), Some(one()), Some(one()), term.clone())
    }
}

/// `\frac{2 π ℏ}{h} e`, which is `e` because ℏ = h/2π.
pub struct Planck;

impl Pass for Planck {
    fn id(&self) -> &'static str {
        "planck"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "multiply by 2 pi hbar / h"
    }

    fn rewrite_term(&self, term: &Expr, _cx: &mut PassContext) -> Expr {
        let num = Expr::imul(Expr::imul(Expr::num("2"), Expr::Constant(Constant::Pi)), Expr::Constant(Constant::HBar));
        Expr::imul(Expr::frac(num, Expr::Constant(Constant::H)), term.clone())
    }
}

/// `\ln(e^{e})`
pub struct LogExp;

impl Pass for LogExp {
    fn id(&self) -> &'static str {
        "log-exp"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "take ln of exp"
    }

    fn rewrite_term(&self, term: &Expr, _cx: &mut PassContext) -> Expr {
        Expr::func("ln", Expr::func("exp", term.clone()))
    }
}

/// `(\sin^2 φ + \cos^2 φ) e` with φ fresh and free.
pub struct TrigOne;

impl Pass for TrigOne {
    fn id(&self) -> &'static str {
        "trig-one"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "multiply by sin^2 + cos^2 of a fresh angle"
    }

    fn rewrite_term(&self, term: &Expr, cx: &mut PassContext) -> Expr {
        let phi = cx.fresh.fresh(&["varphi"]);
        let square = |f: &str| Expr::pow(Expr::func(f, symbol(phi.clone())), Expr::num("2"));
        Expr::imul(Expr::group(Expr::add(square("sin"), square("cos"))), term.clone())
    }
}

fn contains_bare_d(e: &Expr) -> bool {
    let mut found = false;
    e.visit(&mut |node, _| {
        if let Expr::Symbol(a) = node {
            if a.name == "d" && a.sub.is_none() && a.accent.is_none() && a.font.is_none() {
                found = true;
            }
        }
    });
    found
}

/// `\int_{0}^{1} e \, dτ`
pub struct UnitIntegral;

impl Pass for UnitIntegral {
    fn id(&self) -> &'static str {
        "unit-integral"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "integrate over the unit interval"
    }

    /// A symbol named `d` inside the integrand would read as a differential.
    fn applicable(&self, e: &Expr) -> bool {
        !contains_bare_d(e)
    }

    fn rewrite_term(&self, term: &Expr, cx: &mut PassContext) -> Expr {
        let tau = cx.fresh.fresh(&["tau"]);
        Expr::big_op(BigOpKind::Integral, Some(tau), Some(Expr::num("0")), Some(one()), term.clone())
    }
}

type Template = fn(&mut PassContext) -> Expr;

fn contour(domain: Atom, var: Atom, body: Expr) -> Expr {
    Expr::big_op(BigOpKind::ContourIntegral, Some(var), Some(symbol(domain)), None, body)
}

fn partial(wrt: &Atom, operand: Expr) -> Expr {
    Expr::Partial { order: 1, wrt: wrt.clone(), operand: Box::new(operand) }
}

fn domain(cx: &mut PassContext, preferred: &str) -> Atom {
    let mut order = vec![preferred];
    order.extend(FRESH_DOMAINS.iter().copied().filter(|d| *d != preferred));
    cx.fresh.fresh(&order)
}

/// `∮_Ω \frac{∂}{∂θ} θ \, dθ`
fn loop_derivative(cx: &mut PassContext) -> Expr {
    let omega = domain(cx, "Omega");
    let theta = cx.fresh.fresh(&["theta"]);
    contour(omega, theta.clone(), partial(&theta, symbol(theta.clone())))
}

/// `∮_Γ \frac{∂}{∂χ} \ln(e^{χ}) \, dχ`
fn loop_log(cx: &mut PassContext) -> Expr {
    let gamma = domain(cx, "Gamma");
    let chi = cx.fresh.fresh(&["chi"]);
    let body = partial(&chi, Expr::func("ln", Expr::func("exp", symbol(chi.clone()))));
    contour(gamma, chi, body)
}

/// `∮_Σ \prod_{ν=1}^{1} \frac{∂}{∂ϱ} ϱ^{2} \, dϱ`
fn loop_product(cx: &mut PassContext) -> Expr {
    let sigma = domain(cx, "Sigma");
    let rho = cx.fresh.fresh(&["varrho"]);
    let nu = cx.fresh.fresh(&["nu"]);
    let body = Expr::big_op(
        BigOpKind::Prod,
        Some(nu),
        Some(one()),
        Some(one()),
        partial(&rho, Expr::pow(symbol(rho.clone()), Expr::num("2"))),
    );
    contour(sigma, rho, body)
}

const TEMPLATES: [Template; 3] = [loop_derivative, loop_log, loop_product];

/// `e + 0 \cdot D` for a decorative contour integral `D`.
pub struct ZeroAdd;

impl ZeroAdd {
    pub const TEMPLATE_COUNT: usize = TEMPLATES.len();

    pub fn decorated(term: &Expr, template: usize, cx: &mut PassContext) -> Expr {
        let decorator = TEMPLATES[template % TEMPLATES.len()](cx);
        Expr::add(term.clone(), Expr::mul(Expr::num("0"), decorator))
    }
}

impl Pass for ZeroAdd {
    fn id(&self) -> &'static str {
        "zero-add"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::ExactIdentity
    }

    fn describe(&self) -> &'static str {
        "add zero times a contour integral"
    }

    fn rewrite_term(&self, term: &Expr, cx: &mut PassContext) -> Expr {
        let template = cx.rng.gen_range(0..TEMPLATES.len());
        ZeroAdd::decorated(term, template, cx)
    }
}

/// Renames one non-Greek free symbol to a fresh Greek letter.
pub struct GreekRename;

impl GreekRename {
    /// Free non-Greek atoms by key, excluding names an opaque command mentions.
    pub fn candidates(e: &Expr) -> BTreeMap<String, Atom> {
        let free = free_atoms(e);
        let mut opaque_names = BTreeSet::new();
        let mut out = BTreeMap::new();
        e.visit(&mut |node, _| match node {
            Expr::Opaque(raw) => opaque_names.extend(opaque_identifiers(raw)),
            Expr::Symbol(a) if !a.is_greek() && free.contains(&a.key()) => {
                out.entry(a.key()).or_insert_with(|| a.clone());
            }
            _ => {}
        });
        out.retain(|_, a| !opaque_names.contains(&a.name));
        out
    }

    pub fn rename(e: &Expr, old: &Atom, base: &str) -> (Expr, Renaming) {
        let new = Atom { name: base.to_string(), font: None, sub: old.sub.clone(), accent: old.accent };
        (rename_free(e, &old.key(), &new), Renaming::single(old.key(), new.key()))
    }
}

impl Pass for GreekRename {
    fn id(&self) -> &'static str {
        "greek-rename"
    }

    fn semantics(&self) -> SemanticsClass {
        SemanticsClass::Renaming
    }

    fn describe(&self) -> &'static str {
        "rename a Latin symbol to a fresh Greek letter"
    }

    fn applicable(&self, e: &Expr) -> bool {
        !GreekRename::candidates(e).is_empty() && super::FreshSymbolSource::for_expr(e).peek_base(&["psi"]).is_some()
    }

    fn rewrite_term(&self, term: &Expr, _cx: &mut PassContext) -> Expr {
        term.clone()
    }

    fn apply(&self, e: &Expr, cx: &mut PassContext) -> RewriteResult {
        let candidates: Vec<Atom> = GreekRename::candidates(e).into_values().collect();
        if candidates.is_empty() {
            return RewriteResult { expr: e.clone(), renaming: Some(Renaming::default()) };
        }
        let old = &candidates[cx.rng.gen_range(0..candidates.len())];
        let Some(base) = cx.fresh.fresh_base(&["psi"]) else {
            return RewriteResult { expr: e.clone(), renaming: Some(Renaming::default()) };
        };
        let (expr, renaming) = GreekRename::rename(e, old, &base);
        RewriteResult { expr, renaming: Some(renaming) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{emit, free_symbols, parse_math};
    use crate::rng::from_u64;

    fn run(pass: &dyn Pass, src: &str) -> RewriteResult {
        let e = parse_math(src).unwrap();
        let mut cx = PassContext::new(from_u64(0), &e);
        pass.apply(&e, &mut cx)
    }

    fn out(pass: &dyn Pass, src: &str) -> String {
        emit(&run(pass, src).expr)
    }

    #[test]
    fn catalog_outputs() {
        assert_eq!(out(&UnitSum, "E"), "\\sum_{\\kappa=1}^{1} E");
        assert_eq!(out(&UnitSum, "x+y"), "\\sum_{\\kappa=1}^{1} \\left( x + y \\right)");
        assert_eq!(out(&UnitProd, "m"), "\\prod_{\\xi=1}^{1} m");
        assert_eq!(out(&Planck, "mc^{2}"), "\\frac{2 \\pi \\hbar}{h} m c^{2}");
        assert_eq!(out(&LogExp, "x"), "\\ln\\left( e^{x} \\right)");
        assert_eq!(out(&TrigOne, "n"), "\\left( \\sin^{2}\\varphi + \\cos^{2}\\varphi \\right) n");
        assert_eq!(out(&UnitIntegral, "E"), "\\int_{0}^{1} E \\, d\\tau");
    }

    #[test]
    fn zero_add_first_template() {
        let e = parse_math("L").unwrap();
        let mut cx = PassContext::new(from_u64(0), &e);
        let d = ZeroAdd::decorated(&e, 0, &mut cx);
        assert_eq!(emit(&d), "L + 0 \\cdot \\oint_{\\Omega} \\frac{\\partial}{\\partial \\theta} \\theta \\, d\\theta");
    }

    #[test]
    fn zero_add_templates_avoid_used_names() {
        let e = parse_math("\\Omega \\theta").unwrap();
        let mut cx = PassContext::new(from_u64(0), &e);
        let d = ZeroAdd::decorated(&e, 0, &mut cx);
        assert_eq!(
            emit(&d),
            "\\Omega \\theta + 0 \\cdot \\oint_{\\Gamma} \\frac{\\partial}{\\partial \\kappa} \\kappa \\, d\\kappa"
        );
    }

    #[test]
    fn relation_sides_are_rewritten_separately() {
        assert_eq!(out(&LogExp, "a = b"), "\\ln\\left( e^{a} \\right) = \\ln\\left( e^{b} \\right)");
    }

    #[test]
    fn trig_one_adds_one_free_symbol() {
        let r = run(&TrigOne, "n");
        let mut expected = free_symbols(&parse_math("n").unwrap());
        expected.insert("\\varphi".into());
        assert_eq!(free_symbols(&r.expr), expected);
    }

    #[test]
    fn greek_rename() {
        let e = parse_math("x + y").unwrap();
        let (renamed, sigma) = GreekRename::rename(&e, &Atom::new("x"), "psi");
        assert_eq!(emit(&renamed), "\\psi + y");
        assert_eq!(sigma, Renaming::single("x", "\\psi"));
        assert!(!GreekRename.applicable(&parse_math("\\alpha + \\beta").unwrap()));
        let r = run(&GreekRename, "\\hat{y_i} + \\alpha");
        assert_eq!(emit(&r.expr), "\\hat{\\psi_{i}} + \\alpha");
    }

    #[test]
    fn greek_rename_respects_binders() {
        let e = parse_math("k + \\sum_{k=1}^{3} k").unwrap();
        let (renamed, _) = GreekRename::rename(&e, &Atom::new("k"), "psi");
        assert_eq!(emit(&renamed), "\\psi + \\sum_{k=1}^{3} k");
    }

    #[test]
    fn unit_integral_skips_bare_d() {
        assert!(!UnitIntegral.applicable(&parse_math("c d").unwrap()));
        assert!(UnitIntegral.applicable(&parse_math("d_{1}").unwrap()));
    }
}
