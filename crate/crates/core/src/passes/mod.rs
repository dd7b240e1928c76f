//! Value-preserving rewrites that make an equation look harder.

mod catalog;
mod plan;
mod registry;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::{all_names, Atom, Expr};
use crate::rng::{stream, SeededRng, Stream};

pub use catalog::{GreekRename, LogExp, Planck, TrigOne, UnitIntegral, UnitProd, UnitSum, ZeroAdd};
pub use plan::{apply_plan, apply_plan_steps, plan_passes, plan_with, PassPlan};
pub use registry::{standard, Registry, UnknownPass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SemanticsClass {
    /// Same value under every assignment.
    ExactIdentity,
    /// Same value once free symbols are renamed back.
    Renaming,
}

/// A bijection between symbol keys, old name to new name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Renaming {
    map: BTreeMap<String, String>,
}

impl Renaming {
    pub fn single(old: impl Into<String>, new: impl Into<String>) -> Renaming {
        Renaming { map: BTreeMap::from([(old.into(), new.into())]) }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Renaming {
        Renaming { map: pairs.into_iter().collect() }
    }

    pub fn apply<'a>(&'a self, name: &'a str) -> &'a str {
        self.map.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.map.iter()
    }

    /// `self` followed by `later`.
    pub fn then(&self, later: &Renaming) -> Renaming {
        let mut map: BTreeMap<String, String> =
            self.map.iter().map(|(k, v)| (k.clone(), later.apply(v).to_string())).collect();
        let images: BTreeSet<&String> = self.map.values().collect();
        for (k, v) in &later.map {
            if !images.contains(k) && !self.map.contains_key(k) {
                map.insert(k.clone(), v.clone());
            }
        }
        map.retain(|k, v| k != v);
        Renaming { map }
    }

    pub fn inverse(&self) -> Renaming {
        Renaming { map: self.map.iter().map(|(k, v)| (v.clone(), k.clone())).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteResult {
    pub expr: Expr,
    pub renaming: Option<Renaming>,
}

/// Bare Greek names tried for fresh variables, most readable first.
pub const FRESH_PREFERENCE: &[&str] = &[
    "kappa",
    "tau",
    "varphi",
    "xi",
    "psi",
    "chi",
    "eta",
    "nu",
    "mu",
    "lambda",
    "rho",
    "varrho",
    "sigma",
    "omega",
    "zeta",
    "beta",
    "gamma",
    "delta",
    "epsilon",
    "varepsilon",
    "iota",
    "alpha",
    "theta",
    "vartheta",
    "upsilon",
    "phi",
    "varsigma",
    "varkappa",
    "varpi",
];

/// Capital letters for integration domains.
pub const FRESH_DOMAINS: &[&str] =
    &["Omega", "Gamma", "Sigma", "Lambda", "Theta", "Xi", "Phi", "Psi", "Delta", "Upsilon"];

/// Hands out Greek names unused anywhere in the equation being rewritten.
#[derive(Debug, Clone, Default)]
pub struct FreshSymbolSource {
    forbidden: BTreeSet<String>,
}

impl FreshSymbolSource {
    pub fn new(forbidden: BTreeSet<String>) -> FreshSymbolSource {
        FreshSymbolSource { forbidden }
    }

    pub fn for_expr(e: &Expr) -> FreshSymbolSource {
        FreshSymbolSource::new(all_names(e))
    }

    pub fn forbid(&mut self, name: impl Into<String>) {
        self.forbidden.insert(name.into());
    }

    fn base_free(&self, name: &str) -> bool {
        !self.forbidden.contains(name) && !self.forbidden.contains(&format!("\\{name}"))
    }

    /// A Greek base name that occurs nowhere, not even subscripted.
    pub fn fresh_base(&mut self, preferred: &[&str]) -> Option<String> {
        let name = preferred.iter().chain(FRESH_PREFERENCE).find(|n| self.base_free(n))?.to_string();
        self.forbidden.insert(name.clone());
        Some(name)
    }

    pub fn peek_base(&self, preferred: &[&str]) -> Option<String> {
        preferred.iter().chain(FRESH_PREFERENCE).find(|n| self.base_free(n)).map(|n| n.to_string())
    }

    /// A fresh atom: a bare Greek letter if one is left, else a
    /// subscripted one such as `\kappa_{3}`.
    pub fn fresh(&mut self, preferred: &[&str]) -> Atom {
        if let Some(name) = self.fresh_base(preferred) {
            return Atom::new(name);
        }
        let base = preferred.first().copied().unwrap_or(FRESH_PREFERENCE[0]);
        let mut n = 1u64;
        loop {
            let atom = Atom::new(base).with_sub(Expr::num(n.to_string()));
            let key = atom.key();
            if !self.forbidden.contains(&key) {
                self.forbidden.insert(key);
                return atom;
            }
            n += 1;
        }
    }
}

pub struct PassContext {
    pub rng: SeededRng,
    pub fresh: FreshSymbolSource,
}

impl PassContext {
    pub fn new(rng: SeededRng, e: &Expr) -> PassContext {
        PassContext { rng, fresh: FreshSymbolSource::for_expr(e) }
    }

    /// The context used for equation `index` of a run with `seed`.
    pub fn for_equation(seed: u64, index: u64, e: &Expr) -> PassContext {
        PassContext::new(stream(seed, index, Stream::Apply), e)
    }
}

/// One rewrite rule of the catalog.
pub trait Pass: Send + Sync {
    /// Stable identifier used on the command line.
    fn id(&self) -> &'static str;

    fn semantics(&self) -> SemanticsClass;

    fn describe(&self) -> &'static str;

    fn applicable(&self, _e: &Expr) -> bool {
        true
    }

    /// Rewrites one term: one side of a relation, or one row.
    fn rewrite_term(&self, term: &Expr, cx: &mut PassContext) -> Expr;

    fn apply(&self, e: &Expr, cx: &mut PassContext) -> RewriteResult {
        RewriteResult { expr: e.map_terms(&mut |t| self.rewrite_term(t, cx)), renaming: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renaming_composition() {
        let a = Renaming::single("x", "\\psi");
        let b = Renaming::single("y", "\\chi");
        let ab = a.then(&b);
        assert_eq!(ab.apply("x"), "\\psi");
        assert_eq!(ab.apply("y"), "\\chi");
        assert_eq!(ab.inverse().apply("\\chi"), "y");
        let chain = Renaming::single("x", "u").then(&Renaming::single("u", "\\psi"));
        assert_eq!(chain, Renaming::single("x", "\\psi"));
    }

    #[test]
    fn fresh_names_avoid_everything() {
        let e = crate::ast::parse_math("\\kappa_{1} + \\tau + \\mycmd{\\varphi}").unwrap();
        let mut f = FreshSymbolSource::for_expr(&e);
        let a = f.fresh(&["kappa"]);
        let b = f.fresh(&["kappa"]);
        assert_eq!(a.name, "xi");
        assert_eq!(b.name, "psi");
    }

    #[test]
    fn fresh_falls_back_to_subscripts() {
        let mut f = FreshSymbolSource::default();
        for _ in 0..FRESH_PREFERENCE.len() {
            f.fresh(&[]);
        }
        assert_eq!(f.fresh(&["tau"]).key(), "\\tau_{1}");
        assert_eq!(f.fresh(&["tau"]).key(), "\\tau_{2}");
    }
}
