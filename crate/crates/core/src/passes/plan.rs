use rand::Rng;
use serde::Serialize;

use super::{standard, PassContext, Registry, Renaming};
use crate::ast::Expr;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PassPlan {
    pub ids: Vec<&'static str>,
}

impl PassPlan {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Picks `intensity` passes for equation `index` with the full catalog.
pub fn plan_passes(seed: u64, index: u64, intensity: u8, e: &Expr) -> PassPlan {
    plan_with(standard(), seed, index, intensity, e)
}

/// Each step picks uniformly among passes applicable to the equation as it
/// stands after the previous steps, excluding the pass just used unless
/// nothing else applies. Stops early only when no pass applies at all.
pub fn plan_with(registry: &Registry, seed: u64, index: u64, intensity: u8, e: &Expr) -> PassPlan {
    let mut rng = stream(seed, index, Stream::Plan);
    let mut cx = PassContext::for_equation(seed, index, e);
    let mut current = e.clone();
    let mut ids: Vec<&'static str> = Vec::new();
    for _ in 0..intensity {
        let applicable: Vec<&'static str> =
            registry.iter().filter(|p| p.applicable(&current)).map(|p| p.id()).collect();
        if applicable.is_empty() {
            break;
        }
        let fresh: Vec<&'static str> = applicable.iter().copied().filter(|id| ids.last() != Some(id)).collect();
        let pool = if fresh.is_empty() { applicable } else { fresh };
        let id = pool[rng.gen_range(0..pool.len())];
        let pass = registry.get(id).expect("id from registry");
        current = pass.apply(&current, &mut cx).expr;
        ids.push(id);
    }
    PassPlan { ids }
}

/// Applies `plan` left to right, returning every intermediate expression
/// (the input first) and the composed renaming.
pub fn apply_plan_steps(
    registry: &Registry,
    e: &Expr,
    plan: &PassPlan,
    seed: u64,
    index: u64,
) -> Result<(Vec<Expr>, Renaming), super::UnknownPass> {
    let mut cx = PassContext::for_equation(seed, index, e);
    let mut steps = vec![e.clone()];
    let mut renaming = Renaming::default();
    for id in &plan.ids {
        let pass = registry.get(id).ok_or_else(|| super::UnknownPass(id.to_string()))?;
        let current = steps.last().expect("nonempty");
        let result = pass.apply(current, &mut cx);
        if let Some(sigma) = &result.renaming {
            renaming = renaming.then(sigma);
        }
        steps.push(result.expr);
    }
    Ok((steps, renaming))
}

pub fn apply_plan(e: &Expr, plan: &PassPlan, seed: u64, index: u64) -> (Expr, Renaming) {
    let (mut steps, renaming) = apply_plan_steps(standard(), e, plan, seed, index).expect("catalog ids");
    (steps.pop().expect("nonempty"), renaming)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{emit, parse_math};

    #[test]
    fn zero_intensity_is_empty() {
        assert!(plan_passes(42, 0, 0, &parse_math("x").unwrap()).is_empty());
    }

    #[test]
    fn plans_are_deterministic_and_never_repeat() {
        let e = parse_math("m c^2").unwrap();
        for seed in 0..50 {
            let plan = plan_passes(seed, 0, 5, &e);
            assert_eq!(plan, plan_passes(seed, 0, 5, &e));
            assert_eq!(plan.len(), 5);
            assert!(plan.ids.windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn greek_only_input_never_renames() {
        let e = parse_math("\\alpha + \\beta").unwrap();
        for seed in 0..50 {
            assert!(!plan_passes(seed, 0, 5, &e).ids.contains(&"greek-rename"));
        }
    }

    #[test]
    fn composition() {
        let e = parse_math("x").unwrap();
        let (out, sigma) = apply_plan(&e, &PassPlan { ids: vec!["log-exp", "planck"] }, 1, 0);
        assert_eq!(emit(&out), "\\frac{2 \\pi \\hbar}{h} \\ln\\left( e^{x} \\right)");
        assert!(sigma.is_empty());
    }

    #[test]
    fn single_pass_restriction_repeats() {
        let only = Registry::only(&["unit-sum"]).unwrap();
        let plan = plan_with(&only, 3, 0, 3, &parse_math("x").unwrap());
        assert_eq!(plan.ids, ["unit-sum"; 3]);
    }
}
