use std::sync::OnceLock;

use thiserror::Error;

use super::catalog::{GreekRename, LogExp, Planck, TrigOne, UnitIntegral, UnitProd, UnitSum, ZeroAdd};
use super::Pass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown pass id `{0}` (known: {known})", known = standard().ids().join(", "))]
pub struct UnknownPass(pub String);

/// An ordered set of passes addressed by id.
pub struct Registry {
    passes: Vec<Box<dyn Pass>>,
}

impl Registry {
    /// The full catalog, in its fixed order.
    pub fn catalog() -> Registry {
        Registry {
            passes: vec![
                Box::new(UnitSum),
                Box::new(UnitProd),
                Box::new(Planck),
                Box::new(LogExp),
                Box::new(TrigOne),
                Box::new(UnitIntegral),
                Box::new(ZeroAdd),
                Box::new(GreekRename),
            ],
        }
    }

    /// The catalog restricted to `ids`, keeping catalog order.
    pub fn only<S: AsRef<str>>(ids: &[S]) -> Result<Registry, UnknownPass> {
        let all = Registry::catalog();
        for id in ids {
            if all.get(id.as_ref()).is_none() {
                return Err(UnknownPass(id.as_ref().to_string()));
            }
        }
        let passes = all.passes.into_iter().filter(|p| ids.iter().any(|id| id.as_ref() == p.id())).collect();
        Ok(Registry { passes })
    }

    pub fn get(&self, id: &str) -> Option<&dyn Pass> {
        self.passes.iter().find(|p| p.id() == id).map(|p| p.as_ref())
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.passes.iter().map(|p| p.id()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Pass> {
        self.passes.iter().map(|p| p.as_ref())
    }

    pub fn len(&self) -> usize {
        self.passes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passes.is_empty()
    }
}

pub fn standard() -> &'static Registry {
    static CATALOG: OnceLock<Registry> = OnceLock::new();
    CATALOG.get_or_init(Registry::catalog)
}
