use crate::error::Result;
use crate::types::CategoryPath;

use super::{parse_category_fixture, LikeCategoryMap};

/// Maps a like id to its page category.
pub trait CategoryResolver {
    /// `Ok(None)` means the id is unknown to the resolver.
    fn lookup(&self, like_id: &str) -> Result<Option<CategoryPath>>;

    /// Looks up many ids; results are aligned with `ids`.
    fn lookup_many(&self, ids: &[String]) -> Result<Vec<Option<CategoryPath>>> {
        ids.iter().map(|id| self.lookup(id)).collect()
    }
}

/// Resolver backed by a `likeid,category,subcategory` table. Never fails.
#[derive(Debug, Clone, Default)]
pub struct FixtureResolver {
    map: LikeCategoryMap,
}

impl FixtureResolver {
    pub fn new(map: LikeCategoryMap) -> Self {
        Self { map }
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(Self::new(parse_category_fixture(text)?))
    }

    pub fn map(&self) -> &LikeCategoryMap {
        &self.map
    }
}

impl CategoryResolver for FixtureResolver {
    fn lookup(&self, like_id: &str) -> Result<Option<CategoryPath>> {
        Ok(self.map.get(like_id).filter(|_| self.map.is_resolved(like_id)).cloned())
    }
}
