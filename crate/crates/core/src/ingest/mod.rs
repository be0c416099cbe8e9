//! Source tables, like-id resolution and the score/like join.
//!
//! The CSV dialect is deliberately plain: comma separated, `\n` or `\r\n`
//! line endings, no quoting. A field containing a comma therefore shows up as
//! a row with the wrong column count and is rejected as malformed.

#[cfg(feature = "remote")]
mod remote;
mod resolver;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[cfg(feature = "remote")]
pub use remote::{RemoteResolver, RemoteResolverConfig};
pub use resolver::{CategoryResolver, FixtureResolver};

use crate::error::{Error, Result};
use crate::types::{Big5Scores, CategoryPath, Dataset, UserRecord};

pub const BIG5_HEADER: &str = "userid,ope,con,ext,agr,neu";
pub const USER_LIKES_HEADER: &str = "userid,likeid";
pub const CATEGORY_FIXTURE_HEADER: &str = "likeid,category,subcategory";

pub const BIG5_FILE: &str = "big5.csv";
pub const USER_LIKES_FILE: &str = "user_likes.csv";
pub const CATEGORY_FIXTURE_FILE: &str = "like_categories.csv";

/// What to do with like ids the resolver cannot place.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolverPolicy {
    #[default]
    Drop,
    MapToUnknown(CategoryPath),
}

/// Resolved like ids. Ids filled in by [`ResolverPolicy::MapToUnknown`] are
/// remembered so the join can still report them as unresolved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LikeCategoryMap {
    entries: BTreeMap<String, CategoryPath>,
    by_policy: BTreeSet<String>,
}

impl LikeCategoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, like_id: impl Into<String>, path: CategoryPath) {
        let id = like_id.into();
        self.by_policy.remove(&id);
        self.entries.insert(id, path);
    }

    pub fn get(&self, like_id: &str) -> Option<&CategoryPath> {
        self.entries.get(like_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the id has a category from the resolver itself.
    pub fn is_resolved(&self, like_id: &str) -> bool {
        self.entries.contains_key(like_id) && !self.by_policy.contains(like_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CategoryPath)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Id-level outcome of [`resolve_categories`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ResolveSummary {
    pub ids_resolved: usize,
    pub ids_unresolved: usize,
}

/// Row-level accounting for one ingest run.
///
/// `likes_resolved + likes_unresolved == likes_parsed`, and every parsed like
/// ends up in exactly one of: a user's counts, `likes_orphaned`,
/// `likes_dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub users_parsed: usize,
    pub likes_parsed: usize,
    pub likes_resolved: usize,
    pub likes_unresolved: usize,
    /// Likes whose user has no score row.
    pub likes_orphaned: usize,
    /// Unresolved likes of scored users discarded by the `Drop` policy.
    pub likes_dropped: usize,
    /// Scored users with at least one like row.
    pub users_joined: usize,
}

struct Rows<'a> {
    lines: std::iter::Enumerate<std::str::Split<'a, char>>,
}

/// Splits a table into `(line_number, fields)` after checking the header.
fn rows<'a>(text: &'a str, header: &str) -> Result<Rows<'a>> {
    let mut lines = text.split('\n').enumerate();
    let first = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i + 1, l.trim_end_matches('\r')),
            None => return Err(Error::MalformedRow { line: 1, reason: format!("missing header {header:?}") }),
        }
    };
    if first.1.trim() != header {
        return Err(Error::MalformedRow {
            line: first.0,
            reason: format!("expected header {header:?}, found {:?}", first.1),
        });
    }
    Ok(Rows { lines })
}

impl<'a> Iterator for Rows<'a> {
    type Item = (usize, Vec<&'a str>);

    fn next(&mut self) -> Option<Self::Item> {
        for (i, line) in self.lines.by_ref() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            return Some((i + 1, line.split(',').map(str::trim).collect()));
        }
        None
    }
}

fn expect_fields(line: usize, fields: &[&str], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(Error::MalformedRow { line, reason: format!("expected {n} fields, found {}", fields.len()) });
    }
    if fields[0].is_empty() {
        return Err(Error::MalformedRow { line, reason: "empty id".into() });
    }
    Ok(())
}

/// Parses `userid,ope,con,ext,agr,neu`; row order is preserved.
pub fn parse_big5_table(text: &str) -> Result<Vec<(String, Big5Scores)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, fields) in rows(text, BIG5_HEADER)? {
        expect_fields(line, &fields, 6)?;
        let mut raw = [0.0; 5];
        for (slot, field) in raw.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse::<f64>()
                .map_err(|e| Error::MalformedRow { line, reason: format!("score {field:?}: {e}") })?;
        }
        let scores = Big5Scores::validate(raw).map_err(|e| e.at_line(line))?;
        let id = fields[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateUser(id).at_line(line));
        }
        out.push((id, scores));
    }
    Ok(out)
}

/// Parses `userid,likeid`, one row per like; repeats are kept.
pub fn parse_user_likes_table(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (line, fields) in rows(text, USER_LIKES_HEADER)? {
        expect_fields(line, &fields, 2)?;
        if fields[1].is_empty() {
            return Err(Error::MalformedRow { line, reason: "empty like id".into() });
        }
        out.push((fields[0].to_string(), fields[1].to_string()));
    }
    Ok(out)
}

/// Parses a single-column `likeid` list (the input of a prediction request).
pub fn parse_like_list(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (line, fields) in rows(text, "likeid")? {
        expect_fields(line, &fields, 1)?;
        out.push(fields[0].to_string());
    }
    Ok(out)
}

/// Parses `likeid,category,subcategory`; an empty third field means no
/// subcategory.
pub fn parse_category_fixture(text: &str) -> Result<LikeCategoryMap> {
    let mut map = LikeCategoryMap::new();
    for (line, fields) in rows(text, CATEGORY_FIXTURE_HEADER)? {
        expect_fields(line, &fields, 3)?;
        let sub = (!fields[2].is_empty()).then(|| fields[2].to_string());
        let path = CategoryPath::new(fields[1], sub).map_err(|e| e.at_line(line))?;
        if map.get(fields[0]).is_some() {
            return Err(Error::MalformedRow { line, reason: format!("like id {} listed twice", fields[0]) });
        }
        map.insert(fields[0], path);
    }
    Ok(map)
}

/// Resolves every id through `resolver`, applying `policy` to misses.
pub fn resolve_categories<R: CategoryResolver + ?Sized>(
    like_ids: &BTreeSet<String>,
    resolver: &R,
    policy: &ResolverPolicy,
) -> Result<(LikeCategoryMap, ResolveSummary)> {
    let ids: Vec<String> = like_ids.iter().cloned().collect();
    let found = resolver.lookup_many(&ids)?;
    let mut map = LikeCategoryMap::new();
    let mut summary = ResolveSummary::default();
    for (id, path) in ids.into_iter().zip(found) {
        match path {
            Some(p) => {
                summary.ids_resolved += 1;
                map.insert(id, p);
            }
            None => {
                summary.ids_unresolved += 1;
                if let ResolverPolicy::MapToUnknown(label) = policy {
                    map.by_policy.insert(id.clone());
                    map.entries.insert(id, label.clone());
                }
            }
        }
    }
    Ok((map, summary))
}

/// Joins scores, like rows and categories into a [`Dataset`].
///
/// Every scored user is kept, including those without a resolved like.
/// Likes of unscored users are counted as orphans and excluded.
pub fn assemble_dataset(
    scores: &[(String, Big5Scores)],
    likes: &[(String, String)],
    catmap: &LikeCategoryMap,
    policy: &ResolverPolicy,
) -> Result<(Dataset, IngestReport)> {
    let mut users: BTreeMap<String, UserRecord> = BTreeMap::new();
    for (id, s) in scores {
        let rec = UserRecord { user_id: id.clone(), scores: *s, like_counts: BTreeMap::new() };
        if users.insert(id.clone(), rec).is_some() {
            return Err(Error::DuplicateUser(id.clone()));
        }
    }

    let mut report = IngestReport { users_parsed: scores.len(), likes_parsed: likes.len(), ..Default::default() };
    let mut joined = BTreeSet::new();
    for (user, like) in likes {
        let resolved = catmap.is_resolved(like);
        if resolved {
            report.likes_resolved += 1;
        } else {
            report.likes_unresolved += 1;
        }
        let Some(rec) = users.get_mut(user) else {
            report.likes_orphaned += 1;
            continue;
        };
        joined.insert(user.as_str());
        let path = match (catmap.get(like), policy) {
            (Some(p), _) => p,
            (None, ResolverPolicy::MapToUnknown(label)) => label,
            (None, ResolverPolicy::Drop) => {
                report.likes_dropped += 1;
                continue;
            }
        };
        *rec.like_counts.entry(path.clone()).or_insert(0) += 1;
    }
    report.users_joined = joined.len();
    Ok((Dataset::from_sorted(users), report))
}

/// Parses both tables, resolves the distinct like ids and joins.
pub fn ingest_tables<R: CategoryResolver + ?Sized>(
    big5_text: &str,
    likes_text: &str,
    resolver: &R,
    policy: &ResolverPolicy,
) -> Result<(Dataset, IngestReport)> {
    let scores = parse_big5_table(big5_text)?;
    let likes = parse_user_likes_table(likes_text)?;
    let ids: BTreeSet<String> = likes.iter().map(|(_, l)| l.clone()).collect();
    let (catmap, _) = resolve_categories(&ids, resolver, policy)?;
    assemble_dataset(&scores, &likes, &catmap, policy)
}

/// Loads `big5.csv`, `user_likes.csv` and `like_categories.csv` from `dir`.
pub fn load_data_dir(dir: &Path, policy: &ResolverPolicy) -> Result<(Dataset, IngestReport)> {
    let big5 = std::fs::read_to_string(dir.join(BIG5_FILE))?;
    let likes = std::fs::read_to_string(dir.join(USER_LIKES_FILE))?;
    let fixture = FixtureResolver::from_csv(&std::fs::read_to_string(dir.join(CATEGORY_FIXTURE_FILE))?)?;
    ingest_tables(&big5, &likes, &fixture, policy)
}

pub fn write_big5_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Big5Scores)>) -> String {
    let mut out = format!("{BIG5_HEADER}\n");
    for (id, s) in rows {
        let _ = writeln!(out, "{id},{},{},{},{},{}", s.ope, s.con, s.ext, s.agr, s.neu);
    }
    out
}

pub fn write_user_likes_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = format!("{USER_LIKES_HEADER}\n");
    for (user, like) in rows {
        let _ = writeln!(out, "{user},{like}");
    }
    out
}

pub fn write_category_fixture(map: &LikeCategoryMap) -> String {
    let mut out = format!("{CATEGORY_FIXTURE_HEADER}\n");
    for (id, p) in map.iter() {
        let _ = writeln!(out, "{id},{},{}", p.category, p.subcategory.as_deref().unwrap_or(""));
    }
    out
}
