//! HTTP resolver speaking the page-lookup wire format:
//! `GET {base}/{like_id}?fields=category` returning
//! `{"id": "...", "category": "...", "subcategory": "..."}`; 404 is a miss.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::Deserialize;

use super::CategoryResolver;
use crate::error::{Error, Result};
use crate::types::CategoryPath;

#[derive(Debug, Clone)]
pub struct RemoteResolverConfig {
    pub base_url: String,
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub initial_backoff: Duration,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl RemoteResolverConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            max_in_flight: 10,
            timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Deserialize)]
struct PageResponse {
    category: String,
    #[serde(default)]
    subcategory: Option<String>,
}

pub struct RemoteResolver {
    config: RemoteResolverConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Done(Option<CategoryPath>),
    Retry(String),
}

impl RemoteResolver {
    pub fn new(config: RemoteResolverConfig) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(config.timeout)).build().into();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteResolverConfig {
        &self.config
    }

    fn url(&self, like_id: &str) -> String {
        let id = utf8_percent_encode(like_id, NON_ALPHANUMERIC);
        format!("{}/{}?fields=category", self.config.base_url.trim_end_matches('/'), id)
    }

    fn attempt(&self, url: &str) -> Attempt {
        let mut resp = match self.agent.get(url).call() {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(404)) => return Attempt::Done(None),
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let body = match resp.body_mut().read_to_string() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        match serde_json::from_str::<PageResponse>(&body) {
            Ok(page) => {
                let sub = page.subcategory.filter(|s| !s.trim().is_empty());
                // a blank category counts as a miss rather than a hard failure
                Attempt::Done(CategoryPath::new(page.category, sub).ok())
            }
            Err(e) => Attempt::Retry(format!("bad response body: {e}")),
        }
    }
}

impl CategoryResolver for RemoteResolver {
    fn lookup(&self, like_id: &str) -> Result<Option<CategoryPath>> {
        let url = self.url(like_id);
        let mut backoff = self.config.initial_backoff;
        let mut last = String::new();
        for attempt in 0..self.config.max_attempts.max(1) {
            if attempt > 0 {
                thread::sleep(backoff);
                backoff *= 2;
            }
            match self.attempt(&url) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Retry(reason) => last = reason,
            }
        }
        Err(Error::Transport { like_id: like_id.to_string(), reason: last })
    }

    /// Runs up to `max_in_flight` lookups concurrently. The output order
    /// follows `ids`; on failure the error of the lowest failing index wins.
    fn lookup_many(&self, ids: &[String]) -> Result<Vec<Option<CategoryPath>>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<Option<CategoryPath>>>>> = ids.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.config.max_in_flight.clamp(1, ids.len().max(1));
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= ids.len() {
                        break;
                    }
                    let r = self.lookup(&ids[i]);
                    *slots[i].lock().expect("slot poisoned") = Some(r);
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().expect("slot poisoned").expect("every slot filled")).collect()
    }
}
