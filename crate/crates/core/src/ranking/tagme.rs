//! HTTP client for a tagme-style entity annotation service.
//!
//! Request: `GET <endpoint>?text=<text>&token=<token>`.
//! Response: `{"annotations": [{"spot": ..., "title": ..., "rho": ...}]}`.
//! Only the titles are used; each becomes a lowercased, underscore-joined
//! topic term.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;

use super::topics::{entity_term, EntityExtractor};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
struct Annotation {
    #[serde(default)]
    title: Option<String>,
}

#[derive(Debug, Deserialize)]
struct AnnotationResponse {
    #[serde(default)]
    annotations: Vec<Annotation>,
}

/// Topic terms from an annotation response body.
pub fn parse_annotations(body: &str) -> Result<Vec<String>> {
    let response: AnnotationResponse = serde_json::from_str(body)
        .map_err(|e| Error::Extractor(format!("bad annotation response: {e}")))?;
    Ok(response
        .annotations
        .into_iter()
        .filter_map(|a| a.title)
        .map(|t| entity_term(&t))
        .filter(|t| !t.is_empty())
        .collect())
}

/// Counting gate that caps the number of requests in flight.
struct Gate {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(slots: usize) -> Self {
        Self {
            slots: Mutex::new(slots.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.slots.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

pub struct TagmeClient {
    endpoint: String,
    token: String,
    agent: ureq::Agent,
    gate: Gate,
}

impl TagmeClient {
    pub fn new(endpoint: impl Into<String>, token: impl Into<String>, timeout: Duration, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            token: token.into(),
            agent,
            gate: Gate::new(max_in_flight),
        }
    }
}

impl EntityExtractor for TagmeClient {
    fn extract(&self, text: &str) -> Result<Vec<String>> {
        let _slot = self.gate.acquire();
        let body = self
            .agent
            .get(&self.endpoint)
            .query("text", text)
            .query("token", &self.token)
            .call()
            .and_then(|mut response| response.body_mut().read_to_string())
            .map_err(|e| Error::Extractor(e.to_string()))?;
        parse_annotations(&body)
    }
}
