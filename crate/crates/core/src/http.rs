//! Blocking JSON-over-HTTP calls with per-call timeout and retry.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone)]
pub(crate) struct JsonClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    max_retries: u32,
}

impl JsonClient {
    pub(crate) fn new(
        endpoint: &str,
        api_key_env: Option<&str>,
        timeout_ms: u64,
        max_retries: u32,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .http_status_as_error(true)
            .build()
            .into();
        let api_key = api_key_env
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        Self {
            agent,
            endpoint: endpoint.to_owned(),
            api_key,
            max_retries,
        }
    }

    pub(crate) fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// POSTs `body`, retrying transport and status failures up to `max_retries` times.
    pub(crate) fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, String> {
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
            }
            let mut request = self.agent.post(&self.endpoint);
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", &format!("Bearer {key}"));
            }
            match request.send_json(body) {
                Ok(mut resp) => match resp.body_mut().read_json::<R>() {
                    Ok(parsed) => return Ok(parsed),
                    // A malformed body will not improve on retry.
                    Err(e) => return Err(format!("{}: bad response body: {e}", self.endpoint)),
                },
                Err(e) => {
                    log::debug!("{} attempt {} failed: {e}", self.endpoint, attempt + 1);
                    last = e.to_string();
                }
            }
        }
        Err(format!(
            "{}: failed after {} attempt(s): {last}",
            self.endpoint,
            self.max_retries + 1
        ))
    }
}
