//! Chat-completions client over HTTPS.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, BackendError, BackendReply, ChatRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Requests in flight across all trials.
    pub max_concurrency: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            temperature: 0.0,
            timeout_secs: 120,
            max_concurrency: 4,
        }
    }
}

#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Fatal(e.to_string()))?;
        Ok(Self {
            gate: Gate {
                free: Mutex::new(config.max_concurrency.max(1)),
                cv: Condvar::new(),
            },
            config,
            client,
        })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    pub(crate) fn body(&self, req: &ChatRequest<'_>) -> serde_json::Value {
        json!({
            "model": req.profile.name,
            "messages": [{"role": "user", "content": req.prompt.rendered_text}],
            "temperature": self.config.temperature,
            "max_tokens": req.profile.reserved_response_tokens,
        })
    }
}

impl Backend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn respond(&self, req: &ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        let key = std::env::var(&self.config.api_key_env)
            .map_err(|_| BackendError::Fatal(format!("{} is not set", self.config.api_key_env)))?;
        let _permit = self.gate.acquire();
        let started = Instant::now();
        let resp = self
            .client
            .post(self.url())
            .bearer_auth(key)
            .json(&self.body(req))
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendError::Fatal(format!("HTTP {status}: {text}")));
        }
        let value: serde_json::Value = resp.json().map_err(|e| BackendError::Transport(e.to_string()))?;
        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| BackendError::Fatal("response has no choices[0].message.content".into()))?
            .to_string();
        Ok(BackendReply {
            text,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::TurnPurpose;
    use crate::gateway::ModelProfile;
    use crate::prompt::{AgentRole, CharApproxCounter, PromptBundle};
    use std::sync::Arc;

    #[test]
    fn request_body_shape() {
        let b = RemoteBackend::new(RemoteConfig::default()).unwrap();
        let p = PromptBundle::raw(AgentRole::Central, "hello", &CharApproxCounter);
        let profile = ModelProfile::gpt35();
        let req = ChatRequest {
            trial_id: "t",
            call_index: 0,
            role: AgentRole::Central,
            purpose: TurnPurpose::PlanProposal,
            prompt: &p,
            digest: "",
            profile: &profile,
            view: None,
        };
        let body = b.body(&req);
        assert_eq!(body["model"], "gpt-3.5-turbo-0613");
        assert_eq!(body["messages"][0]["content"], "hello");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(b.url(), "https://api.openai.com/v1/chat/completions");
    }

    #[test]
    fn gate_caps_concurrency() {
        let gate = Arc::new(Gate {
            free: Mutex::new(2),
            cv: Condvar::new(),
        });
        let peak = Arc::new(Mutex::new((0usize, 0usize)));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let gate = gate.clone();
                let peak = peak.clone();
                std::thread::spawn(move || {
                    let _p = gate.acquire();
                    {
                        let mut g = peak.lock().unwrap();
                        g.0 += 1;
                        g.1 = g.1.max(g.0);
                    }
                    std::thread::sleep(Duration::from_millis(5));
                    peak.lock().unwrap().0 -= 1;
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.lock().unwrap().1 <= 2);
    }
}
