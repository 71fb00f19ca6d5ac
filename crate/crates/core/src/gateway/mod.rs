//! Chat-completion gateway: context-limit gate, retries, usage accounting
//! and cassette recording over pluggable backends.

mod cassette;
mod oracle;
mod remote;
mod scripted;

use std::fmt::Debug;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cassette::{read_cassette, cassette_path, CassetteWriter, ReplayBackend};
pub use oracle::{find_colliding_assignment, OracleBackend, PlanCache};
pub use remote::{RemoteBackend, RemoteConfig};
pub use scripted::{ScriptFixture, ScriptRule, ScriptedBackend};

use crate::dialogue::TurnPurpose;
use crate::env::{ActionAssignment, EnvState};
use crate::prompt::{AgentRole, PromptBundle, TokenCounter};
use crate::util::sha256_hex;

/// Context window of a hosted model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub context_limit: usize,
    pub reserved_response_tokens: usize,
}

impl ModelProfile {
    pub fn new(name: impl Into<String>, context_limit: usize, reserved_response_tokens: usize) -> Result<Self, String> {
        if !(context_limit > reserved_response_tokens && reserved_response_tokens > 0) {
            return Err(format!(
                "context limit {context_limit} must exceed reserved response tokens {reserved_response_tokens} > 0"
            ));
        }
        Ok(Self {
            name: name.into(),
            context_limit,
            reserved_response_tokens,
        })
    }

    pub fn gpt4() -> Self {
        Self::new("gpt-4-0613", 8192, 512).expect("valid profile")
    }

    pub fn gpt35() -> Self {
        Self::new("gpt-3.5-turbo-0613", 4097, 512).expect("valid profile")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "gpt-4-0613" | "gpt-4" | "gpt4" => Some(Self::gpt4()),
            "gpt-3.5-turbo-0613" | "gpt-3.5-turbo" | "gpt35" => Some(Self::gpt35()),
            _ => None,
        }
    }
}

/// State the oracle and scripted backends may consult. Remote models only
/// ever see the prompt text.
#[derive(Debug, Clone, Copy)]
pub struct PlanningView<'a> {
    pub state: &'a EnvState,
    pub proposal: Option<&'a ActionAssignment>,
}

#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub trial_id: &'a str,
    pub call_index: u32,
    pub role: AgentRole,
    pub purpose: TurnPurpose,
    pub prompt: &'a PromptBundle,
    pub digest: &'a str,
    pub profile: &'a ModelProfile,
    pub view: Option<PlanningView<'a>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend error: {0}")]
    Fatal(String),
    #[error("no recorded exchange for {trial_id} call {call_index}")]
    ReplayMissing { trial_id: String, call_index: u32 },
    #[error("replay diverged at {trial_id} call {call_index}: {detail}")]
    ReplayDivergence {
        trial_id: String,
        call_index: u32,
        detail: String,
    },
}

/// A chat model or a stand-in for one. Implementations are shared across
/// trial threads.
pub trait Backend: Debug + Send + Sync {
    fn id(&self) -> &str;
    fn respond(&self, request: &ChatRequest<'_>) -> Result<BackendReply, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    /// Three retries after 1s, 2s and 4s.
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 1000,
        }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 0,
        }
    }

    pub fn delay(&self, retry: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1 << retry.min(20)))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeUsage {
    pub prompt_tokens: usize,
    pub response_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub trial_id: String,
    pub call_index: u32,
    pub role: AgentRole,
    pub purpose: TurnPurpose,
    pub prompt_digest: String,
    pub prompt: String,
    pub response: String,
    pub usage: ExchangeUsage,
    pub latency_ms: u64,
    pub backend: String,
}

/// Per-trial totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub api_calls: u32,
    pub prompt_tokens: u64,
    pub response_tokens: u64,
    pub latency_ms: u64,
}

impl Usage {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.response_tokens
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("{needed} tokens needed but {model} allows {limit}")]
    ContextOverflow {
        model: String,
        needed: usize,
        limit: usize,
    },
    #[error("transport failed after {attempts} attempts: {last}")]
    TransportFailed { attempts: u32, last: String },
    #[error(transparent)]
    Backend(BackendError),
    #[error("writing cassette: {0}")]
    Recording(#[from] std::io::Error),
}

/// One trial's sequential call stream.
#[derive(Debug)]
pub struct Gateway {
    backend: Arc<dyn Backend>,
    profile: ModelProfile,
    counter: Arc<dyn TokenCounter>,
    retry: RetryPolicy,
    trial_id: String,
    next_call: u32,
    usage: Usage,
    exchanges: Vec<ChatExchange>,
    recorder: Option<CassetteWriter>,
}

impl Gateway {
    pub fn new(
        backend: Arc<dyn Backend>,
        profile: ModelProfile,
        counter: Arc<dyn TokenCounter>,
        trial_id: impl Into<String>,
    ) -> Self {
        Self {
            backend,
            profile,
            counter,
            retry: RetryPolicy::default(),
            trial_id: trial_id.into(),
            next_call: 0,
            usage: Usage::default(),
            exchanges: Vec::new(),
            recorder: None,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_recorder(mut self, recorder: CassetteWriter) -> Self {
        self.recorder = Some(recorder);
        self
    }

    pub fn trial_id(&self) -> &str {
        &self.trial_id
    }

    pub fn profile(&self) -> &ModelProfile {
        &self.profile
    }

    pub fn usage(&self) -> Usage {
        self.usage
    }

    pub fn exchanges(&self) -> &[ChatExchange] {
        &self.exchanges
    }

    /// Checks the context limit, then sends the prompt. Nothing is sent when
    /// the check fails.
    pub fn complete(
        &mut self,
        prompt: &PromptBundle,
        purpose: TurnPurpose,
        view: Option<PlanningView<'_>>,
    ) -> Result<ChatExchange, GatewayError> {
        let needed = prompt.token_count + self.profile.reserved_response_tokens;
        if needed > self.profile.context_limit {
            return Err(GatewayError::ContextOverflow {
                model: self.profile.name.clone(),
                needed,
                limit: self.profile.context_limit,
            });
        }

        let call_index = self.next_call;
        self.next_call += 1;
        self.usage.api_calls += 1;
        let digest = sha256_hex(&prompt.rendered_text);
        let request = ChatRequest {
            trial_id: &self.trial_id,
            call_index,
            role: prompt.role,
            purpose,
            prompt,
            digest: &digest,
            profile: &self.profile,
            view,
        };

        let mut attempt = 0;
        let reply = loop {
            match self.backend.respond(&request) {
                Ok(r) => break r,
                Err(BackendError::Transport(msg)) => {
                    if attempt >= self.retry.max_retries {
                        return Err(GatewayError::TransportFailed {
                            attempts: attempt + 1,
                            last: msg,
                        });
                    }
                    std::thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(GatewayError::Backend(e)),
            }
        };

        let usage = ExchangeUsage {
            prompt_tokens: prompt.token_count,
            response_tokens: self.counter.count(&reply.text),
        };
        self.usage.prompt_tokens += usage.prompt_tokens as u64;
        self.usage.response_tokens += usage.response_tokens as u64;
        self.usage.latency_ms += reply.latency_ms;

        let exchange = ChatExchange {
            trial_id: self.trial_id.clone(),
            call_index,
            role: prompt.role,
            purpose,
            prompt_digest: digest,
            prompt: prompt.rendered_text.clone(),
            response: reply.text,
            usage,
            latency_ms: reply.latency_ms,
            backend: self.backend.id().to_string(),
        };
        if let Some(rec) = self.recorder.as_mut() {
            rec.append(&exchange)?;
        }
        self.exchanges.push(exchange.clone());

        let total = usage.prompt_tokens + usage.response_tokens;
        if total > self.profile.context_limit {
            return Err(GatewayError::ContextOverflow {
                model: self.profile.name.clone(),
                needed: total,
                limit: self.profile.context_limit,
            });
        }
        Ok(exchange)
    }
}
