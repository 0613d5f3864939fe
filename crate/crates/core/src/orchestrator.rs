//! The master loop: perception once, then reasoning, execution and decision
//! per round until the master declares its answer final or the round cap is
//! reached.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde_json::Value;
use tracing::{debug, info, warn};

use crate::extract::{extract_json, ExtractionError};
use crate::par::{map_ordered, Schedule};
use crate::pool::{CallOptions, ModelPool, PoolError};
use crate::prompting::{PendingRound, PromptError, PromptSet, RenderOptions, StageContext};
use crate::schema::{
    validate_decision, validate_reasoning, SchemaError, DECISION_FORMAT_INSTRUCTION,
    REASONING_FORMAT_INSTRUCTION,
};
use crate::types::{
    agent_error_sentinel, check_inputs, AgentSpec, ConfigError, DecisionOutput, InputError,
    InputItem, InputSummary, LoopConfig, ModalityKind, Payload, ReasoningOutput, RoundRecord,
    SessionTrace, Stage, QA,
};

/// Instruction sent with each non-text input during perception.
pub fn perception_instruction(modality: ModalityKind) -> String {
    format!("Provide a concise factual summary of this {modality} content.")
}

pub fn repair_instruction(reason: &str) -> String {
    format!(
        "Your previous reply was not valid JSON for the required schema: {reason}. Reply with ONLY the corrected JSON object."
    )
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StageErrorCause {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("{0}")]
    Prompt(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("pool has no master agent")]
    NoMaster,
    #[error("no agent registered for {0} inputs")]
    NoModalityAgent(ModalityKind),
    #[error("plan has no questions")]
    EmptyPlan,
    #[error("{0}")]
    Extraction(ExtractionError),
    #[error("{0}")]
    Schema(SchemaError),
}

impl From<PromptError> for StageErrorCause {
    fn from(e: PromptError) -> Self {
        StageErrorCause::Prompt(e.to_string())
    }
}

/// A failure attributed to one stage of one round (round 0 = before the
/// loop).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage failed in round {round}: {cause}")]
pub struct StageError {
    pub stage: Stage,
    pub round: u32,
    pub cause: StageErrorCause,
}

impl StageError {
    fn new(stage: Stage, round: u32, cause: impl Into<StageErrorCause>) -> Self {
        Self {
            stage,
            round,
            cause: cause.into(),
        }
    }

    /// Malformed structured output, only possible in the two master stages.
    fn structured(stage: Stage, round: u32, cause: StructuredFailure) -> Self {
        debug_assert!(matches!(stage, Stage::Reasoning | Stage::Decision));
        let cause = match cause {
            StructuredFailure::Extraction(e) => StageErrorCause::Extraction(e),
            StructuredFailure::Schema(e) => StageErrorCause::Schema(e),
        };
        Self {
            stage,
            round,
            cause,
        }
    }
}

enum StructuredFailure {
    Extraction(ExtractionError),
    Schema(SchemaError),
}

impl StructuredFailure {
    fn reason(&self) -> String {
        match self {
            StructuredFailure::Extraction(e) => e.to_string(),
            StructuredFailure::Schema(e) => e.to_string(),
        }
    }
}

/// A stage error together with everything recorded before it.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct SessionError {
    pub error: StageError,
    pub trace: Box<SessionTrace>,
}

pub struct Orchestrator<'p> {
    pool: &'p ModelPool,
    specs: Vec<AgentSpec>,
    config: LoopConfig,
    prompts: PromptSet,
}

impl<'p> Orchestrator<'p> {
    pub fn new(pool: &'p ModelPool, config: LoopConfig) -> Self {
        Self {
            pool,
            specs: pool.specs(),
            config,
            prompts: PromptSet::default(),
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn config(&self) -> &LoopConfig {
        &self.config
    }

    fn call_options(&self, round: Option<u32>, system: Option<&str>) -> CallOptions {
        CallOptions {
            system: system.map(str::to_string),
            round,
            timeout: Duration::from_secs_f64(self.config.per_call_timeout_s),
            temperature: self.config.temperature,
            frame_count: self.config.video_frame_count,
        }
    }

    fn ctx<'a>(&'a self, query: &'a str, summaries: &'a [InputSummary]) -> StageContext<'a> {
        StageContext {
            query,
            summaries,
            pool: &self.specs,
        }
    }

    /// One summary per input, in input order. Short text passes through;
    /// everything else is summarized by the agent for its modality. Failed
    /// calls degrade to a placeholder summary.
    pub fn perceive(&self, inputs: &[InputItem]) -> Result<Vec<InputSummary>, StageError> {
        let fail = |cause: StageErrorCause| StageError::new(Stage::Perception, 0, cause);
        check_inputs(inputs).map_err(|e| fail(e.into()))?;

        let mut jobs = Vec::with_capacity(inputs.len());
        for item in inputs {
            let agent = match (&item.payload, item.modality) {
                (Payload::Inline(text), ModalityKind::Text)
                    if text.chars().count() <= self.config.summary_threshold_chars =>
                {
                    None
                }
                (_, ModalityKind::Text) => self.pool.agent_for(ModalityKind::Text),
                (_, m) => Some(
                    self.pool
                        .agent_for(m)
                        .ok_or_else(|| fail(StageErrorCause::NoModalityAgent(m)))?,
                ),
            };
            jobs.push((item, agent.map(|a| a.agent_name.clone())));
        }

        let options = self.call_options(None, None);
        let schedule = Schedule::with_workers(jobs.iter().filter(|(_, a)| a.is_some()).count());
        Ok(map_ordered(jobs, schedule, |(item, agent)| {
            let summary = match (agent, &item.payload) {
                (None, Payload::Inline(text)) => text.clone(),
                (None, Payload::Locator(_)) => unreachable!("locator inputs always get an agent"),
                (Some(agent), _) => {
                    let instruction = perception_instruction(item.modality);
                    match self.pool.invoke_with(
                        &agent,
                        &instruction,
                        std::slice::from_ref(item),
                        &options,
                    ) {
                        Ok(out) if !out.answer.trim().is_empty() => out.answer,
                        Ok(_) => "(summary unavailable: empty response)".to_string(),
                        Err(err) => {
                            warn!(input = %item.id, %err, "perception call failed");
                            format!("(summary unavailable: {err})")
                        }
                    }
                }
            };
            InputSummary {
                input_id: item.id.clone(),
                modality: item.modality,
                summary,
            }
        }))
    }

    fn master_name(&self, stage: Stage, round: u32) -> Result<String, StageError> {
        self.pool
            .master()
            .map(|m| m.agent_name.clone())
            .ok_or_else(|| StageError::new(stage, round, StageErrorCause::NoMaster))
    }

    /// Calls the master and validates its reply, re-asking with a repair
    /// note up to `json_repair_retries` times.
    fn structured_call<T>(
        &self,
        stage: Stage,
        round: u32,
        prompt: &str,
        system: &str,
        validate: fn(&Value) -> Result<T, SchemaError>,
    ) -> Result<T, StageError> {
        let master = self.master_name(stage, round)?;
        let options = self.call_options(Some(round), Some(system));
        let mut current = prompt.to_string();
        let mut last = None;
        for attempt in 0..=self.config.json_repair_retries {
            let reply = self
                .pool
                .invoke_with(&master, &current, &[], &options)
                .map_err(|e| StageError::new(stage, round, e))?;
            let parsed = extract_json(&reply.answer)
                .map_err(StructuredFailure::Extraction)
                .and_then(|v| validate(&v).map_err(StructuredFailure::Schema));
            match parsed {
                Ok(value) => return Ok(value),
                Err(failure) => {
                    debug!(%stage, round, attempt, reason = %failure.reason(), "invalid structured reply");
                    current = format!("{prompt}\n\n{}", repair_instruction(&failure.reason()));
                    last = Some(failure);
                }
            }
        }
        Err(StageError::structured(
            stage,
            round,
            last.expect("at least one attempt"),
        ))
    }

    pub fn reason(
        &self,
        round: u32,
        history: &[RoundRecord],
        query: &str,
        summaries: &[InputSummary],
    ) -> Result<ReasoningOutput, StageError> {
        if round > self.config.max_loops {
            return Err(StageError::new(
                Stage::Reasoning,
                round,
                ConfigError(format!("round {round} exceeds max_loops {}", self.config.max_loops)),
            ));
        }
        let prompt = self
            .prompts
            .render_reasoning(round, history, self.ctx(query, summaries), RenderOptions::from(&self.config))
            .map_err(|e| StageError::new(Stage::Reasoning, round, e))?;
        self.structured_call(
            Stage::Reasoning,
            round,
            &prompt,
            REASONING_FORMAT_INSTRUCTION,
            validate_reasoning,
        )
    }

    /// Dispatches every planned question. Distinct agents run concurrently;
    /// one agent's questions go out in plan order. Failures become
    /// `[AGENT_ERROR]` answers. Results come back in plan order.
    pub fn execute(
        &self,
        round: u32,
        plan: &ReasoningOutput,
        inputs: &[InputItem],
    ) -> Result<Vec<QA>, StageError> {
        let mut groups: Vec<(&str, Vec<(usize, &str)>)> = Vec::new();
        let mut slot = 0;
        for instruction in &plan.agent_instructions {
            let idx = match groups.iter().position(|(n, _)| *n == instruction.agent_name) {
                Some(i) => i,
                None => {
                    groups.push((&instruction.agent_name, Vec::new()));
                    groups.len() - 1
                }
            };
            for q in &instruction.questions {
                groups[idx].1.push((slot, q.as_str()));
                slot += 1;
            }
        }
        if slot == 0 {
            return Err(StageError::new(Stage::Execution, round, StageErrorCause::EmptyPlan));
        }

        let options = self.call_options(Some(round), None);
        let schedule = Schedule::with_workers(groups.len());
        let answered = map_ordered(groups, schedule, |(agent, questions)| {
            self.run_agent(agent, &questions, inputs, &options)
        });

        let mut results: Vec<Option<QA>> = vec![None; slot];
        for (idx, qa) in answered.into_iter().flatten() {
            results[idx] = Some(qa);
        }
        Ok(results
            .into_iter()
            .map(|qa| qa.expect("every slot answered"))
            .collect())
    }

    fn run_agent(
        &self,
        agent: &str,
        questions: &[(usize, &str)],
        inputs: &[InputItem],
        options: &CallOptions,
    ) -> Vec<(usize, QA)> {
        let attachments: Vec<InputItem> = match self.pool.resolve(agent) {
            Ok((spec, _)) => inputs
                .iter()
                .filter(|i| Some(i.modality) == spec.modality.modality())
                .cloned()
                .collect(),
            Err(_) => Vec::new(),
        };
        questions
            .iter()
            .map(|&(idx, question)| {
                let (answer, latency_s) =
                    match self.pool.invoke_with(agent, question, &attachments, options) {
                        Ok(out) => (out.answer, out.latency.as_secs_f64()),
                        Err(err) => {
                            warn!(agent, %err, "agent call failed");
                            (agent_error_sentinel(&err), 0.0)
                        }
                    };
                (
                    idx,
                    QA {
                        question: question.to_string(),
                        answer,
                        agent_name: agent.to_string(),
                        latency_s,
                    },
                )
            })
            .collect()
    }

    pub fn decide(
        &self,
        current: &PendingRound<'_>,
        history: &[RoundRecord],
        query: &str,
        summaries: &[InputSummary],
    ) -> Result<DecisionOutput, StageError> {
        let round = current.round_index;
        let prompt = self
            .prompts
            .render_decision(current, history, self.ctx(query, summaries), RenderOptions::from(&self.config))
            .map_err(|e| StageError::new(Stage::Decision, round, e))?;
        self.structured_call(
            Stage::Decision,
            round,
            &prompt,
            DECISION_FORMAT_INSTRUCTION,
            validate_decision,
        )
    }

    pub fn run_session(&self, query: &str, inputs: &[InputItem]) -> Result<SessionTrace, SessionError> {
        let started = Instant::now();
        let mut trace = SessionTrace {
            query: query.to_string(),
            inputs: inputs.iter().map(InputItem::meta).collect(),
            summaries: Vec::new(),
            rounds: Vec::new(),
            final_answer: String::new(),
            exit_round: 0,
            forced_exit: false,
            perception_latency_s: 0.0,
            total_latency_s: 0.0,
            error: None,
        };
        let abort = |mut trace: SessionTrace, error: StageError| {
            trace.exit_round = trace.rounds.len() as u32;
            if let Some(last) = trace.rounds.last() {
                trace.final_answer = last.decision.final_answer.clone();
            }
            trace.total_latency_s = started.elapsed().as_secs_f64();
            trace.error = Some(error.to_string());
            SessionError {
                error,
                trace: Box::new(trace),
            }
        };

        if let Err(e) = self.config.validate() {
            return Err(abort(trace, StageError::new(Stage::Perception, 0, e)));
        }
        if self.pool.master().is_none() {
            return Err(abort(trace, StageError::new(Stage::Perception, 0, StageErrorCause::NoMaster)));
        }

        let t = Instant::now();
        match self.perceive(inputs) {
            Ok(s) => trace.summaries = s,
            Err(e) => return Err(abort(trace, e)),
        }
        trace.perception_latency_s = t.elapsed().as_secs_f64();

        for round in 1..=self.config.max_loops {
            let mut latencies = BTreeMap::new();

            let t = Instant::now();
            let plan = match self.reason(round, &trace.rounds, query, &trace.summaries) {
                Ok(p) => p,
                Err(e) => return Err(abort(trace, e)),
            };
            latencies.insert(Stage::Reasoning, t.elapsed().as_secs_f64());

            let t = Instant::now();
            let results = match self.execute(round, &plan, inputs) {
                Ok(r) => r,
                Err(e) => return Err(abort(trace, e)),
            };
            latencies.insert(Stage::Execution, t.elapsed().as_secs_f64());

            let t = Instant::now();
            let pending = PendingRound {
                round_index: round,
                reasoning: &plan,
                results: &results,
            };
            let decision = match self.decide(&pending, &trace.rounds, query, &trace.summaries) {
                Ok(d) => d,
                Err(e) => return Err(abort(trace, e)),
            };
            latencies.insert(Stage::Decision, t.elapsed().as_secs_f64());

            let done = decision.is_final;
            info!(round, is_final = done, "round complete");
            trace.rounds.push(RoundRecord {
                round_index: round,
                reasoning: plan,
                results,
                decision,
                stage_latencies_s: latencies,
            });
            if done {
                break;
            }
        }

        let last = trace.rounds.last().expect("max_loops >= 1");
        trace.final_answer = last.decision.final_answer.clone();
        trace.forced_exit = !last.decision.is_final;
        trace.exit_round = trace.rounds.len() as u32;
        trace.total_latency_s = started.elapsed().as_secs_f64();
        Ok(trace)
    }
}
