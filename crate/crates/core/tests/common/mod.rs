//! Shared mock scaffolding for the integration tests.
#![allow(dead_code)]

pub mod golden;

use std::sync::Arc;

use omni_core::eval::BenchmarkItem;
use omni_core::{AgentKind, AgentSpec, BackendConfig, MockBackend, MockRule, MockScript, ModelPool};

pub const REASONING_MARKER: &str = "round of reasoning.";
pub const DECISION_MARKER: &str = "round of decision.";

pub fn plan(agent: &str, questions: &[&str]) -> String {
    serde_json::json!({
        "user_intent": "answer the multiple-choice question",
        "agent_instructions": [{"agent_name": agent, "questions": questions}],
    })
    .to_string()
}

pub fn decision(answer: &str, is_final: bool, suggestions: &[&str]) -> String {
    serde_json::json!({
        "final_answer": answer,
        "is_final": is_final,
        "suggestions_for_next_round": suggestions,
    })
    .to_string()
}

pub fn standard_agents() -> Vec<AgentSpec> {
    vec![
        AgentSpec::new("master", AgentKind::Master, "Central controller for reasoning and decision-making", ""),
        AgentSpec::new("text_agent", AgentKind::Text, "Strong LLM for text understanding and logical reasoning", ""),
        AgentSpec::new("image_agent", AgentKind::Image, "Handles visual perception and image-based reasoning", ""),
        AgentSpec::new("video_agent", AgentKind::Video, "Specialized in video understanding and temporal reasoning", ""),
        AgentSpec::new("audio_agent", AgentKind::Audio, "Provides audio comprehension and speech reasoning", ""),
    ]
}

pub fn mock_pool(rules: Vec<MockRule>) -> (ModelPool, Arc<MockBackend>) {
    let mock = Arc::new(MockBackend::new(MockScript::new(rules)));
    let pool = ModelPool::with_shared_backend(BackendConfig::mock("mock"), mock.clone(), standard_agents())
        .expect("pool builds");
    (pool, mock)
}

/// How one benchmark item plays out: the letter the master answers with in
/// each round, and the round at which it declares the answer final (if any).
#[derive(Debug, Clone)]
pub struct ItemPlan {
    pub key: char,
    pub letters: Vec<char>,
    pub final_round: Option<u32>,
    /// Injected delays: reasoning call, text agent call, decision call.
    pub delays: (f64, f64, f64),
}

impl ItemPlan {
    pub fn new(key: char, letters: &str, final_round: Option<u32>) -> Self {
        Self {
            key,
            letters: letters.chars().collect(),
            final_round,
            delays: (0.0, 0.0, 0.0),
        }
    }

    pub fn with_delays(mut self, reasoning: f64, agent: f64, decision: f64) -> Self {
        self.delays = (reasoning, agent, decision);
        self
    }

    /// Exit round and predicted letter under a loop cap, worked out from the
    /// plan alone.
    pub fn expected(&self, max_loops: u32) -> (u32, char) {
        let exit = match self.final_round {
            Some(r) if r <= max_loops => r,
            _ => max_loops,
        };
        (exit, self.letters[(exit - 1) as usize])
    }
}

pub fn tag(i: usize) -> String {
    format!("[item {i:03}]")
}

/// Benchmark items plus the scripted master and text agent that realise
/// each plan. Each item's question carries a unique tag so rules can tell
/// sessions apart when they run concurrently.
pub fn scripted_benchmark(plans: &[ItemPlan]) -> (Vec<BenchmarkItem>, Vec<MockRule>) {
    let mut items = Vec::new();
    let mut rules = Vec::new();
    for (i, p) in plans.iter().enumerate() {
        let tag = tag(i);
        items.push(BenchmarkItem {
            item_id: format!("item-{i:03}"),
            question: format!("{tag} Which option is correct?"),
            choices: vec!["first".into(), "second".into(), "third".into(), "fourth".into()],
            answer_key: p.key,
            attachments: vec![],
        });
        rules.push(
            MockRule::new("master")
                .contains(tag.clone())
                .contains(REASONING_MARKER)
                .reply(plan("text_agent", &[&format!("{tag} What does the passage say?")]))
                .delay(p.delays.0),
        );
        rules.push(
            MockRule::new("text_agent")
                .contains(tag.clone())
                .reply("The passage supports one option.")
                .delay(p.delays.1),
        );
        for (r, letter) in p.letters.iter().enumerate() {
            let round = r as u32 + 1;
            let is_final = p.final_round == Some(round);
            rules.push(
                MockRule::new("master")
                    .contains(tag.clone())
                    .contains(DECISION_MARKER)
                    .round(round)
                    .reply(decision(
                        &format!("The options were compared.\nThe answer is {letter}"),
                        is_final,
                        &["Double-check the passage against each option."],
                    ))
                    .delay(p.delays.2),
            );
        }
    }
    (items, rules)
}

/// The 20-item plan behind the accounting and iteration scenarios:
/// 13 right and final at round 1, 1 wrong and final at round 1,
/// 2 that flip wrong to right and finish at round 2, 3 wrong at round 2,
/// and 1 that never settles before round 3 and ends wrong.
pub fn twenty_item_plans() -> Vec<ItemPlan> {
    let mut plans = Vec::new();
    for _ in 0..13 {
        plans.push(ItemPlan::new('B', "BBB", Some(1)));
    }
    plans.push(ItemPlan::new('B', "CCC", Some(1)));
    for _ in 0..2 {
        plans.push(ItemPlan::new('C', "ACC", Some(2)));
    }
    for _ in 0..3 {
        plans.push(ItemPlan::new('D', "AAA", Some(2)));
    }
    plans.push(ItemPlan::new('A', "BCD", Some(3)));
    plans
}
