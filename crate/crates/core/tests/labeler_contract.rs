mod common;

use common::mock_llm::{completion_body, MockLlm};
use common::{random_dag, random_labeling};
use ontoclean_core::eval::load_benchmark;
use ontoclean_core::labeler::{
    build_prompt, call_llm, format_labels, label_ontology, parse_labels, prompt_hash, LabelerError, LlmConfig,
    LlmError, PromptConfig, PromptStrategy, Representation, OUTPUT_FORMAT,
};
use ontoclean_core::{parse_taxonomy, Labeling, TaxonomyFormat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn http_cfg(mock: &MockLlm, max_retries: u32) -> LlmConfig {
    let mut cfg = LlmConfig::new(&mock.url, "test-model");
    cfg.max_retries = max_retries;
    cfg.backoff_ms = 1;
    cfg.timeout_secs = 5;
    cfg
}

#[test]
fn passes_content_through_and_speaks_the_wire_protocol() {
    let mock = MockLlm::start(vec![(200, completion_body("Pizza: I+, U+, R+, D-"))]);
    let mut cfg = http_cfg(&mock, 0);
    cfg.api_key = Some(ontoclean_core::labeler::ApiKey::new("sk-test"));
    let out = call_llm("hello", &cfg).unwrap();
    assert_eq!(out.content, "Pizza: I+, U+, R+, D-");
    assert_eq!(out.attempts, 1);

    let req = mock.requests.lock().unwrap()[0].clone();
    assert_eq!(req.path, "/v1/chat/completions");
    assert_eq!(req.authorization.as_deref(), Some("Bearer sk-test"));
    assert_eq!(
        req.body,
        serde_json::json!({
            "model": "test-model",
            "messages": [{"role": "user", "content": "hello"}],
            "temperature": 0.0,
            "max_tokens": 2048,
        })
    );
}

#[test]
fn unauthorized_is_auth_error_without_retry() {
    for status in [401, 403] {
        let mock = MockLlm::start(vec![(status, "{}".into())]);
        let err = call_llm("x", &http_cfg(&mock, 3)).unwrap_err();
        assert!(
            matches!(err, LlmError::AuthError { status: s } if s == status),
            "{err:?}"
        );
        assert_eq!(mock.hits(), 1);
    }
}

#[test]
fn rate_limit_twice_then_success_takes_three_attempts() {
    let mock = MockLlm::start(vec![
        (429, "{}".into()),
        (429, "{}".into()),
        (200, completion_body("ok")),
    ]);
    let out = call_llm("x", &http_cfg(&mock, 3)).unwrap();
    assert_eq!(out.content, "ok");
    assert_eq!(out.attempts, 3);
    assert_eq!(mock.hits(), 3);
}

#[test]
fn persistent_rate_limit_gives_up_after_retries() {
    let mock = MockLlm::start(vec![(429, "{}".into())]);
    let err = call_llm("x", &http_cfg(&mock, 2)).unwrap_err();
    assert!(matches!(err, LlmError::RateLimited { attempts: 3 }), "{err:?}");
    assert_eq!(mock.hits(), 3);
}

#[test]
fn server_errors_are_retried() {
    let mock = MockLlm::start(vec![(503, "busy".into()), (200, completion_body("fine"))]);
    assert_eq!(call_llm("x", &http_cfg(&mock, 1)).unwrap().attempts, 2);
    let mock = MockLlm::start(vec![(500, "boom".into())]);
    let err = call_llm("x", &http_cfg(&mock, 1)).unwrap_err();
    assert!(
        matches!(
            err,
            LlmError::ServerError {
                status: 500,
                attempts: 2,
                ..
            }
        ),
        "{err:?}"
    );
}

#[test]
fn other_client_errors_and_bad_bodies() {
    let mock = MockLlm::start(vec![(400, "bad request".into())]);
    assert!(matches!(
        call_llm("x", &http_cfg(&mock, 3)).unwrap_err(),
        LlmError::HttpError { status: 400, .. }
    ));
    assert_eq!(mock.hits(), 1);
    let mock = MockLlm::start(vec![(200, r#"{"choices": []}"#.into())]);
    assert!(matches!(
        call_llm("x", &http_cfg(&mock, 0)).unwrap_err(),
        LlmError::MalformedResponse(_)
    ));
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut cfg = LlmConfig::new(format!("http://127.0.0.1:{port}"), "m");
    cfg.max_retries = 1;
    cfg.backoff_ms = 1;
    let err = call_llm("x", &cfg).unwrap_err();
    assert!(matches!(err, LlmError::TransportError { attempts: 2, .. }), "{err:?}");
}

#[test]
fn label_ontology_over_http_replays_gold() {
    let bench = load_benchmark("pizza").unwrap();
    let reply = format_labels(&bench.gold, &bench.taxonomy);
    let mock = MockLlm::start(vec![(200, completion_body(&reply))]);
    let pc = PromptConfig::new(PromptStrategy::InContext, Representation::Hierarchical { seed: 3 });
    let result = label_ontology(&bench.taxonomy, &pc, &http_cfg(&mock, 0)).unwrap();
    assert_eq!(result.labeling, bench.gold);
    assert!(result.warnings.is_empty());
    let sent = mock.requests.lock().unwrap()[0].body["messages"][0]["content"]
        .as_str()
        .unwrap()
        .to_owned();
    assert_eq!(sent, build_prompt(&bench.taxonomy, &pc));
}

#[test]
fn prose_only_replies_end_in_empty_response() {
    let t = parse_taxonomy("A\n\tB", TaxonomyFormat::Indented).unwrap();
    let mock = MockLlm::start(vec![(200, completion_body("I cannot label this ontology."))]);
    let pc = PromptConfig::new(PromptStrategy::ZeroShot, Representation::Flat);
    let err = label_ontology(&t, &pc, &http_cfg(&mock, 2)).unwrap_err();
    assert!(
        matches!(err, LabelerError::EmptyResponse { attempts: 3, .. }),
        "{err:?}"
    );
    assert_eq!(mock.hits(), 3);
}

#[test]
fn fixture_backend_prefers_the_prompt_hash_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("default.txt"), "fallback").unwrap();
    std::fs::write(dir.path().join(format!("{}.txt", prompt_hash("special"))), "matched").unwrap();
    let cfg = LlmConfig::fixture(dir.path());
    assert_eq!(call_llm("special", &cfg).unwrap().content, "matched");
    assert_eq!(call_llm("other", &cfg).unwrap().content, "fallback");
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(
        call_llm("x", &LlmConfig::fixture(empty.path())),
        Err(LlmError::FixtureMissing { .. })
    ));
}

#[test]
fn prompt_layout() {
    let t = parse_taxonomy("A", TaxonomyFormat::Indented).unwrap();
    let zero = build_prompt(&t, &PromptConfig::new(PromptStrategy::ZeroShot, Representation::Flat));
    assert!(zero.starts_with("Label this ontology with OntoClean criteria."));
    assert!(zero.ends_with("\nA"));
    assert!(zero.contains(OUTPUT_FORMAT));
    assert_eq!(
        OUTPUT_FORMAT,
        "Answer with one line per class, formatted exactly as: <ClassName>: I+|-, U+|-|~, R+|-|~, D+|-"
    );
    assert!(!zero.contains("Rigidity="));

    let pc = PromptConfig::new(PromptStrategy::InContext, Representation::Hierarchical { seed: 7 })
        .with_guidance("Food is never rigid.");
    let ctx = build_prompt(&t, &pc);
    assert!(ctx.contains("Rigidity='Rigidity is based on the notion of essence"));
    for name in ["Identity='", "Unity='", "Rigidity='", "Dependence='"] {
        assert_eq!(ctx.matches(name).count(), 1, "{name}");
    }
    let guidance = ctx.find("Additional guidance: Food is never rigid.").unwrap();
    assert!(ctx.find("Dependence='").unwrap() < guidance);
    assert!(guidance < ctx.find(OUTPUT_FORMAT).unwrap());
    assert_eq!(ctx, build_prompt(&t, &pc));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn response_grammar_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_dag(&mut rng, 10, 12);
        let l = random_labeling(&mut rng, &t, 1.0);
        let parsed = parse_labels(&format_labels(&l, &t), &t).unwrap();
        prop_assert_eq!(parsed.labeling, l);
        prop_assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn partial_labelings_round_trip_too(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_dag(&mut rng, 10, 12);
        let l = random_labeling(&mut rng, &t, 0.5);
        if l.is_empty() {
            prop_assert!(parse_labels(&format_labels(&l, &t), &t).is_err());
        } else {
            prop_assert_eq!(parse_labels(&format_labels(&l, &t), &t).unwrap().labeling, l);
        }
    }

    #[test]
    fn labeling_json_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_dag(&mut rng, 10, 12);
        let l = random_labeling(&mut rng, &t, 0.7);
        let back: Labeling = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        prop_assert_eq!(back, l);
    }

    #[test]
    fn parser_never_fails_hard_on_noise(noise in "(?s).{0,300}") {
        let t = parse_taxonomy("Pizza\n\tMargherita", TaxonomyFormat::Indented).unwrap();
        if let Ok(r) = parse_labels(&noise, &t) {
            prop_assert!(r.labeling.classes().all(|c| t.contains(c.as_str())));
        }
    }
}
