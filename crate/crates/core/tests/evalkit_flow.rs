use lexforge_core::evalkit::checks::{LIST_FORMAT, NUMERIC_MATCH, POLARITY, REPETITION};
use lexforge_core::evalkit::{
    resignation_entitlement, run_eval, Category, CheckResult, EvalCase, Gold, Polarity,
};
use lexforge_core::synth::client::{ChatClient, ProviderConfig, ResponseCache};
use lexforge_mock::{MockServer, Reply};
use proptest::prelude::*;

fn client(server: &MockServer) -> ChatClient {
    std::env::set_var("LEXFORGE_EVAL_TEST_KEY", "k");
    let mut c = ProviderConfig::new(server.base_url(), "m");
    c.api_key_env = "LEXFORGE_EVAL_TEST_KEY".into();
    c.requests_per_second = 1000.0;
    c.max_retries = 0;
    ChatClient::new(c, ResponseCache::in_memory()).unwrap()
}

fn case(id: &str, category: Category, question: &str, gold: Option<Gold>) -> EvalCase {
    EvalCase {
        id: id.into(),
        category,
        question: question.into(),
        context_article: None,
        gold,
    }
}

#[tokio::test]
async fn echo_endpoint_keeps_case_order() {
    let server = MockServer::start(|r, _| Reply::Content(format!("صدى: {}", r.user())));
    let cases: Vec<_> = (0..3)
        .map(|i| {
            case(
                &format!("c{i}"),
                Category::Narrative,
                &format!("سؤال {i}"),
                None,
            )
        })
        .collect();
    let outcomes = run_eval(&client(&server), &cases, "").await;
    let ids: Vec<_> = outcomes.iter().map(|o| o.case_id.as_str()).collect();
    assert_eq!(ids, ["c0", "c1", "c2"]);
    for (i, o) in outcomes.iter().enumerate() {
        assert_eq!(o.response, format!("صدى: سؤال {i}"));
    }
}

#[tokio::test]
async fn one_failing_case_does_not_stop_the_run() {
    let server = MockServer::start(|r, _| {
        if r.user().contains("الثاني") {
            Reply::Status(503)
        } else {
            Reply::Content("1. أولاً\n2. ثانياً".into())
        }
    });
    let cases = vec![
        case("a", Category::ListBased, "السؤال الأول", None),
        case("b", Category::ListBased, "السؤال الثاني", None),
        case("c", Category::ListBased, "السؤال الثالث", None),
    ];
    let outcomes = run_eval(&client(&server), &cases, "").await;
    assert_eq!(outcomes[0].checks[LIST_FORMAT], CheckResult::Pass);
    assert_eq!(outcomes[1].checks[LIST_FORMAT], CheckResult::NotApplicable);
    assert!(outcomes[1].error.is_some());
    assert_eq!(outcomes[2].checks[LIST_FORMAT], CheckResult::Pass);
}

#[tokio::test]
async fn system_message_carries_preamble_and_context() {
    let server = MockServer::start(|r, _| Reply::Content(r.system().unwrap_or("none").to_string()));
    let mut c = case("x", Category::Narrative, "ما الحكم؟", None);
    c.context_article = Some("نص المادة 42".into());
    let outcomes = run_eval(&client(&server), &[c], "أنت مستشار").await;
    assert_eq!(outcomes[0].response, "أنت مستشار\n\nنص المادة 42");
}

#[tokio::test]
async fn no_answer_passes_polarity_against_gold_no() {
    let server = MockServer::start(|_, _| {
        Reply::Content("لا، وفقاً لقانون البينات رقم 4 لسنة 2001 لا تقبل هذه الشهادة.".into())
    });
    let gold = Gold {
        polarity: Some(Polarity::No),
        ..Gold::default()
    };
    let cases = [case(
        "yn",
        Category::YesNo,
        "هل تقبل شهادة القاصر؟",
        Some(gold),
    )];
    let outcomes = run_eval(&client(&server), &cases, "").await;
    assert_eq!(outcomes[0].checks[POLARITY], CheckResult::Pass);
    assert_eq!(outcomes[0].checks[REPETITION], CheckResult::Pass);
}

#[tokio::test]
async fn calculation_probe_is_scored_against_the_oracle() {
    let gold_value = resignation_entitlement(5000.0, 3.0).unwrap();
    let server = MockServer::start(|r, _| {
        if r.user().contains("right") {
            Reply::Content("استحقاقك 60000 شيكل".into())
        } else {
            Reply::Content("استحقاقك 15000 شيكل".into())
        }
    });
    let gold = Gold {
        number: Some(gold_value),
        ..Gold::default()
    };
    let cases = [
        case(
            "right",
            Category::Calculation,
            "right: راتبي 5000 وعملت 3 سنوات",
            Some(gold.clone()),
        ),
        case(
            "wrong",
            Category::Calculation,
            "wrong: راتبي 5000 وعملت 3 سنوات",
            Some(gold),
        ),
    ];
    let outcomes = run_eval(&client(&server), &cases, "").await;
    assert_eq!(outcomes[0].checks[NUMERIC_MATCH], CheckResult::Pass);
    assert_eq!(outcomes[1].checks[NUMERIC_MATCH], CheckResult::Fail);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn entitlement_is_linear(salary in 0.0f64..100_000.0, years in 0.0f64..2.5) {
        let base = resignation_entitlement(salary, years).unwrap();
        let tol = 1e-9 * base.abs().max(1.0);
        prop_assert!((resignation_entitlement(2.0 * salary, years).unwrap() - 2.0 * base).abs() <= tol);
        prop_assert!((resignation_entitlement(salary, 2.0 * years).unwrap() - 2.0 * base).abs() <= tol);
    }
}
