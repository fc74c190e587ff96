use lexforge_core::segment::segment_articles;
use lexforge_core::synth::client::{ChatClient, ProviderConfig, ResponseCache};
use lexforge_core::synth::generate::{generate_pairs, FilterPolicy, GenerationJob};
use lexforge_mock::{MockServer, Reply};

const LAW: &str = "قانون رقم (4) لسنة 2005\n\
المادة (1)\nيعمل بهذا القانون من تاريخ نشره.\n\
المادة (2)\nيجوز ترقية الموظف من الفئة الثانية إلى الفئة الأولى.\n\
المادة (3)\nيلغى كل حكم يخالف أحكام هذا القانون.";

fn script(user: &str) -> Reply {
    let line = user
        .lines()
        .find(|l| l.starts_with("Law Title and Article"))
        .unwrap_or("");
    if line.ends_with("Article 1.") {
        Reply::Content(
            "إليك السؤال:\n```json\n{\"question\": \"متى يبدأ العمل بالقانون؟\", \"answer\": \"وفقاً للمادة 1 من القانون رقم 4 لسنة 2005، يعمل به من تاريخ نشره.\"}\n```"
                .into(),
        )
    } else if line.ends_with("Article 2.") {
        // English answer without citation fails validation
        Reply::Content(r#"{"question": "Can I be promoted?", "answer": "Yes."}"#.into())
    } else {
        Reply::Content("no json here".into())
    }
}

fn client(server: &MockServer) -> ChatClient {
    std::env::set_var("LEXFORGE_GEN_TEST_KEY", "k");
    let mut c = ProviderConfig::new(server.base_url(), "m");
    c.api_key_env = "LEXFORGE_GEN_TEST_KEY".into();
    c.requests_per_second = 1000.0;
    c.name = "mock".into();
    ChatClient::new(c, ResponseCache::in_memory()).unwrap()
}

#[tokio::test]
async fn pairs_are_parsed_validated_and_filtered() {
    let server = MockServer::start(|r, _| script(r.user()));
    let law = segment_articles("law-4-2005", "قانون رقم (4) لسنة 2005", LAW).law;
    let jobs = GenerationJob::for_law(&law, 1);
    assert_eq!(jobs.len(), 3, "preamble gets no job");

    let c = client(&server);
    let results = generate_pairs(&c, &jobs, FilterPolicy::DropInvalid).await;
    assert_eq!(results.len(), 3);

    let first = &results[0];
    assert_eq!(first.kept.len(), 1);
    let pair = &first.kept[0].pair;
    assert_eq!(pair.article_number, 1);
    assert_eq!(pair.article_index, jobs[0].article_index);
    assert_eq!(pair.provider, "mock");
    assert!(first.kept[0].validation.passed);

    assert!(results[1].kept.is_empty());
    assert_eq!(results[1].dropped.len(), 1);
    assert!(results[2].parse_error.is_some());
    assert!(results.iter().all(|r| r.request_error.is_none()));

    let kept = generate_pairs(&c, &jobs, FilterPolicy::KeepInvalid).await;
    assert_eq!(kept[1].kept.len(), 1);
    assert!(!kept[1].kept[0].validation.passed);
    // second run was served from the cache
    assert_eq!(server.calls(), 3);
    assert!(kept.iter().all(|r| r.from_cache));
}

#[tokio::test]
async fn request_failures_stay_with_their_job() {
    let server = MockServer::start(|r, _| {
        if r.user().contains("Article 2.") {
            Reply::Status(404)
        } else {
            script(r.user())
        }
    });
    let law = segment_articles("l", "قانون", LAW).law;
    let jobs = GenerationJob::for_law(&law, 1);
    let results = generate_pairs(&client(&server), &jobs, FilterPolicy::DropInvalid).await;
    assert!(results[0].request_error.is_none() && results[0].kept.len() == 1);
    assert!(results[1].request_error.as_deref().unwrap().contains("404"));
    assert!(results[2].request_error.is_none());
}
