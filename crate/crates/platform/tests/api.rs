mod common;

use avabond_core::challenge::{ChallengeBank, ClientInput};
use avabond_core::engagement::Period;
use avabond_core::normalize::normalize_answer;
use avabond_core::progression::HintKind;
use avabond_core::scheduler::NotificationKind;
use avabond_core::time::{DAY_MS, HOUR_MS};
use avabond_core::{AuthOutcome, ChallengeKind, Stage};
use avabond_platform::client::{ApiClient, ApiFailure, ScriptedPlayer};
use avabond_platform::dto::{HintRequest, OPERATOR_HEADER};
use common::{fast_config, spawn, TOKEN};
use serde_json::Value;

fn failure(e: anyhow::Error) -> ApiFailure {
    e.downcast::<ApiFailure>().expect("an API failure")
}

#[tokio::test(flavor = "multi_thread")]
async fn session_view_never_reveals_avatar_answers() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let client = server.client();
    let created = client.create_player(Some(11), None).await.unwrap();
    let raw: Value = reqwest::get(format!("{}/players/{}/session", server.base, created.player_id))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let challenges = raw["challenges"].as_array().unwrap();
    assert_eq!(challenges.len(), 10);
    let answers: Vec<String> = created.avatar.iter().map(|f| normalize_answer(&f.answer)).collect();
    let mut avatar_seen = 0;
    for c in challenges {
        let kind = c["kind"].as_str().unwrap();
        let obj = c.as_object().unwrap();
        assert!(!obj.contains_key("answer"));
        if kind == "Standard" {
            assert!(obj.contains_key("answer_length"));
            continue;
        }
        avatar_seen += 1;
        assert!(!obj.contains_key("answer_length"), "{c}");
        assert!(!obj.contains_key("verbal_cues"));
        let field = c["field_id"].as_str().unwrap();
        let own = normalize_answer(&created.avatar.iter().find(|f| f.field_id == field).unwrap().answer);
        let text = c.to_string();
        if c["input"]["mode"] == "letter_pool" {
            assert_eq!(c["input"]["letters"].as_array().unwrap().len(), 12);
            for a in &answers {
                assert!(!normalize_answer(&text).contains(&format!("\"{a}\"")), "{a} leaked in {text}");
            }
        } else {
            let options: Vec<String> =
                c["input"]["options"].as_array().unwrap().iter().map(|o| normalize_answer(o.as_str().unwrap())).collect();
            assert_eq!(options.iter().filter(|o| **o == own).count(), 1);
        }
    }
    assert_eq!(avatar_seen, 6);
}

#[tokio::test(flavor = "multi_thread")]
async fn scoring_hints_and_badges_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let client = server.client();
    let created = client.create_player(Some(5), None).await.unwrap();
    let player = ScriptedPlayer::new(&created, &ChallengeBank::default_bank());
    let view = client.session(&created.player_id).await.unwrap();

    // a new player cannot afford a hint
    let first = &view.challenges[0];
    let err = failure(client.hint(&created.player_id, &first.challenge_id, HintRequest::default()).await.unwrap_err());
    assert_eq!(err.status, 402);
    assert_eq!((err.body.balance, err.body.cost), (Some(0), Some(30)));

    // a wrong answer at zero balance stays at zero and keeps the round open
    let wrong = client.answer(&created.player_id, &first.challenge_id, "ZZZZ").await.unwrap();
    assert!(!wrong.verdict.correct);
    assert_eq!(wrong.score.balance_after, 0);
    assert!(wrong.challenge_open);
    assert!(wrong.cue.is_some());

    let mut balance = 0;
    let mut badges = Vec::new();
    for c in &view.challenges {
        let r = client.answer(&created.player_id, &c.challenge_id, &player.respond(c).unwrap()).await.unwrap();
        assert!(r.verdict.correct);
        let reward = match c.kind {
            ChallengeKind::Standard => 10,
            ChallengeKind::AvatarRecognition => 15,
            ChallengeKind::AvatarRecall => 20,
        };
        assert_eq!(r.score.balance_after, balance + reward);
        balance = r.score.balance_after;
        badges.extend(r.badges.iter().map(|b| b.kind));
        assert!(!r.challenge_open);
    }
    assert_eq!(badges.len(), 3);

    // answered rounds are gone
    let err = failure(client.answer(&created.player_id, &first.challenge_id, "x").await.unwrap_err());
    assert_eq!(err.status, 404);

    // a fresh session: buy cues, then a duplicate purchase conflicts
    let view = client.session(&created.player_id).await.unwrap();
    let target = &view.challenges[0];
    let bought = client.hint(&created.player_id, &target.challenge_id, HintRequest::default()).await.unwrap();
    assert_eq!(bought.score.delta, -30);
    assert_eq!(bought.score.balance_after, balance - 30);
    assert_eq!(bought.cues.as_ref().unwrap().len(), 4);
    let err = failure(client.hint(&created.player_id, &target.challenge_id, HintRequest::default()).await.unwrap_err());
    assert_eq!(err.status, 409);
    let letter = client
        .hint(&created.player_id, &target.challenge_id, HintRequest { kind: Some(HintKind::LetterReveal) })
        .await
        .unwrap();
    assert!(letter.letter.is_some());
    assert_eq!(server.service.state(&created.player_id).unwrap().balance, balance - 60);
}

#[tokio::test(flavor = "multi_thread")]
async fn reset_flow_grants_denies_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let client = server.client();
    let created = client.create_player(Some(21), None).await.unwrap();
    let truth = |field: &str| created.avatar.iter().find(|f| f.field_id == field).unwrap().answer.clone();

    let issued = client.start_reset(&created.player_id).await.unwrap();
    assert_eq!(issued.questions.len(), 3);
    let wrong = client.finish_reset(&created.player_id, &issued.token, vec!["no".into(); 3]).await.unwrap();
    assert_eq!(wrong.outcome, AuthOutcome::Denied);
    let answers: Vec<String> = issued.questions.iter().map(|q| truth(&q.field_id).to_lowercase()).collect();
    let right = client.finish_reset(&created.player_id, &issued.token, answers.clone()).await.unwrap();
    assert_eq!(right.outcome, AuthOutcome::Granted);

    // the token is spent once granted
    let err = failure(client.finish_reset(&created.player_id, &issued.token, answers).await.unwrap_err());
    assert_eq!(err.status, 404);

    // third judged attempt today is allowed, fourth is locked
    let issued = client.start_reset(&created.player_id).await.unwrap();
    let third = client.finish_reset(&created.player_id, &issued.token, vec![]).await.unwrap();
    assert_eq!(third.outcome, AuthOutcome::Denied);
    let fourth = client.finish_reset(&created.player_id, &issued.token, vec![]).await.unwrap();
    assert_eq!(fourth.outcome, AuthOutcome::Locked);

    let history = server.service.state(&created.player_id).unwrap().auth_history;
    let outcomes: Vec<AuthOutcome> = history.iter().map(|a| a.outcome).collect();
    assert_eq!(
        outcomes,
        vec![AuthOutcome::Denied, AuthOutcome::Granted, AuthOutcome::Locked, AuthOutcome::Denied, AuthOutcome::Locked]
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn admin_clock_requires_the_operator_token() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let http = reqwest::Client::new();
    let url = format!("{}/admin/clock", server.base);
    let body = serde_json::json!({ "advance_ms": HOUR_MS });
    assert_eq!(http.post(&url).json(&body).send().await.unwrap().status(), 403);
    let wrong = http.post(&url).header(OPERATOR_HEADER, "guess").json(&body).send().await.unwrap();
    assert_eq!(wrong.status(), 403);
    assert_eq!(http.get(&url).send().await.unwrap().status(), 403);
    let ok = http.post(&url).header(OPERATOR_HEADER, TOKEN).json(&body).send().await.unwrap();
    assert_eq!(ok.status(), 200);
    assert_eq!(server.service.now().millis(), common::START.millis() + HOUR_MS);
    let back = serde_json::json!({ "set_ms": 0 });
    let err = http.post(&url).header(OPERATOR_HEADER, TOKEN).json(&back).send().await.unwrap();
    assert_eq!(err.status(), 400);
    assert_eq!(ApiClient::new(&server.base).advance_clock(1).await.map_err(failure).unwrap_err().status, 403);
}

#[tokio::test(flavor = "multi_thread")]
async fn reminders_and_reports_follow_the_clock() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let client = server.client();
    let created = client.create_player(Some(8), Some("Europe/Berlin".into())).await.unwrap();
    let player = ScriptedPlayer::new(&created, &ChallengeBank::default_bank());
    player.play_session(&client).await.unwrap();

    client.advance_clock(DAY_MS - 60_000).await.unwrap();
    assert!(client.notifications(&created.player_id).await.unwrap().is_empty());
    client.advance_clock(60_000).await.unwrap();
    let due = client.notifications(&created.player_id).await.unwrap();
    assert_eq!(due.len(), 1);
    assert_eq!(due[0].notification.kind, NotificationKind::Reminder);
    assert!(client.notifications(&created.player_id).await.unwrap().is_empty());

    let report = client.report(&created.player_id, Period::Week).await.unwrap();
    assert_eq!(report.solved_avatar_correct, 6);
    assert_eq!(report.stage, Stage::Early);
    let bad = reqwest::get(format!("{}/players/{}/report?period=year", server.base, created.player_id)).await.unwrap();
    assert_eq!(bad.status(), 400);
    let missing = reqwest::get(format!("{}/players/nobody/session", server.base)).await.unwrap();
    assert_eq!(missing.status(), 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn stuck_rounds_get_a_free_letter() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let client = server.client();
    let created = client.create_player(Some(9), None).await.unwrap();
    let view = client.session(&created.player_id).await.unwrap();
    let target = view.challenges.iter().find(|c| matches!(c.input, ClientInput::LetterPool { .. })).unwrap();
    for _ in 0..3 {
        client.answer(&created.player_id, &target.challenge_id, "QQ").await.unwrap();
    }
    let due = client.notifications(&created.player_id).await.unwrap();
    let offer = due
        .iter()
        .find(|d| matches!(&d.notification.kind, NotificationKind::StuckHintOffer { challenge_id } if *challenge_id == target.challenge_id))
        .expect("stuck offer");
    assert!(offer.letter.is_some());
    assert_eq!(server.service.state(&created.player_id).unwrap().balance, 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn duplicate_players_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(dir.path(), fast_config()).await;
    let client = server.client();
    client.create_player(Some(1), None).await.unwrap();
    assert_eq!(failure(client.create_player(Some(1), None).await.unwrap_err()).status, 409);
    assert_eq!(failure(client.create_player(Some(2), Some("Mars/Base".into())).await.unwrap_err()).status, 400);
}
