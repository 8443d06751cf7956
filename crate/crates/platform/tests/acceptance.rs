//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use avabond_core::attack::{simulate_guessing_attack, simulate_pool_attack, AttackerModel};
use avabond_core::avatar::{generate_profile, AvatarSchema};
use avabond_core::challenge::{
    build_avatar_challenge, build_standard_challenge, AvatarMode, Challenge, ChallengeBank, ChallengeConfig,
    ChallengeKind, Verdict,
};
use avabond_core::engagement::{monitoring_report, Period};
use avabond_core::fallback::{select_questions, success_probability_for_pools};
use avabond_core::memory::MemoryParams;
use avabond_core::normalize::normalize_answer;
use avabond_core::progression::{apply_verdict, award_badges, purchase_hint, score_for, BadgeKind, HintKind};
use avabond_core::rng::SeededStream;
use avabond_core::scheduler::{due_notifications, mark_notified, NotificationKind};
use avabond_core::simulation::{pure_decay_recall, simulate_player, SessionPolicy};
use avabond_core::time::{DAY_MS, HOUR_MS};
use avabond_core::{AuthPolicy, GameConfig, PlayerState, Stage, Timestamp};
use avabond_platform::client::DayLog;
use avabond_platform::dto::{AnswerRequest, CreatePlayer};
use avabond_platform::log::{parse_log, EventLog, LogError};
use avabond_platform::service::log_path;
use avabond_platform::snapshot::{load_state, SnapshotStore};
use avabond_platform::{ManualClock, PlatformConfig, Service, ServiceOptions};
use rayon::prelude::*;

const START: Timestamp = Timestamp(1_767_571_200_000);
const TOKEN: &str = "acceptance";

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("scoring table", Duration::from_secs(1), scoring_table),
        ("badge brute force", Duration::from_secs(5), badge_brute_force),
        ("challenge contract", Duration::from_secs(30), challenge_contract),
        ("oracle equivalence", Duration::from_secs(120), oracle_equivalence),
        ("attack-model ordering", Duration::from_secs(60), attack_ordering),
        ("rehearsal effect", Duration::from_secs(60), rehearsal_effect),
        ("scheduler timing", Duration::from_secs(60), scheduler_timing),
        ("replay determinism", Duration::from_secs(120), replay_determinism),
        ("end-to-end headless", Duration::from_secs(30), end_to_end),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let started = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = started.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} budget")),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!("{} {name}: {detail} ({:.2}s)", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn fresh_player(seed: u64) -> PlayerState {
    let schema = AvatarSchema::default_schema();
    PlayerState::new("p", generate_profile(&schema, seed).unwrap(), "UTC", Timestamp(0))
}

fn scoring_table() -> Outcome {
    let mut mismatches = Vec::new();
    for (kind, reward) in [(ChallengeKind::Standard, 10), (ChallengeKind::AvatarRecognition, 15), (ChallengeKind::AvatarRecall, 20)] {
        for balance in [0u32, 5, 10, 15, 20, 100] {
            for correct in [true, false] {
                let v = Verdict { correct, kind, canonical_answer_revealed: false, unspellable: false };
                let s = score_for(balance, "c", &v, Timestamp(0));
                let want = if correct { balance + reward } else { balance.saturating_sub(reward) };
                if s.balance_after != want || s.delta != i64::from(want) - i64::from(balance) {
                    mismatches.push(format!("{kind:?} {correct} at {balance}"));
                }
            }
        }
    }
    for (stage, cost) in [(Stage::Early, 30u32), (Stage::Late, 50)] {
        for balance in [0u32, cost - 1, cost, cost + 7] {
            let mut state = fresh_player(1);
            state.stage = stage;
            state.balance = balance;
            match purchase_hint(&mut state, "c", HintKind::VerbalCues, Timestamp(0)) {
                Ok((grant, score)) if balance >= cost && grant.cost == cost && score.delta == -i64::from(cost) => {}
                Err(_) if balance < cost && state.balance == balance => {}
                other => mismatches.push(format!("{stage:?} hint at {balance}: {other:?}")),
            }
        }
    }
    check(mismatches.is_empty(), format!("rewards 10/15/20, hint costs 30/50, {} mismatches {mismatches:?}", mismatches.len()))
}

struct BadgeWalk {
    quota: u32,
    len: usize,
    leaves: u64,
    mismatches: Vec<String>,
}

impl BadgeWalk {
    /// Depth-first over every correct/incorrect sequence, with the day rolling
    /// over at any point, sharing the state of common prefixes.
    fn visit(&mut self, state: &PlayerState, step: usize, day: i64, solved: u32, path: &str) {
        if step == self.len {
            self.leaves += 1;
            return;
        }
        let days: &[i64] = if day == 0 { &[0, 1] } else { &[1] };
        for &d in days {
            for correct in [true, false] {
                let mut next = state.clone();
                let solved = if d == day { solved } else { 0 } + u32::from(correct);
                let now = Timestamp(d * DAY_MS + 9 * HOUR_MS + step as i64);
                let v = Verdict { correct, kind: ChallengeKind::AvatarRecognition, canonical_answer_revealed: false, unspellable: false };
                apply_verdict(&mut next, "c", Some("f"), &v, now);
                let got: Vec<BadgeKind> = award_badges(&mut next, self.quota, now).iter().map(|b| b.kind).collect();
                let repeat = award_badges(&mut next, self.quota, now);
                let date = now.local_date(next.tz());
                let want: Vec<BadgeKind> = [(BadgeKind::Smiley, 1), (BadgeKind::Cake, self.quota.div_ceil(2)), (BadgeKind::Trophy, self.quota)]
                    .into_iter()
                    .filter(|(kind, threshold)| solved >= *threshold && !state.has_badge(*kind, date))
                    .map(|(kind, _)| kind)
                    .collect();
                // each kind must land exactly on the step that first reaches its threshold
                let first_reach: Vec<BadgeKind> = [(BadgeKind::Smiley, 1), (BadgeKind::Cake, self.quota.div_ceil(2)), (BadgeKind::Trophy, self.quota)]
                    .into_iter()
                    .filter(|(_, threshold)| correct && solved == *threshold)
                    .map(|(kind, _)| kind)
                    .collect();
                let path = format!("{path}{}{}", if d != day { "|" } else { "" }, if correct { '1' } else { '0' });
                if (got != want || got != first_reach || !repeat.is_empty()) && self.mismatches.len() < 5 {
                    self.mismatches.push(format!("q{} {path}: {got:?} want {want:?}", self.quota));
                }
                self.visit(&next, step + 1, d, solved, &path);
            }
        }
    }
}

fn badge_brute_force() -> Outcome {
    let template = fresh_player(2);
    let mut leaves = 0;
    let mut mismatches = Vec::new();
    for quota in 1u32..=10 {
        // one step past the trophy so a wrong answer can follow it
        let mut walk = BadgeWalk { quota, len: quota as usize + 1, leaves: 0, mismatches: Vec::new() };
        walk.visit(&template, 0, 0, 0, "");
        leaves += walk.leaves;
        mismatches.extend(walk.mismatches);
    }
    check(mismatches.is_empty(), format!("{leaves} trajectories over quotas 1..=10, mismatches {mismatches:?}"))
}

fn spellable(pool: &[char], answer: &str) -> bool {
    let mut rest = pool.to_vec();
    answer.chars().filter(|c| c.is_alphabetic()).map(|c| c.to_ascii_uppercase()).all(|c| match rest.iter().position(|x| *x == c) {
        Some(i) => {
            rest.swap_remove(i);
            true
        }
        None => false,
    })
}

fn collect_strings(v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::String(s) => out.push(s.clone()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| collect_strings(x, out)),
        serde_json::Value::Object(o) => o.values().for_each(|x| collect_strings(x, out)),
        _ => {}
    }
}

fn contract_violations(c: &Challenge) -> Vec<String> {
    let mut bad = Vec::new();
    let json = c.client_json();
    if json != c.client_json() || serde_json::to_string(c).unwrap() != serde_json::to_string(c).unwrap() {
        bad.push("unstable serialization".to_string());
    }
    if matches!(c.kind, ChallengeKind::Standard | ChallengeKind::AvatarRecall) {
        match &c.letter_pool {
            Some(pool) if pool.len() == 12 => {
                if !spellable(pool, &c.answer) {
                    bad.push("unspellable".into());
                }
            }
            _ => bad.push("pool size".into()),
        }
    }
    let target = normalize_answer(&c.answer);
    if c.kind == ChallengeKind::AvatarRecognition {
        let n = c.options.iter().flatten().filter(|o| normalize_answer(o) == target).count();
        if n != 1 {
            bad.push(format!("answer {n} times in options"));
        }
    }
    if c.kind.is_avatar() {
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        if value.as_object().unwrap().keys().any(|k| k.contains("answer") || k.contains("length")) {
            bad.push("answer or length serialized".into());
        }
        let mut strings = Vec::new();
        collect_strings(&value, &mut strings);
        let seen = strings.iter().filter(|s| normalize_answer(s) == target).count();
        if seen != usize::from(c.kind == ChallengeKind::AvatarRecognition) {
            bad.push(format!("answer text appears {seen} times"));
        }
    }
    bad
}

fn challenge_contract() -> Outcome {
    let schema = AvatarSchema::default_schema();
    let bank = ChallengeBank::default_bank();
    let config = ChallengeConfig::default();
    let violations: Vec<String> = (0..10_000u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut stream = SeededStream::new(i, "acceptance-contract");
            let seed = stream.next_u64();
            let c = match i % 3 {
                0 => build_standard_challenge(&bank.entries[stream.index(bank.entries.len())], seed, &config).unwrap(),
                n => {
                    let profile = generate_profile(&schema, seed).unwrap();
                    let field = &schema.fields[stream.index(schema.fields.len())].field_id;
                    let mode = if n == 1 { AvatarMode::Recognition } else { AvatarMode::Recall };
                    build_avatar_challenge(&profile, &schema, field, mode, seed, &config).unwrap()
                }
            };
            contract_violations(&c).into_iter().map(move |v| format!("{}: {v}", c.challenge_id))
        })
        .collect();
    check(violations.is_empty(), format!("10000 challenges, {} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()))
}

fn oracle_equivalence() -> Outcome {
    let grid: Vec<(Vec<u64>, usize, u64)> = vec![
        (vec![16], 1, 3),
        (vec![8, 8], 2, 1),
        (vec![8, 8], 1, 1),
        (vec![8, 8], 1, 4),
        (vec![8, 8], 2, 10),
        (vec![4, 4, 4], 1, 1),
        (vec![4, 4, 4], 2, 2),
        (vec![4, 4, 4], 3, 5),
        (vec![4, 4, 4], 2, 8),
        (vec![6, 5, 4], 2, 3),
        (vec![6, 5, 4], 3, 12),
        (vec![10, 10, 10], 1, 2),
        (vec![10, 10, 10], 2, 5),
        (vec![10, 10, 10], 3, 20),
        (vec![16, 16, 16], 2, 10),
        (vec![16, 16, 16], 3, 50),
        (vec![3, 3, 3, 3], 2, 2),
        (vec![3, 3, 3, 3], 3, 4),
        (vec![3, 3, 3, 3], 4, 9),
        (vec![5, 7, 9, 11], 3, 6),
        (vec![20, 20], 1, 3),
        (vec![64], 1, 1),
        (vec![64, 64, 64], 3, 3),
        (vec![2, 2, 2, 2, 2], 4, 3),
    ];
    let trials = 1_000_000;
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    for (i, (pools, k, budget)) in grid.iter().enumerate() {
        let analytic: f64 = success_probability_for_pools(pools, *k, *budget);
        let mc = simulate_pool_attack(pools, *k, AttackerModel::Uniform, *budget, trials, 2026 + i as u64).unwrap();
        let se = (analytic * (1.0 - analytic) / trials as f64).sqrt();
        let z = if se > 0.0 { (mc.rate - analytic).abs() / se } else if mc.rate == analytic { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        if z > 3.0 {
            misses.push(format!("{pools:?} k={k} B={budget}: mc {:.5} vs {analytic:.5} ({z:.2} SE)", mc.rate));
        }
    }
    let closed = [(vec![16u64], 1usize, 3u64, 3.0 / 16.0), (vec![8, 8], 2, 1, 1.0 / 64.0)];
    for (pools, k, b, want) in closed {
        let got: f64 = success_probability_for_pools(&pools, k, b);
        let mc = simulate_pool_attack(&pools, k, AttackerModel::Uniform, b, trials, 7).unwrap();
        if (got - want).abs() > 0.005 || (mc.rate - want).abs() > 0.005 {
            misses.push(format!("{pools:?}: analytic {got} mc {} vs {want}", mc.rate));
        }
    }
    check(misses.is_empty(), format!("{} grid points at 10^6 trials, worst {worst:.2} SE, 3/16 and 1/64 reproduced; misses {misses:?}", grid.len()))
}

fn attack_ordering() -> Outcome {
    let schema = AvatarSchema::default_schema();
    let policy = AuthPolicy::default();
    let profile = generate_profile(&schema, 1).unwrap();
    let questions = select_questions(&profile, &schema, &policy, 1).unwrap();
    let trials = 200_000;
    let mut lines = Vec::new();
    let mut ok = true;
    for budget in [3u64, 10, 30] {
        let uniform = simulate_guessing_attack(&schema, &questions, &policy, AttackerModel::Uniform, budget, trials, 99).unwrap();
        let zipf = simulate_guessing_attack(&schema, &questions, &policy, AttackerModel::Zipf { s: 1.0 }, budget, trials, 99).unwrap();
        ok &= zipf.rate > uniform.rate;
        lines.push(format!("B={budget}: zipf {:.5} vs uniform {:.6}", zipf.rate, uniform.rate));
    }
    check(ok, format!("questions {questions:?}; {}", lines.join(", ")))
}

fn mean_checkpoint_recall(quota: u32, params: &MemoryParams<f64>, seeds: &[u64]) -> Vec<f64> {
    let schema = AvatarSchema::default_schema();
    let bank = ChallengeBank::default_bank();
    let config = GameConfig::default().with_quota(quota);
    seeds
        .par_iter()
        .map(|seed| {
            let out = simulate_player(&schema, &bank, &config, params, 90, &SessionPolicy::default(), *seed).unwrap();
            out.checkpoints.iter().map(|c| c.recall).sum::<f64>() / out.checkpoints.len() as f64
        })
        .collect()
}

fn rehearsal_effect() -> Outcome {
    let seeds: Vec<u64> = (0..50).collect();
    let params = MemoryParams::default();
    let with = mean_checkpoint_recall(6, &params, &seeds);
    let without = mean_checkpoint_recall(0, &params, &seeds);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&with), mean(&without));

    let schema = AvatarSchema::default_schema();
    let bank = ChallengeBank::default_bank();
    let neutral = MemoryParams::neutral(params.initial_half_life_hours);
    let worst = seeds
        .par_iter()
        .map(|seed| {
            let out = simulate_player(&schema, &bank, &GameConfig::default(), &neutral, 90, &SessionPolicy::default(), *seed).unwrap();
            out.checkpoints
                .iter()
                .map(|c| (c.recall - pure_decay_recall(&neutral, c.day)).abs())
                .chain([(out.final_recall - pure_decay_recall(&neutral, 90)).abs()])
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    check(
        a > b && worst <= 1e-9,
        format!("50 seeds, 90 days: quota 6 mean checkpoint recall {a:.6} vs quota 0 {b:.6} (gap {:.6}); neutral max deviation {worst:.2e}", a - b),
    )
}

fn scheduler_timing() -> Outcome {
    let schema = AvatarSchema::default_schema();
    let bank = ChallengeBank::default_bank();
    let config = GameConfig::default();
    let mut violations = Vec::new();
    let mut total = 0;
    for seed in 0..100u64 {
        let mut state = PlayerState::new("p", generate_profile(&schema, seed).unwrap(), "UTC", Timestamp(0));
        let mut dice = SeededStream::new(seed, "attendance");
        let mut sent: Vec<i64> = Vec::new();
        let mut tallies = 0;
        for minute_block in 0..(30 * 24 * 4) {
            let now = Timestamp(minute_block * 15 * 60 * 1000);
            if minute_block % 96 == 76 && dice.bernoulli(0.6) {
                let plan = avabond_core::scheduler::next_session_plan(&state, &schema, &bank, &config, now, dice.next_u64()).unwrap();
                let challenges = avabond_core::scheduler::materialize(&plan, &state.profile, &schema, &bank, &config.challenge).unwrap();
                avabond_core::scheduler::issue_session(&mut state, &plan, &challenges, now);
                let outcomes: Vec<_> = plan
                    .items
                    .iter()
                    .zip(&challenges)
                    .map(|(i, c)| (i.clone(), avabond_core::check_answer(c, &c.answer)))
                    .collect();
                avabond_core::scheduler::record_session(&mut state, &plan.session_id, &outcomes, &config, now).unwrap();
                tallies += 1;
            }
            let due = due_notifications(&state, now);
            sent.extend(due.iter().filter(|n| n.kind == NotificationKind::Reminder).map(|_| now.millis()));
            mark_notified(&mut state, &due, now);
        }
        total += sent.len();
        for w in sent.windows(2) {
            if w[1] - w[0] < DAY_MS {
                violations.push(format!("seed {seed}: reminders {}ms apart", w[1] - w[0]));
            }
        }
        let _ = tallies;
    }
    let mut state = fresh_player(3);
    state.last_played = Some(Timestamp(0));
    let early = due_notifications(&state, Timestamp(DAY_MS - 60_000));
    let exact = due_notifications(&state, Timestamp(DAY_MS));
    if !early.is_empty() {
        violations.push("reminder at 23h59m".into());
    }
    if exact.iter().filter(|n| n.kind == NotificationKind::Reminder).count() != 1 {
        violations.push("no reminder at exactly 24h".into());
    }
    check(
        violations.is_empty(),
        format!("100 players x 30 days, {total} reminders, 23h59m none, 24h one; violations {violations:?}"),
    )
}

fn open_service(dir: &Path, config: PlatformConfig, clock: Arc<ManualClock>) -> Service {
    let mut options = ServiceOptions::new(dir);
    options.config = config;
    options.operator_token = Some(TOKEN.into());
    Service::open(options, clock).unwrap().0
}

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(START));
    let config = PlatformConfig { fsync: false, ..PlatformConfig::default() };
    let service = open_service(dir.path(), config.clone(), clock.clone());
    let bank = ChallengeBank::default_bank();
    let created = service.create_player(CreatePlayer { seed: Some(77), timezone: Some("Asia/Tokyo".into()) }).unwrap();
    let player = avabond_platform::client::ScriptedPlayer::new(&created, &bank);
    let id = created.player_id.clone();
    let mut day = 0u64;
    while service.state(&id).map(|_| ()).is_ok() && log_len(dir.path()) < 10_250 {
        service.notifications(&id).unwrap();
        let view = service.session(&id).unwrap();
        for (i, c) in view.challenges.iter().enumerate() {
            if (day + i as u64).is_multiple_of(5) {
                let _ = service.answer(&id, &c.challenge_id, AnswerRequest { submission: "wrong".into() });
            }
            service.answer(&id, &c.challenge_id, AnswerRequest { submission: player.respond(c).unwrap() }).unwrap();
        }
        if day % 7 == 3 {
            service.start_reset(&id).unwrap();
        }
        day += 1;
        clock.advance(DAY_MS + (day as i64 % 5) * HOUR_MS);
    }
    drop(service);

    let (log, _) = EventLog::open(log_path(dir.path()), false).unwrap();
    let records = log.records(&id);
    let snap = SnapshotStore::new(dir.path().join("snapshots")).unwrap().load(&id).expect("snapshot");
    let full = load_state(records, &id, None, &config.game).unwrap().to_canonical_json();
    let fast = load_state(records, &id, Some(&snap), &config.game).unwrap().to_canonical_json();
    let reopened = open_service(dir.path(), config.clone(), clock).state(&id).unwrap().to_canonical_json();

    let mut bytes = std::fs::read(log_path(dir.path())).unwrap();
    let middle = bytes.len() / 2;
    let target = middle + bytes[middle..].iter().position(|b| *b == b'"').unwrap() + 1;
    bytes[target] ^= 0x20;
    let rejected = matches!(parse_log(&bytes), Err(LogError::CorruptLog { .. }));

    check(
        records.len() >= 10_000 && full == fast && full == reopened && rejected,
        format!(
            "{} events, snapshot at {}, tail {}; full == snapshot+tail: {}, reopen identical: {}, corrupted byte rejected: {rejected}",
            records.len(),
            snap.as_of_sequence,
            records.len() as u64 - snap.as_of_sequence,
            full == fast,
            full == reopened
        ),
    )
}

fn log_len(dir: &Path) -> usize {
    std::fs::read(log_path(dir)).map_or(0, |b| b.iter().filter(|c| **c == b'\n').count())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(START));
    let mut config = PlatformConfig { fsync: false, ..PlatformConfig::default() };
    // keep the skill path out of reach so the stage change comes from days played
    config.game.progression.skill_window = 256;
    let service = Arc::new(open_service(dir.path(), config.clone(), clock));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    runtime.spawn(avabond_platform::api::serve(listener, service.clone()));

    let output = Command::new(env!("CARGO_BIN_EXE_avabond"))
        .args(["play", "--url", &url, "--days", "7", "--seed", "4", "--operator-token", TOKEN])
        .output()
        .unwrap();
    if !output.status.success() {
        return Err(format!("play failed: {}", String::from_utf8_lossy(&output.stderr)));
    }
    let stdout = String::from_utf8(output.stdout).unwrap();
    let mut lines = stdout.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    let player = header["player_id"].as_str().unwrap().to_string();
    let days: Vec<DayLog> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    let stages: Vec<Stage> = days.iter().map(|d| d.stage).collect();
    let threshold = config.game.progression.days_threshold;
    let late_from = stages.iter().position(|s| *s == Stage::Late).map(|i| i + 1);

    let records = std::fs::read(log_path(dir.path())).unwrap();
    let (records, _) = parse_log(&records).unwrap();
    let end = START + (7 * DAY_MS - 1);
    let week = monitoring_report(&records, &player, Period::Week, end, &config.game.progression).unwrap();
    let day_totals: Vec<(u32, u32)> = (1..=7)
        .map(|d| {
            let r = monitoring_report(&records, &player, Period::Day, START + (d * DAY_MS - 1), &config.game.progression).unwrap();
            (r.solved_avatar_correct, r.solved_avatar_total)
        })
        .collect();
    let sum_correct: u32 = day_totals.iter().map(|d| d.0).sum();
    let sum_total: u32 = day_totals.iter().map(|d| d.1).sum();
    let series_match = week.series.iter().zip(&day_totals).all(|(p, d)| p.count == d.0) && week.series.len() == 7;

    // the CLI report reads the same log
    let cli = Command::new(env!("CARGO_BIN_EXE_avabond"))
        .args(["report", "--player", &player, "--period", "week", "--at", &end.millis().to_string()])
        .arg("--data-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    let cli_week: serde_json::Value = serde_json::from_slice(&cli.stdout).unwrap_or_default();
    let cli_ok = cli_week["solved_avatar_correct"] == week.solved_avatar_correct;
    runtime.shutdown_background();

    check(
        days.len() == 7
            && late_from == Some(threshold)
            && week.stage == Stage::Late
            && week.solved_avatar_correct == sum_correct
            && week.solved_avatar_total == sum_total
            && series_match
            && cli_ok,
        format!(
            "7 days via CLI, Late from day {late_from:?} (threshold {threshold}), week {}/{} == sum of days {sum_correct}/{sum_total}, series per day {series_match}, CLI report agrees {cli_ok}",
            week.solved_avatar_correct, week.solved_avatar_total
        ),
    )
}
