//! Persuasive messages and self-monitoring reports.

use std::collections::BTreeSet;

use chrono::{Datelike, Duration, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::challenge::ChallengeKind;
use crate::events::{Event, EventRecord};
use crate::progression::{stage_from, ProgressionConfig, Stage};
use crate::state::PlayerState;
use crate::time::{parse_tz, Timestamp};

/// Points between score milestones.
pub const MILESTONE_STEP: u32 = 500;

/// Consecutive missed days that count as a lapse.
pub const LAPSE_DAYS: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngagementError {
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "trigger", rename_all = "snake_case")]
pub enum CueTrigger {
    DailyReturn,
    Milestone,
    IncorrectAnswer,
    Lapse { days: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Positive,
    Neutral,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialCueMessage {
    pub trigger: CueTrigger,
    pub text: String,
    pub severity: Severity,
}

/// Plain-text emoticon tokens; a UI may swap them for graphics.
pub const EMOTICONS: &[&str] = &[":)", ":D", ";)", ":(", ":'(", "\\o/", "<3", ":-O"];

const DAILY_RETURN: &[(&str, Severity)] = &[
    ("Welcome back, nice to see you again today :)", Severity::Positive),
    ("Another day, another round. Well done for coming back :D", Severity::Positive),
    ("You showed up again. Your avatar says thanks <3", Severity::Positive),
];
const MILESTONE: &[(&str, Severity)] = &[
    ("Milestone reached! Round of applause \\o/", Severity::Positive),
    ("Look at that progress, bravo :D", Severity::Positive),
];
const INCORRECT: &[(&str, Severity)] = &[
    ("Not quite, but you are getting closer ;)", Severity::Positive),
    ("Almost! Take another look at the pictures :)", Severity::Neutral),
    ("Keep going, every try helps you remember :-O", Severity::Neutral),
];
const LAPSE: &[(&str, Severity)] = &[
    ("We missed you for {days} days :(", Severity::Negative),
    ("{days} days without a visit. Your avatar feels forgotten :'(", Severity::Negative),
];

fn templates(trigger: CueTrigger) -> &'static [(&'static str, Severity)] {
    match trigger {
        CueTrigger::DailyReturn => DAILY_RETURN,
        CueTrigger::Milestone => MILESTONE,
        CueTrigger::IncorrectAnswer => INCORRECT,
        CueTrigger::Lapse { .. } => LAPSE,
    }
}

/// Every template, for auditing.
pub fn all_templates() -> impl Iterator<Item = &'static str> {
    [DAILY_RETURN, MILESTONE, INCORRECT, LAPSE].into_iter().flatten().map(|(t, _)| *t)
}

/// Pick a message for `trigger`, rotating templates by the number of days played.
pub fn social_cue(trigger: CueTrigger, state: &PlayerState) -> SocialCueMessage {
    let options = templates(trigger);
    let (template, severity) = options[state.days_played.len() % options.len()];
    let text = match trigger {
        CueTrigger::Lapse { days } => template.replace("{days}", &days.to_string()),
        _ => template.to_string(),
    };
    SocialCueMessage { trigger, text, severity }
}

/// Whole local days missed since the player last played, when it is a lapse.
pub fn lapse_days(state: &PlayerState, now: Timestamp) -> Option<u32> {
    let last = state.days_played.iter().next_back()?;
    let today = now.local_date(state.tz());
    let missed = (today - *last).num_days() - 1;
    (missed >= i64::from(LAPSE_DAYS)).then_some(missed as u32)
}

/// Score milestones crossed going from `before` to `after`.
pub fn milestones_crossed(before: u32, after: u32) -> Vec<u32> {
    (before / MILESTONE_STEP + 1..=after / MILESTONE_STEP).map(|m| m * MILESTONE_STEP).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Day,
    Week,
    Month,
}

impl std::str::FromStr for Period {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "day" => Ok(Period::Day),
            "week" => Ok(Period::Week),
            "month" => Ok(Period::Month),
            other => Err(format!("unknown period `{other}` (day|week|month)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageDistance {
    Remaining(u32),
    #[serde(with = "already_late")]
    AlreadyLate,
}

mod already_late {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("AlreadyLate")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "AlreadyLate" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("expected AlreadyLate"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub bucket: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitoringReport {
    pub period: Period,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub solved_avatar_correct: u32,
    pub solved_avatar_total: u32,
    pub score: u32,
    pub stage: Stage,
    /// Days still to play before recall challenges unlock by persistence.
    pub remaining_to_next_stage: StageDistance,
    /// Recognition answers recorded towards the skill window.
    pub skill_answers_recorded: usize,
    pub skill_window: usize,
    pub series: Vec<SeriesPoint>,
}

/// Inclusive local-date range of the period containing `date`: the day, the
/// ISO week (Monday to Sunday), or the calendar month.
pub fn period_range(period: Period, date: NaiveDate) -> (NaiveDate, NaiveDate) {
    match period {
        Period::Day => (date, date),
        Period::Week => {
            let start = date - Duration::days(i64::from(date.weekday().num_days_from_monday()));
            (start, start + Duration::days(6))
        }
        Period::Month => {
            let start = date.with_day(1).expect("day 1 exists");
            let next = if start.month() == 12 {
                NaiveDate::from_ymd_opt(start.year() + 1, 1, 1)
            } else {
                NaiveDate::from_ymd_opt(start.year(), start.month() + 1, 1)
            }
            .expect("valid month");
            (start, next.pred_opt().expect("valid date"))
        }
    }
}

/// Build a report purely by folding the player's events up to `now`.
pub fn monitoring_report(
    events: &[EventRecord],
    player_id: &str,
    period: Period,
    now: Timestamp,
    config: &ProgressionConfig,
) -> Result<MonitoringReport, EngagementError> {
    let mine: Vec<&EventRecord> = events.iter().filter(|r| r.player_id == player_id && r.timestamp <= now).collect();
    let tz = mine
        .iter()
        .find_map(|r| match &r.event {
            Event::ProfileCreated { timezone, .. } => Some(parse_tz(timezone).unwrap_or(chrono_tz::Tz::UTC)),
            _ => None,
        })
        .ok_or_else(|| EngagementError::UnknownPlayer(player_id.to_string()))?;

    let today = now.local_date(tz);
    let (start, end) = period_range(period, today);
    let mut series: Vec<SeriesPoint> = match period {
        Period::Day => (0..24).map(|h| SeriesPoint { bucket: format!("{h:02}:00"), count: 0 }).collect(),
        _ => start
            .iter_days()
            .take_while(|d| *d <= end)
            .map(|d| SeriesPoint { bucket: d.to_string(), count: 0 })
            .collect(),
    };

    let mut score = 0;
    let mut stage = Stage::Early;
    let mut days = BTreeSet::new();
    let mut recognition = Vec::new();
    let (mut correct, mut total) = (0u32, 0u32);
    for record in &mine {
        match &record.event {
            Event::AnswerJudged { verdict, score: s, .. } => {
                score = s.balance_after;
                let local = record.timestamp.to_utc().with_timezone(&tz);
                let date = local.date_naive();
                days.insert(date);
                if verdict.kind == ChallengeKind::AvatarRecognition {
                    recognition.push(verdict.correct);
                }
                stage = stage_from(stage, days.len(), &recognition, config);
                if verdict.kind.is_avatar() && date >= start && date <= end {
                    total += 1;
                    if verdict.correct {
                        correct += 1;
                        let idx = match period {
                            Period::Day => local.hour() as usize,
                            _ => (date - start).num_days() as usize,
                        };
                        series[idx].count += 1;
                    }
                }
            }
            Event::HintPurchased { score: s, .. } => score = s.balance_after,
            _ => {}
        }
    }

    let remaining_to_next_stage = match stage {
        Stage::Late => StageDistance::AlreadyLate,
        Stage::Early => StageDistance::Remaining(config.days_threshold.saturating_sub(days.len()) as u32),
    };
    Ok(MonitoringReport {
        period,
        start,
        end,
        solved_avatar_correct: correct,
        solved_avatar_total: total,
        score,
        stage,
        remaining_to_next_stage,
        skill_answers_recorded: recognition.len().min(config.skill_window),
        skill_window: config.skill_window,
        series,
    })
}
