use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use avabond_core::attack::{simulate_guessing_attack, AttackerModel};
use avabond_core::avatar::{field_entropy, question_set_entropy};
use avabond_core::engagement::{monitoring_report, Period};
use avabond_core::fallback::{guess_success_probability, select_questions};
use avabond_core::memory::MemoryParams;
use avabond_core::simulation::{sweep_configs, sweep_to_csv, SweepRow};
use avabond_core::{generate_profile, AuthPolicy, AvatarSchema, ChallengeBank, GameConfig, SessionPolicy, Timestamp};
use avabond_platform::audit::audit_data_dir;
use avabond_platform::client::{ApiClient, ScriptedPlayer};
use avabond_platform::log::parse_log;
use avabond_platform::service::log_path;
use avabond_platform::{Clock, ManualClock, PlatformConfig, Service, ServiceOptions, SystemClock};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "avabond", version, about = "Avatar-based fallback authentication game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "AVABOND_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, env = "AVABOND_DATA_DIR", default_value = "avabond-data")]
        data_dir: PathBuf,
        /// Timezone for players who do not pick one.
        #[arg(long, env = "AVABOND_TZ")]
        timezone: Option<String>,
        /// TOML with `[game]`, `[auth]`, `fsync` and `snapshot_every`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, env = "AVABOND_OPERATOR_TOKEN")]
        operator_token: Option<String>,
        /// Start a controllable clock at this epoch-ms instant (0 means now).
        #[arg(long)]
        manual_clock: Option<i64>,
    },
    /// Generate an avatar profile and show its entropy.
    GenAvatar {
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Sweep game configurations over simulated players.
    Simulate {
        /// TOML with `[[grid]]` game configs and optional `[memory]`, `[policy]`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed range, `A..B` (exclusive) or `A..=B`.
        #[arg(long, default_value = "0..50")]
        seeds: String,
        #[arg(long, default_value_t = 90)]
        horizon_days: u32,
        /// CSV table; a JSON summary is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Monte Carlo guessing attack against a question set.
    Attack {
        #[arg(long)]
        schema: Option<PathBuf>,
        /// uniform, zipf, or zipf:S
        #[arg(long, default_value = "uniform")]
        model: String,
        #[arg(long, default_value_t = 10)]
        budget: u64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated field ids; chosen by policy when absent.
        #[arg(long)]
        questions: Option<String>,
    },
    /// Self-monitoring report from the log, or a ranked sweep table.
    Report {
        #[arg(long)]
        player: Option<String>,
        #[arg(long, default_value = "week")]
        period: String,
        #[arg(long, env = "AVABOND_DATA_DIR", default_value = "avabond-data")]
        data_dir: PathBuf,
        /// Report time in epoch ms (defaults to now).
        #[arg(long)]
        at: Option<i64>,
        /// JSON written by `simulate`.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Checksum and replay audit of a data directory.
    VerifyLog {
        #[arg(long, env = "AVABOND_DATA_DIR", default_value = "avabond-data")]
        data_dir: PathBuf,
    },
    /// Scripted player that plays through a running server.
    Play {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
        #[arg(long, default_value_t = 7)]
        days: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "AVABOND_OPERATOR_TOKEN")]
        operator_token: String,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepFile {
    grid: Vec<GameConfig>,
    memory: MemoryParams<f64>,
    policy: SessionPolicy,
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepSummary {
    horizon_days: u32,
    seeds: Vec<u64>,
    memory: MemoryParams<f64>,
    policy: SessionPolicy,
    grid: Vec<GameConfig>,
    rows: Vec<SweepRow>,
}

fn load_schema(path: Option<&Path>) -> anyhow::Result<AvatarSchema> {
    Ok(match path {
        Some(p) => AvatarSchema::load(p)?,
        None => AvatarSchema::default_schema(),
    })
}

fn load_bank(path: Option<&Path>) -> anyhow::Result<ChallengeBank> {
    Ok(match path {
        Some(p) => ChallengeBank::load(p)?,
        None => ChallengeBank::default_bank(),
    })
}

fn parse_seeds(range: &str) -> anyhow::Result<Vec<u64>> {
    let (a, b, inclusive) = if let Some((a, b)) = range.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = range.split_once("..") {
        (a, b, false)
    } else {
        let n: u64 = range.parse().context("seed range")?;
        return Ok(vec![n]);
    };
    let a: u64 = a.trim().parse().context("seed range start")?;
    let b: u64 = b.trim().parse().context("seed range end")?;
    let seeds: Vec<u64> = if inclusive { (a..=b).collect() } else { (a..b).collect() };
    if seeds.is_empty() {
        bail!("empty seed range `{range}`");
    }
    Ok(seeds)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Serve { port, bind, data_dir, timezone, config, schema, bank, operator_token, manual_clock } => {
            let mut options = ServiceOptions::new(&data_dir);
            if let Some(path) = config {
                options.config = PlatformConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
            }
            if let Some(tz) = timezone {
                options.config.game.progression.timezone = tz;
            }
            options.schema = load_schema(schema.as_deref())?;
            options.bank = load_bank(bank.as_deref())?;
            options.operator_token = operator_token;
            let clock: Arc<dyn Clock> = match manual_clock {
                Some(0) => Arc::new(ManualClock::new(Timestamp::now())),
                Some(ms) => Arc::new(ManualClock::new(Timestamp(ms))),
                None => Arc::new(SystemClock),
            };
            let (service, recovery) = Service::open(options, clock)?;
            if recovery.truncated_bytes > 0 {
                tracing::warn!(bytes = recovery.truncated_bytes, "recovered from a torn log write");
            }
            let listener = tokio::net::TcpListener::bind((bind.as_str(), port)).await?;
            tracing::info!(addr = %listener.local_addr()?, data_dir = %data_dir.display(), "serving");
            tokio::select! {
                r = avabond_platform::api::serve(listener, Arc::new(service)) => r?,
                _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
            }
        }
        Command::GenAvatar { schema, seed } => {
            let schema = load_schema(schema.as_deref())?;
            let profile = generate_profile(&schema, seed)?;
            let entropy: Vec<serde_json::Value> = schema
                .fields
                .iter()
                .map(|f| {
                    serde_json::json!({
                        "field_id": f.field_id,
                        "question": f.question_text,
                        "answer": profile.assignments[&f.field_id],
                        "bits": field_entropy::<f64>(&schema, &f.field_id).unwrap_or(0.0),
                    })
                })
                .collect();
            let ids: Vec<&str> = schema.field_ids().collect();
            print_json(&serde_json::json!({
                "profile_id": profile.profile_id,
                "schema_id": profile.schema_id,
                "seed": profile.seed,
                "total_bits": question_set_entropy::<f64, _>(&schema, &ids)?,
                "fields": entropy,
            }))?;
        }
        Command::Simulate { config, seeds, horizon_days, out, schema } => {
            let file: SweepFile = match config {
                Some(p) => toml::from_str(&std::fs::read_to_string(&p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => SweepFile {
                    grid: [0, 2, 6].into_iter().map(|q| GameConfig::default().with_quota(q)).collect(),
                    ..SweepFile::default()
                },
            };
            let seeds = parse_seeds(&seeds)?;
            let schema = load_schema(schema.as_deref())?;
            let bank = ChallengeBank::default_bank();
            let rows = sweep_configs(&schema, &bank, &file.grid, &file.memory, &file.policy, &seeds, horizon_days)?;
            let csv = sweep_to_csv(&rows);
            let summary = SweepSummary {
                horizon_days,
                seeds,
                memory: file.memory,
                policy: file.policy,
                grid: file.grid,
                rows,
            };
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv)?;
                    let json_path = path.with_extension("json");
                    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)?)?;
                    eprintln!("wrote {} and {}", path.display(), json_path.display());
                }
                None => print!("{csv}"),
            }
        }
        Command::Attack { schema, model, budget, trials, seed, k, m, questions } => {
            let schema = load_schema(schema.as_deref())?;
            let model: AttackerModel = model.parse().map_err(anyhow::Error::msg)?;
            let mut policy = AuthPolicy::default();
            let question_set: Vec<String> = match questions {
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
                None => {
                    if let Some(m) = m {
                        policy.m = m;
                    }
                    policy.k = k.unwrap_or(policy.m).min(policy.m);
                    let profile = generate_profile(&schema, seed)?;
                    select_questions(&profile, &schema, &policy, seed)?
                }
            };
            policy.m = question_set.len();
            policy.k = k.unwrap_or(policy.m).min(policy.m);
            let result = simulate_guessing_attack(&schema, &question_set, &policy, model, budget, trials, seed)?;
            let analytic: f64 = guess_success_probability(&schema, &question_set, &policy, budget)?;
            print_json(&serde_json::json!({
                "questions": question_set,
                "k": policy.k,
                "model": model,
                "budget": budget,
                "entropy_bits": question_set_entropy::<f64, _>(&schema, &question_set)?,
                "uniform_closed_form": analytic,
                "monte_carlo": result,
            }))?;
        }
        Command::Report { player, period, data_dir, at, sweep } => {
            if let Some(path) = sweep {
                let summary: SweepSummary = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
                println!("horizon {} days, {} seeds", summary.horizon_days, summary.seeds.len());
                println!("{:>4} {:>6} {:>5} {:>8} {:>12} {:>10}", "rank", "config", "quota", "recall", "sessions", "reminders");
                for r in &summary.rows {
                    println!(
                        "{:>4} {:>6} {:>5} {:>8.4} {:>12.2} {:>10.2}",
                        r.rank, r.config_index, r.daily_quota, r.mean_final_recall, r.mean_sessions_played, r.mean_reminders_sent
                    );
                }
                return Ok(());
            }
            let Some(player) = player else { bail!("give --player or --sweep") };
            let period: Period = period.parse().map_err(anyhow::Error::msg)?;
            let bytes = std::fs::read(log_path(&data_dir)).with_context(|| format!("reading {}", data_dir.display()))?;
            let (records, _) = parse_log(&bytes)?;
            let now = at.map_or_else(Timestamp::now, Timestamp);
            let report = monitoring_report(&records, &player, period, now, &GameConfig::default().progression)?;
            print_json(&report)?;
        }
        Command::VerifyLog { data_dir } => {
            let report = audit_data_dir(&data_dir, &GameConfig::default())?;
            print_json(&report)?;
            if !report.ok() {
                bail!("log audit failed");
            }
        }
        Command::Play { url, days, seed, operator_token, bank } => {
            let bank = load_bank(bank.as_deref())?;
            let client = ApiClient::new(url).with_operator_token(operator_token);
            let created = client.create_player(seed, None).await?;
            println!("{}", serde_json::json!({ "player_id": created.player_id }));
            let player = ScriptedPlayer::new(&created, &bank);
            for day in player.play_days(&client, days).await? {
                println!("{}", serde_json::to_string(&day)?);
            }
        }
    }
    Ok(())
}
