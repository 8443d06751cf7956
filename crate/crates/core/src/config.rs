use serde::{Deserialize, Serialize};

use crate::challenge::ChallengeConfig;
use crate::progression::ProgressionConfig;
use crate::scheduler::SchedulerConfig;

/// Everything that shapes game behavior for a player.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub progression: ProgressionConfig,
    pub scheduler: SchedulerConfig,
    pub challenge: ChallengeConfig,
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.progression.validate().map_err(|e| e.to_string())?;
        self.scheduler.validate()?;
        self.challenge.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn with_quota(mut self, quota: u32) -> Self {
        self.progression.daily_quota = quota;
        self
    }
}
