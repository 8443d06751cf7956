//! Per-player state snapshots.

use std::io;
use std::path::{Path, PathBuf};

use avabond_core::events::ReplayError;
use avabond_core::{replay, EventRecord, GameConfig, PlayerState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Snapshot cadence: one per this many events of a player.
pub const SNAPSHOT_EVERY: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub player_id: String,
    pub as_of_sequence: u64,
    pub state: PlayerState,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("snapshot for `{player}` is at sequence {as_of}, beyond the log's {last}")]
    SnapshotAhead { player: String, as_of: u64, last: u64 },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Rebuild a player's state from their records (in sequence order),
/// starting from `snapshot` if given.
pub fn load_state(
    records: &[EventRecord],
    player_id: &str,
    snapshot: Option<&Snapshot>,
    config: &GameConfig,
) -> Result<PlayerState, LoadError> {
    if records.is_empty() {
        return Err(LoadError::UnknownPlayer(player_id.to_string()));
    }
    match snapshot.filter(|s| s.player_id == player_id) {
        None => Ok(replay(None, records, config)?),
        Some(snap) => {
            let last = records.len() as u64;
            if snap.as_of_sequence > last {
                return Err(LoadError::SnapshotAhead {
                    player: player_id.to_string(),
                    as_of: snap.as_of_sequence,
                    last,
                });
            }
            let tail = &records[snap.as_of_sequence as usize..];
            Ok(replay(Some(snap.state.clone()), tail, config)?)
        }
    }
}

/// Snapshot files, one per player, replaced atomically.
#[derive(Debug, Clone)]
pub struct SnapshotStore {
    dir: PathBuf,
}

impl SnapshotStore {
    pub fn new(dir: impl AsRef<Path>) -> io::Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    fn path(&self, player_id: &str) -> PathBuf {
        let safe: String = player_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        self.dir.join(format!("{safe}.json"))
    }

    pub fn save(&self, snapshot: &Snapshot) -> io::Result<()> {
        let path = self.path(&snapshot.player_id);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(snapshot).map_err(io::Error::other)?)?;
        std::fs::rename(tmp, path)
    }

    /// The stored snapshot, or `None` if absent or unreadable.
    pub fn load(&self, player_id: &str) -> Option<Snapshot> {
        let bytes = std::fs::read(self.path(player_id)).ok()?;
        match serde_json::from_slice::<Snapshot>(&bytes) {
            Ok(s) if s.player_id == player_id => Some(s),
            Ok(_) => None,
            Err(e) => {
                tracing::warn!(player_id, error = %e, "ignoring unreadable snapshot");
                None
            }
        }
    }
}
