//! Read-only integrity check of a data directory.

use std::collections::BTreeMap;
use std::path::Path;

use avabond_core::{EventRecord, GameConfig};
use serde::Serialize;

use crate::log::{parse_log, LogError};
use crate::service::{log_path, snapshot_dir};
use crate::snapshot::{load_state, SnapshotStore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlayerAudit {
    pub player_id: String,
    pub events: usize,
    pub snapshot_sequence: Option<u64>,
    /// Snapshot plus tail replays to the same bytes as a full replay.
    pub snapshot_consistent: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub records: usize,
    pub torn_tail_bytes: usize,
    pub players: Vec<PlayerAudit>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.players.iter().all(|p| p.error.is_none() && p.snapshot_consistent != Some(false))
    }
}

/// Checksum every record, then replay every player both from scratch and
/// from their snapshot. Never modifies the directory.
pub fn audit_data_dir(data_dir: &Path, config: &GameConfig) -> Result<AuditReport, LogError> {
    let bytes = match std::fs::read(log_path(data_dir)) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let (records, valid) = parse_log(&bytes)?;
    let mut by_player: BTreeMap<String, Vec<EventRecord>> = BTreeMap::new();
    for r in &records {
        by_player.entry(r.player_id.clone()).or_default().push(r.clone());
    }
    let snapshots = SnapshotStore::new(snapshot_dir(data_dir)).ok();
    let players = by_player
        .iter()
        .map(|(player, records)| {
            let mut audit = PlayerAudit {
                player_id: player.clone(),
                events: records.len(),
                snapshot_sequence: None,
                snapshot_consistent: None,
                error: None,
            };
            let full = match load_state(records, player, None, config) {
                Ok(state) => state,
                Err(e) => {
                    audit.error = Some(e.to_string());
                    return audit;
                }
            };
            if let Some(snap) = snapshots.as_ref().and_then(|s| s.load(player)) {
                audit.snapshot_sequence = Some(snap.as_of_sequence);
                audit.snapshot_consistent = Some(
                    load_state(records, player, Some(&snap), config)
                        .is_ok_and(|s| s.to_canonical_json() == full.to_canonical_json()),
                );
            }
            audit
        })
        .collect();
    Ok(AuditReport { records: records.len(), torn_tail_bytes: bytes.len() - valid, players })
}
