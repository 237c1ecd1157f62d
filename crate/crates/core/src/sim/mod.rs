//! Monte Carlo laboratory: configuration grid, data generation, theoretical
//! MSPE, the random oracle, relative losses and minimax summaries.
//!
//! Randomness is keyed by configuration identity, never by scheduling: one
//! design matrix per `(m, n, ρ)`, one coefficient draw per configuration and
//! one noise sub-stream per `(configuration, replication)`.

pub mod campaign;
pub mod config;
pub mod design;
pub mod mspe;
pub mod run;
pub mod summary;

pub use campaign::{run_campaign, CampaignConfig, CampaignReport};
pub use config::{BetaType, CScale, SimConfig, SimMethod};
pub use design::{gen_beta, gen_design, solve_c_for_r2, Design};
pub use mspe::{mspe_along_path, random_oracle, theoretical_mspe};
pub use run::{run_config, ConfigOutcome, MethodOutcome, ReplicationRecord};
pub use summary::{best_q_table, minimax_summary, Grouping, SummaryRow, WorstK};

/// FNV-1a, used to turn stable labels into sub-stream keys.
pub(crate) fn stream_key(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}
