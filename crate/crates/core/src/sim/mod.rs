//! A single-link, slot-level downlink simulator.
//!
//! Each packet sees a block-fading channel, gets an MCS (fixed, or chosen
//! from the reported CQI), the whole band, and up to `max_retx`
//! retransmissions combined through the error model. Metrics
//! follow the usual delay / APP loss / PHY loss split.

mod channel;
mod config;
mod output;
mod run;

pub use channel::{channel_step, retx_channel, ChannelState};
pub use config::{
    split_assignment, Coherence, Latencies, McsConfig, McsSelection, Pathloss, SimConfig, Traffic,
};
pub use output::{emit_results, emit_trace, read_rows, write_rows, OutputFormat, ResultRow};
pub use run::{run_simulation, run_sweep, PacketRecord, SimMetrics};

pub use crate::link_adaptation::tbs_calculate;
