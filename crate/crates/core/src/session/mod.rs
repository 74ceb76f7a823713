//! Bimanual session orchestration: pose-stream ingestion, alignment,
//! concurrent dispatch to the solvers and latency profiling.

mod alignment;
mod frame;
mod profile;
pub mod recording;
mod runner;
mod slot;
pub mod wire;

pub use alignment::{AlignmentMode, EngagePair, FrameAlignment};
pub use frame::{BimanualFrame, HandFrame, HandSide};
pub use profile::{ProfileReport, ProfileRow};
pub use recording::{parse_recording, replay_load, save_recording, write_recording, Recording, ReplayStream};
pub use runner::{
    builtin_robot, load_robot, run_session, ArmConfig, CommandRecord, HandConfig, SessionConfig,
    SessionHapticsConfig, SessionOutcome, SideCommand, SideConfig, SourceConfig,
};
pub use slot::LatestSlot;
