//! `teleop`: model inspection, solving, replay sessions, profiling, haptics
//! processing and synthetic data generation.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 solver non-convergence.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use teleop_core::Error;

#[derive(Debug, Parser)]
#[command(name = "teleop", version, about = "Bimanual teleoperation solvers and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the pose of a frame at a joint configuration.
    Fk {
        /// Robot description file or `builtin:<name>`.
        #[arg(long)]
        robot: String,
        /// Active joint values, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Vec<f64>,
        #[arg(long)]
        frame: String,
    },
    /// Retarget every hand of a recording onto a robot hand.
    Retarget {
        #[arg(long, default_value = "builtin:hand")]
        robot: String,
        /// Recording file.
        #[arg(long)]
        frames: PathBuf,
        /// Human-to-robot scaling factor.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Temporal smoothness weight.
        #[arg(long, default_value_t = teleop_core::retargeting::DEFAULT_SMOOTHNESS)]
        beta: f64,
        /// Fingertip links compared against same-named keypoints; defaults to
        /// the built-in hand's fingertips.
        #[arg(long, value_delimiter = ',')]
        tips: Vec<String>,
        /// Joint trajectory output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time solver modules on synthetic workloads.
    Profile {
        #[arg(long, value_enum)]
        module: ProfileModule,
        /// Arm or hand description; defaults to the built-in 7-DoF arm or
        /// coupled hand.
        #[arg(long)]
        robot: Option<String>,
        #[arg(long, default_value = "tool")]
        ee_frame: String,
        /// Motion-control variants: ik, coll, sing, coll+sing, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        variants: Vec<String>,
        #[arg(long, value_enum, default_value_t = LoopJointsArg::Both)]
        loop_joints: LoopJointsArg,
        #[arg(long, default_value_t = 1000)]
        frames: usize,
        #[arg(long, default_value_t = 30)]
        sensors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a replay or network session from a JSON configuration.
    Session {
        #[arg(long)]
        config: PathBuf,
        /// Command stream output, one JSON object per line.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the profile report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Turn a tactile stream into PWM bytes and decode them on a virtual
    /// board.
    Haptics {
        /// Calibration table (JSON).
        #[arg(long)]
        calib: PathBuf,
        /// Tactile stream file.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = teleop_core::haptics::DEFAULT_CUTOFF_HZ)]
        cutoff: f64,
        #[arg(long, allow_hyphen_values = true)]
        threshold: f64,
        #[arg(long, allow_hyphen_values = true)]
        full_scale: f64,
        /// PWM byte stream output.
        #[arg(long)]
        out: PathBuf,
        /// Decoded motor-write log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Generate deterministic test data.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        frames: usize,
        /// Frame rate of generated streams, Hz.
        #[arg(long)]
        rate: Option<f64>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileModule {
    Retargeting,
    MotionControl,
    Haptics,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LoopJointsArg {
    Reduced,
    Constrained,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Bimanual reach recording.
    Reach,
    /// Bimanual recording holding one pose.
    Static,
    /// Bimanual random-walk recording.
    Wander,
    /// Tactile stream with a press in the middle.
    Pulse,
    /// Tactile stream without contact.
    Baseline,
    /// Calibration table matching the tactile streams of the same seed.
    Calib,
    /// Planar two-link arm description.
    Planar,
    /// 7-DoF arm description.
    Arm7,
    /// Two 7-DoF arms on a torso.
    DualArm,
    /// Hand with four-bar coupled fingers.
    Hand,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            e => Failure::Data(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::NotConverged(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Fk { robot, q, frame } => commands::fk(&robot, &q, &frame),
        Command::Retarget {
            robot,
            frames,
            alpha,
            beta,
            tips,
            out,
        } => commands::retarget(&robot, &frames, alpha, beta, &tips, out.as_deref()),
        Command::Profile {
            module,
            robot,
            ee_frame,
            variants,
            loop_joints,
            frames,
            sensors,
            seed,
            report,
        } => commands::profile(commands::ProfileArgs {
            module,
            robot,
            ee_frame,
            variants,
            loop_joints,
            frames,
            sensors,
            seed,
            report,
        }),
        Command::Session { config, out, report } => commands::session(&config, out.as_deref(), report.as_deref()),
        Command::Haptics {
            calib,
            frames,
            cutoff,
            threshold,
            full_scale,
            out,
            log,
        } => commands::haptics(&calib, &frames, cutoff, threshold, full_scale, &out, log.as_deref()),
        Command::Synth {
            kind,
            seed,
            frames,
            rate,
            out,
        } => commands::synth(kind, seed, frames, rate, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Data(e) => eprintln!("error: {e}"),
                Failure::NotConverged(m) => eprintln!("not converged: {m}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
