//! Block-matching motion estimation over H.264-style macroblock partitions,
//! with a rough/precise fast sub-pel search and the baselines it is compared
//! against.
//!
//! The pipeline per frame is: full integer search for all 41 partitions of
//! every macroblock ([`integer_me`]), a per-partition sub-pel phase chosen by
//! [`Strategy`] ([`subpel`]), mode selection ([`mode`]) and accounting
//! ([`stats`]). [`bench`] drives whole sequences and formats reports.

pub mod bench;
pub mod cost;
pub mod error;
pub mod integer_me;
pub mod interpolation;
pub mod mode;
pub mod stats;
pub mod subpel;
pub mod video_io;

pub use bench::{run_benchmark, Report, RunConfig};
pub use cost::{CostValue, LambdaModel, MotionVector};
pub use error::{Error, Result};
pub use integer_me::{BlockClass, CostCross, PartitionJob, PartitionShape};
pub use interpolation::{build_padded, PaddedReference, QuarterPos};
pub use mode::{MbMode, MbModeResult, SearchConfig};
pub use stats::SearchStats;
pub use subpel::{GateParams, Ratio, SearchPath, Strategy, SubpelOutcome};
pub use video_io::{load_sequence, synth_sequence, LumaPlane, SequenceConfig, Source, SynthKind};
