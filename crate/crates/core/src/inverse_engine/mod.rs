mod calibration;
mod fit;
mod pipeline;
mod planted;
mod verify;

pub use calibration::{Calibration, CorpusSpec};
pub use fit::*;
pub use pipeline::*;
pub use planted::{planted_corpus, planted_instance, PlantedInstance};
pub use verify::{all_pass, verify_report, CheckResult};
