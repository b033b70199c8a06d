//! Reference algorithms: DOGD, DOGD-SC, SDMD-RSC and the BOLD reduction with
//! its undelayed ONS / VAW / OGD bases.

pub mod bold;
pub mod classic;
pub mod dogd;

pub use bold::Bold;
pub use classic::{BaseLearner, ClassicOgdSc, ClassicOns, ClassicVaw};
pub use dogd::{Dogd, DogdSc, DogdScSchedule};

/// SDMD-RSC is realized by the delayed OMD learner.
pub type SdmdRsc = crate::learners::DelayedOmd;
