//! Fourier-side bounds over `F_p` and level sets of the exponent sum.

mod fourier;
mod level;

pub use fourier::{
    char_bound, condition_check, dist, CharBound, ConditionCheck, FrequencyForm, P_CAP, SLACK,
};
pub use level::{
    growth_k, heavy_level, m_cap, Certificate, CoreMode, CoreReport, DualReport, GrowthReport,
    LevelSetReport, DEFAULT_A, DEFAULT_DUAL_CONSTANT,
};
