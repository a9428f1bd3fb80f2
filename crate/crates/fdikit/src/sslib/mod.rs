//! State-space models with named channel groups.

mod compose;
mod minreal;
mod model;
mod response;

pub use compose::{append, augment_columns, feedthrough_identity, parallel, scale_left, series, stack_rows};
pub use minreal::minimal_realization;
pub use model::{fdimodset, mdmodset, LtiModel, ModSelection, MultiModel, INPUT_GROUPS};
pub use response::{freqresp, freqresp_grid, lambda_of, step, time_response, Signal};
