pub mod diagnose;
pub mod gradcheck;
pub mod grid;
pub mod run;
pub mod scaling;
pub mod schedule_plan;

pub use diagnose::cmd_diagnose;
pub use gradcheck::cmd_gradcheck;
pub use grid::cmd_grid;
pub use run::cmd_run;
pub use scaling::cmd_scaling;
pub use schedule_plan::cmd_schedule_plan;
