//! Trampolined tasks, schedulers, structured concurrency and the
//! interpretations for the task domain.

pub mod channel;
pub mod fork;
pub mod instances;
pub mod scheduler;
pub mod task;
pub mod trampoline;

pub use channel::{as_buffer, as_channel, AsyncChannel, Buffer};
pub use fork::{each_sequential, fork_join, fork_kw, FORK};
pub use scheduler::{current, set_current, with_scheduler, Deterministic, Pool, Scheduler};
pub use task::{
    blocking_await, run_task, task, task_async, task_delay, task_raise, task_unit, to_deferred,
    try_protect, with_wait_helper,
};
pub use trampoline::{run, suspend_in, Trampoline};
