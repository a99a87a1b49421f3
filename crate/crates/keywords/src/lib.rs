//! Built-in keywords, lazy streams, deferred values and the direct
//! interpretations for stream, deferred, state and collection domains.

pub mod collect;
pub mod deferred;
pub mod instances;
pub mod kw;
pub mod stream;

pub use deferred::{as_deferred, set_wait_helper, Deferred};
pub use stream::{as_stream, LazyStream};
