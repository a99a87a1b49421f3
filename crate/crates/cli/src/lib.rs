pub mod bench;
pub mod examples;
