//! A recursion-depth counter standing in for native stack usage.
//!
//! Every dynamic function call and every trampoline step enters the probe;
//! the high-water mark tells whether a computation grows the call stack
//! with its input size.

use std::cell::Cell;

thread_local! {
    static DEPTH: Cell<usize> = const { Cell::new(0) };
    static MAX: Cell<usize> = const { Cell::new(0) };
}

#[must_use]
pub struct ProbeGuard(());

impl Drop for ProbeGuard {
    fn drop(&mut self) {
        DEPTH.with(|d| d.set(d.get() - 1));
    }
}

pub fn enter() -> ProbeGuard {
    DEPTH.with(|d| {
        let depth = d.get() + 1;
        d.set(depth);
        MAX.with(|m| {
            if depth > m.get() {
                m.set(depth);
            }
        });
    });
    ProbeGuard(())
}

pub fn current_depth() -> usize {
    DEPTH.with(Cell::get)
}

/// High-water mark on this thread since the last [`reset`].
pub fn max_depth() -> usize {
    MAX.with(Cell::get)
}

/// Clears the high-water mark back to the current depth.
pub fn reset() {
    let depth = current_depth();
    MAX.with(|m| m.set(depth));
}
