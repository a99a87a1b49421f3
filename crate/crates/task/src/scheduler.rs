//! Execution contexts for task continuations.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use ldk_core::probe;
use parking_lot::{Condvar, Mutex};

pub type Job = Box<dyn FnOnce() + Send>;

pub trait Scheduler: Send + Sync {
    fn submit(&self, job: Job);

    /// Runs `job` after `ticks`: virtual ticks for the deterministic
    /// scheduler, milliseconds for the pool.
    fn submit_after(&self, ticks: u64, job: Job);

    /// Runs one queued job on the calling thread if the scheduler supports
    /// it; returns whether anything ran.
    fn run_one(&self) -> bool {
        false
    }
}

struct Timer {
    due: u64,
    seq: u64,
    job: Job,
}

impl PartialEq for Timer {
    fn eq(&self, other: &Self) -> bool {
        (self.due, self.seq) == (other.due, other.seq)
    }
}

impl Eq for Timer {}

impl PartialOrd for Timer {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timer {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.due, self.seq).cmp(&(other.due, other.seq))
    }
}

/// A single-threaded FIFO queue with a virtual clock. Jobs run only when
/// the owner drains the queue, so the execution order is a pure function
/// of the submission order.
#[derive(Default)]
pub struct Deterministic {
    queue: Mutex<VecDeque<Job>>,
    timers: Mutex<BinaryHeap<Reverse<Timer>>>,
    now: AtomicU64,
    seq: AtomicU64,
}

impl Deterministic {
    pub fn new() -> Arc<Self> {
        Arc::new(Deterministic::default())
    }

    pub fn now(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }

    /// Runs jobs until nothing is queued or scheduled.
    pub fn run_until_idle(&self) {
        while self.run_one() {}
    }

    fn advance_clock(&self) -> bool {
        let mut timers = self.timers.lock();
        let Some(Reverse(first)) = timers.pop() else {
            return false;
        };
        self.now.fetch_max(first.due, Ordering::SeqCst);
        let mut due = vec![first.job];
        while timers.peek().is_some_and(|Reverse(t)| t.due <= self.now()) {
            if let Some(Reverse(t)) = timers.pop() {
                due.push(t.job);
            }
        }
        drop(timers);
        self.queue.lock().extend(due);
        true
    }
}

impl Scheduler for Deterministic {
    fn submit(&self, job: Job) {
        self.queue.lock().push_back(job);
    }

    fn submit_after(&self, ticks: u64, job: Job) {
        if ticks == 0 {
            return self.submit(job);
        }
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        self.timers.lock().push(Reverse(Timer {
            due: self.now() + ticks,
            seq,
            job,
        }));
    }

    fn run_one(&self) -> bool {
        loop {
            let job = self.queue.lock().pop_front();
            if let Some(job) = job {
                job();
                return true;
            }
            if !self.advance_clock() {
                return false;
            }
        }
    }
}

struct PoolShared {
    queue: Mutex<VecDeque<Job>>,
    available: Condvar,
    shutdown: AtomicBool,
    max_probe: AtomicUsize,
}

impl Scheduler for PoolShared {
    fn submit(&self, job: Job) {
        self.queue.lock().push_back(job);
        self.available.notify_one();
    }

    fn submit_after(&self, ticks: u64, job: Job) {
        if ticks == 0 {
            return self.submit(job);
        }
        let target = current();
        std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(ticks));
            target.submit(job);
        });
    }
}

/// A fixed number of worker threads sharing one FIFO queue.
pub struct Pool {
    shared: Arc<PoolShared>,
    workers: Vec<JoinHandle<()>>,
}

impl Pool {
    pub fn new(size: usize) -> Self {
        let shared = Arc::new(PoolShared {
            queue: Mutex::new(VecDeque::new()),
            available: Condvar::new(),
            shutdown: AtomicBool::new(false),
            max_probe: AtomicUsize::new(0),
        });
        let workers = (0..size.max(1))
            .map(|i| {
                let shared = shared.clone();
                std::thread::Builder::new()
                    .name(format!("ldk-worker-{i}"))
                    .spawn(move || worker(shared))
                    .expect("spawn worker thread")
            })
            .collect();
        Pool { shared, workers }
    }

    pub fn with_default_size() -> Self {
        Pool::new(
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(4),
        )
    }

    pub fn size(&self) -> usize {
        self.workers.len()
    }

    pub fn scheduler(&self) -> Arc<dyn Scheduler> {
        self.shared.clone()
    }

    /// Highest probe depth any worker reached while running a job.
    pub fn max_probe(&self) -> usize {
        self.shared.max_probe.load(Ordering::SeqCst)
    }
}

fn worker(shared: Arc<PoolShared>) {
    set_current(shared.clone());
    loop {
        let job = {
            let mut queue = shared.queue.lock();
            loop {
                if let Some(job) = queue.pop_front() {
                    break Some(job);
                }
                if shared.shutdown.load(Ordering::SeqCst) {
                    break None;
                }
                shared.available.wait(&mut queue);
            }
        };
        let Some(job) = job else { return };
        probe::reset();
        job();
        shared
            .max_probe
            .fetch_max(probe::max_depth(), Ordering::SeqCst);
    }
}

impl Drop for Pool {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        self.shared.available.notify_all();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

thread_local! {
    static CURRENT: RefCell<Option<Arc<dyn Scheduler>>> = const { RefCell::new(None) };
}

/// The scheduler of the calling thread; a fresh deterministic one unless
/// another was installed.
pub fn current() -> Arc<dyn Scheduler> {
    CURRENT.with(|c| {
        c.borrow_mut()
            .get_or_insert_with(|| Deterministic::new() as Arc<dyn Scheduler>)
            .clone()
    })
}

pub fn set_current(s: Arc<dyn Scheduler>) -> Option<Arc<dyn Scheduler>> {
    CURRENT.with(|c| c.borrow_mut().replace(s))
}

/// Runs `f` with `s` installed as the current scheduler.
pub fn with_scheduler<R>(s: Arc<dyn Scheduler>, f: impl FnOnce() -> R) -> R {
    let previous = set_current(s);
    let out = f();
    CURRENT.with(|c| *c.borrow_mut() = previous);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_orders_by_virtual_time_then_submission() {
        let s = Deterministic::new();
        let log = Arc::new(Mutex::new(Vec::new()));
        for (delay, tag) in [(2, "late"), (0, "now"), (1, "soon"), (1, "soon2")] {
            let log = log.clone();
            s.submit_after(delay, Box::new(move || log.lock().push(tag)));
        }
        s.run_until_idle();
        assert_eq!(*log.lock(), vec!["now", "soon", "soon2", "late"]);
        assert_eq!(s.now(), 2);
    }

    #[test]
    fn pool_runs_jobs() {
        let pool = Pool::new(2);
        let done = Arc::new(AtomicUsize::new(0));
        for _ in 0..10 {
            let d = done.clone();
            pool.scheduler().submit(Box::new(move || {
                d.fetch_add(1, Ordering::SeqCst);
            }));
        }
        let start = std::time::Instant::now();
        while done.load(Ordering::SeqCst) < 10 && start.elapsed() < Duration::from_secs(5) {
            std::thread::yield_now();
        }
        assert_eq!(done.load(Ordering::SeqCst), 10);
    }
}
