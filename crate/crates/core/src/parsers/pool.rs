//! Bounded worker pools with warm-start workers.
//!
//! A warm worker pays its initialization once and then serves many
//! documents; a cold pool initializes a fresh worker for every document.
//! Submissions go through a bounded queue and block when it is full, so the
//! number of documents in flight never exceeds `workers + queue_capacity`.
//! A worker that crashes is replaced and the document retried once; a
//! second crash marks the document failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicI64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, SendTimeoutError, Sender};
use serde::{Deserialize, Serialize};

use super::{parse, Engine, ParseResult, ParserProfile};
use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};
use crate::metrics::QualityScores;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerFault(pub String);

pub trait Worker: Send {
    fn parse(&mut self, doc: &DocumentRecord) -> std::result::Result<ParseResult, WorkerFault>;
}

pub trait WorkerFactory: Send + Sync {
    fn parser_id(&self) -> &str;
    fn warm_start(&self) -> bool;
    /// Builds and initializes one worker.
    fn spawn(&self) -> Result<Box<dyn Worker>>;
}

/// Busy-waits so simulated work actually occupies a core.
fn spin_for(d: Duration) {
    let start = Instant::now();
    let mut x = 0u64;
    while start.elapsed() < d {
        for _ in 0..64 {
            x = std::hint::black_box(x.wrapping_mul(6364136223846793005).wrapping_add(1));
        }
    }
}

/// Workers backed by a [`ParserProfile`].
///
/// With a positive `spin_scale`, each worker burns `init_seconds * scale` of
/// CPU when it starts and `modeled cost * scale` per document.
pub struct ProfileWorkerFactory {
    profile: Arc<ParserProfile>,
    spin_scale: f64,
    pending_faults: Arc<AtomicUsize>,
}

impl ProfileWorkerFactory {
    pub fn new(profile: ParserProfile) -> Self {
        ProfileWorkerFactory {
            profile: Arc::new(profile),
            spin_scale: 0.0,
            pending_faults: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn with_spin_scale(mut self, scale: f64) -> Self {
        self.spin_scale = scale.max(0.0);
        self
    }

    /// Makes the next document picked up by any worker crash that worker.
    pub fn inject_fault(&self) {
        self.pending_faults.fetch_add(1, Ordering::SeqCst);
    }

    pub fn profile(&self) -> &ParserProfile {
        &self.profile
    }
}

struct ProfileWorker {
    profile: Arc<ParserProfile>,
    spin_scale: f64,
    pending_faults: Arc<AtomicUsize>,
}

impl Worker for ProfileWorker {
    fn parse(&mut self, doc: &DocumentRecord) -> std::result::Result<ParseResult, WorkerFault> {
        let take_fault = self
            .pending_faults
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
        if take_fault {
            return Err(WorkerFault("injected fault".into()));
        }
        if let Engine::Mock(model) = &self.profile.engine {
            if model.crashes_on(&self.profile.parser_id, doc) {
                return Err(WorkerFault(format!("{} crashed on {}", self.profile.parser_id, doc.doc_id)));
            }
        }
        let result = parse(&self.profile, doc);
        if self.spin_scale > 0.0 {
            spin_for(Duration::from_secs_f64(result.wall_seconds * self.spin_scale));
        }
        Ok(result)
    }
}

impl WorkerFactory for ProfileWorkerFactory {
    fn parser_id(&self) -> &str {
        &self.profile.parser_id
    }

    fn warm_start(&self) -> bool {
        self.profile.warm_start
    }

    fn spawn(&self) -> Result<Box<dyn Worker>> {
        if self.spin_scale > 0.0 && self.profile.init_seconds > 0.0 {
            spin_for(Duration::from_secs_f64(self.profile.init_seconds * self.spin_scale));
        }
        Ok(Box::new(ProfileWorker {
            profile: Arc::clone(&self.profile),
            spin_scale: self.spin_scale,
            pending_faults: Arc::clone(&self.pending_faults),
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolConfig {
    pub workers: usize,
    pub queue_capacity: usize,
}

impl PoolConfig {
    pub fn new(workers: usize) -> Self {
        PoolConfig { workers: workers.max(1), queue_capacity: workers.max(1) * 2 }
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub tag: u64,
    pub doc: Arc<DocumentRecord>,
}

#[derive(Debug, Clone)]
pub struct Completed {
    pub tag: u64,
    pub result: ParseResult,
    pub attempts: u32,
    /// Set when the pool was started with a scorer.
    pub scores: Option<QualityScores>,
}

/// Scores a finished parse on the worker thread that produced it.
pub type Scorer = Arc<dyn Fn(&DocumentRecord, &ParseResult) -> Option<QualityScores> + Send + Sync>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub initializations: usize,
    pub processed: usize,
    pub crashes: usize,
    pub retries: usize,
    pub failed: usize,
    pub peak_in_flight: usize,
    pub alive_workers: usize,
}

#[derive(Default)]
struct Counters {
    initializations: AtomicUsize,
    processed: AtomicUsize,
    crashes: AtomicUsize,
    retries: AtomicUsize,
    failed: AtomicUsize,
    in_flight: AtomicI64,
    peak_in_flight: AtomicI64,
    alive: AtomicUsize,
}

impl Counters {
    fn snapshot(&self) -> PoolStats {
        PoolStats {
            initializations: self.initializations.load(Ordering::SeqCst),
            processed: self.processed.load(Ordering::SeqCst),
            crashes: self.crashes.load(Ordering::SeqCst),
            retries: self.retries.load(Ordering::SeqCst),
            failed: self.failed.load(Ordering::SeqCst),
            peak_in_flight: self.peak_in_flight.load(Ordering::SeqCst).max(0) as usize,
            alive_workers: self.alive.load(Ordering::SeqCst),
        }
    }
}

pub struct WorkerPool {
    parser_id: String,
    jobs: Option<Sender<Job>>,
    handles: Vec<JoinHandle<()>>,
    counters: Arc<Counters>,
}

struct AliveGuard(Arc<Counters>);

impl Drop for AliveGuard {
    fn drop(&mut self) {
        self.0.alive.fetch_sub(1, Ordering::SeqCst);
    }
}

fn ensure_worker(
    factory: &dyn WorkerFactory,
    slot: &mut Option<Box<dyn Worker>>,
    counters: &Counters,
) -> bool {
    if slot.is_some() {
        return true;
    }
    for _ in 0..2 {
        match factory.spawn() {
            Ok(w) => {
                counters.initializations.fetch_add(1, Ordering::SeqCst);
                *slot = Some(w);
                return true;
            }
            Err(e) => log::warn!("{}: worker initialization failed: {e}", factory.parser_id()),
        }
    }
    false
}

/// Returns the result, attempts used, and whether the worker slot is dead.
fn process(
    factory: &dyn WorkerFactory,
    slot: &mut Option<Box<dyn Worker>>,
    doc: &DocumentRecord,
    counters: &Counters,
) -> (ParseResult, u32, bool) {
    for attempt in 1..=2u32 {
        if !ensure_worker(factory, slot, counters) {
            return (ParseResult::failed(factory.parser_id(), &doc.doc_id, 0.0), attempt, true);
        }
        let worker = slot.as_mut().expect("worker present");
        let outcome = catch_unwind(AssertUnwindSafe(|| worker.parse(doc)));
        match outcome {
            Ok(Ok(result)) => return (result, attempt, false),
            Ok(Err(WorkerFault(reason))) => {
                log::warn!("{} worker crashed on {}: {reason}", factory.parser_id(), doc.doc_id)
            }
            Err(_) => log::warn!("{} worker panicked on {}", factory.parser_id(), doc.doc_id),
        }
        counters.crashes.fetch_add(1, Ordering::SeqCst);
        *slot = None;
        if attempt == 1 {
            counters.retries.fetch_add(1, Ordering::SeqCst);
        }
    }
    (ParseResult::failed(factory.parser_id(), &doc.doc_id, 0.0), 2, false)
}

impl WorkerPool {
    /// Starts `cfg.workers` threads delivering results into `sink`.
    pub fn start(factory: Arc<dyn WorkerFactory>, cfg: PoolConfig, sink: Sender<Completed>) -> Self {
        Self::start_scored(factory, cfg, sink, None)
    }

    /// Like [`WorkerPool::start`], with each result scored before delivery.
    pub fn start_scored(
        factory: Arc<dyn WorkerFactory>,
        cfg: PoolConfig,
        sink: Sender<Completed>,
        scorer: Option<Scorer>,
    ) -> Self {
        let workers = cfg.workers.max(1);
        let (tx, rx) = bounded::<Job>(cfg.queue_capacity);
        let counters = Arc::new(Counters::default());
        counters.alive.store(workers, Ordering::SeqCst);
        let handles = (0..workers)
            .map(|i| {
                let factory = Arc::clone(&factory);
                let rx: Receiver<Job> = rx.clone();
                let sink = sink.clone();
                let counters = Arc::clone(&counters);
                let scorer = scorer.clone();
                std::thread::Builder::new()
                    .name(format!("{}-{i}", factory.parser_id()))
                    .spawn(move || {
                        let _alive = AliveGuard(Arc::clone(&counters));
                        let warm = factory.warm_start();
                        let mut slot: Option<Box<dyn Worker>> = None;
                        if warm && !ensure_worker(factory.as_ref(), &mut slot, &counters) {
                            return;
                        }
                        for job in rx.iter() {
                            if !warm {
                                slot = None;
                            }
                            let (result, attempts, dead) =
                                process(factory.as_ref(), &mut slot, &job.doc, &counters);
                            counters.processed.fetch_add(1, Ordering::SeqCst);
                            if result.status != super::ParseStatus::Ok
                                && result.status != super::ParseStatus::Partial
                            {
                                counters.failed.fetch_add(1, Ordering::SeqCst);
                            }
                            let scores = scorer.as_ref().and_then(|f| f(&job.doc, &result));
                            let delivered = sink.send(Completed { tag: job.tag, result, attempts, scores }).is_ok();
                            counters.in_flight.fetch_sub(1, Ordering::SeqCst);
                            if !delivered || dead {
                                break;
                            }
                        }
                    })
                    .expect("spawn pool thread")
            })
            .collect();
        WorkerPool {
            parser_id: factory.parser_id().to_owned(),
            jobs: Some(tx),
            handles,
            counters,
        }
    }

    pub fn parser_id(&self) -> &str {
        &self.parser_id
    }

    /// Queues a job, blocking while the queue is full.
    pub fn submit(&self, job: Job) -> Result<()> {
        let tx = self.jobs.as_ref().expect("pool open");
        let mut job = job;
        loop {
            if self.counters.alive.load(Ordering::SeqCst) == 0 {
                return Err(Error::PoolExhausted(self.parser_id.clone()));
            }
            match tx.send_timeout(job, Duration::from_millis(20)) {
                Ok(()) => {
                    let now = self.counters.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    self.counters.peak_in_flight.fetch_max(now, Ordering::SeqCst);
                    return Ok(());
                }
                Err(SendTimeoutError::Timeout(j)) => job = j,
                Err(SendTimeoutError::Disconnected(_)) => {
                    return Err(Error::PoolExhausted(self.parser_id.clone()))
                }
            }
        }
    }

    pub fn stats(&self) -> PoolStats {
        self.counters.snapshot()
    }

    /// Stops accepting jobs, waits for queued work to finish, and returns final stats.
    pub fn close(mut self) -> PoolStats {
        self.jobs.take();
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
        self.counters.snapshot()
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.jobs.take();
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}

/// Starts a warm pool for a profile that supports warm start. Results arrive
/// on the returned receiver, which the caller must drain.
pub fn warm_pool(profile: &ParserProfile, worker_count: usize) -> Result<(WorkerPool, Receiver<Completed>)> {
    if !profile.warm_start {
        return Err(Error::Precondition(format!(
            "parser `{}` does not support warm start",
            profile.parser_id
        )));
    }
    let cfg = PoolConfig::new(worker_count);
    let (tx, rx) = bounded(cfg.workers + cfg.queue_capacity);
    let factory: Arc<dyn WorkerFactory> = Arc::new(ProfileWorkerFactory::new(profile.clone()));
    Ok((WorkerPool::start(factory, cfg, tx), rx))
}

/// Runs every document through a fresh pool, handing each completion to
/// `on_result` on the calling thread as it arrives.
pub fn parse_all<F: FnMut(Completed)>(
    factory: Arc<dyn WorkerFactory>,
    cfg: PoolConfig,
    docs: &[Arc<DocumentRecord>],
    mut on_result: F,
) -> Result<PoolStats> {
    let (tx, rx) = bounded(cfg.workers.max(1) + cfg.queue_capacity);
    let pool = WorkerPool::start(factory, cfg, tx);
    std::thread::scope(|s| {
        let feeder = s.spawn(move || {
            let mut err = None;
            for (i, doc) in docs.iter().enumerate() {
                if let Err(e) = pool.submit(Job { tag: i as u64, doc: Arc::clone(doc) }) {
                    err = Some(e);
                    break;
                }
            }
            (pool.close(), err)
        });
        for completed in rx.iter() {
            on_result(completed);
        }
        let (stats, err) = feeder.join().expect("feeder thread panicked");
        match err {
            Some(e) => Err(e),
            None => Ok(stats),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthProfile};
    use crate::parsers::{MockModel, ParseStatus};
    use std::collections::HashSet;

    fn docs(n: usize) -> Vec<Arc<DocumentRecord>> {
        synth_corpus(n, &SynthProfile::compact(), 5).unwrap().into_iter().map(Arc::new).collect()
    }

    fn warm_profile() -> ParserProfile {
        ParserProfile::mock("warm", 0.5, MockModel::perfect()).with_warm_start(1.0)
    }

    #[test]
    fn warm_pool_initializes_once_per_worker() {
        let d = docs(100);
        let factory = Arc::new(ProfileWorkerFactory::new(warm_profile()));
        let mut seen = HashSet::new();
        let stats = parse_all(factory, PoolConfig::new(2), &d, |c| {
            assert!(seen.insert(c.tag));
        })
        .unwrap();
        assert_eq!(seen.len(), 100);
        assert_eq!(stats.initializations, 2);
        assert_eq!(stats.processed, 100);
    }

    #[test]
    fn cold_pool_initializes_per_document() {
        let d = docs(100);
        let mut profile = warm_profile();
        profile.warm_start = false;
        let factory = Arc::new(ProfileWorkerFactory::new(profile));
        let stats = parse_all(factory, PoolConfig::new(2), &d, |_| {}).unwrap();
        assert!(stats.initializations >= 100);
    }

    #[test]
    fn killed_worker_is_respawned_without_losing_documents() {
        let d = docs(100);
        let factory = Arc::new(ProfileWorkerFactory::new(warm_profile()));
        let handle = Arc::clone(&factory);
        let mut ok = 0;
        let mut count = 0;
        let stats = parse_all(factory, PoolConfig::new(2), &d, |c| {
            count += 1;
            if count == 50 {
                handle.inject_fault();
            }
            if c.result.status == ParseStatus::Ok {
                ok += 1;
            }
        })
        .unwrap();
        assert_eq!(stats.initializations, 3);
        assert_eq!(stats.crashes, 1);
        assert_eq!(ok, 100);
    }

    #[test]
    fn persistent_crash_fails_after_one_retry() {
        let d = docs(10);
        let profile = ParserProfile::mock("crashy", 0.1, MockModel { crash_rate: 1.0, ..MockModel::perfect() })
            .with_warm_start(0.0);
        let factory = Arc::new(ProfileWorkerFactory::new(profile));
        let mut attempts = Vec::new();
        let stats = parse_all(factory, PoolConfig::new(1), &d, |c| {
            assert_eq!(c.result.status, ParseStatus::Failed);
            attempts.push(c.attempts);
        })
        .unwrap();
        assert!(attempts.iter().all(|&a| a == 2));
        assert_eq!(stats.retries, 10);
        assert_eq!(stats.failed, 10);
    }

    #[test]
    fn in_flight_is_bounded() {
        let d = docs(200);
        let cfg = PoolConfig { workers: 3, queue_capacity: 4 };
        let factory = Arc::new(ProfileWorkerFactory::new(warm_profile()));
        let stats = parse_all(factory, cfg, &d, |_| {
            std::thread::sleep(Duration::from_micros(50));
        })
        .unwrap();
        assert!(stats.peak_in_flight <= 7, "{stats:?}");
    }

    struct Broken;
    impl WorkerFactory for Broken {
        fn parser_id(&self) -> &str {
            "broken"
        }
        fn warm_start(&self) -> bool {
            true
        }
        fn spawn(&self) -> Result<Box<dyn Worker>> {
            Err(Error::Precondition("no model".into()))
        }
    }

    #[test]
    fn all_workers_dead_is_fatal() {
        let d = docs(50);
        let err = parse_all(Arc::new(Broken), PoolConfig { workers: 2, queue_capacity: 2 }, &d, |_| {})
            .unwrap_err();
        assert!(matches!(err, Error::PoolExhausted(_)));
    }

    #[test]
    fn warm_pool_requires_warm_profile() {
        let cold = ParserProfile::builtin("x", 0.1);
        assert!(warm_pool(&cold, 2).is_err());
        let (pool, rx) = warm_pool(&warm_profile(), 2).unwrap();
        for (i, d) in docs(5).into_iter().enumerate() {
            pool.submit(Job { tag: i as u64, doc: d }).unwrap();
        }
        let stats = pool.close();
        assert_eq!(rx.try_iter().count(), 5);
        assert_eq!(stats.initializations, 2);
    }
}
