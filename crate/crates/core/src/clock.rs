use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, TimeZone, Utc};

/// Source of timestamps for traces, events and reports.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: starts at a fixed instant and advances one millisecond
/// per reading. Replays driven by it serialize byte-identically.
#[derive(Debug)]
pub struct StepClock {
    next_ms: AtomicI64,
}

impl StepClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self {
            next_ms: AtomicI64::new(start.timestamp_millis()),
        }
    }
}

impl Default for StepClock {
    fn default() -> Self {
        Self::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
    }
}

impl Clock for StepClock {
    fn now(&self) -> DateTime<Utc> {
        let ms = self.next_ms.fetch_add(1, Ordering::SeqCst);
        Utc.timestamp_millis_opt(ms).unwrap()
    }
}
