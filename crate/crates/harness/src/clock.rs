use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Time source for latency, backoff and budgets. Seconds as `f64`.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
    fn sleep(&self, secs: f64);
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep(&self, secs: f64) {
        if secs > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(secs));
        }
    }
}

/// Virtual clock: `sleep` advances time instantly, so budget and backoff
/// arithmetic is exact and tests run in no real time.
#[derive(Default)]
pub struct ManualClock {
    now: Mutex<f64>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, secs: f64) {
        *self.now.lock().expect("clock poisoned") += secs.max(0.0);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.now.lock().expect("clock poisoned")
    }

    fn sleep(&self, secs: f64) {
        self.advance(secs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manual_clock_accumulates_exactly() {
        let c = ManualClock::new();
        for _ in 0..30 {
            c.sleep(7.5);
        }
        assert_eq!(c.now(), 225.0);
        c.sleep(-1.0);
        assert_eq!(c.now(), 225.0);
    }
}
