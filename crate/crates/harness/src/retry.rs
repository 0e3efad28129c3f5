//! Exponential backoff and a token-bucket rate limiter.

use std::sync::Mutex;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::editor::EditError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry, in seconds.
    pub base_delay: f64,
    pub max_delay: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, base_delay: 1.0, max_delay: 30.0 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> f64 {
        (self.base_delay * 2f64.powi(retry as i32)).min(self.max_delay)
    }
}

/// Calls `f` until it succeeds, fails permanently or runs out of retries.
/// Returns the outcome and the number of retries spent.
pub fn with_retry<T>(
    policy: &RetryPolicy,
    clock: &dyn Clock,
    limiter: Option<&RateLimiter>,
    label: &str,
    mut f: impl FnMut() -> Result<T, EditError>,
) -> (Result<T, EditError>, u32) {
    let mut retries = 0;
    loop {
        if let Some(l) = limiter {
            l.acquire(clock);
        }
        match f() {
            Ok(v) => return (Ok(v), retries),
            Err(e) if e.retryable() && retries < policy.max_retries => {
                let delay = policy.delay(retries);
                retries += 1;
                warn!("{label}: {e}; retry {retries}/{} in {delay:.1}s", policy.max_retries);
                clock.sleep(delay);
            }
            Err(e) => return (Err(e), retries),
        }
    }
}

/// Token bucket shared by all workers calling one endpoint.
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<Bucket>,
}

struct Bucket {
    tokens: f64,
    last: Option<f64>,
}

impl RateLimiter {
    /// `per_minute` requests per minute with bursts up to `burst`.
    pub fn new(per_minute: f64, burst: u32) -> Self {
        let capacity = burst.max(1) as f64;
        RateLimiter { per_second: per_minute / 60.0, capacity, state: Mutex::new(Bucket { tokens: capacity, last: None }) }
    }

    /// Blocks (on `clock`) until a token is available, then takes it.
    pub fn acquire(&self, clock: &dyn Clock) {
        loop {
            let wait = {
                let mut b = self.state.lock().expect("limiter poisoned");
                let now = clock.now();
                if let Some(last) = b.last {
                    b.tokens = (b.tokens + (now - last) * self.per_second).min(self.capacity);
                }
                b.last = Some(now);
                if b.tokens >= 1.0 {
                    b.tokens -= 1.0;
                    return;
                }
                (1.0 - b.tokens) / self.per_second
            };
            clock.sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy { max_retries: 10, base_delay: 0.5, max_delay: 3.0 };
        let delays: Vec<f64> = (0..5).map(|r| p.delay(r)).collect();
        assert_eq!(delays, [0.5, 1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn retries_transient_then_gives_up() {
        let clock = ManualClock::new();
        let policy = RetryPolicy { max_retries: 2, base_delay: 1.0, max_delay: 10.0 };
        let mut calls = 0;
        let (out, retries) = with_retry(&policy, &clock, None, "t", || -> Result<(), _> {
            calls += 1;
            Err(EditError::Timeout)
        });
        assert!(matches!(out, Err(EditError::Timeout)));
        assert_eq!((calls, retries, clock.now()), (3, 2, 3.0));

        let mut calls = 0;
        let (out, retries) = with_retry(&policy, &clock, None, "t", || -> Result<(), _> {
            calls += 1;
            Err(EditError::Rejected { status: 400, message: "bad".into() })
        });
        assert!(out.is_err());
        assert_eq!((calls, retries), (1, 0));
    }

    #[test]
    fn limiter_spaces_requests() {
        let clock = ManualClock::new();
        let limiter = RateLimiter::new(60.0, 2);
        for _ in 0..5 {
            limiter.acquire(&clock);
        }
        // two burst tokens, then one per second
        assert!((clock.now() - 3.0).abs() < 1e-9, "{}", clock.now());
    }
}
