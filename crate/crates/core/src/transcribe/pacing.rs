//! Clocks and the rolling-window request limiter.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// A clock that only moves when someone sleeps on it.
#[derive(Debug, Default)]
pub struct VirtualClock {
    micros: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        self.micros
            .fetch_add(d.as_micros() as u64, Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        Duration::from_micros(self.micros.load(Ordering::SeqCst))
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

/// Admits at most `per_window` requests in any rolling window.
pub struct RateLimiter {
    per_window: usize,
    window: Duration,
    clock: Arc<dyn Clock>,
    admitted: Mutex<VecDeque<Duration>>,
    log: Mutex<Vec<Duration>>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32, clock: Arc<dyn Clock>) -> Self {
        Self::new(requests, Duration::from_secs(60), clock)
    }

    pub fn new(requests: u32, window: Duration, clock: Arc<dyn Clock>) -> Self {
        RateLimiter {
            per_window: requests.max(1) as usize,
            window,
            clock,
            admitted: Mutex::new(VecDeque::new()),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    /// Clock readings at which each request so far was admitted.
    pub fn admissions(&self) -> Vec<Duration> {
        self.log.lock().unwrap().clone()
    }

    /// Block until a request may be issued and record it.
    ///
    /// The lock is held while waiting, so waiters are admitted one at a time.
    pub fn acquire(&self) -> Duration {
        let mut admitted = self.admitted.lock().unwrap();
        loop {
            let now = self.clock.now();
            while admitted
                .front()
                .is_some_and(|&t| now.saturating_sub(t) >= self.window)
            {
                admitted.pop_front();
            }
            if admitted.len() < self.per_window {
                admitted.push_back(now);
                self.log.lock().unwrap().push(now);
                return now;
            }
            let oldest = *admitted.front().unwrap();
            self.clock.sleep(oldest + self.window - now);
        }
    }
}
