//! In-flight cap and request-rate throttle shared by live/record clients.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

struct State {
    in_flight: usize,
    next_allowed: Instant,
}

pub struct Limiter {
    max_in_flight: usize,
    min_gap: Duration,
    state: Mutex<State>,
    freed: Condvar,
}

impl Limiter {
    pub fn new(max_in_flight: usize, requests_per_minute: Option<u32>) -> Self {
        let min_gap = match requests_per_minute {
            Some(rpm) if rpm > 0 => Duration::from_secs_f64(60.0 / rpm as f64),
            _ => Duration::ZERO,
        };
        Limiter {
            max_in_flight: max_in_flight.max(1),
            min_gap,
            state: Mutex::new(State {
                in_flight: 0,
                next_allowed: Instant::now(),
            }),
            freed: Condvar::new(),
        }
    }

    /// Blocks until a request slot is free and the rate gate has passed.
    pub fn acquire(&self) -> SlotGuard<'_> {
        let wait_until;
        {
            let mut state = self.state.lock().unwrap();
            while state.in_flight >= self.max_in_flight {
                state = self.freed.wait(state).unwrap();
            }
            state.in_flight += 1;
            let now = Instant::now();
            wait_until = state.next_allowed.max(now);
            state.next_allowed = wait_until + self.min_gap;
        }
        let now = Instant::now();
        if wait_until > now {
            std::thread::sleep(wait_until - now);
        }
        SlotGuard { limiter: self }
    }
}

pub struct SlotGuard<'a> {
    limiter: &'a Limiter,
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        let mut state = self.limiter.state.lock().unwrap();
        state.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn in_flight_never_exceeds_cap() {
        let limiter = Arc::new(Limiter::new(2, None));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));

        let handles: Vec<_> = (0..8)
            .map(|_| {
                let limiter = limiter.clone();
                let current = current.clone();
                let peak = peak.clone();
                std::thread::spawn(move || {
                    let _slot = limiter.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                    current.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn rate_gate_spaces_requests() {
        // 1200 rpm = one slot every 50 ms.
        let limiter = Limiter::new(4, Some(1200));
        let start = Instant::now();
        for _ in 0..3 {
            let _slot = limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(100));
    }
}
