//! FIFO counting semaphore bounding in-flight requests.

use std::sync::{Condvar, Mutex};

struct State {
    available: usize,
    next_ticket: u64,
    now_serving: u64,
}

/// Counting semaphore with strict first-come-first-served admission:
/// callers are served in the order they asked, so no request can starve
/// behind later arrivals.
pub struct FairSemaphore {
    state: Mutex<State>,
    cv: Condvar,
}

impl FairSemaphore {
    pub fn new(permits: usize) -> FairSemaphore {
        assert!(permits > 0, "semaphore needs at least one permit");
        FairSemaphore {
            state: Mutex::new(State { available: permits, next_ticket: 0, now_serving: 0 }),
            cv: Condvar::new(),
        }
    }

    /// Blocks until a permit is free and every earlier caller has been
    /// admitted. The permit is released when the guard drops.
    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().expect("semaphore poisoned");
        let ticket = state.next_ticket;
        state.next_ticket += 1;
        while !(state.now_serving == ticket && state.available > 0) {
            state = self.cv.wait(state).expect("semaphore poisoned");
        }
        state.available -= 1;
        state.now_serving += 1;
        self.cv.notify_all();
        Permit { sem: self }
    }
}

pub struct Permit<'a> {
    sem: &'a FairSemaphore,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut state = self.sem.state.lock().expect("semaphore poisoned");
        state.available += 1;
        self.sem.cv.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn bounds_concurrent_holders() {
        let sem = FairSemaphore::new(2);
        let inside = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..12 {
                scope.spawn(|| {
                    let _permit = sem.acquire();
                    let now = inside.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(std::time::Duration::from_millis(2));
                    inside.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn permits_are_returned() {
        let sem = FairSemaphore::new(1);
        for _ in 0..100 {
            let _p = sem.acquire();
        }
    }
}
