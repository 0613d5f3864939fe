//! Ordered fan-out over independent work items.
//!
//! With the `parallel` feature and `workers > 1` the items run on a
//! dedicated rayon pool of exactly `workers` threads; otherwise they run in
//! order on the calling thread. Output order always matches input order.

/// How much concurrency a fan-out may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    Parallel(usize),
}

impl Schedule {
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Schedule::Sequential
        } else {
            Schedule::Parallel(workers)
        }
    }

    pub fn workers(self) -> usize {
        match self {
            Schedule::Sequential => 1,
            Schedule::Parallel(n) => n.max(1),
        }
    }
}

pub fn map_ordered<T, R, F>(items: Vec<T>, schedule: Schedule, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    match schedule {
        Schedule::Parallel(n) if n > 1 && items.len() > 1 => parallel(items, n, f),
        _ => items.into_iter().map(f).collect(),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    use rayon::prelude::*;

    // Work here is mostly blocking I/O, so the pool is sized by the caller's
    // bound rather than by core count.
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
        Err(err) => {
            tracing::warn!(%err, "thread pool unavailable, running sequentially");
            items.into_iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, R, F>(items: Vec<T>, _workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn order_preserved() {
        let items: Vec<u64> = (0..50).collect();
        let out = map_ordered(items.clone(), Schedule::Parallel(8), |x| {
            std::thread::sleep(Duration::from_micros((50 - x) * 20));
            x * 2
        });
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn blocking_work_overlaps() {
        let started = std::time::Instant::now();
        map_ordered(vec![(); 4], Schedule::Parallel(4), |_| {
            std::thread::sleep(Duration::from_millis(100))
        });
        assert!(started.elapsed() < Duration::from_millis(350));
    }

    #[test]
    fn sequential_runs_in_order() {
        let seen = std::sync::Mutex::new(Vec::new());
        map_ordered(vec![1, 2, 3], Schedule::Sequential, |x| seen.lock().unwrap().push(x));
        assert_eq!(*seen.lock().unwrap(), vec![1, 2, 3]);
    }
}
