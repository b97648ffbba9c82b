//! Execution strategy for embarrassingly parallel work.
//!
//! Every Monte Carlo loop in the crate is written as an indexed map. Results
//! are collected in index order, so output never depends on the number of
//! worker threads. Without the `parallel` feature both variants run on the
//! calling thread.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon work stealing. `jobs = None` uses the global pool.
    #[default]
    Parallel,
    ParallelJobs(usize),
}

impl Exec {
    /// `jobs` as given on a command line: 0 means "all cores", 1 forces sequential.
    pub fn from_jobs(jobs: usize) -> Self {
        match jobs {
            0 => Exec::Parallel,
            1 => Exec::Sequential,
            n => Exec::ParallelJobs(n),
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Exec::Sequential)
    }

    /// Evaluate `f(0..n)` and return the results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => par::map(n, f),
            #[cfg(feature = "parallel")]
            Exec::ParallelJobs(jobs) => par::map_in_pool(*jobs, n, f),
            #[cfg(not(feature = "parallel"))]
            _ => (0..n).map(f).collect(),
        }
    }

    /// Fallible variant of [`Exec::map`]; the error of the lowest failing index wins.
    pub fn try_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

impl fmt::Display for Exec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exec::Sequential => write!(f, "sequential"),
            Exec::Parallel => write!(f, "parallel"),
            Exec::ParallelJobs(n) => write!(f, "parallel({n})"),
        }
    }
}

#[cfg(feature = "parallel")]
mod par {
    use rayon::prelude::*;

    pub fn map<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn map_in_pool<T, F>(jobs: usize, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| map(n, f)),
            // Thread spawning can fail in restricted sandboxes; fall back to the global pool.
            Err(_) => map(n, f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_index_order() {
        for exec in [Exec::Sequential, Exec::Parallel, Exec::ParallelJobs(3)] {
            let out = exec.map(100, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>(), "{exec}");
        }
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            Exec::Parallel.try_map(50, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }

    #[test]
    fn from_jobs_mapping() {
        assert_eq!(Exec::from_jobs(0), Exec::Parallel);
        assert_eq!(Exec::from_jobs(1), Exec::Sequential);
        assert_eq!(Exec::from_jobs(4), Exec::ParallelJobs(4));
    }
}
