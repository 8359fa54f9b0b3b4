//! Command-line harness: configuration, experiment dispatch and the
//! self-verification suite.

pub mod config;
pub mod dispatch;
pub mod suite;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, Kind};
pub use dispatch::{dispatch, DispatchError, RunRecord, Status};
pub use suite::Level;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "FRONTSPREAD_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`]; returns the thread count.
pub fn init_threads() -> Result<usize, String> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = requested {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())?;
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        Ok(1)
    }
}
