//! The current time for audit entries and plans.

use chrono::{DateTime, TimeZone, Utc};

/// Environment variable that pins the clock, in seconds since the epoch.
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

/// `SOURCE_DATE_EPOCH` when set to a valid integer, else the system time.
/// Always whole seconds.
pub fn now() -> DateTime<Utc> {
    std::env::var(SOURCE_DATE_EPOCH)
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
        .unwrap_or_else(|| {
            let t = Utc::now();
            Utc.timestamp_opt(t.timestamp(), 0).single().unwrap_or(t)
        })
}
