//! Attribution of a fleet collision to a driving mode.

use chrono::{NaiveDateTime, TimeDelta};

use super::{DrivingMode, IngestError};

/// Look-back window before impact during which any ADS engagement makes
/// the collision a testing-operations claim. The window is closed.
pub const ENGAGEMENT_LOOKBACK: TimeDelta = TimeDelta::seconds(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngagementTrace {
    /// `(start, end)` spans with the ADS engaged, sorted and disjoint.
    pub intervals: Vec<(NaiveDateTime, NaiveDateTime)>,
    pub human_in_driver_seat: bool,
    pub impact_time: NaiveDateTime,
}

impl EngagementTrace {
    pub fn validate(&self) -> Result<(), IngestError> {
        for (i, (start, end)) in self.intervals.iter().enumerate() {
            if start > end {
                return Err(IngestError::InvalidTrace(format!(
                    "interval {i} ends ({end}) before it starts ({start})"
                )));
            }
        }
        for (i, pair) in self.intervals.windows(2).enumerate() {
            if pair[1].0 < pair[0].1 {
                return Err(IngestError::InvalidTrace(format!(
                    "intervals {i} and {} overlap or are out of order",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    fn engaged_within_lookback(&self) -> bool {
        let window_start = self.impact_time - ENGAGEMENT_LOOKBACK;
        self.intervals
            .iter()
            .any(|(start, end)| *start <= self.impact_time && *end >= window_start)
    }
}

/// Rider-only when nobody sits behind the wheel; otherwise testing
/// operations if the ADS was engaged at any instant of
/// `[impact − 5 s, impact]`, else manual.
pub fn classify_mode(trace: &EngagementTrace) -> Result<DrivingMode, IngestError> {
    trace.validate()?;
    Ok(if !trace.human_in_driver_seat {
        DrivingMode::RiderOnly
    } else if trace.engaged_within_lookback() {
        DrivingMode::TestingOperations
    } else {
        DrivingMode::Manual
    })
}
