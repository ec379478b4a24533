//! Simulation clock for replaying historical data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{HourlySeries, Timestamp};

pub const MIN_SPEED: f64 = 0.1;
pub const MAX_SPEED: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Simulation time advancing at `speed` hours per wall-clock second over the
/// inclusive `[start, end]` span. Partial hours accumulate in
/// `fractional_accum` until a whole hour can be emitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayClock {
    pub sim_time: Timestamp,
    pub speed: f64,
    pub paused: bool,
    pub start: Timestamp,
    pub end: Timestamp,
    pub fractional_accum: f64,
}

/// The clock as shown to clients. The partial-hour accumulator depends on
/// wall-clock tick timing and is left out so that views are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockView {
    pub sim_time: Timestamp,
    pub speed: f64,
    pub paused: bool,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl ReplayClock {
    pub fn view(&self) -> ClockView {
        ClockView {
            sim_time: self.sim_time,
            speed: self.speed,
            paused: self.paused,
            start: self.start,
            end: self.end,
        }
    }

    pub fn new(
        start: Timestamp,
        end: Timestamp,
        sim_time: Timestamp,
        speed: f64,
        paused: bool,
    ) -> Result<Self> {
        if end < start {
            return Err(Error::Domain(format!(
                "replay span end {end} precedes start {start}"
            )));
        }
        let clock = ReplayClock {
            sim_time: sim_time.clamp(start, end),
            speed: MIN_SPEED,
            paused,
            start,
            end,
            fractional_accum: 0.0,
        };
        clock.set_speed(speed)
    }

    /// Advances by `speed * wall_dt` hours, emitting whole hours only. Reaching
    /// the span end pauses the clock.
    pub fn tick(&self, wall_dt: f64) -> ReplayClock {
        if self.paused || wall_dt.is_nan() || wall_dt <= 0.0 {
            return *self;
        }
        let total = self.fractional_accum + self.speed * wall_dt;
        let whole = total.floor();
        let mut next = *self;
        let remaining = (self.end - self.sim_time) as f64;
        if whole >= remaining {
            next.sim_time = self.end;
            next.fractional_accum = 0.0;
            next.paused = true;
        } else {
            next.sim_time = self.sim_time + whole as i64;
            next.fractional_accum = total - whole;
        }
        next
    }

    /// Moves by `delta` hours within the span and drops any partial hour.
    pub fn step(&self, delta: i64) -> ReplayClock {
        ReplayClock {
            sim_time: (self.sim_time + delta).clamp(self.start, self.end),
            fractional_accum: 0.0,
            ..*self
        }
    }

    pub fn set_speed(&self, speed: f64) -> Result<ReplayClock> {
        if speed.is_nan() || speed <= 0.0 {
            return Err(Error::Domain(format!("speed must be > 0, got {speed}")));
        }
        Ok(ReplayClock {
            speed: speed.clamp(MIN_SPEED, MAX_SPEED),
            ..*self
        })
    }

    pub fn set_paused(&self, paused: bool) -> ReplayClock {
        ReplayClock { paused, ..*self }
    }

    /// Jumps to the nearest hour strictly beyond `sim_time` in `direction`
    /// whose rainfall is at least `threshold`. Returns the clock unchanged and
    /// `false` when no such hour exists in the span.
    pub fn seek_rainfall(
        &self,
        rainfall: &HourlySeries,
        threshold: f64,
        direction: Direction,
    ) -> Result<(ReplayClock, bool)> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::Domain(format!(
                "threshold must be > 0, got {threshold}"
            )));
        }
        let hit = |t: &Timestamp| rainfall.get(*t).is_some_and(|r| r >= threshold);
        let found = match direction {
            Direction::Forward => {
                let from = (self.sim_time + 1).max(rainfall.start);
                let to = self.end.min(rainfall.end() - 1);
                (from.0..=to.0).map(Timestamp).find(hit)
            }
            Direction::Backward => {
                let from = (self.sim_time - 1).min(rainfall.end() - 1);
                let to = self.start.max(rainfall.start);
                (to.0..=from.0).rev().map(Timestamp).find(hit)
            }
        };
        Ok(match found {
            Some(t) => (
                ReplayClock {
                    sim_time: t,
                    fractional_accum: 0.0,
                    ..*self
                },
                true,
            ),
            None => (*self, false),
        })
    }
}
