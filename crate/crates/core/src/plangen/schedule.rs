//! Booking recommended options through a tool-call style interface.
//!
//! The planner never touches a calendar directly. It sends
//! `{"method": "book_appointment", "arguments": {"role", "date", "duration"}}`
//! and reads back `{"status", "task_id", "slot"}`. [`InMemoryCalendar`] is
//! the bundled implementation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{task_owner, CarePlan, PlanConfig, PlanError};
use crate::argcore::{ArgumentGraph, OptionId, Role};

/// Version written into and required from calendar files.
pub const CALENDAR_FORMAT_VERSION: u64 = 1;

/// The only method the booking protocol defines.
pub const BOOK_APPOINTMENT: &str = "book_appointment";

/// Time of day with minute resolution, written `HH:MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(u16);

impl ClockTime {
    pub fn from_minutes(minutes: u16) -> Option<Self> {
        (minutes <= 24 * 60).then_some(ClockTime(minutes))
    }

    pub fn minutes(self) -> u16 {
        self.0
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("time `{s}` is not HH:MM");
        let (h, m) = s.split_once(':').ok_or_else(bad)?;
        if h.len() != 2 || m.len() != 2 {
            return Err(bad());
        }
        let h: u16 = h.parse().map_err(|_| bad())?;
        let m: u16 = m.parse().map_err(|_| bad())?;
        if m >= 60 || h > 24 || (h == 24 && m > 0) {
            return Err(bad());
        }
        Ok(ClockTime(h * 60 + m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A block of time on one date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slot {
    pub date: NaiveDate,
    pub start: ClockTime,
    pub end: ClockTime,
}

impl Slot {
    fn overlaps(&self, other: &Slot) -> bool {
        self.date == other.date && self.start < other.end && other.start < self.end
    }
}

/// Availability of one role.
pub type Window = Slot;

/// Calendar file contents: when each role is available and what is
/// already booked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calendar {
    pub format_version: u64,
    /// First date tasks may be placed on.
    pub start_date: NaiveDate,
    pub availability: BTreeMap<Role, Vec<Window>>,
    #[serde(default)]
    pub booked: BTreeMap<Role, Vec<Slot>>,
}

impl Calendar {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.format_version != CALENDAR_FORMAT_VERSION {
            return Err(PlanError::Calendar(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        for (role, slots) in self.availability.iter().chain(&self.booked) {
            if let Some(s) = slots.iter().find(|s| s.start >= s.end) {
                return Err(PlanError::Calendar(format!(
                    "{role}: slot on {} ends before it starts",
                    s.date
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        let c: Calendar =
            serde_json::from_str(text).map_err(|e| PlanError::Calendar(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BookingArguments {
    pub role: Role,
    /// Earliest acceptable date.
    pub date: NaiveDate,
    /// Minutes.
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolCall {
    pub method: String,
    pub arguments: BookingArguments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BookingStatus {
    /// The role has no calendar; the task awaits manual booking.
    Proposed,
    Booked,
    /// The role's calendar has no free slot long enough.
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolResult {
    pub status: BookingStatus,
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<Slot>,
}

/// Anything that answers booking tool calls.
pub trait BookingAgent {
    fn call(&mut self, call: &ToolCall) -> Result<ToolResult, PlanError>;
}

/// Greedy earliest-fit booking over a [`Calendar`]. Task ids are issued
/// in call order as `task-001`, `task-002`, ...
#[derive(Debug, Clone)]
pub struct InMemoryCalendar {
    calendar: Calendar,
    issued: u32,
}

impl InMemoryCalendar {
    pub fn new(calendar: Calendar) -> Self {
        InMemoryCalendar { calendar, issued: 0 }
    }

    /// The calendar including everything booked so far.
    pub fn state(&self) -> &Calendar {
        &self.calendar
    }

    fn earliest_fit(&self, args: &BookingArguments) -> Option<Slot> {
        let windows = self.calendar.availability.get(&args.role)?;
        let booked = self.calendar.booked.get(&args.role).map(Vec::as_slice).unwrap_or(&[]);
        let mut windows: Vec<&Window> = windows.iter().filter(|w| w.date >= args.date).collect();
        windows.sort();
        let duration = u16::try_from(args.duration).ok()?;
        for w in windows {
            let mut busy: Vec<&Slot> = booked.iter().filter(|b| b.overlaps(w)).collect();
            busy.sort();
            let mut start = w.start.minutes();
            for b in busy.iter().map(|b| Some(*b)).chain([None]) {
                let gap_end = b.map_or(w.end.minutes(), |b| b.start.minutes().max(start));
                if gap_end.saturating_sub(start) >= duration {
                    return Some(Slot {
                        date: w.date,
                        start: ClockTime(start),
                        end: ClockTime(start + duration),
                    });
                }
                if let Some(b) = b {
                    start = start.max(b.end.minutes());
                }
            }
        }
        None
    }
}

impl BookingAgent for InMemoryCalendar {
    fn call(&mut self, call: &ToolCall) -> Result<ToolResult, PlanError> {
        if call.method != BOOK_APPOINTMENT {
            return Err(PlanError::ToolCall(format!("unknown method `{}`", call.method)));
        }
        if call.arguments.duration == 0 {
            return Err(PlanError::ToolCall("duration must be > 0".into()));
        }
        self.issued += 1;
        let task_id = format!("task-{:03}", self.issued);
        let args = &call.arguments;
        if !self.calendar.availability.contains_key(&args.role) {
            return Ok(ToolResult {
                status: BookingStatus::Proposed,
                task_id,
                slot: None,
            });
        }
        Ok(match self.earliest_fit(args) {
            Some(slot) => {
                self.calendar.booked.entry(args.role).or_default().push(slot);
                ToolResult {
                    status: BookingStatus::Booked,
                    task_id,
                    slot: Some(slot),
                }
            }
            None => ToolResult {
                status: BookingStatus::Conflict,
                task_id,
                slot: None,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledTask {
    pub task_id: String,
    pub option_id: OptionId,
    pub provider_role: Role,
    pub earliest_date: NaiveDate,
    pub duration_minutes: u32,
    pub status: BookingStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<Slot>,
}

/// Books one task per recommended entry, in plan order.
pub fn schedule_tasks(
    plan: &CarePlan,
    graph: &ArgumentGraph,
    cfg: &PlanConfig,
    earliest_date: NaiveDate,
    agent: &mut dyn BookingAgent,
) -> Result<Vec<ScheduledTask>, PlanError> {
    let mut tasks = Vec::new();
    for entry in plan.entries.iter().filter(|e| e.tier.is_scheduled()) {
        let role = task_owner(entry, graph);
        let call = ToolCall {
            method: BOOK_APPOINTMENT.to_string(),
            arguments: BookingArguments {
                role,
                date: earliest_date,
                duration: cfg.task_duration_minutes,
            },
        };
        let result = agent.call(&call)?;
        tasks.push(ScheduledTask {
            task_id: result.task_id,
            option_id: entry.option.option_id.clone(),
            provider_role: role,
            earliest_date,
            duration_minutes: cfg.task_duration_minutes,
            status: result.status,
            slot: result.slot,
        });
    }
    Ok(tasks)
}
