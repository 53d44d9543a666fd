use crate::astro::{Body, Epoch, StateVector};
use crate::dynamics::ThrustCommand;

use super::events::EventSpec;

/// One stored integrator node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: StateVector,
    /// Cumulative thrust ΔV, m/s.
    pub dv: f64,
    /// Index into [`Trajectory::segments`] of the arc that produced this sample.
    pub segment: usize,
}

/// A contiguous arc flown under one thrust command.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentInfo {
    pub label: String,
    pub cmd: ThrustCommand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub spec: EventSpec,
    /// Position of `spec` in the list passed to the propagator.
    pub index: usize,
    pub state: StateVector,
    pub dv: f64,
    /// Event function value at the reported state.
    pub g: f64,
}

impl EventRecord {
    pub fn epoch(&self) -> Epoch {
        self.state.epoch
    }
}

/// How a propagation run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested final epoch.
    EndTime,
    /// Stopped on a terminal event.
    Event,
    /// Crossed the surface of a body.
    Impact(Body),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub segments: Vec<SegmentInfo>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn new(initial: StateVector, label: impl Into<String>, cmd: ThrustCommand) -> Self {
        Self {
            samples: vec![Sample {
                state: initial,
                dv: 0.0,
                segment: 0,
            }],
            events: Vec::new(),
            segments: vec![SegmentInfo {
                label: label.into(),
                cmd,
            }],
            termination: Termination::EndTime,
        }
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn initial_state(&self) -> StateVector {
        self.first().state
    }

    pub fn final_state(&self) -> StateVector {
        self.last().state
    }

    pub fn start_epoch(&self) -> Epoch {
        self.first().state.epoch
    }

    pub fn end_epoch(&self) -> Epoch {
        self.last().state.epoch
    }

    /// Cumulative ΔV at the last sample, m/s.
    pub fn dv_total(&self) -> f64 {
        self.last().dv
    }

    /// Mass consumed between the first and last sample, kg.
    pub fn propellant_used(&self) -> f64 {
        self.first().state.mass - self.last().state.mass
    }

    pub fn thrust_on(&self, sample: &Sample) -> bool {
        self.segments[sample.segment].cmd.on
    }

    /// Total time with the thruster firing, s.
    pub fn thrust_time(&self) -> f64 {
        self.samples
            .windows(2)
            .filter(|w| self.segments[w[1].segment].cmd.on)
            .map(|w| w[1].state.epoch - w[0].state.epoch)
            .sum()
    }

    /// Renames every segment.
    pub fn with_label(mut self, label: &str) -> Self {
        for s in &mut self.segments {
            s.label = label.to_string();
        }
        self
    }

    /// Appends `next`, which must start where `self` ends; ΔV and segment indices are offset.
    pub fn append(&mut self, next: Trajectory) {
        let dv0 = self.dv_total();
        let seg0 = self.segments.len();
        let t_end = self.end_epoch();
        self.segments.extend(next.segments);
        for mut s in next.samples {
            s.dv += dv0;
            s.segment += seg0;
            if s.state.epoch <= t_end {
                // Junction sample duplicates the current end.
                continue;
            }
            self.samples.push(s);
        }
        for mut e in next.events {
            e.dv += dv0;
            self.events.push(e);
        }
        self.termination = next.termination;
    }

    /// Last sample at or before `epoch`.
    pub fn sample_index_at(&self, epoch: Epoch) -> usize {
        self.samples
            .partition_point(|s| s.state.epoch <= epoch)
            .saturating_sub(1)
    }

    pub fn events_matching<'a>(
        &'a self,
        pred: impl Fn(&EventSpec) -> bool + 'a,
    ) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.events.iter().filter(move |e| pred(&e.spec))
    }
}
