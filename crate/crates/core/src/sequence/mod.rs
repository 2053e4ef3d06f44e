//! Pulse sequences: representation, text DSL, gate constructors and
//! compilation to unitaries.

mod dsl;
mod expr;
pub mod gates;
pub mod unitary;

use std::fmt;

pub use dsl::{parse_sequence, parse_sequence_for};
pub use expr::Expr;
pub use gates::{composite_z, controlled_root_not, GateParams};
pub use unitary::{
    compile_unitary, equivalent_up_to_diagonal_phases, equivalent_up_to_global_phase,
    EquivalenceLevel,
};

use crate::density::{DensityState, RotationSpec};
use crate::error::{Error, Result};
use crate::spin::{CouplingMask, SpinSystem};

#[derive(Debug, Clone, PartialEq)]
pub enum PulseEvent {
    Rotation(RotationSpec),
    Delay { duration: Expr, mask: CouplingMask },
    Gradient,
}

impl PulseEvent {
    pub fn delay(duration: Expr, mask: CouplingMask) -> Self {
        PulseEvent::Delay { duration, mask }
    }

    /// Validates labels and resolves the delay duration (if any) against `sys`.
    fn check(&self, sys: &SpinSystem) -> Result<Option<f64>> {
        match self {
            PulseEvent::Rotation(spec) => spec.target_indices(sys).map(|_| None),
            PulseEvent::Delay { duration, mask } => {
                mask.validate(sys)?;
                let t = duration.evaluate(sys)?;
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::NonPositiveDelay(t));
                }
                Ok(Some(t))
            }
            PulseEvent::Gradient => Ok(None),
        }
    }
}

/// Where an event came from in DSL source (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Sequence {
    pub name: String,
    pub events: Vec<PulseEvent>,
    /// One entry per event; `None` for constructed events.
    pub spans: Vec<Option<SourceSpan>>,
}

impl Sequence {
    pub fn new(name: impl Into<String>) -> Self {
        Sequence {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, event: PulseEvent) {
        self.events.push(event);
        self.spans.push(None);
    }

    pub fn extend(&mut self, other: Sequence) {
        self.events.extend(other.events);
        self.spans.extend(other.spans);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Resolved delay durations, one per `Delay` event.
    pub fn delays(&self, sys: &SpinSystem) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (i, ev) in self.events.iter().enumerate() {
            if let Some(t) = self.located(i, ev.check(sys))? {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Checks every label and delay against `sys`.
    pub fn validate(&self, sys: &SpinSystem) -> Result<()> {
        self.delays(sys).map(|_| ())
    }

    fn located<T>(&self, index: usize, r: Result<T>) -> Result<T> {
        match (r, self.spans.get(index).copied().flatten()) {
            (
                Err(
                    e @ (Error::UnknownLabel(_)
                    | Error::NonPositiveDelay(_)
                    | Error::ZeroCoupling(..)),
                ),
                Some(span),
            ) => Err(Error::Syntax {
                line: span.line,
                column: span.column,
                message: e.to_string(),
            }),
            (r, _) => r,
        }
    }

    /// Runs the sequence on `state` in place.
    pub fn execute(&self, state: &mut DensityState, sys: &SpinSystem) -> Result<()> {
        self.validate(sys)?;
        for ev in &self.events {
            match ev {
                PulseEvent::Rotation(spec) => state.apply_rotation(sys, spec)?,
                PulseEvent::Delay { duration, mask } => {
                    state.evolve_free(sys, mask, duration.evaluate(sys)?)?
                }
                PulseEvent::Gradient => state.apply_gradient(),
            }
        }
        Ok(())
    }

    /// Canonical DSL text; parses back to the same events.
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Same sequence with every rotation angle multiplied by `scale`.
    pub fn with_scaled_rotations(&self, scale: f64) -> Sequence {
        let mut out = self.clone();
        for ev in &mut out.events {
            if let PulseEvent::Rotation(spec) = ev {
                spec.angle_rad *= scale;
            }
        }
        out
    }

    /// Labels referenced by any event.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for ev in &self.events {
            match ev {
                PulseEvent::Rotation(spec) => out.extend(spec.targets.iter().map(String::as_str)),
                PulseEvent::Delay { duration, mask } => {
                    out.extend(duration.labels());
                    if let CouplingMask::Only(pairs) = mask {
                        for (a, b) in pairs {
                            out.push(a);
                            out.push(b);
                        }
                    }
                }
                PulseEvent::Gradient => {}
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ev in &self.events {
            match ev {
                PulseEvent::Rotation(spec) => writeln!(
                    f,
                    "pulse {} {} {}",
                    spec.targets.join(","),
                    spec.angle_rad.to_degrees(),
                    spec.axis
                )?,
                PulseEvent::Delay { duration, mask } => {
                    write!(f, "delay {duration}")?;
                    match mask {
                        CouplingMask::Free => writeln!(f)?,
                        CouplingMask::Only(pairs) if pairs.is_empty() => {
                            writeln!(f, " couple none")?
                        }
                        CouplingMask::Only(pairs) => {
                            let list: Vec<String> =
                                pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                            writeln!(f, " couple {}", list.join(","))?
                        }
                    }
                }
                PulseEvent::Gradient => writeln!(f, "grad")?,
            }
        }
        Ok(())
    }
}
