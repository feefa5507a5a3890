//! Observable and outcome vocabulary shared by the classical and quantum sides.
//!
//! Each party holds four observables: two dichotomic ones (`D0`, `D1`, outcomes
//! `"0"`/`"1"`) and two trichotomic ones (`T0`, `T1`, outcomes `aj`/`bj`/`cj`
//! where `j` is the slot index).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::AtomError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub const ALL: [Party; 2] = [Party::A, Party::B];

    pub fn as_str(self) -> &'static str {
        match self {
            Party::A => "A",
            Party::B => "B",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Party {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Party::A),
            "B" => Ok(Party::B),
            _ => Err(()),
        }
    }
}

/// One of the four measurement slots available to each party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    D0,
    D1,
    T0,
    T1,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::D0, Slot::D1, Slot::T0, Slot::T1];

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::D0 => "D0",
            Slot::D1 => "D1",
            Slot::T0 => "T0",
            Slot::T1 => "T1",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Slot::D0 => 0,
            Slot::D1 => 1,
            Slot::T0 => 2,
            Slot::T1 => 3,
        }
    }

    pub fn is_dichotomic(self) -> bool {
        matches!(self, Slot::D0 | Slot::D1)
    }

    /// Outcomes in canonical order: `0, 1` for D-slots and `a, b, c` for T-slots.
    pub fn outcomes(self) -> &'static [Outcome] {
        if self.is_dichotomic() {
            &[Outcome::Zero, Outcome::One]
        } else {
            &[Outcome::A, Outcome::B, Outcome::C]
        }
    }

    /// String form of `outcome` when it belongs to this slot (`"a0"` for T0, `"a1"` for T1).
    pub fn outcome_str(self, outcome: Outcome) -> Option<&'static str> {
        let s = match (self, outcome) {
            (Slot::D0 | Slot::D1, Outcome::Zero) => "0",
            (Slot::D0 | Slot::D1, Outcome::One) => "1",
            (Slot::T0, Outcome::A) => "a0",
            (Slot::T0, Outcome::B) => "b0",
            (Slot::T0, Outcome::C) => "c0",
            (Slot::T1, Outcome::A) => "a1",
            (Slot::T1, Outcome::B) => "b1",
            (Slot::T1, Outcome::C) => "c1",
            _ => return None,
        };
        Some(s)
    }

    pub fn parse_outcome(self, s: &str) -> Option<Outcome> {
        self.outcomes()
            .iter()
            .copied()
            .find(|&o| self.outcome_str(o) == Some(s))
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slot {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Slot::ALL.into_iter().find(|slot| slot.as_str() == s).ok_or(())
    }
}

/// Outcome of a single observable. Which variants are legal depends on the slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Zero,
    One,
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservableRef {
    pub party: Party,
    pub slot: Slot,
}

impl ObservableRef {
    pub const fn new(party: Party, slot: Slot) -> Self {
        ObservableRef { party, slot }
    }

    /// All eight observables, A-major then slot order.
    pub fn all() -> impl Iterator<Item = ObservableRef> {
        Party::ALL
            .into_iter()
            .flat_map(|p| Slot::ALL.into_iter().map(move |s| ObservableRef::new(p, s)))
    }
}

impl fmt::Display for ObservableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.slot, self.party)
    }
}

/// "Observable `obs` returned `outcome`". The outcome is always valid for the slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventAtom {
    obs: ObservableRef,
    outcome: Outcome,
}

impl EventAtom {
    pub fn new(obs: ObservableRef, outcome: Outcome) -> Result<Self, AtomError> {
        if obs.slot.outcome_str(outcome).is_none() {
            return Err(AtomError::OutcomeMismatch {
                slot: obs.slot.to_string(),
                outcome: format!("{outcome:?}"),
            });
        }
        Ok(EventAtom { obs, outcome })
    }

    /// Builds an atom from its textual parts, e.g. `("B", "T0", "a0")`.
    pub fn parse(party: &str, slot: &str, outcome: &str) -> Result<Self, AtomError> {
        let party = party
            .parse::<Party>()
            .map_err(|_| AtomError::UnknownParty(party.to_string()))?;
        let slot = slot
            .parse::<Slot>()
            .map_err(|_| AtomError::UnknownSlot(slot.to_string()))?;
        let outcome = slot
            .parse_outcome(outcome)
            .ok_or_else(|| AtomError::OutcomeMismatch {
                slot: slot.to_string(),
                outcome: outcome.to_string(),
            })?;
        Ok(EventAtom {
            obs: ObservableRef::new(party, slot),
            outcome,
        })
    }

    pub fn observable(&self) -> ObservableRef {
        self.obs
    }

    pub fn party(&self) -> Party {
        self.obs.party
    }

    pub fn slot(&self) -> Slot {
        self.obs.slot
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn outcome_str(&self) -> &'static str {
        self.obs
            .slot
            .outcome_str(self.outcome)
            .expect("validated at construction")
    }
}

impl fmt::Display for EventAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.obs, self.outcome_str())
    }
}

/// Wire form `{"party":"B","obs":"D0","out":"1"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomJson {
    pub party: String,
    pub obs: String,
    pub out: String,
}

impl From<&EventAtom> for AtomJson {
    fn from(atom: &EventAtom) -> Self {
        AtomJson {
            party: atom.party().as_str().to_string(),
            obs: atom.slot().as_str().to_string(),
            out: atom.outcome_str().to_string(),
        }
    }
}

impl Serialize for EventAtom {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        AtomJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EventAtom {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = AtomJson::deserialize(deserializer)?;
        EventAtom::parse(&raw.party, &raw.obs, &raw.out).map_err(serde::de::Error::custom)
    }
}

/// Shorthand used by the built-in inequality tables: `atom(B, T0, "a0")`.
pub(crate) fn atom(party: Party, slot: Slot, outcome: &str) -> EventAtom {
    let outcome = slot
        .parse_outcome(outcome)
        .unwrap_or_else(|| panic!("bad built-in outcome {outcome} for {slot}"));
    EventAtom {
        obs: ObservableRef::new(party, slot),
        outcome,
    }
}
