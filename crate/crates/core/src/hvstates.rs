//! Deterministic hidden-variable states.
//!
//! A party state fixes the answers of all four local observables as the tuple
//! `(d0, d1, t0, t1)`. A realistic state is any such tuple (36 of them); a
//! noncontextual one additionally obeys the local compatibility implications
//!
//! * `tj = aj  =>  d0 = 0`
//! * `tj = bj  =>  d1 = 0`
//! * `t0 = c0  =>  t1 != c1` (and symmetrically)
//!
//! which leaves 14 states per party. Joint states are A-major Cartesian products.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::observables::{Outcome, Party, Slot};

/// Outcome label of a trichotomic observable. The slot index is implied by position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    A,
    B,
    C,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::A, Label::B, Label::C];

    fn outcome(self) -> Outcome {
        match self {
            Label::A => Outcome::A,
            Label::B => Outcome::B,
            Label::C => Outcome::C,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelClass {
    Realistic,
    Noncontextual,
}

impl ModelClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelClass::Realistic => "realistic",
            ModelClass::Noncontextual => "noncontextual",
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "realistic" => Ok(ModelClass::Realistic),
            "noncontextual" => Ok(ModelClass::Noncontextual),
            other => Err(other.to_string()),
        }
    }
}

/// Answers of one party to `(D0, D1, T0, T1)`.
///
/// The derived ordering is the canonical lexicographic one: `0 < 1` and `a < b < c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartyAssignment {
    pub d0: bool,
    pub d1: bool,
    pub t0: Label,
    pub t1: Label,
}

impl PartyAssignment {
    pub fn new(d0: bool, d1: bool, t0: Label, t1: Label) -> Self {
        PartyAssignment { d0, d1, t0, t1 }
    }

    pub fn value(&self, slot: Slot) -> Outcome {
        let bit = |b: bool| if b { Outcome::One } else { Outcome::Zero };
        match slot {
            Slot::D0 => bit(self.d0),
            Slot::D1 => bit(self.d1),
            Slot::T0 => self.t0.outcome(),
            Slot::T1 => self.t1.outcome(),
        }
    }

    pub fn is_noncontextual(&self) -> bool {
        let ts = [self.t0, self.t1];
        if ts.contains(&Label::A) && self.d0 {
            return false;
        }
        if ts.contains(&Label::B) && self.d1 {
            return false;
        }
        !(self.t0 == Label::C && self.t1 == Label::C)
    }

    pub fn is_in(&self, class: ModelClass) -> bool {
        match class {
            ModelClass::Realistic => true,
            ModelClass::Noncontextual => self.is_noncontextual(),
        }
    }

    pub fn fields(&self) -> [&'static str; 4] {
        Slot::ALL.map(|slot| slot.outcome_str(self.value(slot)).unwrap())
    }

    fn from_fields(fields: &[&str]) -> Option<Self> {
        let bit = |s: &str| match s {
            "0" => Some(false),
            "1" => Some(true),
            _ => None,
        };
        let label = |slot: Slot, s: &str| {
            Label::ALL
                .into_iter()
                .find(|l| slot.outcome_str(l.outcome()) == Some(s))
        };
        match fields {
            [d0, d1, t0, t1] => Some(PartyAssignment {
                d0: bit(d0)?,
                d1: bit(d1)?,
                t0: label(Slot::T0, t0)?,
                t1: label(Slot::T1, t1)?,
            }),
            _ => None,
        }
    }
}

impl fmt::Display for PartyAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.fields().join(","))
    }
}

pub fn is_noncontextual(s: &PartyAssignment) -> bool {
    s.is_noncontextual()
}

/// A complete hidden-variable state `(d0A, d1A, t0A, t1A, d0B, d1B, t0B, t1B)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointAssignment {
    pub a: PartyAssignment,
    pub b: PartyAssignment,
}

impl JointAssignment {
    pub fn new(a: PartyAssignment, b: PartyAssignment) -> Self {
        JointAssignment { a, b }
    }

    pub fn party(&self, party: Party) -> &PartyAssignment {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
        }
    }

    pub fn is_in(&self, class: ModelClass) -> bool {
        self.a.is_in(class) && self.b.is_in(class)
    }

    pub fn fields(&self) -> [&'static str; 8] {
        let mut out = [""; 8];
        out[..4].copy_from_slice(&self.a.fields());
        out[4..].copy_from_slice(&self.b.fields());
        out
    }
}

impl fmt::Display for JointAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.fields().join(","))
    }
}

/// Parses `"1,0,b0,b1,0,1,a0,c1"`, with or without surrounding parentheses.
impl FromStr for JointAssignment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let fields: Vec<&str> = inner.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(format!("expected 8 fields, got {}", fields.len()));
        }
        let a = PartyAssignment::from_fields(&fields[..4]);
        let b = PartyAssignment::from_fields(&fields[4..]);
        match (a, b) {
            (Some(a), Some(b)) => Ok(JointAssignment { a, b }),
            _ => Err(format!("invalid joint assignment {s:?}")),
        }
    }
}

impl Serialize for JointAssignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.fields().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JointAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let fields = Vec::<String>::deserialize(deserializer)?;
        fields.join(",").parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for PartyAssignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.fields().serialize(serializer)
    }
}

/// Party states of `class` in lexicographic `(d0, d1, t0, t1)` order.
pub fn enumerate_party(class: ModelClass) -> Vec<PartyAssignment> {
    let mut out = Vec::with_capacity(36);
    for d0 in [false, true] {
        for d1 in [false, true] {
            for t0 in Label::ALL {
                for t1 in Label::ALL {
                    let s = PartyAssignment { d0, d1, t0, t1 };
                    if s.is_in(class) {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

/// Joint states of `class`, A-major.
pub fn enumerate_joint(class: ModelClass) -> Vec<JointAssignment> {
    let party = enumerate_party(class);
    party
        .iter()
        .flat_map(|&a| party.iter().map(move |&b| JointAssignment { a, b }))
        .collect()
}
