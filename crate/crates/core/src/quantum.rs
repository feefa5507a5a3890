//! Born-rule predictions for the two-qutrit experiment.
//!
//! Eight real qutrit directions (`i`, `f`, and the eigenbases `a0 b0 c0`,
//! `a1 b1 c1` of the two trichotomic observables) define every observable.
//! The shared state is `(|02> - |11> + |20>) / sqrt(3)` in the A-major product
//! basis (index `3 * a + b`), optionally mixed with white noise:
//! `rho = v |psi><psi| + (1 - v) I / 9`.
//!
//! Dichotomic outcome `"0"` is never built as a rank-2 projector; its
//! probability is always taken as the complement of outcome `"1"`.

use std::fmt;

pub use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::QuantumError;
use crate::inequalities::{Inequality, Rational};
use crate::numfmt::fmt_sig;
use crate::observables::{EventAtom, ObservableRef, Outcome, Party, Slot};

/// Tolerance for orthogonality and normalization of constructed kets.
pub const ORTHO_TOL: f64 = 1e-12;
/// Tolerance for accumulated probability arithmetic.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: Vec<Complex64>,
}

impl Ket {
    /// Fails unless the squared norm is 1 within [`ORTHO_TOL`].
    pub fn new(amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > ORTHO_TOL {
            return Err(QuantumError::NotNormalized(norm_sq));
        }
        Ok(Ket { amps })
    }

    pub fn normalized(amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QuantumError::NotNormalized(0.0));
        }
        Ok(Ket {
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, QuantumError> {
        Ket::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn expect_dim(&self, expected: usize) -> Result<(), QuantumError> {
        if self.dim() != expected {
            return Err(QuantumError::WrongDimension {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Names of the eight block directions, in storage order.
pub const KET_NAMES: [&str; 8] = ["i", "f", "a0", "b0", "c0", "a1", "b1", "c1"];

/// The eight qutrit directions of the orthogonality block.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardKets {
    kets: [Ket; 8],
}

impl StandardKets {
    fn slot(name: &str) -> Option<usize> {
        KET_NAMES.iter().position(|&n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Ket> {
        Self::slot(name).map(|k| &self.kets[k])
    }

    /// Replaces a direction. Returns `false` for an unknown name.
    pub fn set(&mut self, name: &str, ket: Ket) -> Result<bool, QuantumError> {
        ket.expect_dim(3)?;
        Ok(match Self::slot(name) {
            Some(k) => {
                self.kets[k] = ket;
                true
            }
            None => false,
        })
    }

    fn by(&self, name: &str) -> &Ket {
        self.get(name).expect("known ket name")
    }
}

pub fn standard_kets() -> StandardKets {
    let s2 = 1.0 / 2f64.sqrt();
    let s3 = 1.0 / 3f64.sqrt();
    let k = |a: [f64; 3]| Ket::from_real(&a).expect("unit vector");
    StandardKets {
        kets: [
            k([s3, s3, s3]),   // i
            k([s3, -s3, s3]),  // f
            k([0.0, s2, -s2]), // a0
            k([0.0, s2, s2]),  // b0
            k([1.0, 0.0, 0.0]),// c0
            k([s2, -s2, 0.0]), // a1
            k([s2, s2, 0.0]),  // b1
            k([0.0, 0.0, 1.0]),// c1
        ],
    }
}

/// Pairs that must be orthogonal: two bases plus the five links to `i`, `f` and `c0-c1`.
pub const BLOCK_EDGES: [(&str, &str); 11] = [
    ("a0", "b0"),
    ("a0", "c0"),
    ("b0", "c0"),
    ("a1", "b1"),
    ("a1", "c1"),
    ("b1", "c1"),
    ("i", "a0"),
    ("i", "a1"),
    ("f", "b0"),
    ("f", "b1"),
    ("c0", "c1"),
];

#[derive(Clone, Debug, Serialize)]
pub struct EdgeCheck {
    pub u: &'static str,
    pub v: &'static str,
    /// `|<u|v>|`
    pub overlap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub edges: Vec<EdgeCheck>,
    /// `|<f|i>|^2`, expected to be 1/9.
    pub fi_overlap_sq: f64,
    pub fi_pass: bool,
}

impl BlockReport {
    pub fn passed(&self) -> bool {
        self.fi_pass && self.edges.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .edges
            .iter()
            .filter(|e| !e.pass)
            .map(|e| format!("{} not orthogonal to {} (|<u|v>| = {:.3e})", e.u, e.v, e.overlap))
            .collect();
        if !self.fi_pass {
            out.push(format!("|<f|i>|^2 = {} (expected 1/9)", self.fi_overlap_sq));
        }
        out
    }
}

pub fn verify_block(kets: &StandardKets) -> BlockReport {
    let edges = BLOCK_EDGES
        .iter()
        .map(|&(u, v)| {
            let overlap = kets.by(u).inner(kets.by(v)).norm();
            EdgeCheck {
                u,
                v,
                overlap,
                pass: overlap < ORTHO_TOL,
            }
        })
        .collect();
    let fi = kets.by("f").fidelity(kets.by("i"));
    BlockReport {
        edges,
        fi_overlap_sq: fi,
        fi_pass: (fi - 1.0 / 9.0).abs() < ORTHO_TOL,
    }
}

/// Rank-1 outcome directions of one observable. D-slots list only outcome `"1"`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledObservable {
    pub obs: ObservableRef,
    pub outcomes: Vec<(Outcome, Ket)>,
}

impl LabeledObservable {
    pub fn direction(&self, outcome: Outcome) -> Option<&Ket> {
        self.outcomes
            .iter()
            .find(|(o, _)| *o == outcome)
            .map(|(_, k)| k)
    }
}

/// The eight observables, indexed like [`ObservableRef::all`].
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    items: Vec<LabeledObservable>,
}

impl ObservableSet {
    fn index(obs: ObservableRef) -> usize {
        let p = match obs.party {
            Party::A => 0,
            Party::B => 4,
        };
        p + obs.slot.index()
    }

    pub fn get(&self, obs: ObservableRef) -> &LabeledObservable {
        &self.items[Self::index(obs)]
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledObservable> {
        self.items.iter()
    }

    fn direction(&self, atom: &EventAtom) -> &Ket {
        self.get(atom.observable())
            .direction(atom.outcome())
            .expect("rank-1 outcome")
    }
}

/// Builds the observables from a set of block directions.
///
/// A uses `D0 = |i><i|`, `D1 = |f><f|` and the plain eigenbases. B swaps the
/// dichotomic pair and relabels its trichotomic bases: on `T0` the label `a0`
/// goes to `b1`, `b0` to `a1`, `c0` to `c1`; on `T1` the label `a1` goes to
/// `b0`, `b1` to `a0`, `c1` to `c0`.
pub fn observables_from(kets: &StandardKets) -> ObservableSet {
    use Outcome::{One, A, B, C};
    let k = |n: &str| kets.by(n).clone();
    let obs = |party, slot, outcomes: Vec<(Outcome, Ket)>| LabeledObservable {
        obs: ObservableRef::new(party, slot),
        outcomes,
    };
    ObservableSet {
        items: vec![
            obs(Party::A, Slot::D0, vec![(One, k("i"))]),
            obs(Party::A, Slot::D1, vec![(One, k("f"))]),
            obs(Party::A, Slot::T0, vec![(A, k("a0")), (B, k("b0")), (C, k("c0"))]),
            obs(Party::A, Slot::T1, vec![(A, k("a1")), (B, k("b1")), (C, k("c1"))]),
            obs(Party::B, Slot::D0, vec![(One, k("f"))]),
            obs(Party::B, Slot::D1, vec![(One, k("i"))]),
            obs(Party::B, Slot::T0, vec![(A, k("b1")), (B, k("a1")), (C, k("c1"))]),
            obs(Party::B, Slot::T1, vec![(A, k("b0")), (B, k("a0")), (C, k("c0"))]),
        ],
    }
}

pub fn standard_observables() -> ObservableSet {
    observables_from(&standard_kets())
}

/// `(|02> - |11> + |20>) / sqrt(3)`, A-major.
pub fn entangled_ket() -> Ket {
    let s3 = 1.0 / 3f64.sqrt();
    let mut amps = [0.0; 9];
    amps[2] = s3;
    amps[4] = -s3;
    amps[6] = s3;
    Ket::from_real(&amps).expect("unit vector")
}

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    psi: Ket,
    visibility: f64,
}

impl BipartiteState {
    pub fn new(psi: Ket, visibility: f64) -> Result<Self, QuantumError> {
        psi.expect_dim(9)?;
        if !(0.0..=1.0).contains(&visibility) {
            return Err(QuantumError::InvalidVisibility(visibility));
        }
        Ok(BipartiteState { psi, visibility })
    }

    pub fn standard(visibility: f64) -> Result<Self, QuantumError> {
        Self::new(entangled_ket(), visibility)
    }

    pub fn psi(&self) -> &Ket {
        &self.psi
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn with_visibility(&self, visibility: f64) -> Result<Self, QuantumError> {
        Self::new(self.psi.clone(), visibility)
    }
}

/// A state together with the observables measured on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub state: BipartiteState,
    pub observables: ObservableSet,
}

fn one(atom: &EventAtom) -> EventAtom {
    EventAtom::new(atom.observable(), Outcome::One).expect("dichotomic slot")
}

fn split_atoms(atoms: &[EventAtom]) -> Result<(Option<EventAtom>, Option<EventAtom>), QuantumError> {
    let mut a = None;
    let mut b = None;
    for atom in atoms {
        let slot = match atom.party() {
            Party::A => &mut a,
            Party::B => &mut b,
        };
        if slot.replace(*atom).is_some() {
            let shown: Vec<String> = atoms.iter().map(ToString::to_string).collect();
            return Err(QuantumError::UnsupportedTerm(shown.join(",")));
        }
    }
    Ok((a, b))
}

fn rat(r: Rational) -> f64 {
    r.to_f64().expect("finite rational")
}

impl Experiment {
    pub fn new(state: BipartiteState, observables: ObservableSet) -> Self {
        Experiment { state, observables }
    }

    /// The entangled state and the standard observables at visibility `v`.
    pub fn standard(visibility: f64) -> Result<Self, QuantumError> {
        Ok(Experiment {
            state: BipartiteState::standard(visibility)?,
            observables: standard_observables(),
        })
    }

    pub fn with_visibility(&self, visibility: f64) -> Result<Self, QuantumError> {
        Ok(Experiment {
            state: self.state.with_visibility(visibility)?,
            observables: self.observables.clone(),
        })
    }

    /// Pure-state probability of rank-1 outcomes on at most one observable per party.
    fn pure_rank1(&self, a: Option<&Ket>, b: Option<&Ket>) -> f64 {
        let psi = self.state.psi.amplitudes();
        match (a, b) {
            (None, None) => 1.0,
            (Some(u), Some(w)) => {
                let (u, w) = (u.amplitudes(), w.amplitudes());
                let mut amp = Complex64::zero();
                for x in 0..3 {
                    for y in 0..3 {
                        amp += (u[x] * w[y]).conj() * psi[3 * x + y];
                    }
                }
                amp.norm_sqr()
            }
            (Some(u), None) => {
                let u = u.amplitudes();
                (0..3)
                    .map(|y| (0..3).map(|x| u[x].conj() * psi[3 * x + y]).sum::<Complex64>().norm_sqr())
                    .sum()
            }
            (None, Some(w)) => {
                let w = w.amplitudes();
                (0..3)
                    .map(|x| (0..3).map(|y| w[y].conj() * psi[3 * x + y]).sum::<Complex64>().norm_sqr())
                    .sum()
            }
        }
    }

    fn prob(&self, a: Option<EventAtom>, b: Option<EventAtom>) -> f64 {
        if let Some(x) = a.filter(|x| x.outcome() == Outcome::Zero) {
            return self.prob(None, b) - self.prob(Some(one(&x)), b);
        }
        if let Some(y) = b.filter(|y| y.outcome() == Outcome::Zero) {
            return self.prob(a, None) - self.prob(a, Some(one(&y)));
        }
        let dir_a = a.as_ref().map(|x| self.observables.direction(x));
        let dir_b = b.as_ref().map(|y| self.observables.direction(y));
        let pure = self.pure_rank1(dir_a, dir_b);
        let events = a.is_some() as i32 + b.is_some() as i32;
        let noise = (1.0f64 / 3.0).powi(events);
        let v = self.state.visibility;
        v * pure + (1.0 - v) * noise
    }

    /// `P(atom_a, atom_b)` with one atom per party.
    pub fn joint_probability(&self, atom_a: &EventAtom, atom_b: &EventAtom) -> Result<f64, QuantumError> {
        self.event_probability(&[*atom_a, *atom_b])
    }

    /// Probability that every atom occurs; at most one atom per party.
    pub fn event_probability(&self, atoms: &[EventAtom]) -> Result<f64, QuantumError> {
        let (a, b) = split_atoms(atoms)?;
        Ok(self.prob(a, b))
    }

    /// `P(target | condition)` for events on opposite parties.
    pub fn conditional_probability(
        &self,
        target: &EventAtom,
        condition: &EventAtom,
    ) -> Result<f64, QuantumError> {
        let marginal = self.event_probability(&[*condition])?;
        if marginal <= ORTHO_TOL {
            return Err(QuantumError::ZeroProbabilityCondition(condition.to_string()));
        }
        Ok(self.event_probability(&[*target, *condition])? / marginal)
    }

    /// The normalized state of the other party after `condition` is observed on
    /// the pure component. Only rank-1 outcomes at full visibility qualify.
    pub fn conditioned_state(&self, condition: &EventAtom) -> Result<Ket, QuantumError> {
        if condition.outcome() == Outcome::Zero || self.state.visibility < 1.0 {
            return Err(QuantumError::NoConditionedState(condition.to_string()));
        }
        let w = self.observables.direction(condition).amplitudes();
        let psi = self.state.psi.amplitudes();
        let amps: Vec<Complex64> = (0..3)
            .map(|r| {
                (0..3)
                    .map(|s| match condition.party() {
                        Party::B => w[s].conj() * psi[3 * r + s],
                        Party::A => w[s].conj() * psi[3 * s + r],
                    })
                    .sum()
            })
            .collect();
        Ket::normalized(amps)
            .map_err(|_| QuantumError::ZeroProbabilityCondition(condition.to_string()))
    }

    /// Per-term probabilities, conditioned for a conditional inequality.
    pub fn term_probabilities(&self, ineq: &Inequality) -> Result<Vec<f64>, QuantumError> {
        let def = ineq.def();
        match ineq.condition() {
            None => def
                .terms
                .iter()
                .map(|t| self.event_probability(t.atoms()))
                .collect(),
            Some(cond) => {
                let marginal = self.event_probability(&[cond])?;
                if marginal <= ORTHO_TOL {
                    return Err(QuantumError::ZeroProbabilityCondition(cond.to_string()));
                }
                def.terms
                    .iter()
                    .map(|t| {
                        let mut atoms = t.atoms().to_vec();
                        atoms.push(cond);
                        Ok(self.event_probability(&atoms)? / marginal)
                    })
                    .collect()
            }
        }
    }

    /// Coefficient-weighted sum of the term probabilities.
    pub fn quantum_value(&self, ineq: &Inequality) -> Result<f64, QuantumError> {
        let probs = self.term_probabilities(ineq)?;
        Ok(ineq
            .def()
            .terms
            .iter()
            .zip(probs)
            .map(|(t, p)| rat(t.coef()) * p)
            .sum())
    }

    /// Every outcome pair of every `(A observable, B observable)` setting.
    pub fn probability_table(&self) -> ProbabilityTable {
        let mut rows = Vec::with_capacity(16 * 9);
        for sa in Slot::ALL {
            for sb in Slot::ALL {
                for &oa in sa.outcomes() {
                    for &ob in sb.outcomes() {
                        let a = EventAtom::new(ObservableRef::new(Party::A, sa), oa).unwrap();
                        let b = EventAtom::new(ObservableRef::new(Party::B, sb), ob).unwrap();
                        rows.push(TableRow {
                            a,
                            b,
                            p: self.prob(Some(a), Some(b)),
                        });
                    }
                }
            }
        }
        ProbabilityTable { rows }
    }
}

/// How the margin of a violated inequality is shared out as tolerated error per probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonConvention {
    /// Positive terms sit at their ideal values; each negative term may rise by epsilon.
    NegativesOnly,
    /// Every term may be off by epsilon in the harmful direction.
    Uniform,
}

impl EpsilonConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            EpsilonConvention::NegativesOnly => "negatives-only",
            EpsilonConvention::Uniform => "uniform",
        }
    }
}

impl fmt::Display for EpsilonConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Largest per-probability deviation that still leaves a violation.
pub fn epsilon_threshold(
    exp: &Experiment,
    ineq: &Inequality,
    convention: EpsilonConvention,
) -> Result<f64, QuantumError> {
    let value = exp.with_visibility(1.0)?.quantum_value(ineq)?;
    let margin = value - rat(ineq.bound());
    if margin <= 0.0 {
        return Err(QuantumError::NoViolation(value));
    }
    let def = ineq.def();
    let n = match convention {
        EpsilonConvention::NegativesOnly => def.negative_terms(),
        EpsilonConvention::Uniform => def.positive_terms() + def.negative_terms(),
    };
    Ok(margin / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalVisibility {
    /// Root of the affine interpolation between visibility 0 and 1.
    pub closed_form: f64,
    /// Root found by bisection on the exact quantum value.
    pub bisection: f64,
}

impl CriticalVisibility {
    pub fn agree(&self, tol: f64) -> bool {
        (self.closed_form - self.bisection).abs() <= tol
    }
}

/// Visibility at which the quantum value drops to the classical bound.
pub fn critical_visibility(exp: &Experiment, ineq: &Inequality) -> Result<CriticalVisibility, QuantumError> {
    let bound = rat(ineq.bound());
    let excess = |v: f64| -> Result<f64, QuantumError> {
        Ok(exp.with_visibility(v)?.quantum_value(ineq)? - bound)
    };
    let at_one = excess(1.0)?;
    if at_one <= 0.0 {
        return Err(QuantumError::NoViolation(at_one + bound));
    }
    let at_zero = excess(0.0)?;
    if at_zero > 0.0 {
        return Err(QuantumError::ViolatedByNoise(at_zero + bound));
    }
    let closed_form = -at_zero / (at_one - at_zero);

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalVisibility {
        closed_form,
        bisection: 0.5 * (lo + hi),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    pub a: EventAtom,
    pub b: EventAtom,
    pub p: f64,
}

#[derive(Serialize)]
struct TableRowJson {
    #[serde(rename = "obsA")]
    obs_a: &'static str,
    #[serde(rename = "outA")]
    out_a: &'static str,
    #[serde(rename = "obsB")]
    obs_b: &'static str,
    #[serde(rename = "outB")]
    out_b: &'static str,
    p: f64,
}

/// Joint outcome probabilities for all 16 settings, A slot major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    pub rows: Vec<TableRow>,
}

impl ProbabilityTable {
    pub fn get(&self, a: &EventAtom, b: &EventAtom) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.a == *a && r.b == *b)
            .map(|r| r.p)
    }

    /// Rows of one setting.
    pub fn setting(&self, sa: Slot, sb: Slot) -> impl Iterator<Item = &TableRow> {
        self.rows
            .iter()
            .filter(move |r| r.a.slot() == sa && r.b.slot() == sb)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("obsA,outA,obsB,outB,p\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.a.slot(),
                r.a.outcome_str(),
                r.b.slot(),
                r.b.outcome_str(),
                fmt_sig(r.p, 12)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<TableRowJson> = self
            .rows
            .iter()
            .map(|r| TableRowJson {
                obs_a: r.a.slot().as_str(),
                out_a: r.a.outcome_str(),
                obs_b: r.b.slot().as_str(),
                out_b: r.b.outcome_str(),
                p: r.p,
            })
            .collect();
        serde_json::to_string_pretty(&rows).unwrap()
    }
}

/// Largest `|sum of a setting's outcome probabilities - 1|` and the smallest single entry.
pub fn normalization_deviation(table: &ProbabilityTable) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut min_p = f64::INFINITY;
    for sa in Slot::ALL {
        for sb in Slot::ALL {
            let total: f64 = table.setting(sa, sb).map(|r| r.p).sum();
            worst = worst.max((total - 1.0).abs());
            for r in table.setting(sa, sb) {
                min_p = min_p.min(r.p);
            }
        }
    }
    (worst, min_p)
}

/// Largest change of a one-party marginal when the other party switches observable.
pub fn no_signaling_deviation(table: &ProbabilityTable) -> f64 {
    let mut worst = 0.0f64;
    for party in Party::ALL {
        for local in Slot::ALL {
            for &o in local.outcomes() {
                let marginals: Vec<f64> = Slot::ALL
                    .iter()
                    .map(|&remote| {
                        let (sa, sb) = match party {
                            Party::A => (local, remote),
                            Party::B => (remote, local),
                        };
                        table
                            .setting(sa, sb)
                            .filter(|r| match party {
                                Party::A => r.a.outcome() == o,
                                Party::B => r.b.outcome() == o,
                            })
                            .map(|r| r.p)
                            .sum()
                    })
                    .collect();
                let hi = marginals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = marginals.iter().copied().fold(f64::INFINITY, f64::min);
                worst = worst.max(hi - lo);
            }
        }
    }
    worst
}

/// Distance of the value at visibility 1/2 from the chord between visibilities 0 and 1.
pub fn affinity_deviation(exp: &Experiment, ineq: &Inequality) -> Result<f64, QuantumError> {
    let at = |v: f64| exp.with_visibility(v)?.quantum_value(ineq);
    let (q0, q_half, q1) = (at(0.0)?, at(0.5)?, at(1.0)?);
    Ok((q_half - 0.5 * (q0 + q1)).abs())
}

pub fn standard_experiment() -> Experiment {
    Experiment::standard(1.0).expect("visibility 1 is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::builtin;

    fn at(p: &str, s: &str, o: &str) -> EventAtom {
        EventAtom::parse(p, s, o).unwrap()
    }

    #[test]
    fn kets_are_exact_enough() {
        let k = standard_kets();
        let i = k.get("i").unwrap();
        let f = k.get("f").unwrap();
        assert!((f.inner(i).re - 1.0 / 3.0).abs() < ORTHO_TOL);
        assert!(k.get("a0").unwrap().inner(i).norm() < ORTHO_TOL);
        assert!(k.get("c0").unwrap().inner(k.get("c1").unwrap()).norm() < ORTHO_TOL);
        assert!(f.inner(k.get("b0").unwrap()).norm() < ORTHO_TOL);
    }

    #[test]
    fn block_passes_and_detects_tampering() {
        let report = verify_block(&standard_kets());
        assert!(report.passed(), "{:?}", report.failures());
        assert_eq!(report.edges.len(), 11);

        let mut bad = standard_kets();
        let b0 = bad.get("b0").unwrap().clone();
        bad.set("a0", b0).unwrap();
        let report = verify_block(&bad);
        assert!(!report.passed());
        assert!(report.failures().iter().any(|f| f.contains("a0 not orthogonal to b0")));
    }

    #[test]
    fn b_party_relabelling() {
        let obs = standard_observables();
        let k = standard_kets();
        let t0b = obs.get(ObservableRef::new(Party::B, Slot::T0));
        assert_eq!(t0b.direction(Outcome::A), k.get("b1"));
        assert_eq!(t0b.direction(Outcome::C), k.get("c1"));
        let d1a = obs.get(ObservableRef::new(Party::A, Slot::D1));
        assert_eq!(d1a.direction(Outcome::One), k.get("f"));
        assert_eq!(d1a.direction(Outcome::Zero), None);
        for o in obs.iter().filter(|o| !o.obs.slot.is_dichotomic()) {
            let d = &o.outcomes;
            for x in 0..3 {
                for y in x + 1..3 {
                    assert!(d[x].1.inner(&d[y].1).norm() < ORTHO_TOL);
                }
            }
        }
    }

    #[test]
    fn joint_probability_examples() {
        let exp = standard_experiment();
        let p = exp
            .joint_probability(&at("A", "D0", "1"), &at("B", "D1", "1"))
            .unwrap();
        assert!((p - 1.0 / 27.0).abs() < PROB_TOL);
        let p = exp
            .joint_probability(&at("A", "D0", "1"), &at("B", "T0", "a0"))
            .unwrap();
        assert!(p.abs() < ORTHO_TOL);
        let noisy = exp.with_visibility(0.0).unwrap();
        let p = noisy
            .joint_probability(&at("A", "D0", "1"), &at("B", "T0", "a0"))
            .unwrap();
        assert!((p - 1.0 / 9.0).abs() < PROB_TOL);
        let p = noisy
            .joint_probability(&at("A", "D0", "0"), &at("B", "D1", "0"))
            .unwrap();
        assert!((p - 4.0 / 9.0).abs() < PROB_TOL);
    }

    #[test]
    fn two_atoms_on_one_party_rejected() {
        let exp = standard_experiment();
        let err = exp
            .event_probability(&[at("A", "D0", "1"), at("A", "T0", "a0")])
            .unwrap_err();
        assert!(matches!(err, QuantumError::UnsupportedTerm(_)));
    }

    #[test]
    fn quantum_values() {
        let exp = standard_experiment();
        let v = |n: &str| exp.quantum_value(&builtin(n).unwrap()).unwrap();
        assert!((v("K") - 2.0 / 27.0).abs() < PROB_TOL);
        assert!((v("lemma2a") - 1.0 / 27.0).abs() < PROB_TOL);
        assert!((v("lemma3") - 1.0 / 27.0).abs() < PROB_TOL);
        assert!((v("lemma2a-conditional") - 1.0 / 9.0).abs() < PROB_TOL);
    }

    #[test]
    fn conditionals() {
        let exp = standard_experiment();
        let cond = at("B", "D0", "1");
        let p = exp.conditional_probability(&at("A", "D1", "1"), &cond).unwrap();
        assert!((p - 1.0 / 9.0).abs() < PROB_TOL);
        let p = exp.conditional_probability(&at("A", "T0", "a0"), &cond).unwrap();
        assert!(p.abs() < PROB_TOL);
        let state = exp.conditioned_state(&cond).unwrap();
        assert!((state.fidelity(standard_kets().get("i").unwrap()) - 1.0).abs() < ORTHO_TOL);
        assert!(exp.conditioned_state(&at("B", "D0", "0")).is_err());
    }

    #[test]
    fn zero_probability_condition_is_an_error() {
        assert!(Ket::new(vec![Complex64::zero(); 9]).is_err());
        let psi = Ket::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let exp = Experiment::new(BipartiteState::new(psi, 1.0).unwrap(), standard_observables());
        // B's c0 outcome on T0 points along |2>, orthogonal to |00>
        let never = at("B", "T0", "c0");
        assert!(matches!(
            exp.conditional_probability(&at("A", "D0", "1"), &never),
            Err(QuantumError::ZeroProbabilityCondition(_))
        ));
    }

    #[test]
    fn epsilon_thresholds() {
        let exp = standard_experiment();
        let k = builtin("K").unwrap();
        let e = epsilon_threshold(&exp, &k, EpsilonConvention::NegativesOnly).unwrap();
        assert!((e - 1.0 / 270.0).abs() < 1e-12);
        let c = builtin("lemma2a-conditional").unwrap();
        let e = epsilon_threshold(&exp, &c, EpsilonConvention::Uniform).unwrap();
        assert!((e - 1.0 / 27.0).abs() < 1e-12);
        let a = builtin("lemma2a").unwrap();
        let e = epsilon_threshold(&exp, &a, EpsilonConvention::Uniform).unwrap();
        assert!((e - 1.0 / 81.0).abs() < 1e-12);
    }

    #[test]
    fn no_violation_errors() {
        let exp = standard_experiment();
        let mut flipped = builtin("lemma2a").unwrap();
        if let Inequality::Plain(d) = &mut flipped {
            d.terms = d
                .terms
                .iter()
                .map(|t| crate::inequalities::ProbabilityTerm::new(-t.coef(), t.atoms().to_vec()).unwrap())
                .collect();
        }
        assert!(matches!(
            epsilon_threshold(&exp, &flipped, EpsilonConvention::Uniform),
            Err(QuantumError::NoViolation(_))
        ));
        assert!(matches!(
            critical_visibility(&exp, &flipped),
            Err(QuantumError::NoViolation(_))
        ));
    }

    #[test]
    fn critical_visibilities() {
        let exp = standard_experiment();
        let k = critical_visibility(&exp, &builtin("K").unwrap()).unwrap();
        assert!((k.closed_form - 27.0 / 28.0).abs() < 1e-12);
        assert!(k.agree(PROB_TOL));
        let a = critical_visibility(&exp, &builtin("lemma2a").unwrap()).unwrap();
        assert!((a.closed_form - 0.75).abs() < 1e-12);
        assert!(a.agree(PROB_TOL));
    }

    #[test]
    fn table_rows_and_csv() {
        let table = standard_experiment().probability_table();
        // 4 D-D settings x 4, 8 mixed x 6, 4 T-T x 9
        assert_eq!(table.rows.len(), 16 + 48 + 36);
        let csv = table.to_csv();
        assert!(csv.starts_with("obsA,outA,obsB,outB,p\n"));
        assert!(csv.contains("D0,1,D1,1,0.0370370370370\n"));
        assert!(table.to_json().contains("\"obsA\": \"D0\""));
    }

    #[test]
    fn invalid_visibility() {
        assert!(matches!(
            BipartiteState::standard(1.5),
            Err(QuantumError::InvalidVisibility(_))
        ));
    }
}
