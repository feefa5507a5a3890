//! Linear combinations of joint probabilities, evaluated exactly on
//! deterministic hidden-variable states.
//!
//! On a deterministic state every probability is either 0 or 1, so the value of
//! an inequality is the sum of the coefficients of the terms whose atoms all
//! match. The maximum over a model class is found by evaluating every vertex
//! (at most 1296 of them).

use std::collections::HashSet;
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::InequalityError;
use crate::hvstates::{enumerate_joint, JointAssignment, ModelClass};
use crate::observables::{atom, AtomJson, EventAtom, Party, Slot};

pub type Rational = Rational64;

/// `coef * P(atom_1, ..., atom_n)`; at most one atom per party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbabilityTerm {
    coef: Rational,
    atoms: Vec<EventAtom>,
}

impl ProbabilityTerm {
    pub fn new(coef: Rational, atoms: Vec<EventAtom>) -> Result<Self, InequalityError> {
        Self::validated(coef, atoms, "term")
    }

    fn validated(
        coef: Rational,
        atoms: Vec<EventAtom>,
        field: &str,
    ) -> Result<Self, InequalityError> {
        if atoms.is_empty() {
            return Err(InequalityError::EmptyAtoms {
                field: format!("{field}.atoms"),
            });
        }
        let mut observables = HashSet::new();
        let mut parties = HashSet::new();
        for (i, a) in atoms.iter().enumerate() {
            if !observables.insert(a.observable()) {
                return Err(InequalityError::DuplicateAtom {
                    field: format!("{field}.atoms[{i}]"),
                    observable: a.observable().to_string(),
                });
            }
            if !parties.insert(a.party()) {
                return Err(InequalityError::PartyOverloaded {
                    field: format!("{field}.atoms[{i}]"),
                    party: a.party().to_string(),
                });
            }
        }
        Ok(ProbabilityTerm { coef, atoms })
    }

    pub fn coef(&self) -> Rational {
        self.coef
    }

    pub fn atoms(&self) -> &[EventAtom] {
        &self.atoms
    }

    pub fn atom_for(&self, party: Party) -> Option<&EventAtom> {
        self.atoms.iter().find(|a| a.party() == party)
    }

    pub fn matches(&self, s: &JointAssignment) -> bool {
        self.atoms
            .iter()
            .all(|a| s.party(a.party()).value(a.slot()) == a.outcome())
    }
}

impl fmt::Display for ProbabilityTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms.iter().map(ToString::to_string).collect();
        write!(f, "{}*P({})", self.coef, atoms.join(","))
    }
}

/// `sum(terms) <= bound` for every state of `class`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InequalityDef {
    pub name: String,
    pub terms: Vec<ProbabilityTerm>,
    pub bound: Rational,
    pub class: ModelClass,
}

impl InequalityDef {
    pub fn new(
        name: impl Into<String>,
        terms: Vec<ProbabilityTerm>,
        bound: Rational,
        class: ModelClass,
    ) -> Result<Self, InequalityError> {
        if terms.is_empty() {
            return Err(InequalityError::EmptyTerms);
        }
        Ok(InequalityDef {
            name: name.into(),
            terms,
            bound,
            class,
        })
    }

    pub fn evaluate(&self, s: &JointAssignment) -> Rational {
        self.terms
            .iter()
            .filter(|t| t.matches(s))
            .map(|t| t.coef)
            .sum()
    }

    pub fn positive_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.coef.is_positive()).count()
    }

    pub fn negative_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.coef.is_negative()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InequalityJson::from_def(self, None)).unwrap()
    }

    /// Parses an unconditional inequality; documents carrying a `condition` are rejected.
    pub fn from_json(text: &str) -> Result<Self, InequalityError> {
        match Inequality::from_json(text)? {
            Inequality::Plain(def) => Ok(def),
            Inequality::Conditional(_) => Err(InequalityError::Condition(
                "unexpected condition on an unconditional inequality".into(),
            )),
        }
    }
}

pub fn evaluate(ineq: &InequalityDef, s: &JointAssignment) -> Rational {
    ineq.evaluate(s)
}

pub fn parse_inequality(text: &str) -> Result<InequalityDef, InequalityError> {
    InequalityDef::from_json(text)
}

pub fn serialize_inequality(ineq: &InequalityDef) -> String {
    ineq.to_json()
}

/// Terms of `base` read as probabilities conditioned on `condition`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalInequalityDef {
    pub base: InequalityDef,
    pub condition: EventAtom,
}

impl ConditionalInequalityDef {
    /// `None` when the conditioning event does not occur in `s`.
    pub fn evaluate(&self, s: &JointAssignment) -> Option<Rational> {
        let cond = self.condition;
        (s.party(cond.party()).value(cond.slot()) == cond.outcome()).then(|| self.base.evaluate(s))
    }
}

/// Rewrites `base` in terms of probabilities conditioned on `condition`.
///
/// A term that contains the condition atom itself loses it, since
/// `P(X, C) / P(C) = P(X | C)`. Any other atom on the conditioned party is an error.
pub fn conditionalize(
    base: &InequalityDef,
    condition: EventAtom,
) -> Result<ConditionalInequalityDef, InequalityError> {
    let mut terms = Vec::with_capacity(base.terms.len());
    for (i, t) in base.terms.iter().enumerate() {
        let atoms: Vec<EventAtom> = t.atoms.iter().copied().filter(|a| *a != condition).collect();
        if let Some(a) = atoms.iter().find(|a| a.party() == condition.party()) {
            return Err(InequalityError::Condition(format!(
                "terms[{i}]: atom {a} is on the conditioned party"
            )));
        }
        if atoms.is_empty() {
            return Err(InequalityError::Condition(format!(
                "terms[{i}]: nothing left after removing the condition"
            )));
        }
        terms.push(ProbabilityTerm { coef: t.coef, atoms });
    }
    Ok(ConditionalInequalityDef {
        base: InequalityDef {
            name: base.name.clone(),
            terms,
            bound: base.bound,
            class: base.class,
        },
        condition,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inequality {
    Plain(InequalityDef),
    Conditional(ConditionalInequalityDef),
}

impl Inequality {
    /// The unconditional part (the base for a conditional inequality).
    pub fn def(&self) -> &InequalityDef {
        match self {
            Inequality::Plain(d) => d,
            Inequality::Conditional(c) => &c.base,
        }
    }

    pub fn name(&self) -> &str {
        &self.def().name
    }

    pub fn class(&self) -> ModelClass {
        self.def().class
    }

    pub fn bound(&self) -> Rational {
        self.def().bound
    }

    pub fn condition(&self) -> Option<EventAtom> {
        match self {
            Inequality::Plain(_) => None,
            Inequality::Conditional(c) => Some(c.condition),
        }
    }

    pub fn evaluate(&self, s: &JointAssignment) -> Option<Rational> {
        match self {
            Inequality::Plain(d) => Some(d.evaluate(s)),
            Inequality::Conditional(c) => c.evaluate(s),
        }
    }

    pub fn to_json(&self) -> String {
        let json = InequalityJson::from_def(self.def(), self.condition());
        serde_json::to_string_pretty(&json).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self, InequalityError> {
        let raw: InequalityJson = serde_json::from_str(text)?;
        raw.into_inequality()
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coef: String,
    atoms: Vec<AtomJson>,
}

#[derive(Serialize, Deserialize)]
struct InequalityJson {
    name: String,
    class: String,
    bound: String,
    terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<AtomJson>,
}

fn parse_rational(field: String, value: &str) -> Result<Rational, InequalityError> {
    value
        .trim()
        .parse::<Rational>()
        .map_err(|_| InequalityError::BadRational {
            field,
            value: value.to_string(),
        })
}

fn parse_atom(field: String, raw: &AtomJson) -> Result<EventAtom, InequalityError> {
    EventAtom::parse(&raw.party, &raw.obs, &raw.out)
        .map_err(|source| InequalityError::Atom { field, source })
}

impl InequalityJson {
    fn from_def(def: &InequalityDef, condition: Option<EventAtom>) -> Self {
        InequalityJson {
            name: def.name.clone(),
            class: def.class.as_str().to_string(),
            bound: def.bound.to_string(),
            terms: def
                .terms
                .iter()
                .map(|t| TermJson {
                    coef: t.coef.to_string(),
                    atoms: t.atoms.iter().map(AtomJson::from).collect(),
                })
                .collect(),
            condition: condition.as_ref().map(AtomJson::from),
        }
    }

    fn into_inequality(self) -> Result<Inequality, InequalityError> {
        let class = self
            .class
            .parse::<ModelClass>()
            .map_err(InequalityError::UnknownClass)?;
        let bound = parse_rational("bound".into(), &self.bound)?;
        if self.terms.is_empty() {
            return Err(InequalityError::EmptyTerms);
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            let field = format!("terms[{i}]");
            let coef = parse_rational(format!("{field}.coef"), &t.coef)?;
            let atoms = t
                .atoms
                .iter()
                .enumerate()
                .map(|(k, a)| parse_atom(format!("{field}.atoms[{k}]"), a))
                .collect::<Result<Vec<_>, _>>()?;
            terms.push(ProbabilityTerm::validated(coef, atoms, &field)?);
        }
        let def = InequalityDef {
            name: self.name,
            terms,
            bound,
            class,
        };
        match self.condition {
            None => Ok(Inequality::Plain(def)),
            Some(raw) => {
                let condition = parse_atom("condition".into(), &raw)?;
                if let Some((i, _)) = def
                    .terms
                    .iter()
                    .enumerate()
                    .find(|(_, t)| t.atom_for(condition.party()).is_some())
                {
                    return Err(InequalityError::Condition(format!(
                        "terms[{i}] has an atom on the conditioned party {}",
                        condition.party()
                    )));
                }
                Ok(Inequality::Conditional(ConditionalInequalityDef {
                    base: def,
                    condition,
                }))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub state: JointAssignment,
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub class: ModelClass,
    #[serde(serialize_with = "ser_rational")]
    pub bound: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub maximum: Rational,
    /// Number of states the maximum was taken over.
    pub states_examined: usize,
    pub maximizers: Vec<JointAssignment>,
    pub violators: Vec<Violation>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.maximum <= self.bound
    }

    pub fn is_tight(&self) -> bool {
        self.maximum == self.bound
    }
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Maximizes the inequality over its declared model class.
pub fn bound(ineq: &Inequality) -> BoundReport {
    bound_over(ineq, ineq.class())
}

/// Maximizes the inequality over `class`, which may differ from the declared one.
///
/// Conditional inequalities are maximized over the states where the condition holds.
pub fn bound_over(ineq: &Inequality, class: ModelClass) -> BoundReport {
    let states = enumerate_joint(class);
    let values: Vec<(JointAssignment, Rational)> = states
        .iter()
        .filter_map(|s| ineq.evaluate(s).map(|v| (*s, v)))
        .collect();
    let maximum = values
        .iter()
        .map(|(_, v)| *v)
        .max()
        .expect("every class contains a state satisfying any single condition");
    let bound = ineq.bound();
    BoundReport {
        class,
        bound,
        maximum,
        states_examined: values.len(),
        maximizers: values
            .iter()
            .filter(|(_, v)| *v == maximum)
            .map(|(s, _)| *s)
            .collect(),
        violators: values
            .iter()
            .filter(|(_, v)| *v > bound)
            .map(|&(state, value)| Violation { state, value })
            .collect(),
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "K",
    "K-cross",
    "lemma2a",
    "lemma2b",
    "lemma2c",
    "lemma2d",
    "lemma2c-printed",
    "lemma2d-printed",
    "lemma2c-corrected",
    "lemma2d-corrected",
    "lemma3",
    "lemma2a-conditional",
];

fn term(coef: i64, atoms: &[EventAtom]) -> ProbabilityTerm {
    ProbabilityTerm {
        coef: Rational::from_integer(coef),
        atoms: atoms.to_vec(),
    }
}

fn def(name: &str, class: ModelClass, terms: Vec<ProbabilityTerm>) -> InequalityDef {
    InequalityDef {
        name: name.to_string(),
        terms,
        bound: Rational::zero(),
        class,
    }
}

const D: [Slot; 2] = [Slot::D0, Slot::D1];
const T: [Slot; 2] = [Slot::T0, Slot::T1];

fn da(j: usize) -> EventAtom {
    atom(Party::A, D[j], "1")
}

fn db(j: usize) -> EventAtom {
    atom(Party::B, D[j], "1")
}

fn ta(j: usize, letter: char) -> EventAtom {
    atom(Party::A, T[j], &format!("{letter}{j}"))
}

fn tb(j: usize, letter: char) -> EventAtom {
    atom(Party::B, T[j], &format!("{letter}{j}"))
}

/// Reading of the `P(T_j^A=a_j, T_k^B=b_k)` line of the realistic inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CrossTerm {
    /// `k = j`: the line repeats `P(T_j^A=a_j, T_j^B=b_j)`. Every negative term
    /// then vanishes on the entangled state.
    SameIndex,
    /// `k != j`: `P(T_0^A=a_0, T_1^B=b_1)` and `P(T_1^A=a_1, T_0^B=b_0)`, each 1/12
    /// on the entangled state.
    OtherIndex,
}

/// The two-party realistic inequality: 2 positive and 20 negative terms.
///
/// A `j != k` pair expands to `(0, 1)` and `(1, 0)`, a lone index to `0` and `1`.
fn k_inequality(name: &str, cross: CrossTerm) -> InequalityDef {
    let pairs = [(0, 1), (1, 0)];
    let mut terms: Vec<ProbabilityTerm> = pairs.iter().map(|&(j, k)| term(1, &[da(j), db(k)])).collect();
    let cross: fn(usize) -> [EventAtom; 2] = match cross {
        CrossTerm::SameIndex => |j| [ta(j, 'a'), tb(j, 'b')],
        CrossTerm::OtherIndex => |j| [ta(j, 'a'), tb(1 - j, 'b')],
    };
    let single: [fn(usize) -> [EventAtom; 2]; 7] = [
        |k| [da(0), tb(k, 'a')],
        |j| [ta(j, 'a'), db(0)],
        |k| [da(1), tb(k, 'b')],
        |j| [ta(j, 'b'), db(1)],
        cross,
        |j| [ta(j, 'a'), tb(j, 'b')],
        |j| [ta(j, 'b'), tb(j, 'a')],
    ];
    for f in single {
        terms.extend((0..2).map(|j| term(-1, &f(j))));
    }
    for (x, y) in [('a', 'c'), ('c', 'a'), ('b', 'c'), ('c', 'b')] {
        terms.push(term(-1, &[ta(0, x), tb(0, y)]));
    }
    terms.extend(pairs.iter().map(|&(j, k)| term(-1, &[ta(j, 'c'), tb(k, 'c')])));
    def(name, ModelClass::Realistic, terms)
}

fn lemma2(name: &str, variant: char) -> InequalityDef {
    use ModelClass::Noncontextual as NC;
    let terms = match variant {
        'a' => vec![
            term(1, &[da(0), db(1)]),
            term(-1, &[da(0), tb(0, 'a')]),
            term(-1, &[da(0), tb(1, 'a')]),
        ],
        'b' => vec![
            term(1, &[da(1), db(0)]),
            term(-1, &[ta(0, 'a'), db(0)]),
            term(-1, &[ta(1, 'a'), db(0)]),
        ],
        // as printed
        'c' => vec![
            term(1, &[da(0), db(1)]),
            term(-1, &[da(0), tb(0, 'b')]),
            term(-1, &[da(0), tb(1, 'b')]),
        ],
        'd' => vec![
            term(1, &[da(1), db(0)]),
            term(-1, &[ta(0, 'b'), db(0)]),
            term(-1, &[ta(1, 'b'), db(0)]),
        ],
        // D0 <-> D1 exchanged in every term of the printed (c) and (d)
        'C' => vec![
            term(1, &[da(1), db(0)]),
            term(-1, &[da(1), tb(0, 'b')]),
            term(-1, &[da(1), tb(1, 'b')]),
        ],
        'D' => vec![
            term(1, &[da(0), db(1)]),
            term(-1, &[ta(0, 'b'), db(1)]),
            term(-1, &[ta(1, 'b'), db(1)]),
        ],
        _ => unreachable!(),
    };
    def(name, NC, terms)
}

fn lemma3() -> InequalityDef {
    let terms = vec![
        term(1, &[da(0), db(1)]),
        term(-1, &[ta(0, 'b'), tb(0, 'a')]),
        term(-1, &[ta(1, 'b'), tb(1, 'a')]),
        term(-1, &[ta(0, 'c'), tb(1, 'c')]),
        term(-1, &[ta(1, 'c'), tb(0, 'c')]),
    ];
    def("lemma3", ModelClass::Noncontextual, terms)
}

/// Looks up one of the [`BUILTIN_NAMES`].
pub fn builtin(name: &str) -> Result<Inequality, InequalityError> {
    let plain = match name {
        "K" => k_inequality(name, CrossTerm::SameIndex),
        "K-cross" => k_inequality(name, CrossTerm::OtherIndex),
        "lemma2a" => lemma2(name, 'a'),
        "lemma2b" => lemma2(name, 'b'),
        "lemma2c" | "lemma2c-printed" => lemma2(name, 'c'),
        "lemma2d" | "lemma2d-printed" => lemma2(name, 'd'),
        "lemma2c-corrected" => lemma2(name, 'C'),
        "lemma2d-corrected" => lemma2(name, 'D'),
        "lemma3" => lemma3(),
        "lemma2a-conditional" => {
            let mut cond = conditionalize(&lemma2("lemma2b", 'b'), db(0))?;
            cond.base.name = name.to_string();
            return Ok(Inequality::Conditional(cond));
        }
        other => return Err(InequalityError::UnknownBuiltin(other.to_string())),
    };
    Ok(Inequality::Plain(plain))
}

/// Sum of the positive coefficients: an upper bound of the value on any deterministic state.
pub fn positive_mass(ineq: &InequalityDef) -> Rational {
    ineq.terms
        .iter()
        .map(|t| t.coef)
        .filter(|c| c.is_positive())
        .sum()
}

/// Sum of the absolute values of the negative coefficients.
pub fn negative_mass(ineq: &InequalityDef) -> Rational {
    ineq.terms
        .iter()
        .map(|t| t.coef)
        .filter(|c| c.is_negative())
        .map(|c| -c)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(name: &str) -> InequalityDef {
        match builtin(name).unwrap() {
            Inequality::Plain(d) => d,
            Inequality::Conditional(_) => panic!("{name} is conditional"),
        }
    }

    fn st(s: &str) -> JointAssignment {
        s.parse().unwrap()
    }

    #[test]
    fn k_has_22_terms() {
        let k = plain("K");
        assert_eq!(k.terms.len(), 22);
        assert_eq!(k.positive_terms(), 2);
        assert_eq!(k.negative_terms(), 20);
        assert!(k.terms.iter().all(|t| t.atoms().len() == 2));
        // the cross line repeats P(T_j^A=a_j, T_j^B=b_j) for both j
        let distinct: HashSet<Vec<EventAtom>> = k.terms.iter().map(|t| t.atoms.clone()).collect();
        assert_eq!(distinct.len(), 20);
        let cross = plain("K-cross");
        assert_eq!(cross.terms.len(), 22);
        assert_eq!(cross.negative_terms(), 20);
        let distinct: HashSet<Vec<EventAtom>> = cross.terms.iter().map(|t| t.atoms.clone()).collect();
        assert_eq!(distinct.len(), 22);
        assert_eq!(cross.terms[10].to_string(), "-1*P(T0A=a0,T1B=b1)");
    }

    #[test]
    fn lemma3_shape() {
        let l3 = plain("lemma3");
        assert_eq!(l3.positive_terms(), 1);
        assert_eq!(l3.negative_terms(), 4);
        let shown: Vec<String> = l3.terms.iter().map(ToString::to_string).collect();
        assert_eq!(
            shown,
            [
                "1*P(D0A=1,D1B=1)",
                "-1*P(T0A=b0,T0B=a0)",
                "-1*P(T1A=b1,T1B=a1)",
                "-1*P(T0A=c0,T1B=c1)",
                "-1*P(T1A=c1,T0B=c0)",
            ]
        );
    }

    #[test]
    fn lemma2a_terms() {
        let shown: Vec<String> = plain("lemma2a").terms.iter().map(ToString::to_string).collect();
        assert_eq!(
            shown,
            ["1*P(D0A=1,D1B=1)", "-1*P(D0A=1,T0B=a0)", "-1*P(D0A=1,T1B=a1)"]
        );
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(
            plain("lemma2a").evaluate(&st("1,0,b0,b1,0,1,a0,c1")),
            Rational::zero()
        );
        assert_eq!(
            plain("lemma3").evaluate(&st("1,0,a0,a1,0,1,b0,b1")),
            Rational::from_integer(1)
        );
        // nothing fires when every dichotomic answer is 0 and no T pair matches
        let quiet = st("0,0,a0,a1,0,0,a0,a1");
        for name in ["K", "lemma2a", "lemma2b", "lemma3"] {
            assert_eq!(plain(name).evaluate(&quiet), Rational::zero(), "{name}");
        }
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(
            builtin("lemma9"),
            Err(InequalityError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn conditional_is_undefined_off_condition() {
        let cond = builtin("lemma2a-conditional").unwrap();
        assert_eq!(cond.evaluate(&st("0,1,b0,b1,0,0,a0,a1")), None);
        assert_eq!(
            cond.evaluate(&st("0,1,b0,b1,1,0,b0,b1")),
            Some(Rational::from_integer(1))
        );
    }

    #[test]
    fn conditionalize_rejects_other_atoms_on_conditioned_party() {
        let err = conditionalize(&plain("lemma2a"), db(0)).unwrap_err();
        assert!(matches!(err, InequalityError::Condition(_)));
    }

    #[test]
    fn json_errors_name_the_field() {
        let bad_slot = r#"{"name":"x","class":"realistic","bound":"0",
            "terms":[{"coef":"1","atoms":[{"party":"A","obs":"Q0","out":"1"}]}]}"#;
        let e = InequalityDef::from_json(bad_slot).unwrap_err();
        assert!(e.to_string().contains("terms[0].atoms[0]"), "{e}");

        let mismatch = r#"{"name":"x","class":"realistic","bound":"0",
            "terms":[{"coef":"1","atoms":[{"party":"A","obs":"T0","out":"a1"}]}]}"#;
        assert!(matches!(
            InequalityDef::from_json(mismatch).unwrap_err(),
            InequalityError::Atom { source: crate::error::AtomError::OutcomeMismatch { .. }, .. }
        ));

        let empty = r#"{"name":"x","class":"realistic","bound":"0","terms":[]}"#;
        assert!(matches!(
            InequalityDef::from_json(empty).unwrap_err(),
            InequalityError::EmptyTerms
        ));

        let dup = r#"{"name":"x","class":"realistic","bound":"0",
            "terms":[{"coef":"1","atoms":[{"party":"A","obs":"D0","out":"1"},{"party":"A","obs":"D0","out":"0"}]}]}"#;
        assert!(matches!(
            InequalityDef::from_json(dup).unwrap_err(),
            InequalityError::DuplicateAtom { .. }
        ));

        let two_on_a = r#"{"name":"x","class":"realistic","bound":"0",
            "terms":[{"coef":"1","atoms":[{"party":"A","obs":"D0","out":"1"},{"party":"A","obs":"T0","out":"a0"}]}]}"#;
        assert!(matches!(
            InequalityDef::from_json(two_on_a).unwrap_err(),
            InequalityError::PartyOverloaded { .. }
        ));

        let bad_coef = r#"{"name":"x","class":"realistic","bound":"0",
            "terms":[{"coef":"one","atoms":[{"party":"A","obs":"D0","out":"1"}]}]}"#;
        let e = InequalityDef::from_json(bad_coef).unwrap_err();
        assert!(matches!(e, InequalityError::BadRational { ref field, .. } if field == "terms[0].coef"));

        assert!(matches!(
            InequalityDef::from_json("{not json").unwrap_err(),
            InequalityError::Json(_)
        ));
        let bad_class = r#"{"name":"x","class":"local","bound":"0",
            "terms":[{"coef":"1","atoms":[{"party":"A","obs":"D0","out":"1"}]}]}"#;
        assert!(matches!(
            InequalityDef::from_json(bad_class).unwrap_err(),
            InequalityError::UnknownClass(_)
        ));
    }

    #[test]
    fn rationals_serialize_as_strings() {
        let mut k = plain("K");
        k.terms[0].coef = Rational::new(2, 27);
        let json = k.to_json();
        assert!(json.contains(r#""coef": "2/27""#));
        assert!(json.contains(r#""bound": "0""#));
        assert_eq!(InequalityDef::from_json(&json).unwrap(), k);
    }

    #[test]
    fn conditional_json_round_trip() {
        let cond = builtin("lemma2a-conditional").unwrap();
        let json = cond.to_json();
        assert!(json.contains(r#""condition""#));
        assert_eq!(Inequality::from_json(&json).unwrap(), cond);
        assert!(InequalityDef::from_json(&json).is_err());
    }
}
