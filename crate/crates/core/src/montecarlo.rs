//! Finite-statistics simulation of the measurement campaign.
//!
//! Every setting `(A observable, B observable)` gets its own ChaCha8 stream:
//! the key comes from the run seed, the stream id is the setting index
//! `4 * slot_a + slot_b`, and draw `k` always reads the `k`-th 64-bit word pair
//! of that stream. Counts therefore depend only on `(seed, setting, shots)`,
//! never on how the shots are split into parallel chunks.
//!
//! Conditional estimates are plain count ratios inside one setting and carry the
//! usual `O(1/N)` ratio bias.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::MonteCarloError;
use crate::inequalities::{ser_rational, Inequality, Rational};
use crate::observables::{EventAtom, ObservableRef, Outcome, Party, Slot};
use crate::quantum::Experiment;

/// Outcome-pair probabilities below this are treated as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-14;

/// Shots per parallel work unit in [`sample_setting_parallel`].
pub const DEFAULT_CHUNK: u64 = 1 << 16;

/// A pair of co-measured observables, one per party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Setting {
    pub a: Slot,
    pub b: Slot,
}

impl Setting {
    pub fn new(a: Slot, b: Slot) -> Self {
        Setting { a, b }
    }

    pub fn index(&self) -> u64 {
        (4 * self.a.index() + self.b.index()) as u64
    }

    /// Outcome pairs in canonical order (A outcome major).
    pub fn outcome_pairs(&self) -> Vec<(Outcome, Outcome)> {
        self.a
            .outcomes()
            .iter()
            .flat_map(|&oa| self.b.outcomes().iter().map(move |&ob| (oa, ob)))
            .collect()
    }

    fn atoms(&self, (oa, ob): (Outcome, Outcome)) -> (EventAtom, EventAtom) {
        (
            EventAtom::new(ObservableRef::new(Party::A, self.a), oa).unwrap(),
            EventAtom::new(ObservableRef::new(Party::B, self.b), ob).unwrap(),
        )
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}A,{}B)", self.a, self.b)
    }
}

/// Seekable uniform stream for one `(seed, setting)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
    position: u64,
}

impl RngStream {
    pub fn new(seed: u64, setting_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(setting_index);
        RngStream { rng, position: 0 }
    }

    /// Moves to draw number `position`.
    pub fn seek(&mut self, position: u64) {
        // each f64 draw consumes one u64, i.e. two 32-bit words
        self.rng.set_word_pos(2 * position as u128);
        self.position = position;
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn next_uniform(&mut self) -> f64 {
        self.position += 1;
        self.rng.gen::<f64>()
    }
}

/// Outcome-pair distribution of one setting, frozen for sampling.
#[derive(Clone, Debug)]
pub struct SettingDistribution {
    pub setting: Setting,
    pub outcomes: Vec<(Outcome, Outcome)>,
    pub probabilities: Vec<f64>,
    cdf: Vec<f64>,
}

impl SettingDistribution {
    pub fn new(exp: &Experiment, setting: Setting) -> Result<Self, MonteCarloError> {
        let outcomes = setting.outcome_pairs();
        let mut probabilities = Vec::with_capacity(outcomes.len());
        for &pair in &outcomes {
            let (a, b) = setting.atoms(pair);
            let p = exp.joint_probability(&a, &b)?;
            probabilities.push(if p < ZERO_CUTOFF { 0.0 } else { p });
        }
        let total: f64 = probabilities.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probabilities
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        let last = probabilities.iter().rposition(|&p| p > 0.0).expect("nonempty support");
        for c in &mut cdf[last..] {
            *c = 1.0;
        }
        Ok(SettingDistribution {
            setting,
            outcomes,
            probabilities,
            cdf,
        })
    }

    fn draw(&self, u: f64) -> usize {
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.cdf.len() - 1)
    }

    /// Draws `n` shots from the stream's current position.
    pub fn sample(&self, n: u64, stream: &mut RngStream) -> Vec<u64> {
        let mut counts = vec![0u64; self.outcomes.len()];
        for _ in 0..n {
            counts[self.draw(stream.next_uniform())] += 1;
        }
        counts
    }

    /// Draws shots `start..start + len` of the `(seed, setting)` stream.
    pub fn sample_range(&self, seed: u64, start: u64, len: u64) -> Vec<u64> {
        let mut stream = RngStream::new(seed, self.setting.index());
        stream.seek(start);
        self.sample(len, &mut stream)
    }
}

/// Counts of one setting; `counts[k]` belongs to `outcomes[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SettingCounts {
    pub setting: Setting,
    pub outcomes: Vec<(Outcome, Outcome)>,
    pub counts: Vec<u64>,
}

impl SettingCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, a: Option<Outcome>, b: Option<Outcome>) -> u64 {
        self.outcomes
            .iter()
            .zip(&self.counts)
            .filter(|((oa, ob), _)| a.is_none_or(|x| x == *oa) && b.is_none_or(|y| y == *ob))
            .map(|(_, c)| c)
            .sum()
    }
}

/// `n` sequential draws for one setting from `stream`.
pub fn sample_setting(
    exp: &Experiment,
    setting: Setting,
    n: u64,
    stream: &mut RngStream,
) -> Result<SettingCounts, MonteCarloError> {
    if n == 0 {
        return Err(MonteCarloError::NoShots);
    }
    let dist = SettingDistribution::new(exp, setting)?;
    Ok(SettingCounts {
        setting,
        counts: dist.sample(n, stream),
        outcomes: dist.outcomes,
    })
}

/// Same counts as [`sample_setting`] on a fresh stream, computed in parallel chunks.
pub fn sample_setting_parallel(
    exp: &Experiment,
    setting: Setting,
    n: u64,
    seed: u64,
    chunk: u64,
) -> Result<SettingCounts, MonteCarloError> {
    if n == 0 {
        return Err(MonteCarloError::NoShots);
    }
    let chunk = chunk.max(1);
    let dist = SettingDistribution::new(exp, setting)?;
    let chunks = n.div_ceil(chunk);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            dist.sample_range(seed, start, chunk.min(n - start))
        })
        .reduce(
            || vec![0u64; dist.outcomes.len()],
            |mut acc, part| {
                acc.iter_mut().zip(part).for_each(|(x, y)| *x += y);
                acc
            },
        );
    Ok(SettingCounts {
        setting,
        outcomes: dist.outcomes,
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    pub settings: Vec<SettingCounts>,
}

impl CountTable {
    pub fn get(&self, setting: Setting) -> Option<&SettingCounts> {
        self.settings.iter().find(|s| s.setting == setting)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("obsA,obsB,outA,outB,count\n");
        for s in &self.settings {
            for (&(oa, ob), c) in s.outcomes.iter().zip(&s.counts) {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    s.setting.a,
                    s.setting.b,
                    s.setting.a.outcome_str(oa).unwrap(),
                    s.setting.b.outcome_str(ob).unwrap(),
                    c
                ));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub shots_per_setting: u64,
    pub visibility: f64,
    pub inequality: Inequality,
    /// Verdict threshold in standard errors.
    pub z_threshold: f64,
}

impl RunConfig {
    pub fn new(inequality: Inequality, shots_per_setting: u64, seed: u64) -> Self {
        RunConfig {
            seed,
            shots_per_setting,
            visibility: 1.0,
            inequality,
            z_threshold: 3.0,
        }
    }

    pub fn visibility(mut self, v: f64) -> Self {
        self.visibility = v;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Violation,
    NoViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermEstimate {
    pub atoms: Vec<EventAtom>,
    #[serde(serialize_with = "ser_rational")]
    pub coef: Rational,
    pub phat: f64,
    /// Denominator of `phat`: shots of the setting, or conditioning-event count.
    pub n: u64,
    #[serde(skip)]
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub inequality: String,
    pub seed: u64,
    pub shots_per_setting: u64,
    pub visibility: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `(estimate - bound) / stderr`; absent when the standard error vanishes.
    pub z: Option<f64>,
    pub z_threshold: f64,
    pub verdict: Verdict,
    pub terms: Vec<TermEstimate>,
}

impl EstimateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}

fn term_setting(atoms: &[EventAtom], condition: Option<EventAtom>) -> Result<(Setting, Option<EventAtom>, Option<EventAtom>), MonteCarloError> {
    let mut all = atoms.to_vec();
    all.extend(condition);
    let a = all.iter().find(|x| x.party() == Party::A).copied();
    let b = all.iter().find(|x| x.party() == Party::B).copied();
    match (a, b) {
        (Some(a), Some(b)) if all.len() == 2 => Ok((Setting::new(a.slot(), b.slot()), Some(a), Some(b))),
        _ => {
            let shown: Vec<String> = all.iter().map(ToString::to_string).collect();
            Err(MonteCarloError::UnsupportedTerm(shown.join(",")))
        }
    }
}

/// Samples every setting the inequality needs and estimates its value.
pub fn run(config: &RunConfig) -> Result<(CountTable, EstimateReport), MonteCarloError> {
    let exp = Experiment::standard(config.visibility)?;
    run_on(&exp, config)
}

/// [`run`] against an arbitrary experiment; `config.visibility` overrides the experiment's.
pub fn run_on(base: &Experiment, config: &RunConfig) -> Result<(CountTable, EstimateReport), MonteCarloError> {
    if config.shots_per_setting == 0 {
        return Err(MonteCarloError::NoShots);
    }
    let exp = base.with_visibility(config.visibility)?;
    let ineq = &config.inequality;
    let condition = ineq.condition();
    let def = ineq.def();

    let mut plan = Vec::with_capacity(def.terms.len());
    for t in &def.terms {
        plan.push(term_setting(t.atoms(), condition)?);
    }
    let settings: BTreeSet<Setting> = plan.iter().map(|(s, _, _)| *s).collect();
    let counts = settings
        .into_iter()
        .map(|s| sample_setting_parallel(&exp, s, config.shots_per_setting, config.seed, DEFAULT_CHUNK))
        .collect::<Result<Vec<_>, _>>()?;
    let table = CountTable { settings: counts };

    let mut terms = Vec::with_capacity(def.terms.len());
    for (t, (setting, a, b)) in def.terms.iter().zip(&plan) {
        let sc = table.get(*setting).expect("sampled");
        let (oa, ob) = (a.map(|x| x.outcome()), b.map(|x| x.outcome()));
        let (hits, n) = match condition {
            None => (sc.count(oa, ob), sc.total()),
            Some(c) => {
                let (ca, cb) = match c.party() {
                    Party::A => (Some(c.outcome()), None),
                    Party::B => (None, Some(c.outcome())),
                };
                let n = sc.count(ca, cb);
                if n == 0 {
                    return Err(MonteCarloError::ZeroConditioningCounts {
                        condition: c.to_string(),
                        setting: setting.to_string(),
                    });
                }
                (sc.count(oa, ob), n)
            }
        };
        let phat = hits as f64 / n as f64;
        terms.push(TermEstimate {
            atoms: t.atoms().to_vec(),
            coef: t.coef(),
            phat,
            n,
            stderr: (phat * (1.0 - phat) / n as f64).sqrt(),
        });
    }

    let coef = |t: &TermEstimate| t.coef.to_f64().expect("finite rational");
    let estimate: f64 = terms.iter().map(|t| coef(t) * t.phat).sum();
    let stderr = terms
        .iter()
        .map(|t| (coef(t) * t.stderr).powi(2))
        .sum::<f64>()
        .sqrt();
    let excess = estimate - ineq.bound().to_f64().expect("finite rational");
    let z = (stderr > 0.0).then(|| excess / stderr);
    let verdict = if excess > config.z_threshold * stderr {
        Verdict::Violation
    } else {
        Verdict::NoViolation
    };
    let report = EstimateReport {
        inequality: ineq.name().to_string(),
        seed: config.seed,
        shots_per_setting: config.shots_per_setting,
        visibility: config.visibility,
        estimate,
        stderr,
        z,
        z_threshold: config.z_threshold,
        verdict,
        terms,
    };
    Ok((table, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::builtin;
    use crate::quantum::standard_experiment;

    #[test]
    fn zero_probability_outcomes_never_drawn() {
        let exp = standard_experiment();
        let setting = Setting::new(Slot::D0, Slot::T0);
        let mut stream = RngStream::new(11, setting.index());
        let counts = sample_setting(&exp, setting, 200_000, &mut stream).unwrap();
        assert_eq!(counts.count(Some(Outcome::One), Some(Outcome::A)), 0);
        assert_eq!(counts.total(), 200_000);
        assert_eq!(stream.position(), 200_000);
    }

    #[test]
    fn same_seed_same_counts() {
        let exp = standard_experiment();
        let setting = Setting::new(Slot::T0, Slot::T0);
        let x = sample_setting(&exp, setting, 5000, &mut RngStream::new(3, setting.index())).unwrap();
        let y = sample_setting(&exp, setting, 5000, &mut RngStream::new(3, setting.index())).unwrap();
        let z = sample_setting(&exp, setting, 5000, &mut RngStream::new(4, setting.index())).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn streams_differ_per_setting() {
        let mut s0 = RngStream::new(1, 0);
        let mut s1 = RngStream::new(1, 1);
        let a: Vec<f64> = (0..8).map(|_| s0.next_uniform()).collect();
        let b: Vec<f64> = (0..8).map(|_| s1.next_uniform()).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn seek_matches_sequential() {
        let mut s = RngStream::new(9, 5);
        let seq: Vec<f64> = (0..10).map(|_| s.next_uniform()).collect();
        let mut t = RngStream::new(9, 5);
        t.seek(7);
        assert_eq!(t.next_uniform(), seq[7]);
    }

    #[test]
    fn zero_shots_rejected() {
        let cfg = RunConfig::new(builtin("K").unwrap(), 0, 1);
        assert!(matches!(run(&cfg), Err(MonteCarloError::NoShots)));
    }

    #[test]
    fn k_run_shape() {
        let cfg = RunConfig::new(builtin("K").unwrap(), 20_000, 5);
        let (table, report) = run(&cfg).unwrap();
        assert_eq!(table.settings.len(), 14);
        assert!(table.settings.iter().all(|s| s.total() == 20_000));
        assert_eq!(report.terms.len(), 22);
        // zero-probability terms are estimated as exactly zero at full visibility
        assert!(report.terms[2..].iter().all(|t| t.phat == 0.0));
        assert!(report.stderr > 0.0);
        let csv = table.to_csv();
        assert!(csv.starts_with("obsA,obsB,outA,outB,count\n"));
    }

    #[test]
    fn conditional_zero_counts_is_an_error() {
        let json = r#"{"name":"never","class":"noncontextual","bound":"0",
            "terms":[{"coef":"1","atoms":[{"party":"A","obs":"D0","out":"1"}]}],
            "condition":{"party":"B","obs":"D0","out":"1"}}"#;
        let ineq = Inequality::from_json(json).unwrap();
        let psi = crate::quantum::Ket::from_real(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let mut kets = crate::quantum::standard_kets();
        // B's D0 direction becomes |0>, orthogonal to B's part |1> of psi
        kets.set("f", crate::quantum::Ket::from_real(&[1.0, 0.0, 0.0]).unwrap()).unwrap();
        let exp = Experiment::new(
            crate::quantum::BipartiteState::new(psi, 1.0).unwrap(),
            crate::quantum::observables_from(&kets),
        );
        let cfg = RunConfig::new(ineq, 1000, 1);
        assert!(matches!(
            run_on(&exp, &cfg),
            Err(MonteCarloError::ZeroConditioningCounts { .. })
        ));
    }
}
