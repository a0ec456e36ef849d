//! Finite open metric transition systems: labels, outputs, transitions,
//! port maps, structural validation, and the canonical JSON model format.
//!
//! Everything downstream (metrics, conformance, simulation, composition)
//! consumes these types read-only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hybrid::HybridTimeDomain;
use crate::rational::Rational;

pub type StateId = String;

/// Reserved symbol prefix for output-valued port labels (the port of an
/// empty self-loop renders the state output; embedded transitions render the
/// output trajectory). Labels with this prefix never belong to the alphabet.
pub const OUTPUT_PORT_PREFIX: &str = "out:";

/// Reserved symbol carried by the transitions of a feedback interconnection,
/// whose labels are chronological components only.
pub const COMPOSED_SYMBOL: &str = "@chi";

/// Transition label: the empty label or an (input symbol, duration) pair.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// The empty label ν: no state change, no time advance.
    Empty,
    Timed {
        input: String,
        chrono: Rational,
    },
}

impl Label {
    pub fn timed(input: impl Into<String>, chrono: Rational) -> Label {
        assert!(
            !chrono.is_negative(),
            "chrono component must be non-negative"
        );
        Label::Timed {
            input: input.into(),
            chrono,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Label::Empty)
    }

    pub fn chrono(&self) -> Option<&Rational> {
        match self {
            Label::Empty => None,
            Label::Timed { chrono, .. } => Some(chrono),
        }
    }

    /// Zero-duration reserved label rendering a state output; used as the
    /// port of materialized empty self-loops.
    pub fn output_port(out: &OutputPoint) -> Label {
        Label::Timed {
            input: format!("{}{}", OUTPUT_PORT_PREFIX, out.token()),
            chrono: Rational::zero(),
        }
    }

    pub fn is_reserved_port(&self) -> bool {
        matches!(self, Label::Timed { input, .. } if input.starts_with(OUTPUT_PORT_PREFIX))
    }

    /// Text form used by CLI flags: `nu` or `symbol@chrono`.
    pub fn parse_text(s: &str) -> Result<Label> {
        let s = s.trim();
        if s == "nu" {
            return Ok(Label::Empty);
        }
        let (sym, chrono) = s
            .rsplit_once('@')
            .ok_or_else(|| Error::BadLabel(s.to_string()))?;
        let chrono = Rational::parse(chrono)?;
        if chrono.is_negative() || sym.is_empty() {
            return Err(Error::BadLabel(s.to_string()));
        }
        Ok(Label::timed(sym, chrono))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Empty => write!(f, "nu"),
            Label::Timed { input, chrono } => write!(f, "{input}@{chrono}"),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize)]
struct TimedRepr<'a> {
    chi: &'a Rational,
    u: &'a str,
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::Empty => serializer.serialize_str("nu"),
            Label::Timed { input, chrono } => TimedRepr {
                chi: chrono,
                u: input,
            }
            .serialize(serializer),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Name(String),
    Timed { u: String, chi: Rational },
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match LabelRepr::deserialize(deserializer)? {
            LabelRepr::Name(s) if s == "nu" => Ok(Label::Empty),
            LabelRepr::Name(s) => Err(de::Error::custom(format!("unknown label `{s}`"))),
            LabelRepr::Timed { u, chi } => {
                if chi.is_negative() {
                    return Err(de::Error::custom("negative chrono component"));
                }
                Ok(Label::Timed {
                    input: u,
                    chrono: chi,
                })
            }
        }
    }
}

/// Point in the shared output set, a fixed-dimension rational vector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct OutputPoint(pub Vec<Rational>);

impl OutputPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Canonical token, e.g. `[1/2,-3]`; used in reserved port symbols.
    pub fn token(&self) -> String {
        let coords: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        format!("[{}]", coords.join(","))
    }

    /// Concatenation, the output pairing of a feedback interconnection.
    pub fn concat(&self, other: &OutputPoint) -> OutputPoint {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        OutputPoint(v)
    }
}

impl fmt::Debug for OutputPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub src: StateId,
    pub label: Label,
    pub dst: StateId,
    /// Port map value exposed for composition; `nu`, a label, or a reserved
    /// output-valued token.
    pub port: Label,
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -[{}]-> {} (port {})",
            self.src, self.label, self.dst, self.port
        )
    }
}

/// Finite explicit OMTS. Immutable after construction; empty self-loops are
/// materialized eagerly so stuttering is a plain graph step.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omts {
    pub states: BTreeSet<StateId>,
    pub initial: BTreeSet<StateId>,
    pub alphabet: BTreeSet<Label>,
    pub transitions: BTreeSet<Transition>,
    pub outputs: BTreeMap<StateId, OutputPoint>,
    /// Optional registry mapping label symbols to hybrid time domains;
    /// populated by the trajectory embedding, consulted by the hybrid metric.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hybrid_labels: BTreeMap<String, HybridTimeDomain>,
}

impl Omts {
    /// Builds a system and materializes empty self-loops. Structural problems
    /// are reported by [`Omts::validate`], not here.
    pub fn new(
        states: BTreeSet<StateId>,
        initial: BTreeSet<StateId>,
        alphabet: BTreeSet<Label>,
        transitions: BTreeSet<Transition>,
        outputs: BTreeMap<StateId, OutputPoint>,
    ) -> Omts {
        Omts {
            states,
            initial,
            alphabet,
            transitions,
            outputs,
            hybrid_labels: BTreeMap::new(),
        }
        .materialize_empty_loops()
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.outputs.values().next().map(OutputPoint::dim)
    }

    pub fn output(&self, q: &str) -> Option<&OutputPoint> {
        self.outputs.get(q)
    }

    /// The canonical empty self-loop of `q`, with the output-valued port.
    pub fn empty_loop(&self, q: &str) -> Transition {
        let out = self.outputs.get(q).cloned().unwrap_or_default();
        Transition {
            src: q.to_string(),
            label: Label::Empty,
            dst: q.to_string(),
            port: Label::output_port(&out),
        }
    }

    /// Adds the canonical ν self-loop for every state. Idempotent.
    pub fn materialize_empty_loops(&self) -> Omts {
        let mut out = self.clone();
        for q in &self.states {
            out.transitions.insert(self.empty_loop(q));
        }
        out
    }

    pub fn transitions_from<'a>(&'a self, q: &'a str) -> impl Iterator<Item = &'a Transition> {
        self.transitions.iter().filter(move |t| t.src == q)
    }

    /// `Post(q, S)`: destinations of transitions from `q` labeled in `S`.
    pub fn post(&self, q: &str, labels: &BTreeSet<Label>) -> Result<BTreeSet<StateId>> {
        if !self.states.contains(q) {
            return Err(Error::UnknownState(q.to_string()));
        }
        Ok(self
            .transitions_from(q)
            .filter(|t| labels.contains(&t.label))
            .map(|t| t.dst.clone())
            .collect())
    }

    /// Report-style structural validation; empty iff well-formed.
    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        for q in &self.initial {
            if !self.states.contains(q) {
                report.push(format!("initial state `{q}` is not a state"));
            }
        }
        for label in &self.alphabet {
            match label {
                Label::Empty => report.push("alphabet contains the empty label".to_string()),
                Label::Timed { input, chrono } => {
                    if chrono.is_negative() {
                        report.push(format!("alphabet label `{label}` has negative chrono"));
                    }
                    if input.starts_with(OUTPUT_PORT_PREFIX) {
                        report.push(format!("alphabet label `{label}` uses a reserved symbol"));
                    }
                }
            }
        }
        let dim = self.output_dim();
        for q in &self.states {
            match self.outputs.get(q) {
                None => report.push(format!("state `{q}` has no output")),
                Some(p) => {
                    if Some(p.dim()) != dim {
                        report.push(format!(
                            "state `{q}` output dimension {} differs from {}",
                            p.dim(),
                            dim.unwrap_or(0)
                        ));
                    }
                }
            }
        }
        for q in self.outputs.keys() {
            if !self.states.contains(q) {
                report.push(format!("output map mentions unknown state `{q}`"));
            }
        }
        for t in &self.transitions {
            if !self.states.contains(&t.src) {
                report.push(format!("transition from unknown state `{}`", t.src));
            }
            if !self.states.contains(&t.dst) {
                report.push(format!("transition to unknown state `{}`", t.dst));
            }
            match &t.label {
                Label::Empty => {
                    if t.src != t.dst {
                        report.push(format!(
                            "empty-label transition `{}` -> `{}` is not a self-loop",
                            t.src, t.dst
                        ));
                    }
                }
                timed => {
                    if !self.alphabet.contains(timed) {
                        report.push(format!("transition label `{timed}` is not in the alphabet"));
                    }
                }
            }
            match &t.port {
                Label::Empty => {}
                port if port.is_reserved_port() => {}
                port => {
                    if !self.alphabet.contains(port) {
                        report.push(format!("port `{port}` is not in the alphabet"));
                    }
                }
            }
        }
        for q in &self.states {
            if !self.transitions.contains(&self.empty_loop(q)) {
                report.push(format!("state `{q}` is missing its empty self-loop"));
            }
        }
        report
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Omts> {
        let parsed: Omts = serde_json::from_str(text)?;
        Ok(parsed.materialize_empty_loops())
    }

    pub fn read(path: &Path) -> Result<Omts> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(&path.display().to_string(), e))?;
        Omts::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json()? + "\n")
            .map_err(|e| Error::io(&path.display().to_string(), e))
    }
}

impl fmt::Debug for Omts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Omts({} states, {} transitions, |Sigma|={})",
            self.states.len(),
            self.transitions.len(),
            self.alphabet.len()
        )
    }
}

/// Pairing of initial states of a nominal model with initial states of its
/// derived implementation.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize, Debug, Default)]
pub struct DerivationRelation {
    pub pairs: BTreeSet<(StateId, StateId)>,
}

impl DerivationRelation {
    pub fn identity(states: &BTreeSet<StateId>) -> DerivationRelation {
        DerivationRelation {
            pairs: states.iter().map(|q| (q.clone(), q.clone())).collect(),
        }
    }

    /// Every pair must relate initial states of the respective systems.
    pub fn validate_against(&self, t1: &Omts, t2: &Omts) -> Result<()> {
        for (a, b) in &self.pairs {
            if !t1.initial.contains(a) || !t2.initial.contains(b) {
                return Err(Error::BadDerivation(format!("({a}, {b})")));
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<DerivationRelation> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(&path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Helper for building small systems in tests and the generator.
pub struct OmtsBuilder {
    states: BTreeSet<StateId>,
    initial: BTreeSet<StateId>,
    alphabet: BTreeSet<Label>,
    transitions: BTreeSet<Transition>,
    outputs: BTreeMap<StateId, OutputPoint>,
}

impl OmtsBuilder {
    pub fn new() -> Self {
        OmtsBuilder {
            states: BTreeSet::new(),
            initial: BTreeSet::new(),
            alphabet: BTreeSet::new(),
            transitions: BTreeSet::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn state(mut self, id: &str, output: Vec<Rational>, initial: bool) -> Self {
        self.states.insert(id.to_string());
        self.outputs.insert(id.to_string(), OutputPoint(output));
        if initial {
            self.initial.insert(id.to_string());
        }
        self
    }

    pub fn letter(mut self, label: Label) -> Self {
        self.alphabet.insert(label);
        self
    }

    pub fn arrow(mut self, src: &str, label: Label, dst: &str, port: Label) -> Self {
        self.alphabet
            .extend(label.clone().chrono().map(|_| label.clone()));
        self.transitions.insert(Transition {
            src: src.to_string(),
            label,
            dst: dst.to_string(),
            port,
        });
        self
    }

    pub fn build(self) -> Omts {
        Omts::new(
            self.states,
            self.initial,
            self.alphabet,
            self.transitions,
            self.outputs,
        )
    }
}

impl Default for OmtsBuilder {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn one_state() -> Omts {
        OmtsBuilder::new().state("q0", vec![r(0, 1)], true).build()
    }

    fn chain3() -> Omts {
        let a1 = Label::timed("a", r(1, 1));
        OmtsBuilder::new()
            .state("q0", vec![r(0, 1)], true)
            .state("q1", vec![r(1, 1)], false)
            .state("q2", vec![r(2, 1)], false)
            .arrow("q0", a1.clone(), "q1", Label::Empty)
            .arrow("q1", a1, "q2", Label::Empty)
            .build()
    }

    #[test]
    fn validate_well_formed_is_empty() {
        assert!(one_state().validate().is_empty());
        assert!(chain3().validate().is_empty());
    }

    #[test]
    fn validate_names_unknown_transition_target() {
        let mut t = chain3();
        t.transitions.insert(Transition {
            src: "q0".into(),
            label: Label::timed("a", r(1, 1)),
            dst: "ghost".into(),
            port: Label::Empty,
        });
        let report = t.validate();
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("ghost"));
    }

    #[test]
    fn validate_flags_stray_initial_state() {
        let mut t = one_state();
        t.initial.insert("ghost".into());
        let report = t.validate();
        assert_eq!(report.len(), 1);
        assert!(report[0].contains("ghost"));
    }

    #[test]
    fn post_empty_and_single_and_chain() {
        let t = one_state();
        let a1 = Label::timed("a", r(1, 1));
        // no non-nu transitions: any timed set yields the empty post set
        let s: BTreeSet<Label> = [a1.clone()].into();
        assert!(t.post("q0", &s).unwrap().is_empty());

        let looped = OmtsBuilder::new()
            .state("q0", vec![r(0, 1)], true)
            .arrow("q0", a1.clone(), "q0", Label::Empty)
            .build();
        assert_eq!(
            looped.post("q0", &s).unwrap(),
            ["q0".to_string()].into_iter().collect()
        );

        let t = chain3();
        assert_eq!(
            t.post("q0", &s).unwrap(),
            ["q1".to_string()].into_iter().collect()
        );
        assert!(t.post("missing", &s).is_err());
    }

    #[test]
    fn post_stays_within_states() {
        let t = chain3();
        let mut all = t.alphabet.clone();
        all.insert(Label::Empty);
        for q in &t.states {
            for dst in t.post(q, &all).unwrap() {
                assert!(t.states.contains(&dst));
            }
        }
    }

    #[test]
    fn materialize_adds_loops_and_is_idempotent() {
        let raw = Omts {
            states: ["a".to_string(), "b".to_string()].into(),
            initial: ["a".to_string()].into(),
            alphabet: BTreeSet::new(),
            transitions: BTreeSet::new(),
            outputs: [
                ("a".to_string(), OutputPoint(vec![r(0, 1)])),
                ("b".to_string(), OutputPoint(vec![r(1, 2)])),
            ]
            .into(),
            hybrid_labels: BTreeMap::new(),
        };
        let once = raw.materialize_empty_loops();
        assert_eq!(once.transitions.len(), 2);
        let twice = once.materialize_empty_loops();
        assert_eq!(once, twice);

        let empty = Omts::new(
            BTreeSet::new(),
            BTreeSet::new(),
            BTreeSet::new(),
            BTreeSet::new(),
            BTreeMap::new(),
        );
        assert_eq!(empty.materialize_empty_loops(), empty);
    }

    #[test]
    fn json_round_trip_is_identity_on_canonical_form() {
        let t = chain3();
        let canon = t.to_canonical_json().unwrap();
        let back = Omts::from_json(&canon).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.to_canonical_json().unwrap(), canon);
    }

    #[test]
    fn label_text_and_json_forms() {
        assert_eq!(Label::parse_text("nu").unwrap(), Label::Empty);
        assert_eq!(
            Label::parse_text("a@3/2").unwrap(),
            Label::timed("a", r(3, 2))
        );
        assert!(Label::parse_text("a@-1").is_err());
        assert!(Label::parse_text("bare").is_err());

        let l = Label::timed("a", r(3, 2));
        let json = serde_json::to_string(&serde_json::to_value(&l).unwrap()).unwrap();
        assert_eq!(json, r#"{"chi":"3/2","u":"a"}"#);
        assert_eq!(serde_json::from_str::<Label>(&json).unwrap(), l);
        assert_eq!(
            serde_json::from_str::<Label>(r#""nu""#).unwrap(),
            Label::Empty
        );
    }
}
