//! Depth-bounded brute-force conformance checking and the conformance degree.
//!
//! Verdicts quantify over all executions up to a non-ν depth bound and are
//! reported as such; unbounded-horizon certificates come from the simulation
//! route instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSuite;
use crate::model::{DerivationRelation, Label, Omts, StateId};
use crate::rational::{Ext, Rational};

/// A finite run: start state plus the (label, reached state) sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Debug)]
pub struct Execution {
    pub start: StateId,
    pub steps: Vec<(Label, StateId)>,
}

impl Execution {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State after `i` steps; `i = 0` is the start state.
    pub fn state_at(&self, i: usize) -> &StateId {
        if i == 0 {
            &self.start
        } else {
            &self.steps[i - 1].1
        }
    }

    /// The label prefix of length `i`.
    pub fn prefix(&self, i: usize) -> Vec<Label> {
        self.steps[..i].iter().map(|(l, _)| l.clone()).collect()
    }
}

/// All executions from `q0` with at most `depth` non-ν steps and at most
/// `nu_budget` ν steps, in lexicographic order of their step encoding.
pub fn enumerate_executions(
    t: &Omts,
    q0: &str,
    depth: usize,
    nu_budget: usize,
) -> Result<Vec<Execution>> {
    if !t.states.contains(q0) {
        return Err(Error::UnknownState(q0.to_string()));
    }
    let mut out = Vec::new();
    let mut steps: Vec<(Label, StateId)> = Vec::new();
    walk(t, q0, q0, depth, nu_budget, &mut steps, &mut out);
    Ok(out)
}

fn walk(
    t: &Omts,
    start: &str,
    here: &str,
    depth: usize,
    nu_budget: usize,
    steps: &mut Vec<(Label, StateId)>,
    out: &mut Vec<Execution>,
) {
    out.push(Execution {
        start: start.to_string(),
        steps: steps.clone(),
    });
    // BTreeSet iteration gives the lexicographic (label, dst) order.
    // Transitions differing only in their port are one step of the run.
    let mut last: Option<(&Label, &StateId)> = None;
    for tr in t.transitions_from(here) {
        if last == Some((&tr.label, &tr.dst)) {
            continue;
        }
        last = Some((&tr.label, &tr.dst));
        let budgeted = if tr.label.is_empty() {
            nu_budget.checked_sub(1).map(|b| (depth, b))
        } else {
            depth.checked_sub(1).map(|d| (d, nu_budget))
        };
        if let Some((d, b)) = budgeted {
            steps.push((tr.label.clone(), tr.dst.clone()));
            walk(t, start, &tr.dst, d, b, steps, out);
            steps.pop();
        }
    }
}

/// The least ε making conditions (a) and (b) hold for this specific pair of
/// runs at time slack τ: every state of either run needs a partner in the
/// other within output distance ε among prefix-compatible indices.
///
/// Matching indices start at 1; the initial pair is checked separately by the
/// lower-bound diagnostics.
pub fn match_cost(
    t1: &Omts,
    run1: &Execution,
    t2: &Omts,
    run2: &Execution,
    suite: &MetricSuite,
    tau: &Rational,
) -> Result<Ext> {
    match_cost_inner(t1, run1, t2, run2, suite, tau, false)
}

// i and k are run positions, used against both the runs and the matrix.
#[allow(clippy::needless_range_loop)]
fn match_cost_inner(
    t1: &Omts,
    run1: &Execution,
    t2: &Omts,
    run2: &Execution,
    suite: &MetricSuite,
    tau: &Rational,
    include_initial: bool,
) -> Result<Ext> {
    let admissible = prefix_admissibility(run1, run2, suite, tau);
    let lo = if include_initial { 0 } else { 1 };

    let mut worst = Ext::zero();
    for i in lo..=run1.len() {
        let p1 = t1
            .output(run1.state_at(i))
            .ok_or_else(|| Error::UnknownState(run1.state_at(i).clone()))?;
        let mut best = Ext::Inf;
        for k in 0..=run2.len() {
            if !admissible[i][k] {
                continue;
            }
            let p2 = t2
                .output(run2.state_at(k))
                .ok_or_else(|| Error::UnknownState(run2.state_at(k).clone()))?;
            best = best.min(suite.d_pi(p1, p2)?);
        }
        worst = worst.max(best);
    }
    for k in lo..=run2.len() {
        let p2 = t2
            .output(run2.state_at(k))
            .ok_or_else(|| Error::UnknownState(run2.state_at(k).clone()))?;
        let mut best = Ext::Inf;
        for i in 0..=run1.len() {
            if !admissible[i][k] {
                continue;
            }
            let p1 = t1
                .output(run1.state_at(i))
                .ok_or_else(|| Error::UnknownState(run1.state_at(i).clone()))?;
            best = best.min(suite.d_pi(p1, p2)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// `admissible[i][k]` iff `d_Σ*(σ̄_[i], ᾱ_[k]) <= τ`.
fn prefix_admissibility(
    run1: &Execution,
    run2: &Execution,
    suite: &MetricSuite,
    tau: &Rational,
) -> Vec<Vec<bool>> {
    let bound = Ext::Fin(tau.clone());
    let labels1: Vec<Label> = run1.prefix(run1.len());
    let labels2: Vec<Label> = run2.prefix(run2.len());
    (0..=run1.len())
        .map(|i| {
            (0..=run2.len())
                .map(|k| suite.d_sigma_star(&labels1[..i], &labels2[..k]) <= bound)
                .collect()
        })
        .collect()
}

#[derive(Clone, Serialize, Deserialize, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub t1_execution: Execution,
    /// The failing condition, `"a"` (a T1 state unmatched) or `"b"`.
    pub condition: String,
    /// 1-based index of the unmatched state in its run.
    pub index: usize,
}

#[derive(Clone, Serialize, Deserialize, Debug)]
pub struct ConformanceVerdict {
    pub holds: bool,
    pub tau: Rational,
    pub eps: Rational,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

/// Enumerates ν-free runs. ν transitions are self-loops and both string
/// metrics erase ν positions, so padding a run with ν steps changes neither
/// its state/prefix pairs nor any match cost; ν-free representatives cover
/// the whole search space at the depth bound.
fn nu_free_runs(t: &Omts, q0: &str, depth: usize) -> Result<Vec<Execution>> {
    enumerate_executions(t, q0, depth, 0)
}

/// Depth-bounded check of the two-way matching definition. `holds` means every
/// T1 execution (≤ depth non-ν steps) from every D-related start is matched by
/// some T2 execution within (τ, ε).
#[allow(clippy::too_many_arguments)]
pub fn check_conformance(
    t1: &Omts,
    t2: &Omts,
    d: &DerivationRelation,
    suite: &MetricSuite,
    tau: &Rational,
    eps: &Rational,
    depth: usize,
) -> Result<ConformanceVerdict> {
    d.validate_against(t1, t2)?;
    if d.pairs.is_empty() {
        return Err(Error::Usage("derivation relation is empty".into()));
    }
    if let (Some(a), Some(b)) = (t1.output_dim(), t2.output_dim()) {
        if a != b {
            return Err(Error::DimensionMismatch(a, b));
        }
    }
    let threshold = suite.d_pi.user_threshold(eps);

    let mut t2_runs: BTreeMap<StateId, Vec<Execution>> = BTreeMap::new();
    for (q1, q2) in &d.pairs {
        if !t2_runs.contains_key(q2) {
            t2_runs.insert(q2.clone(), nu_free_runs(t2, q2, depth)?);
        }
        let runs2 = &t2_runs[q2];
        for run1 in nu_free_runs(t1, q1, depth)? {
            let mut best_cost = Ext::Inf;
            let mut best_run: Option<&Execution> = None;
            for run2 in runs2.iter() {
                let cost = match_cost(t1, &run1, t2, run2, suite, tau)?;
                if best_run.is_none() || cost < best_cost {
                    best_cost = cost;
                    best_run = Some(run2);
                }
            }
            if best_cost > threshold {
                let witness = best_run.expect("at least the empty T2 run exists");
                let (condition, index) =
                    first_violation(t1, &run1, t2, witness, suite, tau, &threshold)?;
                return Ok(ConformanceVerdict {
                    holds: false,
                    tau: tau.clone(),
                    eps: eps.clone(),
                    depth,
                    counterexample: Some(Counterexample {
                        t1_execution: run1,
                        condition,
                        index,
                    }),
                });
            }
        }
    }
    Ok(ConformanceVerdict {
        holds: true,
        tau: tau.clone(),
        eps: eps.clone(),
        depth,
        counterexample: None,
    })
}

#[allow(clippy::needless_range_loop)]
fn first_violation(
    t1: &Omts,
    run1: &Execution,
    t2: &Omts,
    run2: &Execution,
    suite: &MetricSuite,
    tau: &Rational,
    threshold: &Ext,
) -> Result<(String, usize)> {
    let admissible = prefix_admissibility(run1, run2, suite, tau);
    for i in 1..=run1.len() {
        let p1 = t1.output(run1.state_at(i)).expect("validated");
        let mut best = Ext::Inf;
        for k in 0..=run2.len() {
            if admissible[i][k] {
                best = best.min(suite.d_pi(p1, t2.output(run2.state_at(k)).expect("validated"))?);
            }
        }
        if best > *threshold {
            return Ok(("a".to_string(), i));
        }
    }
    for k in 1..=run2.len() {
        let p2 = t2.output(run2.state_at(k)).expect("validated");
        let mut best = Ext::Inf;
        for i in 0..=run1.len() {
            if admissible[i][k] {
                best = best.min(suite.d_pi(t1.output(run1.state_at(i)).expect("validated"), p2)?);
            }
        }
        if best > *threshold {
            return Ok(("b".to_string(), k));
        }
    }
    // the minimizing run satisfied the bound after all; callers prevent this
    Err(Error::Usage("no violating index found".into()))
}

/// Least ε (on the metric's comparison scale) for which the depth-bounded
/// check holds at slack τ: max over D of sup over T1 runs of min over T2 runs
/// of match cost.
pub fn conformance_degree(
    t1: &Omts,
    t2: &Omts,
    d: &DerivationRelation,
    suite: &MetricSuite,
    tau: &Rational,
    depth: usize,
) -> Result<Ext> {
    d.validate_against(t1, t2)?;
    if d.pairs.is_empty() {
        return Err(Error::Usage("derivation relation is empty".into()));
    }
    let mut degree = Ext::zero();
    let mut t2_runs: BTreeMap<StateId, Vec<Execution>> = BTreeMap::new();
    for (q1, q2) in &d.pairs {
        if !t2_runs.contains_key(q2) {
            t2_runs.insert(q2.clone(), nu_free_runs(t2, q2, depth)?);
        }
        let runs2 = &t2_runs[q2];
        for run1 in nu_free_runs(t1, q1, depth)? {
            let mut best = Ext::Inf;
            for run2 in runs2.iter() {
                best = best.min(match_cost(t1, &run1, t2, run2, suite, tau)?);
            }
            degree = degree.max(best);
        }
    }
    Ok(degree)
}

/// Largest initial-pair output distance over D; any precision obtained when
/// the matching is required to include the initial states is at least this.
pub fn initial_pair_bound(
    t1: &Omts,
    t2: &Omts,
    d: &DerivationRelation,
    suite: &MetricSuite,
) -> Result<Ext> {
    let mut bound = Ext::zero();
    for (q1, q2) in &d.pairs {
        let p1 = t1
            .output(q1)
            .ok_or_else(|| Error::UnknownState(q1.clone()))?;
        let p2 = t2
            .output(q2)
            .ok_or_else(|| Error::UnknownState(q2.clone()))?;
        bound = bound.max(suite.d_pi(p1, p2)?);
    }
    Ok(bound)
}

/// Degree variant whose matching conditions also cover index 0, used by the
/// initial-pair lower-bound diagnostics.
pub fn conformance_degree_with_initial(
    t1: &Omts,
    t2: &Omts,
    d: &DerivationRelation,
    suite: &MetricSuite,
    tau: &Rational,
    depth: usize,
) -> Result<Ext> {
    d.validate_against(t1, t2)?;
    let mut degree = Ext::zero();
    let mut t2_runs: BTreeMap<StateId, Vec<Execution>> = BTreeMap::new();
    for (q1, q2) in &d.pairs {
        if !t2_runs.contains_key(q2) {
            t2_runs.insert(q2.clone(), nu_free_runs(t2, q2, depth)?);
        }
        let runs2 = &t2_runs[q2];
        for run1 in nu_free_runs(t1, q1, depth)? {
            let mut best = Ext::Inf;
            for run2 in runs2.iter() {
                best = best.min(match_cost_inner(t1, &run1, t2, run2, suite, tau, true)?);
            }
            degree = degree.max(best);
        }
    }
    Ok(degree)
}
