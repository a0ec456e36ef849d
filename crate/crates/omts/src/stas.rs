//! Space-time approximate simulation: greatest relations by monotone
//! refinement, smallest simulation functions by ascending fixed-point
//! iteration over the finite value lattice, sublevel sets, precisions, and
//! the bridge from simulation to conformance certificates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSuite;
use crate::model::{DerivationRelation, Omts, StateId};
use crate::rational::{Ext, Rational};

/// A (τ, ε)-STAS relation candidate or result.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize, Debug)]
pub struct StasRelation {
    pub tau: Rational,
    pub eps: Ext,
    pub pairs: BTreeSet<(StateId, StateId)>,
}

/// Total map from state pairs to extended non-negative values (a candidate or
/// computed τ-simulation function).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SimFunctionTable {
    pub tau: Rational,
    pub values: BTreeMap<(StateId, StateId), Ext>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    left: StateId,
    right: StateId,
    value: Ext,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    tau: Rational,
    values: Vec<TableEntry>,
}

impl Serialize for SimFunctionTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            tau: self.tau.clone(),
            values: self
                .values
                .iter()
                .map(|((l, r), v)| TableEntry {
                    left: l.clone(),
                    right: r.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimFunctionTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TableRepr::deserialize(d)?;
        Ok(SimFunctionTable {
            tau: repr.tau,
            values: repr
                .values
                .into_iter()
                .map(|e| ((e.left, e.right), e.value))
                .collect(),
        })
    }
}

impl SimFunctionTable {
    pub fn get(&self, q1: &str, q2: &str) -> Option<&Ext> {
        self.values.get(&(q1.to_string(), q2.to_string()))
    }

    pub fn read(path: &std::path::Path) -> Result<SimFunctionTable> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(&path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn all_pairs(t1: &Omts, t2: &Omts) -> Vec<(StateId, StateId)> {
    let mut pairs = Vec::with_capacity(t1.states.len() * t2.states.len());
    for q1 in &t1.states {
        for q2 in &t2.states {
            pairs.push((q1.clone(), q2.clone()));
        }
    }
    pairs
}

/// One-step sup-inf bound of Def. A1 at `(q1, q2)` under the value table:
/// sup over T1 moves of inf over τ-ball T2 moves of the successor value.
/// Empty inf is +inf, empty sup is -inf.
fn a1_bound(
    t1: &Omts,
    t2: &Omts,
    suite: &MetricSuite,
    tau: &Rational,
    values: &BTreeMap<(StateId, StateId), Ext>,
    q1: &str,
    q2: &str,
) -> Ext {
    Ext::sup(t1.transitions_from(q1).map(|m1| {
        Ext::inf(
            t2.transitions_from(q2)
                .filter(|m2| suite.in_ball(&m1.label, &m2.label, tau))
                .map(|m2| {
                    values
                        .get(&(m1.dst.clone(), m2.dst.clone()))
                        .cloned()
                        .unwrap_or(Ext::Inf)
                }),
        )
    }))
}

/// The unique largest relation satisfying Def. simulation conditions 1 and 2,
/// by monotone refinement from the ε-close-output seed.
pub fn greatest_stas_relation(
    t1: &Omts,
    t2: &Omts,
    suite: &MetricSuite,
    tau: &Rational,
    eps: &Ext,
) -> Result<StasRelation> {
    let mut pairs: BTreeSet<(StateId, StateId)> = BTreeSet::new();
    for (q1, q2) in all_pairs(t1, t2) {
        let d = suite.d_pi(
            t1.output(&q1)
                .ok_or_else(|| Error::UnknownState(q1.clone()))?,
            t2.output(&q2)
                .ok_or_else(|| Error::UnknownState(q2.clone()))?,
        )?;
        if d <= *eps {
            pairs.insert((q1, q2));
        }
    }
    loop {
        let survivors: BTreeSet<(StateId, StateId)> = pairs
            .iter()
            .filter(|(q1, q2)| {
                t1.transitions_from(q1).all(|m1| {
                    t2.transitions_from(q2).any(|m2| {
                        suite.in_ball(&m1.label, &m2.label, tau)
                            && pairs.contains(&(m1.dst.clone(), m2.dst.clone()))
                    })
                })
            })
            .cloned()
            .collect();
        if survivors.len() == pairs.len() {
            break;
        }
        pairs = survivors;
    }
    Ok(StasRelation {
        tau: tau.clone(),
        eps: eps.clone(),
        pairs,
    })
}

/// Exhaustive check of conditions 1 and 2 for a candidate relation.
pub fn verify_stas_relation(
    t1: &Omts,
    t2: &Omts,
    suite: &MetricSuite,
    rel: &StasRelation,
) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    for (q1, q2) in &rel.pairs {
        let d = suite.d_pi(
            t1.output(q1)
                .ok_or_else(|| Error::UnknownState(q1.clone()))?,
            t2.output(q2)
                .ok_or_else(|| Error::UnknownState(q2.clone()))?,
        )?;
        if d > rel.eps {
            violations.push(format!(
                "condition 1 fails at ({q1}, {q2}): output distance {d} > {}",
                rel.eps
            ));
        }
        for m1 in t1.transitions_from(q1) {
            let matched = t2.transitions_from(q2).any(|m2| {
                suite.in_ball(&m1.label, &m2.label, &rel.tau)
                    && rel.pairs.contains(&(m1.dst.clone(), m2.dst.clone()))
            });
            if !matched {
                violations.push(format!(
                    "condition 2 fails at ({q1}, {q2}): move `{}` to `{}` has no τ-ball match",
                    m1.label, m1.dst
                ));
            }
        }
    }
    Ok(violations)
}

/// Condition 3: every T1 initial state is related to some T2 initial state.
pub fn check_simulates(
    rel: &StasRelation,
    q1_initial: &BTreeSet<StateId>,
    q2_initial: &BTreeSet<StateId>,
) -> bool {
    q1_initial.iter().all(|q1| {
        q2_initial
            .iter()
            .any(|q2| rel.pairs.contains(&(q1.clone(), q2.clone())))
    })
}

/// Least fixed point of `V ↦ max(d_Π, sup-inf step)`, iterated Jacobi-style
/// from `V₀ = d_Π`. Values live in the finite lattice of attained output
/// distances plus +inf, and the update is monotone, so iteration terminates.
pub fn smallest_sim_function(
    t1: &Omts,
    t2: &Omts,
    suite: &MetricSuite,
    tau: &Rational,
) -> Result<SimFunctionTable> {
    let pairs = all_pairs(t1, t2);
    let mut base: BTreeMap<(StateId, StateId), Ext> = BTreeMap::new();
    for (q1, q2) in &pairs {
        let d = suite.d_pi(
            t1.output(q1)
                .ok_or_else(|| Error::UnknownState(q1.clone()))?,
            t2.output(q2)
                .ok_or_else(|| Error::UnknownState(q2.clone()))?,
        )?;
        base.insert((q1.clone(), q2.clone()), d);
    }
    let mut values = base.clone();
    loop {
        let mut next = BTreeMap::new();
        for (q1, q2) in &pairs {
            let bound = a1_bound(t1, t2, suite, tau, &values, q1, q2);
            let floor = base[&(q1.clone(), q2.clone())].clone();
            next.insert((q1.clone(), q2.clone()), floor.max(bound));
        }
        if next == values {
            break;
        }
        values = next;
    }
    Ok(SimFunctionTable {
        tau: tau.clone(),
        values,
    })
}

/// Exhaustive A0/A1 check of a candidate table; errors if the table is not
/// total on Q1 × Q2.
pub fn verify_sim_function(
    t1: &Omts,
    t2: &Omts,
    suite: &MetricSuite,
    table: &SimFunctionTable,
) -> Result<Vec<String>> {
    for (q1, q2) in all_pairs(t1, t2) {
        if !table.values.contains_key(&(q1.clone(), q2.clone())) {
            return Err(Error::PartialTable(q1, q2));
        }
    }
    let mut violations = Vec::new();
    for ((q1, q2), v) in &table.values {
        if !t1.states.contains(q1) || !t2.states.contains(q2) {
            continue;
        }
        let d = suite.d_pi(
            t1.output(q1)
                .ok_or_else(|| Error::UnknownState(q1.clone()))?,
            t2.output(q2)
                .ok_or_else(|| Error::UnknownState(q2.clone()))?,
        )?;
        if *v < d {
            violations.push(format!("A0 fails at ({q1}, {q2}): {v} < {d}"));
        }
        let bound = a1_bound(t1, t2, suite, &table.tau, &table.values, q1, q2);
        if *v < bound {
            violations.push(format!("A1 fails at ({q1}, {q2}): {v} < {bound}"));
        }
    }
    Ok(violations)
}

/// The ε-sublevel set of V, tagged (τ, ε).
pub fn level_set(table: &SimFunctionTable, eps: &Ext) -> StasRelation {
    StasRelation {
        tau: table.tau.clone(),
        eps: eps.clone(),
        pairs: table
            .values
            .iter()
            .filter(|(_, v)| *v <= eps)
            .map(|(p, _)| p.clone())
            .collect(),
    }
}

/// sup over first-system initial states of inf over second-system initial
/// states of V.
pub fn precision_from_v(
    table: &SimFunctionTable,
    q1_initial: &BTreeSet<StateId>,
    q2_initial: &BTreeSet<StateId>,
) -> Result<Ext> {
    let mut worst = Ext::NegInf;
    for q1 in q1_initial {
        let best = Ext::inf(q2_initial.iter().map(|q2| {
            table
                .values
                .get(&(q1.clone(), q2.clone()))
                .cloned()
                .unwrap_or(Ext::Inf)
        }));
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Unbounded-horizon conformance certificate issued from a STAS relation.
#[derive(Clone, Serialize, Deserialize, Debug)]
pub struct ConformanceCertificate {
    pub ok: bool,
    pub tau: Rational,
    pub eps: Ext,
    pub derivation: DerivationRelation,
    /// Certificates from simulation hold at every horizon.
    pub unbounded_horizon: bool,
    /// Set when the derivation relation was empty (vacuous certificate).
    pub vacuous: bool,
    pub missing_pairs: BTreeSet<(StateId, StateId)>,
}

/// If D ⊆ R, the second system conforms to the first with precision (τ, ε)
/// and derivation D at every horizon; otherwise the offending pairs are
/// reported.
pub fn sim_to_conformance(rel: &StasRelation, d: &DerivationRelation) -> ConformanceCertificate {
    let missing: BTreeSet<(StateId, StateId)> = d.pairs.difference(&rel.pairs).cloned().collect();
    ConformanceCertificate {
        ok: missing.is_empty(),
        tau: rel.tau.clone(),
        eps: rel.eps.clone(),
        derivation: d.clone(),
        unbounded_horizon: true,
        vacuous: d.pairs.is_empty(),
        missing_pairs: missing,
    }
}
