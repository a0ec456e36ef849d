//! Deterministic fixture generation for the property and acceptance suites.
//!
//! All randomness flows from a caller-supplied seed through SplitMix64; no
//! wall-clock or entropy sources, so identical seeds give identical models.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Label, Omts, OmtsBuilder, Transition};
use crate::rational::Rational;

/// SplitMix64 PRNG (Steele et al.); tiny, seedable, platform-stable.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    pub fn pick<'a, T>(&mut self, slice: &'a [T]) -> &'a T {
        &slice[self.below(slice.len() as u64) as usize]
    }
}

/// Label pool shared by all generated systems: two systems generated with the
/// same `n_labels` have the same alphabet, as conformance and simulation
/// require. Same-symbol entries with different durations keep τ-balls
/// non-trivial.
fn label_pool() -> Vec<Label> {
    [
        ("a", (1, 1)),
        ("a", (3, 2)),
        ("b", (1, 1)),
        ("b", (2, 1)),
        ("c", (1, 2)),
        ("c", (3, 1)),
        ("d", (1, 1)),
        ("e", (2, 1)),
    ]
    .iter()
    .map(|&(s, (n, d))| Label::timed(s, Rational::new(n, d)))
    .collect()
}

pub fn alphabet_for(n_labels: usize) -> Vec<Label> {
    let pool = label_pool();
    pool[..n_labels.clamp(1, pool.len())].to_vec()
}

fn lattice_output(rng: &mut SplitMix64) -> Rational {
    Rational::new(rng.below(5) as i64, 4)
}

/// Deterministic random OMTS; passes `validate` for all parameter choices.
pub fn generate_random_omts(seed: u64, n_states: usize, n_labels: usize, branching: usize) -> Omts {
    let mut rng = SplitMix64::new(seed);
    let alphabet = alphabet_for(n_labels);
    let n_states = n_states.max(1);

    let mut builder = OmtsBuilder::new();
    let ids: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    for (i, id) in ids.iter().enumerate() {
        let initial = i == 0 || rng.chance(1, 4);
        builder = builder.state(id, vec![lattice_output(&mut rng)], initial);
    }
    for label in &alphabet {
        builder = builder.letter(label.clone());
    }
    for id in &ids {
        for _ in 0..branching {
            let label = rng.pick(&alphabet).clone();
            let dst = rng.pick(&ids).clone();
            let port = if rng.chance(1, 3) {
                Label::Empty
            } else {
                rng.pick(&alphabet).clone()
            };
            builder = builder.arrow(id, label, &dst, port);
        }
    }
    builder.build()
}

/// Returns a copy with every output coordinate shifted by `delta`.
/// Materialized ν-loop ports render outputs, so loops are rebuilt.
pub fn shift_outputs(t: &Omts, delta: &Rational) -> Omts {
    let transitions: BTreeSet<Transition> = t
        .transitions
        .iter()
        .filter(|tr| !tr.label.is_empty())
        .cloned()
        .collect();
    let outputs = t
        .outputs
        .iter()
        .map(|(q, p)| {
            let shifted = p.0.iter().map(|c| c + delta).collect();
            (q.clone(), crate::model::OutputPoint(shifted))
        })
        .collect();
    Omts::new(
        t.states.clone(),
        t.initial.clone(),
        t.alphabet.clone(),
        transitions,
        outputs,
    )
}

/// A pair of systems whose ports are cross-wired so their feedback
/// interconnection has admitted transitions: each generated step inserts
/// `q1 -σ1-> q1'` with port σ2 into T1 and `q2 -σ2-> q2'` with port σ1 into
/// T2, where σ1 and σ2 share a chronological component.
///
/// `uniform_outputs` fixes every output of T1 (resp. T2) to one value, which
/// makes the smallest simulation function against a shifted copy constant.
pub fn generate_wired_pair(
    seed: u64,
    n_states: usize,
    n_labels: usize,
    branching: usize,
    uniform_outputs: Option<(Rational, Rational)>,
) -> (Omts, Omts) {
    let mut rng = SplitMix64::new(seed ^ 0xD1F1_0C0A_5EED_0001);
    let alphabet = alphabet_for(n_labels.max(2));
    let n_states = n_states.max(1);

    // Pairs of distinct alphabet labels with equal chrono components.
    let mut wirings: Vec<(Label, Label)> = Vec::new();
    for l1 in &alphabet {
        for l2 in &alphabet {
            if l1.chrono() == l2.chrono() {
                wirings.push((l1.clone(), l2.clone()));
            }
        }
    }

    let build_side = |uniform: Option<&Rational>, rng: &mut SplitMix64| {
        let mut builder = OmtsBuilder::new();
        let ids: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
        for (i, id) in ids.iter().enumerate() {
            let out = match uniform {
                Some(v) => v.clone(),
                None => lattice_output(rng),
            };
            builder = builder.state(id, vec![out], i == 0 || rng.chance(1, 4));
        }
        for label in &alphabet {
            builder = builder.letter(label.clone());
        }
        (builder, ids)
    };

    let (u1, u2) = match &uniform_outputs {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let (mut b1, ids1) = build_side(u1, &mut rng);
    let (mut b2, ids2) = build_side(u2, &mut rng);

    let steps = branching.max(1) * n_states;
    for _ in 0..steps {
        let (s1, s2) = rng.pick(&wirings).clone();
        let q1 = rng.pick(&ids1).clone();
        let q1n = rng.pick(&ids1).clone();
        let q2 = rng.pick(&ids2).clone();
        let q2n = rng.pick(&ids2).clone();
        b1 = b1.arrow(&q1, s1.clone(), &q1n, s2.clone());
        b2 = b2.arrow(&q2, s2, &q2n, s1);
    }
    // a little unwired texture on each side
    for _ in 0..branching {
        let l = rng.pick(&alphabet).clone();
        let q = rng.pick(&ids1).clone();
        let qn = rng.pick(&ids1).clone();
        b1 = b1.arrow(&q, l, &qn, Label::Empty);
        let l = rng.pick(&alphabet).clone();
        let q = rng.pick(&ids2).clone();
        let qn = rng.pick(&ids2).clone();
        b2 = b2.arrow(&q, l, &qn, Label::Empty);
    }
    (b1.build(), b2.build())
}

/// Chrono-preserving involution on the alphabet: equal-chrono labels are
/// paired up (an odd one maps to itself). Used to port-wire total systems.
fn label_involution(alphabet: &[Label]) -> BTreeMap<Label, Label> {
    let mut by_chrono: BTreeMap<Rational, Vec<Label>> = BTreeMap::new();
    for l in alphabet {
        if let Some(chi) = l.chrono() {
            by_chrono.entry(chi.clone()).or_default().push(l.clone());
        }
    }
    let mut f = BTreeMap::new();
    for group in by_chrono.values() {
        let mut iter = group.chunks(2);
        for pair in iter.by_ref() {
            match pair {
                [a, b] => {
                    f.insert(a.clone(), b.clone());
                    f.insert(b.clone(), a.clone());
                }
                [a] => {
                    f.insert(a.clone(), a.clone());
                }
                _ => unreachable!(),
            }
        }
    }
    f
}

/// A wired pair where every state of both systems has an outgoing transition
/// for every alphabet label, ported through a chrono-preserving involution:
/// a T1 step on σ pairs with any T2 step on f(σ), so the interconnection is
/// never empty and one-step infima never hit the empty-set convention.
pub fn generate_total_wired_pair(
    seed: u64,
    n1: usize,
    n2: usize,
    n_labels: usize,
    uniform_outputs: Option<(Rational, Rational)>,
) -> (Omts, Omts) {
    let mut rng = SplitMix64::new(seed ^ 0x7071_77ED_FACE_0001);
    let alphabet = alphabet_for(n_labels);
    let f = label_involution(&alphabet);

    let build = |n: usize, uniform: Option<&Rational>, rng: &mut SplitMix64| {
        let ids: Vec<String> = (0..n.max(1)).map(|i| format!("s{i}")).collect();
        let mut builder = OmtsBuilder::new();
        for (i, id) in ids.iter().enumerate() {
            let out = match uniform {
                Some(v) => v.clone(),
                None => lattice_output(rng),
            };
            builder = builder.state(id, vec![out], i == 0 || rng.chance(1, 4));
        }
        for label in &alphabet {
            builder = builder.letter(label.clone());
        }
        for id in &ids {
            for label in &alphabet {
                let dst = rng.pick(&ids).clone();
                builder = builder.arrow(id, label.clone(), &dst, f[label].clone());
            }
        }
        builder.build()
    };

    let (u1, u2) = match &uniform_outputs {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let t1 = build(n1, u1, &mut rng);
    let t2 = build(n2, u2, &mut rng);
    (t1, t2)
}
