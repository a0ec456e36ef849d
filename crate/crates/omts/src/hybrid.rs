//! Compact hybrid time domains, sampled arcs, the Hausdorff-based label
//! pseudo-metric, domain concatenation, the trajectory-set embedding, and the
//! simulation-to-closeness precision inflation.
//!
//! Trajectories are ingested as sampled data; no solver lives here.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Label, Omts, OutputPoint, StateId, Transition, OUTPUT_PORT_PREFIX};
use crate::rational::{Ext, Rational};

/// Union of closed intervals `[t_j, t_{j+1}] x {j}`, `j = 0..J-1`, encoded by
/// the nondecreasing boundary times `0 = t_0 <= t_1 <= ... <= t_J`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HybridTimeDomain {
    pub times: Vec<Rational>,
}

impl HybridTimeDomain {
    pub fn new(times: Vec<Rational>) -> Result<HybridTimeDomain> {
        if times.len() < 2 {
            return Err(Error::BadDomain("need at least one interval".into()));
        }
        if !times[0].is_zero() {
            return Err(Error::BadDomain("domain must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::BadDomain(
                "boundary times must be nondecreasing".into(),
            ));
        }
        Ok(HybridTimeDomain { times })
    }

    /// Single interval `[0, end] x {0}`.
    pub fn single(end: Rational) -> Result<HybridTimeDomain> {
        HybridTimeDomain::new(vec![Rational::zero(), end])
    }

    /// Number of jumps `J` (= number of intervals).
    pub fn jumps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn interval(&self, j: usize) -> (&Rational, &Rational) {
        (&self.times[j], &self.times[j + 1])
    }

    pub fn final_time(&self) -> &Rational {
        self.times.last().expect("domain has at least one interval")
    }

    pub fn contains(&self, t: &Rational, j: usize) -> bool {
        j < self.jumps() && &self.times[j] <= t && t <= &self.times[j + 1]
    }

    /// Prefix `[t_0,t_1]x{0} u ... u [t_j, t]x{j}` up to the point `(t, j)`.
    pub fn prefix(&self, t: &Rational, j: usize) -> Result<HybridTimeDomain> {
        if !self.contains(t, j) {
            return Err(Error::BadDomain(format!(
                "({t}, {j}) is outside the domain"
            )));
        }
        let mut times: Vec<Rational> = self.times[..=j].to_vec();
        times.push(t.clone());
        HybridTimeDomain::new(times)
    }
}

impl fmt::Debug for HybridTimeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.jumps())
            .map(|j| {
                let (a, b) = self.interval(j);
                format!("[{a},{b}]x{{{j}}}")
            })
            .collect();
        write!(f, "{}", parts.join(" u "))
    }
}

/// Symmetric Hausdorff distance between two closed intervals: `max(|a-c|, |b-d|)`.
pub fn hausdorff_interval(
    i: (&Rational, &Rational),
    j: (&Rational, &Rational),
) -> Result<Rational> {
    let (a, b) = i;
    let (c, d) = j;
    if a > b {
        return Err(Error::BadInterval(a.to_string(), b.to_string()));
    }
    if c > d {
        return Err(Error::BadInterval(c.to_string(), d.to_string()));
    }
    Ok((a - c).abs().max((b - d).abs()))
}

/// `E` followed by `E'` shifted by `(t_J1, J1)`.
pub fn concat_domains(e1: &HybridTimeDomain, e2: &HybridTimeDomain) -> HybridTimeDomain {
    let shift = e1.final_time().clone();
    let mut times = e1.times.clone();
    for t in &e2.times[1..] {
        times.push(&shift + t);
    }
    HybridTimeDomain { times }
}

/// Arc sampled over a hybrid time domain. Keys are `(j, t)` grid points; each
/// interval holds both of its endpoints as samples.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize, Debug)]
pub struct SampledArc {
    pub domain: HybridTimeDomain,
    pub step: Rational,
    pub samples: BTreeMap<(usize, Rational), Vec<Rational>>,
}

impl SampledArc {
    pub fn new(
        domain: HybridTimeDomain,
        step: Rational,
        samples: BTreeMap<(usize, Rational), Vec<Rational>>,
    ) -> Result<SampledArc> {
        if step.is_zero() || step.is_negative() {
            return Err(Error::BadArc("grid step must be positive".into()));
        }
        let dim = samples
            .values()
            .next()
            .map(Vec::len)
            .ok_or_else(|| Error::BadArc("arc has no samples".into()))?;
        for ((j, t), value) in &samples {
            if !domain.contains(t, *j) {
                return Err(Error::BadArc(format!("sample ({t}, {j}) outside domain")));
            }
            if value.len() != dim {
                return Err(Error::BadArc(format!(
                    "sample ({t}, {j}) has dimension {} instead of {dim}",
                    value.len()
                )));
            }
        }
        for j in 0..domain.jumps() {
            let (a, b) = domain.interval(j);
            if !samples.contains_key(&(j, a.clone())) || !samples.contains_key(&(j, b.clone())) {
                return Err(Error::BadArc(format!(
                    "interval {j} is missing an endpoint sample"
                )));
            }
        }
        Ok(SampledArc {
            domain,
            step,
            samples,
        })
    }

    pub fn value_dim(&self) -> usize {
        self.samples.values().next().map(Vec::len).unwrap_or(0)
    }

    /// Restriction to the prefix domain up to `(t, j)`.
    pub fn restrict(&self, t: &Rational, j: usize) -> Result<SampledArc> {
        let domain = self.domain.prefix(t, j)?;
        let samples: BTreeMap<(usize, Rational), Vec<Rational>> = self
            .samples
            .iter()
            .filter(|((sj, st), _)| *sj < j || (*sj == j && st <= t))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        SampledArc::new(domain, self.step.clone(), samples)
    }

    /// Deterministic token naming this arc (domain boundaries + samples).
    pub fn token(&self) -> String {
        let times: Vec<String> = self.domain.times.iter().map(|t| t.to_string()).collect();
        let samples: Vec<String> = self
            .samples
            .iter()
            .map(|((j, t), v)| {
                let coords: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                format!("({j},{t})=[{}]", coords.join(","))
            })
            .collect();
        format!("{{{}}};{}", times.join(","), samples.join(";"))
    }

    /// Parses CSV rows `t,j,x1,..,xn` (header required) and infers the domain.
    pub fn from_csv(text: &str, step: Option<Rational>) -> Result<SampledArc> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::BadArc("empty file".into()))?;
        if !header.trim_start().starts_with("t,j") {
            return Err(Error::BadArc("expected header `t,j,<coords>`".into()));
        }
        let mut samples: BTreeMap<(usize, Rational), Vec<Rational>> = BTreeMap::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::BadArc(format!("short row `{line}`")));
            }
            let t = Rational::parse(fields[0])?;
            let j: usize = fields[1]
                .parse()
                .map_err(|_| Error::BadArc(format!("bad jump index `{}`", fields[1])))?;
            let value: Result<Vec<Rational>> =
                fields[2..].iter().map(|f| Rational::parse(f)).collect();
            samples.insert((j, t), value?);
        }
        if samples.is_empty() {
            return Err(Error::BadArc("arc has no samples".into()));
        }
        let jumps = samples.keys().map(|(j, _)| *j).max().unwrap() + 1;
        let mut times = Vec::with_capacity(jumps + 1);
        for j in 0..jumps {
            let mut level = samples.keys().filter(|(sj, _)| *sj == j).map(|(_, t)| t);
            let first = level
                .next()
                .ok_or_else(|| Error::BadDomain(format!("no samples at jump level {j}")))?
                .clone();
            let last = samples
                .keys()
                .filter(|(sj, _)| *sj == j)
                .map(|(_, t)| t)
                .max()
                .unwrap()
                .clone();
            if j == 0 {
                times.push(first.clone());
            } else if times.last() != Some(&first) {
                return Err(Error::BadDomain(format!(
                    "jump level {j} starts at {first}, expected {}",
                    times.last().unwrap()
                )));
            }
            times.push(last);
        }
        let domain = HybridTimeDomain::new(times)?;
        let step = step
            .or_else(|| infer_step(&samples))
            .unwrap_or_else(Rational::one);
        SampledArc::new(domain, step, samples)
    }
}

fn infer_step(samples: &BTreeMap<(usize, Rational), Vec<Rational>>) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    let keys: Vec<&(usize, Rational)> = samples.keys().collect();
    for w in keys.windows(2) {
        if w[0].0 == w[1].0 {
            let gap = &w[1].1 - &w[0].1;
            if !gap.is_zero() && best.as_ref().is_none_or(|b| &gap < b) {
                best = Some(gap);
            }
        }
    }
    best
}

/// Rich label: an input arc together with its hybrid time domain.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HybridLabel {
    pub arc: SampledArc,
}

impl HybridLabel {
    pub fn domain(&self) -> &HybridTimeDomain {
        &self.arc.domain
    }
}

/// Whole labels have a common extension iff both are anchored at `(0,0)` (a
/// structural domain invariant) and make the same number of jumps.
pub fn common_extension(a: &HybridLabel, b: &HybridLabel) -> bool {
    domains_have_common_extension(a.domain(), b.domain())
}

pub fn domains_have_common_extension(a: &HybridTimeDomain, b: &HybridTimeDomain) -> bool {
    a.jumps() == b.jumps()
}

/// Label pseudo-metric: interval-wise Hausdorff when a common extension
/// exists, `inf` otherwise. Arc values do not enter the distance.
pub fn d_sigma_hybrid(a: &HybridLabel, b: &HybridLabel) -> Ext {
    d_sigma_hybrid_domains(a.domain(), b.domain())
}

pub fn d_sigma_hybrid_domains(a: &HybridTimeDomain, b: &HybridTimeDomain) -> Ext {
    if !domains_have_common_extension(a, b) {
        return Ext::Inf;
    }
    let mut worst = Rational::zero();
    for j in 0..a.jumps() {
        let d = hausdorff_interval(a.interval(j), b.interval(j))
            .expect("domain intervals are well-formed");
        worst = worst.max(d);
    }
    Ext::Fin(worst)
}

/// String pseudo-metric: concatenate each sequence into one label and compare.
pub fn d_sigma_star_hybrid(s: &[HybridLabel], a: &[HybridLabel]) -> Ext {
    let ds: Vec<&HybridTimeDomain> = s.iter().map(HybridLabel::domain).collect();
    let da: Vec<&HybridTimeDomain> = a.iter().map(HybridLabel::domain).collect();
    d_sigma_star_hybrid_domains(&ds, &da)
}

pub fn d_sigma_star_hybrid_domains(s: &[&HybridTimeDomain], a: &[&HybridTimeDomain]) -> Ext {
    match (concat_all(s), concat_all(a)) {
        (None, None) => Ext::zero(),
        (Some(x), Some(y)) => d_sigma_hybrid_domains(&x, &y),
        _ => Ext::Inf,
    }
}

fn concat_all(domains: &[&HybridTimeDomain]) -> Option<HybridTimeDomain> {
    let mut iter = domains.iter();
    let first = (*iter.next()?).clone();
    Some(iter.fold(first, |acc, d| concat_domains(&acc, d)))
}

/// Output map of an embedded system: identity or a coordinate projection.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize, Debug, Default)]
pub enum OutputMap {
    #[default]
    Identity,
    Project(Vec<usize>),
}

impl OutputMap {
    pub fn apply(&self, state: &[Rational]) -> Result<OutputPoint> {
        match self {
            OutputMap::Identity => Ok(OutputPoint(state.to_vec())),
            OutputMap::Project(coords) => {
                let mut out = Vec::with_capacity(coords.len());
                for &c in coords {
                    let v = state.get(c).ok_or_else(|| {
                        Error::BadArc(format!("output coordinate {c} out of range"))
                    })?;
                    out.push(v.clone());
                }
                Ok(OutputPoint(out))
            }
        }
    }
}

/// Embeds a finite set of sampled (state trajectory, input arc) pairs as an
/// explicit OMTS: states are grid-quantized sampled state vectors, and every
/// sampled point of a trajectory yields a transition from its start state,
/// labeled by the input arc restricted to the prefix domain.
pub fn embed_trajectories(
    pairs: &[(SampledArc, SampledArc)],
    output: &OutputMap,
    quant_step: &Rational,
) -> Result<Omts> {
    if quant_step.is_zero() || quant_step.is_negative() {
        return Err(Error::BadArc("quantization step must be positive".into()));
    }
    for (state_arc, input_arc) in pairs {
        if state_arc.domain != input_arc.domain {
            return Err(Error::BadArc(
                "state and input arcs of a pair must share a domain".into(),
            ));
        }
    }

    let quantize = |v: &[Rational]| -> Vec<Rational> {
        v.iter().map(|c| c.snap_to_grid(quant_step)).collect()
    };

    // Deterministic ids: states sorted by quantized value vector.
    let mut vectors: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for (state_arc, _) in pairs {
        for value in state_arc.samples.values() {
            vectors.insert(quantize(value));
        }
    }
    let ids: BTreeMap<Vec<Rational>, StateId> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), format!("x{i}")))
        .collect();

    let mut states: BTreeSet<StateId> = ids.values().cloned().collect();
    let mut outputs: BTreeMap<StateId, OutputPoint> = BTreeMap::new();
    for (vector, id) in &ids {
        outputs.insert(id.clone(), output.apply(vector)?);
    }
    let mut initial: BTreeSet<StateId> = BTreeSet::new();
    let mut alphabet: BTreeSet<Label> = BTreeSet::new();
    let mut transitions: BTreeSet<Transition> = BTreeSet::new();
    let mut hybrid_labels: BTreeMap<String, HybridTimeDomain> = BTreeMap::new();

    for (state_arc, input_arc) in pairs {
        let origin = (0usize, Rational::zero());
        let start_value = state_arc
            .samples
            .get(&origin)
            .ok_or_else(|| Error::BadArc("trajectory has no sample at (0,0)".into()))?;
        let start = ids[&quantize(start_value)].clone();
        initial.insert(start.clone());

        for ((j, t), value) in &state_arc.samples {
            let input_prefix = input_arc.restrict(t, *j)?;
            let symbol = format!("arc:{}", input_prefix.token());
            let label = Label::timed(symbol.clone(), t.clone());
            hybrid_labels.insert(symbol, input_prefix.domain.clone());
            alphabet.insert(label.clone());

            // Port: output trajectory over the same prefix domain.
            let out_prefix = state_arc.restrict(t, *j)?;
            let out_samples: Result<BTreeMap<(usize, Rational), Vec<Rational>>> = out_prefix
                .samples
                .iter()
                .map(|(k, v)| Ok((k.clone(), output.apply(v)?.0)))
                .collect();
            let out_traj = SampledArc::new(
                out_prefix.domain.clone(),
                out_prefix.step.clone(),
                out_samples?,
            )?;
            let port = Label::Timed {
                input: format!("{}{}", OUTPUT_PORT_PREFIX, out_traj.token()),
                chrono: t.clone(),
            };

            transitions.insert(Transition {
                src: start.clone(),
                label,
                dst: ids[&quantize(value)].clone(),
                port,
            });
        }
    }

    if pairs.is_empty() {
        states.clear();
    }
    let mut omts = Omts::new(states, initial, alphabet, transitions, outputs);
    omts.hybrid_labels = hybrid_labels;
    Ok(omts)
}

/// Precision inflation from simulation to trajectory closeness:
/// `(2 tau, eps + 2 tau L)` for a flow-map norm bound `L`.
pub fn inflated_precision(
    tau: &Rational,
    eps: &Rational,
    flow_bound: &Rational,
) -> Result<(Rational, Rational)> {
    for (name, v) in [("tau", tau), ("eps", eps), ("flow bound", flow_bound)] {
        if v.is_negative() {
            return Err(Error::NegativeArgument(name.to_string()));
        }
    }
    let two = Rational::from_int(2);
    let tau_out = &two * tau;
    let eps_out = eps + &(&tau_out * flow_bound);
    Ok((tau_out, eps_out))
}

/// Manifest for `embed`: grid step plus (state arc, input arc) CSV pairs.
#[derive(Serialize, Deserialize, Debug)]
pub struct EmbedManifest {
    pub step: Rational,
    pub pairs: Vec<ArcPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_coords: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ArcPair {
    pub state: String,
    pub input: String,
}

impl EmbedManifest {
    pub fn read(path: &std::path::Path) -> Result<EmbedManifest> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(&path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn load_pairs(&self, base: &std::path::Path) -> Result<Vec<(SampledArc, SampledArc)>> {
        let mut out = Vec::new();
        for pair in &self.pairs {
            let read = |rel: &str| -> Result<SampledArc> {
                let path = base.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::io(&path.display().to_string(), e))?;
                SampledArc::from_csv(&text, Some(self.step.clone()))
            };
            out.push((read(&pair.state)?, read(&pair.input)?));
        }
        Ok(out)
    }

    pub fn output_map(&self) -> OutputMap {
        match &self.output_coords {
            Some(coords) => OutputMap::Project(coords.clone()),
            None => OutputMap::Identity,
        }
    }
}
