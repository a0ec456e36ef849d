//! Single entry-point command line tool wiring all modules together.
//!
//! Every subcommand prints one JSON document (sorted keys, canonical
//! rationals) that embeds its full run configuration. Exit codes: 0 when the
//! checked property holds or the computation succeeded, 2 when a property
//! fails with a counterexample, 1 on usage or input errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::composition::{compose, compute_k, verify_small_gain, GainSpec};
use crate::conformance::{check_conformance, conformance_degree};
use crate::error::{Error, Result};
use crate::gen::generate_random_omts;
use crate::hybrid::{
    d_sigma_hybrid, embed_trajectories, inflated_precision, EmbedManifest, HybridLabel, SampledArc,
};
use crate::metrics::{Combine, DPi, DSigmaKind, DSigmaStarKind, MetricSuite};
use crate::model::{DerivationRelation, Label, Omts};
use crate::rational::{sqrt_interval, Ext, Rational};
use crate::stas::{
    check_simulates, greatest_stas_relation, level_set, precision_from_v, smallest_sim_function,
    SimFunctionTable,
};

#[derive(Parser)]
#[command(
    name = "omts",
    version,
    about = "Conformance checking, space-time approximate simulation, and small-gain certificates for finite open metric transition systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum DPiArg {
    Sup,
    Euclid,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum DSigmaArg {
    Timed,
    Hybrid,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum DSigmaStarArg {
    Maxpos,
    Hybridcat,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum CombineArg {
    Max,
    Sum,
}

impl From<CombineArg> for Combine {
    fn from(a: CombineArg) -> Combine {
        match a {
            CombineArg::Max => Combine::Max,
            CombineArg::Sum => Combine::Sum,
        }
    }
}

#[derive(Args, Clone, Copy, Debug)]
struct MetricArgs {
    /// Output metric
    #[arg(long = "d-pi", value_enum, default_value = "sup")]
    d_pi: DPiArg,
    /// Label pseudo-metric
    #[arg(long = "d-sigma", value_enum, default_value = "timed")]
    d_sigma: DSigmaArg,
    /// Label-string pseudo-metric
    #[arg(long = "d-sigma-star", value_enum, default_value = "maxpos")]
    d_sigma_star: DSigmaStarArg,
    /// Bisection iterations for square-root enclosures in euclidean reports
    #[arg(long = "sqrt-iters", default_value_t = 64)]
    sqrt_iters: u32,
}

impl MetricArgs {
    fn suite(&self, systems: &[&Omts]) -> MetricSuite {
        let mut suite = MetricSuite {
            d_pi: match self.d_pi {
                DPiArg::Sup => DPi::Sup,
                DPiArg::Euclid => DPi::Euclid,
            },
            d_sigma: match self.d_sigma {
                DSigmaArg::Timed => DSigmaKind::SymbolicTimed,
                DSigmaArg::Hybrid => DSigmaKind::HybridHausdorff,
            },
            d_sigma_star: match self.d_sigma_star {
                DSigmaStarArg::Maxpos => DSigmaStarKind::MaxOverPositions,
                DSigmaStarArg::Hybridcat => DSigmaStarKind::HybridConcat,
            },
            hybrid_dict: Default::default(),
        };
        for t in systems {
            suite
                .hybrid_dict
                .extend(t.hybrid_labels.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        suite
    }

    fn config(&self) -> Value {
        json!({
            "d_pi": format!("{:?}", self.d_pi).to_lowercase(),
            "d_sigma": format!("{:?}", self.d_sigma).to_lowercase(),
            "d_sigma_star": format!("{:?}", self.d_sigma_star).to_lowercase(),
            "sqrt_iters": self.sqrt_iters,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check structural invariants of a model file
    Validate { file: PathBuf },
    /// Post(q, S): successor states under a label subset
    Post {
        #[arg(long)]
        t: PathBuf,
        #[arg(long)]
        state: String,
        /// Labels `nu` or `symbol@chrono`; defaults to the whole alphabet plus nu
        #[arg(long = "label")]
        labels: Vec<String>,
    },
    /// Depth-bounded (tau, eps)-conformance verdict
    CheckConformance {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long)]
        d: PathBuf,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        depth: usize,
        /// Stutter budget recorded with the verdict; the shipped string
        /// metrics erase nu steps, so the verdict does not depend on it
        #[arg(long = "nu-budget")]
        nu_budget: Option<usize>,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Least eps for which the depth-bounded check holds at tau
    ConformanceDegree {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long)]
        d: PathBuf,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        depth: usize,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Greatest (tau, eps)-STAS relation and the simulates flag
    StasRelation {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        eps: String,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Smallest tau-simulation function and its precision
    StasFunction {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long)]
        tau: String,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// eps-sublevel set of a simulation function table
    LevelSet {
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        eps: String,
        /// Verify the sublevel set against these systems
        #[arg(long)]
        t1: Option<PathBuf>,
        #[arg(long)]
        t2: Option<PathBuf>,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Feedback interconnection; writes the product model plus a lifting sidecar
    Compose {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check the small-gain hypotheses and conclusion on a quadruple
    VerifySgc {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long)]
        t3: PathBuf,
        #[arg(long)]
        t4: PathBuf,
        #[arg(long)]
        v13: PathBuf,
        #[arg(long)]
        v24: PathBuf,
        #[arg(long, value_enum, default_value = "max")]
        h: CombineArg,
        #[arg(long = "h-tilde", value_enum)]
        h_tilde: Option<CombineArg>,
        #[arg(long, default_value = "1")]
        c: String,
        /// Gain slope for the first loop; computed from v13 when omitted
        #[arg(long)]
        k1: Option<String>,
        /// Gain slope for the second loop; computed from v24 when omitted
        #[arg(long)]
        k2: Option<String>,
        /// Cross-checked against the tau recorded in the v13 table
        #[arg(long)]
        tau13: Option<String>,
        /// Cross-checked against the tau recorded in the v24 table
        #[arg(long)]
        tau24: Option<String>,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Hybrid label pseudo-distance between two sampled arcs
    HybridDistance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Embed sampled trajectory pairs as an explicit model
    Embed {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Simulation-to-closeness precision inflation
    Inflate {
        #[arg(long)]
        tau: String,
        #[arg(long)]
        eps: String,
        #[arg(long = "flow-bound")]
        flow_bound: String,
    },
    /// Seeded random model for the property suites
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        labels: usize,
        #[arg(long, default_value_t = 2)]
        branching: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Parses and runs; returns (exit code, stdout payload).
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version requests are not errors
            if e.use_stderr() {
                eprintln!("{e}");
                return (1, String::new());
            }
            return (0, e.to_string());
        }
    };
    match dispatch(cli.command) {
        Ok((code, value)) => {
            let text = serde_json::to_string_pretty(&value).expect("report serializes");
            (code, text + "\n")
        }
        Err(e) => {
            eprintln!("error: {e}");
            (1, String::new())
        }
    }
}

fn report(config: Value, body: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    map.insert("config".to_string(), config);
    for (k, v) in body {
        map.insert(k.to_string(), v);
    }
    // normalize through Value so keys come out sorted
    serde_json::to_value(map).expect("report is a json object")
}

fn parse_nonneg(name: &str, s: &str) -> Result<Rational> {
    let v = Rational::parse(s)?;
    if v.is_negative() {
        return Err(Error::Usage(format!(
            "{name} must be non-negative, got {v}"
        )));
    }
    Ok(v)
}

fn parse_nonneg_ext(name: &str, s: &str) -> Result<Ext> {
    match Ext::parse(s)? {
        Ext::Fin(v) if v.is_negative() => Err(Error::Usage(format!(
            "{name} must be non-negative, got {v}"
        ))),
        Ext::NegInf => Err(Error::Usage(format!("{name} must be non-negative"))),
        other => Ok(other),
    }
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("serializable")
}

fn path_str(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

fn ext_value(e: &Ext) -> Value {
    Value::String(e.to_string())
}

/// Renders a value of the output metric for the report; on the squared
/// euclidean scale this attaches an exact enclosure of the square root.
fn metric_value(d_pi: &DPi, v: &Ext, sqrt_iters: u32) -> Value {
    match (d_pi.is_squared_scale(), v) {
        (true, Ext::Fin(sq)) => {
            let (lo, hi) = sqrt_interval(sq, sqrt_iters);
            json!({
                "squared": sq.to_string(),
                "sqrt_interval": [lo.to_string(), hi.to_string()],
            })
        }
        _ => ext_value(v),
    }
}

fn dispatch(command: Command) -> Result<(i32, Value)> {
    match command {
        Command::Validate { file } => {
            let t = Omts::read(&file)?;
            let violations = t.validate();
            let code = if violations.is_empty() { 0 } else { 2 };
            let config = json!({ "subcommand": "validate", "file": path_str(&file) });
            Ok((
                code,
                report(config, vec![("violations", to_value(&violations))]),
            ))
        }
        Command::Post { t, state, labels } => {
            let omts = Omts::read(&t)?;
            let set: BTreeSet<Label> = if labels.is_empty() {
                let mut all = omts.alphabet.clone();
                all.insert(Label::Empty);
                all
            } else {
                labels
                    .iter()
                    .map(|s| Label::parse_text(s))
                    .collect::<Result<_>>()?
            };
            let post = omts.post(&state, &set)?;
            let config = json!({
                "subcommand": "post",
                "t": path_str(&t),
                "state": state,
                "labels": set.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            });
            Ok((0, report(config, vec![("post", to_value(&post))])))
        }
        Command::CheckConformance {
            t1,
            t2,
            d,
            tau,
            eps,
            depth,
            nu_budget,
            metrics,
        } => {
            let s1 = Omts::read(&t1)?;
            let s2 = Omts::read(&t2)?;
            let rel = DerivationRelation::read(&d)?;
            let tau_v = parse_nonneg("tau", &tau)?;
            let eps_v = parse_nonneg("eps", &eps)?;
            let suite = metrics.suite(&[&s1, &s2]);
            let verdict = check_conformance(&s1, &s2, &rel, &suite, &tau_v, &eps_v, depth)?;
            let code = if verdict.holds { 0 } else { 2 };
            let config = json!({
                "subcommand": "check-conformance",
                "t1": path_str(&t1), "t2": path_str(&t2), "d": path_str(&d),
                "tau": tau_v.to_string(), "eps": eps_v.to_string(),
                "depth": depth, "nu_budget": nu_budget.unwrap_or(depth),
                "metrics": metrics.config(),
            });
            Ok((code, report(config, vec![("verdict", to_value(&verdict))])))
        }
        Command::ConformanceDegree {
            t1,
            t2,
            d,
            tau,
            depth,
            metrics,
        } => {
            let s1 = Omts::read(&t1)?;
            let s2 = Omts::read(&t2)?;
            let rel = DerivationRelation::read(&d)?;
            let tau_v = parse_nonneg("tau", &tau)?;
            let suite = metrics.suite(&[&s1, &s2]);
            let degree = conformance_degree(&s1, &s2, &rel, &suite, &tau_v, depth)?;
            let config = json!({
                "subcommand": "conformance-degree",
                "t1": path_str(&t1), "t2": path_str(&t2), "d": path_str(&d),
                "tau": tau_v.to_string(), "depth": depth,
                "metrics": metrics.config(),
            });
            Ok((
                0,
                report(
                    config,
                    vec![(
                        "degree",
                        metric_value(&suite.d_pi, &degree, metrics.sqrt_iters),
                    )],
                ),
            ))
        }
        Command::StasRelation {
            t1,
            t2,
            tau,
            eps,
            metrics,
        } => {
            let s1 = Omts::read(&t1)?;
            let s2 = Omts::read(&t2)?;
            let tau_v = parse_nonneg("tau", &tau)?;
            let suite = metrics.suite(&[&s1, &s2]);
            let eps_internal = match parse_nonneg_ext("eps", &eps)? {
                Ext::Fin(e) => suite.d_pi.user_threshold(&e),
                other => other,
            };
            let rel = greatest_stas_relation(&s1, &s2, &suite, &tau_v, &eps_internal)?;
            let simulates = check_simulates(&rel, &s1.initial, &s2.initial);
            let code = if simulates { 0 } else { 2 };
            let config = json!({
                "subcommand": "stas-relation",
                "t1": path_str(&t1), "t2": path_str(&t2),
                "tau": tau_v.to_string(), "eps": eps,
                "metrics": metrics.config(),
            });
            Ok((
                code,
                report(
                    config,
                    vec![
                        ("relation", to_value(&rel)),
                        ("simulates", Value::Bool(simulates)),
                    ],
                ),
            ))
        }
        Command::StasFunction {
            t1,
            t2,
            tau,
            metrics,
        } => {
            let s1 = Omts::read(&t1)?;
            let s2 = Omts::read(&t2)?;
            let tau_v = parse_nonneg("tau", &tau)?;
            let suite = metrics.suite(&[&s1, &s2]);
            let table = smallest_sim_function(&s1, &s2, &suite, &tau_v)?;
            let precision = precision_from_v(&table, &s1.initial, &s2.initial)?;
            let config = json!({
                "subcommand": "stas-function",
                "t1": path_str(&t1), "t2": path_str(&t2),
                "tau": tau_v.to_string(),
                "metrics": metrics.config(),
            });
            Ok((
                0,
                report(
                    config,
                    vec![
                        ("table", to_value(&table)),
                        (
                            "precision",
                            metric_value(&suite.d_pi, &precision, metrics.sqrt_iters),
                        ),
                    ],
                ),
            ))
        }
        Command::LevelSet {
            v,
            eps,
            t1,
            t2,
            metrics,
        } => {
            let table = SimFunctionTable::read(&v)?;
            let eps_v = parse_nonneg_ext("eps", &eps)?;
            let rel = level_set(&table, &eps_v);
            let mut body = vec![("relation", to_value(&rel))];
            let mut code = 0;
            match (&t1, &t2) {
                (Some(p1), Some(p2)) => {
                    let s1 = Omts::read(p1)?;
                    let s2 = Omts::read(p2)?;
                    let suite = metrics.suite(&[&s1, &s2]);
                    let violations = crate::stas::verify_stas_relation(&s1, &s2, &suite, &rel)?;
                    if !violations.is_empty() {
                        code = 2;
                    }
                    body.push(("violations", to_value(&violations)));
                }
                (None, None) => {}
                _ => return Err(Error::Usage("verification needs both --t1 and --t2".into())),
            }
            let config = json!({
                "subcommand": "level-set",
                "v": path_str(&v), "eps": eps,
                "t1": t1.as_deref().map(path_str).unwrap_or(Value::Null),
                "t2": t2.as_deref().map(path_str).unwrap_or(Value::Null),
                "metrics": metrics.config(),
            });
            Ok((code, report(config, body)))
        }
        Command::Compose { t1, t2, output } => {
            let s1 = Omts::read(&t1)?;
            let s2 = Omts::read(&t2)?;
            let composed = compose(&s1, &s2)?;
            composed.product.write(&output)?;
            let sidecar_path = output.with_extension("sigma12.json");
            let sidecar = serde_json::to_value(composed.sidecar())?;
            std::fs::write(
                &sidecar_path,
                serde_json::to_string_pretty(&sidecar)? + "\n",
            )
            .map_err(|e| Error::io(&sidecar_path.display().to_string(), e))?;
            let config = json!({
                "subcommand": "compose",
                "t1": path_str(&t1), "t2": path_str(&t2),
                "output": path_str(&output),
            });
            Ok((
                0,
                report(
                    config,
                    vec![
                        ("written", path_str(&output)),
                        ("sidecar", path_str(&sidecar_path)),
                        ("states", json!(composed.product.states.len())),
                        ("sigma12_size", json!(composed.sigma12.len())),
                    ],
                ),
            ))
        }
        Command::VerifySgc {
            t1,
            t2,
            t3,
            t4,
            v13,
            v24,
            h,
            h_tilde,
            c,
            k1,
            k2,
            tau13,
            tau24,
            metrics,
        } => {
            let s1 = Omts::read(&t1)?;
            let s2 = Omts::read(&t2)?;
            let s3 = Omts::read(&t3)?;
            let s4 = Omts::read(&t4)?;
            let table13 = SimFunctionTable::read(&v13)?;
            let table24 = SimFunctionTable::read(&v24)?;
            for (flag, table_tau, name) in [
                (&tau13, &table13.tau, "tau13"),
                (&tau24, &table24.tau, "tau24"),
            ] {
                if let Some(s) = flag {
                    let v = Rational::parse(s)?;
                    if &v != table_tau {
                        return Err(Error::Usage(format!(
                            "{name} = {v} disagrees with the table's tau = {table_tau}"
                        )));
                    }
                }
            }
            let spec = GainSpec {
                h: h.into(),
                h_tilde: h_tilde.unwrap_or(h).into(),
                c: Rational::parse(&c)?,
                k1: match &k1 {
                    Some(s) => Rational::parse(s)?,
                    None => compute_k(&table13),
                },
                k2: match &k2 {
                    Some(s) => Rational::parse(s)?,
                    None => compute_k(&table24),
                },
            };
            let suite = metrics.suite(&[&s1, &s2, &s3, &s4]);
            let cert = verify_small_gain(&s1, &s2, &s3, &s4, &table13, &table24, &spec, &suite)?;
            let code = if cert.all_pass { 0 } else { 2 };
            let config = json!({
                "subcommand": "verify-sgc",
                "t1": path_str(&t1), "t2": path_str(&t2),
                "t3": path_str(&t3), "t4": path_str(&t4),
                "v13": path_str(&v13), "v24": path_str(&v24),
                "h": format!("{h:?}").to_lowercase(),
                "h_tilde": format!("{:?}", h_tilde.unwrap_or(h)).to_lowercase(),
                "c": spec.c.to_string(),
                "k1": spec.k1.to_string(),
                "k2": spec.k2.to_string(),
                "tau13": table13.tau.to_string(),
                "tau24": table24.tau.to_string(),
                "metrics": metrics.config(),
            });
            Ok((code, report(config, vec![("certificate", to_value(&cert))])))
        }
        Command::HybridDistance { a, b } => {
            let read = |p: &Path| -> Result<SampledArc> {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::io(&p.display().to_string(), e))?;
                SampledArc::from_csv(&text, None)
            };
            let arc_a = HybridLabel { arc: read(&a)? };
            let arc_b = HybridLabel { arc: read(&b)? };
            let d = d_sigma_hybrid(&arc_a, &arc_b);
            let config = json!({
                "subcommand": "hybrid-distance",
                "a": path_str(&a), "b": path_str(&b),
            });
            Ok((0, report(config, vec![("d_sigma", ext_value(&d))])))
        }
        Command::Embed { manifest, output } => {
            let m = EmbedManifest::read(&manifest)?;
            let base = manifest.parent().unwrap_or_else(|| Path::new("."));
            let pairs = m.load_pairs(base)?;
            let omts = embed_trajectories(&pairs, &m.output_map(), &m.step)?;
            let violations = omts.validate();
            omts.write(&output)?;
            let config = json!({
                "subcommand": "embed",
                "manifest": path_str(&manifest), "output": path_str(&output),
                "step": m.step.to_string(),
            });
            Ok((
                0,
                report(
                    config,
                    vec![
                        ("written", path_str(&output)),
                        ("states", json!(omts.states.len())),
                        ("transitions", json!(omts.transitions.len())),
                        ("violations", to_value(&violations)),
                    ],
                ),
            ))
        }
        Command::Inflate {
            tau,
            eps,
            flow_bound,
        } => {
            let tau_v = Rational::parse(&tau)?;
            let eps_v = Rational::parse(&eps)?;
            let l = Rational::parse(&flow_bound)?;
            let (tau_out, eps_out) = inflated_precision(&tau_v, &eps_v, &l)?;
            let config = json!({
                "subcommand": "inflate",
                "tau": tau_v.to_string(), "eps": eps_v.to_string(),
                "flow_bound": l.to_string(),
            });
            Ok((
                0,
                report(
                    config,
                    vec![
                        ("tau_out", json!(tau_out.to_string())),
                        ("eps_out", json!(eps_out.to_string())),
                    ],
                ),
            ))
        }
        Command::Gen {
            seed,
            states,
            labels,
            branching,
            output,
        } => {
            let t = generate_random_omts(seed, states, labels, branching);
            if let Some(path) = &output {
                t.write(path)?;
            }
            let config = json!({
                "subcommand": "gen",
                "seed": seed, "states": states, "labels": labels,
                "branching": branching,
                "output": output.as_deref().map(path_str).unwrap_or(Value::Null),
            });
            Ok((0, report(config, vec![("model", to_value(&t))])))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        let (code, _) = run(["omts", "no-such-subcommand"]);
        assert_eq!(code, 1);
        let (code, _) = run(["omts", "validate"]); // missing file argument
        assert_eq!(code, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out) = run(["omts", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("check-conformance"));
    }

    #[test]
    fn inflate_smoke() {
        let (code, out) = run([
            "omts",
            "inflate",
            "--tau",
            "1/2",
            "--eps",
            "1/10",
            "--flow-bound",
            "2",
        ]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["tau_out"], "1");
        assert_eq!(v["eps_out"], "21/10");
    }
}
