//! Pluggable metric suite: output metric d_Pi, label pseudo-metric d_Sigma,
//! string pseudo-metric d_Sigma*, and τ-balls.
//!
//! Everything returns exact extended rationals. The euclidean output metric
//! works on the squared scale internally (orderings are the same; user
//! thresholds are squared on entry), so no irrational value is ever compared.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{d_sigma_hybrid_domains, d_sigma_star_hybrid_domains, HybridTimeDomain};
use crate::model::{Label, OutputPoint};
use crate::rational::{Ext, Rational};

/// How two extended values are merged into one (the h and h-tilde combiners).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Max,
    Sum,
}

impl Combine {
    pub fn apply(&self, a: Ext, b: Ext) -> Ext {
        match self {
            Combine::Max => a.max(b),
            Combine::Sum => a.add(&b),
        }
    }
}

/// Output metric choice. `Product` is the interconnection's paired metric
/// `h~(d_left, d_right)` over concatenated output vectors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DPi {
    Sup,
    Euclid,
    Product {
        left: Box<DPi>,
        right: Box<DPi>,
        split: usize,
        combine: Combine,
    },
}

impl DPi {
    pub fn dist(&self, p: &OutputPoint, q: &OutputPoint) -> Result<Ext> {
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch(p.dim(), q.dim()));
        }
        match self {
            DPi::Sup => {
                let mut worst = Rational::zero();
                for (a, b) in p.0.iter().zip(&q.0) {
                    worst = worst.max((a - b).abs());
                }
                Ok(Ext::Fin(worst))
            }
            DPi::Euclid => {
                let mut acc = Rational::zero();
                for (a, b) in p.0.iter().zip(&q.0) {
                    let d = a - b;
                    acc = &acc + &(&d * &d);
                }
                Ok(Ext::Fin(acc))
            }
            DPi::Product {
                left,
                right,
                split,
                combine,
            } => {
                if p.dim() < *split {
                    return Err(Error::DimensionMismatch(p.dim(), *split));
                }
                let (pl, pr) = p.0.split_at(*split);
                let (ql, qr) = q.0.split_at(*split);
                let dl = left.dist(&OutputPoint(pl.to_vec()), &OutputPoint(ql.to_vec()))?;
                let dr = right.dist(&OutputPoint(pr.to_vec()), &OutputPoint(qr.to_vec()))?;
                Ok(combine.apply(dl, dr))
            }
        }
    }

    /// Maps a user-facing ε onto the comparison scale of this metric.
    pub fn user_threshold(&self, eps: &Rational) -> Ext {
        match self {
            DPi::Euclid => Ext::Fin(eps * eps),
            _ => Ext::Fin(eps.clone()),
        }
    }

    /// True when reported values are squared distances.
    pub fn is_squared_scale(&self) -> bool {
        matches!(self, DPi::Euclid)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DSigmaKind {
    /// 0 on (ν,ν); ∞ across ν/Timed; |Δ chrono| on equal input symbols; ∞ otherwise.
    SymbolicTimed,
    /// The hybrid-domain Hausdorff pseudo-metric; symbol-blind. Labels without
    /// a registered hybrid domain read as the single interval [0, chrono].
    HybridHausdorff,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DSigmaStarKind {
    /// Strip ν from both strings; ∞ on length mismatch; else max positionwise d_Σ.
    MaxOverPositions,
    /// Concatenate each string's hybrid labels and apply the hybrid d_Σ.
    HybridConcat,
}

/// The full suite handed to every checking algorithm.
#[derive(Clone, Debug)]
pub struct MetricSuite {
    pub d_pi: DPi,
    pub d_sigma: DSigmaKind,
    pub d_sigma_star: DSigmaStarKind,
    /// Registry of rich label domains (populated by the trajectory embedding).
    pub hybrid_dict: BTreeMap<String, HybridTimeDomain>,
}

impl Default for MetricSuite {
    fn default() -> Self {
        MetricSuite {
            d_pi: DPi::Sup,
            d_sigma: DSigmaKind::SymbolicTimed,
            d_sigma_star: DSigmaStarKind::MaxOverPositions,
            hybrid_dict: BTreeMap::new(),
        }
    }
}

impl MetricSuite {
    pub fn with_dict(mut self, dict: BTreeMap<String, HybridTimeDomain>) -> Self {
        self.hybrid_dict = dict;
        self
    }

    pub fn d_pi(&self, p: &OutputPoint, q: &OutputPoint) -> Result<Ext> {
        self.d_pi.dist(p, q)
    }

    fn label_domain(&self, input: &str, chrono: &Rational) -> HybridTimeDomain {
        self.hybrid_dict.get(input).cloned().unwrap_or_else(|| {
            HybridTimeDomain::single(chrono.clone()).expect("chrono is non-negative")
        })
    }

    pub fn d_sigma(&self, a: &Label, b: &Label) -> Ext {
        match (a, b) {
            (Label::Empty, Label::Empty) => Ext::zero(),
            (Label::Empty, _) | (_, Label::Empty) => Ext::Inf,
            (
                Label::Timed {
                    input: ua,
                    chrono: ca,
                },
                Label::Timed {
                    input: ub,
                    chrono: cb,
                },
            ) => match self.d_sigma {
                DSigmaKind::SymbolicTimed => {
                    if ua == ub {
                        Ext::Fin((ca - cb).abs())
                    } else {
                        Ext::Inf
                    }
                }
                DSigmaKind::HybridHausdorff => {
                    let da = self.label_domain(ua, ca);
                    let db = self.label_domain(ub, cb);
                    d_sigma_hybrid_domains(&da, &db)
                }
            },
        }
    }

    pub fn d_sigma_star(&self, s: &[Label], a: &[Label]) -> Ext {
        let stripped =
            |xs: &[Label]| -> Vec<Label> { xs.iter().filter(|l| !l.is_empty()).cloned().collect() };
        let s = stripped(s);
        let a = stripped(a);
        match self.d_sigma_star {
            DSigmaStarKind::MaxOverPositions => {
                if s.len() != a.len() {
                    return Ext::Inf;
                }
                Ext::sup(s.iter().zip(&a).map(|(x, y)| self.d_sigma(x, y))).max(Ext::zero())
            }
            DSigmaStarKind::HybridConcat => {
                let doms = |xs: &[Label]| -> Vec<HybridTimeDomain> {
                    xs.iter()
                        .map(|l| match l {
                            Label::Empty => unreachable!("stripped"),
                            Label::Timed { input, chrono } => self.label_domain(input, chrono),
                        })
                        .collect()
                };
                let ds = doms(&s);
                let da = doms(&a);
                d_sigma_star_hybrid_domains(
                    &ds.iter().collect::<Vec<_>>(),
                    &da.iter().collect::<Vec<_>>(),
                )
            }
        }
    }

    /// `B_τ(σ)`: alphabet members within pseudo-distance τ of σ, plus ν when
    /// σ itself is ν.
    pub fn tau_ball(
        &self,
        alphabet: &BTreeSet<Label>,
        sigma: &Label,
        tau: &Rational,
    ) -> BTreeSet<Label> {
        let bound = Ext::Fin(tau.clone());
        let mut ball: BTreeSet<Label> = alphabet
            .iter()
            .filter(|l| self.d_sigma(sigma, l) <= bound)
            .cloned()
            .collect();
        if sigma.is_empty() {
            ball.insert(Label::Empty);
        }
        ball
    }

    /// Does `other` lie in the τ-ball of `sigma`?
    pub fn in_ball(&self, sigma: &Label, other: &Label, tau: &Rational) -> bool {
        self.d_sigma(sigma, other) <= Ext::Fin(tau.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{alphabet_for, SplitMix64};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn pt(coords: &[(i64, i64)]) -> OutputPoint {
        OutputPoint(coords.iter().map(|&(n, d)| r(n, d)).collect())
    }

    fn timed(s: &str, n: i64, d: i64) -> Label {
        Label::timed(s, r(n, d))
    }

    #[test]
    fn sup_coordinate_examples() {
        let suite = MetricSuite::default();
        assert_eq!(
            suite
                .d_pi(&pt(&[(0, 1), (0, 1)]), &pt(&[(0, 1), (0, 1)]))
                .unwrap(),
            Ext::zero()
        );
        assert_eq!(
            suite
                .d_pi(&pt(&[(1, 1), (3, 1)]), &pt(&[(2, 1), (1, 1)]))
                .unwrap(),
            Ext::Fin(r(2, 1))
        );
        assert_eq!(
            suite.d_pi(&pt(&[(0, 1)]), &pt(&[(1, 2)])).unwrap(),
            Ext::Fin(r(1, 2))
        );
        assert!(suite.d_pi(&pt(&[(0, 1)]), &pt(&[(0, 1), (0, 1)])).is_err());
    }

    #[test]
    fn euclid_is_squared_scale() {
        let d = DPi::Euclid;
        assert_eq!(
            d.dist(&pt(&[(0, 1), (0, 1)]), &pt(&[(3, 1), (4, 1)]))
                .unwrap(),
            Ext::Fin(r(25, 1))
        );
        assert_eq!(d.user_threshold(&r(5, 1)), Ext::Fin(r(25, 1)));
    }

    #[test]
    fn d_sigma_symbolic_timed_examples() {
        let suite = MetricSuite::default();
        assert_eq!(
            suite.d_sigma(&timed("a", 1, 1), &timed("a", 1, 1)),
            Ext::zero()
        );
        assert_eq!(
            suite.d_sigma(&timed("a", 1, 1), &timed("a", 5, 2)),
            Ext::Fin(r(3, 2))
        );
        assert_eq!(
            suite.d_sigma(&timed("a", 1, 1), &timed("b", 1, 1)),
            Ext::Inf
        );
        assert_eq!(suite.d_sigma(&Label::Empty, &Label::Empty), Ext::zero());
        assert_eq!(suite.d_sigma(&Label::Empty, &timed("a", 1, 1)), Ext::Inf);
    }

    #[test]
    fn d_sigma_hybrid_kind_is_symbol_blind() {
        let suite = MetricSuite {
            d_sigma: DSigmaKind::HybridHausdorff,
            ..MetricSuite::default()
        };
        assert_eq!(
            suite.d_sigma(&timed("a", 1, 1), &timed("b", 3, 2)),
            Ext::Fin(r(1, 2))
        );
    }

    #[test]
    fn d_sigma_star_examples() {
        let suite = MetricSuite::default();
        let s = vec![timed("a", 1, 1), timed("b", 2, 1)];
        assert_eq!(suite.d_sigma_star(&s, &s), Ext::zero());

        let with_nu = vec![timed("a", 1, 1), Label::Empty, timed("b", 2, 1)];
        let other = vec![timed("a", 3, 2), timed("b", 2, 1)];
        assert_eq!(suite.d_sigma_star(&with_nu, &other), Ext::Fin(r(1, 2)));

        let short = vec![timed("a", 1, 1)];
        let long = vec![timed("a", 1, 1), timed("a", 1, 1)];
        assert_eq!(suite.d_sigma_star(&short, &long), Ext::Inf);
    }

    #[test]
    fn tau_ball_examples() {
        let suite = MetricSuite::default();
        let alphabet: BTreeSet<Label> =
            [timed("a", 1, 1), timed("a", 3, 2), timed("b", 1, 1)].into();
        assert_eq!(
            suite.tau_ball(&alphabet, &timed("a", 1, 1), &r(0, 1)),
            [timed("a", 1, 1)].into()
        );
        assert_eq!(
            suite.tau_ball(&alphabet, &timed("a", 1, 1), &r(3, 5)),
            [timed("a", 1, 1), timed("a", 3, 2)].into()
        );
        assert_eq!(
            suite.tau_ball(&alphabet, &Label::Empty, &r(10, 1)),
            [Label::Empty].into()
        );
    }

    #[test]
    fn tau_ball_is_monotone_in_tau() {
        let suite = MetricSuite::default();
        let alphabet: BTreeSet<Label> = alphabet_for(8).into_iter().collect();
        let mut sigmas: Vec<Label> = alphabet.iter().cloned().collect();
        sigmas.push(Label::Empty);
        let taus = [r(0, 1), r(1, 4), r(1, 2), r(1, 1), r(2, 1)];
        for sigma in &sigmas {
            for w in taus.windows(2) {
                let small = suite.tau_ball(&alphabet, sigma, &w[0]);
                let large = suite.tau_ball(&alphabet, sigma, &w[1]);
                assert!(small.is_subset(&large));
            }
        }
    }

    fn random_label(rng: &mut SplitMix64, pool: &[Label]) -> Label {
        if rng.chance(1, 5) {
            Label::Empty
        } else {
            rng.pick(pool).clone()
        }
    }

    #[test]
    fn d_sigma_pseudo_metric_axioms_sampled() {
        for kind in [DSigmaKind::SymbolicTimed, DSigmaKind::HybridHausdorff] {
            let suite = MetricSuite {
                d_sigma: kind,
                ..MetricSuite::default()
            };
            let pool = alphabet_for(8);
            let mut rng = SplitMix64::new(101);
            for _ in 0..10_000 {
                let x = random_label(&mut rng, &pool);
                let y = random_label(&mut rng, &pool);
                let z = random_label(&mut rng, &pool);
                assert_eq!(suite.d_sigma(&x, &x), Ext::zero());
                assert_eq!(suite.d_sigma(&x, &y), suite.d_sigma(&y, &x));
                let xz = suite.d_sigma(&x, &z);
                let through = suite.d_sigma(&x, &y).add(&suite.d_sigma(&y, &z));
                assert!(xz <= through);
            }
        }
    }

    #[test]
    fn d_sigma_star_pseudo_metric_axioms_sampled() {
        for kind in [
            DSigmaStarKind::MaxOverPositions,
            DSigmaStarKind::HybridConcat,
        ] {
            let suite = MetricSuite {
                d_sigma_star: kind,
                ..MetricSuite::default()
            };
            let pool = alphabet_for(8);
            let mut rng = SplitMix64::new(202);
            for _ in 0..10_000 {
                let string = |rng: &mut SplitMix64| -> Vec<Label> {
                    (0..rng.below(4))
                        .map(|_| random_label(rng, &pool))
                        .collect()
                };
                let x = string(&mut rng);
                let y = string(&mut rng);
                let z = string(&mut rng);
                assert_eq!(suite.d_sigma_star(&x, &x), Ext::zero());
                assert_eq!(suite.d_sigma_star(&x, &y), suite.d_sigma_star(&y, &x));
                let xz = suite.d_sigma_star(&x, &z);
                let through = suite.d_sigma_star(&x, &y).add(&suite.d_sigma_star(&y, &z));
                assert!(xz <= through);
            }
        }
    }

    #[test]
    fn d_pi_triangle_inequality_sampled() {
        // sup-coordinate: direct; euclidean: on the squared scale,
        // sqrt(ac) <= sqrt(ab) + sqrt(bc)  <=>  ac - ab - bc <= 2 sqrt(ab*bc).
        let mut rng = SplitMix64::new(303);
        let point = |rng: &mut SplitMix64| {
            pt(&[(rng.below(9) as i64 - 4, 2), (rng.below(9) as i64 - 4, 4)])
        };
        for _ in 0..10_000 {
            let (a, b, c) = (point(&mut rng), point(&mut rng), point(&mut rng));

            let sup = DPi::Sup;
            let (ab, bc, ac) = (
                sup.dist(&a, &b).unwrap(),
                sup.dist(&b, &c).unwrap(),
                sup.dist(&a, &c).unwrap(),
            );
            assert!(ac <= ab.add(&bc));

            let euc = DPi::Euclid;
            let ab = euc.dist(&a, &b).unwrap().as_finite().unwrap().clone();
            let bc = euc.dist(&b, &c).unwrap().as_finite().unwrap().clone();
            let ac = euc.dist(&a, &c).unwrap().as_finite().unwrap().clone();
            let s = &(&ac - &ab) - &bc;
            let holds = if s.is_negative() || s.is_zero() {
                true
            } else {
                &s * &s <= Rational::from_int(4) * (&ab * &bc)
            };
            assert!(holds);
        }
    }

    #[test]
    fn label_pseudo_property_exact_for_max_over_positions() {
        // strings whose positionwise distances are <= tau satisfy d_Sigma* <= tau
        let suite = MetricSuite::default();
        let pool = alphabet_for(8);
        let mut rng = SplitMix64::new(404);
        let tau = r(1, 2);
        for _ in 0..10_000 {
            let len = rng.below(5) as usize;
            let mut s = Vec::with_capacity(len);
            let mut a = Vec::with_capacity(len);
            for _ in 0..len {
                if rng.chance(1, 4) {
                    s.push(Label::Empty);
                    a.push(Label::Empty);
                } else {
                    let base = rng.pick(&pool).clone();
                    let (sym, chrono) = match &base {
                        Label::Timed { input, chrono } => (input.clone(), chrono.clone()),
                        Label::Empty => unreachable!(),
                    };
                    let jitter = r(rng.below(3) as i64, 4); // 0, 1/4, 1/2 <= tau
                    s.push(base.clone());
                    a.push(Label::timed(sym, &chrono + &jitter));
                }
            }
            for (x, y) in s.iter().zip(&a) {
                assert!(suite.d_sigma(x, y) <= Ext::Fin(tau.clone()));
            }
            assert!(suite.d_sigma_star(&s, &a) <= Ext::Fin(tau.clone()));
        }
    }
}
