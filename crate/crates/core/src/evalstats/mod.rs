//! Precision, recall and F1 with Bayesian credible intervals.
//!
//! Precision and recall follow Beta posteriors, `Beta(tp + λ, fp + λ)` and
//! `Beta(tp + λ, fn + λ)`. F1 has no closed-form posterior here, so its
//! interval is estimated by sampling the Dirichlet posterior over
//! `(π_tp, π_fp, π_fn)`.

pub mod report;
pub mod special;

use std::ops::{Add, AddAssign};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::ReportRow;

/// Jeffreys prior.
pub const JEFFREYS: f64 = 0.5;
pub const UNIFORM: f64 = 1.0;
pub const DEFAULT_MASS: f64 = 0.95;
pub const DEFAULT_F1_SAMPLES: usize = 100_000;
const F1_BLOCK: usize = 8_192;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

impl AddAssign for Confusion {
    fn add_assign(&mut self, o: Confusion) {
        *self = *self + o;
    }
}

/// A ratio metric; `degenerate` marks a zero denominator (value reported as 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> Metric {
    if den == 0 {
        Metric { value: 0.0, degenerate: true }
    } else {
        Metric { value: num as f64 / den as f64, degenerate: false }
    }
}

pub fn precision(c: &Confusion) -> Metric {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &Confusion) -> Metric {
    ratio(c.tp, c.tp + c.fn_)
}

/// Harmonic mean of precision and recall, 0 when either is 0.
pub fn f1(c: &Confusion) -> Metric {
    let p = precision(c);
    let r = recall(c);
    let degenerate = p.degenerate || r.degenerate;
    if p.value == 0.0 || r.value == 0.0 {
        return Metric { value: 0.0, degenerate };
    }
    Metric { value: 2.0 * p.value * r.value / (p.value + r.value), degenerate }
}

/// Pools fold confusions by summing them.
pub fn microaverage(folds: &[Confusion]) -> Confusion {
    folds.iter().fold(Confusion::default(), |acc, &c| acc + c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    pub lambda: f64,
}

impl CredibleInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Equal-tailed interval of `Beta(successes + λ, failures + λ)` with the
/// posterior mean as point estimate.
pub fn beta_interval(successes: u64, failures: u64, lambda: f64, mass: f64) -> CredibleInterval {
    let a = successes as f64 + lambda;
    let b = failures as f64 + lambda;
    let tail = (1.0 - mass) / 2.0;
    let point = if a + b > 0.0 { a / (a + b) } else { 0.0 };
    CredibleInterval {
        point,
        lo: special::beta_quantile(tail, a, b),
        hi: special::beta_quantile(1.0 - tail, a, b),
        mass,
        lambda,
    }
}

pub fn precision_ci(c: &Confusion, lambda: f64, mass: f64) -> CredibleInterval {
    beta_interval(c.tp, c.fp, lambda, mass)
}

pub fn recall_ci(c: &Confusion, lambda: f64, mass: f64) -> CredibleInterval {
    beta_interval(c.tp, c.fn_, lambda, mass)
}

/// Monte-Carlo F1 interval from the Dirichlet posterior
/// `Dir(tp + λ, fp + λ, fn + λ)`; the point estimate is the sample median.
///
/// Samples are drawn in fixed-size blocks whose seeds derive from `seed`, so
/// the result does not depend on the thread count.
pub fn f1_ci(c: &Confusion, lambda: f64, mass: f64, samples: usize, seed: u64) -> CredibleInterval {
    let shapes = [c.tp as f64 + lambda, c.fp as f64 + lambda, c.fn_ as f64 + lambda];
    let samples = samples.max(1);
    let blocks = samples.div_ceil(F1_BLOCK);
    let mut draws: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|block| {
            let n = F1_BLOCK.min(samples - block * F1_BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, block as u64));
            let gammas: Vec<Option<Gamma<f64>>> =
                shapes.iter().map(|&s| (s > 0.0).then(|| Gamma::new(s, 1.0).unwrap())).collect();
            (0..n)
                .map(|_| {
                    let mut g = [0.0; 3];
                    for (k, dist) in gammas.iter().enumerate() {
                        g[k] = dist.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                    }
                    // Normalization cancels in F1 = 2π_tp / (2π_tp + π_fp + π_fn).
                    let den = 2.0 * g[0] + g[1] + g[2];
                    if den > 0.0 {
                        2.0 * g[0] / den
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let tail = (1.0 - mass) / 2.0;
    CredibleInterval {
        point: percentile(&draws, 0.5),
        lo: percentile(&draws, tail),
        hi: percentile(&draws, 1.0 - tail),
        mass,
        lambda,
    }
}

/// SplitMix64 finalizer over `master ^ stream`, used to derive sub-seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Linear-interpolation percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn point_metrics() {
        let perfect = Confusion::new(4, 0, 0, 0);
        assert_eq!(precision(&perfect).value, 1.0);
        assert_eq!(recall(&perfect).value, 1.0);
        assert_eq!(f1(&perfect).value, 1.0);

        let bad = Confusion::new(0, 5, 3, 0);
        for m in [precision(&bad), recall(&bad), f1(&bad)] {
            assert_eq!(m.value, 0.0);
            assert!(!m.degenerate);
        }

        let c = Confusion::new(3, 1, 2, 0);
        assert_eq!(precision(&c).value, 0.75);
        assert_eq!(recall(&c).value, 0.6);
        assert!((f1(&c).value - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-15);

        let empty = Confusion::default();
        assert!(precision(&empty).degenerate && recall(&empty).degenerate);
        assert_eq!(f1(&empty).value, 0.0);
    }

    #[test]
    fn microaverage_sums() {
        let m = microaverage(&[Confusion::new(1, 1, 0, 2), Confusion::new(3, 1, 1, 0)]);
        assert_eq!(m, Confusion::new(4, 2, 1, 2));
        assert!((precision(&m).value - 4.0 / 6.0).abs() < 1e-15);
        let single = Confusion::new(2, 3, 4, 5);
        assert_eq!(microaverage(&[single]), single);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let folds: Vec<Confusion> = (0..10)
            .map(|_| {
                Confusion::new(
                    rng.random_range(0..50),
                    rng.random_range(0..50),
                    rng.random_range(0..50),
                    rng.random_range(0..500),
                )
            })
            .collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for f in &folds {
            tp += f.tp;
            fp += f.fp;
            fn_ += f.fn_;
            tn += f.tn;
        }
        assert_eq!(microaverage(&folds), Confusion::new(tp, fp, fn_, tn));
        let pooled = tp as f64 / (tp + fp) as f64;
        assert_eq!(precision(&microaverage(&folds)).value, pooled);
    }

    #[test]
    fn jeffreys_interval_on_empty_counts_is_arcsine() {
        let ci = precision_ci(&Confusion::default(), JEFFREYS, DEFAULT_MASS);
        let arcsine = |q: f64| (std::f64::consts::PI * q / 2.0).sin().powi(2);
        assert!((ci.lo - arcsine(0.025)).abs() < 1e-6);
        assert!((ci.hi - arcsine(0.975)).abs() < 1e-6);
        assert!((ci.lo - 0.001541).abs() < 1e-6);
        assert_eq!(ci.point, 0.5);
    }

    /// Beta(a, b) quantiles by Simpson integration of the density on a fine
    /// grid, independent of the continued-fraction path.
    fn quadrature_quantiles(a: f64, b: f64, qs: &[f64]) -> Vec<f64> {
        let n = 200_000;
        let h = 1.0 / n as f64;
        let ln_norm = special::ln_beta(a, b);
        let pdf = |x: f64| {
            if x <= 0.0 || x >= 1.0 {
                0.0
            } else {
                ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_norm).exp()
            }
        };
        let mut cdf = vec![0.0; n + 1];
        for k in 0..n {
            let (x0, x1) = (k as f64 * h, (k + 1) as f64 * h);
            cdf[k + 1] = cdf[k] + h / 6.0 * (pdf(x0) + 4.0 * pdf(0.5 * (x0 + x1)) + pdf(x1));
        }
        qs.iter()
            .map(|&q| {
                let k = cdf.partition_point(|&c| c < q);
                let (c0, c1) = (cdf[k - 1], cdf[k]);
                ((k - 1) as f64 + (q - c0) / (c1 - c0)) * h
            })
            .collect()
    }

    #[test]
    fn interval_matches_quadrature_oracle() {
        let c = Confusion::new(90, 10, 0, 0);
        let ci = precision_ci(&c, JEFFREYS, DEFAULT_MASS);
        assert!((ci.point - 90.5 / 101.0).abs() < 1e-15);
        let oracle = quadrature_quantiles(90.5, 10.5, &[0.025, 0.975]);
        assert!((ci.lo - oracle[0]).abs() < 1e-6, "{} vs {}", ci.lo, oracle[0]);
        assert!((ci.hi - oracle[1]).abs() < 1e-6, "{} vs {}", ci.hi, oracle[1]);

        let r = recall_ci(&Confusion::new(90, 0, 10, 0), JEFFREYS, DEFAULT_MASS);
        assert_eq!((r.lo, r.hi), (ci.lo, ci.hi));
    }

    #[test]
    fn interval_narrows_with_more_evidence() {
        let c = Confusion::new(6, 4, 3, 0);
        let big = Confusion::new(60, 40, 30, 0);
        assert!(precision_ci(&big, JEFFREYS, DEFAULT_MASS).width() < precision_ci(&c, JEFFREYS, DEFAULT_MASS).width());
        assert!(recall_ci(&big, UNIFORM, DEFAULT_MASS).width() < recall_ci(&c, UNIFORM, DEFAULT_MASS).width());
    }

    #[test]
    fn coverage_at_desk_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &p in &[0.1, 0.5, 0.9] {
            let runs = 500;
            let hits = (0..runs)
                .filter(|_| {
                    let tp = (0..100).filter(|_| rng.random_bool(p)).count() as u64;
                    precision_ci(&Confusion::new(tp, 100 - tp, 0, 0), JEFFREYS, DEFAULT_MASS).contains(p)
                })
                .count();
            assert!(hits as f64 / runs as f64 >= 0.92, "p={p}: {hits}/{runs}");
        }
    }

    #[test]
    fn f1_interval_behaviour() {
        let huge = f1_ci(&Confusion::new(100_000, 0, 0, 0), JEFFREYS, DEFAULT_MASS, 20_000, 1);
        assert!(huge.lo > 0.9999 && huge.hi <= 1.0);

        let sym = f1_ci(&Confusion::new(50, 50, 50, 0), JEFFREYS, DEFAULT_MASS, 100_000, 9);
        assert!((sym.point - 0.5).abs() < 0.01, "median {}", sym.point);
        assert!(sym.lo < 0.5 && sym.hi > 0.5);

        let a = f1_ci(&Confusion::new(7, 3, 5, 0), JEFFREYS, DEFAULT_MASS, 30_000, 42);
        let b = f1_ci(&Confusion::new(7, 3, 5, 0), JEFFREYS, DEFAULT_MASS, 30_000, 42);
        assert_eq!(a, b);
        let other = f1_ci(&Confusion::new(7, 3, 5, 0), JEFFREYS, DEFAULT_MASS, 30_000, 43);
        assert_ne!(a, other);
    }

    #[test]
    fn f1_median_matches_large_sample_oracle() {
        // Oracle: one sequential stream of 10^6 Dirichlet draws via Gamma
        // variates, median by sorting.
        let c = Confusion::new(20, 20, 20, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let g = Gamma::new(20.5, 1.0).unwrap();
        let mut draws: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let (t, f, n) = (g.sample(&mut rng), g.sample(&mut rng), g.sample(&mut rng));
                2.0 * t / (2.0 * t + f + n)
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        let oracle = draws[draws.len() / 2];
        assert!((oracle - 0.5).abs() < 0.01);
        let ci = f1_ci(&c, JEFFREYS, DEFAULT_MASS, DEFAULT_F1_SAMPLES, 3);
        assert!((ci.point - oracle).abs() < 0.005, "{} vs {}", ci.point, oracle);
    }

    proptest! {
        #[test]
        fn intervals_are_ordered_and_monotone(tp in 0u64..200, fp in 0u64..200, fn_ in 0u64..200) {
            let c = Confusion::new(tp, fp, fn_, 0);
            for ci in [precision_ci(&c, JEFFREYS, DEFAULT_MASS), recall_ci(&c, JEFFREYS, DEFAULT_MASS)] {
                prop_assert!(0.0 <= ci.lo && ci.lo <= ci.point && ci.point <= ci.hi && ci.hi <= 1.0);
            }
            let more = Confusion::new(tp + 1, fp, fn_, 0);
            prop_assert!(precision_ci(&more, JEFFREYS, DEFAULT_MASS).lo >= precision_ci(&c, JEFFREYS, DEFAULT_MASS).lo);
            prop_assert!(recall_ci(&more, JEFFREYS, DEFAULT_MASS).lo >= recall_ci(&c, JEFFREYS, DEFAULT_MASS).lo);
        }
    }
}
