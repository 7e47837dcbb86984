//! Pairwise ranking losses over `x = score_l - score_d`.
//!
//! Squared and Huber losses have an `O(c log c)` evaluation over sorted
//! scores with prefix sums; the WMW sigmoid is always evaluated pairwise.

use std::fmt;

use crate::error::{Result, SrwError};

pub const DEFAULT_WMW_WIDTH: f64 = 1e-3;
pub const DEFAULT_MARGIN: f64 = 0.0;
pub const DEFAULT_HUBER_WINDOW: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    /// `max(x + b, 0)^2`
    Squared { b: f64 },
    /// Quadratic on `(-b, z - b]`, linear above.
    Huber { b: f64, z: f64 },
    /// `1 / (1 + exp(-x / b))`
    Wmw { b: f64 },
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::Wmw {
            b: DEFAULT_WMW_WIDTH,
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

impl LossSpec {
    /// Builds a spec from its config name and optional `b` / `z`, falling
    /// back to per-kind defaults.
    pub fn from_parts(kind: &str, b: Option<f64>, z: Option<f64>) -> Result<LossSpec> {
        let spec = match kind {
            "squared" => LossSpec::Squared {
                b: b.unwrap_or(DEFAULT_MARGIN),
            },
            "huber" => LossSpec::Huber {
                b: b.unwrap_or(DEFAULT_MARGIN),
                z: z.unwrap_or(DEFAULT_HUBER_WINDOW),
            },
            "wmw" => LossSpec::Wmw {
                b: b.unwrap_or(DEFAULT_WMW_WIDTH),
            },
            other => {
                return Err(SrwError::InvalidParameter(format!(
                    "unknown loss `{other}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LossSpec::Squared { .. } => "squared",
            LossSpec::Huber { .. } => "huber",
            LossSpec::Wmw { .. } => "wmw",
        }
    }

    pub fn b(&self) -> f64 {
        match *self {
            LossSpec::Squared { b } | LossSpec::Huber { b, .. } | LossSpec::Wmw { b } => b,
        }
    }

    pub fn z(&self) -> Option<f64> {
        match *self {
            LossSpec::Huber { z, .. } => Some(z),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Squared { b } if b >= 0.0 && b.is_finite() => Ok(()),
            LossSpec::Huber { b, z } if b >= 0.0 && z > b && z.is_finite() => Ok(()),
            LossSpec::Wmw { b } if b > 0.0 && b.is_finite() => Ok(()),
            LossSpec::Huber { .. } => Err(SrwError::InvalidParameter(
                "huber loss needs 0 <= b < z".into(),
            )),
            LossSpec::Wmw { .. } => Err(SrwError::InvalidParameter(
                "wmw loss needs a positive width b".into(),
            )),
            LossSpec::Squared { .. } => Err(SrwError::InvalidParameter(
                "squared loss needs a non-negative margin b".into(),
            )),
        }
    }

    pub fn h(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.value(x))
    }

    pub fn h_prime(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.slope(x))
    }

    fn value(&self, x: f64) -> f64 {
        match *self {
            LossSpec::Squared { b } => {
                let y = (x + b).max(0.0);
                y * y
            }
            LossSpec::Huber { b, z } => {
                let y = x + b;
                if y <= 0.0 {
                    0.0
                } else if y <= z {
                    y * y / (2.0 * z)
                } else {
                    y - z / 2.0
                }
            }
            LossSpec::Wmw { b } => sigmoid(x / b),
        }
    }

    // Right-branch derivative at the kinks.
    fn slope(&self, x: f64) -> f64 {
        match *self {
            LossSpec::Squared { b } => 2.0 * (x + b).max(0.0),
            LossSpec::Huber { b, z } => {
                let y = x + b;
                if y < 0.0 {
                    0.0
                } else if y < z {
                    y / z
                } else {
                    1.0
                }
            }
            LossSpec::Wmw { b } => {
                let s = sigmoid(x / b);
                s * (1.0 - s) / b
            }
        }
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Total pairwise loss and its gradient with respect to every score.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseLoss {
    pub total: f64,
    /// Indexed like the score slice.
    pub grad: Vec<f64>,
}

fn check_sets(scores: &[f64], dest: &[usize], nolink: &[usize]) -> Result<()> {
    if dest.is_empty() || nolink.is_empty() {
        return Err(SrwError::InvalidInput(
            "pairwise loss needs non-empty destination and no-link sets".into(),
        ));
    }
    if dest.iter().chain(nolink).any(|&i| i >= scores.len()) {
        return Err(SrwError::InvalidInput("score index out of range".into()));
    }
    Ok(())
}

/// Reference evaluation over every `(d, l)` pair.
pub fn pairwise_loss(
    spec: &LossSpec,
    scores: &[f64],
    dest: &[usize],
    nolink: &[usize],
) -> Result<PairwiseLoss> {
    spec.validate()?;
    check_sets(scores, dest, nolink)?;
    let mut total = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for &d in dest {
        for &l in nolink {
            let x = scores[l] - scores[d];
            total += spec.value(x);
            let s = spec.slope(x);
            grad[l] += s;
            grad[d] -= s;
        }
    }
    Ok(PairwiseLoss { total, grad })
}

/// Ascending values with prefix sums of `v` and `v^2`.
struct SortedPrefix {
    values: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl SortedPrefix {
    fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let mut sum = Vec::with_capacity(values.len() + 1);
        let mut sum_sq = Vec::with_capacity(values.len() + 1);
        let (mut s, mut q) = (0.0, 0.0);
        sum.push(0.0);
        sum_sq.push(0.0);
        for &v in &values {
            s += v;
            q += v * v;
            sum.push(s);
            sum_sq.push(q);
        }
        SortedPrefix {
            values,
            sum,
            sum_sq,
        }
    }

    /// Number of values strictly below `t`.
    fn below(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v < t)
    }

    /// Number of values at or below `t`.
    fn at_most(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v <= t)
    }

    /// `(count, sum, sum of squares)` over sorted positions `[lo, hi)`.
    fn range(&self, lo: usize, hi: usize) -> (f64, f64, f64) {
        if hi <= lo {
            return (0.0, 0.0, 0.0);
        }
        (
            (hi - lo) as f64,
            self.sum[hi] - self.sum[lo],
            self.sum_sq[hi] - self.sum_sq[lo],
        )
    }
}

/// Sorted-sweep evaluation of the squared and Huber losses.
///
/// For a no-link score `s_l` let `t = s_l + b`; only destinations with
/// `s_d < t` contribute, and `sum (t - s_d)^2` expands into counts, sums and
/// sums of squares over a prefix of the sorted destination scores.
pub fn pairwise_loss_fast(
    spec: &LossSpec,
    scores: &[f64],
    dest: &[usize],
    nolink: &[usize],
) -> Result<PairwiseLoss> {
    spec.validate()?;
    check_sets(scores, dest, nolink)?;
    let (b, window) = match *spec {
        LossSpec::Squared { b } => (b, None),
        LossSpec::Huber { b, z } => (b, Some(z)),
        LossSpec::Wmw { .. } => {
            return Err(SrwError::UnsupportedLoss(
                "wmw has no sorted-sweep evaluation; use pairwise_loss".into(),
            ))
        }
    };
    let ds = SortedPrefix::new(dest.iter().map(|&i| scores[i]).collect());
    let ls = SortedPrefix::new(nolink.iter().map(|&i| scores[i]).collect());
    let mut total = 0.0;
    let mut grad = vec![0.0; scores.len()];

    for &l in nolink {
        let t = scores[l] + b;
        let active = ds.below(t);
        match window {
            None => {
                let (k, s1, s2) = ds.range(0, active);
                total += k * t * t - 2.0 * t * s1 + s2;
                grad[l] += 2.0 * (k * t - s1);
            }
            Some(z) => {
                // destinations with t - s_d > z sit on the linear branch
                let linear = ds.below(t - z).min(active);
                let (kq, s1, s2) = ds.range(linear, active);
                let (kl, s1l, _) = ds.range(0, linear);
                total += (kq * t * t - 2.0 * t * s1 + s2) / (2.0 * z) + kl * (t - z / 2.0) - s1l;
                grad[l] += (kq * t - s1) / z + kl;
            }
        }
    }
    for &d in dest {
        // no-links with s_l + b > s_d, i.e. s_l > s_d - b
        let u = scores[d] - b;
        let start = ls.at_most(u);
        let n = ls.values.len();
        match window {
            None => {
                let (k, s1, _) = ls.range(start, n);
                grad[d] -= 2.0 * (s1 - k * u);
            }
            Some(z) => {
                let linear = ls.at_most(u + z).max(start);
                let (kq, s1, _) = ls.range(start, linear);
                let (kl, _, _) = ls.range(linear, n);
                grad[d] -= (s1 - kq * u) / z + kl;
            }
        }
    }
    Ok(PairwiseLoss { total, grad })
}

/// Fast path when available, pairwise otherwise.
pub fn evaluate(
    spec: &LossSpec,
    scores: &[f64],
    dest: &[usize],
    nolink: &[usize],
) -> Result<PairwiseLoss> {
    match spec {
        LossSpec::Wmw { .. } => pairwise_loss(spec, scores, dest, nolink),
        _ => pairwise_loss_fast(spec, scores, dest, nolink),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wmw_midpoint_and_slope() {
        for b in [1e-3, 0.5, 1.0, 7.0] {
            assert_eq!(LossSpec::Wmw { b }.h(0.0).unwrap(), 0.5);
        }
        assert_eq!(LossSpec::Wmw { b: 1.0 }.h_prime(0.0).unwrap(), 0.25);
        assert!(LossSpec::Wmw { b: 0.0 }.h(0.0).is_err());
    }

    #[test]
    fn squared_margin_cases() {
        let s = LossSpec::Squared { b: 0.1 };
        assert_eq!(s.h(-0.2).unwrap(), 0.0);
        assert!((s.h(0.0).unwrap() - 0.01).abs() < 1e-15);
        let s0 = LossSpec::Squared { b: 0.0 };
        assert_eq!(s0.h_prime(-1.0).unwrap(), 0.0);
        assert!((s0.h_prime(0.3).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn huber_branches_meet() {
        let h = LossSpec::Huber { b: 0.0, z: 1.0 };
        assert_eq!(h.h(1.0).unwrap(), 0.5);
        assert_eq!(1.0 - 1.0 / 2.0, 0.5);
        let h = LossSpec::Huber { b: 0.3, z: 0.8 };
        let eps = 1e-13;
        for x in [-0.3, 0.5] {
            assert!((h.h(x - eps).unwrap() - h.h(x + eps).unwrap()).abs() < 1e-12);
        }
        // derivative limits at x = z - b
        assert!((h.h_prime(0.5 - 1e-12).unwrap() - h.h_prime(0.5).unwrap()).abs() < 1e-10);
        assert!(LossSpec::Huber { b: 0.5, z: 0.5 }.validate().is_err());
    }

    #[test]
    fn satisfied_constraints_cost_nothing() {
        let scores = [0.9, 0.8, 0.1, 0.2];
        for spec in [
            LossSpec::Squared { b: 0.05 },
            LossSpec::Huber { b: 0.05, z: 0.1 },
        ] {
            for f in [pairwise_loss, pairwise_loss_fast] {
                let r = f(&spec, &scores, &[0, 1], &[2, 3]).unwrap();
                assert_eq!(r.total, 0.0);
                assert!(r.grad.iter().all(|&g| g == 0.0));
            }
        }
    }

    #[test]
    fn wmw_tie_pair() {
        let r = pairwise_loss(&LossSpec::Wmw { b: 0.01 }, &[0.5, 0.5], &[0], &[1]).unwrap();
        assert_eq!(r.total, 0.5);
    }

    #[test]
    fn all_ties_squared() {
        let scores = vec![0.25; 7];
        let b = 0.1;
        let r = pairwise_loss_fast(&LossSpec::Squared { b }, &scores, &[0, 1, 2], &[3, 4, 5, 6])
            .unwrap();
        assert!((r.total - 12.0 * b * b).abs() < 1e-15);
    }

    #[test]
    fn fast_rejects_wmw() {
        assert!(matches!(
            pairwise_loss_fast(&LossSpec::Wmw { b: 1.0 }, &[0.0, 1.0], &[0], &[1]),
            Err(SrwError::UnsupportedLoss(_))
        ));
    }

    #[test]
    fn empty_sets_rejected() {
        assert!(pairwise_loss(&LossSpec::default(), &[0.0], &[], &[0]).is_err());
    }

    #[test]
    fn from_parts_defaults() {
        assert_eq!(
            LossSpec::from_parts("wmw", None, None).unwrap(),
            LossSpec::Wmw { b: 1e-3 }
        );
        assert_eq!(
            LossSpec::from_parts("huber", None, None).unwrap(),
            LossSpec::Huber { b: 0.0, z: 1e-2 }
        );
        assert!(LossSpec::from_parts("hinge", None, None).is_err());
    }

    fn any_spec() -> impl Strategy<Value = LossSpec> {
        prop_oneof![
            (0.0f64..0.5).prop_map(|b| LossSpec::Squared { b }),
            (0.0f64..0.5, 0.01f64..1.0).prop_map(|(b, dz)| LossSpec::Huber { b, z: b + dz }),
            (0.01f64..2.0).prop_map(|b| LossSpec::Wmw { b }),
        ]
    }

    fn near_kink(spec: &LossSpec, x: f64) -> bool {
        match *spec {
            LossSpec::Squared { b } => (x + b).abs() < 1e-4,
            LossSpec::Huber { b, z } => (x + b).abs() < 1e-4 || (x + b - z).abs() < 1e-4,
            LossSpec::Wmw { .. } => false,
        }
    }

    proptest! {
        #[test]
        fn h_prime_matches_finite_differences(spec in any_spec(), x in -2.0f64..2.0) {
            prop_assume!(!near_kink(&spec, x));
            let h = 1e-6;
            let fd = (spec.h(x + h).unwrap() - spec.h(x - h).unwrap()) / (2.0 * h);
            let an = spec.h_prime(x).unwrap();
            prop_assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "fd {} an {}", fd, an);
        }

        #[test]
        fn h_monotone_nonnegative(spec in any_spec(), x in -3.0f64..3.0, dx in 0.0f64..1.0) {
            let a = spec.h(x).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!(spec.h(x + dx).unwrap() >= a);
            if let LossSpec::Wmw { .. } = spec {
                prop_assert!(a <= 1.0);
            }
        }

        #[test]
        fn naive_matches_double_loop(
            spec in any_spec(),
            scores in prop::collection::vec(0.0f64..1.0, 2..40),
            split in 1usize..39,
        ) {
            let split = split.min(scores.len() - 1);
            let dest: Vec<usize> = (0..split).collect();
            let nolink: Vec<usize> = (split..scores.len()).collect();
            let r = pairwise_loss(&spec, &scores, &dest, &nolink).unwrap();
            let mut total = 0.0;
            for &d in &dest {
                for &l in &nolink {
                    total += spec.h(scores[l] - scores[d]).unwrap();
                }
            }
            prop_assert!((r.total - total).abs() <= 1e-12 * total.abs().max(1.0));
        }
    }
}
