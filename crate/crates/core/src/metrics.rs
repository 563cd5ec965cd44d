//! Evaluation metrics and the significance test used in reports.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Threshold for asserting significance.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Ccc,
    FScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
    pub n: usize,
}

/// Concordance correlation coefficient with population (1/N) moments.
pub fn ccc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "ccc inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Undefined("ccc needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite ccc input".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    let (sxx, syy, sxy) = (sxx / n, syy / n, sxy / n);
    if sxx == 0.0 && syy == 0.0 {
        return Err(Error::Undefined("ccc of two constant series".into()));
    }
    Ok(2.0 * sxy / (sxx + syy + (mx - my) * (mx - my)))
}

/// F-score from class-averaged precision and recall: `2PR / (P + R)`.
///
/// Every class in `0..num_classes` takes part in both averages; a class that
/// is never predicted (or never true) contributes a precision (recall) of 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!(
            "macro_f1 inputs have lengths {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() || num_classes == 0 {
        return Err(Error::Empty("macro_f1 input".into()));
    }
    if let Some(&c) = pred.iter().chain(truth).find(|&&c| c >= num_classes) {
        return Err(Error::shape(format!("class {c} outside 0..{num_classes}")));
    }
    let mut tp = vec![0usize; num_classes];
    let mut predicted = vec![0usize; num_classes];
    let mut actual = vec![0usize; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        predicted[p] += 1;
        actual[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let k = num_classes as f64;
    let precision = (0..num_classes).map(|c| ratio(tp[c], predicted[c])).sum::<f64>() / k;
    let recall = (0..num_classes).map(|c| ratio(tp[c], actual[c])).sum::<f64>() / k;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("spearman inputs differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::Undefined("spearman needs at least two points".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("spearman of a constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FirstGreater,
    SecondGreater,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub t_stat: f64,
    pub df: f64,
    /// Upper-tail p-value for H1: mean(a) > mean(b).
    pub p_value: f64,
    pub significant: bool,
    pub direction: Direction,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Upper tail P(T > t) of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + t * t));
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// One-tailed Welch two-sample t-test of H1: mean(a) > mean(b).
pub fn one_tailed_t_test(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Undefined("t-test needs at least two values per sample".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite t-test input".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    let direction = if ma > mb {
        Direction::FirstGreater
    } else if mb > ma {
        Direction::SecondGreater
    } else {
        Direction::Equal
    };
    let (t_stat, df, p_value) = if se2 == 0.0 {
        let (t, p) = match direction {
            Direction::Equal => (0.0, 0.5),
            Direction::FirstGreater => (f64::INFINITY, 0.0),
            Direction::SecondGreater => (f64::NEG_INFINITY, 1.0),
        };
        (t, f64::INFINITY, p)
    } else {
        let t = (ma - mb) / se2.sqrt();
        let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
        (t, df, student_t_sf(t, df))
    };
    Ok(SignificanceResult {
        t_stat,
        df,
        p_value,
        significant: p_value <= SIGNIFICANCE_LEVEL,
        direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccc_examples() {
        assert_eq!(ccc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(ccc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let v = ccc(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((v - 2.5 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn ccc_errors() {
        assert!(matches!(ccc(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::Undefined(_))));
        assert!(matches!(ccc(&[1.0, 2.0], &[2.0]), Err(Error::Shape(_))));
        assert!(ccc(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 1.0);
        let f = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(macro_f1(&[1, 0], &[0, 1], 2).unwrap(), 0.0);
        assert!(macro_f1(&[], &[], 2).is_err());
        assert!(macro_f1(&[3], &[0], 2).is_err());
    }

    #[test]
    fn t_test_conventions() {
        let a = [0.7, 0.71, 0.69];
        let r = one_tailed_t_test(&a, &a).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-15);
        assert!(!r.significant);

        let flat = one_tailed_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(flat.p_value, 0.5);
        assert_eq!(one_tailed_t_test(&[2.0, 2.0], &[1.0, 1.0]).unwrap().p_value, 0.0);
        assert_eq!(one_tailed_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap().p_value, 1.0);
        assert!(one_tailed_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn t_test_separated_samples() {
        let b = [0.5, 0.5001, 0.4999, 0.5002];
        let a: Vec<f64> = b.iter().map(|v| v + 10.0).collect();
        let r = one_tailed_t_test(&a, &b).unwrap();
        assert!(r.p_value < 1e-3);
        assert!(r.significant);
        assert_eq!(r.direction, Direction::FirstGreater);
    }

    #[test]
    fn spearman_with_ties() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        // scipy.stats.spearmanr([1,2,2,3], [1,3,2,4]) = 0.9486832980505138
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn t_test_three_point_reference() {
        // scipy.stats.ttest_ind(equal_var=False, alternative="greater")
        let r = one_tailed_t_test(&[0.72, 0.73, 0.74], &[0.70, 0.71, 0.72]).unwrap();
        assert!((r.t_stat - 2.449489742783178).abs() < 1e-9);
        assert!((r.p_value - 0.03524199845510997).abs() < 1e-6);
    }
}
