//! Embedding error (MAE, MRE) and inference error (SE, SA, AG).

use std::fmt::Write as _;

use crate::interval::ProbInterval;
use crate::ontology::Shape;

/// Denominator used by MRE when the reference probability is 0.
pub const ZERO_DENOMINATOR: f64 = 1e-8;
/// Reference probabilities up to and including this value form the low stratum.
pub const STRATUM_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("metric of an empty item list")]
    Empty,
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Result<f64, MetricsError> {
    let n = values.len();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(values.sum::<f64>() / n as f64)
}

/// Mean of `|p − p̄|` over `(p, p̄)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64, MetricsError> {
    mean(pairs.iter().map(|(p, q)| (p - q).abs()))
}

/// Mean of `|p − p̄| / p`, with `p = 0` replaced by [`ZERO_DENOMINATOR`].
pub fn mre(pairs: &[(f64, f64)]) -> Result<f64, MetricsError> {
    mean(pairs.iter().map(|(p, q)| {
        let d = if *p == 0.0 { ZERO_DENOMINATOR } else { *p };
        (p - q).abs() / d
    }))
}

type IntervalPair = ((f64, f64), (f64, f64));

/// Mean of `[l − l̄]⁺ + [ū − u]⁺` over `(true, estimate)` pairs.
pub fn soundness_error(items: &[IntervalPair]) -> Result<f64, MetricsError> {
    mean(items.iter().map(|((l, u), (le, ue))| (l - le).max(0.0) + (ue - u).max(0.0)))
}

/// Fraction of items whose estimate lies inside the true interval.
pub fn soundness_accuracy(items: &[IntervalPair]) -> Result<f64, MetricsError> {
    mean(items.iter().map(|((l, u), (le, ue))| if l <= le && ue <= u { 1.0 } else { 0.0 }))
}

/// Mean of `|l − l̄| + |u − ū|`.
pub fn approximation_gap(items: &[IntervalPair]) -> Result<f64, MetricsError> {
    mean(items.iter().map(|((l, u), (le, ue))| (l - le).abs() + (u - ue).abs()))
}

/// A stated probability and the proportion an embedding realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingItem {
    pub shape: Shape,
    pub expected: f64,
    pub estimate: f64,
}

/// A reference interval and an estimated one for a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceItem {
    pub shape: Shape,
    pub truth: (f64, f64),
    pub estimate: (f64, f64),
}

impl InferenceItem {
    /// `None` if the reference is vacuous; a vacuous estimate counts as `[0, 1]`.
    pub fn new(shape: Shape, truth: ProbInterval, estimate: ProbInterval) -> Option<Self> {
        Some(InferenceItem {
            shape,
            truth: truth.bounds()?,
            estimate: estimate.bounds_or_unit(),
        })
    }

    fn reference(&self) -> f64 {
        (self.truth.0 + self.truth.1) / 2.0
    }
}

/// Metrics over one group of items; `None` where the group has no items.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scores {
    pub conditionals: usize,
    pub queries: usize,
    pub mae: Option<f64>,
    pub mre: Option<f64>,
    pub se: Option<f64>,
    pub sa: Option<f64>,
    pub ag: Option<f64>,
}

impl Scores {
    pub fn compute(embedding: &[EmbeddingItem], inference: &[InferenceItem]) -> Self {
        let pairs: Vec<(f64, f64)> = embedding.iter().map(|i| (i.expected, i.estimate)).collect();
        let intervals: Vec<IntervalPair> = inference.iter().map(|i| (i.truth, i.estimate)).collect();
        Scores {
            conditionals: pairs.len(),
            queries: intervals.len(),
            mae: mae(&pairs).ok(),
            mre: mre(&pairs).ok(),
            se: soundness_error(&intervals).ok(),
            sa: soundness_accuracy(&intervals).ok(),
            ag: approximation_gap(&intervals).ok(),
        }
    }

    fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "conditionals" => Some(self.conditionals as f64),
            "queries" => Some(self.queries as f64),
            "mae" => self.mae,
            "mre" => self.mre,
            "se" => self.se,
            "sa" => self.sa,
            "ag" => self.ag,
            _ => unreachable!("unknown metric {metric}"),
        }
    }
}

/// Scores of all items and of the items of each shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown {
    pub total: Scores,
    /// Indexed like [`Shape::ALL`].
    pub shapes: [Scores; 5],
}

impl Breakdown {
    fn compute(embedding: &[EmbeddingItem], inference: &[InferenceItem]) -> Self {
        let shapes = Shape::ALL.map(|s| {
            let e: Vec<_> = embedding.iter().filter(|i| i.shape == s).copied().collect();
            let q: Vec<_> = inference.iter().filter(|i| i.shape == s).copied().collect();
            Scores::compute(&e, &q)
        });
        Breakdown {
            total: Scores::compute(embedding, inference),
            shapes,
        }
    }

    pub fn shape(&self, s: Shape) -> &Scores {
        &self.shapes[Shape::ALL.iter().position(|x| *x == s).expect("listed shape")]
    }
}

/// Full report: all items, plus the strata `p ≤ 0.1` and `p > 0.1` of the
/// reference probability (the midpoint for intervals).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub all: Breakdown,
    pub low: Breakdown,
    pub high: Breakdown,
}

const METRICS: [&str; 7] = ["conditionals", "queries", "mae", "mre", "se", "sa", "ag"];

impl MetricReport {
    pub fn new(embedding: &[EmbeddingItem], inference: &[InferenceItem]) -> Self {
        let low_e: Vec<_> = embedding.iter().filter(|i| i.expected <= STRATUM_THRESHOLD).copied().collect();
        let high_e: Vec<_> = embedding.iter().filter(|i| i.expected > STRATUM_THRESHOLD).copied().collect();
        let low_q: Vec<_> = inference.iter().filter(|i| i.reference() <= STRATUM_THRESHOLD).copied().collect();
        let high_q: Vec<_> = inference.iter().filter(|i| i.reference() > STRATUM_THRESHOLD).copied().collect();
        MetricReport {
            all: Breakdown::compute(embedding, inference),
            low: Breakdown::compute(&low_e, &low_q),
            high: Breakdown::compute(&high_e, &high_q),
        }
    }

    fn rows(&self) -> Vec<(String, Vec<Option<f64>>)> {
        let mut out = Vec::new();
        for (suffix, b) in [("", &self.all), ("_low", &self.low), ("_high", &self.high)] {
            for m in METRICS {
                let mut values = vec![b.total.get(m)];
                values.extend(b.shapes.iter().map(|s| s.get(m)));
                out.push((format!("{m}{suffix}"), values));
            }
        }
        out
    }

    /// CSV with columns `metric,total,pnf1,pnf2,pnf3,pnf4,other`; missing
    /// values are left empty. `_low`/`_high` rows hold the strata.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,total");
        for shape in Shape::ALL {
            write!(s, ",{}", shape.label()).unwrap();
        }
        s.push('\n');
        for (name, values) in self.rows() {
            s.push_str(&name);
            for v in values {
                match v {
                    Some(x) => write!(s, ",{}", format_value(x)).unwrap(),
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Aligned plain-text table of the same rows.
    pub fn to_table(&self) -> String {
        let mut header = vec!["metric".to_string(), "total".to_string()];
        header.extend(Shape::ALL.iter().map(|s| s.label().to_string()));
        let mut lines = vec![header];
        for (name, values) in self.rows() {
            let mut line = vec![name];
            line.extend(values.into_iter().map(|v| v.map_or("-".to_string(), format_value)));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|j| lines.iter().map(|l| l[j].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for line in lines {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            s.push_str(cells.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}

fn format_value(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{x:.6}")
    }
}
