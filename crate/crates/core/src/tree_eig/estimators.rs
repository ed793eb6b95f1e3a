use std::io::Write;

use serde::Serialize;

use super::TreeEigError;
use crate::local::LocalStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `√α`.
    Star,
    /// `√(α + β/α)`.
    TwoTerm,
    /// `√(α + β/α + (β⁽¹'¹⁾ + β⁽²⁾)/α² − β²/α³)`.
    FourTerm,
    /// `√(α + β/α + (d² + d)/α)`.
    Simplified,
    Adk,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] =
        [Self::Star, Self::TwoTerm, Self::FourTerm, Self::Simplified, Self::Adk];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueEstimate {
    pub kind: EstimatorKind,
    pub value: f64,
    pub alpha: usize,
    pub beta: usize,
    pub beta2: Option<usize>,
    pub beta11: Option<usize>,
    pub d: Option<f64>,
}

pub fn estimate(stats: &LocalStats, d: f64, kind: EstimatorKind) -> Result<EigenvalueEstimate, TreeEigError> {
    use EstimatorKind::*;
    if stats.alpha == 0 {
        return Err(TreeEigError::OutOfDomain { kind, reason: "alpha = 0".into() });
    }
    let a = stats.alpha as f64;
    let b = stats.beta as f64;
    let mut out = EigenvalueEstimate {
        kind,
        value: 0.0,
        alpha: stats.alpha,
        beta: stats.beta,
        beta2: None,
        beta11: None,
        d: None,
    };
    out.value = match kind {
        Star => a.sqrt(),
        TwoTerm => (a + b / a).sqrt(),
        FourTerm => {
            let b11 = stats.beta11.ok_or_else(|| TreeEigError::OutOfDomain {
                kind,
                reason: "beta11 needs a ball of radius at least 3".into(),
            })?;
            out.beta2 = Some(stats.beta2);
            out.beta11 = Some(b11);
            let sq = a + b / a + (b11 + stats.beta2) as f64 / (a * a) - b * b / (a * a * a);
            sq.sqrt()
        }
        Simplified => {
            out.d = Some(d);
            (a + b / a + (d * d + d) / a).sqrt()
        }
        Adk => {
            out.d = Some(d);
            if d <= 0.0 {
                return Err(TreeEigError::OutOfDomain { kind, reason: format!("d = {d} must be positive") });
            }
            let s = a / d + b / (a * d);
            let inner = s * s - 4.0 * a / d;
            if inner < 0.0 {
                return Err(TreeEigError::OutOfDomain { kind, reason: format!("inner radicand {inner} < 0") });
            }
            let h = b / (2.0 * a);
            let outer = a - h * s + h * inner.sqrt();
            if outer <= 0.0 {
                return Err(TreeEigError::OutOfDomain { kind, reason: format!("outer radicand {outer} <= 0") });
            }
            a / outer.sqrt()
        }
    };
    Ok(out)
}

/// One row of the estimator comparison table; `None` marks an estimate
/// outside its domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRow {
    pub vertex: u32,
    pub lambda_cf: f64,
    pub estimates: Vec<(EstimatorKind, Option<f64>)>,
}

pub fn estimator_table(stats: &LocalStats, d: f64, lambda_cf: f64) -> EstimatorRow {
    EstimatorRow {
        vertex: stats.vertex,
        lambda_cf,
        estimates: EstimatorKind::ALL.iter().map(|&k| (k, estimate(stats, d, k).ok().map(|e| e.value))).collect(),
    }
}

/// Columns: vertex, lambda_cf, one column per estimator, then the absolute
/// errors `|estimate − lambda_cf|` in the same order.
pub fn write_estimator_csv(rows: &[EstimatorRow], w: impl Write) -> csv::Result<()> {
    let names = ["star", "two_term", "four_term", "simplified", "adk"];
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["vertex".to_string(), "lambda_cf".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    header.extend(names.iter().map(|s| format!("err_{s}")));
    out.write_record(&header)?;
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.15e}")).unwrap_or_default();
    for row in rows {
        let mut rec = vec![row.vertex.to_string(), format!("{:.15e}", row.lambda_cf)];
        rec.extend(row.estimates.iter().map(|e| fmt(e.1)));
        rec.extend(row.estimates.iter().map(|e| fmt(e.1.map(|v| (v - row.lambda_cf).abs()))));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(alpha: usize, beta: usize, beta2: usize, beta11: Option<usize>) -> LocalStats {
        LocalStats { vertex: 0, alpha, beta, beta2, beta11, sphere_sizes: vec![], is_tree: true }
    }

    #[test]
    fn four_term_and_simplified_agree_on_worked_example() {
        let s = stats(25, 75, 300, Some(225));
        let four = estimate(&s, 3.0, EstimatorKind::FourTerm).unwrap().value;
        let simple = estimate(&s, 3.0, EstimatorKind::Simplified).unwrap().value;
        assert!((four - 28.48f64.sqrt()).abs() < 1e-12);
        assert!((simple - 28.48f64.sqrt()).abs() < 1e-12);
        assert!((four - 5.33667).abs() < 1e-5);
    }

    #[test]
    fn adk_worked_example() {
        let s = stats(16, 64, 0, None);
        let v = estimate(&s, 4.0, EstimatorKind::Adk).unwrap().value;
        assert!((v - 16.0 / 12f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adk_out_of_domain_is_typed() {
        // s = α/d + β/(αd) = 2 + 0, s² − 4α/d = 4 − 8 < 0.
        let s = stats(2, 0, 0, None);
        assert!(matches!(
            estimate(&s, 1.0, EstimatorKind::Adk),
            Err(TreeEigError::OutOfDomain { kind: EstimatorKind::Adk, .. })
        ));
    }

    #[test]
    fn four_term_needs_beta11() {
        assert!(estimate(&stats(4, 4, 4, None), 1.0, EstimatorKind::FourTerm).is_err());
        assert!(estimate(&stats(0, 0, 0, None), 1.0, EstimatorKind::Star).is_err());
    }

    #[test]
    fn csv_marks_missing_estimates() {
        let row = estimator_table(&stats(4, 0, 0, None), 1.0, 2.0);
        let mut buf = Vec::new();
        write_estimator_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), 12);
        assert!(line.contains(",,"));
    }
}
