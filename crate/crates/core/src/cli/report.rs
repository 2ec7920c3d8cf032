//! Report documents. Floats are written with 12 significant digits in
//! exponent notation so that identical inputs give identical bytes.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::estimator::{CorrelationReport, Outcomes};
use crate::scalar::Cx;

/// A float written as `d.ddddddddddde±x`; `-0` prints as `0`, non-finite as `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_float(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn pair(z: Cx<f64>) -> [Num; 2] {
    [Num(z.re), Num(z.im)]
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub correlation: Num,
    pub backend: String,
    pub mode: String,
    pub g: Num,
    pub sigma: Num,
    pub skip_broadcast: bool,
    pub dims: Vec<usize>,
    pub outcomes: Outcomes,
    pub conveyance_probability: Num,
    pub oracle_diag: Num,
    /// 1-based postselection indices whose probability fell below the null threshold.
    pub skipped_k: Vec<usize>,
    pub postselections: Vec<PostselectionEntry>,
    pub diagnostics: Diagnostics,
    pub branches: Vec<BranchEntry>,
}

#[derive(Debug, Serialize)]
pub struct PostselectionEntry {
    pub k: usize,
    pub label: String,
    pub probability: Num,
    pub deviation: Num,
    pub skipped: bool,
    /// `[line][column]` as `[re, im]`; absent when skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_values: Option<Vec<Vec<[Num; 2]>>>,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub max_completeness_residual: Num,
    pub min_postselection_probability: Num,
    pub weak_limit_residual: Num,
}

/// One ancilla-reading branch of an outcome enumeration.
#[derive(Debug, Serialize)]
pub struct BranchEntry {
    pub outcomes: Outcomes,
    pub probability: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_k: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BranchEntry {
    pub fn from_report(r: &CorrelationReport<f64>) -> Self {
        Self {
            outcomes: r.outcomes.clone(),
            probability: Num(r.conveyance_probability),
            correlation: Some(Num(r.value)),
            skipped_k: Some(r.skipped.iter().map(|k| k + 1).collect()),
            error: None,
        }
    }

    pub fn impossible(outcomes: Outcomes) -> Self {
        Self { outcomes, probability: Num(0.0), correlation: None, skipped_k: None, error: Some("impossible-outcome".into()) }
    }
}

impl RunReport {
    pub fn new(r: &CorrelationReport<f64>, g: f64, sigma: f64, skip_broadcast: bool, dims: &[usize]) -> Self {
        let postselections = r
            .terms
            .iter()
            .map(|t| PostselectionEntry {
                k: t.k + 1,
                label: t.label.clone(),
                probability: Num(t.probability),
                deviation: Num(t.deviation),
                skipped: t.skipped,
                weak_values: r.weak_values.values[t.k]
                    .as_ref()
                    .map(|w| w.iter().map(|row| row.iter().copied().map(pair).collect()).collect()),
            })
            .collect();
        Self {
            correlation: Num(r.value),
            backend: r.backend.to_string(),
            mode: r.mode.to_string(),
            g: Num(g),
            sigma: Num(sigma),
            skip_broadcast,
            dims: dims.to_vec(),
            outcomes: r.outcomes.clone(),
            conveyance_probability: Num(r.conveyance_probability),
            oracle_diag: Num(r.oracle_diag),
            skipped_k: r.skipped.iter().map(|k| k + 1).collect(),
            postselections,
            diagnostics: Diagnostics {
                max_completeness_residual: Num(r.max_completeness_residual),
                min_postselection_probability: Num(r.min_postselection_probability),
                weak_limit_residual: Num(r.weak_limit_residual),
            },
            branches: vec![BranchEntry::from_report(r)],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,label,probability,deviation,skipped\n");
        for p in &self.postselections {
            out += &format!(
                "{},{},{},{},{}\n",
                p.k,
                p.label,
                format_float(p.probability.0),
                format_float(p.deviation.0),
                p.skipped
            );
        }
        out += &format!("correlation,,,{},\n", format_float(self.correlation.0));
        out
    }
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub dims: Vec<usize>,
    pub elements: Vec<ElementEntry>,
    pub max_residual: Num,
    pub oracle_diag: Num,
    pub trace_distance_to_product: Num,
}

#[derive(Debug, Serialize)]
pub struct ElementEntry {
    pub i: usize,
    pub j: usize,
    pub direct: [Num; 2],
    pub reconstructed: [Num; 2],
}

impl OracleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,direct_re,direct_im,reconstructed_re,reconstructed_im\n");
        for e in &self.elements {
            out += &format!(
                "{},{},{},{},{},{}\n",
                e.i,
                e.j,
                format_float(e.direct[0].0),
                format_float(e.direct[1].0),
                format_float(e.reconstructed[0].0),
                format_float(e.reconstructed[1].0)
            );
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub g: Num,
    pub correlation: Num,
    pub abs_error: Num,
    pub max_weak_value_residual: Num,
    /// Previous row's error over this row's; absent on the first row.
    pub error_ratio: Option<Num>,
    /// Error did not grow relative to the previous row.
    pub monotone: Option<bool>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("g,correlation,abs_error,max_weak_value_residual,error_ratio,monotone\n");
    for r in rows {
        out += &format!(
            "{},{},{},{},{},{}\n",
            format_float(r.g.0),
            format_float(r.correlation.0),
            format_float(r.abs_error.0),
            format_float(r.max_weak_value_residual.0),
            r.error_ratio.map(|x| format_float(x.0)).unwrap_or_default(),
            r.monotone.map(|m| m.to_string()).unwrap_or_default()
        );
    }
    out
}

pub fn to_json<S: Serialize>(doc: &S) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("reports always serialize");
    s.push('\n');
    s
}
