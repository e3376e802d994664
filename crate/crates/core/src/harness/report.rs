//! Corpus reports and their JSON/CSV renderings.
//!
//! Metric values are rounded to 6 fractional digits when a report is built,
//! and aggregates are means of those rounded values, so an aggregate can be
//! recomputed exactly from the emitted per-case numbers.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::Value;

use super::{EvalConfig, HarnessError};
use crate::metrics::{Category, Metric, MetricReport};

/// Fixed 6-digit rendering; exact binary ties round half to even.
pub fn format_decimal(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// `v` rounded to the value its 6-digit rendering denotes.
pub fn round6(v: f64) -> f64 {
    format_decimal(v).parse().expect("formatted decimal parses")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseEntry {
    pub case_id: String,
    pub category: Option<Category>,
    /// Rounded values in [`Metric::ALL`] order.
    pub values: [Option<f64>; 12],
    pub error: Option<String>,
}

impl CaseEntry {
    pub fn ok(case_id: String, category: Category, report: &MetricReport) -> Self {
        let mut values = [None; 12];
        for (i, (_, v)) in report.iter().enumerate() {
            values[i] = v.map(round6);
        }
        Self {
            case_id,
            category: Some(category),
            values,
            error: None,
        }
    }

    pub fn failed(case_id: String, error: String) -> Self {
        Self {
            case_id,
            category: None,
            values: [None; 12],
            error: Some(error),
        }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub metric: Metric,
    pub mean: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub config: EvalConfig,
    pub perceptual_backend: String,
    pub structure_backend: String,
    pub cases: Vec<CaseEntry>,
    pub aggregates: Vec<Aggregate>,
}

struct Decimal(Option<f64>);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => RawValue::from_string(format_decimal(v))
                .expect("decimal is valid JSON")
                .serialize(s),
            None => s.serialize_none(),
        }
    }
}

struct MetricMap<'a>(&'a [Option<f64>; 12]);

impl Serialize for MetricMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(12))?;
        for (m, v) in Metric::ALL.iter().zip(self.0) {
            map.serialize_entry(m.key(), &Decimal(*v))?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct JsonCase<'a> {
    case_id: &'a str,
    category: Option<Category>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    metrics: MetricMap<'a>,
}

struct AggregateMap<'a>(&'a [Aggregate]);

#[derive(Serialize)]
struct JsonAggregate {
    mean: Decimal,
    count: usize,
}

impl Serialize for AggregateMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for a in self.0 {
            map.serialize_entry(
                a.metric.key(),
                &JsonAggregate {
                    mean: Decimal(a.mean),
                    count: a.count,
                },
            )?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct Backends<'a> {
    perceptual: &'a str,
    structure: &'a str,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    seed: u64,
    backends: Backends<'a>,
    config: &'a EvalConfig,
    case_count: usize,
    failed_cases: usize,
    cases: Vec<JsonCase<'a>>,
    aggregate: AggregateMap<'a>,
}

impl CorpusReport {
    /// Sorts cases by id and computes per-metric means over the cases where
    /// the metric is present.
    pub fn new(config: EvalConfig, perceptual_backend: String, structure_backend: String, mut cases: Vec<CaseEntry>) -> Self {
        cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let aggregates = Metric::ALL
            .iter()
            .map(|&metric| {
                let present: Vec<f64> = cases.iter().filter_map(|c| c.get(metric)).collect();
                Aggregate {
                    metric,
                    mean: (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64),
                    count: present.len(),
                }
            })
            .collect();
        Self {
            config,
            perceptual_backend,
            structure_backend,
            cases,
            aggregates,
        }
    }

    pub fn failed_cases(&self) -> usize {
        self.cases.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn aggregate(&self, m: Metric) -> &Aggregate {
        &self.aggregates[m as usize]
    }

    pub fn to_json(&self) -> String {
        let report = JsonReport {
            seed: self.config.seed,
            backends: Backends {
                perceptual: &self.perceptual_backend,
                structure: &self.structure_backend,
            },
            config: &self.config,
            case_count: self.cases.len(),
            failed_cases: self.failed_cases(),
            cases: self
                .cases
                .iter()
                .map(|c| JsonCase {
                    case_id: &c.case_id,
                    category: c.category,
                    status: if c.error.is_some() { "error" } else { "ok" },
                    error: c.error.as_deref(),
                    metrics: MetricMap(&c.values),
                })
                .collect(),
            aggregate: AggregateMap(&self.aggregates),
        };
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses a report produced by [`CorpusReport::to_json`].
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let bad = |m: String| HarnessError::Config(format!("report: {m}"));
        let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let config: EvalConfig = serde_json::from_value(v["config"].clone()).map_err(|e| bad(e.to_string()))?;
        let backend = |k: &str| {
            v["backends"][k]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing backends.{k}")))
        };
        let (perceptual, structure) = (backend("perceptual")?, backend("structure")?);
        let mut cases = Vec::new();
        for c in v["cases"].as_array().ok_or_else(|| bad("missing cases".into()))? {
            let case_id = c["case_id"].as_str().ok_or_else(|| bad("case without id".into()))?.to_string();
            let category = match &c["category"] {
                Value::Null => None,
                other => Some(serde_json::from_value(other.clone()).map_err(|e| bad(e.to_string()))?),
            };
            let mut values = [None; 12];
            for (i, m) in Metric::ALL.iter().enumerate() {
                values[i] = c["metrics"][m.key()].as_f64();
            }
            cases.push(CaseEntry {
                case_id,
                category,
                values,
                error: c["error"].as_str().map(str::to_string),
            });
        }
        Ok(Self::new(config, perceptual, structure, cases))
    }

    /// One row per case, then a final `aggregate` row of means. Absent
    /// values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["case_id", "category", "status"];
        header.extend(Metric::ALL.iter().map(|m| m.key()));
        header.push("error");
        w.write_record(&header).expect("in-memory write");
        let cell = |v: Option<f64>| v.map(format_decimal).unwrap_or_default();
        for c in &self.cases {
            let mut row = vec![
                c.case_id.clone(),
                c.category
                    .map(|k| serde_json::to_value(k).expect("category")
                        .as_str()
                        .expect("string")
                        .to_string())
                    .unwrap_or_default(),
                if c.error.is_some() { "error".into() } else { "ok".into() },
            ];
            row.extend(c.values.iter().map(|v| cell(*v)));
            row.push(c.error.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        let mut agg = vec!["aggregate".to_string(), String::new(), String::new()];
        agg.extend(self.aggregates.iter().map(|a| cell(a.mean)));
        agg.push(String::new());
        w.write_record(&agg).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
