//! Run configuration, report envelopes, and deterministic serialization.
//!
//! A run is described by a single JSON config file (unknown keys are
//! rejected), optionally overridden by command-line flags. Every report is
//! wrapped in an envelope carrying the schema version, the tool version,
//! and the SHA-256 of the config bytes, and is serialized deterministically:
//! object keys in sorted order and floats at 17 significant digits, so
//! identical configs produce byte-identical reports.

use crate::error::{ContactError, Result};
use crate::flow::IntegratorOpts;
use crate::hamfield::{ExpressionField, Hamiltonian};
use crate::manifold::{ChartedManifold, ManifoldKind, Point};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    /// "darboux" or "hopf".
    pub kind: String,
    /// Half the (dimension + 1) for Darboux charts: dimension is 2n - 1.
    #[serde(default = "default_n")]
    pub n: usize,
    pub pole_margin: Option<f64>,
    pub sample_box: Option<Vec<(f64, f64)>>,
}

fn default_n() -> usize {
    2
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        ManifoldConfig {
            kind: "darboux".into(),
            n: 2,
            pole_margin: None,
            sample_box: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_samples() -> usize {
    11
}
fn default_t_end() -> f64 {
    1.0
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt: default_dt(),
            t_samples: default_t_samples(),
            t_end: default_t_end(),
        }
    }
}

/// The schema-validated run configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    /// Named Hamiltonians, each a chart-coordinate expression.
    pub hamiltonians: BTreeMap<String, String>,
    pub flow: FlowConfig,
    /// Per-axis quadrature resolution.
    pub grid: Option<Vec<usize>>,
    /// Flow seeds / distance probes in chart coordinates.
    pub seeds: Option<Vec<Vec<f64>>>,
    /// Probe times in [0, t_end].
    pub times: Option<Vec<f64>>,
    /// Free-form named scalar parameters (k, scale, band_lo, band_hi, ...).
    pub params: BTreeMap<String, f64>,
    /// "json" (default) or "csv".
    pub format: Option<String>,
}

/// Load and schema-validate a config file; returns the config together with
/// the SHA-256 hex digest of the raw bytes.
pub fn load_config(path: &std::path::Path) -> Result<(RunConfig, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| ContactError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| ContactError::Config(format!("invalid config {}: {e}", path.display())))?;
    Ok((cfg, hex_sha256(&bytes)))
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn build_manifold(&self) -> Result<ChartedManifold> {
        let mut m = match self.manifold.kind.as_str() {
            "darboux" => {
                if self.manifold.n < 2 {
                    return Err(ContactError::Config("darboux n must be >= 2".into()));
                }
                ChartedManifold::darboux(self.manifold.n)
            }
            "hopf" => ChartedManifold::hopf_sphere(),
            other => {
                return Err(ContactError::Config(format!(
                    "unknown manifold kind `{other}` (expected darboux or hopf)"
                )))
            }
        };
        if let Some(pm) = self.manifold.pole_margin {
            m = m.with_pole_margin(pm);
        }
        if let Some(bx) = &self.manifold.sample_box {
            m = m.with_sample_box(bx.clone());
        }
        Ok(m)
    }

    /// Resolve a Hamiltonian by config name, or parse it as an inline
    /// expression when no entry matches.
    pub fn resolve_field(&self, m: &ChartedManifold, name: &str) -> Result<Arc<dyn Hamiltonian>> {
        let text = self.hamiltonians.get(name).map(String::as_str).unwrap_or(name);
        Ok(Arc::new(ExpressionField::parse(m, text)?))
    }

    pub fn integrator_opts(&self) -> IntegratorOpts {
        IntegratorOpts {
            dt: self.flow.dt,
            t_samples: self.flow.t_samples,
            t_end: self.flow.t_end,
        }
    }

    pub fn grid_resolution(&self, m: &ChartedManifold) -> Vec<usize> {
        self.grid.clone().unwrap_or_else(|| vec![12; m.dim()])
    }

    pub fn seeds(&self, m: &ChartedManifold) -> Result<Vec<Point>> {
        match &self.seeds {
            Some(list) => {
                let mut out = Vec::with_capacity(list.len());
                for coords in list {
                    if coords.len() != m.dim() {
                        return Err(ContactError::Config(format!(
                            "seed has {} coordinates, manifold has dimension {}",
                            coords.len(),
                            m.dim()
                        )));
                    }
                    let p = Point::new(coords.clone());
                    m.check_point(&p)?;
                    out.push(p);
                }
                Ok(out)
            }
            None => Ok(default_seeds(m)),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.times
            .clone()
            .unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0])
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// Deterministic default seeds: the chart center plus a fixed spread along
/// each axis (kept inside a pole-safe eta band on the sphere).
pub fn default_seeds(m: &ChartedManifold) -> Vec<Point> {
    let dim = m.dim();
    let mut out = Vec::new();
    match m.kind {
        ManifoldKind::Darboux { .. } => {
            out.push(Point::new(vec![0.0; dim]));
            for i in 0..dim {
                let mut c = vec![0.0; dim];
                c[i] = 0.4;
                out.push(Point::new(c));
                c = vec![0.0; dim];
                c[i] = -0.3;
                out.push(Point::new(c));
            }
        }
        ManifoldKind::HopfSphere => {
            for (a, b, e) in [
                (0.0, 0.0, 1.52),
                (1.0, 2.0, 1.50),
                (2.5, 5.0, 1.55),
                (4.0, 0.7, 1.48),
                (5.5, 3.1, 1.53),
            ] {
                out.push(Point::new(vec![a, b, e]));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Report envelope and deterministic serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: u32,
    pub tool_version: String,
    pub verb: String,
    pub config_sha256: String,
    pub series_refs: Vec<String>,
    pub report: T,
}

pub fn envelope<T: Serialize>(
    verb: &str,
    config_sha256: &str,
    series_refs: Vec<String>,
    report: T,
) -> Envelope<T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        verb: verb.to_string(),
        config_sha256: config_sha256.to_string(),
        series_refs,
        report,
    }
}

/// Render a JSON value deterministically: sorted object keys (serde_json's
/// default map) and every float at 17 significant digits.
pub fn render_json(value: &serde_json::Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &serde_json::Value, indent: usize, out: &mut String) {
    match v {
        serde_json::Value::Null => out.push_str("null"),
        serde_json::Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        serde_json::Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"))
        }
        serde_json::Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(indent + 1, out);
                write_value(item, indent + 1, out);
            }
            newline_indent(indent, out);
            out.push(']');
        }
        serde_json::Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, val)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(indent + 1, out);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(val, indent + 1, out);
            }
            newline_indent(indent, out);
            out.push('}');
        }
    }
}

fn newline_indent(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// 17 significant digits: enough for exact f64 round-trips.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "null".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "1e400" } else { "-1e400" }.into();
    }
    format!("{x:.16e}")
}

/// Serialize any report to the final JSON byte string.
pub fn to_json_string<T: Serialize>(report: &T) -> Result<String> {
    let value = serde_json::to_value(report)
        .map_err(|e| ContactError::Config(format!("serialization failed: {e}")))?;
    Ok(render_json(&value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"manifold": {"kind": "hopf"}, "frobnicate": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let bad_nested = r#"{"manifold": {"kind": "hopf", "polemargin": 0.1}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad_nested).is_err());
        let good = r#"{"manifold": {"kind": "hopf"}, "params": {"k": 4}}"#;
        assert!(serde_json::from_str::<RunConfig>(good).is_ok());
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -7.25e17] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn rendering_is_deterministic_and_sorted() {
        let v = serde_json::json!({"b": 1.5, "a": [1, 2.25], "c": {"y": true, "x": "s"}});
        let one = render_json(&v);
        let two = render_json(&v);
        assert_eq!(one, two);
        assert!(one.find("\"a\"").unwrap() < one.find("\"b\"").unwrap());
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            hex_sha256(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
