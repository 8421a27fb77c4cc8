use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// How `lhs` is compared with `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|lhs - rhs| <= tolerance`
    Within,
    /// `lhs >= rhs - tolerance`
    AtLeast,
    /// `lhs <= rhs + tolerance`
    AtMost,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64, tolerance: f64) -> bool {
        match self {
            Relation::Within => (lhs - rhs).abs() <= tolerance,
            Relation::AtLeast => lhs >= rhs - tolerance,
            Relation::AtMost => lhs <= rhs + tolerance,
        }
    }
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    pub diagnostics: Map<String, Value>,
}

impl LemmaReport {
    pub fn new(id: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, relation: Relation) -> Self {
        let pass = relation.holds(lhs, rhs, tolerance);
        LemmaReport { id: id.into(), lhs, rhs, tolerance, relation, pass, diagnostics: Map::new() }
    }

    /// A check with no numeric sides.
    pub fn flag(id: impl Into<String>, pass: bool) -> Self {
        LemmaReport {
            id: id.into(),
            lhs: if pass { 1.0 } else { 0.0 },
            rhs: 1.0,
            tolerance: 0.0,
            relation: Relation::Within,
            pass,
            diagnostics: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.diagnostics.insert(key.to_string(), value.into());
        self
    }

    /// Overrides the pass bit with an extra condition, recorded in diagnostics.
    pub fn require(mut self, key: &str, ok: bool) -> Self {
        self.diagnostics.insert(key.to_string(), Value::Bool(ok));
        self.pass &= ok;
        self
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: lhs={:.6e} rhs={:.6e} tol={:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.lhs,
            self.rhs,
            self.tolerance
        )
    }
}

/// Reports as CSV with a fixed header; diagnostics are embedded as JSON.
pub fn reports_to_csv(reports: &[LemmaReport]) -> String {
    let mut out = String::from("id,lhs,rhs,tolerance,relation,pass,diagnostics\n");
    for r in reports {
        let diag = serde_json::to_string(&r.diagnostics).unwrap_or_default().replace('"', "\"\"");
        let rel = serde_json::to_value(r.relation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{},{},\"{}\"\n", r.id, r.lhs, r.rhs, r.tolerance, rel, r.pass, diag));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(LemmaReport::new("a", 1.0, 1.05, 0.1, Relation::Within).pass);
        assert!(!LemmaReport::new("a", 1.0, 1.2, 0.1, Relation::Within).pass);
        assert!(LemmaReport::new("b", 5.0, 1.0, 0.0, Relation::AtLeast).pass);
        assert!(!LemmaReport::new("b", 0.8, 1.0, 0.1, Relation::AtLeast).pass);
        assert!(LemmaReport::new("c", 0.8, 1.0, 0.0, Relation::AtMost).pass);
        let r = LemmaReport::new("d", 1.0, 1.0, 0.0, Relation::Within).require("extra", false);
        assert!(!r.pass);
    }

    #[test]
    fn csv_shape() {
        let r = LemmaReport::new("x", 1.0, 2.0, 3.0, Relation::AtLeast).with("note", "a,b");
        let csv = reports_to_csv(&[r]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("x,1,2,3,at_least,true,\"{"));
    }
}
