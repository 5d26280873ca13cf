//! Deterministic text formatting: every float is written with 17
//! significant digits so regression diffs of CSV/JSON artifacts are
//! meaningful.

/// Full-precision float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV row from already-formatted fields.
pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// A flat JSON object with insertion-ordered keys. Values are emitted
/// verbatim, so numbers go through [`fmt_f64`] first.
pub struct JsonObject {
    entries: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        JsonObject { entries: Vec::new() }
    }

    pub fn number(mut self, key: &str, value: f64) -> Self {
        self.entries.push((key.to_string(), fmt_f64(value)));
        self
    }

    pub fn integer(mut self, key: &str, value: u64) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn string(mut self, key: &str, value: &str) -> Self {
        self.entries.push((key.to_string(), format!("\"{value}\"")));
        self
    }

    pub fn render(&self) -> String {
        let body: Vec<String> =
            self.entries.iter().map(|(k, v)| format!("  \"{k}\": {v}")).collect();
        format!("{{\n{}\n}}\n", body.join(",\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(std::f64::consts::PI), "3.1415926535897931e0");
    }

    #[test]
    fn json_rendering() {
        let j = JsonObject::new().integer("m", 64).number("x", 0.5).string("mode", "counts");
        assert_eq!(
            j.render(),
            "{\n  \"m\": 64,\n  \"x\": 5.0000000000000000e-1,\n  \"mode\": \"counts\"\n}\n"
        );
    }
}
