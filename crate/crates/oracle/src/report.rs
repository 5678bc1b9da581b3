//! Text and key-value renderings of check outcomes.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub passed: bool,
    pub values: Vec<(String, String)>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), passed: true, values: Vec::new() }
    }

    pub fn value(mut self, key: &str, v: impl fmt::Display) -> Self {
        self.values.push((key.to_string(), v.to_string()));
        self
    }

    /// Records a float with 6 significant digits.
    pub fn num(self, key: &str, v: f64) -> Self {
        self.value(key, format_sig(v))
    }

    /// Records a sub-check; the report fails if any sub-check fails.
    pub fn check(mut self, key: &str, ok: bool) -> Self {
        self.passed &= ok;
        self.value(key, if ok { "pass" } else { "FAIL" })
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// Rows `check,key,value`, without header.
    pub fn csv_rows(&self) -> String {
        let mut out = format!("{},status,{}\n", csv_field(&self.name), self.status());
        for (k, v) in &self.values {
            out.push_str(&format!("{},{},{}\n", csv_field(&self.name), csv_field(k), csv_field(v)));
        }
        out
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", self.status(), self.name)?;
        for (k, v) in &self.values {
            writeln!(f, "    {k} = {v}")?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "check,key,value";

/// RFC 4180 quoting.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `v` with 6 significant digits, in the shortest of plain or exponent form.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{e}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.41503749927884), "0.415037");
        assert_eq!(format_sig(26.438123), "26.4381");
        assert_eq!(format_sig(123456.7), "123457");
        assert_eq!(format_sig(1234567.0), "1.23457e6");
        assert_eq!(format_sig(-0.000012345678), "-0.0000123457");
        assert_eq!(format_sig(1.5e-9), "1.5e-9");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn failing_sub_check_fails_report() {
        let r = Report::new("x").check("a", true).check("b", false).num("v", 2.0);
        assert!(!r.passed);
        assert!(r.to_string().starts_with("[FAIL] x"));
        assert!(r.csv_rows().contains("x,b,FAIL"));
    }
}
