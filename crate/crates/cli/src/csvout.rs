//! Curve CSV: fixed header, LF line endings, 12 significant digits.

use std::io::Write;

use qcd_core::montecarlo::SimEstimate;

pub const HEADER: [&str; 10] = [
    "policy",
    "param",
    "trials",
    "pfa",
    "pfa_se",
    "add",
    "add_se",
    "risk",
    "risk_se",
    "mean_samples",
];

/// Shortest decimal with at most 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub struct CurveWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CurveWriter<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        inner.write_record(HEADER)?;
        Ok(Self { inner })
    }

    pub fn estimate(&mut self, policy: &str, param: f64, e: &SimEstimate) -> csv::Result<()> {
        self.inner.write_record([
            policy.to_string(),
            sig12(param),
            e.trials.to_string(),
            sig12(e.pfa),
            sig12(e.pfa_se),
            sig12(e.add),
            sig12(e.add_se),
            sig12(e.risk),
            sig12(e.risk_se),
            sig12(e.mean_samples),
        ])
    }

    /// A reference row carrying only a delay value.
    pub fn bound(&mut self, policy: &str, param: f64, add: f64) -> csv::Result<()> {
        let mut rec = vec![String::new(); HEADER.len()];
        rec[0] = policy.to_string();
        rec[1] = sig12(param);
        rec[5] = sig12(add);
        self.inner.write_record(&rec)
    }

    pub fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig12(0.1), "0.1");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(96.49672454321987), "96.4967245432");
        assert_eq!(sig12(200000.0), "200000");
        assert_eq!(sig12(1e-7), "1e-7");
        assert_eq!(sig12(-2.5e20), "-2.5e20");
        assert_eq!(sig12(0.00012345678901234), "0.000123456789012");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn header_and_line_endings() {
        let mut buf = Vec::new();
        let mut w = CurveWriter::new(&mut buf).unwrap();
        w.bound("greedy-bound", 0.01, 12.5).unwrap();
        w.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "policy,param,trials,pfa,pfa_se,add,add_se,risk,risk_se,mean_samples\n\
             greedy-bound,0.01,,,,12.5,,,,\n"
        );
    }
}
