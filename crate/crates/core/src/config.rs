//! Flat key-value model configuration files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment. Keys:
//!
//! ```text
//! nu = 1.0
//! rho = 1.0
//! kernel.type = exponential        # exponential|powerlaw|boxcar|tabulated|zero
//! kernel.a = 1.0                   # exponential amplitude
//! kernel.b = 1.0                   # exponential decay
//! kernel.c = 3.0                   # power-law amplitude
//! kernel.p = 4.0                   # power-law exponent (> 2)
//! kernel.h = 2.0                   # box-car height
//! kernel.w = 0.5                   # box-car width
//! kernel.knots = 0:1,0.5:0.8,2:0   # tabulated s:g pairs
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Kernel, ModelParams};

/// Parse a model from config file text.
pub fn parse_model(text: &str) -> Result<ModelParams> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "config line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }

    let nu = require_f64(&map, "nu")?;
    let rho = require_f64(&map, "rho")?;
    let kind = map
        .get("kernel.type")
        .ok_or_else(|| Error::InvalidParameter("missing key `kernel.type`".into()))?;

    let kernel = match kind.as_str() {
        "exponential" => {
            Kernel::exponential(require_f64(&map, "kernel.a")?, require_f64(&map, "kernel.b")?)?
        }
        "powerlaw" => {
            Kernel::power_law(require_f64(&map, "kernel.c")?, require_f64(&map, "kernel.p")?)?
        }
        "boxcar" => {
            Kernel::box_car(require_f64(&map, "kernel.h")?, require_f64(&map, "kernel.w")?)?
        }
        "tabulated" => {
            let spec = map.get("kernel.knots").ok_or_else(|| {
                Error::InvalidParameter("missing key `kernel.knots`".into())
            })?;
            let mut knots = Vec::new();
            for part in spec.split(',') {
                let (s, g) = part.trim().split_once(':').ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "kernel.knots entry `{part}` must look like `s:g`"
                    ))
                })?;
                knots.push((parse_f64(s.trim(), "kernel.knots")?, parse_f64(g.trim(), "kernel.knots")?));
            }
            Kernel::tabulated(knots)?
        }
        "zero" => Kernel::zero(),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown kernel.type `{other}` (expected exponential|powerlaw|boxcar|tabulated|zero)"
            )))
        }
    };

    ModelParams::new(nu, rho, kernel)
}

fn require_f64(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::InvalidParameter(format!("missing key `{key}`")))?;
    parse_f64(raw, key)
}

fn parse_f64(raw: &str, key: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("key `{key}`: `{raw}` is not a number")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_standard_model() {
        let text = "# standard model\nnu = 1.0\nrho = 1.0\nkernel.type = exponential\nkernel.a = 1.0\nkernel.b = 1.0\n";
        let params = parse_model(text).unwrap();
        assert_eq!(params.nu, 1.0);
        assert_eq!(params.rho, 1.0);
        assert_eq!(params.kernel, Kernel::exponential(1.0, 1.0).unwrap());
    }

    #[test]
    fn parses_all_kernel_kinds() {
        let pl = parse_model("nu=0\nrho=2\nkernel.type=powerlaw\nkernel.c=3\nkernel.p=4").unwrap();
        assert_eq!(pl.kernel, Kernel::power_law(3.0, 4.0).unwrap());
        let bc = parse_model("nu=1\nrho=1\nkernel.type=boxcar\nkernel.h=2\nkernel.w=0.5").unwrap();
        assert_eq!(bc.kernel, Kernel::box_car(2.0, 0.5).unwrap());
        let tb =
            parse_model("nu=1\nrho=1\nkernel.type=tabulated\nkernel.knots = 0:1, 1:0.5, 2:0").unwrap();
        assert_eq!(
            tb.kernel,
            Kernel::tabulated(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]).unwrap()
        );
        let z = parse_model("nu=1\nrho=0\nkernel.type=zero").unwrap();
        assert_eq!(z.kernel, Kernel::Zero);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_model("nu 1").is_err());
        assert!(parse_model("nu=1\nrho=1").is_err()); // no kernel.type
        assert!(parse_model("nu=1\nrho=1\nkernel.type=fancy").is_err());
        assert!(parse_model("nu=abc\nrho=1\nkernel.type=zero").is_err());
        assert!(parse_model("nu=1\nrho=1\nkernel.type=exponential\nkernel.a=1").is_err());
        assert!(
            parse_model("nu=1\nrho=1\nkernel.type=tabulated\nkernel.knots=0;1").is_err()
        );
    }
}
