//! Parsing of command-line value syntaxes.

use std::path::Path;

use anonmet::io::{load_operator, operator_from_json};
use anonmet::qmat::{c, ComplexMatrix, HermitianOperator, C64};
use anonmet::tolerance::Tolerances;

use crate::commands::CliError;

/// `diag:0,1` | `proj:k` | `pauli:x` | `file:PATH` | `json:ROWS`.
pub fn parse_operator(spec: &str, dim: usize) -> Result<HermitianOperator, CliError> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::input(format!("operator `{spec}` needs a `kind:` prefix")))?;
    let op = match kind {
        "diag" => {
            let values = rest
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::input(format!("bad diagonal `{rest}`: {e}")))?;
            HermitianOperator::diagonal(&values)
        }
        "proj" => {
            let k: usize = rest
                .trim()
                .parse()
                .map_err(|e| CliError::input(format!("bad projector index `{rest}`: {e}")))?;
            if k >= dim {
                return Err(CliError::input(format!("projector index {k} out of range for dimension {dim}")));
            }
            HermitianOperator::projector(dim, k)
        }
        "pauli" => {
            let z = C64::new(0.0, 0.0);
            let entries = match rest {
                "x" => [z, c(1.0, 0.0), c(1.0, 0.0), z],
                "y" => [z, c(0.0, -1.0), c(0.0, 1.0), z],
                "z" => [c(1.0, 0.0), z, z, c(-1.0, 0.0)],
                other => return Err(CliError::input(format!("unknown Pauli `{other}`"))),
            };
            HermitianOperator::new(ComplexMatrix::from_row_slice(2, 2, &entries))?
        }
        "file" => load_operator(Path::new(rest))?,
        "json" => operator_from_json(rest)?,
        other => return Err(CliError::input(format!("unknown operator kind `{other}`"))),
    };
    if op.dim() != dim {
        return Err(CliError::input(format!(
            "operator `{spec}` has dimension {} but the subsystem has {dim}",
            op.dim()
        )));
    }
    Ok(op)
}

/// `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<C64, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| CliError::input(format!("bad number `{x}`: {e}")))
    };
    match parts.as_slice() {
        [re] => Ok(c(num(re)?, 0.0)),
        [re, im] => Ok(c(num(re)?, num(im)?)),
        _ => Err(CliError::input(format!("bad complex number `{s}`"))),
    }
}

/// `key=value` with a numeric value.
pub fn parse_param(s: &str) -> Result<(String, f64), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::input(format!("parameter `{s}` must be key=value")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| CliError::input(format!("bad value in `{s}`: {e}")))?;
    Ok((k.trim().to_string(), v))
}

/// Applies `--tol` items to the defaults.
pub fn tolerances_from(items: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::DEFAULT;
    for item in items.iter().filter(|s| !s.trim().is_empty()) {
        let (key, value) = match item.split_once('=') {
            Some(_) => parse_param(item)?,
            None => (
                "holds".to_string(),
                item.trim()
                    .parse()
                    .map_err(|e| CliError::input(format!("bad tolerance `{item}`: {e}")))?,
            ),
        };
        tol.set(&key, value).map_err(CliError::input)?;
    }
    Ok(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operators() {
        assert_eq!(parse_operator("diag:0,1", 2).unwrap(), HermitianOperator::diagonal(&[0.0, 1.0]));
        assert_eq!(parse_operator("proj:1", 3).unwrap(), HermitianOperator::projector(3, 1));
        assert!(parse_operator("pauli:y", 2).is_ok());
        assert!(parse_operator("diag:0,1", 3).is_err());
        assert!(parse_operator("proj:3", 3).is_err());
        assert!(parse_operator("nonsense", 2).is_err());
        assert!(parse_operator("json:[[[0,0],[1,0]],[[1,0],[0,0]]]", 2).is_ok());
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_complex("0.5,-1").unwrap(), c(0.5, -1.0));
        assert_eq!(parse_param("a=0.2").unwrap(), ("a".into(), 0.2));
        assert!(parse_param("a").is_err());
    }

    #[test]
    fn tolerance_items() {
        let t = tolerances_from(&["1e-10".into(), "fails=1e-5".into()]).unwrap();
        assert_eq!((t.holds, t.fails), (1e-10, 1e-5));
        assert!(tolerances_from(&["nope=1".into()]).is_err());
    }
}
