use std::collections::HashMap;

use thiserror::Error;

use super::ast::Expr;
use super::jet::{eval, eval_jet2, EvalError, Jet2};
use super::parser::{is_valid_parameter_name, parse_expression, ParseError};

/// Closed parameter interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A parsed surface definition: four coordinate expressions in two
/// parameters, with domain, periodicity and normal-frame rotation angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionSpec {
    pub name: String,
    pub params: [String; 2],
    pub coords: [Expr; 4],
    pub domain: [Interval; 2],
    pub periodic: [bool; 2],
    /// Rotation angle (radians) applied to the normal pair; `Num(0)` when
    /// the file does not set one.
    pub frame_rotation: Expr,
}

impl ImmersionSpec {
    pub fn position_jets(&self, s: [f64; 2]) -> Result<[Jet2; 4], EvalError> {
        Ok([
            eval_jet2(&self.coords[0], s)?,
            eval_jet2(&self.coords[1], s)?,
            eval_jet2(&self.coords[2], s)?,
            eval_jet2(&self.coords[3], s)?,
        ])
    }

    pub fn frame_rotation_at(&self, s: [f64; 2]) -> Result<f64, EvalError> {
        eval(&self.frame_rotation, s)
    }

    pub fn has_frame_rotation(&self) -> bool {
        self.frame_rotation != Expr::Num(0.0)
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic[0] && self.periodic[1]
    }

    pub fn contains(&self, s: [f64; 2]) -> bool {
        self.domain[0].contains(s[0]) && self.domain[1].contains(s[1])
    }

    /// `n1 x n2` lattice of interior points, `lo + (k+1)/(n+1) (hi - lo)`.
    pub fn interior_lattice(&self, n1: usize, n2: usize) -> Vec<[f64; 2]> {
        let [d1, d2] = self.domain;
        let mut points = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            let u = d1.lo + (i + 1) as f64 / (n1 + 1) as f64 * d1.width();
            for j in 0..n2 {
                let v = d2.lo + (j + 1) as f64 / (n2 + 1) as f64 * d2.width();
                points.push([u, v]);
            }
        }
        points
    }

    /// Canonical text form, readable by [`parse_immersion_file`].
    pub fn to_file_string(&self) -> String {
        let p = &self.params;
        let mut out = format!("name: {}\nparams: {} {}\n", self.name, p[0], p[1]);
        for (k, c) in self.coords.iter().enumerate() {
            out.push_str(&format!("x{}: {}\n", k + 1, c.display(p)));
        }
        out.push_str(&format!(
            "domain: {} {} {} {} {} {}\nperiodic: {} {}\n",
            p[0],
            self.domain[0].lo,
            self.domain[0].hi,
            p[1],
            self.domain[1].lo,
            self.domain[1].hi,
            self.periodic[0],
            self.periodic[1]
        ));
        if self.has_frame_rotation() {
            out.push_str(&format!("frame_rotation: {}\n", self.frame_rotation.display(p)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImmersionError {
    #[error("missing key: {0}")]
    MissingKey(String),
    #[error("line {line}: duplicate key: {key}")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: unknown key: {key}")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: expected `key: value`")]
    MalformedLine { line: usize },
    #[error("line {line}: malformed params: {reason}")]
    MalformedParams { line: usize, reason: String },
    #[error("line {line}: malformed domain: {reason}")]
    MalformedDomain { line: usize, reason: String },
    #[error("line {line}: malformed periodic flags: expected `true|false true|false`")]
    MalformedPeriodic { line: usize },
    #[error("line {line}: in `{key}`: {source}")]
    Expression {
        key: String,
        line: usize,
        #[source]
        source: ParseError,
    },
}

const REQUIRED: [&str; 8] = ["name", "params", "x1", "x2", "x3", "x4", "domain", "periodic"];
const OPTIONAL: [&str; 1] = ["frame_rotation"];

/// Parses the line-oriented `key: value` immersion format.
pub fn parse_immersion_file(text: &str) -> Result<ImmersionSpec, ImmersionError> {
    let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once(':').ok_or(ImmersionError::MalformedLine { line })?;
        let key = key.trim();
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(ImmersionError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
        if entries.insert(key, (line, value.trim())).is_some() {
            return Err(ImmersionError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
    }
    for key in REQUIRED {
        if !entries.contains_key(key) {
            return Err(ImmersionError::MissingKey(key.to_string()));
        }
    }
    let get = |key: &str| entries[key];

    let (_, name) = get("name");
    let (params_line, params_text) = get("params");
    let params: Vec<&str> = params_text.split_whitespace().collect();
    if params.len() != 2 {
        return Err(ImmersionError::MalformedParams {
            line: params_line,
            reason: format!("expected two identifiers, found {}", params.len()),
        });
    }
    for p in &params {
        if !is_valid_parameter_name(p) {
            return Err(ImmersionError::MalformedParams {
                line: params_line,
                reason: format!("`{p}` is not a usable parameter name"),
            });
        }
    }
    if params[0] == params[1] {
        return Err(ImmersionError::MalformedParams {
            line: params_line,
            reason: "parameter names must differ".into(),
        });
    }
    let names = [params[0], params[1]];

    let expr = |key: &str| -> Result<Expr, ImmersionError> {
        let (line, text) = get(key);
        parse_expression(text, names).map_err(|source| ImmersionError::Expression {
            key: key.to_string(),
            line,
            source,
        })
    };
    let coords = [expr("x1")?, expr("x2")?, expr("x3")?, expr("x4")?];
    let frame_rotation = match entries.get("frame_rotation") {
        Some(_) => expr("frame_rotation")?,
        None => Expr::Num(0.0),
    };

    let (domain_line, domain_text) = get("domain");
    let domain = parse_domain(domain_text, names, domain_line)?;

    let (periodic_line, periodic_text) = get("periodic");
    let flags: Vec<&str> = periodic_text.split_whitespace().collect();
    let flag = |t: &str| match t {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    };
    let periodic = match flags.as_slice() {
        [a, b] => match (flag(a), flag(b)) {
            (Some(a), Some(b)) => [a, b],
            _ => return Err(ImmersionError::MalformedPeriodic { line: periodic_line }),
        },
        _ => return Err(ImmersionError::MalformedPeriodic { line: periodic_line }),
    };

    Ok(ImmersionSpec {
        name: name.to_string(),
        params: [names[0].to_string(), names[1].to_string()],
        coords,
        domain,
        periodic,
        frame_rotation,
    })
}

fn parse_domain(text: &str, names: [&str; 2], line: usize) -> Result<[Interval; 2], ImmersionError> {
    let malformed = |reason: String| ImmersionError::MalformedDomain { line, reason };
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 6 {
        return Err(malformed(format!(
            "expected `<p1> lo hi <p2> lo hi`, found {} fields",
            tokens.len()
        )));
    }
    let endpoint = |t: &str| -> Result<f64, ImmersionError> {
        let e = parse_expression(t, names).map_err(|e| malformed(format!("`{t}`: {e}")))?;
        if !e.is_constant() {
            return Err(malformed(format!("endpoint `{t}` depends on a parameter")));
        }
        let v = eval(&e, [0.0, 0.0]).map_err(|e| malformed(e.to_string()))?;
        if !v.is_finite() {
            return Err(malformed(format!("endpoint `{t}` is not finite")));
        }
        Ok(v)
    };
    let mut domain = [Interval { lo: 0.0, hi: 0.0 }; 2];
    for (k, chunk) in tokens.chunks(3).enumerate() {
        if chunk[0] != names[k] {
            return Err(malformed(format!(
                "expected parameter `{}`, found `{}`",
                names[k], chunk[0]
            )));
        }
        let (lo, hi) = (endpoint(chunk[1])?, endpoint(chunk[2])?);
        if lo >= hi {
            return Err(malformed(format!("empty interval [{lo}, {hi}] for `{}`", names[k])));
        }
        domain[k] = Interval { lo, hi };
    }
    Ok(domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const CLIFFORD: &str = include_str!("../../../../corpus/clifford.imm");

    #[test]
    fn bundled_clifford_torus() {
        let spec = parse_immersion_file(CLIFFORD).unwrap();
        assert_eq!(spec.periodic, [true, true]);
        for d in spec.domain {
            assert_eq!(d.lo, 0.0);
            assert!((d.hi - 2.0 * PI).abs() < 1e-15);
        }
        assert_eq!(spec.frame_rotation, Expr::Num(0.0));
    }

    #[test]
    fn missing_coordinate_key() {
        let text = CLIFFORD
            .lines()
            .filter(|l| !l.starts_with("x3"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = parse_immersion_file(&text).unwrap_err();
        assert_eq!(err.to_string(), "missing key: x3");
    }

    #[test]
    fn frame_rotation_is_first_parameter() {
        let text = format!("{CLIFFORD}\nframe_rotation: u\n");
        let spec = parse_immersion_file(&text).unwrap();
        assert_eq!(spec.frame_rotation, Expr::Param(0));
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        let text = format!("{CLIFFORD}\nx1: u\n");
        assert!(matches!(
            parse_immersion_file(&text),
            Err(ImmersionError::DuplicateKey { .. })
        ));
        let text = format!("{CLIFFORD}\ncolour: red\n");
        assert!(matches!(
            parse_immersion_file(&text),
            Err(ImmersionError::UnknownKey { .. })
        ));
    }

    #[test]
    fn malformed_domains() {
        let base = "name: t\nparams: u v\nx1: u\nx2: v\nx3: 0\nx4: 0\nperiodic: false false\n";
        for bad in [
            "domain: u 0 1 v 0",
            "domain: u 1 0 v 0 1",
            "domain: v 0 1 u 0 1",
            "domain: u 0 v v 0 1",
            "domain: u 0 1/0 v 0 1",
        ] {
            let err = parse_immersion_file(&format!("{base}{bad}\n")).unwrap_err();
            assert!(
                matches!(err, ImmersionError::MalformedDomain { line: 8, .. }),
                "{bad}: {err}"
            );
        }
        let ok = parse_immersion_file(&format!("{base}domain: u -pi pi v 0 2*pi\n")).unwrap();
        assert_eq!(ok.domain[0].lo, -PI);
    }

    #[test]
    fn expression_errors_carry_line_numbers() {
        let text = "name: t\nparams: u v\nx1: u\nx2: v +\nx3: 0\nx4: 0\ndomain: u 0 1 v 0 1\nperiodic: false false\n";
        let err = parse_immersion_file(text).unwrap_err();
        assert!(matches!(err, ImmersionError::Expression { line: 4, .. }), "{err}");
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = format!("{CLIFFORD}\nframe_rotation: 2*u - v/3\n");
        let spec = parse_immersion_file(&text).unwrap();
        let again = parse_immersion_file(&spec.to_file_string()).unwrap();
        assert_eq!(spec, again);
    }
}
