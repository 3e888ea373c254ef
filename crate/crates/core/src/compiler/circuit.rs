use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A logical gate. Dot indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateSpec {
    Ry { dot: usize, angle: f64 },
    Rz { dot: usize, angle: f64 },
    H { dot: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    /// `exp(-i phase Z Z / 2)`.
    Zz { a: usize, b: usize, phase: f64 },
}

impl GateSpec {
    pub fn dots(&self) -> Vec<usize> {
        match *self {
            GateSpec::Ry { dot, .. } | GateSpec::Rz { dot, .. } | GateSpec::H { dot } => vec![dot],
            GateSpec::Cz { a, b } | GateSpec::Zz { a, b, .. } => vec![a, b],
            GateSpec::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.dots().len() == 2
    }

    pub fn validate(&self, n_dots: usize) -> Result<()> {
        let dots = self.dots();
        if let Some(d) = dots.iter().find(|&&d| d >= n_dots) {
            return Err(Error::Gate(format!("{self}: dot {} out of range 1..={n_dots}", d + 1)));
        }
        if dots.len() == 2 && dots[0].abs_diff(dots[1]) != 1 {
            return Err(Error::Gate(format!("{self}: dots must be adjacent")));
        }
        let angle = match *self {
            GateSpec::Ry { angle, .. } | GateSpec::Rz { angle, .. } => angle,
            GateSpec::Zz { phase, .. } => phase,
            _ => 0.0,
        };
        if !angle.is_finite() {
            return Err(Error::Gate(format!("{self}: angle must be finite")));
        }
        Ok(())
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateSpec::Ry { dot, angle } => write!(f, "RY {} {}", dot + 1, angle),
            GateSpec::Rz { dot, angle } => write!(f, "RZ {} {}", dot + 1, angle),
            GateSpec::H { dot } => write!(f, "H {}", dot + 1),
            GateSpec::Cz { a, b } => write!(f, "CZ {} {}", a + 1, b + 1),
            GateSpec::Cnot { control, target } => write!(f, "CNOT {} {}", control + 1, target + 1),
            GateSpec::Zz { a, b, phase } => write!(f, "ZZ {} {} {}", a + 1, b + 1, phase),
        }
    }
}

/// Ordered groups of gates; gates inside a group act in parallel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub groups: Vec<Vec<GateSpec>>,
}

impl Circuit {
    pub fn new() -> Self {
        Circuit::default()
    }

    /// Appends a group of parallel gates.
    pub fn then(mut self, group: impl Into<Vec<GateSpec>>) -> Self {
        self.groups.push(group.into());
        self
    }

    pub fn extend(mut self, other: &Circuit) -> Self {
        self.groups.extend(other.groups.iter().cloned());
        self
    }

    /// Parses the text format: groups separated by `;` or newlines, parallel
    /// gates inside a group separated by `|`, dots numbered from 1.
    ///
    /// ```text
    /// H 2 | H 4; CNOT 2 1; CNOT 4 3
    /// RY 5 pi/2; ZZ 1 2 -pi/4; RZ 3 0.25
    /// ```
    pub fn parse(text: &str) -> Result<Circuit> {
        let mut groups = Vec::new();
        for (gi, raw) in text.split([';', '\n']).enumerate() {
            let raw = raw.split('#').next().unwrap_or("").trim();
            if raw.is_empty() {
                continue;
            }
            let group = raw
                .split('|')
                .map(|g| parse_gate(g.trim()).map_err(|message| Error::Syntax { group: gi + 1, message }))
                .collect::<Result<Vec<_>>>()?;
            groups.push(group);
        }
        Ok(Circuit { groups })
    }

    pub fn validate(&self, n_dots: usize) -> Result<()> {
        for g in &self.groups {
            validate_group(g, n_dots)?;
        }
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let groups: Vec<String> = self
            .groups
            .iter()
            .map(|g| g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" | "))
            .collect();
        f.write_str(&groups.join("; "))
    }
}

/// A group is either single-qubit gates on distinct dots or exactly one
/// two-qubit gate (strong-exchange modes are mutually exclusive).
pub(crate) fn validate_group(group: &[GateSpec], n_dots: usize) -> Result<()> {
    for g in group {
        g.validate(n_dots)?;
    }
    let two = group.iter().filter(|g| g.is_two_qubit()).count();
    if two > 1 {
        return Err(Error::Conflict(format!("{two} two-qubit gates in one group")));
    }
    if two == 1 && group.len() > 1 {
        return Err(Error::Conflict("a two-qubit gate must be alone in its group".into()));
    }
    let mut seen = vec![false; n_dots];
    for g in group {
        for d in g.dots() {
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::Conflict(format!("dot {} used twice in one group", d + 1)));
            }
        }
    }
    Ok(())
}

fn parse_dot(tok: Option<&str>) -> std::result::Result<usize, String> {
    let tok = tok.ok_or("missing dot index")?;
    match tok.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(d - 1),
        _ => Err(format!("invalid dot `{tok}` (dots are numbered from 1)")),
    }
}

/// Accepts plain numbers and `[-][k*]pi[/m]`.
fn parse_angle(tok: Option<&str>) -> std::result::Result<f64, String> {
    let tok = tok.ok_or("missing angle")?;
    if let Ok(x) = tok.parse::<f64>() {
        return Ok(x);
    }
    let bad = || format!("invalid angle `{tok}`");
    let (sign, rest) = match tok.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, tok),
    };
    let (num, den) = match rest.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (rest, 1.0),
    };
    let k = match num {
        "pi" => 1.0,
        _ => num
            .strip_suffix("*pi")
            .and_then(|k| k.parse::<f64>().ok())
            .ok_or_else(bad)?,
    };
    Ok(sign * k * PI / den)
}

fn parse_gate(text: &str) -> std::result::Result<GateSpec, String> {
    let mut it = text.split_whitespace();
    let name = it.next().ok_or("empty gate")?.to_ascii_uppercase();
    let gate = match name.as_str() {
        "RY" => GateSpec::Ry { dot: parse_dot(it.next())?, angle: parse_angle(it.next())? },
        "RZ" => GateSpec::Rz { dot: parse_dot(it.next())?, angle: parse_angle(it.next())? },
        "H" => GateSpec::H { dot: parse_dot(it.next())? },
        "CZ" => GateSpec::Cz { a: parse_dot(it.next())?, b: parse_dot(it.next())? },
        "CNOT" | "CX" => GateSpec::Cnot { control: parse_dot(it.next())?, target: parse_dot(it.next())? },
        "ZZ" => GateSpec::Zz { a: parse_dot(it.next())?, b: parse_dot(it.next())?, phase: parse_angle(it.next())? },
        other => return Err(format!("unknown gate `{other}`")),
    };
    if let Some(extra) = it.next() {
        return Err(format!("unexpected token `{extra}` after {gate}"));
    }
    Ok(gate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bell_preparation() {
        let c = Circuit::parse("H 2 | H 4; CNOT 2 1; CNOT 4 3").unwrap();
        assert_eq!(
            c.groups,
            vec![
                vec![GateSpec::H { dot: 1 }, GateSpec::H { dot: 3 }],
                vec![GateSpec::Cnot { control: 1, target: 0 }],
                vec![GateSpec::Cnot { control: 3, target: 2 }],
            ]
        );
        c.validate(5).unwrap();
    }

    #[test]
    fn parses_angles() {
        let c = Circuit::parse("RY 5 pi/2\nRZ 1 -pi\nZZ 1 2 0.5\nRY 2 3*pi/4").unwrap();
        assert_eq!(c.groups[0][0], GateSpec::Ry { dot: 4, angle: PI / 2.0 });
        assert_eq!(c.groups[1][0], GateSpec::Rz { dot: 0, angle: -PI });
        assert_eq!(c.groups[2][0], GateSpec::Zz { a: 0, b: 1, phase: 0.5 });
        assert!((match c.groups[3][0] {
            GateSpec::Ry { angle, .. } => angle,
            _ => 0.0,
        } - 0.75 * PI)
            .abs()
            < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        let c = Circuit::parse("H 2 | H 4; CNOT 2 1; ZZ 3 4 1.25").unwrap();
        assert_eq!(Circuit::parse(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn syntax_errors_name_the_group() {
        match Circuit::parse("H 1; FOO 2") {
            Err(Error::Syntax { group, .. }) => assert_eq!(group, 2),
            other => panic!("{other:?}"),
        }
        assert!(Circuit::parse("H 0").is_err());
        assert!(Circuit::parse("CNOT 1").is_err());
        assert!(Circuit::parse("H 1 2").is_err());
    }

    #[test]
    fn two_simultaneous_two_qubit_gates_conflict() {
        let c = Circuit::parse("CZ 1 2 | CZ 3 4").unwrap();
        assert!(matches!(c.validate(5), Err(Error::Conflict(_))));
    }

    #[test]
    fn repeated_dot_conflicts() {
        let c = Circuit::parse("H 1 | RY 1 0.3").unwrap();
        assert!(matches!(c.validate(5), Err(Error::Conflict(_))));
    }

    #[test]
    fn non_adjacent_pair_is_rejected() {
        let c = Circuit::parse("CNOT 1 3").unwrap();
        assert!(matches!(c.validate(5), Err(Error::Gate(_))));
        assert!(Circuit::parse("H 6").unwrap().validate(5).is_err());
    }
}
