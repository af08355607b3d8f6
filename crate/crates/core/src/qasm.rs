//! OpenQASM 2.0 output and a reader for the subset we emit.

use std::fmt::Write;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateKind, Layout, Level, OneQubit, Qubit, QubitId, Register};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QasmError {
    #[error("MCT-level circuits must be lowered before export")]
    NotLowered,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

const LEVEL_TAG: &str = "// level: ";

fn name(layout: &Layout, q: Qubit) -> String {
    let id = layout.locate(q).expect("qubit inside layout");
    format!("{}[{}]", id.register.qasm_name(), id.offset)
}

/// Serializes a Toffoli- or elementary-level circuit. Negative controls are
/// written as X conjugation.
pub fn to_qasm(c: &Circuit) -> Result<String, QasmError> {
    if c.level() == Level::Mct && c.gates().iter().any(|g| g.kind == GateKind::Mct) {
        return Err(QasmError::NotLowered);
    }
    let l = c.layout();
    let mut s = String::with_capacity(c.len() * 24 + 128);
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let level = if c.level() == Level::Elementary { "elementary" } else { "toffoli" };
    let _ = writeln!(s, "{LEVEL_TAG}{level}");
    let _ = writeln!(s, "qreg in[{}];", l.n_inputs);
    if l.n_ancillas > 0 {
        let _ = writeln!(s, "qreg anc[{}];", l.n_ancillas);
    }
    if l.n_targets > 0 {
        let _ = writeln!(s, "qreg tgt[{}];", l.n_targets);
    }
    for g in c.gates() {
        let neg: Vec<Qubit> = g.controls.iter().filter(|c| !c.positive).map(|c| c.qubit).collect();
        for &q in &neg {
            let _ = writeln!(s, "x {};", name(l, q));
        }
        let t = name(l, g.target);
        let ctl: Vec<String> = g.controls.iter().map(|c| name(l, c.qubit)).collect();
        let _ = match g.kind {
            GateKind::X => writeln!(s, "x {t};"),
            GateKind::Cnot => writeln!(s, "cx {},{t};", ctl[0]),
            GateKind::Toffoli => writeln!(s, "ccx {},{},{t};", ctl[0], ctl[1]),
            GateKind::Single(op) => match op {
                OneQubit::H => writeln!(s, "h {t};"),
                OneQubit::T => writeln!(s, "t {t};"),
                OneQubit::Tdg => writeln!(s, "tdg {t};"),
                OneQubit::RyQuarter => writeln!(s, "ry(pi/4) {t};"),
                OneQubit::RyQuarterDg => writeln!(s, "ry(-pi/4) {t};"),
            },
            GateKind::Mct => unreachable!(),
        };
        for &q in &neg {
            let _ = writeln!(s, "x {};", name(l, q));
        }
    }
    Ok(s)
}

fn parse_operand(layout: &Layout, tok: &str, line: usize) -> Result<Qubit, QasmError> {
    let err = |msg: &str| QasmError::Parse { line, msg: format!("{msg}: `{tok}`") };
    let (reg, rest) = tok.split_once('[').ok_or_else(|| err("expected register[index]"))?;
    let idx: usize = rest.strip_suffix(']').and_then(|i| i.parse().ok()).ok_or_else(|| err("bad index"))?;
    let register = match reg.trim() {
        "in" => Register::Input,
        "anc" => Register::Ancilla,
        "tgt" => Register::Target,
        _ => return Err(err("unknown register")),
    };
    layout.resolve(QubitId { register, offset: idx }).ok_or_else(|| err("index out of range"))
}

/// Reads QASM produced by [`to_qasm`]. Without a level comment the result is
/// elementary-level when any non-permutation gate is present, Toffoli-level
/// otherwise.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let mut declared = None;
    let mut sizes = [None::<usize>; 3];
    let mut body: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        match raw.trim().strip_prefix(LEVEL_TAG) {
            Some("elementary") => declared = Some(Level::Elementary),
            Some("toffoli") => declared = Some(Level::Toffoli),
            Some(other) => return Err(QasmError::Parse { line, msg: format!("unknown level `{other}`") }),
            None => {}
        }
        let code = raw.split("//").next().unwrap_or("").trim();
        for stmt in code.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if stmt.starts_with("OPENQASM") || stmt.starts_with("include") {
                continue;
            }
            if let Some(decl) = stmt.strip_prefix("qreg") {
                let decl = decl.trim();
                let (reg, rest) =
                    decl.split_once('[').ok_or_else(|| QasmError::Parse { line, msg: format!("bad qreg `{decl}`") })?;
                let n: usize = rest
                    .strip_suffix(']')
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| QasmError::Parse { line, msg: format!("bad qreg size `{decl}`") })?;
                let slot = match reg.trim() {
                    "in" => 0,
                    "anc" => 1,
                    "tgt" => 2,
                    other => return Err(QasmError::Parse { line, msg: format!("unknown register `{other}`") }),
                };
                sizes[slot] = Some(n);
                continue;
            }
            body.push((line, stmt.to_string()));
        }
    }
    let layout = Layout {
        n_inputs: sizes[0].ok_or(QasmError::Parse { line: 0, msg: "missing qreg in".into() })?,
        n_ancillas: sizes[1].unwrap_or(0),
        n_targets: sizes[2].unwrap_or(0),
    };
    let mut gates = Vec::with_capacity(body.len());
    for (line, stmt) in body {
        let (op, args) = stmt
            .split_once(char::is_whitespace)
            .ok_or_else(|| QasmError::Parse { line, msg: format!("bad statement `{stmt}`") })?;
        let qs = args.split(',').map(|a| parse_operand(&layout, a.trim(), line)).collect::<Result<Vec<_>, _>>()?;
        let want = |n: usize| {
            if qs.len() == n {
                Ok(())
            } else {
                Err(QasmError::Parse { line, msg: format!("`{op}` takes {n} operands") })
            }
        };
        let g = match op.replace(' ', "").as_str() {
            "x" => want(1).map(|_| Gate::x(qs[0]))?,
            "cx" => want(2).map(|_| Gate::cnot(qs[0], qs[1]))?,
            "ccx" => want(3).map(|_| Gate::toffoli(qs[0], qs[1], qs[2]))?,
            "h" => want(1).map(|_| Gate::single(OneQubit::H, qs[0]))?,
            "t" => want(1).map(|_| Gate::single(OneQubit::T, qs[0]))?,
            "tdg" => want(1).map(|_| Gate::single(OneQubit::Tdg, qs[0]))?,
            "ry(pi/4)" => want(1).map(|_| Gate::single(OneQubit::RyQuarter, qs[0]))?,
            "ry(-pi/4)" => want(1).map(|_| Gate::single(OneQubit::RyQuarterDg, qs[0]))?,
            other => return Err(QasmError::Parse { line, msg: format!("unsupported gate `{other}`") }),
        };
        gates.push(g);
    }
    let elementary = gates.iter().any(|g| !g.is_permutation());
    let has_toffoli = gates.iter().any(|g| g.kind == GateKind::Toffoli);
    let level = declared.unwrap_or(if elementary { Level::Elementary } else { Level::Toffoli });
    if elementary && has_toffoli {
        return Err(QasmError::Parse { line: 0, msg: "mixes ccx with single-qubit rotations".into() });
    }
    Ok(Circuit::from_gates(layout, level, gates)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Control;

    #[test]
    fn header_and_gates() {
        let l = Layout::oracle(2, 1);
        let c = Circuit::from_gates(
            l,
            Level::Toffoli,
            vec![Gate::toffoli(Qubit(0), Qubit(1), Qubit(2)), Gate::cnot(Qubit(2), Qubit(3)), Gate::x(Qubit(0))],
        )
        .unwrap();
        let q = to_qasm(&c).unwrap();
        assert!(q.starts_with(
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n// level: toffoli\nqreg in[2];\nqreg anc[1];\nqreg tgt[1];\n"
        ));
        assert!(q.contains("ccx in[0],in[1],anc[0];\ncx anc[0],tgt[0];\nx in[0];\n"));
        assert_eq!(parse_qasm(&q).unwrap(), c);
    }

    #[test]
    fn negative_controls_become_x_pairs() {
        let l = Layout::oracle(2, 0);
        let g = Gate::cnot_pol(Control::neg(Qubit(0)), Qubit(2));
        let c = Circuit::from_gates(l, Level::Mct, vec![g]).unwrap();
        let q = to_qasm(&c).unwrap();
        assert!(q.ends_with("x in[0];\ncx in[0],tgt[0];\nx in[0];\n"));
    }

    #[test]
    fn rejects_bad_input() {
        let l = Layout::oracle(3, 1);
        let g = Gate::mct(
            vec![Control::pos(Qubit(0)), Control::pos(Qubit(1)), Control::pos(Qubit(2))],
            Qubit(4),
            vec![Qubit(3)],
        );
        let c = Circuit::from_gates(l, Level::Mct, vec![g]).unwrap();
        assert_eq!(to_qasm(&c), Err(QasmError::NotLowered));
        assert!(matches!(parse_qasm("qreg in[2];\ncx in[0],in[5];"), Err(QasmError::Parse { line: 2, .. })));
        assert!(matches!(parse_qasm("qreg in[2];\nswap in[0],in[1];"), Err(QasmError::Parse { .. })));
    }
}
