//! QASM 2.0-subset frontend for Sycamore-class circuits.
//!
//! Accepted dialect:
//!
//! * `OPENQASM 2.0;` header, optional `include "...";` lines (ignored)
//! * exactly one `qreg`, optional `creg`s
//! * gate calls `x_1_2`, `y_1_2`, `hz_1_2` (aliases `sx`, `sy`, `sw`),
//!   `rz(expr)`, `fsim(expr, expr)` on indexed operands `q[i]`
//! * angle expressions: decimal literals, `pi`, unary minus, `*`, `/`
//! * `barrier ...;` ends the current moment; without barriers a gate that
//!   touches an already-used qubit starts a new moment (greedy packing)
//! * `measure q[i] -> c[j];` is recorded on the circuit and otherwise ignored
//!
//! [`emit_qasm`] writes the canonical form of this dialect: register names
//! `q`/`c`, one statement per line, `barrier q;` between moments. Emission
//! drops empty moments (two adjacent barriers carry no information), so
//! `parse(emit(parse(text)))` is structurally equal to `parse(text)`.

use std::fmt;

use super::{Circuit, CircuitError, GateKind, GateOp};

/// Parse failure with 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QasmError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for QasmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for QasmError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Arrow,
    Star,
    Slash,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(v) => format!("number `{v}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, message: impl Into<String>) -> QasmError {
        QasmError { line: self.line, col: self.col, message: message.into() }
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        b
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, QasmError> {
        let mut out = Vec::new();
        loop {
            // skip whitespace and // comments
            loop {
                match self.peek() {
                    Some(b) if b.is_ascii_whitespace() => {
                        self.bump();
                    }
                    Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                        while let Some(b) = self.peek() {
                            if b == b'\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    _ => break,
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(b) = self.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match b {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        Tok::Minus
                    }
                }
                b'"' => {
                    self.bump();
                    let start = self.pos;
                    while let Some(b) = self.peek() {
                        if b == b'"' {
                            break;
                        }
                        if b == b'\n' {
                            return Err(self.err("unterminated string literal"));
                        }
                        self.bump();
                    }
                    if self.peek().is_none() {
                        return Err(self.err("unterminated string literal"));
                    }
                    let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                    self.bump(); // closing quote
                    Tok::Str(text)
                }
                b if b.is_ascii_digit() || b == b'.' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() || c == b'.' {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    // optional exponent
                    if matches!(self.peek(), Some(b'e') | Some(b'E')) {
                        let mark = self.pos;
                        self.bump();
                        if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                            self.bump();
                        }
                        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                                self.bump();
                            }
                        } else {
                            // not an exponent after all (e.g. `2.0e` would be
                            // malformed); report at the literal
                            self.pos = mark;
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let value: f64 = text.parse().map_err(|_| QasmError {
                        line,
                        col,
                        message: format!("malformed number literal `{text}`"),
                    })?;
                    Tok::Number(value)
                }
                b if b.is_ascii_alphabetic() || b == b'_' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Tok::Ident(text.to_owned())
                }
                other => {
                    return Err(self.err(format!("unexpected character `{}`", other as char)));
                }
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    idx: usize,
    qreg: Option<(String, usize)>,
    cregs: Vec<(String, usize)>,
    // greedy moment packing state
    pending: Vec<GateOp>,
    pending_used: Vec<bool>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.idx]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err_at(&self, spanned: &Spanned, message: impl Into<String>) -> QasmError {
        QasmError { line: spanned.1, col: spanned.2, message: message.into() }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Spanned, QasmError> {
        let t = self.next();
        if std::mem::discriminant(&t.0) == std::mem::discriminant(want) && &t.0 == want {
            Ok(t)
        } else {
            Err(self.err_at(&t, format!("expected {what}, found {}", t.0.describe())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), QasmError> {
        let t = self.next();
        match t.0 {
            Tok::Ident(name) => Ok((name, t.1, t.2)),
            other => Err(QasmError {
                line: t.1,
                col: t.2,
                message: format!("expected {what}, found {}", other.describe()),
            }),
        }
    }

    fn expect_uint(&mut self, what: &str) -> Result<usize, QasmError> {
        let t = self.next();
        match t.0 {
            Tok::Number(v) if v.fract() == 0.0 && v >= 0.0 && v <= usize::MAX as f64 => {
                Ok(v as usize)
            }
            other => Err(QasmError {
                line: t.1,
                col: t.2,
                message: format!("expected {what}, found {}", other.describe()),
            }),
        }
    }

    fn flush_moment(&mut self, circuit: &mut Circuit) -> Result<(), QasmError> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let ops = std::mem::take(&mut self.pending);
        self.pending_used.iter_mut().for_each(|u| *u = false);
        circuit
            .push_moment(ops)
            .map_err(|e| self.err_at(self.peek(), e.to_string()))
    }

    /// expr := unary (('*' | '/') unary)*
    fn parse_expr(&mut self) -> Result<f64, QasmError> {
        let mut acc = self.parse_unary()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.next();
                    acc *= self.parse_unary()?;
                }
                Tok::Slash => {
                    let at = self.next();
                    let rhs = self.parse_unary()?;
                    if rhs == 0.0 {
                        return Err(self.err_at(&at, "division by zero in angle expression"));
                    }
                    acc /= rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    /// unary := '-' unary | number | 'pi'
    fn parse_unary(&mut self) -> Result<f64, QasmError> {
        let t = self.next();
        match t.0 {
            Tok::Minus => Ok(-self.parse_unary()?),
            Tok::Number(v) => Ok(v),
            Tok::Ident(ref name) if name == "pi" => Ok(std::f64::consts::PI),
            other => Err(QasmError {
                line: t.1,
                col: t.2,
                message: format!("expected angle term, found {}", other.describe()),
            }),
        }
    }

    /// Indexed operand `name[i]` against a declared register of `size`.
    fn parse_indexed(
        &mut self,
        reg_kind: &str,
        declared: &[(String, usize)],
    ) -> Result<usize, QasmError> {
        let (name, line, col) = self.expect_ident(&format!("{reg_kind} register name"))?;
        let Some((_, size)) = declared.iter().find(|(n, _)| *n == name) else {
            return Err(QasmError {
                line,
                col,
                message: format!("unknown {reg_kind} register `{name}`"),
            });
        };
        self.expect(&Tok::LBracket, "`[`")?;
        let at = self.peek().clone();
        let index = self.expect_uint("register index")?;
        if index >= *size {
            return Err(self.err_at(
                &at,
                format!("index {index} out of range for `{name}[{size}]`"),
            ));
        }
        self.expect(&Tok::RBracket, "`]`")?;
        Ok(index)
    }

    fn qreg_declared(&self) -> Vec<(String, usize)> {
        self.qreg.iter().cloned().collect()
    }
}

fn resolve_gate(name: &str) -> Option<(&'static str, usize, usize)> {
    // (canonical name, param count, qubit count)
    match name {
        "x_1_2" | "sx" => Some(("x_1_2", 0, 1)),
        "y_1_2" | "sy" => Some(("y_1_2", 0, 1)),
        "hz_1_2" | "sw" => Some(("hz_1_2", 0, 1)),
        "rz" => Some(("rz", 1, 1)),
        "fsim" => Some(("fsim", 2, 2)),
        _ => None,
    }
}

/// Parses a QASM 2.0-subset program into a [`Circuit`].
///
/// Gate order is preserved; moments follow the greedy packing rule with
/// `barrier` as an explicit boundary. Errors report 1-based line/column.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut p = Parser {
        toks,
        idx: 0,
        qreg: None,
        cregs: Vec::new(),
        pending: Vec::new(),
        pending_used: Vec::new(),
    };

    // header
    let (kw, line, col) = p.expect_ident("`OPENQASM` header")?;
    if kw != "OPENQASM" {
        return Err(QasmError {
            line,
            col,
            message: format!("expected `OPENQASM` header, found `{kw}`"),
        });
    }
    let t = p.next();
    match t.0 {
        Tok::Number(v) if v == 2.0 => {}
        other => {
            return Err(QasmError {
                line: t.1,
                col: t.2,
                message: format!("only OPENQASM 2.0 is supported, found {}", other.describe()),
            });
        }
    }
    p.expect(&Tok::Semi, "`;`")?;

    let mut circuit: Option<Circuit> = None;

    loop {
        let head = p.next();
        let (tok, line, col) = (head.0.clone(), head.1, head.2);
        match tok {
            Tok::Eof => break,
            Tok::Ident(word) => match word.as_str() {
                "include" => {
                    let t = p.next();
                    if !matches!(t.0, Tok::Str(_)) {
                        return Err(p.err_at(&t, "expected file name string after `include`"));
                    }
                    p.expect(&Tok::Semi, "`;`")?;
                }
                "qreg" => {
                    if p.qreg.is_some() {
                        return Err(QasmError {
                            line,
                            col,
                            message: "only one qreg declaration is supported".into(),
                        });
                    }
                    let (name, ..) = p.expect_ident("register name")?;
                    p.expect(&Tok::LBracket, "`[`")?;
                    let size = p.expect_uint("register size")?;
                    p.expect(&Tok::RBracket, "`]`")?;
                    p.expect(&Tok::Semi, "`;`")?;
                    if size == 0 {
                        return Err(QasmError {
                            line,
                            col,
                            message: "qreg must declare at least one qubit".into(),
                        });
                    }
                    p.qreg = Some((name, size));
                    p.pending_used = vec![false; size];
                    circuit = Some(Circuit::new(size).map_err(|e| QasmError {
                        line,
                        col,
                        message: e.to_string(),
                    })?);
                }
                "creg" => {
                    let (name, ..) = p.expect_ident("register name")?;
                    p.expect(&Tok::LBracket, "`[`")?;
                    let size = p.expect_uint("register size")?;
                    p.expect(&Tok::RBracket, "`]`")?;
                    p.expect(&Tok::Semi, "`;`")?;
                    p.cregs.push((name, size));
                }
                "barrier" => {
                    let circuit = circuit.as_mut().ok_or(QasmError {
                        line,
                        col,
                        message: "statement before qreg declaration".into(),
                    })?;
                    // operands are accepted (bare register or indexed) and
                    // validated, but carry no structure beyond the boundary
                    if !matches!(p.peek().0, Tok::Semi) {
                        loop {
                            let (name, nline, ncol) = p.expect_ident("register operand")?;
                            let declared = p.qreg_declared();
                            let Some((_, size)) = declared.iter().find(|(n, _)| *n == name)
                            else {
                                return Err(QasmError {
                                    line: nline,
                                    col: ncol,
                                    message: format!("unknown qubit register `{name}`"),
                                });
                            };
                            if matches!(p.peek().0, Tok::LBracket) {
                                p.next();
                                let at = p.peek().clone();
                                let index = p.expect_uint("register index")?;
                                if index >= *size {
                                    return Err(p.err_at(
                                        &at,
                                        format!("index {index} out of range for `{name}[{size}]`"),
                                    ));
                                }
                                p.expect(&Tok::RBracket, "`]`")?;
                            }
                            if matches!(p.peek().0, Tok::Comma) {
                                p.next();
                            } else {
                                break;
                            }
                        }
                    }
                    p.expect(&Tok::Semi, "`;`")?;
                    p.flush_moment(circuit)?;
                }
                "measure" => {
                    let circuit = circuit.as_mut().ok_or(QasmError {
                        line,
                        col,
                        message: "statement before qreg declaration".into(),
                    })?;
                    let declared_q = p.qreg_declared();
                    let qubit = p.parse_indexed("qubit", &declared_q)?;
                    p.expect(&Tok::Arrow, "`->`")?;
                    let declared_c = p.cregs.clone();
                    if declared_c.is_empty() {
                        let t = p.peek().clone();
                        return Err(p.err_at(&t, "measure target requires a creg declaration"));
                    }
                    let clbit = p.parse_indexed("classical", &declared_c)?;
                    p.expect(&Tok::Semi, "`;`")?;
                    circuit.record_measurement(qubit, clbit);
                }
                gate_name => {
                    let circuit_ref = circuit.as_mut().ok_or(QasmError {
                        line,
                        col,
                        message: "gate call before qreg declaration".into(),
                    })?;
                    let Some((canonical, n_params, n_qubits)) = resolve_gate(gate_name) else {
                        return Err(QasmError {
                            line,
                            col,
                            message: format!("unknown gate name `{gate_name}`"),
                        });
                    };
                    // parameters
                    let mut params = Vec::new();
                    if matches!(p.peek().0, Tok::LParen) {
                        p.next();
                        loop {
                            params.push(p.parse_expr()?);
                            if matches!(p.peek().0, Tok::Comma) {
                                p.next();
                            } else {
                                break;
                            }
                        }
                        p.expect(&Tok::RParen, "`)`")?;
                    }
                    if params.len() != n_params {
                        return Err(QasmError {
                            line,
                            col,
                            message: format!(
                                "gate `{canonical}` takes {n_params} parameter(s), got {}",
                                params.len()
                            ),
                        });
                    }
                    // operands
                    let declared = p.qreg_declared();
                    let mut qubits = Vec::new();
                    loop {
                        qubits.push(p.parse_indexed("qubit", &declared)?);
                        if matches!(p.peek().0, Tok::Comma) {
                            p.next();
                        } else {
                            break;
                        }
                    }
                    p.expect(&Tok::Semi, "`;`")?;
                    if qubits.len() != n_qubits {
                        return Err(QasmError {
                            line,
                            col,
                            message: format!(
                                "gate `{canonical}` takes {n_qubits} qubit operand(s), got {}",
                                qubits.len()
                            ),
                        });
                    }
                    let kind = match canonical {
                        "x_1_2" => GateKind::SqrtX,
                        "y_1_2" => GateKind::SqrtY,
                        "hz_1_2" => GateKind::SqrtW,
                        "rz" => GateKind::Rz(params[0]),
                        "fsim" => GateKind::FSim { theta: params[0], phi: params[1] },
                        _ => unreachable!(),
                    };
                    let op = GateOp::new(kind, qubits).map_err(|e| QasmError {
                        line,
                        col,
                        message: e.to_string(),
                    })?;
                    // greedy packing: conflict starts a new moment
                    if op.qubits().iter().any(|&q| p.pending_used[q]) {
                        p.flush_moment(circuit_ref)?;
                    }
                    for &q in op.qubits() {
                        p.pending_used[q] = true;
                    }
                    p.pending.push(op);
                }
            },
            other => {
                return Err(QasmError {
                    line,
                    col,
                    message: format!("expected a statement, found {}", other.describe()),
                });
            }
        }
    }

    let mut circuit = circuit.ok_or(QasmError {
        line: 1,
        col: 1,
        message: "program has no qreg declaration".into(),
    })?;
    let ops = std::mem::take(&mut p.pending);
    if !ops.is_empty() {
        circuit.push_moment(ops).map_err(|e| QasmError {
            line: 1,
            col: 1,
            message: e.to_string(),
        })?;
    }
    Ok(circuit)
}

/// Emits the canonical QASM form of a circuit.
///
/// Empty moments are dropped (they have no textual carrier in the dialect);
/// `Unitary1Q` gates cannot be expressed and yield an error.
pub fn emit_qasm(circuit: &Circuit) -> Result<String, CircuitError> {
    use std::fmt::Write;

    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits());
    let n_clbits = circuit
        .measurements()
        .iter()
        .map(|&(_, c)| c + 1)
        .max()
        .unwrap_or(0);
    if n_clbits > 0 {
        let _ = writeln!(out, "creg c[{n_clbits}];");
    }
    let mut first = true;
    for moment in circuit.moments() {
        if moment.is_empty() {
            continue;
        }
        if !first {
            out.push_str("barrier q;\n");
        }
        first = false;
        for op in moment.ops() {
            match *op.kind() {
                GateKind::SqrtX => {
                    let _ = writeln!(out, "x_1_2 q[{}];", op.qubits()[0]);
                }
                GateKind::SqrtY => {
                    let _ = writeln!(out, "y_1_2 q[{}];", op.qubits()[0]);
                }
                GateKind::SqrtW => {
                    let _ = writeln!(out, "hz_1_2 q[{}];", op.qubits()[0]);
                }
                GateKind::Rz(phi) => {
                    let _ = writeln!(out, "rz({phi}) q[{}];", op.qubits()[0]);
                }
                GateKind::FSim { theta, phi } => {
                    let _ = writeln!(
                        out,
                        "fsim({theta},{phi}) q[{}],q[{}];",
                        op.qubits()[0],
                        op.qubits()[1]
                    );
                }
                GateKind::Unitary1Q(_) => return Err(CircuitError::UnsupportedInDialect),
            }
        }
    }
    for &(q, c) in circuit.measurements() {
        let _ = writeln!(out, "measure q[{q}] -> c[{c}];");
    }
    Ok(out)
}
