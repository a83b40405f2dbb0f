use super::lexer::{tokenize, Tok, Token};
use super::{Circuit, GateApp, Measure, QasmError, Register};
use crate::gates::GateKind;

/// Parse OpenQASM 2.0 source into a [`Circuit`].
///
/// Unsupported statements are errors; nothing is skipped silently except
/// `include` lines and `barrier` markers.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let tokens = tokenize(text)?;
    Parser {
        toks: &tokens,
        pos: 0,
        circuit: Circuit {
            num_qubits: 0,
            num_clbits: 0,
            qregs: Vec::new(),
            cregs: Vec::new(),
            ops: Vec::new(),
            measures: Vec::new(),
        },
    }
    .program()
}

enum Arg {
    Whole {
        name: String,
        line: usize,
        col: usize,
    },
    Bit {
        name: String,
        index: usize,
        line: usize,
        col: usize,
    },
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    circuit: Circuit,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err(&self, reason: impl Into<String>) -> QasmError {
        let (l, c) = self.here();
        QasmError::syntax(l, c, reason)
    }

    fn next(&mut self) -> Result<&'a Token, QasmError> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), QasmError> {
        if self.eat(&want) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        match &self.next()?.tok {
            Tok::Ident(s) => Ok(s.clone()),
            _ => {
                self.pos -= 1;
                Err(self.err("expected identifier"))
            }
        }
    }

    fn int(&mut self) -> Result<usize, QasmError> {
        match self.next()?.tok {
            Tok::Int(n) => usize::try_from(n).map_err(|_| self.err("integer too large")),
            _ => {
                self.pos -= 1;
                Err(self.err("expected integer"))
            }
        }
    }

    fn program(mut self) -> Result<Circuit, QasmError> {
        if matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == "OPENQASM") {
            self.pos += 1;
            let version = match self.next()?.tok {
                Tok::Real(v) => v,
                Tok::Int(v) => v as f64,
                _ => return Err(self.err("expected version number")),
            };
            if !(2.0..3.0).contains(&version) {
                self.pos -= 1;
                return Err(self.err(format!("only OpenQASM 2.x is supported, found {version}")));
            }
            self.expect(Tok::Semi, "`;`")?;
        }
        while self.peek().is_some() {
            self.statement()?;
        }
        Ok(self.circuit)
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let start = self.peek().expect("caller checked");
        let (line, col) = (start.line, start.col);
        let word = match &start.tok {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.err("expected statement")),
        };
        self.pos += 1;
        match word.as_str() {
            "include" => {
                match self.next()?.tok {
                    Tok::Str(_) => {}
                    _ => return Err(QasmError::syntax(line, col, "include expects a file name")),
                }
                self.expect(Tok::Semi, "`;`")
            }
            "qreg" | "creg" => {
                let name = self.ident()?;
                self.expect(Tok::LBracket, "`[`")?;
                let size = self.int()?;
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Semi, "`;`")?;
                let c = &mut self.circuit;
                if c.qregs.iter().chain(&c.cregs).any(|r| r.name == name) {
                    return Err(QasmError::syntax(line, col, format!("register `{name}` redeclared")));
                }
                let reg = Register { name, size };
                if word == "qreg" {
                    c.num_qubits += size;
                    c.qregs.push(reg);
                } else {
                    c.num_clbits += size;
                    c.cregs.push(reg);
                }
                Ok(())
            }
            "barrier" => {
                let args = self.arg_list()?;
                for a in &args {
                    self.resolve_qubits(a)?;
                }
                self.expect(Tok::Semi, "`;`")
            }
            "measure" => self.measure(),
            "gate" | "opaque" | "reset" | "if" => Err(QasmError::syntax(
                line,
                col,
                format!("`{word}` statements are not supported"),
            )),
            name => self.gate(name, line, col),
        }
    }

    fn measure(&mut self) -> Result<(), QasmError> {
        let q = self.arg()?;
        self.expect(Tok::Arrow, "`->`")?;
        let c = self.arg()?;
        self.expect(Tok::Semi, "`;`")?;
        let qs = self.resolve_qubits(&q)?;
        let cs = self.resolve(&c, false)?;
        if qs.len() != cs.len() {
            let (line, col) = match q {
                Arg::Whole { line, col, .. } | Arg::Bit { line, col, .. } => (line, col),
            };
            return Err(QasmError::syntax(line, col, "measure operands differ in size"));
        }
        let after_ops = self.circuit.ops.len();
        self.circuit
            .measures
            .extend(qs.into_iter().zip(cs).map(|(qubit, clbit)| Measure {
                qubit,
                clbit,
                after_ops,
            }));
        Ok(())
    }

    fn gate(&mut self, name: &str, line: usize, col: usize) -> Result<(), QasmError> {
        let kind = GateKind::from_qasm_name(name).ok_or_else(|| QasmError::UnsupportedGate {
            line,
            col,
            name: name.to_string(),
        })?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                params.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        if params.len() != kind.num_params() {
            return Err(QasmError::syntax(
                line,
                col,
                format!(
                    "`{name}` takes {} parameter(s), got {}",
                    kind.num_params(),
                    params.len()
                ),
            ));
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(QasmError::syntax(line, col, format!("non-finite parameter {p}")));
        }
        let args = self.arg_list()?;
        self.expect(Tok::Semi, "`;`")?;
        if args.len() != kind.num_qubits() {
            return Err(QasmError::syntax(
                line,
                col,
                format!("`{name}` acts on {} qubit(s), got {}", kind.num_qubits(), args.len()),
            ));
        }
        let mut qubits = Vec::with_capacity(args.len());
        for a in &args {
            let (aline, acol) = match a {
                Arg::Whole { line, col, .. } => {
                    return Err(QasmError::syntax(
                        *line,
                        *col,
                        "register broadcast is not supported for gates",
                    ))
                }
                Arg::Bit { line, col, .. } => (*line, *col),
            };
            let q = self.resolve_qubits(a)?[0];
            if qubits.contains(&q) {
                return Err(QasmError::DuplicateQubit {
                    line: aline,
                    col: acol,
                    qubit: q,
                });
            }
            qubits.push(q);
        }
        self.circuit.ops.push(GateApp {
            kind,
            params,
            qubits,
            source_line: line,
        });
        Ok(())
    }

    fn arg(&mut self) -> Result<Arg, QasmError> {
        let (line, col) = self.here();
        let name = self.ident()?;
        if self.eat(&Tok::LBracket) {
            let index = self.int()?;
            self.expect(Tok::RBracket, "`]`")?;
            Ok(Arg::Bit { name, index, line, col })
        } else {
            Ok(Arg::Whole { name, line, col })
        }
    }

    fn arg_list(&mut self) -> Result<Vec<Arg>, QasmError> {
        let mut args = vec![self.arg()?];
        while self.eat(&Tok::Comma) {
            args.push(self.arg()?);
        }
        Ok(args)
    }

    fn resolve_qubits(&self, a: &Arg) -> Result<Vec<usize>, QasmError> {
        self.resolve(a, true)
    }

    fn resolve(&self, a: &Arg, quantum: bool) -> Result<Vec<usize>, QasmError> {
        let regs = if quantum {
            &self.circuit.qregs
        } else {
            &self.circuit.cregs
        };
        let (name, line, col) = match a {
            Arg::Whole { name, line, col } | Arg::Bit { name, line, col, .. } => (name, *line, *col),
        };
        let mut base = 0;
        let reg = regs
            .iter()
            .find(|r| {
                let hit = &r.name == name;
                if !hit {
                    base += r.size;
                }
                hit
            })
            .ok_or_else(|| {
                let kind = if quantum { "qreg" } else { "creg" };
                QasmError::syntax(line, col, format!("unknown {kind} `{name}`"))
            })?;
        match a {
            Arg::Whole { .. } => Ok((base..base + reg.size).collect()),
            Arg::Bit { index, .. } if *index < reg.size => Ok(vec![base + index]),
            Arg::Bit { index, .. } => Err(QasmError::IndexOutOfRange {
                line,
                col,
                register: name.clone(),
                index: *index,
            }),
        }
    }

    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                v += self.term()?;
            } else if self.eat(&Tok::Minus) {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.power()?;
        loop {
            if self.eat(&Tok::Star) {
                v *= self.power()?;
            } else if self.eat(&Tok::Slash) {
                v /= self.power()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn power(&mut self) -> Result<f64, QasmError> {
        let base = self.unary()?;
        if self.eat(&Tok::Caret) {
            Ok(base.powf(self.power()?))
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.eat(&Tok::Minus) {
            Ok(-self.unary()?)
        } else if self.eat(&Tok::Plus) {
            self.unary()
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<f64, QasmError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Int(n) => Ok(*n as f64),
            Tok::Real(r) => Ok(*r),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Tok::Ident(id) if id == "pi" => Ok(std::f64::consts::PI),
            Tok::Ident(id) => {
                let f: fn(f64) -> f64 = match id.as_str() {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => {
                        return Err(QasmError::syntax(
                            t.line,
                            t.col,
                            format!("unknown identifier `{id}` in expression"),
                        ))
                    }
                };
                self.expect(Tok::LParen, "`(`")?;
                let v = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f(v))
            }
            _ => Err(QasmError::syntax(t.line, t.col, "expected expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::unparse;
    use proptest::prelude::*;

    #[test]
    fn expressions() {
        let c = parse_qasm("qreg q[1]; rz(-pi/2 + 2^3*0.5 - cos(0)) q[0];").unwrap();
        let want = -std::f64::consts::FRAC_PI_2 + 4.0 - 1.0;
        assert!((c.ops[0].params[0] - want).abs() < 1e-15);
    }

    #[test]
    fn header_include_and_comments() {
        let src = "OPENQASM 2.0;\n// hi\ninclude \"qelib1.inc\";\n/* block\n */qreg q[2];\nu1(0.5) q[1];\nu3(1,2,3) q[0];\ncu1(0.25) q[0],q[1];";
        let c = parse_qasm(src).unwrap();
        let kinds: Vec<_> = c.ops.iter().map(|o| o.kind).collect();
        assert_eq!(kinds, vec![GateKind::P, GateKind::U, GateKind::Cp]);
        assert_eq!(c.ops[0].source_line, 6);
    }

    #[test]
    fn error_cases() {
        assert!(matches!(
            parse_qasm("OPENQASM 3.0; qubit[2] q;"),
            Err(QasmError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_qasm("qreg q[2];\nfoo q[0];"),
            Err(QasmError::UnsupportedGate { line: 2, col: 1, ref name }) if name == "foo"
        ));
        assert!(matches!(
            parse_qasm("qreg q[2];\nh q[2];"),
            Err(QasmError::IndexOutOfRange { line: 2, index: 2, .. })
        ));
        assert!(matches!(parse_qasm("qreg q[2]; h q;"), Err(QasmError::Syntax { .. })));
        assert!(matches!(
            parse_qasm("qreg q[2]; reset q[0];"),
            Err(QasmError::Syntax { .. })
        ));
        assert!(matches!(parse_qasm("qreg q[2]; h q[0]"), Err(QasmError::Syntax { .. })));
        assert!(matches!(
            parse_qasm("qreg q[2]; rz q[0];"),
            Err(QasmError::Syntax { .. })
        ));
        assert!(matches!(
            parse_qasm("qreg q[2]; cx q[0];"),
            Err(QasmError::Syntax { .. })
        ));
        assert!(matches!(
            parse_qasm("qreg q[2]; h r[0];"),
            Err(QasmError::Syntax { .. })
        ));
        assert!(matches!(
            parse_qasm("qreg q[1]; rz(1/0) q[0];"),
            Err(QasmError::Syntax { .. })
        ));
    }

    #[test]
    fn swap_is_kept() {
        let c = parse_qasm("qreg q[2]; swap q[0],q[1]; swap q[0],q[1];").unwrap();
        assert_eq!(c.ops.len(), 2);
        assert!(c.ops.iter().all(|o| o.kind == GateKind::Swap));
    }

    fn arb_gate(d: usize) -> impl Strategy<Value = (GateKind, Vec<f64>, Vec<usize>)> {
        let kinds: Vec<GateKind> = GateKind::ALL.iter().copied().filter(|k| *k != GateKind::Id).collect();
        (
            prop::sample::select(kinds),
            prop::collection::vec(-10.0f64..10.0, 3),
            Just((0..d).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(|(k, ps, qs)| (k, ps[..k.num_params()].to_vec(), qs[..k.num_qubits()].to_vec()))
    }

    proptest! {
        #[test]
        fn unparse_then_parse_is_structurally_identical(gates in prop::collection::vec(arb_gate(4), 0..40)) {
            let mut c = Circuit::new(4);
            for (k, ps, qs) in &gates {
                c.push(*k, ps, qs);
            }
            c.measure_all();
            let text = unparse(&c);
            let back = parse_qasm(&text).unwrap();
            prop_assert!(back.same_structure(&c));
            // one gate statement per op
            prop_assert_eq!(back.ops.len(), gates.len());
        }
    }
}
