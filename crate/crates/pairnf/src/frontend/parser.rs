//! Recursive-descent parser producing a name-based AST. Name resolution
//! and model-constraint validation happen afterwards in `validate`.

use super::lexer::{Spanned, Tok};
use super::{Code, Diagnostic, Loc, SourceUnit};
use crate::model::CmpOp;

#[derive(Debug, Clone)]
pub struct Named {
    pub name: String,
    pub loc: Loc,
}

#[derive(Debug)]
pub struct RawProgram {
    pub name: String,
    pub shared: Vec<RawShared>,
    pub processes: Vec<RawProcess>,
    pub initials: Vec<RawInit>,
    pub end: Loc,
}

#[derive(Debug)]
pub struct RawShared {
    pub name: Named,
    pub domain: Vec<i64>,
    pub init: i64,
}

#[derive(Debug)]
pub struct RawProcess {
    pub name: Named,
    pub props: Vec<Named>,
    pub states: Vec<RawState>,
    pub arcs: Vec<RawArc>,
}

#[derive(Debug)]
pub struct RawState {
    pub name: Named,
    pub props: Vec<Named>,
    pub ts: Option<(Vec<i64>, Loc)>,
}

#[derive(Debug)]
pub struct RawArc {
    pub loc: Loc,
    pub from: Named,
    pub to: Named,
    pub cmd: RawArcCommand,
}

#[derive(Debug)]
pub enum RawArcCommand {
    Plain(RawGuardedCommand),
    Sync(Vec<RawSyncBlock>),
}

#[derive(Debug)]
pub struct RawGuardedCommand {
    pub guard: Option<RawGuard>,
    pub action: Option<Vec<RawAssign>>,
}

#[derive(Debug)]
pub struct RawSyncBlock {
    pub neighbor: Named,
    pub alts: Vec<RawGuardedCommand>,
}

#[derive(Debug)]
pub enum RawGuard {
    True,
    Atom(Named),
    Not(Box<RawGuard>),
    And(Box<RawGuard>, Box<RawGuard>),
    Or(Box<RawGuard>, Box<RawGuard>),
    Cmp(Named, CmpOp, RawOperand),
}

#[derive(Debug)]
pub enum RawOperand {
    Const(i64),
    Name(Named),
}

#[derive(Debug)]
pub struct RawAssign {
    pub target: Named,
    pub expr: RawExpr,
}

#[derive(Debug)]
pub enum RawExpr {
    Const(i64),
    Name(Named),
    Add(Box<RawExpr>, Box<RawExpr>),
    Sub(Box<RawExpr>, Box<RawExpr>),
}

#[derive(Debug)]
pub struct RawInit {
    pub loc: Loc,
    pub locals: Vec<Named>,
    pub vals: Vec<(Named, i64)>,
}

struct P<'a> {
    toks: &'a [Spanned],
    pos: usize,
    origin: &'a str,
}

type PResult<T> = Result<T, Diagnostic>;

pub fn parse(src: &SourceUnit, toks: &[Spanned]) -> PResult<RawProgram> {
    let mut p = P {
        toks,
        pos: 0,
        origin: &src.origin,
    };
    p.program()
}

impl<'a> P<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> &Spanned {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(self.origin, self.loc(), Code::SyntaxError, msg)
    }

    fn expect(&mut self, tok: Tok) -> PResult<Loc> {
        if *self.peek() == tok {
            Ok(self.bump().loc)
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Named> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Named { name, loc })
            }
            other => Err(self.err(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if negative { -n } else { n })
            }
            other => Err(self.err(format!("expected integer, found {}", other.describe()))),
        }
    }

    fn program(&mut self) -> PResult<RawProgram> {
        self.expect(Tok::KwProgram)?;
        let name = self.ident("program name")?.name;
        let mut shared = Vec::new();
        let mut processes = Vec::new();
        let mut initials = Vec::new();
        loop {
            match self.peek() {
                Tok::KwShared => shared.push(self.shared_decl()?),
                Tok::KwProcess => processes.push(self.process_decl()?),
                Tok::KwInit => initials.push(self.init_decl()?),
                Tok::Eof => break,
                other => {
                    return Err(self.err(format!(
                        "expected `shared`, `process`, `init` or end of input, found {}",
                        other.describe()
                    )))
                }
            }
        }
        Ok(RawProgram {
            name,
            shared,
            processes,
            initials,
            end: self.loc(),
        })
    }

    fn shared_decl(&mut self) -> PResult<RawShared> {
        self.expect(Tok::KwShared)?;
        let name = self.ident("variable name")?;
        self.expect(Tok::Colon)?;
        self.expect(Tok::LBrace)?;
        let mut domain = vec![self.int()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            domain.push(self.int()?);
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::KwInit)?;
        let init = self.int()?;
        self.expect(Tok::Semi)?;
        Ok(RawShared { name, domain, init })
    }

    fn process_decl(&mut self) -> PResult<RawProcess> {
        self.expect(Tok::KwProcess)?;
        let name = self.ident("process name")?;
        self.expect(Tok::LBrace)?;
        let mut props = Vec::new();
        let mut states = Vec::new();
        let mut arcs = Vec::new();
        loop {
            match self.peek() {
                Tok::KwProps => {
                    self.bump();
                    while matches!(self.peek(), Tok::Ident(_)) {
                        props.push(self.ident("proposition")?);
                    }
                    self.expect(Tok::Semi)?;
                }
                Tok::KwState => states.push(self.state_decl()?),
                Tok::KwArc => arcs.push(self.arc_decl()?),
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                other => {
                    return Err(self.err(format!(
                        "expected `props`, `state`, `arc` or `}}`, found {}",
                        other.describe()
                    )))
                }
            }
        }
        Ok(RawProcess {
            name,
            props,
            states,
            arcs,
        })
    }

    fn state_decl(&mut self) -> PResult<RawState> {
        self.expect(Tok::KwState)?;
        let name = self.ident("state name")?;
        self.expect(Tok::LBrace)?;
        let mut props = Vec::new();
        while matches!(self.peek(), Tok::Ident(_)) {
            props.push(self.ident("proposition")?);
        }
        self.expect(Tok::RBrace)?;
        let ts = if *self.peek() == Tok::KwTs {
            let loc = self.bump().loc;
            self.expect(Tok::LParen)?;
            let mut tuple = vec![self.int()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                tuple.push(self.int()?);
            }
            self.expect(Tok::RParen)?;
            Some((tuple, loc))
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(RawState { name, props, ts })
    }

    fn arc_decl(&mut self) -> PResult<RawArc> {
        let loc = self.expect(Tok::KwArc)?;
        let from = self.ident("state name")?;
        self.expect(Tok::Arrow)?;
        let to = self.ident("state name")?;
        let cmd = if *self.peek() == Tok::KwSync {
            // Bare `sync` marks the empty conjunction (a process with no
            // neighbors); otherwise one block per `sync with` clause.
            if self.peek2() != &Tok::KwWith {
                self.bump();
                RawArcCommand::Sync(Vec::new())
            } else {
                let mut blocks = Vec::new();
                while *self.peek() == Tok::KwSync {
                    blocks.push(self.sync_block()?);
                }
                RawArcCommand::Sync(blocks)
            }
        } else {
            let guard = if *self.peek() == Tok::KwWhen {
                self.bump();
                Some(self.guard()?)
            } else {
                None
            };
            let action = if *self.peek() == Tok::KwDo {
                self.bump();
                Some(self.assigns()?)
            } else {
                None
            };
            RawArcCommand::Plain(RawGuardedCommand { guard, action })
        };
        self.expect(Tok::Semi)?;
        Ok(RawArc { loc, from, to, cmd })
    }

    fn sync_block(&mut self) -> PResult<RawSyncBlock> {
        self.expect(Tok::KwSync)?;
        self.expect(Tok::KwWith)?;
        let neighbor = self.ident("process name")?;
        self.expect(Tok::LBrace)?;
        let mut alts = Vec::new();
        while *self.peek() == Tok::KwAlt {
            self.bump();
            let guard = if !matches!(self.peek(), Tok::KwDo | Tok::Semi) {
                Some(self.guard()?)
            } else {
                None
            };
            let action = if *self.peek() == Tok::KwDo {
                self.bump();
                Some(self.assigns()?)
            } else {
                None
            };
            self.expect(Tok::Semi)?;
            alts.push(RawGuardedCommand { guard, action });
        }
        self.expect(Tok::RBrace)?;
        Ok(RawSyncBlock { neighbor, alts })
    }

    fn init_decl(&mut self) -> PResult<RawInit> {
        let loc = self.expect(Tok::KwInit)?;
        self.expect(Tok::LParen)?;
        let mut locals = Vec::new();
        while matches!(self.peek(), Tok::Ident(_)) {
            locals.push(self.ident("state name")?);
        }
        let mut vals = Vec::new();
        if *self.peek() == Tok::Semi {
            self.bump();
            loop {
                let name = self.ident("variable name")?;
                self.expect(Tok::Eq)?;
                let v = self.int()?;
                vals.push((name, v));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Semi)?;
        Ok(RawInit { loc, locals, vals })
    }

    // Guard grammar: disjunction over conjunction over unary.
    fn guard(&mut self) -> PResult<RawGuard> {
        let mut g = self.guard_conj()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.guard_conj()?;
            g = RawGuard::Or(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn guard_conj(&mut self) -> PResult<RawGuard> {
        let mut g = self.guard_unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.guard_unary()?;
            g = RawGuard::And(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn guard_unary(&mut self) -> PResult<RawGuard> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(RawGuard::Not(Box::new(self.guard_unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let g = self.guard()?;
                self.expect(Tok::RParen)?;
                Ok(g)
            }
            Tok::KwTrue => {
                self.bump();
                Ok(RawGuard::True)
            }
            Tok::Ident(_) => {
                let name = self.ident("proposition or variable")?;
                let op = match self.peek() {
                    Tok::Eq => Some(CmpOp::Eq),
                    Tok::Ne => Some(CmpOp::Ne),
                    Tok::Lt => Some(CmpOp::Lt),
                    Tok::Le => Some(CmpOp::Le),
                    _ => None,
                };
                match op {
                    None => Ok(RawGuard::Atom(name)),
                    Some(op) => {
                        self.bump();
                        let rhs = match self.peek().clone() {
                            Tok::Ident(_) => RawOperand::Name(self.ident("operand")?),
                            Tok::Int(_) | Tok::Minus => RawOperand::Const(self.int()?),
                            other => {
                                return Err(self.err(format!(
                                    "expected integer or identifier, found {}",
                                    other.describe()
                                )))
                            }
                        };
                        Ok(RawGuard::Cmp(name, op, rhs))
                    }
                }
            }
            other => Err(self.err(format!("expected guard, found {}", other.describe()))),
        }
    }

    fn assigns(&mut self) -> PResult<Vec<RawAssign>> {
        if *self.peek() == Tok::KwSkip {
            self.bump();
            return Ok(Vec::new());
        }
        let mut out = vec![self.assign()?];
        while *self.peek() == Tok::ParPar {
            self.bump();
            out.push(self.assign()?);
        }
        Ok(out)
    }

    fn assign(&mut self) -> PResult<RawAssign> {
        let target = self.ident("variable name")?;
        self.expect(Tok::Becomes)?;
        let expr = self.expr()?;
        Ok(RawAssign { target, expr })
    }

    fn expr(&mut self) -> PResult<RawExpr> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    e = RawExpr::Add(Box::new(e), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    e = RawExpr::Sub(Box::new(e), Box::new(rhs));
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> PResult<RawExpr> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Minus => Ok(RawExpr::Const(self.int()?)),
            Tok::Ident(_) => Ok(RawExpr::Name(self.ident("variable")?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.err(format!("expected expression, found {}", other.describe()))),
        }
    }
}
