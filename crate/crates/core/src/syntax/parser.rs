use super::lexer::{tokenize, Token, TokenKind};
use super::{Kind, ParseError, Pos, RawNode, SourceFile, Span, SyntaxTree};

type PResult<T> = Result<T, ParseError>;

const RESERVED: &[&str] = &[
    "var", "const", "function", "return", "if", "else", "for", "while", "do", "break",
    "continue", "throw", "try", "catch", "finally", "new", "import", "export", "default",
    "class", "switch", "case", "typeof", "in", "instanceof", "delete", "void", "this", "null",
    "true", "false", "with", "yield", "super", "enum",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=", "&&=",
    "||=", "??=",
];

const UNARY_OPS: &[&str] = &["!", "-", "+", "~", "typeof", "void", "delete", "await"];

fn binary_precedence(op: &str, no_in: bool) -> Option<u8> {
    Some(match op {
        "??" => 1,
        "||" => 2,
        "&&" => 3,
        "|" => 4,
        "^" => 5,
        "&" => 6,
        "==" | "!=" | "===" | "!==" => 7,
        "<" | ">" | "<=" | ">=" | "instanceof" => 8,
        "in" if !no_in => 8,
        "<<" | ">>" | ">>>" => 9,
        "+" | "-" => 10,
        "*" | "/" | "%" => 11,
        "**" => 12,
        _ => return None,
    })
}

/// Parses a source file of the JavaScript subset into a span-annotated tree.
///
/// A statement ends at `;`, at `}`, at end of input, or at a line break
/// once the expression before it is complete. `(` and `[` never continue an
/// expression across a line break.
pub fn parse(source: &SourceFile) -> Result<SyntaxTree, ParseError> {
    let tokens = tokenize(&source.content)?;
    let mut p = Parser {
        toks: tokens,
        i: 0,
        prev_end: Pos::new(1, 0),
    };
    let mut body = Vec::new();
    while p.peek().kind != TokenKind::Eof {
        body.push(p.statement()?);
    }
    let end = p.peek().start;
    let root = RawNode::new(Kind::Program, Span::new(Pos::new(1, 0), end), body);
    Ok(SyntaxTree::from_raw(root, Some(source.clone())))
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    prev_end: Pos,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.i]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.i + n).min(self.toks.len() - 1)]
    }

    fn at(&self, s: &str) -> bool {
        self.peek().is(s)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if t.kind != TokenKind::Eof {
            self.i += 1;
            self.prev_end = t.end;
        }
        t
    }

    fn eat(&mut self, s: &str) -> Option<Token> {
        if self.at(s) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn expect(&mut self, s: &str) -> PResult<Token> {
        if self.at(s) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.peek();
        let found = if t.kind == TokenKind::Eof {
            "end of input".to_string()
        } else {
            format!("`{}`", t.text)
        };
        ParseError::new(t.start, format!("expected {wanted}, found {found}"))
    }

    fn span_from(&self, start: Pos) -> Span {
        Span::new(start, self.prev_end.max(start))
    }

    fn leaf_from(&self, tok: &Token, kind: Kind, value: bool) -> RawNode {
        RawNode::leaf(
            kind,
            value.then(|| tok.text.clone()),
            Span::new(tok.start, tok.end),
        )
    }

    fn end_statement(&mut self) -> PResult<()> {
        if self.eat(";").is_some() {
            return Ok(());
        }
        let t = self.peek();
        if t.kind == TokenKind::Eof || t.is("}") || t.newline_before {
            Ok(())
        } else {
            Err(self.unexpected("`;` or line break"))
        }
    }

    fn identifier(&mut self) -> PResult<RawNode> {
        let t = self.peek();
        if t.kind == TokenKind::Name && !RESERVED.contains(&t.text.as_str()) {
            let t = self.bump();
            Ok(self.leaf_from(&t, Kind::Identifier, true))
        } else {
            Err(self.unexpected("identifier"))
        }
    }

    fn statement(&mut self) -> PResult<RawNode> {
        let t = self.peek().clone();
        let start = t.start;
        if t.kind == TokenKind::Name {
            match t.text.as_str() {
                "var" | "const" => return self.declaration_statement(),
                "let" if self.peek_at(1).kind == TokenKind::Name => {
                    return self.declaration_statement()
                }
                "function" => return self.function(Kind::FunctionDeclaration, true),
                "return" => {
                    self.bump();
                    let n = self.peek();
                    let mut children = Vec::new();
                    if !(n.is(";") || n.is("}") || n.kind == TokenKind::Eof || n.newline_before) {
                        children.push(self.expression(false)?);
                    }
                    self.end_statement()?;
                    return Ok(RawNode::new(Kind::Return, self.span_from(start), children));
                }
                "if" => {
                    self.bump();
                    self.expect("(")?;
                    let test = self.expression(false)?;
                    self.expect(")")?;
                    let mut children = vec![test, self.statement()?];
                    if self.eat("else").is_some() {
                        children.push(self.statement()?);
                    }
                    return Ok(RawNode::new(Kind::If, self.span_from(start), children));
                }
                "for" => return self.for_statement(),
                "while" => {
                    self.bump();
                    self.expect("(")?;
                    let test = self.expression(false)?;
                    self.expect(")")?;
                    let body = self.statement()?;
                    return Ok(RawNode::new(Kind::While, self.span_from(start), vec![test, body]));
                }
                "do" => {
                    self.bump();
                    let body = self.statement()?;
                    self.expect("while")?;
                    self.expect("(")?;
                    let test = self.expression(false)?;
                    self.expect(")")?;
                    self.eat(";");
                    return Ok(RawNode::new(Kind::DoWhile, self.span_from(start), vec![body, test]));
                }
                "break" | "continue" => {
                    self.bump();
                    self.end_statement()?;
                    let kind = if t.text == "break" { Kind::Break } else { Kind::Continue };
                    return Ok(RawNode::leaf(kind, None, self.span_from(start)));
                }
                "throw" => {
                    self.bump();
                    let arg = self.expression(false)?;
                    self.end_statement()?;
                    return Ok(RawNode::new(Kind::Throw, self.span_from(start), vec![arg]));
                }
                "try" => return self.try_statement(),
                "import" => return self.import(),
                "export" => return self.export(),
                _ => {}
            }
        }
        if t.is("{") {
            return self.block();
        }
        if t.is(";") {
            self.bump();
            return Ok(RawNode::leaf(Kind::EmptyStatement, None, self.span_from(start)));
        }
        let expr = self.expression(false)?;
        self.end_statement()?;
        Ok(RawNode::new(Kind::ExpressionStatement, self.span_from(start), vec![expr]))
    }

    fn block(&mut self) -> PResult<RawNode> {
        let start = self.expect("{")?.start;
        let mut body = Vec::new();
        while !self.at("}") {
            if self.peek().kind == TokenKind::Eof {
                return Err(self.unexpected("`}`"));
            }
            body.push(self.statement()?);
        }
        self.bump();
        Ok(RawNode::new(Kind::Block, self.span_from(start), body))
    }

    fn declaration_kind(text: &str) -> Kind {
        match text {
            "var" => Kind::VarDeclaration,
            "let" => Kind::LetDeclaration,
            _ => Kind::ConstDeclaration,
        }
    }

    fn declaration_statement(&mut self) -> PResult<RawNode> {
        let decl = self.declaration(false)?;
        self.end_statement()?;
        let mut decl = decl;
        decl.span = self.span_from(decl.span.start);
        Ok(decl)
    }

    fn declaration(&mut self, no_in: bool) -> PResult<RawNode> {
        let kw = self.bump();
        let kind = Self::declaration_kind(&kw.text);
        let mut declarators = vec![self.declarator(no_in)?];
        while self.eat(",").is_some() {
            declarators.push(self.declarator(no_in)?);
        }
        Ok(RawNode::new(kind, self.span_from(kw.start), declarators))
    }

    fn declarator(&mut self, no_in: bool) -> PResult<RawNode> {
        let id = self.identifier()?;
        let start = id.span.start;
        let mut children = vec![id];
        if self.eat("=").is_some() {
            children.push(self.assignment(no_in)?);
        }
        Ok(RawNode::new(Kind::Declarator, self.span_from(start), children))
    }

    fn for_statement(&mut self) -> PResult<RawNode> {
        let start = self.bump().start;
        self.expect("(")?;
        let init = if self.at(";") {
            RawNode::leaf(Kind::Empty, None, Span::point(self.peek().start))
        } else if self.at("var") || self.at("const") || (self.at("let") && self.peek_at(1).kind == TokenKind::Name) {
            let kw = self.bump();
            let id = self.identifier()?;
            if self.at("in") || self.at("of") {
                let decl_span = self.span_from(kw.start);
                let declarator = RawNode::new(Kind::Declarator, id.span, vec![id]);
                let left = RawNode::new(Self::declaration_kind(&kw.text), decl_span, vec![declarator]);
                return self.for_in_of(start, left);
            }
            // rewind onto the identifier and parse full declarators
            self.i -= 1;
            let id_start = self.peek().start;
            let mut declarators = vec![self.declarator(true)?];
            while self.eat(",").is_some() {
                declarators.push(self.declarator(true)?);
            }
            let _ = id_start;
            RawNode::new(Self::declaration_kind(&kw.text), self.span_from(kw.start), declarators)
        } else {
            let expr = self.expression(true)?;
            if self.at("in") || self.at("of") {
                return self.for_in_of(start, expr);
            }
            expr
        };
        self.expect(";")?;
        let test = if self.at(";") {
            RawNode::leaf(Kind::Empty, None, Span::point(self.peek().start))
        } else {
            self.expression(false)?
        };
        self.expect(";")?;
        let update = if self.at(")") {
            RawNode::leaf(Kind::Empty, None, Span::point(self.peek().start))
        } else {
            self.expression(false)?
        };
        self.expect(")")?;
        let body = self.statement()?;
        Ok(RawNode::new(Kind::For, self.span_from(start), vec![init, test, update, body]))
    }

    fn for_in_of(&mut self, start: Pos, left: RawNode) -> PResult<RawNode> {
        let kw = self.bump();
        let kind = if kw.text == "in" { Kind::ForIn } else { Kind::ForOf };
        let right = self.expression(false)?;
        self.expect(")")?;
        let body = self.statement()?;
        Ok(RawNode::new(kind, self.span_from(start), vec![left, right, body]))
    }

    fn try_statement(&mut self) -> PResult<RawNode> {
        let start = self.bump().start;
        let mut children = vec![self.block()?];
        if let Some(c) = self.eat("catch") {
            let mut parts = Vec::new();
            if self.eat("(").is_some() {
                parts.push(self.identifier()?);
                self.expect(")")?;
            }
            parts.push(self.block()?);
            children.push(RawNode::new(Kind::Catch, self.span_from(c.start), parts));
        }
        if let Some(f) = self.eat("finally") {
            let b = self.block()?;
            children.push(RawNode::new(Kind::Finally, self.span_from(f.start), vec![b]));
        }
        if children.len() == 1 {
            return Err(self.unexpected("`catch` or `finally`"));
        }
        Ok(RawNode::new(Kind::Try, self.span_from(start), children))
    }

    fn import(&mut self) -> PResult<RawNode> {
        let start = self.bump().start;
        let mut children = Vec::new();
        if self.peek().kind != TokenKind::String {
            if self.peek().kind == TokenKind::Name && !self.at("from") || self.at("from") && self.peek_at(1).is("from") {
                let id = self.identifier()?;
                children.push(RawNode::new(Kind::ImportDefault, id.span, vec![id]));
                if self.eat(",").is_none() {
                    return self.import_source(start, children);
                }
            }
            if let Some(star) = self.eat("*") {
                self.expect("as")?;
                let id = self.identifier()?;
                children.push(RawNode::new(Kind::ImportNamespace, self.span_from(star.start), vec![id]));
            } else if self.eat("{").is_some() {
                while !self.at("}") {
                    let t = self.peek().clone();
                    if t.kind != TokenKind::Name {
                        return Err(self.unexpected("import name"));
                    }
                    if self.peek_at(1).is("as") {
                        self.bump();
                        let imported = self.leaf_from(&t, Kind::PropertyName, true);
                        self.bump();
                        let local = self.identifier()?;
                        children.push(RawNode::new(
                            Kind::ImportSpecifier,
                            self.span_from(t.start),
                            vec![imported, local],
                        ));
                    } else {
                        let local = self.identifier()?;
                        children.push(RawNode::new(Kind::ImportSpecifier, local.span, vec![local]));
                    }
                    if self.eat(",").is_none() {
                        break;
                    }
                }
                self.expect("}")?;
            } else {
                return Err(self.unexpected("import clause"));
            }
        }
        self.import_source(start, children)
    }

    fn import_source(&mut self, start: Pos, mut children: Vec<RawNode>) -> PResult<RawNode> {
        if !children.is_empty() {
            self.expect("from")?;
        }
        if self.peek().kind != TokenKind::String {
            return Err(self.unexpected("module specifier string"));
        }
        let s = self.bump();
        children.push(self.leaf_from(&s, Kind::StringLiteral, true));
        self.end_statement()?;
        Ok(RawNode::new(Kind::Import, self.span_from(start), children))
    }

    fn export(&mut self) -> PResult<RawNode> {
        let start = self.bump().start;
        if self.eat("default").is_some() {
            let inner = if self.at("function") {
                if self.peek_at(1).kind == TokenKind::Name {
                    self.function(Kind::FunctionDeclaration, true)?
                } else {
                    let f = self.function(Kind::FunctionExpression, false)?;
                    self.eat(";");
                    f
                }
            } else {
                let e = self.assignment(false)?;
                self.end_statement()?;
                e
            };
            return Ok(RawNode::new(Kind::ExportDefault, self.span_from(start), vec![inner]));
        }
        let inner = if self.at("function") {
            self.function(Kind::FunctionDeclaration, true)?
        } else if self.at("var") || self.at("let") || self.at("const") {
            self.declaration_statement()?
        } else {
            return Err(self.unexpected("declaration after `export`"));
        };
        Ok(RawNode::new(Kind::ExportNamed, self.span_from(start), vec![inner]))
    }

    fn function(&mut self, kind: Kind, name_required: bool) -> PResult<RawNode> {
        let start = self.expect("function")?.start;
        let mut children = Vec::new();
        if name_required || self.peek().kind == TokenKind::Name {
            children.push(self.identifier()?);
        }
        children.push(self.params()?);
        children.push(self.block()?);
        Ok(RawNode::new(kind, self.span_from(start), children))
    }

    fn params(&mut self) -> PResult<RawNode> {
        let start = self.expect("(")?.start;
        let mut list = Vec::new();
        while !self.at(")") {
            let pstart = self.peek().start;
            if self.eat("...").is_some() {
                let id = self.identifier()?;
                list.push(RawNode::new(Kind::RestParam, self.span_from(pstart), vec![id]));
            } else {
                let id = self.identifier()?;
                if self.eat("=").is_some() {
                    let default = self.assignment(false)?;
                    list.push(RawNode::new(Kind::DefaultParam, self.span_from(pstart), vec![id, default]));
                } else {
                    list.push(id);
                }
            }
            if self.eat(",").is_none() {
                break;
            }
        }
        self.expect(")")?;
        Ok(RawNode::new(Kind::Params, self.span_from(start), list))
    }

    fn expression(&mut self, no_in: bool) -> PResult<RawNode> {
        self.assignment(no_in)
    }

    fn is_arrow_ahead(&self) -> bool {
        let t = self.peek();
        if t.kind == TokenKind::Name && !RESERVED.contains(&t.text.as_str()) {
            let next = self.peek_at(1);
            return next.is("=>") && !next.newline_before;
        }
        if !t.is("(") {
            return false;
        }
        let mut depth = 0usize;
        let mut j = self.i;
        while j < self.toks.len() {
            let tok = &self.toks[j];
            if tok.kind == TokenKind::Eof {
                return false;
            }
            if tok.is("(") || tok.is("[") || tok.is("{") {
                depth += 1;
            } else if tok.is(")") || tok.is("]") || tok.is("}") {
                depth -= 1;
                if depth == 0 {
                    let next = &self.toks[(j + 1).min(self.toks.len() - 1)];
                    return next.is("=>") && !next.newline_before;
                }
            }
            j += 1;
        }
        false
    }

    fn arrow(&mut self, no_in: bool) -> PResult<RawNode> {
        let start = self.peek().start;
        let params = if self.at("(") {
            self.params()?
        } else {
            let id = self.identifier()?;
            RawNode::new(Kind::Params, id.span, vec![id])
        };
        self.expect("=>")?;
        let body = if self.at("{") {
            self.block()?
        } else {
            self.assignment(no_in)?
        };
        Ok(RawNode::new(Kind::ArrowFunction, self.span_from(start), vec![params, body]))
    }

    fn assignment(&mut self, no_in: bool) -> PResult<RawNode> {
        if self.is_arrow_ahead() {
            return self.arrow(no_in);
        }
        let left = self.conditional(no_in)?;
        let t = self.peek().clone();
        if t.kind == TokenKind::Punct && ASSIGN_OPS.contains(&t.text.as_str()) {
            if !matches!(left.kind, Kind::Identifier | Kind::Member | Kind::ComputedMember) {
                return Err(ParseError::new(t.start, "invalid assignment target"));
            }
            self.bump();
            let op = self.leaf_from(&t, Kind::Operator, true);
            let right = self.assignment(no_in)?;
            let start = left.span.start;
            return Ok(RawNode::new(Kind::Assign, self.span_from(start), vec![left, op, right]));
        }
        Ok(left)
    }

    fn conditional(&mut self, no_in: bool) -> PResult<RawNode> {
        let test = self.binary(0, no_in)?;
        if self.eat("?").is_some() {
            let cons = self.assignment(false)?;
            self.expect(":")?;
            let alt = self.assignment(no_in)?;
            let start = test.span.start;
            return Ok(RawNode::new(Kind::Conditional, self.span_from(start), vec![test, cons, alt]));
        }
        Ok(test)
    }

    fn binary(&mut self, min_prec: u8, no_in: bool) -> PResult<RawNode> {
        let mut left = self.unary()?;
        loop {
            let t = self.peek().clone();
            if !matches!(t.kind, TokenKind::Punct | TokenKind::Name) {
                break;
            }
            let Some(prec) = binary_precedence(&t.text, no_in) else { break };
            if prec < min_prec {
                break;
            }
            self.bump();
            let op = self.leaf_from(&t, Kind::Operator, true);
            let next_min = if t.text == "**" { prec } else { prec + 1 };
            let right = self.binary(next_min, no_in)?;
            let start = left.span.start;
            left = RawNode::new(Kind::Binary, self.span_from(start), vec![left, op, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<RawNode> {
        let t = self.peek().clone();
        if matches!(t.kind, TokenKind::Punct | TokenKind::Name) && UNARY_OPS.contains(&t.text.as_str()) {
            self.bump();
            let op = self.leaf_from(&t, Kind::Operator, true);
            let arg = self.unary()?;
            return Ok(RawNode::new(Kind::Unary, self.span_from(t.start), vec![op, arg]));
        }
        if t.is("++") || t.is("--") {
            self.bump();
            let op = self.leaf_from(&t, Kind::Operator, true);
            let arg = self.unary()?;
            return Ok(RawNode::new(Kind::UpdatePrefix, self.span_from(t.start), vec![op, arg]));
        }
        let expr = self.call_member()?;
        let n = self.peek().clone();
        if (n.is("++") || n.is("--")) && !n.newline_before {
            self.bump();
            let op = self.leaf_from(&n, Kind::Operator, true);
            let start = expr.span.start;
            return Ok(RawNode::new(Kind::UpdatePostfix, self.span_from(start), vec![expr, op]));
        }
        Ok(expr)
    }

    fn call_member(&mut self) -> PResult<RawNode> {
        let mut expr = if self.at("new") {
            self.new_expression()?
        } else {
            self.primary()?
        };
        loop {
            expr = match self.member_suffix(expr)? {
                Ok(e) => e,
                Err(e) => {
                    let t = self.peek();
                    if t.is("(") && !t.newline_before {
                        let start = e.span.start;
                        let mut children = vec![e];
                        children.extend(self.arguments()?);
                        RawNode::new(Kind::Call, self.span_from(start), children)
                    } else {
                        return Ok(e);
                    }
                }
            };
        }
    }

    /// Applies one `.name` or `[expr]` suffix; `Err` hands the node back untouched.
    fn member_suffix(&mut self, obj: RawNode) -> PResult<Result<RawNode, RawNode>> {
        if self.eat(".").is_some() {
            let t = self.peek().clone();
            if t.kind != TokenKind::Name {
                return Err(self.unexpected("property name"));
            }
            self.bump();
            let name = self.leaf_from(&t, Kind::PropertyName, true);
            let start = obj.span.start;
            return Ok(Ok(RawNode::new(Kind::Member, self.span_from(start), vec![obj, name])));
        }
        let t = self.peek();
        if t.is("[") && !t.newline_before {
            self.bump();
            let index = self.expression(false)?;
            self.expect("]")?;
            let start = obj.span.start;
            return Ok(Ok(RawNode::new(Kind::ComputedMember, self.span_from(start), vec![obj, index])));
        }
        Ok(Err(obj))
    }

    fn new_expression(&mut self) -> PResult<RawNode> {
        let start = self.expect("new")?.start;
        let mut callee = if self.at("new") {
            self.new_expression()?
        } else {
            self.primary()?
        };
        let callee = loop {
            match self.member_suffix(callee)? {
                Ok(e) => callee = e,
                Err(e) => break e,
            }
        };
        let mut children = vec![callee];
        if self.at("(") && !self.peek().newline_before {
            children.extend(self.arguments()?);
        }
        Ok(RawNode::new(Kind::New, self.span_from(start), children))
    }

    fn arguments(&mut self) -> PResult<Vec<RawNode>> {
        self.expect("(")?;
        let mut args = Vec::new();
        while !self.at(")") {
            args.push(self.spread_or_assignment()?);
            if self.eat(",").is_none() {
                break;
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn spread_or_assignment(&mut self) -> PResult<RawNode> {
        if let Some(t) = self.eat("...") {
            let arg = self.assignment(false)?;
            return Ok(RawNode::new(Kind::Spread, self.span_from(t.start), vec![arg]));
        }
        self.assignment(false)
    }

    fn primary(&mut self) -> PResult<RawNode> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Number => {
                self.bump();
                Ok(self.leaf_from(&t, Kind::NumberLiteral, true))
            }
            TokenKind::String => {
                self.bump();
                Ok(self.leaf_from(&t, Kind::StringLiteral, true))
            }
            TokenKind::Name => match t.text.as_str() {
                "this" => {
                    self.bump();
                    Ok(self.leaf_from(&t, Kind::This, false))
                }
                "null" => {
                    self.bump();
                    Ok(self.leaf_from(&t, Kind::NullLiteral, false))
                }
                "true" | "false" => {
                    self.bump();
                    Ok(self.leaf_from(&t, Kind::BooleanLiteral, true))
                }
                "function" => self.function(Kind::FunctionExpression, false),
                _ => self.identifier(),
            },
            TokenKind::Punct => match t.text.as_str() {
                "(" => {
                    self.bump();
                    let e = self.expression(false)?;
                    self.expect(")")?;
                    Ok(e)
                }
                "[" => self.array(),
                "{" => self.object(),
                _ => Err(self.unexpected("expression")),
            },
            TokenKind::Eof => Err(self.unexpected("expression")),
        }
    }

    fn array(&mut self) -> PResult<RawNode> {
        let start = self.expect("[")?.start;
        let mut elems = Vec::new();
        while !self.at("]") {
            if self.at(",") {
                let hole = self.bump();
                elems.push(RawNode::leaf(Kind::Empty, None, Span::point(hole.start)));
                continue;
            }
            elems.push(self.spread_or_assignment()?);
            if self.eat(",").is_none() {
                break;
            }
        }
        self.expect("]")?;
        Ok(RawNode::new(Kind::Array, self.span_from(start), elems))
    }

    fn object(&mut self) -> PResult<RawNode> {
        let start = self.expect("{")?.start;
        let mut props = Vec::new();
        while !self.at("}") {
            props.push(self.property()?);
            if self.eat(",").is_none() {
                break;
            }
        }
        self.expect("}")?;
        Ok(RawNode::new(Kind::Object, self.span_from(start), props))
    }

    fn property(&mut self) -> PResult<RawNode> {
        let t = self.peek().clone();
        if self.eat("...").is_some() {
            let arg = self.assignment(false)?;
            return Ok(RawNode::new(Kind::Spread, self.span_from(t.start), vec![arg]));
        }
        let key = match t.kind {
            TokenKind::Name => self.leaf_from(&t, Kind::PropertyKey, true),
            TokenKind::String => self.leaf_from(&t, Kind::StringLiteral, true),
            TokenKind::Number => self.leaf_from(&t, Kind::NumberLiteral, true),
            _ => return Err(self.unexpected("property key")),
        };
        self.bump();
        if self.eat(":").is_some() {
            let value = self.assignment(false)?;
            return Ok(RawNode::new(Kind::Property, self.span_from(t.start), vec![key, value]));
        }
        if self.at("(") {
            let params = self.params()?;
            let body = self.block()?;
            return Ok(RawNode::new(Kind::Method, self.span_from(t.start), vec![key, params, body]));
        }
        if t.kind == TokenKind::Name
            && !RESERVED.contains(&t.text.as_str())
            && (self.at(",") || self.at("}"))
        {
            let id = self.leaf_from(&t, Kind::Identifier, true);
            return Ok(RawNode::new(Kind::ShorthandProperty, id.span, vec![id]));
        }
        Err(self.unexpected("`:` or `(` after property key"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SyntaxTree {
        parse(&SourceFile::new("t.js", s)).unwrap_or_else(|e| panic!("{s:?}: {e}"))
    }

    fn shape(t: &SyntaxTree) -> String {
        fn go(t: &SyntaxTree, id: usize, out: &mut String) {
            let n = t.node(id);
            out.push_str(n.kind.label());
            if let Some(v) = &n.value {
                out.push_str(&format!("[{v}]"));
            }
            if !n.children.is_empty() {
                out.push('(');
                for (i, &c) in n.children.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    go(t, c, out);
                }
                out.push(')');
            }
        }
        let mut s = String::new();
        go(t, t.root(), &mut s);
        s
    }

    #[test]
    fn const_declaration_shape() {
        let t = p("const x = 1;");
        assert_eq!(
            shape(&t),
            "Program(ConstDeclaration(Declarator(Identifier[x] NumberLiteral[1])))"
        );
        t.validate().unwrap();
    }

    #[test]
    fn unclosed_function_is_error_on_line_one() {
        let e = parse(&SourceFile::new("t.js", "function (")).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn newline_terminates_complete_statement() {
        let t = p("a = 1\nb = 2");
        assert_eq!(t.node(0).children.len(), 2);
        assert!(parse(&SourceFile::new("t.js", "a = 1 b = 2")).is_err());
    }

    #[test]
    fn member_chain_continues_across_lines() {
        let t = p("promise\n  .then(f)\n  .catch(g);");
        assert_eq!(t.node(0).children.len(), 1);
    }

    #[test]
    fn paren_on_new_line_starts_statement() {
        let t = p("a\n(b)");
        assert_eq!(t.node(0).children.len(), 2);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            shape(&p("a + b * c;")),
            "Program(ExpressionStatement(Binary(Identifier[a] Operator[+] Binary(Identifier[b] Operator[*] Identifier[c]))))"
        );
        assert_eq!(
            shape(&p("a = b = c;")),
            "Program(ExpressionStatement(Assign(Identifier[a] Operator[=] Assign(Identifier[b] Operator[=] Identifier[c]))))"
        );
    }

    #[test]
    fn for_variants() {
        assert_eq!(
            shape(&p("for (var file in files) {}")),
            "Program(ForIn(VarDeclaration(Declarator(Identifier[file])) Identifier[files] Block))"
        );
        assert_eq!(
            shape(&p("for (let slot of xs) f(slot);")).split('(').nth(1).unwrap(),
            "ForOf"
        );
        let t = p("for (let i = 0; i < n; i++) { s += i; }");
        assert_eq!(t.node(1).kind, Kind::For);
        let t = p("for (;;) break;");
        assert_eq!(shape(&t), "Program(For(Empty Empty Empty Break))");
    }

    #[test]
    fn imports_and_exports() {
        assert_eq!(
            shape(&p("import { get } from '@ember/object';")),
            "Program(Import(ImportSpecifier(Identifier[get]) StringLiteral['@ember/object']))"
        );
        assert_eq!(
            shape(&p("import A, * as ns from 'm'")),
            "Program(Import(ImportDefault(Identifier[A]) ImportNamespace(Identifier[ns]) StringLiteral['m']))"
        );
        assert_eq!(
            shape(&p("export default X.extend({ a: f() });")),
            "Program(ExportDefault(Call(Member(Identifier[X] PropertyName[extend]) Object(Property(PropertyKey[a] Call(Identifier[f]))))))"
        );
    }

    #[test]
    fn object_forms() {
        assert_eq!(
            shape(&p("x = { ...u, k: 1, m() { return 2; }, s, default: true };")),
            "Program(ExpressionStatement(Assign(Identifier[x] Operator[=] Object(Spread(Identifier[u]) Property(PropertyKey[k] NumberLiteral[1]) Method(PropertyKey[m] Params Block(Return(NumberLiteral[2]))) ShorthandProperty(Identifier[s]) Property(PropertyKey[default] BooleanLiteral[true])))))"
        );
    }

    #[test]
    fn arrows() {
        assert_eq!(
            shape(&p("app.get('/x', (req, res) => { res.send(1); });")),
            "Program(ExpressionStatement(Call(Member(Identifier[app] PropertyName[get]) StringLiteral['/x'] ArrowFunction(Params(Identifier[req] Identifier[res]) Block(ExpressionStatement(Call(Member(Identifier[res] PropertyName[send]) NumberLiteral[1])))))))"
        );
        assert_eq!(
            shape(&p("f = x => x + 1")),
            "Program(ExpressionStatement(Assign(Identifier[f] Operator[=] ArrowFunction(Params(Identifier[x]) Binary(Identifier[x] Operator[+] NumberLiteral[1])))))"
        );
    }

    #[test]
    fn new_and_return_forms() {
        assert_eq!(
            shape(&p("const h = new mongoose.Schema({});")),
            "Program(ConstDeclaration(Declarator(Identifier[h] New(Member(Identifier[mongoose] PropertyName[Schema]) Object))))"
        );
        assert_eq!(
            shape(&p("function f() { return await g(a); }")),
            "Program(FunctionDeclaration(Identifier[f] Params Block(Return(Unary(Operator[await] Call(Identifier[g] Identifier[a]))))))"
        );
    }

    #[test]
    fn return_then_newline_has_no_argument() {
        let t = p("function f() {\n return\n x\n}");
        let ret = t.nodes().iter().find(|n| n.kind == Kind::Return).unwrap();
        assert!(ret.children.is_empty());
    }

    #[test]
    fn spans_nest_and_leaves_cover_their_text() {
        let src = "var a = [1, , 2];\nif (a.length > 1) {\n  a[0]++;\n} else throw new Error('x');\n";
        let t = p(src);
        t.validate().unwrap();
        let file = SourceFile::new("t.js", src);
        for id in t.leaves() {
            let n = t.node(id);
            if let Some(v) = &n.value {
                let line = file.line(n.span.start.line as usize).unwrap();
                assert_eq!(&line[n.span.start.col as usize..n.span.end.col as usize], v);
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        for bad in ["if (", "x = ;", "1 = 2;", "{", "foo(", "var;", "a b", "class A {}", "`${x}`"] {
            assert!(parse(&SourceFile::new("t.js", bad)).is_err(), "{bad:?} should fail");
        }
    }
}
