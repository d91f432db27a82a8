use serde_json::{Map, Value};

use super::{Kind, ParseError, Pos, RawNode, Span, SyntaxTree};

type Obj = Map<String, Value>;

/// Builds a tree from an ESTree JSON document carrying `loc` information.
///
/// Node types outside the internal grammar become `Foreign` nodes whose
/// children are the nested nodes found in any field, in source order.
/// ESTree has no location for operators or parameter lists, so those spans
/// are synthesized from neighbouring nodes.
pub fn ingest_estree(json: &str) -> Result<SyntaxTree, ParseError> {
    let doc: Value = serde_json::from_str(json)
        .map_err(|e| ParseError::new(Pos::new(e.line().max(1) as u32, e.column() as u32), e.to_string()))?;
    let root = convert(&doc)?;
    let tree = SyntaxTree::from_raw(root, None);
    tree.validate()
        .map_err(|m| ParseError::new(Pos::new(1, 0), format!("invalid tree: {m}")))?;
    Ok(tree)
}

fn err(msg: impl Into<String>) -> ParseError {
    ParseError::new(Pos::new(1, 0), msg)
}

fn as_obj(v: &Value) -> Result<&Obj, ParseError> {
    v.as_object().ok_or_else(|| err("expected an ESTree node object"))
}

fn pos(v: &Value) -> Option<Pos> {
    Some(Pos::new(v.get("line")?.as_u64()? as u32, v.get("column")?.as_u64()? as u32))
}

fn span_of(o: &Obj) -> Result<Span, ParseError> {
    let ty = o.get("type").and_then(Value::as_str).unwrap_or("?");
    let loc = o
        .get("loc")
        .ok_or_else(|| err(format!("{ty} node lacks `loc`")))?;
    match (loc.get("start").and_then(pos), loc.get("end").and_then(pos)) {
        (Some(s), Some(e)) if s <= e => Ok(Span::new(s, e)),
        _ => Err(err(format!("{ty} node has malformed `loc`"))),
    }
}

fn field<'a>(o: &'a Obj, name: &str) -> Option<&'a Value> {
    o.get(name).filter(|v| !v.is_null())
}

fn child(o: &Obj, name: &str) -> Result<RawNode, ParseError> {
    let ty = o.get("type").and_then(Value::as_str).unwrap_or("?");
    convert(field(o, name).ok_or_else(|| err(format!("{ty} node lacks `{name}`")))?)
}

fn opt_child(o: &Obj, name: &str) -> Result<Option<RawNode>, ParseError> {
    field(o, name).map(convert).transpose()
}

fn list(o: &Obj, name: &str) -> Result<Vec<RawNode>, ParseError> {
    match field(o, name) {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items.iter().filter(|v| !v.is_null()).map(convert).collect(),
        Some(_) => Err(err(format!("`{name}` is not an array"))),
    }
}

fn text(o: &Obj, name: &str) -> Result<String, ParseError> {
    o.get(name)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| err(format!("missing string field `{name}`")))
}

fn operator(o: &Obj, start: Pos, end: Pos) -> Result<RawNode, ParseError> {
    Ok(RawNode::leaf(
        Kind::Operator,
        Some(text(o, "operator")?),
        Span::new(start, end.max(start)),
    ))
}

fn params(o: &Obj, fallback: Pos) -> Result<RawNode, ParseError> {
    let ps = list(o, "params")?;
    let span = ps
        .iter()
        .map(|p| p.span)
        .reduce(|a, b| a.join(&b))
        .unwrap_or(Span::point(fallback));
    Ok(RawNode::new(Kind::Params, span, ps))
}

fn property_key(v: &Value) -> Result<RawNode, ParseError> {
    let o = as_obj(v)?;
    if o.get("type").and_then(Value::as_str) == Some("Identifier") {
        return Ok(RawNode::leaf(Kind::PropertyKey, Some(text(o, "name")?), span_of(o)?));
    }
    convert(v)
}

fn foreign(o: &Obj, span: Span) -> Result<RawNode, ParseError> {
    let mut children = Vec::new();
    for (k, v) in o {
        if k == "loc" {
            continue;
        }
        match v {
            Value::Object(inner) if inner.contains_key("type") => children.push(convert(v)?),
            Value::Array(items) => {
                for item in items {
                    if item.as_object().is_some_and(|i| i.contains_key("type")) {
                        children.push(convert(item)?);
                    }
                }
            }
            _ => {}
        }
    }
    children.sort_by_key(|c| (c.span.start, c.span.end));
    Ok(RawNode::new(Kind::Foreign, span, children))
}

fn convert(v: &Value) -> Result<RawNode, ParseError> {
    let o = as_obj(v)?;
    let ty = o
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| err("node lacks `type`"))?;
    let span = span_of(o)?;
    let node = |kind, children| Ok(RawNode::new(kind, span, children));
    match ty {
        "Program" => node(Kind::Program, list(o, "body")?),
        "VariableDeclaration" => {
            let kind = match text(o, "kind")?.as_str() {
                "var" => Kind::VarDeclaration,
                "let" => Kind::LetDeclaration,
                "const" => Kind::ConstDeclaration,
                other => return Err(err(format!("unknown declaration kind `{other}`"))),
            };
            node(kind, list(o, "declarations")?)
        }
        "VariableDeclarator" => {
            let id = field(o, "id").map(as_obj).transpose()?;
            if id.and_then(|i| i.get("type")).and_then(Value::as_str) != Some("Identifier") {
                return foreign(o, span);
            }
            let mut cs = vec![child(o, "id")?];
            cs.extend(opt_child(o, "init")?);
            node(Kind::Declarator, cs)
        }
        "FunctionDeclaration" | "FunctionExpression" => {
            if o.get("async").and_then(Value::as_bool) == Some(true)
                || o.get("generator").and_then(Value::as_bool) == Some(true)
            {
                return foreign(o, span);
            }
            let id = opt_child(o, "id")?;
            let kind = if ty == "FunctionDeclaration" && id.is_some() {
                Kind::FunctionDeclaration
            } else {
                Kind::FunctionExpression
            };
            let body = child(o, "body")?;
            let mut cs: Vec<RawNode> = id.into_iter().collect();
            cs.push(params(o, body.span.start)?);
            cs.push(body);
            node(kind, cs)
        }
        "ArrowFunctionExpression" => {
            if o.get("async").and_then(Value::as_bool) == Some(true) {
                return foreign(o, span);
            }
            let body = child(o, "body")?;
            node(Kind::ArrowFunction, vec![params(o, span.start)?, body])
        }
        "AssignmentPattern" => node(Kind::DefaultParam, vec![child(o, "left")?, child(o, "right")?]),
        "RestElement" => node(Kind::RestParam, vec![child(o, "argument")?]),
        "BlockStatement" => node(Kind::Block, list(o, "body")?),
        "ReturnStatement" => node(Kind::Return, opt_child(o, "argument")?.into_iter().collect()),
        "IfStatement" => {
            let mut cs = vec![child(o, "test")?, child(o, "consequent")?];
            cs.extend(opt_child(o, "alternate")?);
            node(Kind::If, cs)
        }
        "ForStatement" => {
            let slot = |name| -> Result<RawNode, ParseError> {
                Ok(opt_child(o, name)?
                    .unwrap_or_else(|| RawNode::leaf(Kind::Empty, None, Span::point(span.start))))
            };
            node(
                Kind::For,
                vec![slot("init")?, slot("test")?, slot("update")?, child(o, "body")?],
            )
        }
        "ForInStatement" | "ForOfStatement" => {
            if o.get("await").and_then(Value::as_bool) == Some(true) {
                return foreign(o, span);
            }
            let kind = if ty == "ForInStatement" { Kind::ForIn } else { Kind::ForOf };
            node(kind, vec![child(o, "left")?, child(o, "right")?, child(o, "body")?])
        }
        "WhileStatement" => node(Kind::While, vec![child(o, "test")?, child(o, "body")?]),
        "DoWhileStatement" => node(Kind::DoWhile, vec![child(o, "body")?, child(o, "test")?]),
        "BreakStatement" | "ContinueStatement" if field(o, "label").is_none() => {
            let kind = if ty == "BreakStatement" { Kind::Break } else { Kind::Continue };
            node(kind, Vec::new())
        }
        "ThrowStatement" => node(Kind::Throw, vec![child(o, "argument")?]),
        "TryStatement" => {
            let mut cs = vec![child(o, "block")?];
            cs.extend(opt_child(o, "handler")?);
            if let Some(f) = opt_child(o, "finalizer")? {
                cs.push(RawNode::new(Kind::Finally, f.span, vec![f]));
            }
            node(Kind::Try, cs)
        }
        "CatchClause" => {
            let mut cs: Vec<RawNode> = opt_child(o, "param")?.into_iter().collect();
            cs.push(child(o, "body")?);
            node(Kind::Catch, cs)
        }
        "EmptyStatement" => node(Kind::EmptyStatement, Vec::new()),
        "ExpressionStatement" => node(Kind::ExpressionStatement, vec![child(o, "expression")?]),
        "ImportDeclaration" => {
            let mut cs = list(o, "specifiers")?;
            cs.push(child(o, "source")?);
            node(Kind::Import, cs)
        }
        "ImportDefaultSpecifier" => node(Kind::ImportDefault, vec![child(o, "local")?]),
        "ImportNamespaceSpecifier" => node(Kind::ImportNamespace, vec![child(o, "local")?]),
        "ImportSpecifier" => {
            let local = child(o, "local")?;
            let imported = as_obj(field(o, "imported").ok_or_else(|| err("ImportSpecifier lacks `imported`"))?)?;
            let imported_name = text(imported, "name")?;
            if Some(&imported_name) == local.value.as_ref() && span_of(imported)? == local.span {
                node(Kind::ImportSpecifier, vec![local])
            } else {
                let name = RawNode::leaf(Kind::PropertyName, Some(imported_name), span_of(imported)?);
                node(Kind::ImportSpecifier, vec![name, local])
            }
        }
        "ExportDefaultDeclaration" => node(Kind::ExportDefault, vec![child(o, "declaration")?]),
        "ExportNamedDeclaration" if field(o, "declaration").is_some() => {
            node(Kind::ExportNamed, vec![child(o, "declaration")?])
        }
        "CallExpression" | "NewExpression" => {
            if o.get("optional").and_then(Value::as_bool) == Some(true) {
                return foreign(o, span);
            }
            let kind = if ty == "CallExpression" { Kind::Call } else { Kind::New };
            let mut cs = vec![child(o, "callee")?];
            cs.extend(list(o, "arguments")?);
            node(kind, cs)
        }
        "MemberExpression" => {
            if o.get("optional").and_then(Value::as_bool) == Some(true) {
                return foreign(o, span);
            }
            let object = child(o, "object")?;
            if o.get("computed").and_then(Value::as_bool) == Some(true) {
                return node(Kind::ComputedMember, vec![object, child(o, "property")?]);
            }
            let prop = as_obj(field(o, "property").ok_or_else(|| err("MemberExpression lacks `property`"))?)?;
            let name = RawNode::leaf(Kind::PropertyName, Some(text(prop, "name")?), span_of(prop)?);
            node(Kind::Member, vec![object, name])
        }
        "AssignmentExpression" | "BinaryExpression" | "LogicalExpression" => {
            let left = child(o, "left")?;
            let right = child(o, "right")?;
            let op = operator(o, left.span.end, right.span.start)?;
            let kind = if ty == "AssignmentExpression" { Kind::Assign } else { Kind::Binary };
            node(kind, vec![left, op, right])
        }
        "UnaryExpression" | "AwaitExpression" => {
            let arg = child(o, "argument")?;
            let op = if ty == "AwaitExpression" {
                RawNode::leaf(Kind::Operator, Some("await".into()), Span::new(span.start, arg.span.start))
            } else {
                operator(o, span.start, arg.span.start)?
            };
            node(Kind::Unary, vec![op, arg])
        }
        "UpdateExpression" => {
            let arg = child(o, "argument")?;
            if o.get("prefix").and_then(Value::as_bool) == Some(true) {
                let op = operator(o, span.start, arg.span.start)?;
                node(Kind::UpdatePrefix, vec![op, arg])
            } else {
                let op = operator(o, arg.span.end, span.end)?;
                node(Kind::UpdatePostfix, vec![arg, op])
            }
        }
        "ConditionalExpression" => node(
            Kind::Conditional,
            vec![child(o, "test")?, child(o, "consequent")?, child(o, "alternate")?],
        ),
        "ObjectExpression" => node(Kind::Object, list(o, "properties")?),
        "Property" => {
            let computed = o.get("computed").and_then(Value::as_bool) == Some(true);
            let plain_kind = o.get("kind").and_then(Value::as_str).unwrap_or("init") == "init";
            if computed || !plain_kind {
                return foreign(o, span);
            }
            if o.get("shorthand").and_then(Value::as_bool) == Some(true) {
                let value = child(o, "value")?;
                if value.kind != Kind::Identifier {
                    return foreign(o, span);
                }
                return node(Kind::ShorthandProperty, vec![value]);
            }
            let key = property_key(field(o, "key").ok_or_else(|| err("Property lacks `key`"))?)?;
            if o.get("method").and_then(Value::as_bool) == Some(true) {
                let f = as_obj(field(o, "value").ok_or_else(|| err("method lacks `value`"))?)?;
                let body = child(f, "body")?;
                let ps = params(f, body.span.start)?;
                return node(Kind::Method, vec![key, ps, body]);
            }
            node(Kind::Property, vec![key, child(o, "value")?])
        }
        "SpreadElement" => node(Kind::Spread, vec![child(o, "argument")?]),
        "ArrayExpression" => {
            let mut cs = Vec::new();
            let mut cursor = span.start;
            if let Some(Value::Array(items)) = o.get("elements") {
                for item in items {
                    if item.is_null() {
                        cs.push(RawNode::leaf(Kind::Empty, None, Span::point(cursor)));
                    } else {
                        let c = convert(item)?;
                        cursor = c.span.end;
                        cs.push(c);
                    }
                }
            }
            node(Kind::Array, cs)
        }
        "Identifier" => Ok(RawNode::leaf(Kind::Identifier, Some(text(o, "name")?), span)),
        "ThisExpression" => Ok(RawNode::leaf(Kind::This, None, span)),
        "Literal" => {
            if o.contains_key("regex") || o.contains_key("bigint") {
                return foreign(o, span);
            }
            let raw = text(o, "raw")?;
            let kind = match o.get("value") {
                Some(Value::String(_)) => Kind::StringLiteral,
                Some(Value::Number(_)) => Kind::NumberLiteral,
                Some(Value::Bool(_)) => Kind::BooleanLiteral,
                Some(Value::Null) if raw == "null" => return Ok(RawNode::leaf(Kind::NullLiteral, None, span)),
                // numbers beyond f64 range serialize as null
                _ => Kind::NumberLiteral,
            };
            Ok(RawNode::leaf(kind, Some(raw), span))
        }
        "TemplateLiteral" => {
            let quasis = o.get("quasis").and_then(Value::as_array);
            let exprs = o.get("expressions").and_then(Value::as_array);
            match (quasis, exprs) {
                (Some(q), Some(e)) if q.len() == 1 && e.is_empty() => {
                    let raw = q[0]
                        .get("value")
                        .and_then(|v| v.get("raw"))
                        .and_then(Value::as_str)
                        .ok_or_else(|| err("template quasi lacks raw text"))?;
                    Ok(RawNode::leaf(Kind::StringLiteral, Some(format!("`{raw}`")), span))
                }
                _ => foreign(o, span),
            }
        }
        _ => foreign(o, span),
    }
}
