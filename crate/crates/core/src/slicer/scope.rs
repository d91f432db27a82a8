use std::collections::{HashMap, HashSet};

use super::{Entity, EntityInfo, EntityKind, RefKind, Reference, ReferenceIndex};
use crate::syntax::{Kind, NodeId, SyntaxTree};

/// Method names that modify their receiver.
const MUTATORS: &[&str] = &[
    "push", "pop", "shift", "unshift", "splice", "sort", "reverse", "fill", "copyWithin", "set",
    "add", "delete", "clear",
];

type ScopeId = usize;

struct Scope {
    parent: Option<ScopeId>,
    names: HashMap<String, usize>,
}

struct Builder<'t> {
    tree: &'t SyntaxTree,
    scopes: Vec<Scope>,
    entities: Vec<EntityInfo>,
    /// Identifier references awaiting resolution, with their scope.
    pending: Vec<(NodeId, ScopeId)>,
    /// `this.name` members with their nearest enclosing object literal.
    this_members: Vec<(NodeId, Option<NodeId>)>,
    objects: HashMap<NodeId, HashMap<String, usize>>,
    declared: HashSet<NodeId>,
    free: HashMap<String, usize>,
    free_this: HashMap<String, usize>,
}

fn lines(tree: &SyntaxTree, id: NodeId) -> (u32, u32) {
    let s = tree.node(id).span;
    (s.start.line, s.end.line)
}

/// Builds the reference index: every identifier, object-property key and
/// `this.name` member is attached to the entity it denotes.
///
/// Declarations are collected before any name is resolved, so uses before a
/// `var`, `let`, `const` or function declaration in the same scope resolve to
/// it. Unresolved names become free entities grouped by name.
pub fn resolve_references(tree: &SyntaxTree) -> ReferenceIndex {
    let mut b = Builder {
        tree,
        scopes: vec![Scope { parent: None, names: HashMap::new() }],
        entities: Vec::new(),
        pending: Vec::new(),
        this_members: Vec::new(),
        objects: HashMap::new(),
        declared: HashSet::new(),
        free: HashMap::new(),
        free_this: HashMap::new(),
    };
    let root = tree.root();
    for &c in &tree.node(root).children {
        b.walk(c, 0, 0, None);
    }
    b.resolve();
    ReferenceIndex::new(b.entities)
}

impl<'t> Builder<'t> {
    fn new_scope(&mut self, parent: ScopeId) -> ScopeId {
        self.scopes.push(Scope { parent: Some(parent), names: HashMap::new() });
        self.scopes.len() - 1
    }

    fn push_entity(&mut self, entity: Entity, body: Option<(u32, u32)>) -> usize {
        self.entities.push(EntityInfo { entity, refs: Vec::new(), body });
        self.entities.len() - 1
    }

    fn declare(&mut self, scope: ScopeId, ident: NodeId, kind: EntityKind, unit: (u32, u32), body: Option<(u32, u32)>) {
        let node = self.tree.node(ident);
        let Some(name) = node.value.clone() else { return };
        let line = node.span.start.line;
        self.declared.insert(ident);
        let e = match self.scopes[scope].names.get(&name) {
            Some(&e) => {
                if self.entities[e].body.is_none() {
                    self.entities[e].body = body;
                }
                e
            }
            None => {
                let entity = Entity { name: name.clone(), kind, declaration_site: Some((line, ident)) };
                let e = self.push_entity(entity, body);
                self.scopes[scope].names.insert(name, e);
                e
            }
        };
        self.entities[e].refs.push(Reference { line, node: ident, kind: RefKind::Definition, unit });
    }

    fn is_function_value(&self, id: NodeId) -> bool {
        matches!(self.tree.node(id).kind, Kind::FunctionExpression | Kind::ArrowFunction)
    }

    fn walk(&mut self, id: NodeId, scope: ScopeId, fscope: ScopeId, object: Option<NodeId>) {
        let tree = self.tree;
        let n = tree.node(id);
        let ch = &n.children;
        match n.kind {
            Kind::FunctionDeclaration => {
                let span = lines(tree, id);
                self.declare(scope, ch[0], EntityKind::Function, span, Some(span));
                let s = self.new_scope(scope);
                self.function_parts(ch[1], ch[2], s, object);
            }
            Kind::FunctionExpression => {
                let s = self.new_scope(scope);
                if ch.len() == 3 {
                    let header = lines(tree, ch[0]);
                    self.declare(s, ch[0], EntityKind::Function, header, Some(lines(tree, id)));
                }
                let k = ch.len();
                self.function_parts(ch[k - 2], ch[k - 1], s, object);
            }
            Kind::ArrowFunction => {
                let s = self.new_scope(scope);
                let body = ch[1];
                if tree.node(body).kind == Kind::Block {
                    self.function_parts(ch[0], body, s, object);
                } else {
                    self.params(ch[0], s, object);
                    self.walk(body, s, s, object);
                }
            }
            Kind::Method => {
                let s = self.new_scope(scope);
                self.function_parts(ch[1], ch[2], s, object);
            }
            Kind::Block | Kind::For | Kind::ForIn | Kind::ForOf => {
                let s = self.new_scope(scope);
                for &c in ch {
                    self.walk(c, s, fscope, object);
                }
            }
            Kind::Catch => {
                let s = self.new_scope(scope);
                for &c in ch {
                    if tree.node(c).kind == Kind::Identifier {
                        let l = lines(tree, c);
                        self.declare(s, c, EntityKind::Variable, l, None);
                    } else {
                        self.walk(c, s, fscope, object);
                    }
                }
            }
            Kind::VarDeclaration | Kind::LetDeclaration | Kind::ConstDeclaration => {
                let target = if n.kind == Kind::VarDeclaration { fscope } else { scope };
                for &d in ch {
                    let dn = tree.node(d);
                    let fn_valued = dn.children.get(1).is_some_and(|&i| self.is_function_value(i));
                    let unit = lines(tree, d);
                    let (kind, body) = if fn_valued {
                        (EntityKind::Function, Some((lines(tree, id).0, unit.1)))
                    } else {
                        (EntityKind::Variable, None)
                    };
                    self.declare(target, dn.children[0], kind, unit, body);
                    for &c in &dn.children[1..] {
                        self.walk(c, scope, fscope, object);
                    }
                }
            }
            Kind::Import => {
                let unit = lines(tree, id);
                for &c in ch {
                    let cn = tree.node(c);
                    if matches!(cn.kind, Kind::ImportDefault | Kind::ImportSpecifier | Kind::ImportNamespace) {
                        let local = *cn.children.last().expect("import binding");
                        self.declare(0, local, EntityKind::ImportBinding, unit, None);
                    }
                }
            }
            Kind::Object => {
                let mut props: HashMap<String, usize> = HashMap::new();
                for &c in ch {
                    let cn = tree.node(c);
                    if !matches!(cn.kind, Kind::Property | Kind::Method) {
                        continue;
                    }
                    let key = cn.children[0];
                    let kn = tree.node(key);
                    if kn.kind != Kind::PropertyKey {
                        continue;
                    }
                    let name = kn.value.clone().unwrap_or_default();
                    let unit = lines(tree, c);
                    let fn_valued = cn.kind == Kind::Method || self.is_function_value(cn.children[1]);
                    let body = fn_valued.then_some(unit);
                    let e = match props.get(&name) {
                        Some(&e) => e,
                        None => {
                            let entity = Entity {
                                name: name.clone(),
                                kind: EntityKind::ObjectProperty,
                                declaration_site: Some((kn.span.start.line, key)),
                            };
                            let e = self.push_entity(entity, body);
                            props.insert(name, e);
                            e
                        }
                    };
                    self.entities[e].refs.push(Reference {
                        line: kn.span.start.line,
                        node: key,
                        kind: RefKind::Definition,
                        unit,
                    });
                }
                self.objects.insert(id, props);
                for &c in ch {
                    self.walk(c, scope, fscope, Some(id));
                }
            }
            Kind::Member if tree.node(ch[0]).kind == Kind::This => {
                self.this_members.push((id, object));
            }
            Kind::Identifier => {
                if !self.declared.contains(&id) {
                    self.pending.push((id, scope));
                }
            }
            _ => {
                for &c in ch {
                    self.walk(c, scope, fscope, object);
                }
            }
        }
    }

    fn params(&mut self, params: NodeId, s: ScopeId, object: Option<NodeId>) {
        let tree = self.tree;
        for &p in &tree.node(params).children {
            let pn = tree.node(p);
            match pn.kind {
                Kind::Identifier => {
                    let l = lines(tree, p);
                    self.declare(s, p, EntityKind::Parameter, l, None);
                }
                Kind::DefaultParam | Kind::RestParam => {
                    let l = lines(tree, p);
                    self.declare(s, pn.children[0], EntityKind::Parameter, l, None);
                    for &c in &pn.children[1..] {
                        self.walk(c, s, s, object);
                    }
                }
                _ => self.walk(p, s, s, object),
            }
        }
    }

    fn function_parts(&mut self, params: NodeId, body: NodeId, s: ScopeId, object: Option<NodeId>) {
        self.params(params, s, object);
        for &c in &self.tree.node(body).children {
            self.walk(c, s, s, object);
        }
    }

    fn lookup(&self, mut scope: ScopeId, name: &str) -> Option<usize> {
        loop {
            if let Some(&e) = self.scopes[scope].names.get(name) {
                return Some(e);
            }
            scope = self.scopes[scope].parent?;
        }
    }

    fn resolve(&mut self) {
        let tree = self.tree;
        for (id, scope) in std::mem::take(&mut self.pending) {
            let name = tree.node(id).value.clone().unwrap_or_default();
            let kind = ref_kind(tree, id);
            let e = match self.lookup(scope, &name) {
                Some(e) => e,
                None => match self.free.get(&name) {
                    Some(&e) => e,
                    None => {
                        let entity = Entity { name: name.clone(), kind: EntityKind::Variable, declaration_site: None };
                        let e = self.push_entity(entity, None);
                        self.free.insert(name, e);
                        e
                    }
                },
            };
            if kind == RefKind::Call && self.entities[e].entity.declaration_site.is_none() {
                self.entities[e].entity.kind = EntityKind::Function;
            }
            self.entities[e].refs.push(Reference {
                line: tree.node(id).span.start.line,
                node: id,
                kind,
                unit: ref_unit(tree, id),
            });
        }
        for (member, object) in std::mem::take(&mut self.this_members) {
            let prop = tree.node(member).children[1];
            let name = tree.node(prop).value.clone().unwrap_or_default();
            let resolved = object.and_then(|o| self.objects.get(&o)).and_then(|m| m.get(&name)).copied();
            let e = match resolved {
                Some(e) => e,
                None => match self.free_this.get(&name) {
                    Some(&e) => e,
                    None => {
                        let entity = Entity { name: name.clone(), kind: EntityKind::ObjectProperty, declaration_site: None };
                        let e = self.push_entity(entity, None);
                        self.free_this.insert(name, e);
                        e
                    }
                },
            };
            let kind = ref_kind(tree, member);
            self.entities[e].refs.push(Reference {
                line: tree.node(prop).span.start.line,
                node: prop,
                kind,
                unit: ref_unit(tree, member),
            });
        }
        for e in &mut self.entities {
            e.refs.sort_by_key(|r| (r.line, r.node));
        }
    }
}

/// How `id` (an identifier or a `this.x` member) is used by its context.
fn ref_kind(tree: &SyntaxTree, id: NodeId) -> RefKind {
    let Some(p) = tree.parent(id) else { return RefKind::Use };
    let pn = tree.node(p);
    let first = pn.children.first() == Some(&id);
    match pn.kind {
        Kind::Assign if first => return RefKind::Mutation,
        Kind::UpdatePrefix | Kind::UpdatePostfix => return RefKind::Mutation,
        Kind::ForIn | Kind::ForOf if first => return RefKind::Mutation,
        Kind::Call if first => return RefKind::Call,
        _ => {}
    }
    // Base of a member chain: the chain's context decides.
    let mut top = id;
    while let Some(p) = tree.parent(top) {
        let pn = tree.node(p);
        if matches!(pn.kind, Kind::Member | Kind::ComputedMember) && pn.children[0] == top {
            top = p;
        } else {
            break;
        }
    }
    if top == id {
        return RefKind::Use;
    }
    let Some(p) = tree.parent(top) else { return RefKind::Use };
    let pn = tree.node(p);
    let first = pn.children.first() == Some(&top);
    match pn.kind {
        Kind::Assign if first => RefKind::Mutation,
        Kind::UpdatePrefix | Kind::UpdatePostfix => RefKind::Mutation,
        Kind::Call if first => {
            let tn = tree.node(top);
            let method = (tn.kind == Kind::Member)
                .then(|| tree.node(tn.children[1]).value.as_deref())
                .flatten();
            if method.is_some_and(|m| MUTATORS.contains(&m)) {
                RefKind::Mutation
            } else {
                RefKind::Use
            }
        }
        _ => RefKind::Use,
    }
}

/// Line range of the smallest statement-like construct holding `id`. Inside
/// a control header or function signature, the header component alone.
fn ref_unit(tree: &SyntaxTree, id: NodeId) -> (u32, u32) {
    let mut child = id;
    for a in tree.ancestors(id) {
        match tree.node(a).kind {
            Kind::Declarator
            | Kind::ExpressionStatement
            | Kind::Return
            | Kind::Throw
            | Kind::Property
            | Kind::ShorthandProperty
            | Kind::Import
            | Kind::ExportDefault
            | Kind::ExportNamed => return lines(tree, a),
            Kind::If
            | Kind::For
            | Kind::ForIn
            | Kind::ForOf
            | Kind::While
            | Kind::DoWhile
            | Kind::Block
            | Kind::Program
            | Kind::FunctionDeclaration
            | Kind::FunctionExpression
            | Kind::ArrowFunction
            | Kind::Method
            | Kind::Try
            | Kind::Catch
            | Kind::Finally => return lines(tree, child),
            _ => {}
        }
        child = a;
    }
    lines(tree, id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, SourceFile};

    fn index(src: &str) -> (SyntaxTree, ReferenceIndex) {
        let t = parse(&SourceFile::new("t.js", src)).unwrap();
        let i = resolve_references(&t);
        (t, i)
    }

    fn resolved_decl_line(t: &SyntaxTree, i: &ReferenceIndex, line: u32, name: &str) -> Option<u32> {
        i.on_line(line)
            .find(|(_, r)| r.kind != RefKind::Definition && t.node(r.node).value.as_deref() == Some(name))
            .and_then(|(e, _)| i.entities[e].entity.declaration_site)
            .map(|(l, _)| l)
    }

    #[test]
    fn closure_sees_outer_var() {
        let (t, i) = index("var a=1;\nfunction f(){\n return a;\n}");
        assert_eq!(resolved_decl_line(&t, &i, 3, "a"), Some(1));
    }

    #[test]
    fn block_shadowing() {
        let (t, i) = index("let x=1;\n{\n let x=2;\n y=x;\n}");
        assert_eq!(resolved_decl_line(&t, &i, 4, "x"), Some(3));
    }

    #[test]
    fn var_is_hoisted_out_of_blocks() {
        let (t, i) = index("f(v);\nif (c) {\n var v = 1;\n}");
        assert_eq!(resolved_decl_line(&t, &i, 1, "v"), Some(3));
        let (t, i) = index("f(v);\nif (c) {\n let v = 1;\n}");
        assert_eq!(resolved_decl_line(&t, &i, 1, "v"), None);
    }

    #[test]
    fn parameter_shadows_global() {
        let (t, i) = index("const user = 1;\nfunction s(user) {\n return user;\n}\ns(user);");
        assert_eq!(resolved_decl_line(&t, &i, 3, "user"), Some(2));
        assert_eq!(resolved_decl_line(&t, &i, 5, "user"), Some(1));
    }

    #[test]
    fn reference_kinds() {
        let (t, i) = index("let a = [];\na.push(1);\na.length;\na = 2;\na++;\nf(a);");
        let kind_on = |line| {
            i.on_line(line)
                .find(|(_, r)| t.node(r.node).value.as_deref() == Some("a"))
                .map(|(_, r)| r.kind)
                .unwrap()
        };
        assert_eq!(kind_on(1), RefKind::Definition);
        assert_eq!(kind_on(2), RefKind::Mutation);
        assert_eq!(kind_on(3), RefKind::Use);
        assert_eq!(kind_on(4), RefKind::Mutation);
        assert_eq!(kind_on(5), RefKind::Mutation);
        assert_eq!(kind_on(6), RefKind::Use);
        let f = i.on_line(6).find(|(_, r)| r.kind == RefKind::Call).unwrap().0;
        assert_eq!(i.entities[f].entity.kind, EntityKind::Function);
        assert!(i.entities[f].entity.declaration_site.is_none());
    }

    #[test]
    fn this_members_resolve_to_object_properties() {
        let (_, i) = index("x = {\n count: 0,\n inc() {\n  this.count = 1;\n }\n};");
        let count = i
            .entities
            .iter()
            .find(|e| e.entity.name == "count")
            .unwrap();
        assert_eq!(count.entity.kind, EntityKind::ObjectProperty);
        assert_eq!(count.refs.len(), 2);
        assert_eq!(count.refs[1].kind, RefKind::Mutation);
        let inc = i.entities.iter().find(|e| e.entity.name == "inc").unwrap();
        assert_eq!(inc.body, Some((3, 5)));
    }
}
