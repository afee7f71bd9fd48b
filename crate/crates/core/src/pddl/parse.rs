use std::collections::{HashMap, HashSet};

use super::sexpr::{self, Pos, SExpr};
use super::{
    ActionSchema, AtomTemplate, DomainDef, GroundAtom, PddlError, PredicateSchema, ProblemDef,
    Term, TypeDecl, TypedName, ROOT_TYPE,
};

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];

type Result<T> = std::result::Result<T, PddlError>;

pub fn parse_domain(text: &str) -> Result<DomainDef> {
    let top = sexpr::read(text)?;
    let items = expect_list(&top, "expected `(define (domain ...) ...)`")?;
    let name = define_header(&top, items, "domain")?;

    let mut dom = DomainDef {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };

    let mut raw_actions = Vec::new();
    for section in &items[2..] {
        let list = expect_list(section, "expected a domain section")?;
        let Some(key) = section.head() else {
            return Err(PddlError::syntax(
                section.pos(),
                "expected a section keyword",
            ));
        };
        match key {
            ":requirements" => dom.requirements = requirements(&list[1..])?,
            ":types" => dom.types = types(&list[1..])?,
            ":constants" => {
                dom.constants = typed_list(&list[1..], false)?
                    .into_iter()
                    .map(|(t, _)| t)
                    .collect()
            }
            ":predicates" => {
                for p in &list[1..] {
                    dom.predicates.push(predicate_schema(p)?);
                }
            }
            ":action" => raw_actions.push(section),
            ":functions" => return Err(PddlError::unsupported(section.pos(), "numeric fluents")),
            ":derived" => return Err(PddlError::unsupported(section.pos(), "derived predicates")),
            ":constraints" => return Err(PddlError::unsupported(section.pos(), "constraints")),
            ":durative-action" => {
                return Err(PddlError::unsupported(section.pos(), "durative actions"))
            }
            other => {
                return Err(PddlError::syntax(
                    section.pos(),
                    format!("unknown domain section `{other}`"),
                ))
            }
        }
    }

    check_types(&dom, &top)?;
    check_unique(
        dom.predicates.iter().map(|p| p.name.as_str()),
        top.pos(),
        "predicate",
    )?;
    check_unique(
        dom.constants.iter().map(|c| c.name.as_str()),
        top.pos(),
        "constant",
    )?;
    for c in &dom.constants {
        require_type(&dom, &c.ty, top.pos())?;
    }
    for p in &dom.predicates {
        for param in &p.params {
            require_type(&dom, &param.ty, top.pos())?;
        }
    }
    for section in raw_actions {
        let action = action_schema(&dom, section)?;
        dom.actions.push(action);
    }
    check_unique(
        dom.actions.iter().map(|a| a.name.as_str()),
        top.pos(),
        "action",
    )?;
    Ok(dom)
}

pub fn parse_problem(text: &str, dom: &DomainDef) -> Result<ProblemDef> {
    let top = sexpr::read(text)?;
    let items = expect_list(&top, "expected `(define (problem ...) ...)`")?;
    let name = define_header(&top, items, "problem")?;

    let mut domain_name = None;
    let mut objects = Vec::new();
    let mut init_exprs: &[SExpr] = &[];
    let mut goal_expr = None;
    for section in &items[2..] {
        let list = expect_list(section, "expected a problem section")?;
        match section.head() {
            Some(":domain") => {
                let [_, n] = list else {
                    return Err(PddlError::syntax(
                        section.pos(),
                        "expected `(:domain NAME)`",
                    ));
                };
                domain_name = Some(expect_atom(n, "expected domain name")?.to_string());
            }
            Some(":requirements") => {
                requirements(&list[1..])?;
            }
            Some(":objects") => objects = typed_list(&list[1..], false)?,
            Some(":init") => init_exprs = &list[1..],
            Some(":goal") => {
                let [_, g] = list else {
                    return Err(PddlError::syntax(
                        section.pos(),
                        "expected `(:goal FORMULA)`",
                    ));
                };
                goal_expr = Some(g);
            }
            Some(":metric") => return Err(PddlError::unsupported(section.pos(), "metric")),
            Some(":constraints") => {
                return Err(PddlError::unsupported(section.pos(), "constraints"))
            }
            Some(other) => {
                return Err(PddlError::syntax(
                    section.pos(),
                    format!("unknown problem section `{other}`"),
                ))
            }
            None => {
                return Err(PddlError::syntax(
                    section.pos(),
                    "expected a section keyword",
                ))
            }
        }
    }

    let domain_name =
        domain_name.ok_or_else(|| PddlError::syntax(top.pos(), "missing `(:domain ...)`"))?;
    if domain_name != dom.name {
        return Err(PddlError::DomainNameMismatch {
            expected: dom.name.clone(),
            found: domain_name,
        });
    }

    for (obj, pos) in &objects {
        require_type(dom, &obj.ty, *pos)?;
    }
    let objects: Vec<TypedName> = objects.into_iter().map(|(t, _)| t).collect();
    check_unique(
        objects
            .iter()
            .chain(&dom.constants)
            .map(|o| o.name.as_str()),
        top.pos(),
        "object",
    )?;
    let object_types: HashMap<&str, &str> = objects
        .iter()
        .chain(&dom.constants)
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();

    let mut init = Vec::new();
    for e in init_exprs {
        let atom = ground_atom(dom, &object_types, e)?;
        if !init.contains(&atom) {
            init.push(atom);
        }
    }
    let mut goal = Vec::new();
    if let Some(g) = goal_expr {
        for e in conjuncts(g)? {
            let atom = ground_atom(dom, &object_types, e)?;
            if !goal.contains(&atom) {
                goal.push(atom);
            }
        }
    }

    Ok(ProblemDef {
        name,
        domain_name,
        objects,
        init,
        goal,
    })
}

fn expect_list<'a>(e: &'a SExpr, msg: &str) -> Result<&'a [SExpr]> {
    e.as_list().ok_or_else(|| PddlError::syntax(e.pos(), msg))
}

fn expect_atom<'a>(e: &'a SExpr, msg: &str) -> Result<&'a str> {
    e.as_atom().ok_or_else(|| PddlError::syntax(e.pos(), msg))
}

fn define_header(top: &SExpr, items: &[SExpr], kind: &str) -> Result<String> {
    if items.first().and_then(SExpr::as_atom) != Some("define") || items.len() < 2 {
        return Err(PddlError::syntax(top.pos(), "expected `(define ...)`"));
    }
    let header = expect_list(&items[1], "expected `(domain NAME)` header")?;
    match header {
        [k, n] if k.as_atom() == Some(kind) => Ok(ident(n)?.to_string()),
        _ => Err(PddlError::syntax(
            items[1].pos(),
            format!("expected `({kind} NAME)`"),
        )),
    }
}

fn ident(e: &SExpr) -> Result<&str> {
    let s = expect_atom(e, "expected an identifier")?;
    if s.starts_with('?') || s.starts_with(':') || s == "-" {
        return Err(PddlError::syntax(
            e.pos(),
            format!("invalid identifier `{s}`"),
        ));
    }
    Ok(s)
}

fn requirements(items: &[SExpr]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for r in items {
        let s = expect_atom(r, "expected a requirement flag")?;
        if !SUPPORTED_REQUIREMENTS.contains(&s) {
            return Err(PddlError::unsupported(r.pos(), format!("requirement {s}")));
        }
        if !out.iter().any(|x| x == s) {
            out.push(s.to_string());
        }
    }
    Ok(out)
}

/// `a b - t c` style lists. Names without an explicit type get the root type.
fn typed_list(items: &[SExpr], variables: bool) -> Result<Vec<(TypedName, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        if e.as_atom() == Some("-") {
            let Some(ty) = items.get(i + 1) else {
                return Err(PddlError::syntax(e.pos(), "expected a type after `-`"));
            };
            if ty.head() == Some("either") {
                return Err(PddlError::unsupported(ty.pos(), "either types"));
            }
            let ty = ident(ty)?;
            if pending.is_empty() {
                return Err(PddlError::syntax(e.pos(), "type annotation without names"));
            }
            out.extend(pending.drain(..).map(|(n, p)| (TypedName::new(n, ty), p)));
            i += 2;
            continue;
        }
        let name = expect_atom(e, "expected a name")?;
        if variables {
            if !name.starts_with('?') || name.len() < 2 {
                return Err(PddlError::syntax(
                    e.pos(),
                    format!("expected a variable, found `{name}`"),
                ));
            }
        } else {
            ident(e)?;
        }
        pending.push((name.to_string(), e.pos()));
        i += 1;
    }
    out.extend(
        pending
            .into_iter()
            .map(|(n, p)| (TypedName::new(n, ROOT_TYPE), p)),
    );
    Ok(out)
}

fn types(items: &[SExpr]) -> Result<Vec<TypeDecl>> {
    let mut decls: Vec<TypeDecl> = Vec::new();
    for (t, pos) in typed_list(items, false)? {
        if t.name == ROOT_TYPE {
            continue;
        }
        if decls.iter().any(|d| d.name == t.name) {
            return Err(PddlError::syntax(
                pos,
                format!("type `{}` declared twice", t.name),
            ));
        }
        decls.push(TypeDecl {
            name: t.name,
            parent: t.ty,
        });
    }
    // Parents mentioned only on the right of `-` are implicit children of the root.
    let implicit: Vec<String> = decls
        .iter()
        .map(|d| d.parent.clone())
        .filter(|p| p != ROOT_TYPE)
        .collect();
    for p in implicit {
        if !decls.iter().any(|d| d.name == p) {
            decls.push(TypeDecl {
                name: p,
                parent: ROOT_TYPE.to_string(),
            });
        }
    }
    Ok(decls)
}

fn check_types(dom: &DomainDef, top: &SExpr) -> Result<()> {
    for t in &dom.types {
        let mut seen = HashSet::new();
        let mut cur = t.name.as_str();
        while cur != ROOT_TYPE {
            if !seen.insert(cur) {
                return Err(PddlError::syntax(
                    top.pos(),
                    format!("type hierarchy has a cycle through `{}`", t.name),
                ));
            }
            cur = match dom.types.iter().find(|d| d.name == cur) {
                Some(d) => &d.parent,
                None => break,
            };
        }
    }
    Ok(())
}

fn require_type(dom: &DomainDef, ty: &str, pos: Pos) -> Result<()> {
    if dom.has_type(ty) {
        Ok(())
    } else {
        Err(PddlError::UnknownType {
            line: pos.line,
            col: pos.col,
            name: ty.to_string(),
        })
    }
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>, pos: Pos, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(PddlError::syntax(
                pos,
                format!("{what} `{n}` declared twice"),
            ));
        }
    }
    Ok(())
}

fn predicate_schema(e: &SExpr) -> Result<PredicateSchema> {
    let list = expect_list(e, "expected a predicate declaration")?;
    let Some(first) = list.first() else {
        return Err(PddlError::syntax(e.pos(), "empty predicate declaration"));
    };
    let name = ident(first)?.to_string();
    let params = typed_list(&list[1..], true)?
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    Ok(PredicateSchema { name, params })
}

fn conjuncts(e: &SExpr) -> Result<&[SExpr]> {
    let list = expect_list(e, "expected a formula")?;
    match e.head() {
        None if list.is_empty() => Ok(&[]),
        Some("and") => Ok(&list[1..]),
        _ => Ok(std::slice::from_ref(e)),
    }
}

fn reject_connective(e: &SExpr, in_effect: bool) -> Result<()> {
    let feature = match e.head() {
        Some("not") if !in_effect => "negative preconditions",
        Some("or") | Some("imply") => "disjunctive preconditions",
        Some("exists") | Some("forall") => "quantifiers",
        Some("when") => "conditional effects",
        Some("=") => "equality",
        Some("increase") | Some("decrease") | Some("assign") | Some("scale-up")
        | Some("scale-down") => "action costs / numeric effects",
        Some(">") | Some("<") | Some(">=") | Some("<=") => "numeric conditions",
        Some("and") => "nested conjunctions",
        _ => return Ok(()),
    };
    Err(PddlError::unsupported(e.pos(), feature))
}

fn action_schema(dom: &DomainDef, e: &SExpr) -> Result<ActionSchema> {
    let list = expect_list(e, "expected an action")?;
    let Some(name_expr) = list.get(1) else {
        return Err(PddlError::syntax(e.pos(), "action without a name"));
    };
    let name = ident(name_expr)?.to_string();
    let mut params = Vec::new();
    let mut pre_expr = None;
    let mut eff_expr = None;
    let mut i = 2;
    while i < list.len() {
        let key = expect_atom(&list[i], "expected an action keyword")?;
        let Some(val) = list.get(i + 1) else {
            return Err(PddlError::syntax(
                list[i].pos(),
                format!("missing value for `{key}`"),
            ));
        };
        match key {
            ":parameters" => {
                let items = expect_list(val, "expected a parameter list")?;
                params = typed_list(items, true)?;
            }
            ":precondition" => pre_expr = Some(val),
            ":effect" => eff_expr = Some(val),
            other => {
                return Err(PddlError::syntax(
                    list[i].pos(),
                    format!("unknown action keyword `{other}`"),
                ))
            }
        }
        i += 2;
    }
    for (p, pos) in &params {
        require_type(dom, &p.ty, *pos)?;
    }
    let params: Vec<TypedName> = params.into_iter().map(|(t, _)| t).collect();
    check_unique(params.iter().map(|p| p.name.as_str()), e.pos(), "parameter")?;

    let mut pre = Vec::new();
    if let Some(p) = pre_expr {
        for c in conjuncts(p)? {
            reject_connective(c, false)?;
            push_unique(&mut pre, atom_template(dom, &params, c)?);
        }
    }
    let mut add = Vec::new();
    let mut del = Vec::new();
    if let Some(eff) = eff_expr {
        for c in conjuncts(eff)? {
            reject_connective(c, true)?;
            if c.head() == Some("not") {
                let inner = match expect_list(c, "expected `(not ATOM)`")? {
                    [_, inner] => inner,
                    _ => return Err(PddlError::syntax(c.pos(), "expected `(not ATOM)`")),
                };
                reject_connective(inner, false)?;
                push_unique(&mut del, atom_template(dom, &params, inner)?);
            } else {
                push_unique(&mut add, atom_template(dom, &params, c)?);
            }
        }
    }
    if let Some(both) = add.iter().find(|a| del.contains(a)) {
        return Err(PddlError::syntax(
            e.pos(),
            format!("action `{name}` both adds and deletes {both}"),
        ));
    }
    Ok(ActionSchema {
        name,
        params,
        pre,
        add,
        del,
    })
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn atom_template(dom: &DomainDef, params: &[TypedName], e: &SExpr) -> Result<AtomTemplate> {
    let list = expect_list(e, "expected an atom")?;
    let Some(first) = list.first() else {
        return Err(PddlError::syntax(e.pos(), "empty atom"));
    };
    let pname = ident(first)?;
    let pos = e.pos();
    let schema = dom
        .predicate(pname)
        .ok_or_else(|| PddlError::UnknownPredicate {
            line: pos.line,
            col: pos.col,
            name: pname.to_string(),
        })?;
    let args = &list[1..];
    if args.len() != schema.params.len() {
        return Err(PddlError::ArityMismatch {
            line: pos.line,
            col: pos.col,
            predicate: pname.to_string(),
            expected: schema.params.len(),
            found: args.len(),
        });
    }
    let mut terms = Vec::with_capacity(args.len());
    for (arg, expected) in args.iter().zip(&schema.params) {
        let s = expect_atom(arg, "expected a term")?;
        let (term, ty) = if s.starts_with('?') {
            let Some(p) = params.iter().find(|p| p.name == s) else {
                return Err(PddlError::syntax(
                    arg.pos(),
                    format!("variable `{s}` is not an action parameter"),
                ));
            };
            (Term::Var(s.to_string()), p.ty.as_str())
        } else {
            let Some(c) = dom.constants.iter().find(|c| c.name == s) else {
                return Err(PddlError::UnknownObject {
                    line: arg.pos().line,
                    col: arg.pos().col,
                    name: s.to_string(),
                });
            };
            (Term::Const(s.to_string()), c.ty.as_str())
        };
        if !dom.is_subtype(ty, &expected.ty) {
            return Err(PddlError::TypeMismatch {
                line: arg.pos().line,
                col: arg.pos().col,
                predicate: pname.to_string(),
                arg: s.to_string(),
                expected: expected.ty.clone(),
                found: ty.to_string(),
            });
        }
        terms.push(term);
    }
    Ok(AtomTemplate {
        predicate: pname.to_string(),
        args: terms,
    })
}

fn ground_atom(
    dom: &DomainDef,
    object_types: &HashMap<&str, &str>,
    e: &SExpr,
) -> Result<GroundAtom> {
    reject_connective(e, false)?;
    let list = expect_list(e, "expected a ground atom")?;
    let Some(first) = list.first() else {
        return Err(PddlError::syntax(e.pos(), "empty atom"));
    };
    let pname = ident(first)?;
    let pos = e.pos();
    let schema = dom
        .predicate(pname)
        .ok_or_else(|| PddlError::UnknownPredicate {
            line: pos.line,
            col: pos.col,
            name: pname.to_string(),
        })?;
    let args = &list[1..];
    if args.len() != schema.params.len() {
        return Err(PddlError::ArityMismatch {
            line: pos.line,
            col: pos.col,
            predicate: pname.to_string(),
            expected: schema.params.len(),
            found: args.len(),
        });
    }
    let mut names = Vec::with_capacity(args.len());
    for (arg, expected) in args.iter().zip(&schema.params) {
        let s = ident(arg)?;
        let Some(ty) = object_types.get(s) else {
            return Err(PddlError::UnknownObject {
                line: arg.pos().line,
                col: arg.pos().col,
                name: s.to_string(),
            });
        };
        if !dom.is_subtype(ty, &expected.ty) {
            return Err(PddlError::TypeMismatch {
                line: arg.pos().line,
                col: arg.pos().col,
                predicate: pname.to_string(),
                arg: s.to_string(),
                expected: expected.ty.clone(),
                found: ty.to_string(),
            });
        }
        names.push(s.to_string());
    }
    Ok(GroundAtom {
        predicate: pname.to_string(),
        args: names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOMAIN: &str = include_str!("../../fixtures/delivery.pddl");
    const PROBLEM: &str = include_str!("../../fixtures/delivery-p01.pddl");

    #[test]
    fn one_predicate_no_actions() {
        let d = parse_domain(
            "(define (domain t) (:requirements :strips :typing) (:types loc)
               (:predicates (at ?x - loc)))",
        )
        .unwrap();
        assert_eq!(d.predicates.len(), 1);
        assert_eq!(d.predicates[0].name, "at");
        assert_eq!(d.predicates[0].params.len(), 1);
        assert!(d.actions.is_empty());
    }

    #[test]
    fn effect_variable_outside_parameters_is_a_syntax_error() {
        let err = parse_domain(
            "(define (domain t) (:predicates (p ?x))
               (:action a :parameters (?x) :precondition (p ?x) :effect (p ?y)))",
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Syntax { .. }), "{err}");
    }

    #[test]
    fn delivery_fixture_shape() {
        let d = parse_domain(DOMAIN).unwrap();
        assert_eq!(d.predicates.len(), 3);
        let names: Vec<_> = d.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["move", "pick", "drop"]);
        let p = parse_problem(PROBLEM, &d).unwrap();
        assert_eq!(p.objects.len(), 7);
        assert_eq!(p.init.len(), 5);
        assert_eq!(p.goal.len(), 1);
    }

    #[test]
    fn identifiers_are_lowercased() {
        let d = parse_domain("(DEFINE (DOMAIN Mixed) (:PREDICATES (On ?X)))").unwrap();
        assert_eq!(d.name, "mixed");
        assert_eq!(d.predicates[0].name, "on");
        assert_eq!(d.predicates[0].params[0].name, "?x");
    }

    #[test]
    fn unsupported_features_are_rejected() {
        let cases = [
            "(define (domain t) (:requirements :adl) (:predicates (p)))",
            "(define (domain t) (:requirements :negative-preconditions) (:predicates (p)))",
            "(define (domain t) (:predicates (p)) (:functions (total-cost)))",
            "(define (domain t) (:predicates (p)) (:action a :parameters () :precondition (not (p)) :effect (p)))",
            "(define (domain t) (:predicates (p) (q)) (:action a :parameters () :precondition (p) :effect (when (p) (q))))",
            "(define (domain t) (:predicates (p)) (:action a :parameters () :precondition (p) :effect (increase (total-cost) 1)))",
            "(define (domain t) (:types a b) (:predicates (p ?x - (either a b))))",
            "(define (domain t) (:predicates (p)) (:derived (p) (p)))",
        ];
        for c in cases {
            let err = parse_domain(c).unwrap_err();
            assert!(
                matches!(err, PddlError::UnsupportedFeature { .. }),
                "{c}: {err}"
            );
        }
    }

    #[test]
    fn problem_errors() {
        let d = parse_domain(DOMAIN).unwrap();
        let wrong_type =
            "(define (problem x) (:domain delivery) (:objects t1 t2 - truck) (:init (at t1 t2)) (:goal (and)))";
        assert!(matches!(
            parse_problem(wrong_type, &d).unwrap_err(),
            PddlError::TypeMismatch { .. }
        ));
        let arity =
            "(define (problem x) (:domain delivery) (:objects t1 - truck) (:init (at t1)) (:goal (and)))";
        assert!(matches!(
            parse_problem(arity, &d).unwrap_err(),
            PddlError::ArityMismatch { .. }
        ));
        let unknown =
            "(define (problem x) (:domain delivery) (:objects t1 - truck) (:init (flies t1)) (:goal (and)))";
        assert!(matches!(
            parse_problem(unknown, &d).unwrap_err(),
            PddlError::UnknownPredicate { .. }
        ));
        let wrong_domain = "(define (problem x) (:domain other) (:objects) (:init) (:goal (and)))";
        assert!(matches!(
            parse_problem(wrong_domain, &d).unwrap_err(),
            PddlError::DomainNameMismatch { .. }
        ));
        let metric = "(define (problem x) (:domain delivery) (:init) (:goal (and)) (:metric minimize (total-cost)))";
        assert!(matches!(
            parse_problem(metric, &d).unwrap_err(),
            PddlError::UnsupportedFeature { .. }
        ));
    }

    #[test]
    fn empty_goal_and_untyped_objects() {
        let d = parse_domain("(define (domain t) (:predicates (p ?x)))").unwrap();
        let p = parse_problem(
            "(define (problem q) (:domain t) (:objects a b) (:init (p a)) (:goal (and)))",
            &d,
        )
        .unwrap();
        assert!(p.goal.is_empty());
        assert!(p.objects.iter().all(|o| o.ty == ROOT_TYPE));
    }

    #[test]
    fn implicit_parent_types_are_declared() {
        let d = parse_domain(
            "(define (domain t) (:types truck - vehicle) (:predicates (p ?x - vehicle)))",
        )
        .unwrap();
        assert!(d.has_type("vehicle"));
        assert!(d.is_subtype("truck", "vehicle"));
    }

    #[test]
    fn add_delete_overlap_rejected() {
        let err = parse_domain(
            "(define (domain t) (:predicates (p))
               (:action a :parameters () :precondition () :effect (and (p) (not (p)))))",
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Syntax { .. }));
    }

    #[test]
    fn error_positions_point_at_offending_token() {
        let err =
            parse_domain("(define (domain t)\n  (:predicates (p ?x))\n  (:bogus))").unwrap_err();
        assert_eq!(
            err,
            PddlError::Syntax {
                line: 3,
                col: 3,
                message: "unknown domain section `:bogus`".into()
            }
        );
    }
}
