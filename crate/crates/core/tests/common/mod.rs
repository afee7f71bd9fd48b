#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rankplan::features::{FeatureKind, FeatureLayout, FeatureVector};
use rankplan::ground::{GroundAction, GroundTask, State};
use rankplan::learn::{Example, ProblemGroup, TrainingSet};
use rankplan::pddl::{
    ActionSchema, AtomTemplate, DomainDef, GroundAtom, PredicateSchema, ProblemDef, Term, TypeDecl,
    TypedName,
};

pub fn subset(rng: &mut impl Rng, n: usize, lo: usize, hi: usize) -> Vec<u32> {
    let k = rng.gen_range(lo..=hi.min(n));
    let mut all: Vec<u32> = (0..n as u32).collect();
    all.shuffle(rng);
    let mut s = all[..k].to_vec();
    s.sort_unstable();
    s
}

/// Random propositional task over `facts` 0-ary facts and `actions` actions.
pub fn random_task(rng: &mut impl Rng, facts: usize, actions: usize) -> GroundTask {
    let atoms: Vec<GroundAtom> = (0..facts)
        .map(|i| GroundAtom::new(format!("f{i}"), &[]))
        .collect();
    let schemas = vec!["a".to_string(), "b".to_string()];
    let acts = (0..actions)
        .map(|i| GroundAction {
            schema: rng.gen_range(0..schemas.len()),
            name: format!("{}{i}", schemas[i % 2]),
            args: Vec::new(),
            pre: subset(rng, facts, 0, 3),
            add: subset(rng, facts, 1, 2),
            del: subset(rng, facts, 0, 2),
        })
        .collect();
    let init = State::from_facts(facts, subset(rng, facts, 0, facts / 2));
    let goal = subset(rng, facts, 1, 3);
    GroundTask::from_parts("random".into(), atoms, acts, init, goal, schemas, false)
}

/// Single layout with exactly `dim` slots (`dim ≥ 3`).
pub fn layout_with_dim(dim: usize) -> FeatureLayout {
    FeatureLayout::new(
        FeatureKind::Single,
        (0..dim - 3).map(|i| format!("s{i}")).collect(),
    )
}

pub fn training_set(layout: &FeatureLayout, groups: Vec<Vec<(Vec<f64>, f64)>>) -> TrainingSet {
    let sig = layout.signature();
    let groups = groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| ProblemGroup {
            problem_id: format!("g{i}"),
            examples: g
                .into_iter()
                .map(|(values, y)| Example {
                    x: FeatureVector {
                        values,
                        signature: sig,
                    },
                    y,
                })
                .collect(),
        })
        .collect();
    TrainingSet::new(layout.clone(), groups).unwrap()
}

fn pick_typed<'a>(
    rng: &mut impl Rng,
    dom: &DomainDef,
    pool: &'a [TypedName],
    ty: &str,
) -> Option<&'a str> {
    let fits: Vec<&TypedName> = pool.iter().filter(|t| dom.is_subtype(&t.ty, ty)).collect();
    fits.choose(rng).map(|t| t.name.as_str())
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

/// Small random typed STRIPS domain and a problem over it.
pub fn random_pddl(rng: &mut impl Rng) -> (DomainDef, ProblemDef) {
    let mut dom = DomainDef {
        name: format!("dom{}", rng.gen_range(0..100)),
        requirements: vec![":strips".into(), ":typing".into()],
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for i in 0..rng.gen_range(0..=3) {
        let parent = if i > 0 && rng.gen_bool(0.5) {
            format!("ty{}", rng.gen_range(0..i))
        } else {
            "object".into()
        };
        dom.types.push(TypeDecl {
            name: format!("ty{i}"),
            parent,
        });
    }
    let type_names: Vec<String> = std::iter::once("object".to_string())
        .chain(dom.types.iter().map(|t| t.name.clone()))
        .collect();
    for i in 0..rng.gen_range(0..=1) {
        dom.constants.push(TypedName::new(
            format!("c{i}"),
            type_names.choose(rng).unwrap().clone(),
        ));
    }
    for i in 0..rng.gen_range(1..=4) {
        let params = (0..rng.gen_range(0..=2))
            .map(|j| TypedName::new(format!("?x{j}"), type_names.choose(rng).unwrap().clone()))
            .collect();
        dom.predicates.push(PredicateSchema {
            name: format!("p{i}"),
            params,
        });
    }
    for i in 0..rng.gen_range(1..=3) {
        let params: Vec<TypedName> = (0..rng.gen_range(0..=2))
            .map(|j| TypedName::new(format!("?v{j}"), type_names.choose(rng).unwrap().clone()))
            .collect();
        let terms: Vec<TypedName> = params.iter().chain(&dom.constants).cloned().collect();
        let atom = |rng: &mut _| -> Option<AtomTemplate> {
            let p = dom.predicates.choose(rng).unwrap();
            let args = p
                .params
                .iter()
                .map(|pp| {
                    pick_typed(rng, &dom, &terms, &pp.ty).map(|n| {
                        if n.starts_with('?') {
                            Term::Var(n.into())
                        } else {
                            Term::Const(n.into())
                        }
                    })
                })
                .collect::<Option<Vec<_>>>()?;
            Some(AtomTemplate {
                predicate: p.name.clone(),
                args,
            })
        };
        let (mut pre, mut add, mut del) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..rng.gen_range(0..=2) {
            if let Some(a) = atom(rng) {
                push_unique(&mut pre, a);
            }
        }
        for _ in 0..rng.gen_range(1..=2) {
            if let Some(a) = atom(rng) {
                push_unique(&mut add, a);
            }
        }
        for _ in 0..rng.gen_range(0..=2) {
            if let Some(a) = atom(rng).filter(|a| !add.contains(a)) {
                push_unique(&mut del, a);
            }
        }
        dom.actions.push(ActionSchema {
            name: format!("act{i}"),
            params,
            pre,
            add,
            del,
        });
    }

    let objects: Vec<TypedName> = (0..rng.gen_range(1..=4))
        .map(|i| TypedName::new(format!("o{i}"), type_names.choose(rng).unwrap().clone()))
        .collect();
    let universe: Vec<TypedName> = objects.iter().chain(&dom.constants).cloned().collect();
    let ground_atom = |rng: &mut _| -> Option<GroundAtom> {
        let p = dom.predicates.choose(rng).unwrap();
        let args = p
            .params
            .iter()
            .map(|pp| pick_typed(rng, &dom, &universe, &pp.ty).map(String::from))
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom {
            predicate: p.name.clone(),
            args,
        })
    };
    let (mut init, mut goal) = (Vec::new(), Vec::new());
    for _ in 0..rng.gen_range(0..=4) {
        if let Some(a) = ground_atom(rng) {
            push_unique(&mut init, a);
        }
    }
    for _ in 0..rng.gen_range(1..=2) {
        if let Some(a) = ground_atom(rng) {
            push_unique(&mut goal, a);
        }
    }
    let prob = ProblemDef {
        name: "prob".into(),
        domain_name: dom.name.clone(),
        objects,
        init,
        goal,
    };
    (dom, prob)
}
