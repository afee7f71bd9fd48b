//! Deterministic synthetic instance generators.
//!
//! Each family produces PDDL text, the parsed definitions, and a witness
//! plan proving solvability. Output depends only on the spec.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pddl::{parse_domain, parse_problem, DomainDef, ProblemDef};

pub const DELIVERY_DOMAIN: &str = "\
(define (domain delivery)
  (:requirements :strips :typing)
  (:types truck package - locatable
          location)
  (:predicates
    (at ?x - locatable ?l - location)
    (road ?from ?to - location)
    (in ?p - package ?t - truck))
  (:action move
    :parameters (?t - truck ?from ?to - location)
    :precondition (and (at ?t ?from) (road ?from ?to))
    :effect (and (at ?t ?to) (not (at ?t ?from))))
  (:action pick
    :parameters (?t - truck ?p - package ?l - location)
    :precondition (and (at ?t ?l) (at ?p ?l))
    :effect (and (in ?p ?t) (not (at ?p ?l))))
  (:action drop
    :parameters (?t - truck ?p - package ?l - location)
    :precondition (and (at ?t ?l) (in ?p ?t))
    :effect (and (at ?p ?l) (not (in ?p ?t)))))
";

pub const CHAINS_DOMAIN: &str = "\
(define (domain chains)
  (:requirements :strips :typing)
  (:types chain step)
  (:predicates
    (at-step ?c - chain ?s - step)
    (next ?from ?to - step))
  (:action advance
    :parameters (?c - chain ?from ?to - step)
    :precondition (and (at-step ?c ?from) (next ?from ?to))
    :effect (and (at-step ?c ?to) (not (at-step ?c ?from)))))
";

pub const PARKING_DOMAIN: &str = "\
(define (domain parking-lite)
  (:requirements :strips :typing)
  (:types car curb)
  (:predicates
    (at-curb ?c - car ?k - curb)
    (free ?k - curb))
  (:action move-car
    :parameters (?c - car ?from ?to - curb)
    :precondition (and (at-curb ?c ?from) (free ?to))
    :effect (and (at-curb ?c ?to) (free ?from)
                 (not (at-curb ?c ?from)) (not (free ?to)))))
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Delivery {
        locations: usize,
        packages: usize,
        trucks: usize,
        /// One-way roads added on top of the ring.
        extra_roads: usize,
    },
    Chains {
        length: usize,
        width: usize,
    },
    ParkingLite {
        cars: usize,
        curbs: usize,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Delivery { .. } => "delivery",
            Family::Chains { .. } => "chains",
            Family::ParkingLite { .. } => "parking-lite",
        }
    }

    /// Builds a family from `key=value` size parameters. Missing keys take
    /// small defaults.
    pub fn from_params(name: &str, params: &[(String, usize)]) -> Result<Self, GenError> {
        let get = |key: &str, default: usize| {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map_or(default, |(_, v)| *v)
        };
        let known: &[&str] = match name {
            "delivery" => &["locations", "packages", "trucks", "extra-roads"],
            "chains" => &["length", "width"],
            "parking-lite" => &["cars", "curbs"],
            _ => return Err(GenError::InvalidSpec(format!("unknown family `{name}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(GenError::InvalidSpec(format!(
                "`{name}` has no parameter `{k}`"
            )));
        }
        Ok(match name {
            "delivery" => {
                let locations = get("locations", 3);
                Family::Delivery {
                    locations,
                    packages: get("packages", 1),
                    trucks: get("trucks", 1),
                    extra_roads: get("extra-roads", locations / 2),
                }
            }
            "chains" => Family::Chains {
                length: get("length", 3),
                width: get("width", 1),
            },
            _ => Family::ParkingLite {
                cars: get("cars", 2),
                curbs: get("curbs", 3),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GenSpec {
    pub family: Family,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub domain_text: String,
    pub problem_text: String,
    pub domain: DomainDef,
    pub problem: ProblemDef,
    /// IPC-style plan lines, e.g. `(move t1 l1 l2)`.
    pub witness: Vec<String>,
}

impl Instance {
    pub fn witness_text(&self) -> String {
        self.witness.iter().map(|l| format!("{l}\n")).collect()
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        let fail = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        match self.family {
            Family::Delivery {
                locations,
                packages,
                trucks,
                ..
            } => {
                if locations == 0 || packages == 0 || trucks == 0 {
                    return fail("delivery sizes must be at least 1");
                }
            }
            Family::Chains { length, width } => {
                if length == 0 || width == 0 {
                    return fail("chain length and width must be at least 1");
                }
            }
            Family::ParkingLite { cars, curbs } => {
                if cars == 0 || curbs == 0 {
                    return fail("parking sizes must be at least 1");
                }
                if curbs <= cars {
                    return fail("parking needs more curbs than cars");
                }
            }
        }
        Ok(())
    }

    pub fn instance_name(&self) -> String {
        match self.family {
            Family::Delivery {
                locations,
                packages,
                trucks,
                extra_roads,
            } => format!(
                "delivery-l{locations}-p{packages}-t{trucks}-r{extra_roads}-s{}",
                self.seed
            ),
            Family::Chains { length, width } => format!("chains-n{length}-w{width}-s{}", self.seed),
            Family::ParkingLite { cars, curbs } => {
                format!("parking-c{cars}-k{curbs}-s{}", self.seed)
            }
        }
    }
}

pub fn generate_instance(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.validate()?;
    let name = spec.instance_name();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (domain_text, body, witness) = match spec.family {
        Family::Delivery {
            locations,
            packages,
            trucks,
            extra_roads,
        } => {
            let (b, w) = delivery(&mut rng, locations, packages, trucks, extra_roads);
            (DELIVERY_DOMAIN, b, w)
        }
        Family::Chains { length, width } => {
            let (b, w) = chains(length, width);
            (CHAINS_DOMAIN, b, w)
        }
        Family::ParkingLite { cars, curbs } => {
            let (b, w) = parking(&mut rng, cars, curbs);
            (PARKING_DOMAIN, b, w)
        }
    };
    let problem_text = format!(
        "(define (problem {name})\n  (:domain {})\n{body})\n",
        spec.family.name()
    );
    let domain = parse_domain(domain_text).expect("built-in domain parses");
    let problem = parse_problem(&problem_text, &domain).expect("generated problem parses");
    Ok(Instance {
        name,
        domain_text: domain_text.to_string(),
        problem_text,
        domain,
        problem,
        witness,
    })
}

struct Body {
    objects: Vec<(Vec<String>, &'static str)>,
    init: Vec<String>,
    goal: Vec<String>,
}

fn render(body: Body) -> String {
    let mut out = String::from("  (:objects");
    for (names, ty) in &body.objects {
        write!(out, "\n    {} - {ty}", names.join(" ")).unwrap();
    }
    out.push_str(")\n  (:init");
    for f in &body.init {
        write!(out, "\n    {f}").unwrap();
    }
    out.push_str(")\n  (:goal (and");
    for f in &body.goal {
        write!(out, "\n    {f}").unwrap();
    }
    out.push_str("))\n");
    out
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn delivery(
    rng: &mut ChaCha8Rng,
    locations: usize,
    packages: usize,
    trucks: usize,
    extra_roads: usize,
) -> (String, Vec<String>) {
    let locs = names("l", locations);
    let mut roads = vec![vec![false; locations]; locations];
    // A directed ring keeps every location reachable from every other.
    if locations > 1 {
        for i in 0..locations {
            roads[i][(i + 1) % locations] = true;
        }
    }
    let mut missing: Vec<(usize, usize)> = (0..locations)
        .flat_map(|a| (0..locations).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && !roads[a][b])
        .collect();
    missing.shuffle(rng);
    for &(a, b) in missing.iter().take(extra_roads) {
        roads[a][b] = true;
    }
    let truck_at: Vec<usize> = (0..trucks).map(|_| rng.gen_range(0..locations)).collect();
    let pkg_at: Vec<usize> = (0..packages).map(|_| rng.gen_range(0..locations)).collect();
    let pkg_goal: Vec<usize> = pkg_at
        .iter()
        .map(|&s| {
            if locations == 1 {
                s
            } else {
                (s + rng.gen_range(1..locations)) % locations
            }
        })
        .collect();

    let mut init = Vec::new();
    for (a, row) in roads.iter().enumerate() {
        for (b, &r) in row.iter().enumerate() {
            if r {
                init.push(format!("(road {} {})", locs[a], locs[b]));
            }
        }
    }
    for (t, &l) in truck_at.iter().enumerate() {
        init.push(format!("(at t{} {})", t + 1, locs[l]));
    }
    for (p, &l) in pkg_at.iter().enumerate() {
        init.push(format!("(at p{} {})", p + 1, locs[l]));
    }
    let goal = pkg_goal
        .iter()
        .enumerate()
        .map(|(p, &l)| format!("(at p{} {})", p + 1, locs[l]))
        .collect();

    // Witness: truck 1 ferries each package in turn along shortest roads.
    let mut witness = Vec::new();
    let mut here = truck_at[0];
    let drive = |from: usize, to: usize, out: &mut Vec<String>| {
        let path = shortest_path(&roads, from, to);
        for w in path.windows(2) {
            out.push(format!("(move t1 {} {})", locs[w[0]], locs[w[1]]));
        }
    };
    for p in 0..packages {
        if pkg_at[p] == pkg_goal[p] {
            continue;
        }
        drive(here, pkg_at[p], &mut witness);
        witness.push(format!("(pick t1 p{} {})", p + 1, locs[pkg_at[p]]));
        drive(pkg_at[p], pkg_goal[p], &mut witness);
        witness.push(format!("(drop t1 p{} {})", p + 1, locs[pkg_goal[p]]));
        here = pkg_goal[p];
    }

    let body = Body {
        objects: vec![
            (locs.clone(), "location"),
            (names("t", trucks), "truck"),
            (names("p", packages), "package"),
        ],
        init,
        goal,
    };
    (render(body), witness)
}

fn shortest_path(roads: &[Vec<bool>], from: usize, to: usize) -> Vec<usize> {
    let n = roads.len();
    let mut prev = vec![usize::MAX; n];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(a) = queue.pop_front() {
        if a == to {
            break;
        }
        for b in 0..n {
            if roads[a][b] && prev[b] == usize::MAX {
                prev[b] = a;
                queue.push_back(b);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

fn chains(length: usize, width: usize) -> (String, Vec<String>) {
    let steps: Vec<String> = (0..=length).map(|i| format!("s{i}")).collect();
    let cs = names("c", width);
    let mut init: Vec<String> = steps
        .windows(2)
        .map(|w| format!("(next {} {})", w[0], w[1]))
        .collect();
    init.extend(cs.iter().map(|c| format!("(at-step {c} s0)")));
    let goal = cs
        .iter()
        .map(|c| format!("(at-step {c} s{length})"))
        .collect();
    let witness = cs
        .iter()
        .flat_map(|c| {
            steps
                .windows(2)
                .map(move |w| format!("(advance {c} {} {})", w[0], w[1]))
        })
        .collect();
    let body = Body {
        objects: vec![(cs, "chain"), (steps, "step")],
        init,
        goal,
    };
    (render(body), witness)
}

fn parking(rng: &mut ChaCha8Rng, cars: usize, curbs: usize) -> (String, Vec<String>) {
    let curb_names = names("k", curbs);
    let mut order: Vec<usize> = (0..curbs).collect();
    order.shuffle(rng);
    let mut pos: Vec<usize> = order[..cars].to_vec();
    order.shuffle(rng);
    let target: Vec<usize> = order[..cars].to_vec();

    let mut init: Vec<String> = pos
        .iter()
        .enumerate()
        .map(|(c, &k)| format!("(at-curb car{} {})", c + 1, curb_names[k]))
        .collect();
    let mut occupied = vec![None; curbs];
    for (c, &k) in pos.iter().enumerate() {
        occupied[k] = Some(c);
    }
    init.extend(
        (0..curbs)
            .filter(|&k| occupied[k].is_none())
            .map(|k| format!("(free {})", curb_names[k])),
    );
    let goal = target
        .iter()
        .enumerate()
        .map(|(c, &k)| format!("(at-curb car{} {})", c + 1, curb_names[k]))
        .collect();

    // Witness: fill a free curb with the car that belongs there, otherwise
    // park some misplaced car on it.
    let mut witness = Vec::new();
    while let Some(c) = (0..cars).find(|&c| pos[c] != target[c]) {
        let free = (0..curbs).filter(|&k| occupied[k].is_none());
        let (car, to) = free
            .clone()
            .find_map(|k| (0..cars).find(|&x| target[x] == k).map(|x| (x, k)))
            .unwrap_or_else(|| {
                let to = free.clone().next().expect("more curbs than cars");
                (c, to)
            });
        witness.push(format!(
            "(move-car car{} {} {})",
            car + 1,
            curb_names[pos[car]],
            curb_names[to]
        ));
        occupied[pos[car]] = None;
        occupied[to] = Some(car);
        pos[car] = to;
    }
    let body = Body {
        objects: vec![(names("car", cars), "car"), (curb_names, "curb")],
        init,
        goal,
    };
    (render(body), witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::{ground, parse_plan};
    use crate::heuristic::FfHeuristic;

    fn check_witness(spec: GenSpec) {
        let inst = generate_instance(&spec).unwrap();
        let task = ground(&inst.domain, &inst.problem).unwrap();
        let plan = parse_plan(&inst.witness_text(), &task).unwrap();
        assert!(task.validate(&task.init, &plan).valid, "{}", inst.name);
    }

    #[test]
    fn witnesses_validate() {
        for seed in 0..20 {
            check_witness(GenSpec {
                family: Family::Delivery {
                    locations: 2,
                    packages: 1,
                    trucks: 1,
                    extra_roads: 0,
                },
                seed,
            });
            check_witness(GenSpec {
                family: Family::Delivery {
                    locations: 6,
                    packages: 3,
                    trucks: 2,
                    extra_roads: 4,
                },
                seed,
            });
            check_witness(GenSpec {
                family: Family::ParkingLite { cars: 4, curbs: 5 },
                seed,
            });
        }
        check_witness(GenSpec {
            family: Family::Chains {
                length: 4,
                width: 3,
            },
            seed: 0,
        });
    }

    #[test]
    fn deterministic() {
        let spec = GenSpec {
            family: Family::Delivery {
                locations: 5,
                packages: 2,
                trucks: 1,
                extra_roads: 3,
            },
            seed: 42,
        };
        let a = generate_instance(&spec).unwrap();
        let b = generate_instance(&spec).unwrap();
        assert_eq!(a.problem_text, b.problem_text);
        let c = generate_instance(&GenSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.problem_text, c.problem_text);
    }

    #[test]
    fn chain_ff_value() {
        for (length, width) in [(5, 1), (3, 2)] {
            let inst = generate_instance(&GenSpec {
                family: Family::Chains { length, width },
                seed: 0,
            })
            .unwrap();
            let task = ground(&inst.domain, &inst.problem).unwrap();
            let h = FfHeuristic::new(&task).evaluate(&task.init).h;
            assert_eq!(h, Some(length * width));
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            Family::Chains {
                length: 0,
                width: 1,
            },
            Family::ParkingLite { cars: 3, curbs: 3 },
            Family::Delivery {
                locations: 0,
                packages: 1,
                trucks: 1,
                extra_roads: 0,
            },
        ];
        for family in bad {
            assert!(generate_instance(&GenSpec { family, seed: 0 }).is_err());
        }
        assert!(Family::from_params("chains", &[("depth".into(), 2)]).is_err());
        assert!(Family::from_params("sokoban", &[]).is_err());
    }
}
