mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankplan::generators::{generate_instance, Family, GenSpec};
use rankplan::ground::ground_with_cap;
use rankplan::pddl::{parse_domain, parse_problem};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn display_round_trips(seed in any::<u64>()) {
        let (dom, prob) = common::random_pddl(&mut ChaCha8Rng::seed_from_u64(seed));
        let dom_back = parse_domain(&dom.to_string()).unwrap();
        prop_assert_eq!(&dom_back, &dom);
        let prob_back = parse_problem(&prob.to_string(), &dom_back).unwrap();
        prop_assert_eq!(prob_back, prob);
    }

    #[test]
    fn parser_is_total_on_arbitrary_text(text in "[()a-z?:\\- \n;0-9]{0,200}") {
        if let Ok(dom) = parse_domain(&text) {
            let _ = parse_problem(&text, &dom);
        }
    }

    #[test]
    fn parser_is_total_on_mutated_input(seed in 0u64..50, edits in prop::collection::vec((any::<prop::sample::Index>(), 0u8..3, "[()a-z?:\\- ]"), 1..6)) {
        let inst = generate_instance(&GenSpec {
            family: Family::Delivery { locations: 3, packages: 1, trucks: 1, extra_roads: 1 },
            seed,
        })
        .unwrap();
        for target in 0..2 {
            let mut texts = [inst.domain_text.clone(), inst.problem_text.clone()];
            let mut chars: Vec<char> = texts[target].chars().collect();
            for (at, op, s) in &edits {
                let i = at.index(chars.len() + 1);
                match op {
                    0 if i < chars.len() => {
                        chars.remove(i);
                    }
                    1 => chars.splice(i..i, s.chars()).for_each(drop),
                    _ if i < chars.len() => chars[i] = s.chars().next().unwrap_or(' '),
                    _ => {}
                }
            }
            texts[target] = chars.into_iter().collect();
            if let Ok(dom) = parse_domain(&texts[0]) {
                if let Ok(prob) = parse_problem(&texts[1], &dom) {
                    let _ = ground_with_cap(&dom, &prob, 100_000);
                }
            }
        }
    }
}

#[test]
fn generated_instances_round_trip() {
    let specs = [
        Family::Delivery {
            locations: 5,
            packages: 3,
            trucks: 2,
            extra_roads: 2,
        },
        Family::Chains {
            length: 4,
            width: 2,
        },
        Family::ParkingLite { cars: 3, curbs: 4 },
    ];
    for family in specs {
        let inst = generate_instance(&GenSpec { family, seed: 3 }).unwrap();
        let dom = parse_domain(&inst.domain.to_string()).unwrap();
        assert_eq!(dom, inst.domain);
        assert_eq!(
            parse_problem(&inst.problem.to_string(), &dom).unwrap(),
            inst.problem
        );
    }
}
