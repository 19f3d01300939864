//! Truck logistics in one city: round trips from the truck's starting
//! location, one package at a time.

use std::collections::{BTreeMap, BTreeSet};

use pbr_core::model::{GroundAtom, ProblemSpec};
use pbr_core::symbol::Symbol;
use rand::{Rng, RngCore};

use crate::{call, check_range, Call, GenParams, PackError};

struct World {
    truck: Symbol,
    home: Symbol,
    city: Symbol,
    at: BTreeMap<Symbol, Symbol>,
}

fn world(problem: &ProblemSpec) -> Result<World, PackError> {
    let facts = &problem.init;
    let unary = |p: &str| -> BTreeSet<Symbol> {
        facts
            .iter()
            .filter(|a| a.predicate.as_str() == p && a.args.len() == 1)
            .map(|a| a.args[0].clone())
            .collect()
    };
    let trucks = unary("truck");
    let [truck] = trucks.iter().collect::<Vec<_>>()[..] else {
        return Err(PackError::Unsupported(format!(
            "the logistics generator needs exactly one truck, found {}",
            trucks.len()
        )));
    };
    let mut at = BTreeMap::new();
    for a in facts.iter().filter(|a| a.predicate.as_str() == "at") {
        if let [x, l] = a.args.as_slice() {
            at.insert(x.clone(), l.clone());
        }
    }
    let home = at
        .get(truck)
        .cloned()
        .ok_or_else(|| PackError::UnknownLocation(truck.to_string()))?;
    let cities: BTreeSet<&Symbol> = facts
        .iter()
        .filter(|a| a.predicate.as_str() == "in-city" && a.args.len() == 2)
        .map(|a| &a.args[1])
        .collect();
    let [city] = cities.into_iter().collect::<Vec<_>>()[..] else {
        return Err(PackError::Unsupported(
            "the logistics generator needs exactly one city".into(),
        ));
    };
    Ok(World {
        truck: truck.clone(),
        home,
        city: city.clone(),
        at,
    })
}

/// For each package goal `(at p dest)`, in goal order: drive to the
/// package, load it, drive to its destination, unload it, drive back.
pub fn initial(problem: &ProblemSpec) -> Result<Vec<Call>, PackError> {
    let w = world(problem)?;
    let mut seq = Vec::new();
    let drive = |seq: &mut Vec<Call>, from: &Symbol, to: &Symbol| {
        if from != to {
            seq.push(call("drive-truck", &[&w.truck, from, to, &w.city]));
        }
    };
    for g in &problem.goal {
        let (pred, [p, dest]) = (g.predicate.as_str(), g.args.as_slice()) else {
            return Err(PackError::UnsupportedGoal { goal: g.to_string() });
        };
        if pred != "at" || *p == w.truck {
            return Err(PackError::UnsupportedGoal { goal: g.to_string() });
        }
        let from = w.at.get(p).ok_or_else(|| PackError::UnknownLocation(p.to_string()))?;
        if from == dest {
            continue;
        }
        drive(&mut seq, &w.home, from);
        seq.push(call("load-truck", &[p, &w.truck, from]));
        drive(&mut seq, from, dest);
        seq.push(call("unload-truck", &[p, &w.truck, dest]));
        drive(&mut seq, dest, &w.home);
    }
    Ok(seq)
}

/// `k` packages over `k` locations `l1..lk` of city `c`; truck `t1` starts
/// at `l1`. Each package starts and ends at random, distinct locations.
pub fn generate(params: &GenParams, rng: &mut dyn RngCore) -> Result<ProblemSpec, PackError> {
    let k = params.size;
    check_range("packages", k, 1, 200, "1..=200")?;
    let locs: Vec<Symbol> = (1..=k).map(|i| Symbol::new(&format!("l{i}"))).collect();
    let pkgs: Vec<Symbol> = (1..=k).map(|i| Symbol::new(&format!("p{i}"))).collect();
    let (truck, city) = (Symbol::new("t1"), Symbol::new("c"));
    let mut init = BTreeSet::new();
    let fact = |p: &str, args: &[&Symbol]| {
        let args: Vec<&str> = args.iter().map(|a| a.as_str()).collect();
        GroundAtom::new(p, &args)
    };
    init.insert(fact("truck", &[&truck]));
    init.insert(fact("city", &[&city]));
    init.insert(fact("at", &[&truck, &locs[0]]));
    for l in &locs {
        init.insert(fact("location", &[l]));
        init.insert(fact("in-city", &[l, &city]));
    }
    let mut goal = Vec::new();
    for p in &pkgs {
        let from = rng.gen_range(0..k);
        let mut to = rng.gen_range(0..k);
        if k > 1 {
            while to == from {
                to = rng.gen_range(0..k);
            }
        }
        init.insert(fact("obj", &[p]));
        init.insert(fact("at", &[p, &locs[from]]));
        goal.push(fact("at", &[p, &locs[to]]));
    }
    let mut objects = vec![truck, city];
    objects.extend(locs);
    objects.extend(pkgs);
    Ok(ProblemSpec {
        name: Symbol::new(&format!("logistics-{k}")),
        domain: Symbol::new("logistics"),
        objects,
        sorts: BTreeMap::new(),
        init,
        goal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pbr_core::model::parse_problem;

    const ONE: &str = "(define (problem one) :domain logistics
        :init ((truck t1) (city c) (obj p1)
               (location l1) (location l2) (location l3)
               (in-city l1 c) (in-city l2 c) (in-city l3 c)
               (at t1 l1) (at p1 l2))
        :goal (at p1 l3))";

    #[test]
    fn one_package_round_trip() {
        let p = parse_problem(ONE).unwrap();
        let seq: Vec<String> = initial(&p)
            .unwrap()
            .iter()
            .map(|(n, a)| format!("{n} {}", a.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")))
            .collect();
        assert_eq!(
            seq,
            [
                "drive-truck t1 l1 l2 c",
                "load-truck p1 t1 l2",
                "drive-truck t1 l2 l3 c",
                "unload-truck p1 t1 l3",
                "drive-truck t1 l3 l1 c"
            ]
        );
    }

    #[test]
    fn delivered_package_needs_nothing() {
        let mut p = parse_problem(ONE).unwrap();
        p.goal = vec![GroundAtom::new("at", &["p1", "l2"])];
        assert!(initial(&p).unwrap().is_empty());
    }

    #[test]
    fn missing_package_location() {
        let mut p = parse_problem(ONE).unwrap();
        p.goal = vec![GroundAtom::new("at", &["p9", "l2"])];
        assert!(matches!(initial(&p), Err(PackError::UnknownLocation(_))));
    }
}
