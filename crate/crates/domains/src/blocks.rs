//! Blocks World: the put-everything-on-the-table initial generator and a
//! random multi-tower problem generator.

use std::collections::{BTreeMap, BTreeSet};

use pbr_core::model::{GroundAtom, ProblemSpec};
use pbr_core::symbol::Symbol;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::{call, check_range, Call, GenParams, PackError};

pub const TABLE: &str = "Table";

/// C on A and B on D, to be restacked as A on B on C on D.
pub const TWO_TOWERS: &str = include_str!("../packs/blocks/two-towers.pbr");

/// The full-specification variant of avoid-move-twice.
pub const FULL_RULES: &str = include_str!("../packs/blocks/full.pbr");

/// Where every block sits: `on[x]` is a block or the table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Towers {
    pub on: BTreeMap<Symbol, Symbol>,
}

impl Towers {
    pub fn from_state(state: &BTreeSet<GroundAtom>) -> Result<Towers, PackError> {
        let mut on = BTreeMap::new();
        for a in state.iter().filter(|a| a.predicate.as_str() == "on") {
            let [x, y] = a.args.as_slice() else {
                return Err(PackError::InconsistentState(a.to_string()));
            };
            if on.insert(x.clone(), y.clone()).is_some() {
                return Err(PackError::InconsistentState(format!("{x} is on two blocks")));
            }
        }
        let t = Towers { on };
        t.check(true).map_err(PackError::InconsistentState)?;
        Ok(t)
    }

    fn check(&self, complete: bool) -> Result<(), String> {
        let mut seen_under: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
        for (x, y) in &self.on {
            if y.as_str() == TABLE {
                continue;
            }
            if complete && !self.on.contains_key(y) {
                return Err(format!("{y} supports {x} but is not placed"));
            }
            if let Some(z) = seen_under.insert(y, x) {
                return Err(format!("{x} and {z} are both on {y}"));
            }
        }
        for x in self.on.keys() {
            let mut cur = x;
            for _ in 0..=self.on.len() {
                match self.on.get(cur) {
                    Some(y) if y.as_str() != TABLE => cur = y,
                    _ => break,
                }
                if cur == x {
                    return Err(format!("{x} is part of a cycle"));
                }
            }
        }
        Ok(())
    }

    /// Bottom-up towers, ordered by the name of their bottom block.
    pub fn towers(&self) -> Vec<Vec<Symbol>> {
        let above: BTreeMap<&Symbol, &Symbol> = self
            .on
            .iter()
            .filter(|(_, y)| y.as_str() != TABLE)
            .map(|(x, y)| (y, x))
            .collect();
        let mut out = Vec::new();
        for (x, y) in &self.on {
            if y.as_str() != TABLE {
                continue;
            }
            let mut tower = vec![x.clone()];
            let mut cur = x;
            while let Some(&up) = above.get(cur) {
                tower.push(up.clone());
                cur = up;
            }
            out.push(tower);
        }
        out
    }

    pub fn facts(&self) -> BTreeSet<GroundAtom> {
        let mut out = BTreeSet::new();
        let covered: BTreeSet<&Symbol> = self.on.values().collect();
        for (x, y) in &self.on {
            out.insert(GroundAtom::new("on", &[x.as_str(), y.as_str()]));
            if !covered.contains(x) {
                out.insert(GroundAtom::new("clear", &[x.as_str()]));
            }
        }
        out
    }
}

/// The goal as a partial placement plus blocks that must end up clear.
struct GoalSpec {
    on: BTreeMap<Symbol, Symbol>,
    clear: BTreeSet<Symbol>,
    /// Block wanted on top of each block.
    above: BTreeMap<Symbol, Symbol>,
}

fn goal_spec(problem: &ProblemSpec, start: &Towers) -> Result<GoalSpec, PackError> {
    let mut on = BTreeMap::new();
    let mut clear = BTreeSet::new();
    let mut above = BTreeMap::new();
    for g in &problem.goal {
        match (g.predicate.as_str(), g.args.as_slice()) {
            ("on", [x, y]) => {
                for b in [x, y] {
                    if b.as_str() != TABLE && !start.on.contains_key(b) {
                        return Err(PackError::InconsistentGoal(format!("unknown block {b}")));
                    }
                }
                if x == y || x.as_str() == TABLE {
                    return Err(PackError::InconsistentGoal(g.to_string()));
                }
                if let Some(prev) = on.insert(x.clone(), y.clone()) {
                    if prev != *y {
                        return Err(PackError::InconsistentGoal(format!("{x} on both {prev} and {y}")));
                    }
                }
                if y.as_str() != TABLE {
                    if let Some(prev) = above.insert(y.clone(), x.clone()) {
                        if prev != *x {
                            return Err(PackError::InconsistentGoal(format!("{prev} and {x} both on {y}")));
                        }
                    }
                }
            }
            ("clear", [x]) => {
                clear.insert(x.clone());
            }
            _ => return Err(PackError::UnsupportedGoal { goal: g.to_string() }),
        }
    }
    if let Some(x) = clear.iter().find(|x| above.contains_key(*x)) {
        return Err(PackError::InconsistentGoal(format!("{x} must be clear and covered")));
    }
    Towers { on: on.clone() }
        .check(false)
        .map_err(PackError::InconsistentGoal)?;
    Ok(GoalSpec { on, clear, above })
}

/// Blocks that never need to move: on the table or on a well-placed block,
/// where the goal agrees and wants nothing else there.
fn well_placed(start: &Towers, goal: &GoalSpec) -> BTreeSet<Symbol> {
    let mut good = BTreeSet::new();
    for tower in start.towers() {
        let mut below: Option<&Symbol> = None;
        for x in &tower {
            let here = below.map_or(TABLE, |b| b.as_str());
            let agrees = goal.on.get(x).is_none_or(|g| g.as_str() == here);
            let ok = agrees
                && match below {
                    None => true,
                    Some(b) => good.contains(b) && !goal.clear.contains(b) && goal.above.get(b).is_none_or(|w| w == x),
                };
            if !ok {
                break;
            }
            good.insert(x.clone());
            below = Some(x);
        }
    }
    good
}

/// Unstack every misplaced block, top down, then build the goal towers
/// bottom up. Blocks that are already where the goal wants them stay.
pub fn initial(problem: &ProblemSpec) -> Result<Vec<Call>, PackError> {
    let start = Towers::from_state(&problem.init)?;
    let goal = goal_spec(problem, &start)?;
    let good = well_placed(&start, &goal);
    let mut seq = Vec::new();
    for tower in start.towers() {
        for pair in tower.windows(2).rev() {
            let (y, x) = (&pair[0], &pair[1]);
            if !good.contains(x) {
                seq.push(call("unstack", &[x, y]));
            }
        }
    }
    let table = Symbol::new(TABLE);
    let mut bases: Vec<&Symbol> = start
        .on
        .keys()
        .filter(|x| goal.on.get(*x).is_none_or(|g| g.as_str() == TABLE))
        .collect();
    bases.sort();
    for base in bases {
        let mut cur = base;
        while let Some(x) = goal.above.get(cur) {
            if !good.contains(x) {
                seq.push(call("stack", &[x, cur, &table]));
            }
            cur = x;
        }
    }
    Ok(seq)
}

/// Blocks not well placed; every plan moves each of them at least once.
pub fn misplaced(problem: &ProblemSpec) -> Result<usize, PackError> {
    let start = Towers::from_state(&problem.init)?;
    let goal = goal_spec(problem, &start)?;
    Ok(start.on.len() - well_placed(&start, &goal).len())
}

pub fn block_names(n: usize) -> Vec<Symbol> {
    (1..=n).map(|i| Symbol::new(&format!("B{i}"))).collect()
}

/// Blocks dropped one at a time, in random order, onto a random existing
/// tower or the table.
pub fn random_towers(blocks: &[Symbol], rng: &mut dyn RngCore) -> Towers {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut tops: Vec<Symbol> = Vec::new();
    let mut on = BTreeMap::new();
    for b in order {
        let k = rng.gen_range(0..=tops.len());
        if k == tops.len() {
            on.insert(b.clone(), Symbol::new(TABLE));
            tops.push(b);
        } else {
            on.insert(b.clone(), tops[k].clone());
            tops[k] = b;
        }
    }
    Towers { on }
}

/// `n` blocks in random towers, to be rearranged into other random towers.
/// The goal places every block.
pub fn generate(params: &GenParams, rng: &mut dyn RngCore) -> Result<ProblemSpec, PackError> {
    let n = params.size;
    check_range("blocks", n, 1, 500, "1..=500")?;
    let blocks = block_names(n);
    let start = random_towers(&blocks, rng);
    let end = random_towers(&blocks, rng);
    let mut objects = blocks;
    objects.push(Symbol::new(TABLE));
    Ok(ProblemSpec {
        name: Symbol::new(&format!("blocks-{n}")),
        domain: Symbol::new("blocks"),
        objects,
        sorts: BTreeMap::new(),
        init: start.facts(),
        goal: end
            .on
            .iter()
            .map(|(x, y)| GroundAtom::new("on", &[x.as_str(), y.as_str()]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pbr_core::model::parse_problem;

    const SAMPLE: &str = TWO_TOWERS;

    fn show(seq: &[Call]) -> Vec<String> {
        seq.iter()
            .map(|(n, a)| format!("{n}({})", a.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")))
            .collect()
    }

    #[test]
    fn sample_problem_sequence() {
        let p = parse_problem(SAMPLE).unwrap();
        assert_eq!(
            show(&initial(&p).unwrap()),
            [
                "unstack(C A)",
                "unstack(B D)",
                "stack(C D Table)",
                "stack(B C Table)",
                "stack(A B Table)"
            ]
        );
        assert_eq!(misplaced(&p).unwrap(), 3);
    }

    #[test]
    fn satisfied_goal_needs_nothing() {
        let mut p = parse_problem(SAMPLE).unwrap();
        p.goal = vec![GroundAtom::new("on", &["C", "A"]), GroundAtom::new("on", &["B", "D"])];
        assert!(initial(&p).unwrap().is_empty());
    }

    #[test]
    fn well_placed_base_is_kept() {
        let mut p = parse_problem(SAMPLE).unwrap();
        // C stays on A; B goes onto C
        p.goal = vec![GroundAtom::new("on", &["C", "A"]), GroundAtom::new("on", &["B", "C"])];
        assert_eq!(show(&initial(&p).unwrap()), ["unstack(B D)", "stack(B C Table)"]);
    }

    #[test]
    fn blocks_above_a_claimed_block_move() {
        let mut p = parse_problem(SAMPLE).unwrap();
        p.goal = vec![GroundAtom::new("on", &["B", "A"])];
        assert_eq!(
            show(&initial(&p).unwrap()),
            ["unstack(C A)", "unstack(B D)", "stack(B A Table)"]
        );
        p.goal = vec![GroundAtom::new("clear", &["A"])];
        assert_eq!(show(&initial(&p).unwrap()), ["unstack(C A)"]);
    }

    #[test]
    fn inconsistent_goals() {
        let mut p = parse_problem(SAMPLE).unwrap();
        p.goal = vec![GroundAtom::new("on", &["A", "B"]), GroundAtom::new("on", &["A", "C"])];
        assert!(matches!(initial(&p), Err(PackError::InconsistentGoal(_))));
        p.goal = vec![GroundAtom::new("on", &["A", "B"]), GroundAtom::new("on", &["C", "B"])];
        assert!(matches!(initial(&p), Err(PackError::InconsistentGoal(_))));
        p.goal = vec![GroundAtom::new("on", &["A", "B"]), GroundAtom::new("on", &["B", "A"])];
        assert!(matches!(initial(&p), Err(PackError::InconsistentGoal(_))));
        p.goal = vec![GroundAtom::new("on", &["A", "Z"])];
        assert!(matches!(initial(&p), Err(PackError::InconsistentGoal(_))));
    }

    #[test]
    fn generated_states_are_consistent() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 30] {
            let p = generate(&GenParams::new(n), &mut rng).unwrap();
            let t = Towers::from_state(&p.init).unwrap();
            assert_eq!(t.on.len(), n);
            assert_eq!(t.towers().iter().map(Vec::len).sum::<usize>(), n);
            assert_eq!(p.goal.len(), n);
            assert!(initial(&p).unwrap().len() <= 2 * n);
        }
        assert!(generate(&GenParams::new(0), &mut rng).is_err());
    }
}
