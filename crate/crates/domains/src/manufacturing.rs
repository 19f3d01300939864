//! Manufacturing process planning: a greedy per-part subplanner whose
//! subplans are concatenated in part order, followed by the joins, and a
//! random problem generator.
//!
//! Each part's subplan follows a fixed order. Shaping comes first: `roll`
//! for a HOT goal, else `lathe` for a CYLINDRICAL goal or to give a
//! spray-painted part a regular shape. Next come holes when the part also
//! has a surface goal, since punching leaves the surface rough. Then the
//! surface (`polish`, `grind`, or `lathe` for ROUGH), then painting
//! (immersion when the paint is available, spray otherwise). Holes come
//! last when the part has no surface goal. Punching is preferred over
//! drilling.

use std::collections::{BTreeMap, BTreeSet};

use pbr_core::model::{GroundAtom, ProblemSpec};
use pbr_core::symbol::Symbol;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::{call, check_range, Call, GenParams, PackError};

/// The three-part example: the concatenated initial plan takes six time
/// steps, swapping the two punch operations brings it to four, and spray
/// painting part B brings it to three.
pub const THREE_PARTS: &str = include_str!("../packs/manufacturing/three-parts.pbr");

const CYLINDRICAL: &str = "CYLINDRICAL";
const WIDTHS: [&str; 3] = ["W1", "W2", "W3"];
const ORIENTATIONS: [&str; 3] = ["FRONT", "BACK", "SIDE"];
const COLORS: [&str; 6] = ["RED", "BLUE", "GREEN", "YELLOW", "BLACK", "WHITE"];
const SHAPES: [&str; 3] = ["CYLINDRICAL", "RECTANGULAR", "IRREGULAR"];

struct Shop<'a> {
    facts: &'a BTreeSet<GroundAtom>,
}

impl Shop<'_> {
    fn has(&self, pred: &str, args: &[&str]) -> bool {
        self.facts.contains(&GroundAtom::new(pred, args))
    }

    fn punchable(&self, p: &Symbol, w: &Symbol, o: &Symbol) -> bool {
        self.has("has-clamp", &["PUNCH"]) && self.has("is-punchable", &[p.as_str(), w.as_str(), o.as_str()])
    }

    fn drillable(&self, p: &Symbol, w: &Symbol, o: &Symbol) -> bool {
        self.has("have-bit", &[w.as_str()]) && self.has("is-drillable", &[p.as_str(), o.as_str()])
    }

    fn regular(&self, shape: Option<&Symbol>) -> bool {
        shape.is_some_and(|s| self.has("regular-shape", &[s.as_str()]))
    }

    fn immersion(&self, c: &Symbol) -> bool {
        self.has("have-paint-for-immersion", &[c.as_str()])
    }

    fn sprayable(&self, c: &Symbol) -> bool {
        self.has("sprayable", &[c.as_str()]) && self.has("has-clamp", &["SPRAY-PAINTER"])
    }

    fn composite(&self, x: &Symbol, y: &Symbol, o: &Symbol) -> Option<Symbol> {
        self.facts
            .iter()
            .find(|a| {
                a.predicate.as_str() == "composite-object"
                    && a.args.len() == 4
                    && a.args[1] == *o
                    && a.args[2] == *x
                    && a.args[3] == *y
            })
            .map(|a| a.args[0].clone())
    }
}

/// The attributes of one part the operators read and change.
#[derive(Clone, Debug, Default)]
struct PartState {
    shape: Option<Symbol>,
    surface: Option<Symbol>,
    temp: Option<Symbol>,
    holes: BTreeSet<(Symbol, Symbol)>,
    painted: BTreeSet<Symbol>,
}

impl PartState {
    fn read(p: &Symbol, facts: &BTreeSet<GroundAtom>) -> PartState {
        let mut s = PartState::default();
        for a in facts.iter().filter(|a| a.args.first() == Some(p)) {
            match (a.predicate.as_str(), &a.args[1..]) {
                ("shape", [v]) => s.shape = Some(v.clone()),
                ("surface-condition", [v]) => s.surface = Some(v.clone()),
                ("temperature", [v]) => s.temp = Some(v.clone()),
                ("has-hole", [w, o]) => {
                    s.holes.insert((w.clone(), o.clone()));
                }
                ("painted", [c]) => {
                    s.painted.insert(c.clone());
                }
                _ => {}
            }
        }
        s
    }
}

#[derive(Clone, Debug, Default)]
struct PartGoals {
    shape: Option<Symbol>,
    surface: Option<Symbol>,
    temp: Option<Symbol>,
    paint: Vec<Symbol>,
    holes: BTreeSet<(Symbol, Symbol)>,
    source: Vec<String>,
}

fn set_once(slot: &mut Option<Symbol>, v: &Symbol, goal: &GroundAtom) -> Result<(), PackError> {
    match slot {
        Some(old) if old != v => Err(PackError::InconsistentGoal(format!(
            "{goal} conflicts with value {old}"
        ))),
        _ => {
            *slot = Some(v.clone());
            Ok(())
        }
    }
}

enum Join {
    Weld {
        x: Symbol,
        y: Symbol,
        z: Symbol,
        o: Symbol,
    },
    Bolt {
        x: Symbol,
        y: Symbol,
        z: Symbol,
        o: Symbol,
        w: Symbol,
    },
}

fn parts(problem: &ProblemSpec) -> Vec<Symbol> {
    problem
        .init
        .iter()
        .filter(|a| a.predicate.as_str() == "is-object" && a.args.len() == 1)
        .map(|a| a.args[0].clone())
        .collect()
}

/// Per-part subplans in part-name order, then the joins in goal order.
pub fn initial(problem: &ProblemSpec) -> Result<Vec<Call>, PackError> {
    let shop = Shop { facts: &problem.init };
    let parts = parts(problem);
    let mut goals: BTreeMap<Symbol, PartGoals> = parts.iter().map(|p| (p.clone(), PartGoals::default())).collect();
    let mut joined_goals = Vec::new();
    for g in &problem.goal {
        let unsupported = || PackError::UnsupportedGoal { goal: g.to_string() };
        if g.predicate.as_str() == "joined" {
            joined_goals.push(g);
            continue;
        }
        let Some((p, rest)) = g.args.split_first() else {
            return Err(unsupported());
        };
        let pg = goals.get_mut(p).ok_or_else(unsupported)?;
        pg.source.push(g.to_string());
        match (g.predicate.as_str(), rest) {
            ("shape", [s]) => set_once(&mut pg.shape, s, g)?,
            ("surface-condition", [s]) => set_once(&mut pg.surface, s, g)?,
            ("temperature", [t]) => set_once(&mut pg.temp, t, g)?,
            ("painted", [c]) => pg.paint.push(c.clone()),
            ("has-hole", [w, o]) => {
                pg.holes.insert((w.clone(), o.clone()));
            }
            _ => return Err(unsupported()),
        }
    }

    let mut joins = Vec::new();
    let mut used = BTreeSet::new();
    for g in joined_goals {
        let [x, y, o] = g.args.as_slice() else {
            return Err(PackError::UnsupportedGoal { goal: g.to_string() });
        };
        let unsolvable = |reason: &str| PackError::Unsolvable {
            goal: g.to_string(),
            reason: reason.to_string(),
        };
        if !goals.contains_key(x) || !goals.contains_key(y) || x == y {
            return Err(PackError::UnsupportedGoal { goal: g.to_string() });
        }
        if !used.insert(x.clone()) || !used.insert(y.clone()) {
            return Err(unsolvable("a part can be joined only once"));
        }
        let z = shop
            .composite(x, y, o)
            .ok_or_else(|| unsolvable("no composite object is declared"))?;
        let xyo = [x.as_str(), y.as_str(), o.as_str()];
        if shop.has("can-be-welded", &xyo) {
            joins.push(Join::Weld {
                x: x.clone(),
                y: y.clone(),
                z,
                o: o.clone(),
            });
            continue;
        }
        if !shop.has("can-be-bolted", &xyo) {
            return Err(unsolvable("the parts can be neither welded nor bolted"));
        }
        let can_hole = |p: &Symbol, w: &Symbol| {
            PartState::read(p, &problem.init)
                .holes
                .contains(&(w.clone(), o.clone()))
                || shop.punchable(p, w, o)
                || shop.drillable(p, w, o)
        };
        let w = WIDTHS
            .iter()
            .map(|w| Symbol::new(w))
            .find(|w| shop.has("bolt-width", &[w.as_str()]) && can_hole(x, w) && can_hole(y, w))
            .ok_or_else(|| unsolvable("no bolt width fits holes both parts can get"))?;
        for p in [x, y] {
            goals.get_mut(p).unwrap().holes.insert((w.clone(), o.clone()));
        }
        joins.push(Join::Bolt {
            x: x.clone(),
            y: y.clone(),
            z,
            o: o.clone(),
            w,
        });
    }

    let mut seq = Vec::new();
    for (p, pg) in &goals {
        part_plan(p, pg, PartState::read(p, &problem.init), &shop, &mut seq)?;
    }
    for j in &joins {
        match j {
            Join::Weld { x, y, z, o } => seq.push(call("weld", &[x, y, z, o])),
            Join::Bolt { x, y, z, o, w } => seq.push(call("bolt", &[x, y, z, o, w])),
        }
    }
    Ok(seq)
}

fn part_plan(p: &Symbol, pg: &PartGoals, mut st: PartState, shop: &Shop, seq: &mut Vec<Call>) -> Result<(), PackError> {
    let unsolvable = |reason: String| PackError::Unsolvable {
        goal: pg.source.join(" "),
        reason: format!("{p}: {reason}"),
    };
    let cyl = Symbol::new(CYLINDRICAL);
    let hot = Symbol::new("HOT");
    let cold = Symbol::new("COLD");
    let rough = Symbol::new("ROUGH");

    let lathe = |st: &mut PartState, seq: &mut Vec<Call>| {
        seq.push(call("lathe", &[p]));
        st.shape = Some(cyl.clone());
        st.surface = Some(rough.clone());
        st.painted.clear();
    };

    match &pg.temp {
        Some(t) if *t == hot && st.temp.as_ref() != Some(&hot) => {
            seq.push(call("roll", &[p]));
            st.shape = Some(cyl.clone());
            st.temp = Some(hot.clone());
            st.surface = None;
            st.holes.clear();
            st.painted.clear();
        }
        Some(t) if st.temp.as_ref() != Some(t) => return Err(unsolvable(format!("no operator makes a part {t}"))),
        _ => {}
    }

    let needs_spray = pg.paint.iter().any(|c| !shop.immersion(c));
    match &pg.shape {
        Some(s) if st.shape.as_ref() != Some(s) => {
            if *s != cyl {
                return Err(unsolvable(format!("no operator makes a part {s}")));
            }
            lathe(&mut st, seq);
        }
        None if needs_spray && !shop.regular(st.shape.as_ref()) => lathe(&mut st, seq),
        _ => {}
    }

    let mut holes = Vec::new();
    for (w, o) in &pg.holes {
        if st.holes.contains(&(w.clone(), o.clone())) {
            continue;
        }
        if shop.punchable(p, w, o) {
            holes.push(call("punch", &[p, w, o]));
        } else if shop.drillable(p, w, o) {
            holes.push(call("drill-press", &[p, w, o]));
        } else {
            return Err(unsolvable(format!("cannot make a {w} hole at {o}")));
        }
    }
    let emit_holes = |st: &mut PartState, seq: &mut Vec<Call>, holes: &mut Vec<Call>| {
        for h in holes.drain(..) {
            if h.0.as_str() == "punch" {
                st.surface = Some(rough.clone());
            }
            st.holes.insert((h.1[1].clone(), h.1[2].clone()));
            seq.push(h);
        }
    };
    if pg.surface.is_some() {
        emit_holes(&mut st, seq, &mut holes);
    }

    if let Some(s) = &pg.surface {
        if st.surface.as_ref() != Some(s) {
            match s.as_str() {
                "POLISHED" => {
                    if st.temp.as_ref() != Some(&cold) || !shop.has("has-clamp", &["POLISHER"]) {
                        return Err(unsolvable(
                            "only a cold part on a clamped polisher can be polished".into(),
                        ));
                    }
                    seq.push(call("polish", &[p]));
                    st.surface = Some(s.clone());
                }
                "SMOOTH" => {
                    seq.push(call("grind", &[p]));
                    st.surface = Some(s.clone());
                    st.painted.clear();
                }
                "ROUGH" if pg.shape.as_ref().is_none_or(|g| *g == cyl) => lathe(&mut st, seq),
                _ => return Err(unsolvable(format!("cannot make the surface {s}"))),
            }
        }
    }

    for c in &pg.paint {
        if st.painted.contains(c) {
            continue;
        }
        if shop.immersion(c) {
            seq.push(call("immersion-paint", &[p, c]));
        } else if shop.sprayable(c) && st.temp.as_ref() == Some(&cold) && shop.regular(st.shape.as_ref()) {
            let shape = st.shape.clone().unwrap();
            seq.push(call("spray-paint", &[p, c, &shape]));
        } else {
            return Err(unsolvable(format!("cannot paint it {c}")));
        }
        st.painted.insert(c.clone());
    }

    emit_holes(&mut st, seq, &mut holes);

    let holds = pg.shape.as_ref().is_none_or(|s| st.shape.as_ref() == Some(s))
        && pg.surface.as_ref().is_none_or(|s| st.surface.as_ref() == Some(s))
        && pg.paint.iter().all(|c| st.painted.contains(c));
    if !holds {
        return Err(unsolvable("its goals undo each other".into()));
    }
    Ok(())
}

fn part_names(n: usize) -> Vec<Symbol> {
    (0..n)
        .map(|i| Symbol::new(&((b'A' + i as u8) as char).to_string()))
        .collect()
}

/// Goals drawn so far for one generated part.
#[derive(Default)]
struct Drawn {
    shape: bool,
    surface: Option<&'static str>,
    paint: Option<Symbol>,
    spray_only: bool,
    hot: bool,
    joined: bool,
    holes: BTreeSet<(Symbol, Symbol)>,
}

/// Random parts `A, B, ...` with random shapes, all cold and rough, and a
/// random shop. Goals are spread uniformly over the parts; a draw that
/// would conflict with the part's earlier goals is redrawn, so every
/// instance is solvable by [`initial`].
pub fn generate(params: &GenParams, rng: &mut dyn RngCore) -> Result<ProblemSpec, PackError> {
    let n = params.size;
    check_range("parts", n, 1, 26, "1..=26")?;
    let g = params.goals.unwrap_or(2 * n);
    check_range("goals", g, 1, 4 * n, "1..=4*parts")?;
    let parts = part_names(n);
    let sym = |s: &str| Symbol::new(s);
    let mut init = BTreeSet::new();
    for f in [
        ["has-clamp", "POLISHER"],
        ["has-clamp", "PUNCH"],
        ["has-clamp", "SPRAY-PAINTER"],
        ["regular-shape", "CYLINDRICAL"],
        ["regular-shape", "RECTANGULAR"],
    ] {
        init.insert(GroundAtom::new(f[0], &f[1..]));
    }
    let some = |rng: &mut dyn RngCore, items: &[&'static str], k: usize| -> Vec<&'static str> {
        items.choose_multiple(rng, k).copied().collect()
    };
    let k = rng.gen_range(1..=3);
    let bits = some(rng, &WIDTHS, k);
    let k = rng.gen_range(1..=3);
    let bolts = some(rng, &WIDTHS, k);
    let immersion = some(rng, &COLORS, 3);
    let spray = some(rng, &COLORS, 3);
    for w in &bits {
        init.insert(GroundAtom::new("have-bit", &[w]));
    }
    for w in &bolts {
        init.insert(GroundAtom::new("bolt-width", &[w]));
    }
    for c in &immersion {
        init.insert(GroundAtom::new("have-paint-for-immersion", &[c]));
    }
    for c in &spray {
        init.insert(GroundAtom::new("sprayable", &[c]));
    }
    for p in &parts {
        let p = p.as_str();
        init.insert(GroundAtom::new("is-object", &[p]));
        init.insert(GroundAtom::new("shape", &[p, SHAPES.choose(rng).unwrap()]));
        init.insert(GroundAtom::new("temperature", &[p, "COLD"]));
        init.insert(GroundAtom::new("surface-condition", &[p, "ROUGH"]));
        for o in ORIENTATIONS {
            if rng.gen_bool(0.5) {
                init.insert(GroundAtom::new("is-drillable", &[p, o]));
            }
            for w in WIDTHS {
                if rng.gen_bool(0.3) {
                    init.insert(GroundAtom::new("is-punchable", &[p, w, o]));
                }
            }
        }
    }

    let shop_facts = init.clone();
    let shop = Shop { facts: &shop_facts };
    let hole_options = |p: &Symbol| -> Vec<(Symbol, Symbol)> {
        WIDTHS
            .iter()
            .flat_map(|w| ORIENTATIONS.iter().map(move |o| (sym(w), sym(o))))
            .filter(|(w, o)| shop.punchable(p, w, o) || shop.drillable(p, w, o))
            .collect()
    };
    let mut drawn: Vec<Drawn> = parts.iter().map(|_| Drawn::default()).collect();
    let mut goal = Vec::new();
    let mut objects = parts.clone();
    let mut attempts = 0;
    while goal.len() < g {
        attempts += 1;
        if attempts > 1000 * g {
            return Err(PackError::Unsupported(format!(
                "could not draw {g} compatible goals over {n} parts"
            )));
        }
        let i = rng.gen_range(0..n);
        let p = &parts[i];
        let d = &mut drawn[i];
        match rng.gen_range(0..6) {
            0 if !d.shape => {
                d.shape = true;
                goal.push(GroundAtom::new("shape", &[p.as_str(), CYLINDRICAL]));
            }
            1 if d.surface.is_none() => {
                let s = if rng.gen_bool(0.5) { "SMOOTH" } else { "POLISHED" };
                if s == "POLISHED" && d.hot {
                    continue;
                }
                d.surface = Some(s);
                goal.push(GroundAtom::new("surface-condition", &[p.as_str(), s]));
            }
            2 if d.paint.is_none() => {
                let options: Vec<&str> = COLORS
                    .iter()
                    .copied()
                    .filter(|c| immersion.contains(c) || (!d.hot && spray.contains(c)))
                    .collect();
                let Some(c) = options.choose(rng) else { continue };
                d.spray_only = !immersion.contains(c);
                d.paint = Some(sym(c));
                goal.push(GroundAtom::new("painted", &[p.as_str(), c]));
            }
            3 => {
                let options: Vec<_> = hole_options(p).into_iter().filter(|h| !d.holes.contains(h)).collect();
                let Some((w, o)) = options.choose(rng).cloned() else {
                    continue;
                };
                goal.push(GroundAtom::new("has-hole", &[p.as_str(), w.as_str(), o.as_str()]));
                d.holes.insert((w, o));
            }
            4 if !d.hot && !d.spray_only && d.surface != Some("POLISHED") => {
                d.hot = true;
                goal.push(GroundAtom::new("temperature", &[p.as_str(), "HOT"]));
            }
            5 if !d.joined => {
                let free: Vec<usize> = (0..n).filter(|&j| j != i && !drawn[j].joined).collect();
                let Some(&j) = free.choose(rng) else { continue };
                let (x, y) = (&parts[i.min(j)], &parts[i.max(j)]);
                let o = *ORIENTATIONS.choose(rng).unwrap();
                let z = format!("{x}{y}");
                let bolt_width = bolts.iter().find(|w| {
                    let (w, o) = (sym(w), sym(o));
                    [x, y]
                        .iter()
                        .all(|p| shop.punchable(p, &w, &o) || shop.drillable(p, &w, &o))
                });
                let how = if bolt_width.is_some() && rng.gen_bool(0.5) {
                    "can-be-bolted"
                } else {
                    "can-be-welded"
                };
                init.insert(GroundAtom::new("composite-object", &[&z, o, x.as_str(), y.as_str()]));
                init.insert(GroundAtom::new(how, &[x.as_str(), y.as_str(), o]));
                goal.push(GroundAtom::new("joined", &[x.as_str(), y.as_str(), o]));
                objects.push(sym(&z));
                drawn[i].joined = true;
                drawn[j].joined = true;
            }
            _ => {}
        }
    }
    Ok(ProblemSpec {
        name: Symbol::new(&format!("manufacturing-{n}-{g}")),
        domain: Symbol::new("manufacturing"),
        objects,
        sorts: BTreeMap::new(),
        init,
        goal,
    })
}
