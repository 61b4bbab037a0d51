#![allow(dead_code, clippy::needless_range_loop)]
pub mod mock_llm;

use ontoclean_core::{ClassId, LabelSet, Labeling, MetaProperty, Sign, Taxonomy};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random DAG: edges always point from a later to an earlier node of a hidden
/// topological order, while class insertion order is an independent shuffle.
pub fn random_dag<R: Rng>(rng: &mut R, max_classes: usize, max_edges: usize) -> Taxonomy {
    let n = rng.random_range(1..=max_classes);
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(rng);
    let mut insertion: Vec<usize> = (0..n).collect();
    insertion.shuffle(rng);
    let mut b = Taxonomy::builder();
    for &i in &insertion {
        b.add_class(&format!("C{i}"), None).unwrap();
    }
    if n > 1 {
        for _ in 0..rng.random_range(0..=max_edges) {
            let a = rng.random_range(0..n);
            let c = rng.random_range(0..n);
            if a == c {
                continue;
            }
            let (sub, sup) = if a > c { (a, c) } else { (c, a) };
            b.add_edge(&format!("C{}", topo[sub]), &format!("C{}", topo[sup]));
        }
    }
    b.build().unwrap()
}

pub const I_VALUES: [Sign; 2] = [Sign::Plus, Sign::Minus];
pub const U_VALUES: [Sign; 3] = [Sign::Plus, Sign::Minus, Sign::Anti];

pub fn legal_values(p: MetaProperty) -> &'static [Sign] {
    if p.allows_anti() {
        &U_VALUES
    } else {
        &I_VALUES
    }
}

pub fn random_labelset<R: Rng>(rng: &mut R, presence: f64) -> LabelSet {
    let mut ls = LabelSet::default();
    for p in MetaProperty::ALL {
        if rng.random_bool(presence) {
            let vals = legal_values(p);
            ls.set(p, Some(vals[rng.random_range(0..vals.len())])).unwrap();
        }
    }
    ls
}

pub fn random_labeling<R: Rng>(rng: &mut R, t: &Taxonomy, presence: f64) -> Labeling {
    t.classes()
        .iter()
        .map(|c| (c.clone(), random_labelset(rng, presence)))
        .collect()
}

/// Every total label set, 2 * 3 * 3 * 2 = 36 of them.
pub fn all_total_labelsets() -> Vec<LabelSet> {
    let mut out = Vec::new();
    for &i in &I_VALUES {
        for &u in &U_VALUES {
            for &r in &U_VALUES {
                for &d in &I_VALUES {
                    let mut ls = LabelSet::default();
                    ls.set(MetaProperty::Identity, Some(i)).unwrap();
                    ls.set(MetaProperty::Unity, Some(u)).unwrap();
                    ls.set(MetaProperty::Rigidity, Some(r)).unwrap();
                    ls.set(MetaProperty::Dependence, Some(d)).unwrap();
                    out.push(ls);
                }
            }
        }
    }
    out
}

pub fn id(s: &str) -> ClassId {
    ClassId::new(s).unwrap()
}

pub mod oracle {
    //! Brute-force constraint oracle: all-pairs shortest paths plus a
    //! literal table of forbidden (ancestor, descendant) value pairs.

    use std::collections::BTreeSet;

    use ontoclean_core::{Labeling, MetaProperty, Sign, Taxonomy};

    /// (rule name, property, ancestor value, forbidden descendant values)
    pub const RULES: [(&str, MetaProperty, Sign, &[Sign]); 5] = [
        (
            "IdentityInheritance",
            MetaProperty::Identity,
            Sign::Plus,
            &[Sign::Minus],
        ),
        (
            "AntiRigidityInheritance",
            MetaProperty::Rigidity,
            Sign::Anti,
            &[Sign::Plus, Sign::Minus],
        ),
        (
            "UnityInheritance",
            MetaProperty::Unity,
            Sign::Plus,
            &[Sign::Minus, Sign::Anti],
        ),
        (
            "AntiUnityInheritance",
            MetaProperty::Unity,
            Sign::Anti,
            &[Sign::Plus, Sign::Minus],
        ),
        (
            "DependenceInheritance",
            MetaProperty::Dependence,
            Sign::Plus,
            &[Sign::Minus],
        ),
    ];

    pub fn rule_broken(rule: usize, anc: Option<Sign>, desc: Option<Sign>) -> bool {
        let (_, _, a, forbidden) = RULES[rule];
        anc == Some(a) && desc.is_some_and(|d| forbidden.contains(&d))
    }

    /// dist[sub][sup] = length of the shortest sub -> ... -> sup path.
    pub fn distances(t: &Taxonomy) -> Vec<Vec<Option<usize>>> {
        let n = t.len();
        let mut dist = vec![vec![None; n]; n];
        for (s, p) in t.edges() {
            dist[s][p] = Some(1);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (dist[i][k], dist[k][j]) {
                        if dist[i][j].is_none_or(|d| a + b < d) {
                            dist[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        dist
    }

    /// Set of (subject, ancestor, rule name) with nearest-ancestor selection.
    pub fn violations(t: &Taxonomy, l: &Labeling) -> BTreeSet<(String, String, String)> {
        let dist = distances(t);
        let value = |c: usize, p: MetaProperty| l.value(t.class(c).as_str(), p);
        let mut out = BTreeSet::new();
        for d in 0..t.len() {
            for (r, &(name, prop, _, _)) in RULES.iter().enumerate() {
                let mut best: Option<(usize, usize)> = None;
                for a in 0..t.len() {
                    let Some(len) = dist[d][a] else { continue };
                    if rule_broken(r, value(a, prop), value(d, prop)) && best.is_none_or(|(bl, ba)| (len, a) < (bl, ba))
                    {
                        best = Some((len, a));
                    }
                }
                if let Some((_, a)) = best {
                    out.insert((t.class(d).to_string(), t.class(a).to_string(), name.to_string()));
                }
            }
        }
        out
    }
}
