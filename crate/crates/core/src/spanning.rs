//! Seeded random spanning trees of a taxonomy and their tab-indented rendering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::taxonomy::{ClassId, Taxonomy};

/// A spanning forest of a taxonomy: every class keeps at most one of its
/// parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    classes: Vec<ClassId>,
    parent: Vec<Option<usize>>,
    roots: Vec<usize>,
    children: Vec<Vec<usize>>,
    seed: u64,
}

impl SpanningTree {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn roots(&self) -> impl Iterator<Item = &ClassId> {
        self.roots.iter().map(|&r| &self.classes[r])
    }

    pub fn parent_of(&self, pos: usize) -> Option<usize> {
        self.parent[pos]
    }

    /// `(child, parent)` position pairs in child insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent.iter().enumerate().filter_map(|(c, p)| p.map(|p| (c, p)))
    }
}

impl Serialize for SpanningTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Parents<'a>(&'a SpanningTree);
        impl Serialize for Parents<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let tree = self.0;
                let mut map = serializer.serialize_map(Some(tree.classes.len()))?;
                for (c, p) in tree.parent.iter().enumerate() {
                    map.serialize_entry(&tree.classes[c], &p.map(|p| &tree.classes[p]))?;
                }
                map.end()
            }
        }
        let mut s = serializer.serialize_struct("SpanningTree", 3)?;
        s.serialize_field("seed", &self.seed)?;
        s.serialize_field("roots", &self.roots().collect::<Vec<_>>())?;
        s.serialize_field("parent", &Parents(self))?;
        s.end()
    }
}

/// Picks one parent per multi-parent class, uniformly and reproducibly.
///
/// The choice for a class comes from a ChaCha8 stream keyed by `seed`, with
/// the stream number set to the class's position in topological order (ties
/// broken by insertion order). Each class therefore draws independently of
/// how many other classes needed a draw.
pub fn random_spanning_tree(t: &Taxonomy, seed: u64) -> SpanningTree {
    let n = t.len();
    let mut parent = vec![None; n];
    for (rank, cls) in t.topological_order().into_iter().enumerate() {
        let candidates = t.parents(cls);
        parent[cls] = match candidates.len() {
            0 => None,
            1 => Some(candidates[0]),
            k => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rank as u64);
                Some(candidates[rng.random_range(0..k)])
            }
        };
    }
    let mut children = vec![Vec::new(); n];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(c);
        }
    }
    SpanningTree {
        classes: t.classes().to_vec(),
        roots: (0..n).filter(|&c| parent[c].is_none()).collect(),
        parent,
        children,
        seed,
    }
}

/// Depth-first rendering, one tab per depth level; roots and children in
/// insertion order.
pub fn to_hierarchical_text(tree: &SpanningTree) -> String {
    let mut lines = Vec::with_capacity(tree.classes.len());
    let mut stack: Vec<(usize, usize)> = tree.roots.iter().rev().map(|&r| (r, 0)).collect();
    while let Some((cls, depth)) = stack.pop() {
        let mut line = "\t".repeat(depth);
        line.push_str(tree.classes[cls].as_str());
        lines.push(line);
        stack.extend(tree.children[cls].iter().rev().map(|&c| (c, depth + 1)));
    }
    lines.join("\n")
}
