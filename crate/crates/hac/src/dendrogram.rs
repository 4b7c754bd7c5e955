//! Merge forests and their comparison.
//!
//! Nodes `0..n` are the leaves; merge `i` creates node `n + i`. A graph with
//! several components yields one tree per component.

use std::collections::HashMap;

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DendrogramError {
    #[error("dendrograms have {left} and {right} leaves")]
    LeafMismatch { left: usize, right: usize },
    #[error("merge {0} names a node that does not exist yet or already has a parent")]
    BadMerge(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dendrogram {
    leaves: usize,
    merges: Vec<(usize, usize, Rational)>,
    parent: Vec<Option<usize>>,
    min_leaf: Vec<usize>,
}

impl Dendrogram {
    pub fn new(leaves: usize, merges: Vec<(usize, usize, Rational)>) -> Result<Self, DendrogramError> {
        let total = leaves + merges.len();
        let mut parent = vec![None; total];
        let mut min_leaf: Vec<usize> = (0..leaves).collect();
        for (i, (a, b, _)) in merges.iter().enumerate() {
            let node = leaves + i;
            for c in [*a, *b] {
                if c >= node || parent[c].is_some() || a == b {
                    return Err(DendrogramError::BadMerge(i));
                }
                parent[c] = Some(node);
            }
            min_leaf.push(min_leaf[*a].min(min_leaf[*b]));
        }
        Ok(Dendrogram {
            leaves,
            merges,
            parent,
            min_leaf,
        })
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn merges(&self) -> &[(usize, usize, Rational)] {
        &self.merges
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Children with the one holding the smaller leaf first.
    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        let (a, b, _) = self.merges.get(node.checked_sub(self.leaves)?)?;
        if self.min_leaf[*a] < self.min_leaf[*b] {
            Some((*a, *b))
        } else {
            Some((*b, *a))
        }
    }

    pub fn similarity(&self, node: usize) -> Option<&Rational> {
        self.merges.get(node.checked_sub(self.leaves)?).map(|m| &m.2)
    }

    /// Tree roots ordered by smallest leaf.
    pub fn roots(&self) -> Vec<usize> {
        let mut r: Vec<usize> = (0..self.node_count()).filter(|&x| self.parent[x].is_none()).collect();
        r.sort_by_key(|&x| self.min_leaf[x]);
        r
    }

    /// Sorted leaves below `node`.
    pub fn content(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            match self.children(x) {
                Some((a, b)) => stack.extend([a, b]),
                None => out.push(x),
            }
        }
        out.sort_unstable();
        out
    }

    /// One parenthesized term per tree, e.g. `(0 (1 2):3):1`.
    pub fn render(&self) -> String {
        enum Item {
            Node(usize),
            Text(String),
        }
        let mut out = String::new();
        for root in self.roots() {
            let mut stack = vec![Item::Node(root)];
            while let Some(item) = stack.pop() {
                match item {
                    Item::Text(t) => out.push_str(&t),
                    Item::Node(x) => match self.children(x) {
                        None => out.push_str(&x.to_string()),
                        Some((a, b)) => {
                            out.push('(');
                            let sim = self.similarity(x).expect("internal node");
                            stack.push(Item::Text(format!("):{sim}")));
                            stack.push(Item::Node(b));
                            stack.push(Item::Text(" ".into()));
                            stack.push(Item::Node(a));
                        }
                    },
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Number of nodes of `a` whose parent or child set differs in `b`, with nodes
/// matched by the leaves they contain. A node with no counterpart counts as
/// changed.
pub fn dendrogram_diff(a: &Dendrogram, b: &Dendrogram) -> Result<usize, DendrogramError> {
    if a.leaves != b.leaves {
        return Err(DendrogramError::LeafMismatch {
            left: a.leaves,
            right: b.leaves,
        });
    }
    let contents = |d: &Dendrogram| (0..d.node_count()).map(|x| d.content(x)).collect::<Vec<_>>();
    let (ca, cb) = (contents(a), contents(b));
    let index: HashMap<&[usize], usize> = cb.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let kids = |d: &Dendrogram, c: &[Vec<usize>], x: usize| {
        d.children(x).map(|(p, q)| {
            let mut v = [c[p].clone(), c[q].clone()];
            v.sort();
            v
        })
    };
    let mut changed = 0;
    for x in 0..a.node_count() {
        let same = match index.get(ca[x].as_slice()) {
            None => false,
            Some(&y) => {
                let pa = a.parent(x).map(|p| &ca[p]);
                let pb = b.parent(y).map(|p| &cb[p]);
                pa == pb && kids(a, &ca, x) == kids(b, &cb, y)
            }
        };
        if !same {
            changed += 1;
        }
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn chain() -> Dendrogram {
        Dendrogram::new(3, vec![(2, 1, int(5)), (0, 3, int(2))]).unwrap()
    }

    #[test]
    fn render_orders_children_by_smallest_leaf() {
        assert_eq!(chain().render(), "(0 (1 2):5):2\n");
        let forest = Dendrogram::new(4, vec![(3, 2, int(1))]).unwrap();
        assert_eq!(forest.render(), "0\n1\n(2 3):1\n");
    }

    #[test]
    fn rejects_reused_children() {
        assert_eq!(
            Dendrogram::new(3, vec![(0, 1, int(1)), (0, 2, int(1))]),
            Err(DendrogramError::BadMerge(1))
        );
        assert_eq!(Dendrogram::new(2, vec![(0, 2, int(1))]), Err(DendrogramError::BadMerge(0)));
    }

    #[test]
    fn diff_counts() {
        let d = chain();
        assert_eq!(dendrogram_diff(&d, &d).unwrap(), 0);
        let other = Dendrogram::new(3, vec![(0, 1, int(5)), (2, 3, int(2))]).unwrap();
        // Leaves 0, 1, 2 get new parents, {1,2} disappears, the root keeps its content
        // but its children change.
        assert_eq!(dendrogram_diff(&d, &other).unwrap(), 5);
        let small = Dendrogram::new(2, vec![]).unwrap();
        assert!(matches!(dendrogram_diff(&d, &small), Err(DendrogramError::LeafMismatch { .. })));
    }
}
