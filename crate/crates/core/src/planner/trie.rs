use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::scorer::TokenId;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    children: BTreeMap<TokenId, usize>,
    leaf: Option<usize>,
}

/// Token-id trie over terminated skill surfaces. Leaves carry the skill's index in its
/// `SkillSet`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillTrie {
    nodes: Vec<Node>,
}

/// Two skills whose token paths are equal or one is a prefix of the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixClash {
    pub first: usize,
    pub second: usize,
}

impl SkillTrie {
    pub fn build(paths: &[Vec<TokenId>]) -> Result<Self, PrefixClash> {
        let mut nodes = vec![Node::default()];
        for (index, path) in paths.iter().enumerate() {
            let mut at = 0;
            for &tok in path {
                if let Some(first) = nodes[at].leaf {
                    return Err(PrefixClash {
                        first,
                        second: index,
                    });
                }
                at = match nodes[at].children.get(&tok) {
                    Some(&next) => next,
                    None => {
                        nodes.push(Node::default());
                        let next = nodes.len() - 1;
                        nodes[at].children.insert(tok, next);
                        next
                    }
                };
            }
            if let Some(first) = nodes[at].leaf {
                return Err(PrefixClash {
                    first,
                    second: index,
                });
            }
            if let Some((_, &child)) = nodes[at].children.iter().next() {
                return Err(PrefixClash {
                    first: Self::any_leaf(&nodes, child),
                    second: index,
                });
            }
            nodes[at].leaf = Some(index);
        }
        Ok(SkillTrie { nodes })
    }

    fn any_leaf(nodes: &[Node], mut at: usize) -> usize {
        loop {
            if let Some(l) = nodes[at].leaf {
                return l;
            }
            at = *nodes[at]
                .children
                .values()
                .next()
                .expect("inner node has children");
        }
    }

    pub const ROOT: usize = 0;

    pub fn leaf(&self, node: usize) -> Option<usize> {
        self.nodes[node].leaf
    }

    /// Child token ids in ascending order.
    pub fn child_tokens(&self, node: usize) -> Vec<TokenId> {
        self.nodes[node].children.keys().copied().collect()
    }

    pub fn child(&self, node: usize, token: TokenId) -> Option<usize> {
        self.nodes[node].children.get(&token).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.leaf.is_some()).count()
    }

    /// Longest root-to-leaf path, in tokens.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(Self::ROOT, 0usize)];
        while let Some((at, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(self.nodes[at].children.values().map(|&c| (c, d + 1)));
        }
        best
    }
}
