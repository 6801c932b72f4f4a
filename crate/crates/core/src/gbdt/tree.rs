use serde::{Deserialize, Serialize};

/// One tree node. Serialized untagged: `{"feature","threshold","left","right"}`
/// for splits and `{"leaf"}` for leaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: f64,
    },
}

/// Binary tree stored as a node array with the root at index 0. Rows with
/// `x[feature] < threshold` descend left. Children always sit at larger
/// indices than their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { leaf: value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { leaf } => return leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[i]
        {
            i = if x[feature] < threshold { left } else { right };
        }
        i
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural check for trees read from untrusted input.
    pub fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut referenced = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Leaf { leaf } if !leaf.is_finite() => {
                    return Err(format!("node {i}: non-finite leaf value"))
                }
                Node::Leaf { .. } => {}
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features {
                        return Err(format!("node {i}: feature {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i}: non-finite threshold"));
                    }
                    for child in [left, right] {
                        if child <= i || child >= self.nodes.len() {
                            return Err(format!("node {i}: invalid child index {child}"));
                        }
                        if referenced[child] {
                            return Err(format!("node {child} has two parents"));
                        }
                        referenced[child] = true;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> DecisionTree {
        DecisionTree {
            nodes: vec![
                Node::Split {
                    feature: 1,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { leaf: -1.0 },
                Node::Leaf { leaf: 2.0 },
            ],
        }
    }

    #[test]
    fn routing() {
        let t = stump();
        assert_eq!(t.predict(&[9.0, 0.4]), -1.0);
        assert_eq!(t.predict(&[9.0, 0.5]), 2.0);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaf_index(&[0.0, 1.0]), 2);
    }

    #[test]
    fn validation_catches_bad_children() {
        assert!(stump().validate(2).is_ok());
        assert!(stump().validate(1).is_err());
        let mut t = stump();
        t.nodes[0] = Node::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 2,
        };
        assert!(t.validate(2).is_err());
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_string(&stump()).unwrap();
        assert_eq!(
            json,
            r#"{"nodes":[{"feature":1,"threshold":0.5,"left":1,"right":2},{"leaf":-1.0},{"leaf":2.0}]}"#
        );
        let back: DecisionTree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, stump());
    }
}
