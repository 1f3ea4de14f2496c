//! C4.5-style decision trees: gain-ratio splits, no pruning.

use crate::dataset::{Attribute, AttributeKind, Dataset, Instance, Value};
use crate::error::{FssError, Result};

/// Splits whose information gain is at or below this are ignored.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        class: usize,
    },
    /// One child per declared value of `attribute`.
    Nominal {
        attribute: usize,
        majority: usize,
        children: Vec<Node>,
    },
    /// `value <= threshold` goes left.
    Numeric {
        attribute: usize,
        threshold: f64,
        majority: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: Node,
    attributes: Vec<Attribute>,
    classes: Vec<String>,
}

impl DecisionTree {
    pub fn predict(&self, instance: &Instance) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class } => return *class,
                Node::Nominal {
                    attribute,
                    majority,
                    children,
                } => match instance.values[*attribute] {
                    Value::Nominal(v) if v < children.len() => node = &children[v],
                    _ => return *majority,
                },
                Node::Numeric {
                    attribute,
                    threshold,
                    left,
                    right,
                    ..
                } => match instance.values[*attribute] {
                    Value::Numeric(x) if x <= *threshold => node = left,
                    _ => node = right,
                },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Nominal { children, .. } => 1 + children.iter().map(depth).max().unwrap_or(0),
                Node::Numeric { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

/// `c * log2(c)` for every count up to a node size, so that entropies and
/// split information reduce to table lookups.
struct XLogX(Vec<f64>);

impl XLogX {
    fn new(n: usize) -> Self {
        XLogX((0..=n).map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() }).collect())
    }

    fn entropy(&self, counts: &[usize], total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let sum: f64 = counts.iter().map(|&c| self.0[c]).sum();
        (self.0[total] - sum) / total as f64
    }

    fn ratio<B: AsRef<[usize]>>(&self, parent_entropy: f64, total: usize, branches: &[B]) -> Option<f64> {
        if total == 0 {
            return None;
        }
        let mut remainder = 0.0;
        let mut sizes = 0.0;
        for b in branches {
            let b = b.as_ref();
            let size: usize = b.iter().sum();
            if size == 0 {
                continue;
            }
            remainder += self.0[size] - b.iter().map(|&c| self.0[c]).sum::<f64>();
            sizes += self.0[size];
        }
        let n = total as f64;
        let gain = parent_entropy - remainder / n;
        let split_info = (self.0[total] - sizes) / n;
        (gain > MIN_GAIN && split_info > 0.0).then(|| gain / split_info)
    }
}

/// Gain ratio of partitioning a node with class counts `parent` into
/// `branches`. `None` when the split gains nothing or is degenerate.
pub fn gain_ratio<B: AsRef<[usize]>>(parent: &[usize], branches: &[B]) -> Option<f64> {
    let total: usize = parent.iter().sum();
    let t = XLogX::new(total);
    t.ratio(t.entropy(parent, total), total, branches)
}

fn class_counts(instances: &[&Instance], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for inst in instances {
        counts[inst.class] += 1;
    }
    counts
}

/// Most frequent class; ties go to the earliest declared class.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

enum Split {
    Nominal(usize),
    Numeric(usize, f64),
}

fn best_threshold(t: &XLogX, instances: &[&Instance], attribute: usize, parent: &[usize]) -> Option<(f64, f64)> {
    let mut points: Vec<(f64, usize)> = instances
        .iter()
        .map(|i| match i.values[attribute] {
            Value::Numeric(x) => (x, i.class),
            Value::Nominal(_) => unreachable!("numeric attribute"),
        })
        .collect();
    points.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut left = vec![0; parent.len()];
    let mut right = parent.to_vec();
    let total: usize = parent.iter().sum();
    let parent_entropy = t.entropy(parent, total);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..points.len() - 1 {
        left[points[k].1] += 1;
        right[points[k].1] -= 1;
        let (lo, hi) = (points[k].0, points[k + 1].0);
        if lo == hi {
            continue;
        }
        if let Some(r) = t.ratio(parent_entropy, total, &[&left, &right]) {
            if best.is_none_or(|(b, _)| r > b) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((r, threshold));
            }
        }
    }
    best
}

fn choose_split(t: &XLogX, instances: &[&Instance], attributes: &[Attribute], parent: &[usize]) -> Option<Split> {
    let total: usize = parent.iter().sum();
    let parent_entropy = t.entropy(parent, total);
    let mut best: Option<(f64, Split)> = None;
    for (a, attr) in attributes.iter().enumerate() {
        let candidate = match &attr.kind {
            AttributeKind::Nominal(values) => {
                let mut branches = vec![vec![0; parent.len()]; values.len()];
                for inst in instances {
                    if let Value::Nominal(v) = inst.values[a] {
                        branches[v][inst.class] += 1;
                    }
                }
                t.ratio(parent_entropy, total, &branches).map(|r| (r, Split::Nominal(a)))
            }
            AttributeKind::Numeric => {
                best_threshold(t, instances, a, parent).map(|(r, t)| (r, Split::Numeric(a, t)))
            }
        };
        if let Some((r, split)) = candidate {
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, split));
            }
        }
    }
    best.map(|(_, s)| s)
}

fn grow(t: &XLogX, instances: &[&Instance], attributes: &[Attribute], classes: usize) -> Node {
    let counts = class_counts(instances, classes);
    let majority = majority(&counts);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || instances.len() < 2 {
        return Node::Leaf { class: majority };
    }
    match choose_split(t, instances, attributes, &counts) {
        None => Node::Leaf { class: majority },
        Some(Split::Nominal(attribute)) => {
            let AttributeKind::Nominal(values) = &attributes[attribute].kind else {
                unreachable!()
            };
            let children = (0..values.len())
                .map(|v| {
                    let subset: Vec<&Instance> = instances
                        .iter()
                        .copied()
                        .filter(|i| i.values[attribute] == Value::Nominal(v))
                        .collect();
                    if subset.is_empty() {
                        Node::Leaf { class: majority }
                    } else {
                        grow(t, &subset, attributes, classes)
                    }
                })
                .collect();
            Node::Nominal {
                attribute,
                majority,
                children,
            }
        }
        Some(Split::Numeric(attribute, threshold)) => {
            let (left, right): (Vec<&Instance>, Vec<&Instance>) = instances
                .iter()
                .partition(|i| matches!(i.values[attribute], Value::Numeric(x) if x <= threshold));
            Node::Numeric {
                attribute,
                threshold,
                majority,
                left: Box::new(grow(t, &left, attributes, classes)),
                right: Box::new(grow(t, &right, attributes, classes)),
            }
        }
    }
}

/// Grows a tree top-down, splitting on the highest gain ratio until nodes
/// are pure, smaller than two instances, or no split has positive gain.
pub fn build_tree(train: &Dataset) -> Result<DecisionTree> {
    if train.is_empty() {
        return Err(FssError::EmptyDataset("training set"));
    }
    let instances: Vec<&Instance> = train.instances().iter().collect();
    Ok(DecisionTree {
        root: grow(&XLogX::new(instances.len()), &instances, train.attributes(), train.classes().len()),
        attributes: train.attributes().to_vec(),
        classes: train.classes().to_vec(),
    })
}

/// Correct classifications over total classifications.
pub fn accuracy(tree: &DecisionTree, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(FssError::EmptyDataset("evaluation set"));
    }
    if tree.attributes != data.attributes() || tree.classes != data.classes() {
        return Err(FssError::Schema("dataset schema differs from the tree's training schema".into()));
    }
    let correct = data
        .instances()
        .iter()
        .filter(|i| tree.predict(i) == i.class)
        .count();
    Ok(correct as f64 / data.len() as f64)
}
