//! Plaintext decision trees and GBDT ensembles.
//!
//! A [`TreeModel`] is what ingestion produces: an arbitrary binary tree.
//! [`pad_complete`] turns it into a [`DecisionTree`], the complete form the
//! protocol works on: `m = 2^h − 1` decision nodes in heap order (root 0,
//! children `2j+1` / `2j+2`) and `k = 2^h` leaves left to right.
//! A test outcome `b_j = 1` sends evaluation to the left child.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

use crate::compare::{scale_fixed, FixedPointSpec};

pub const DEFAULT_MAX_HEIGHT: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("ingestion error at {path}: {reason}")]
    Ingestion { path: String, reason: String },
    #[error("value out of domain: {0}")]
    Domain(String),
}

fn ingest_err(path: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Ingestion { path: path.into(), reason: reason.into() }
}

/// Test performed at a decision node on encoded `t`-bit values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeTest {
    /// `b = (x > y)`.
    Threshold(u64),
    /// `b = (x ∈ S)`, elements pairwise distinct.
    MemberOf(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionNode {
    /// Zero-based feature index (`δ(j) − 1`).
    pub feature: usize,
    pub test: NodeTest,
}

impl DecisionNode {
    pub fn outcome(&self, x: &[u64]) -> u8 {
        let v = x[self.feature];
        match &self.test {
            NodeTest::Threshold(y) => u8::from(v > *y),
            NodeTest::MemberOf(set) => u8::from(set.contains(&v)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Decision { node: DecisionNode, left: Box<TreeNode>, right: Box<TreeNode> },
    Leaf(i64),
}

impl TreeNode {
    pub fn height(&self) -> u32 {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Decision { left, right, .. } => 1 + left.height().max(right.height()),
        }
    }

    /// Recursive traversal, independent of the complete-array layout.
    pub fn eval(&self, x: &[u64]) -> i64 {
        match self {
            TreeNode::Leaf(v) => *v,
            TreeNode::Decision { node, left, right } => {
                if node.outcome(x) == 1 {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
        }
    }
}

/// An ingested tree of arbitrary shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeModel {
    pub n: usize,
    pub t: u32,
    pub frac_bits: u32,
    pub root: TreeNode,
}

impl TreeModel {
    pub fn height(&self) -> u32 {
        self.root.height()
    }

    pub fn eval(&self, x: &FeatureVector) -> i64 {
        self.root.eval(&x.0)
    }
}

/// Complete binary decision tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTree {
    pub h: u32,
    pub n: usize,
    pub t: u32,
    pub frac_bits: u32,
    pub nodes: Vec<DecisionNode>,
    pub leaves: Vec<i64>,
}

/// Encoded feature vector; every entry lies in `[0, 2^t)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<u64>);

impl FeatureVector {
    pub fn validate(&self, n: usize, t: u32) -> Result<(), ModelError> {
        if self.0.len() != n {
            return Err(ModelError::Domain(format!("expected {n} features, got {}", self.0.len())));
        }
        if let Some(v) = self.0.iter().find(|&&v| v >> t != 0) {
            return Err(ModelError::Domain(format!("feature {v} exceeds {t} bits")));
        }
        Ok(())
    }

    /// Encodes raw values: numeric features are fixed-point scaled and
    /// offset, features listed in `categorical` are taken as raw codes.
    pub fn encode(
        raw: &[f64],
        categorical: &[usize],
        spec: &FixedPointSpec,
    ) -> Result<Self, ModelError> {
        let cat: HashSet<usize> = categorical.iter().copied().collect();
        raw.iter()
            .enumerate()
            .map(|(i, &v)| {
                if cat.contains(&i) {
                    if v < 0.0 || v.fract() != 0.0 || v >= (1u64 << spec.total_bits) as f64 {
                        return Err(ModelError::Domain(format!("category code {v} invalid")));
                    }
                    Ok(v as u64)
                } else {
                    scale_fixed(v, spec).map_err(|e| ModelError::Domain(e.to_string()))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(FeatureVector)
    }
}

impl DecisionTree {
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn k(&self) -> usize {
        self.leaves.len()
    }

    /// Edges `(node j, is_right)` from the root down to leaf `i`.
    pub fn path(&self, leaf: usize) -> Vec<(usize, bool)> {
        let mut idx = self.m() + leaf;
        let mut out = Vec::with_capacity(self.h as usize);
        while idx > 0 {
            let parent = (idx - 1) / 2;
            out.push((parent, idx == 2 * parent + 2));
            idx = parent;
        }
        out.reverse();
        out
    }

    pub fn paths(&self) -> Vec<Vec<(usize, bool)>> {
        (0..self.k()).map(|i| self.path(i)).collect()
    }

    pub fn fixed_point(&self) -> FixedPointSpec {
        FixedPointSpec { total_bits: self.t, frac_bits: self.frac_bits }
    }

    /// Back to the recursive form.
    pub fn to_model(&self) -> TreeModel {
        fn build(t: &DecisionTree, idx: usize) -> TreeNode {
            if idx >= t.m() {
                return TreeNode::Leaf(t.leaves[idx - t.m()]);
            }
            TreeNode::Decision {
                node: t.nodes[idx].clone(),
                left: Box::new(build(t, 2 * idx + 1)),
                right: Box::new(build(t, 2 * idx + 2)),
            }
        }
        TreeModel { n: self.n, t: self.t, frac_bits: self.frac_bits, root: build(self, 0) }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.h == 0 || self.m() != (1usize << self.h) - 1 || self.k() != 1usize << self.h {
            return Err(ModelError::Domain("tree is not complete".into()));
        }
        for (j, node) in self.nodes.iter().enumerate() {
            if node.feature >= self.n {
                return Err(ModelError::Domain(format!("node {j} feature out of range")));
            }
            match &node.test {
                NodeTest::Threshold(y) if y >> self.t != 0 => {
                    return Err(ModelError::Domain(format!("node {j} threshold exceeds t bits")))
                }
                NodeTest::MemberOf(set) => {
                    let uniq: HashSet<_> = set.iter().collect();
                    if uniq.len() != set.len() || set.iter().any(|s| s >> self.t != 0) {
                        return Err(ModelError::Domain(format!("node {j} set invalid")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Pads a tree to a complete tree of height `target_h` with dummy nodes
/// (feature 1, threshold 0) whose two children both carry the original leaf.
pub fn pad_complete(model: &TreeModel, target_h: u32) -> Result<DecisionTree, ModelError> {
    pad_complete_with_max(model, target_h, DEFAULT_MAX_HEIGHT)
}

pub fn pad_complete_with_max(
    model: &TreeModel,
    target_h: u32,
    max_h: u32,
) -> Result<DecisionTree, ModelError> {
    if target_h > max_h {
        return Err(ModelError::Domain(format!("height {target_h} exceeds maximum {max_h}")));
    }
    let h = model.height();
    if target_h < h || target_h == 0 {
        return Err(ModelError::Domain(format!("cannot pad height-{h} tree to {target_h}")));
    }
    let m = (1usize << target_h) - 1;
    let mut nodes = vec![None; m];
    let mut leaves = vec![0i64; m + 1];

    fn place(
        node: &TreeNode,
        idx: usize,
        m: usize,
        nodes: &mut [Option<DecisionNode>],
        leaves: &mut [i64],
    ) {
        if idx >= m {
            match node {
                TreeNode::Leaf(v) => leaves[idx - m] = *v,
                TreeNode::Decision { .. } => unreachable!("height checked"),
            }
            return;
        }
        match node {
            TreeNode::Leaf(_) => {
                nodes[idx] = Some(DecisionNode { feature: 0, test: NodeTest::Threshold(0) });
                place(node, 2 * idx + 1, m, nodes, leaves);
                place(node, 2 * idx + 2, m, nodes, leaves);
            }
            TreeNode::Decision { node: d, left, right } => {
                nodes[idx] = Some(d.clone());
                place(left, 2 * idx + 1, m, nodes, leaves);
                place(right, 2 * idx + 2, m, nodes, leaves);
            }
        }
    }
    place(&model.root, 0, m, &mut nodes, &mut leaves);
    Ok(DecisionTree {
        h: target_h,
        n: model.n,
        t: model.t,
        frac_bits: model.frac_bits,
        nodes: nodes.into_iter().map(|n| n.expect("every slot placed")).collect(),
        leaves,
    })
}

/// One-hot encoding of the feature map `δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMapMatrix {
    pub rows: Vec<Vec<u8>>,
}

impl FeatureMapMatrix {
    /// `M·x`: the feature selected by each row.
    pub fn apply(&self, x: &[u64]) -> Vec<u64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(&m, &v)| u64::from(m) * v).sum())
            .collect()
    }
}

pub fn build_feature_matrix(tree: &DecisionTree) -> FeatureMapMatrix {
    let rows = tree
        .nodes
        .iter()
        .map(|node| {
            let mut row = vec![0u8; tree.n];
            row[node.feature] = 1;
            row
        })
        .collect();
    FeatureMapMatrix { rows }
}

/// Label, outcome vector `b` and index of the leaf reached.
pub fn eval_plain(tree: &DecisionTree, x: &FeatureVector) -> (i64, Vec<u8>, usize) {
    let b: Vec<u8> = tree.nodes.iter().map(|node| node.outcome(&x.0)).collect();
    let mut idx = 0;
    while idx < tree.m() {
        idx = if b[idx] == 1 { 2 * idx + 1 } else { 2 * idx + 2 };
    }
    let leaf = idx - tree.m();
    (tree.leaves[leaf], b, leaf)
}

/// Path costs with `ec_{j,left} = 1 − b_j` and `ec_{j,right} = b_j`.
pub fn path_costs_plain(tree: &DecisionTree, b: &[u8]) -> Vec<u32> {
    (0..tree.k())
        .map(|i| {
            tree.path(i)
                .into_iter()
                .map(|(j, right)| if right { u32::from(b[j]) } else { 1 - u32::from(b[j]) })
                .sum()
        })
        .collect()
}

/// Ensemble `T₀ + η·Σ T_j(x)`.
///
/// Labels and `η` carry `frac_bits` fractional bits; `T₀` and the
/// aggregate carry `2·frac_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GbdtModel {
    pub trees: Vec<DecisionTree>,
    pub eta: i64,
    pub t0: i64,
    pub frac_bits: u32,
}

impl GbdtModel {
    pub fn n(&self) -> usize {
        self.trees[0].n
    }

    pub fn t(&self) -> u32 {
        self.trees[0].t
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let first = self.trees.first().ok_or_else(|| ModelError::Domain("empty ensemble".into()))?;
        for tree in &self.trees {
            tree.validate()?;
            if tree.n != first.n || tree.t != first.t || tree.frac_bits != self.frac_bits {
                return Err(ModelError::Domain("trees disagree on n, t or frac_bits".into()));
            }
        }
        Ok(())
    }

    /// Aggregate at scale `2^(2f)` back to a decimal.
    pub fn descale(&self, aggregate: i128) -> f64 {
        aggregate as f64 / (1u128 << (2 * self.frac_bits)) as f64
    }
}

/// Exact fixed-point aggregate; errors when any partial sum leaves the
/// `payload_bits` range.
pub fn eval_gbdt_plain(
    model: &GbdtModel,
    x: &FeatureVector,
    payload_bits: u32,
) -> Result<i128, ModelError> {
    let limit = if payload_bits >= 127 { i128::MAX } else { 1i128 << payload_bits };
    let check = |v: i128| {
        if v.abs() >= limit {
            Err(ModelError::Domain(format!("aggregate {v} exceeds {payload_bits}-bit bound")))
        } else {
            Ok(v)
        }
    };
    let mut sum: i128 = 0;
    for tree in &model.trees {
        sum = check(sum + i128::from(eval_plain(tree, x).0))?;
    }
    let weighted = check(sum.checked_mul(i128::from(model.eta)).unwrap_or(i128::MAX))?;
    check(i128::from(model.t0) + weighted)
}

// ---------------------------------------------------------------------------
// JSON ingestion

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ChildRef {
    Node(u64),
    Leaf { leaf: u64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Threshold,
    Member,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NodeDoc {
    pub id: u64,
    /// One-based feature index.
    pub feature: usize,
    pub kind: NodeKind,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub set: Option<Vec<f64>>,
    pub left: ChildRef,
    pub right: ChildRef,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LeafDoc {
    pub id: u64,
    pub label: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreeDoc {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub t: Option<u32>,
    #[serde(default)]
    pub frac_bits: Option<u32>,
    pub nodes: Vec<NodeDoc>,
    pub leaves: Vec<LeafDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GbdtDoc {
    pub n: usize,
    pub t: u32,
    pub frac_bits: u32,
    pub eta: f64,
    pub t0: f64,
    pub trees: Vec<TreeDoc>,
}

pub fn load_tree(document: &str) -> Result<TreeModel, ModelError> {
    let doc: TreeDoc =
        serde_json::from_str(document).map_err(|e| ingest_err("$", e.to_string()))?;
    tree_from_doc(&doc, None, "$")
}

fn tree_from_doc(
    doc: &TreeDoc,
    inherited: Option<(usize, u32, u32)>,
    path: &str,
) -> Result<TreeModel, ModelError> {
    fn pick<T>(own: Option<T>, inh: Option<T>, path: &str, name: &str) -> Result<T, ModelError> {
        own.or(inh).ok_or_else(|| ingest_err(format!("{path}.{name}"), "missing"))
    }
    let n = pick(doc.n, inherited.map(|i| i.0), path, "n")?;
    let t = pick(doc.t, inherited.map(|i| i.1), path, "t")?;
    let frac_bits = pick(doc.frac_bits, inherited.map(|i| i.2), path, "frac_bits")?;
    if n == 0 {
        return Err(ingest_err(format!("{path}.n"), "must be positive"));
    }
    let spec = FixedPointSpec::new(t, frac_bits)
        .map_err(|e| ingest_err(format!("{path}.t"), e.to_string()))?;
    if doc.nodes.is_empty() {
        return Err(ingest_err(format!("{path}.nodes"), "at least one decision node required"));
    }

    let mut leaves = HashMap::new();
    for (i, leaf) in doc.leaves.iter().enumerate() {
        let p = format!("{path}.leaves[{i}]");
        let v = spec.to_fixed(leaf.label).map_err(|e| ingest_err(&p, e.to_string()))?;
        if leaves.insert(leaf.id, v).is_some() {
            return Err(ingest_err(p, "duplicate leaf id"));
        }
    }
    let mut nodes = HashMap::new();
    for (i, node) in doc.nodes.iter().enumerate() {
        if nodes.insert(node.id, i).is_some() {
            return Err(ingest_err(format!("{path}.nodes[{i}]"), "duplicate node id"));
        }
    }
    let mut referenced = HashSet::new();
    for node in &doc.nodes {
        for child in [&node.left, &node.right] {
            if let ChildRef::Node(id) = child {
                referenced.insert(*id);
            }
        }
    }
    let roots: Vec<_> = doc.nodes.iter().filter(|n| !referenced.contains(&n.id)).collect();
    if roots.len() != 1 {
        return Err(ingest_err(format!("{path}.nodes"), format!("{} root candidates", roots.len())));
    }

    struct Ctx<'a> {
        doc: &'a TreeDoc,
        nodes: HashMap<u64, usize>,
        leaves: HashMap<u64, i64>,
        n: usize,
        t: u32,
        spec: FixedPointSpec,
        path: &'a str,
        visiting: HashSet<u64>,
    }

    fn build(ctx: &mut Ctx<'_>, child: &ChildRef) -> Result<TreeNode, ModelError> {
        match child {
            ChildRef::Leaf { leaf } => ctx
                .leaves
                .get(leaf)
                .map(|v| TreeNode::Leaf(*v))
                .ok_or_else(|| ingest_err(format!("{}.leaves", ctx.path), format!("unknown leaf {leaf}"))),
            ChildRef::Node(id) => {
                let i = *ctx
                    .nodes
                    .get(id)
                    .ok_or_else(|| ingest_err(format!("{}.nodes", ctx.path), format!("unknown node {id}")))?;
                if !ctx.visiting.insert(*id) {
                    return Err(ingest_err(format!("{}.nodes[{i}]", ctx.path), "cycle"));
                }
                let nd = &ctx.doc.nodes[i];
                let p = format!("{}.nodes[{i}]", ctx.path);
                if nd.feature == 0 || nd.feature > ctx.n {
                    return Err(ingest_err(format!("{p}.feature"), format!("{} not in [1, {}]", nd.feature, ctx.n)));
                }
                let test = match nd.kind {
                    NodeKind::Threshold => {
                        let y = nd.threshold.ok_or_else(|| ingest_err(format!("{p}.threshold"), "missing"))?;
                        NodeTest::Threshold(
                            scale_fixed(y, &ctx.spec).map_err(|e| ingest_err(format!("{p}.threshold"), e.to_string()))?,
                        )
                    }
                    NodeKind::Member => {
                        let set = nd.set.as_ref().ok_or_else(|| ingest_err(format!("{p}.set"), "missing"))?;
                        let mut out = Vec::with_capacity(set.len());
                        for &s in set {
                            if s < 0.0 || s.fract() != 0.0 || s >= (1u64 << ctx.t) as f64 {
                                return Err(ingest_err(format!("{p}.set"), format!("{s} is not a {}-bit code", ctx.t)));
                            }
                            if out.contains(&(s as u64)) {
                                return Err(ingest_err(format!("{p}.set"), "duplicate element"));
                            }
                            out.push(s as u64);
                        }
                        NodeTest::MemberOf(out)
                    }
                };
                let (l, r) = (nd.left.clone(), nd.right.clone());
                let left = Box::new(build(ctx, &l)?);
                let right = Box::new(build(ctx, &r)?);
                ctx.visiting.remove(id);
                Ok(TreeNode::Decision { node: DecisionNode { feature: nd.feature - 1, test }, left, right })
            }
        }
    }

    let root_id = roots[0].id;
    let mut ctx = Ctx { doc, nodes, leaves, n, t, spec, path, visiting: HashSet::new() };
    let root = build(&mut ctx, &ChildRef::Node(root_id))?;
    Ok(TreeModel { n, t, frac_bits, root })
}

/// Loads an ensemble and pads every tree to the ensemble's maximum height.
pub fn load_gbdt(document: &str) -> Result<GbdtModel, ModelError> {
    let doc: GbdtDoc =
        serde_json::from_str(document).map_err(|e| ingest_err("$", e.to_string()))?;
    if doc.trees.is_empty() {
        return Err(ingest_err("$.trees", "at least one tree required"));
    }
    let spec = FixedPointSpec::new(doc.t, doc.frac_bits)
        .map_err(|e| ingest_err("$.t", e.to_string()))?;
    let models = doc
        .trees
        .iter()
        .enumerate()
        .map(|(i, t)| tree_from_doc(t, Some((doc.n, doc.t, doc.frac_bits)), &format!("$.trees[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, m) in models.iter().enumerate() {
        if m.n != doc.n || m.t != doc.t || m.frac_bits != doc.frac_bits {
            return Err(ingest_err(format!("$.trees[{i}]"), "n, t and frac_bits must match the ensemble"));
        }
    }
    let h = models.iter().map(TreeModel::height).max().unwrap_or(1).max(1);
    let trees = models
        .iter()
        .map(|m| pad_complete(m, h))
        .collect::<Result<Vec<_>, _>>()?;
    let eta = spec.to_fixed(doc.eta).map_err(|e| ingest_err("$.eta", e.to_string()))?;
    let t0_spec = FixedPointSpec { total_bits: 62, frac_bits: 2 * doc.frac_bits };
    let t0 = t0_spec.to_fixed(doc.t0).map_err(|e| ingest_err("$.t0", e.to_string()))?;
    let model = GbdtModel { trees, eta, t0, frac_bits: doc.frac_bits };
    model.validate()?;
    Ok(model)
}

/// Exports a tree in the ingestion schema.
pub fn to_doc(model: &TreeModel) -> TreeDoc {
    let spec = FixedPointSpec { total_bits: model.t, frac_bits: model.frac_bits };
    let mut nodes = Vec::new();
    let mut leaves = Vec::new();
    fn walk(
        node: &TreeNode,
        spec: &FixedPointSpec,
        nodes: &mut Vec<NodeDoc>,
        leaves: &mut Vec<LeafDoc>,
    ) -> ChildRef {
        match node {
            TreeNode::Leaf(v) => {
                let id = leaves.len() as u64;
                leaves.push(LeafDoc { id, label: spec.from_fixed(*v) });
                ChildRef::Leaf { leaf: id }
            }
            TreeNode::Decision { node, left, right } => {
                let id = nodes.len() as u64;
                nodes.push(NodeDoc {
                    id,
                    feature: node.feature + 1,
                    kind: NodeKind::Threshold,
                    threshold: None,
                    set: None,
                    left: ChildRef::Leaf { leaf: 0 },
                    right: ChildRef::Leaf { leaf: 0 },
                });
                match &node.test {
                    NodeTest::Threshold(y) => {
                        nodes[id as usize].threshold = Some(crate::compare::unscale_fixed(*y, spec));
                    }
                    NodeTest::MemberOf(set) => {
                        nodes[id as usize].kind = NodeKind::Member;
                        nodes[id as usize].set = Some(set.iter().map(|&s| s as f64).collect());
                    }
                }
                let l = walk(left, spec, nodes, leaves);
                let r = walk(right, spec, nodes, leaves);
                nodes[id as usize].left = l;
                nodes[id as usize].right = r;
                ChildRef::Node(id)
            }
        }
    }
    walk(&model.root, &spec, &mut nodes, &mut leaves);
    TreeDoc { n: Some(model.n), t: Some(model.t), frac_bits: Some(model.frac_bits), nodes, leaves }
}

// ---------------------------------------------------------------------------
// Synthetic models for benchmarks and randomized suites

/// Shape of a synthetic tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShape {
    pub h: u32,
    pub n: usize,
    pub t: u32,
}

/// Random complete tree; `member_prob` is the chance a node is a set test.
pub fn random_tree<R: Rng + ?Sized>(
    shape: TreeShape,
    label_bits: u32,
    member_prob: f64,
    rng: &mut R,
) -> DecisionTree {
    let m = (1usize << shape.h) - 1;
    let span = 1u64 << shape.t;
    let nodes = (0..m)
        .map(|_| {
            let feature = rng.gen_range(0..shape.n);
            let test = if rng.gen_bool(member_prob) {
                let size = rng.gen_range(1..=span.min(4)) as usize;
                let mut set = Vec::with_capacity(size);
                while set.len() < size {
                    let s = rng.gen_range(0..span);
                    if !set.contains(&s) {
                        set.push(s);
                    }
                }
                NodeTest::MemberOf(set)
            } else {
                NodeTest::Threshold(rng.gen_range(0..span))
            };
            DecisionNode { feature, test }
        })
        .collect();
    let bound = 1i64 << label_bits;
    let leaves = (0..=m).map(|_| rng.gen_range(-bound + 1..bound)).collect();
    DecisionTree { h: shape.h, n: shape.n, t: shape.t, frac_bits: 0, nodes, leaves }
}

pub fn random_features<R: Rng + ?Sized>(n: usize, t: u32, rng: &mut R) -> FeatureVector {
    FeatureVector((0..n).map(|_| rng.gen_range(0..1u64 << t)).collect())
}
