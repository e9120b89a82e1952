//! Permutations, partial permutations and the equivalence relations they
//! induce on the edges and vertices of a trace diagram.
//!
//! A product of `k` traces is drawn as `k` circles. Edges are numbered
//! globally from 1, circle after circle, and edge `j` runs from vertex `j` to
//! vertex `j+1`, where `+1` wraps inside the circle the edge belongs to.
//! Pairing two Gaussian edges glues the start of each to the end of the
//! other; the resulting vertex classes decide which matrix indices are summed
//! together.
//!
//! Indices are 1-based throughout, matching the usual diagram labels.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Circles of a trace diagram and the within-circle successor arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleLayout {
    lengths: Vec<usize>,
    // circle index (0-based) of every global edge, index 0 unused
    circle_of: Vec<usize>,
    starts: Vec<usize>,
}

impl CircleLayout {
    pub fn new(lengths: Vec<usize>) -> Result<Self> {
        if lengths.contains(&0) {
            return Err(Error::invalid("circle lengths must be positive"));
        }
        let mut circle_of = vec![usize::MAX];
        let mut starts = Vec::with_capacity(lengths.len());
        for (c, &len) in lengths.iter().enumerate() {
            starts.push(circle_of.len());
            circle_of.extend(std::iter::repeat_n(c, len));
        }
        Ok(Self {
            lengths,
            circle_of,
            starts,
        })
    }

    pub fn single(len: usize) -> Result<Self> {
        Self::new(vec![len])
    }

    /// One circle of `2 * p_i` edges per part, the layout of a product of
    /// traces of `(A B^H)^{p_i}` words.
    pub fn doubled(parts: &[usize]) -> Result<Self> {
        Self::new(parts.iter().map(|p| 2 * p).collect())
    }

    pub fn circle_lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn num_circles(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_edges(&self) -> usize {
        self.circle_of.len() - 1
    }

    fn check(&self, j: usize) {
        assert!(
            (1..=self.total_edges()).contains(&j),
            "edge {j} outside layout of {} edges",
            self.total_edges()
        );
    }

    pub fn succ(&self, j: usize) -> usize {
        self.check(j);
        let c = self.circle_of[j];
        let start = self.starts[c];
        start + (j - start + 1) % self.lengths[c]
    }

    pub fn pred(&self, j: usize) -> usize {
        self.check(j);
        let c = self.circle_of[j];
        let start = self.starts[c];
        let len = self.lengths[c];
        start + (j - start + len - 1) % len
    }

    pub fn circle_of(&self, j: usize) -> usize {
        self.check(j);
        self.circle_of[j]
    }
}

/// A permutation of `{1..p}`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let p = images.len();
        let mut seen = vec![false; p + 1];
        for &i in &images {
            if i == 0 || i > p || seen[i] {
                return Err(Error::invalid(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            images: (1..=p).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, j: usize) -> usize {
        self.images[j - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let p = self.images.len();
        let mut seen = vec![false; p + 1];
        let mut out = Vec::new();
        for start in 1..=p {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                cycle.push(j);
                j = self.apply(j);
            }
            out.push(cycle);
        }
        out
    }
}

/// All `p!` permutations of `{1..p}` in lexicographic order of image lists.
pub fn enumerate_permutations(p: usize) -> impl Iterator<Item = Permutation> {
    (1..=p)
        .permutations(p)
        .map(|images| Permutation { images })
}

/// A bijection between two subsets of `{1..p}`.
///
/// `rho1` is the domain and `rho2` the image. For complex Gaussian words the
/// domain indexes the conjugated (`X^H`) factors and the image the plain
/// (`X`) factors; each pair is one Wick contraction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialPermutation {
    p: usize,
    // (domain, image) sorted by domain
    pairs: Vec<(usize, usize)>,
    disjoint: bool,
}

impl PartialPermutation {
    pub fn new(p: usize, mut pairs: Vec<(usize, usize)>, disjoint: bool) -> Result<Self> {
        pairs.sort_unstable();
        let mut dom = BTreeSet::new();
        let mut img = BTreeSet::new();
        for &(a, b) in &pairs {
            if a == 0 || b == 0 || a > p || b > p {
                return Err(Error::invalid(format!("pair ({a}, {b}) outside 1..={p}")));
            }
            if !dom.insert(a) || !img.insert(b) {
                return Err(Error::invalid("pairing is not one-to-one"));
            }
        }
        if disjoint && !dom.is_disjoint(&img) {
            return Err(Error::invalid("domain and image must be disjoint"));
        }
        Ok(Self { p, pairs, disjoint })
    }

    pub fn empty(p: usize) -> Self {
        Self {
            p,
            pairs: Vec::new(),
            disjoint: true,
        }
    }

    pub fn from_permutation(pi: &Permutation) -> Self {
        Self {
            p: pi.len(),
            pairs: (1..=pi.len()).map(|j| (j, pi.apply(j))).collect(),
            disjoint: false,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `|rho1| = |rho2|`.
    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn disjointness_required(&self) -> bool {
        self.disjoint
    }

    pub fn rho1(&self) -> Vec<usize> {
        self.pairs.iter().map(|&(a, _)| a).collect()
    }

    pub fn rho2(&self) -> Vec<usize> {
        let mut v: Vec<_> = self.pairs.iter().map(|&(_, b)| b).collect();
        v.sort_unstable();
        v
    }

    pub fn is_disjoint(&self) -> bool {
        let dom: BTreeSet<_> = self.rho1().into_iter().collect();
        self.pairs.iter().all(|(_, b)| !dom.contains(b))
    }

    pub fn apply(&self, j: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&j, |&(a, _)| a)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn inverse(&self, i: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(_, b)| b == i).map(|&(a, _)| a)
    }
}

/// Every partial permutation of `{1..p}` once, ordered by size, then by
/// lexicographic domain, image and pairing. With `disjoint` only pairs of
/// disjoint subsets are produced.
pub fn enumerate_partial_permutations(
    p: usize,
    disjoint: bool,
) -> impl Iterator<Item = PartialPermutation> {
    (0..=p).flat_map(move |k| partial_permutations_of_size(p, k, disjoint))
}

/// Partial permutations with `|rho1| = |rho2| = k`.
pub fn partial_permutations_of_size(
    p: usize,
    k: usize,
    disjoint: bool,
) -> impl Iterator<Item = PartialPermutation> {
    let mut out = Vec::new();
    for dom in (1..=p).combinations(k) {
        for img in (1..=p).combinations(k) {
            if disjoint && img.iter().any(|b| dom.contains(b)) {
                continue;
            }
            for images in img.into_iter().permutations(k) {
                out.push(PartialPermutation {
                    p,
                    pairs: dom.iter().copied().zip(images).collect(),
                    disjoint,
                });
            }
        }
    }
    out.into_iter()
}

/// The involution on doubled edge labels induced by a partial permutation:
/// `2j -> 2 pi(j) - 1` for `j` in the domain and `2j - 1 -> 2 pi^{-1}(j)`
/// for `j` in the image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatPi {
    map: Vec<Option<usize>>,
}

impl HatPi {
    pub fn get(&self, j: usize) -> Option<usize> {
        self.map.get(j).copied().flatten()
    }

    /// Labels on which the involution is defined, ascending.
    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.map
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|_| j))
    }
}

pub fn hat_pi(pi: &PartialPermutation, layout: &CircleLayout) -> Result<HatPi> {
    if layout.total_edges() != 2 * pi.p() {
        return Err(Error::invalid(format!(
            "layout has {} edges, expected {}",
            layout.total_edges(),
            2 * pi.p()
        )));
    }
    let mut map = vec![None; 2 * pi.p() + 1];
    for &(a, b) in pi.pairs() {
        map[2 * a] = Some(2 * b - 1);
        map[2 * b - 1] = Some(2 * a);
    }
    Ok(HatPi { map })
}

/// A set partition of a subset of `{1..ground_size}` in canonical form:
/// blocks sorted internally and ordered by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    ground_size: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn from_blocks(ground_size: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::invalid("empty block"));
            }
            for &x in b {
                if x == 0 || x > ground_size || !seen.insert(x) {
                    return Err(Error::invalid(format!("element {x} repeated or out of range")));
                }
            }
        }
        Ok(Self::canonical(ground_size, blocks))
    }

    fn canonical(ground_size: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Self {
            ground_size,
            blocks,
        }
    }

    pub fn empty(ground_size: usize) -> Self {
        Self {
            ground_size,
            blocks: Vec::new(),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Elements covered by the blocks.
    pub fn support(&self) -> BTreeSet<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn block_of(&self, x: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&x).is_ok())
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        match (self.block_of(a), self.block_of(b)) {
            (Some(i), Some(j)) => i == j,
            _ => false,
        }
    }

    /// Keeps only the blocks satisfying `keep`, without reindexing.
    pub fn filter_blocks(&self, keep: impl Fn(&[usize]) -> bool) -> Self {
        Self {
            ground_size: self.ground_size,
            blocks: self.blocks.iter().filter(|b| keep(b)).cloned().collect(),
        }
    }

    /// Number of blocks containing at least one element of `set`.
    pub fn blocks_meeting(&self, set: &BTreeSet<usize>) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.iter().any(|x| set.contains(x)))
            .count()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(size: usize) -> Self {
        Self {
            parent: (0..=size).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn partition(mut self, ground_size: usize, support: impl IntoIterator<Item = usize>) -> SetPartition {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for x in support {
            let r = self.find(x);
            groups.entry(r).or_default().push(x);
        }
        SetPartition::canonical(ground_size, groups.into_values().collect())
    }
}

/// Edges `2j` (`j` in the domain) and `2j - 1` (`j` in the image): the
/// Gaussian factors of a partial permutation in a doubled layout.
pub fn gaussian_edges(pi: &PartialPermutation) -> BTreeSet<usize> {
    pi.pairs()
        .iter()
        .flat_map(|&(a, b)| [2 * a, 2 * b - 1])
        .collect()
}

/// The complement of [`gaussian_edges`] in `{1..2p}`.
pub fn deterministic_edges(pi: &PartialPermutation) -> BTreeSet<usize> {
    let g = gaussian_edges(pi);
    (1..=2 * pi.p()).filter(|j| !g.contains(j)).collect()
}

/// Vertex classes on `{1..2p}` glued by the pairing: `j ~ hat(j) + 1` and
/// `j + 1 ~ hat(j)` for every paired edge `j`.
pub fn rho_of(pi: &PartialPermutation, layout: &CircleLayout) -> Result<SetPartition> {
    let hat = hat_pi(pi, layout)?;
    let size = 2 * pi.p();
    let mut uf = UnionFind::new(size);
    for j in hat.domain() {
        let h = hat.get(j).unwrap();
        uf.union(j, layout.succ(h));
        uf.union(layout.succ(j), h);
    }
    Ok(uf.partition(size, 1..=size))
}

/// Groups the deterministic edges into cyclic products: adjacent
/// deterministic edges are related, and so are `k`, `l` whenever the end
/// vertex of `k` is glued to the start vertex of `l`.
pub fn sigma_of(
    pi: &PartialPermutation,
    layout: &CircleLayout,
    det_edges: &BTreeSet<usize>,
) -> Result<SetPartition> {
    let rho = rho_of(pi, layout)?;
    let gauss = gaussian_edges(pi);
    if let Some(bad) = det_edges.iter().find(|e| gauss.contains(e)) {
        return Err(Error::invalid(format!("edge {bad} is both Gaussian and deterministic")));
    }
    Ok(relate_det_edges(&rho, layout, det_edges, false))
}

fn relate_det_edges(
    rho: &SetPartition,
    layout: &CircleLayout,
    det_edges: &BTreeSet<usize>,
    both_orientations: bool,
) -> SetPartition {
    let size = layout.total_edges();
    let mut uf = UnionFind::new(size);
    for &k in det_edges {
        let next = layout.succ(k);
        if det_edges.contains(&next) {
            uf.union(k, next);
        }
        for &l in det_edges {
            if rho.same_block(next, l)
                || (both_orientations && rho.same_block(k, layout.succ(l)))
            {
                uf.union(k, l);
            }
        }
    }
    uf.partition(size, det_edges.iter().copied())
}

fn require_disjoint(pi: &PartialPermutation, layout: &CircleLayout) -> Result<()> {
    if !pi.is_disjoint() {
        return Err(Error::invalid("selfadjoint pairing needs disjoint domain and image"));
    }
    if layout.total_edges() != pi.p() {
        return Err(Error::invalid(format!(
            "layout has {} edges, expected {}",
            layout.total_edges(),
            pi.p()
        )));
    }
    Ok(())
}

/// Vertex classes on `{1..p}` for a selfadjoint word: each pairing of a
/// conjugated edge `i` with plain edge `pi(i)` glues `i ~ pi(i) + 1` and
/// `i + 1 ~ pi(i)`.
pub fn rho_sa_of(pi: &PartialPermutation, layout: &CircleLayout) -> Result<SetPartition> {
    require_disjoint(pi, layout)?;
    let p = pi.p();
    let mut uf = UnionFind::new(p);
    for &(i, j) in pi.pairs() {
        uf.union(i, layout.succ(j));
        uf.union(layout.succ(i), j);
    }
    Ok(uf.partition(p, 1..=p))
}

/// Cyclic grouping of the unpaired edges `(rho1 ∪ rho2)^c` of a selfadjoint word.
pub fn sigma_sa_of(pi: &PartialPermutation, layout: &CircleLayout) -> Result<SetPartition> {
    let rho = rho_sa_of(pi, layout)?;
    let det = selfadjoint_det_edges(pi);
    Ok(relate_det_edges(&rho, layout, &det, true))
}

/// `(rho1 ∪ rho2)^c` within `{1..p}`.
pub fn selfadjoint_det_edges(pi: &PartialPermutation) -> BTreeSet<usize> {
    let used: BTreeSet<_> = pi.pairs().iter().flat_map(|&(a, b)| [a, b]).collect();
    (1..=pi.p()).filter(|j| !used.contains(j)).collect()
}

/// Vertices incident to a deterministic edge: `D ∪ (D + 1)`.
pub fn touched_vertices(det_edges: &BTreeSet<usize>, layout: &CircleLayout) -> BTreeSet<usize> {
    det_edges
        .iter()
        .flat_map(|&k| [k, layout.succ(k)])
        .collect()
}

/// Block statistics of a parity-pure vertex partition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockStats {
    /// Blocks of even vertices.
    pub k: usize,
    /// Blocks of odd vertices.
    pub l: usize,
    /// Even blocks touching a deterministic edge.
    pub kd: usize,
    /// Odd blocks touching a deterministic edge.
    pub ld: usize,
    pub even_block_sizes: Vec<usize>,
    pub odd_block_sizes: Vec<usize>,
}

pub fn block_stats(
    rho: &SetPartition,
    det_edges: &BTreeSet<usize>,
    layout: &CircleLayout,
) -> Result<BlockStats> {
    let touched = if det_edges.is_empty() {
        BTreeSet::new()
    } else {
        touched_vertices(det_edges, layout)
    };
    let mut stats = BlockStats::default();
    for block in rho.blocks() {
        let even = block[0] % 2 == 0;
        if block.iter().any(|x| (x % 2 == 0) != even) {
            return Err(Error::invalid(format!("block {block:?} mixes parities")));
        }
        let meets = block.iter().any(|x| touched.contains(x));
        if even {
            stats.k += 1;
            stats.kd += meets as usize;
            stats.even_block_sizes.push(block.len());
        } else {
            stats.l += 1;
            stats.ld += meets as usize;
            stats.odd_block_sizes.push(block.len());
        }
    }
    Ok(stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// Blocks of one parity, relabelled `2j - 1 -> j` (odd) or `2j -> j` (even).
pub fn restrict_parity(rho: &SetPartition, parity: Parity) -> Result<SetPartition> {
    let want_even = parity == Parity::Even;
    let mut blocks = Vec::new();
    for block in rho.blocks() {
        let even = block[0] % 2 == 0;
        if block.iter().any(|x| (x % 2 == 0) != even) {
            return Err(Error::invalid(format!("block {block:?} mixes parities")));
        }
        if even == want_even {
            blocks.push(block.iter().map(|x| x.div_ceil(2)).collect());
        }
    }
    Ok(SetPartition::canonical(rho.ground_size() / 2, blocks))
}
