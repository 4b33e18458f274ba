//! Lasso dictionaries for deep narrow absolute-value networks.
//!
//! Every column is a feature function sampled at the training rows and keeps
//! the [`FeatureSpec`] that produced it, so a Lasso solution can be turned back
//! into network weights and every column can be re-evaluated anywhere.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{midpoint, reflect, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::geoalg::{generalized_cross, is_degenerate};
use crate::scalar::{dot, norm_inf, norm_l1, scale, sub, Real};

/// Columns are duplicates when their max-abs difference is at most
/// `DEDUP_TOL * (1 + max-abs value)`.
pub const DEDUP_TOL: f64 = 1e-9;

/// Columns whose max-abs value is below this (relative to the data scale) are dropped.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

const CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Abs,
    Relu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuilderKind {
    #[serde(rename = "1d")]
    OneDim,
    #[serde(rename = "relu-nobias")]
    ReluNoBias,
    #[serde(rename = "absval3")]
    AbsVal3,
    #[serde(rename = "sublib")]
    SubLibrary,
}

impl BuilderKind {
    pub fn name(self) -> &'static str {
        match self {
            BuilderKind::OneDim => "1d",
            BuilderKind::ReluNoBias => "relu-nobias",
            BuilderKind::AbsVal3 => "absval3",
            BuilderKind::SubLibrary => "sublib",
        }
    }
}

impl std::str::FromStr for BuilderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" => Ok(BuilderKind::OneDim),
            "relu-nobias" => Ok(BuilderKind::ReluNoBias),
            "absval3" => Ok(BuilderKind::AbsVal3),
            "sublib" => Ok(BuilderKind::SubLibrary),
            other => Err(Error::InvalidInput(format!("unknown builder {other:?}"))),
        }
    }
}

/// Which point the first bias is anchored at in the 3-layer dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorKind {
    /// Midpoint of the two leading samples.
    Midpoint,
    /// The leading sample itself.
    Sample,
}

/// Offset point subtracted from a spanning sample in the 3-layer dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetChoice {
    /// The bias anchor point.
    Anchor,
    /// The pivot sample reflected about the anchor.
    Reflection,
    /// The spanning sample shifted by `-e_l`; the difference is exactly `e_l`.
    Shift(usize),
}

/// Where a feature came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Provenance<T> {
    pub builder: BuilderKind,
    /// Sample indices of the multi-index. For the 3-layer builder these are
    /// `(j_-1, j_0, j_2, ..., j_2(d-1))`; for the sub-library the bias anchors;
    /// for the ReLU builder indices into `x_1..x_N, e_1..e_d`.
    pub samples: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub offsets: Vec<OffsetChoice>,
    /// First-bias anchor point `x'`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_point: Option<Vec<T>>,
    /// Leading sample `x_{j_-1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead_point: Option<Vec<T>>,
    /// Pivot sample `x_{j_0}` fixing the second bias.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_point: Option<Vec<T>>,
    /// Spanning differences the weight is orthogonal to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spanning: Vec<Vec<T>>,
    /// Un-normalised generalized cross product of the spanning differences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
}

impl<T> Provenance<T> {
    fn new(builder: BuilderKind, samples: Vec<usize>) -> Self {
        Self {
            builder,
            samples,
            anchor: None,
            offsets: Vec::new(),
            anchor_point: None,
            lead_point: None,
            pivot_point: None,
            spanning: Vec::new(),
            normal: None,
            sign: None,
        }
    }
}

/// Evaluable feature `| ... || x.w + b1 | s2 + b2 | ... s_{L-1} + b_{L-1} |`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec<T> {
    pub depth: usize,
    pub activation: Activation,
    /// First-layer weight, `||w||_1 = 1`.
    pub w: Vec<T>,
    pub bias_chain: Vec<T>,
    pub inner_signs: Vec<T>,
    pub provenance: Provenance<T>,
}

impl<T: Real> FeatureSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::InvalidInput(format!("feature depth {} < 2", self.depth)));
        }
        check_dim(self.depth - 1, self.bias_chain.len())?;
        check_dim(self.depth - 2, self.inner_signs.len())?;
        if self.activation == Activation::Relu && self.depth != 2 {
            return Err(Error::InvalidInput("ReLU features are 2-layer only".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Value of the feature at `x`.
pub fn evaluate<T: Real>(spec: &FeatureSpec<T>, x: &[T]) -> Result<T> {
    check_dim(spec.w.len(), x.len())?;
    spec.validate()?;
    Ok(eval_unchecked(spec, x))
}

fn eval_unchecked<T: Real>(spec: &FeatureSpec<T>, x: &[T]) -> T {
    let pre = dot(x, &spec.w) + spec.bias_chain[0];
    match spec.activation {
        Activation::Relu => pre.max(T::zero()),
        Activation::Abs => nested_abs(pre.abs(), &spec.bias_chain[1..], &spec.inner_signs),
    }
}

fn nested_abs<T: Real>(mut a: T, biases: &[T], signs: &[T]) -> T {
    for (&b, &s) in biases.iter().zip(signs) {
        a = (a * s + b).abs();
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictColumn<T> {
    pub values: Vec<T>,
    pub spec: FeatureSpec<T>,
}

/// Dictionary matrix with per-column provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dictionary<T> {
    pub n: usize,
    pub d: usize,
    pub depth: usize,
    /// Multi-indices enumerated before degeneracy skips, zero-column drops and dedup.
    #[serde(default)]
    pub raw_candidates: u64,
    pub columns: Vec<DictColumn<T>>,
}

impl<T: Real> Dictionary<T> {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Column-major copy of the matrix.
    pub fn matrix(&self) -> Vec<Vec<T>> {
        self.columns.iter().map(|c| c.values.clone()).collect()
    }

    /// Assembles a dictionary, dropping zero columns and duplicates (first wins).
    pub fn from_columns(n: usize, d: usize, depth: usize, columns: Vec<DictColumn<T>>) -> Result<Self> {
        let mut dedup = Deduper::new(n);
        let mut kept = Vec::new();
        for col in columns {
            check_dim(n, col.values.len())?;
            if !is_zero_column(&col.values, T::one()) && dedup.insert(&col.values) {
                kept.push(col);
            }
        }
        Ok(Self {
            n,
            d,
            depth,
            raw_candidates: 0,
            columns: kept,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dict: Self = serde_json::from_str(s)?;
        for c in &dict.columns {
            check_dim(dict.n, c.values.len())?;
            check_dim(dict.d, c.spec.w.len())?;
            c.spec.validate()?;
        }
        Ok(dict)
    }
}

fn is_zero_column<T: Real>(values: &[T], data_scale: T) -> bool {
    norm_inf(values) <= T::lit(ZERO_COLUMN_TOL) * data_scale
}

/// Tolerance-aware duplicate detector. Candidates are bucketed by a weighted
/// sum of entries, so only columns with a nearby key are compared in full.
struct Deduper<T> {
    weights: Vec<f64>,
    weight_sum: f64,
    index: BTreeMap<u64, Vec<usize>>,
    stored: Vec<Vec<T>>,
}

fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

impl<T: Real> Deduper<T> {
    fn new(len: usize) -> Self {
        let weights: Vec<f64> = (0..len).map(|i| 1.0 + 0.618_033_988_75 * i as f64).collect();
        let weight_sum = weights.iter().sum();
        Self {
            weights,
            weight_sum,
            index: BTreeMap::new(),
            stored: Vec::new(),
        }
    }

    fn key(&self, v: &[T]) -> f64 {
        v.iter().zip(&self.weights).map(|(x, w)| x.to_f64_lossy() * w).sum()
    }

    /// Inserts `v` unless a duplicate is already stored; returns whether it was new.
    fn insert(&mut self, v: &[T]) -> bool {
        let key = self.key(v);
        let amax = norm_inf(v).to_f64_lossy();
        let delta = 2.0 * self.weight_sum * DEDUP_TOL * (1.0 + amax) + 1e-300;
        let lo = ordered_bits(key - delta);
        let hi = ordered_bits(key + delta);
        for (_, ids) in self.index.range(lo..=hi) {
            for &id in ids {
                if is_duplicate(&self.stored[id], v) {
                    return false;
                }
            }
        }
        self.index.entry(ordered_bits(key)).or_default().push(self.stored.len());
        self.stored.push(v.to_vec());
        true
    }
}

fn is_duplicate<T: Real>(a: &[T], b: &[T]) -> bool {
    let scale = T::one() + norm_inf(a).max(norm_inf(b));
    a.iter()
        .zip(b)
        .all(|(&x, &y)| (x - y).abs() <= T::lit(DEDUP_TOL) * scale)
}

/// Seeded fraction of the multi-index space to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Subsample {
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BuildOptions {
    pub subsample: Option<Subsample>,
}

impl BuildOptions {
    fn mask(&self) -> Result<Option<(f64, ChaCha8Rng)>> {
        match self.subsample {
            None => Ok(None),
            Some(s) if !(s.fraction > 0.0 && s.fraction <= 1.0) => Err(Error::InvalidInput(format!(
                "subsample fraction {} outside (0, 1]",
                s.fraction
            ))),
            Some(s) => Ok(Some((s.fraction, ChaCha8Rng::seed_from_u64(s.seed)))),
        }
    }
}

fn data_scale<T: Real>(ds: &Dataset<T>) -> T {
    T::one() + ds.x().iter().fold(T::zero(), |m, r| m.max(norm_inf(r)))
}

/// Shared driver: walks `0..total` in order, generating candidates in parallel
/// chunks and inserting them sequentially so the result is deterministic.
fn assemble<T, F>(ds: &Dataset<T>, depth: usize, total: u64, opts: &BuildOptions, make: F) -> Result<Dictionary<T>>
where
    T: Real,
    F: Fn(u64) -> Option<DictColumn<T>> + Sync,
{
    let mut mask = opts.mask()?;
    let zero_scale = data_scale(ds);
    let mut dedup = Deduper::new(ds.n());
    let mut columns = Vec::new();
    let mut start = 0u64;
    while start < total {
        let end = (start + CHUNK as u64).min(total);
        let ids: Vec<u64> = match mask.as_mut() {
            None => (start..end).collect(),
            Some((p, rng)) => (start..end).filter(|_| rng.random::<f64>() < *p).collect(),
        };
        let candidates: Vec<Option<DictColumn<T>>> = ids.par_iter().map(|&i| make(i)).collect();
        for col in candidates.into_iter().flatten() {
            if !is_zero_column(&col.values, zero_scale) && dedup.insert(&col.values) {
                columns.push(col);
            }
        }
        start = end;
    }
    Ok(Dictionary {
        n: ds.n(),
        d: ds.dim(),
        depth,
        raw_candidates: total,
        columns,
    })
}

fn sample_column<T: Real>(ds: &Dataset<T>, spec: FeatureSpec<T>) -> DictColumn<T> {
    let values = ds.x().iter().map(|x| eval_unchecked(&spec, x)).collect();
    DictColumn { values, spec }
}

/// Two-layer dictionary for scalar inputs: column `j` is `|x_i - x_j|`.
pub fn build_2layer_1d<T: Real>(ds: &Dataset<T>) -> Result<Dictionary<T>> {
    if ds.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "1-D builder needs d = 1, data has d = {}",
            ds.dim()
        )));
    }
    assemble(ds, 2, ds.n() as u64, &BuildOptions::default(), |j| {
        let j = j as usize;
        let spec = FeatureSpec {
            depth: 2,
            activation: Activation::Abs,
            w: vec![T::one()],
            bias_chain: vec![-ds.row(j)[0]],
            inner_signs: vec![],
            provenance: Provenance::new(BuilderKind::OneDim, vec![j]),
        };
        Some(sample_column(ds, spec))
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn basis<T: Real>(d: usize, l: usize) -> Vec<T> {
    let mut e = vec![T::zero(); d];
    e[l] = T::one();
    e
}

/// Two-layer zero-bias ReLU dictionary: `(±x_i . cross(j) / ||cross(j)||_1)_+`
/// over all `(d-1)`-combinations `j` of `{x_1..x_N, e_1..e_d}`.
pub fn build_2layer_relu_nobias<T: Real>(ds: &Dataset<T>) -> Result<Dictionary<T>> {
    let (n, d) = (ds.n(), ds.dim());
    let augmented: Vec<Vec<T>> = ds
        .x()
        .iter()
        .cloned()
        .chain((0..d).map(|l| basis(d, l)))
        .collect();
    let combos = combinations(n + d, d - 1);
    assemble(ds, 2, 2 * combos.len() as u64, &BuildOptions::default(), |i| {
        let combo = &combos[(i / 2) as usize];
        let sign = if i % 2 == 0 { T::one() } else { -T::one() };
        let vs: Vec<&[T]> = combo.iter().map(|&c| augmented[c].as_slice()).collect();
        let cross = generalized_cross(&vs).ok()?;
        if is_degenerate(&cross, &vs) {
            return None;
        }
        let w = scale(&cross, sign / norm_l1(&cross));
        let mut prov = Provenance::new(BuilderKind::ReluNoBias, combo.clone());
        prov.spanning = vs.iter().map(|v| v.to_vec()).collect();
        prov.normal = Some(cross);
        prov.sign = Some(if i % 2 == 0 { 1 } else { -1 });
        let spec = FeatureSpec {
            depth: 2,
            activation: Activation::Relu,
            w,
            bias_chain: vec![T::zero()],
            inner_signs: vec![],
            provenance: prov,
        };
        Some(sample_column(ds, spec))
    })
}

/// Upper bound `2 N^(d+1) (2+d)^(d-1)` on the 3-layer multi-index count.
pub fn count_bound(n: usize, d: usize) -> Result<u128> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("count bound needs N, d >= 1".into()));
    }
    let overflow = || Error::Overflow(format!("count bound for N = {n}, d = {d}"));
    let n = n as u128;
    let d32 = u32::try_from(d).map_err(|_| overflow())?;
    let a = n.checked_pow(d32 + 1).ok_or_else(overflow)?;
    let b = (2 + d as u128).checked_pow(d32 - 1).ok_or_else(overflow)?;
    a.checked_mul(b)
        .and_then(|x| x.checked_mul(2))
        .ok_or_else(overflow)
}

/// One fully decoded 3-layer multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeLayerIndex {
    pub lead: usize,
    pub pivot: usize,
    pub anchor: AnchorKind,
    /// `(j_2k, choice)` for `k = 1..d-1`.
    pub spans: Vec<(usize, OffsetChoice)>,
}

/// Number of 3-layer multi-indices enumerated for `N` samples in `d` dimensions.
pub fn three_layer_index_count(n: usize, d: usize) -> Result<u64> {
    let c = count_bound(n, d)?;
    u64::try_from(c).map_err(|_| Error::Overflow(format!("3-layer enumeration for N = {n}, d = {d}")))
}

/// Decodes position `i` of the lexicographic enumeration over
/// `(j_-1, j_0, anchor, j_2, offset_3, ..., j_2(d-1), offset_2d-1)`.
pub fn decode_three_layer_index(mut i: u64, n: usize, d: usize) -> ThreeLayerIndex {
    let radix_offset = 2 + d as u64;
    let mut spans = vec![(0usize, OffsetChoice::Anchor); d - 1];
    for slot in spans.iter_mut().rev() {
        let c = i % radix_offset;
        i /= radix_offset;
        let j = (i % n as u64) as usize;
        i /= n as u64;
        let choice = match c {
            0 => OffsetChoice::Anchor,
            1 => OffsetChoice::Reflection,
            l => OffsetChoice::Shift(l as usize - 2),
        };
        *slot = (j, choice);
    }
    let anchor = if i.is_multiple_of(2) { AnchorKind::Midpoint } else { AnchorKind::Sample };
    i /= 2;
    let pivot = (i % n as u64) as usize;
    i /= n as u64;
    let lead = i as usize;
    ThreeLayerIndex {
        lead,
        pivot,
        anchor,
        spans,
    }
}

/// Builds the 3-layer feature for one multi-index, or `None` when the
/// spanning differences are linearly dependent.
pub fn three_layer_feature<T: Real>(ds: &Dataset<T>, idx: &ThreeLayerIndex) -> Option<FeatureSpec<T>> {
    let d = ds.dim();
    let lead = ds.row(idx.lead);
    let pivot = ds.row(idx.pivot);
    let anchor_point = match idx.anchor {
        AnchorKind::Midpoint => midpoint(lead, pivot).ok()?,
        AnchorKind::Sample => lead.to_vec(),
    };
    let reflected = reflect(pivot, &anchor_point).ok()?;
    let spanning: Vec<Vec<T>> = idx
        .spans
        .iter()
        .map(|&(j, choice)| match choice {
            OffsetChoice::Anchor => sub(ds.row(j), &anchor_point),
            OffsetChoice::Reflection => sub(ds.row(j), &reflected),
            OffsetChoice::Shift(l) => basis(d, l),
        })
        .collect();
    let cross = generalized_cross(&spanning).ok()?;
    if is_degenerate(&cross, &spanning) {
        return None;
    }
    let w = scale(&cross, T::one() / norm_l1(&cross));
    let b1 = -dot(&anchor_point, &w);
    let b2 = -dot(&sub(pivot, &anchor_point), &w).abs();
    let mut samples = vec![idx.lead, idx.pivot];
    samples.extend(idx.spans.iter().map(|s| s.0));
    let mut prov = Provenance::new(BuilderKind::AbsVal3, samples);
    prov.anchor = Some(idx.anchor);
    prov.offsets = idx.spans.iter().map(|s| s.1).collect();
    prov.anchor_point = Some(anchor_point);
    prov.lead_point = Some(lead.to_vec());
    prov.pivot_point = Some(pivot.to_vec());
    prov.spanning = spanning;
    prov.normal = Some(cross);
    Some(FeatureSpec {
        depth: 3,
        activation: Activation::Abs,
        w,
        bias_chain: vec![b1, b2],
        inner_signs: vec![T::one()],
        provenance: prov,
    })
}

/// Explicit 3-layer dictionary.
///
/// Features are `||(x - x').w| - |(x_{j0} - x').w||` with `x'` either the
/// leading sample or its midpoint with the pivot, and `w` the l1-normalised
/// generalized cross product of the spanning differences. The weight sign is
/// not enumerated: both signs give the same column.
pub fn build_3layer_absval<T: Real>(ds: &Dataset<T>, opts: &BuildOptions) -> Result<Dictionary<T>> {
    let (n, d) = (ds.n(), ds.dim());
    if n < 2 {
        return Err(Error::InvalidInput("3-layer dictionary needs N >= 2".into()));
    }
    let total = three_layer_index_count(n, d)?;
    assemble(ds, 3, total, opts, |i| {
        let idx = decode_three_layer_index(i, n, d);
        three_layer_feature(ds, &idx).map(|spec| sample_column(ds, spec))
    })
}

/// Candidate first-layer weight together with the differences it is orthogonal to.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateWeight<T> {
    pub w: Vec<T>,
    pub spanning: Vec<Vec<T>>,
}

/// `±` the distinct l1-normalised weights of the 3-layer enumeration, then `±e_l`.
pub fn candidate_weights<T: Real>(ds: &Dataset<T>) -> Result<Vec<CandidateWeight<T>>> {
    let (n, d) = (ds.n(), ds.dim());
    let total = three_layer_index_count(n, d)?;
    let mut dedup = Deduper::new(d);
    let mut out = Vec::new();
    let mut push = |w: Vec<T>, spanning: Vec<Vec<T>>, out: &mut Vec<CandidateWeight<T>>| {
        let neg = scale(&w, -T::one());
        for w in [w, neg] {
            if dedup.insert(&w) {
                out.push(CandidateWeight {
                    w,
                    spanning: spanning.clone(),
                });
            }
        }
    };
    let mut start = 0u64;
    while start < total {
        let end = (start + CHUNK as u64).min(total);
        let specs: Vec<Option<FeatureSpec<T>>> = (start..end)
            .into_par_iter()
            .map(|i| three_layer_feature(ds, &decode_three_layer_index(i, n, d)))
            .collect();
        for spec in specs.into_iter().flatten() {
            push(spec.w, spec.provenance.spanning, &mut out);
        }
        start = end;
    }
    for l in 0..d {
        push(basis(d, l), Vec::new(), &mut out);
    }
    Ok(out)
}

/// Data feature biases: `b1 = -x_{n1}.w` and each later `b_l` cancels the
/// nested value at `x_{n_l}`.
pub fn data_feature_biases<T: Real>(ds: &Dataset<T>, w: &[T], anchors: &[usize]) -> Vec<T> {
    let mut biases: Vec<T> = Vec::with_capacity(anchors.len());
    for (l, &a) in anchors.iter().enumerate() {
        let x = ds.row(a);
        let b = if l == 0 {
            -dot(x, w)
        } else {
            let ones = vec![T::one(); l - 1];
            -nested_abs((dot(x, w) + biases[0]).abs(), &biases[1..], &ones)
        };
        biases.push(b);
    }
    biases
}

/// Data-feature sub-library for depth `L`: every candidate weight combined
/// with every bias-anchor tuple in `[N]^(L-1)`.
pub fn build_deep_sublibrary<T: Real>(ds: &Dataset<T>, depth: usize, opts: &BuildOptions) -> Result<Dictionary<T>> {
    if depth < 2 {
        return Err(Error::InvalidInput(format!("depth {depth} < 2")));
    }
    let n = ds.n();
    let candidates = candidate_weights(ds)?;
    let per_w = (n as u64)
        .checked_pow(depth as u32 - 1)
        .ok_or_else(|| Error::Overflow("sub-library anchor tuples".into()))?;
    let total = per_w
        .checked_mul(candidates.len() as u64)
        .ok_or_else(|| Error::Overflow("sub-library size".into()))?;
    assemble(ds, depth, total, opts, |i| {
        let cand = &candidates[(i / per_w) as usize];
        let mut rest = i % per_w;
        let mut anchors = vec![0usize; depth - 1];
        for a in anchors.iter_mut().rev() {
            *a = (rest % n as u64) as usize;
            rest /= n as u64;
        }
        let bias_chain = data_feature_biases(ds, &cand.w, &anchors);
        let mut prov = Provenance::new(BuilderKind::SubLibrary, anchors);
        prov.spanning = cand.spanning.clone();
        let spec = FeatureSpec {
            depth,
            activation: Activation::Abs,
            w: cand.w.clone(),
            bias_chain,
            inner_signs: vec![T::one(); depth - 2],
            provenance: prov,
        };
        Some(sample_column(ds, spec))
    })
}

/// Builds the dictionary of the requested kind.
pub fn build_dictionary<T: Real>(
    ds: &Dataset<T>,
    kind: BuilderKind,
    depth: usize,
    opts: &BuildOptions,
) -> Result<Dictionary<T>> {
    let need = |expected: usize| {
        if depth == expected {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "builder {} is for depth {expected}, requested {depth}",
                kind.name()
            )))
        }
    };
    match kind {
        BuilderKind::OneDim => {
            need(2)?;
            build_2layer_1d(ds)
        }
        BuilderKind::ReluNoBias => {
            need(2)?;
            build_2layer_relu_nobias(ds)
        }
        BuilderKind::AbsVal3 => {
            need(3)?;
            build_3layer_absval(ds, opts)
        }
        BuilderKind::SubLibrary => build_deep_sublibrary(ds, depth, opts),
    }
}

/// The dictionary used for exact equivalence at depth 2 or 3: the 1-D builder
/// for scalar 2-layer data, the sub-library for higher-dimensional 2-layer
/// data and the explicit 3-layer dictionary otherwise.
pub fn full_dictionary<T: Real>(ds: &Dataset<T>, depth: usize) -> Result<Dictionary<T>> {
    match (depth, ds.dim()) {
        (2, 1) => build_2layer_1d(ds),
        (2, _) => build_deep_sublibrary(ds, 2, &BuildOptions::default()),
        (3, _) => build_3layer_absval(ds, &BuildOptions::default()),
        _ => Err(Error::InvalidInput(format!(
            "full dictionaries exist for depth 2 and 3, not {depth}"
        ))),
    }
}
