//! Training data, point reflections and their closure under repeated reflection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, norm_l2, sub, Real};

/// Training matrix (rows are samples) and labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    x: Vec<Vec<T>>,
    y: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Vec<Vec<T>>, y: Vec<T>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("dataset has no samples".into()));
        }
        check_dim(x.len(), y.len())?;
        let d = x[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("samples have no features".into()));
        }
        for (n, row) in x.iter().enumerate() {
            check_dim(d, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {n}")));
            }
        }
        if let Some(n) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("label {n}")));
        }
        Ok(Self { x, y })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn x(&self) -> &[Vec<T>] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn row(&self, n: usize) -> &[T] {
        &self.x[n]
    }

    /// Largest pairwise Euclidean distance between samples.
    pub fn diameter(&self) -> T {
        diameter(&self.x)
    }
}

fn diameter<T: Real>(points: &[Vec<T>]) -> T {
    let mut best = T::zero();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(norm_l2(&sub(a, b)));
        }
    }
    best
}

/// Reflection of `a` about `b`: `2b - a`.
pub fn reflect<T: Real>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    check_dim(a.len(), b.len())?;
    let two = T::lit(2.0);
    Ok(a.iter().zip(b).map(|(&a, &b)| two * b - a).collect())
}

pub fn midpoint<T: Real>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    check_dim(a.len(), b.len())?;
    let half = T::lit(0.5);
    Ok(a.iter().zip(b).map(|(&a, &b)| (a + b) * half).collect())
}

/// A point together with the reflection order at which it first appears and
/// the parent points it was generated from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionNode<T> {
    pub point: Vec<T>,
    pub order: usize,
    /// Indices into the input point list, `x_0, ..., x_order`.
    pub parents: Vec<usize>,
}

/// Relative deduplication tolerance for reflected points.
pub const REFLECTION_DEDUP_TOL: f64 = 1e-9;

/// Every point reachable by reflections of order `0..=k` over `points`,
/// with repeated parents allowed.
///
/// Order `j` points are `R(r | p)` and `R(p | r)` for an order `j - 1` point
/// `r` and an input point `p`. Points closer than `1e-9 * max(1, diameter)`
/// are merged; the lowest order wins.
pub fn order_k_reflections<T: Real>(points: &[Vec<T>], k: usize) -> Result<Vec<ReflectionNode<T>>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points to reflect".into()));
    }
    let d = points[0].len();
    for p in points {
        check_dim(d, p.len())?;
    }
    let tol = T::lit(REFLECTION_DEDUP_TOL) * T::one().max(diameter(points));
    let mut nodes: Vec<ReflectionNode<T>> = Vec::new();
    let mut frontier = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let node = ReflectionNode {
            point: p.clone(),
            order: 0,
            parents: vec![i],
        };
        if insert_unique(&mut nodes, node, tol) {
            frontier.push(nodes.len() - 1);
        }
    }
    for order in 1..=k {
        let mut next = Vec::new();
        for &fi in &frontier {
            for (pi, p) in points.iter().enumerate() {
                let base = nodes[fi].clone();
                let mut parents = base.parents.clone();
                parents.push(pi);
                for point in [reflect(&base.point, p)?, reflect(p, &base.point)?] {
                    let node = ReflectionNode {
                        point,
                        order,
                        parents: parents.clone(),
                    };
                    if insert_unique(&mut nodes, node, tol) {
                        next.push(nodes.len() - 1);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(nodes)
}

fn insert_unique<T: Real>(nodes: &mut Vec<ReflectionNode<T>>, node: ReflectionNode<T>, tol: T) -> bool {
    let dup = nodes.iter().any(|n| {
        n.point
            .iter()
            .zip(&node.point)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
            <= tol
    });
    if !dup {
        nodes.push(node);
    }
    !dup
}

/// `Xw`.
pub fn project_1d<T: Real>(x: &[Vec<T>], w: &[T]) -> Result<Vec<T>> {
    x.iter()
        .map(|row| {
            check_dim(w.len(), row.len())?;
            Ok(dot(row, w))
        })
        .collect()
}

/// Reads a dataset from CSV: `d` feature columns followed by one label column.
pub fn load_dataset<T: Real>(path: &Path, header: bool) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parse_err = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        };
        if record.len() < 2 {
            return Err(parse_err(1, "need at least one feature and a label".into()));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    record.len(),
                    format!("expected {w} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        let mut values = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(c + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(c + 1, format!("non-finite value {field:?}")));
            }
            values.push(T::lit(v));
        }
        let label = values.pop().expect("at least two columns");
        x.push(values);
        y.push(label);
    }
    if x.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no data rows", path.display())));
    }
    Dataset::new(x, y)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes a dataset in the same CSV layout `load_dataset` reads.
pub fn write_dataset<T: Real>(ds: &Dataset<T>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (row, label) in ds.x().iter().zip(ds.y()) {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        fields.push(format!("{label}"));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
