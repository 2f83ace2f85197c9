//! Data model: predictors, responses, group structures, coefficients, penalty weights and
//! solver configuration, plus column standardization and cross-dataset feature alignment.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::invalid(format!("duplicate {what} name `{name}`")));
        }
    }
    Ok(())
}

fn check_finite_matrix<F: Scalar>(values: &Array2<F>, what: &str) -> Result<()> {
    if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!("{what}: non-finite entry {v} at row {i}, column {j}")));
    }
    Ok(())
}

fn check_finite_vector<F: Scalar>(values: &Array1<F>, what: &str) -> Result<()> {
    if let Some((i, v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!("{what}: non-finite entry {v} at index {i}")));
    }
    Ok(())
}

/// Dense n × p design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorMatrix<F> {
    values: Array2<F>,
    feature_names: Vec<String>,
    standardized: bool,
    constant_columns: Vec<usize>,
}

impl<F: Scalar> PredictorMatrix<F> {
    pub fn new(values: Array2<F>, feature_names: Vec<String>) -> Result<Self> {
        if feature_names.len() != values.ncols() {
            return Err(Error::dims(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                values.ncols()
            )));
        }
        check_unique(&feature_names, "feature")?;
        check_finite_matrix(&values, "predictor matrix")?;
        Ok(Self { values, feature_names, standardized: false, constant_columns: Vec::new() })
    }

    /// Columns named `x1, x2, ...`.
    pub fn unnamed(values: Array2<F>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(values, names)
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, F> {
        self.values.column(j)
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Columns found constant during standardization (centered only).
    pub fn constant_columns(&self) -> &[usize] {
        &self.constant_columns
    }

    pub fn standardize(&self) -> Result<(Self, Standardization<F>)> {
        let (values, st) = standardize_columns(&self.values)?;
        let constant_columns = st.constant_columns();
        Ok((
            Self {
                values,
                feature_names: self.feature_names.clone(),
                standardized: true,
                constant_columns,
            },
            st,
        ))
    }

    /// Restricts to the given rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            standardized: false,
            constant_columns: Vec::new(),
        }
    }

    /// Restricts to the given columns (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(1), cols),
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            standardized: self.standardized,
            constant_columns: Vec::new(),
        }
    }
}

/// Dense n × q multivariate response (imaging features) with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiResponse<F> {
    values: Array2<F>,
    response_names: Vec<String>,
}

impl<F: Scalar> MultiResponse<F> {
    pub fn new(values: Array2<F>, response_names: Vec<String>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::invalid("multivariate response needs at least one column"));
        }
        if response_names.len() != values.ncols() {
            return Err(Error::dims(format!(
                "{} response names for {} columns",
                response_names.len(),
                values.ncols()
            )));
        }
        check_unique(&response_names, "response")?;
        check_finite_matrix(&values, "response matrix")?;
        Ok(Self { values, response_names })
    }

    pub fn unnamed(values: Array2<F>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|k| format!("y{k}")).collect();
        Self::new(values, names)
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    pub fn response_names(&self) -> &[String] {
        &self.response_names
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    pub fn standardize(&self) -> Result<(Self, Standardization<F>)> {
        let (values, st) = standardize_columns(&self.values)?;
        Ok((Self { values, response_names: self.response_names.clone() }, st))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self { values: self.values.select(Axis(0), rows), response_names: self.response_names.clone() }
    }
}

/// Univariate continuous clinical outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousOutcome<F> {
    values: Array1<F>,
}

impl<F: Scalar> ContinuousOutcome<F> {
    pub fn new(values: Array1<F>) -> Result<Self> {
        check_finite_vector(&values, "continuous outcome")?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array1<F> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn standardize(&self) -> Result<(Self, Standardization<F>)> {
        let column = self.values.clone().insert_axis(Axis(1));
        let (values, st) = standardize_columns(&column)?;
        Ok((Self { values: values.column(0).to_owned() }, st))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self { values: self.values.select(Axis(0), rows) }
    }
}

/// Right-censored time-to-event outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalOutcome<F> {
    time: Array1<F>,
    event: Vec<bool>,
}

impl<F: Scalar> SurvivalOutcome<F> {
    pub fn new(time: Array1<F>, event: Vec<bool>) -> Result<Self> {
        if time.len() != event.len() {
            return Err(Error::dims(format!("{} times but {} event flags", time.len(), event.len())));
        }
        check_finite_vector(&time, "survival time")?;
        if let Some((i, t)) = time.indexed_iter().find(|(_, t)| **t <= F::zero()) {
            return Err(Error::invalid(format!("survival time must be positive, got {t} at index {i}")));
        }
        Ok(Self { time, event })
    }

    pub fn time(&self) -> &Array1<F> {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn n(&self) -> usize {
        self.time.len()
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    pub fn censoring_rate(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.n() as f64
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.time.select(Axis(0), rows), rows.iter().map(|&i| self.event[i]).collect())
    }
}

/// Model 2 response: continuous or survival.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<F> {
    Continuous(ContinuousOutcome<F>),
    Survival(SurvivalOutcome<F>),
}

impl<F: Scalar> Outcome<F> {
    pub fn n(&self) -> usize {
        match self {
            Outcome::Continuous(z) => z.n(),
            Outcome::Survival(s) => s.n(),
        }
    }

    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcome::Continuous(_) => OutcomeKind::Continuous,
            Outcome::Survival(_) => OutcomeKind::Survival,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Continuous,
    Survival,
}

/// Column means and scales produced by [`standardize_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization<F> {
    pub means: Array1<F>,
    /// Sample standard deviations (n − 1 denominator); 1 for constant columns.
    pub scales: Array1<F>,
    pub constant: Vec<bool>,
}

impl<F: Scalar> Standardization<F> {
    pub fn constant_columns(&self) -> Vec<usize> {
        self.constant.iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| j).collect()
    }

    /// Applies the stored transform to new data with the same columns.
    pub fn apply(&self, values: &Array2<F>) -> Result<Array2<F>> {
        if values.ncols() != self.means.len() {
            return Err(Error::dims(format!(
                "standardization fitted on {} columns, applied to {}",
                self.means.len(),
                values.ncols()
            )));
        }
        let mut out = values.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }
}

/// Centers every column and scales non-constant columns to unit sample standard deviation.
pub fn standardize_columns<F: Scalar>(values: &Array2<F>) -> Result<(Array2<F>, Standardization<F>)> {
    let (n, p) = values.dim();
    if n == 0 || p == 0 {
        return Err(Error::invalid("cannot standardize an empty matrix"));
    }
    if n < 2 {
        return Err(Error::invalid("standardization needs at least two rows"));
    }
    let nf = F::from_usize(n).unwrap();
    let mut out = values.clone();
    let mut means = Array1::zeros(p);
    let mut scales = Array1::ones(p);
    let mut constant = vec![false; p];
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / nf;
        col.mapv_inplace(|v| v - mean);
        let ss: F = col.iter().map(|&v| v * v).sum();
        let sd = (ss / (nf - F::one())).sqrt();
        means[j] = mean;
        let tiny = F::epsilon() * F::lit(64.0) * (F::one() + mean.abs());
        if sd <= tiny {
            constant[j] = true;
            col.fill(F::zero());
        } else {
            scales[j] = sd;
            col.mapv_inplace(|v| v / sd);
        }
    }
    Ok((out, Standardization { means, scales, constant }))
}

/// Result of matching two predictor matrices on their feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAlignment {
    /// Shared feature names in aligned order.
    pub names: Vec<String>,
    /// aligned index → original column in the first matrix.
    pub first_columns: Vec<usize>,
    /// aligned index → original column in the second matrix.
    pub second_columns: Vec<usize>,
    /// original column of the first matrix → aligned index, if kept.
    pub first_to_aligned: Vec<Option<usize>>,
    /// original column of the second matrix → aligned index, if kept.
    pub second_to_aligned: Vec<Option<usize>>,
}

impl FeatureAlignment {
    pub fn is_identity(&self) -> bool {
        self.first_to_aligned.len() == self.names.len()
            && self.second_to_aligned.len() == self.names.len()
            && self.first_columns.iter().enumerate().all(|(a, &j)| a == j)
            && self.second_columns.iter().enumerate().all(|(a, &j)| a == j)
    }

    /// Features of the first matrix that have no partner in the second.
    pub fn dropped_from_first<'a>(&self, names: &'a [String]) -> Vec<&'a str> {
        self.first_to_aligned
            .iter()
            .zip(names)
            .filter(|(m, _)| m.is_none())
            .map(|(_, n)| n.as_str())
            .collect()
    }
}

/// Restricts both matrices to their shared features.
///
/// Identical name lists keep their order (identity map); otherwise the shared names are
/// sorted, so the result does not depend on the argument order.
pub fn align_features<F: Scalar>(
    a: &PredictorMatrix<F>,
    b: &PredictorMatrix<F>,
) -> Result<(FeatureAlignment, PredictorMatrix<F>, PredictorMatrix<F>)> {
    let names: Vec<String> = if a.feature_names() == b.feature_names() {
        a.feature_names().to_vec()
    } else {
        let bset: BTreeSet<&str> = b.feature_names().iter().map(String::as_str).collect();
        a.feature_names()
            .iter()
            .filter(|n| bset.contains(n.as_str()))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    if names.is_empty() {
        return Err(Error::Alignment(format!(
            "no shared feature names between the first ({} features) and second ({} features) predictor matrix",
            a.p(),
            b.p()
        )));
    }
    fn index<F: Scalar>(m: &PredictorMatrix<F>) -> BTreeMap<&str, usize> {
        m.feature_names().iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect()
    }
    let (ia, ib) = (index(a), index(b));
    let first_columns: Vec<usize> = names.iter().map(|n| ia[n.as_str()]).collect();
    let second_columns: Vec<usize> = names.iter().map(|n| ib[n.as_str()]).collect();
    let mut first_to_aligned = vec![None; a.p()];
    let mut second_to_aligned = vec![None; b.p()];
    for (k, (&ja, &jb)) in first_columns.iter().zip(&second_columns).enumerate() {
        first_to_aligned[ja] = Some(k);
        second_to_aligned[jb] = Some(k);
    }
    let ra = a.select_columns(&first_columns);
    let rb = b.select_columns(&second_columns);
    Ok((
        FeatureAlignment { names, first_columns, second_columns, first_to_aligned, second_to_aligned },
        ra,
        rb,
    ))
}

/// A named set of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    /// Sorted, de-duplicated member indices.
    pub members: Vec<usize>,
}

/// Possibly overlapping named groups over `size` indices (features or responses).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    size: usize,
    groups: Vec<Group>,
}

impl GroupStructure {
    pub fn new(size: usize, groups: Vec<Group>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut cleaned = Vec::with_capacity(groups.len());
        for mut g in groups {
            if !names.insert(g.name.clone()) {
                return Err(Error::invalid(format!("duplicate group name `{}`", g.name)));
            }
            if g.members.is_empty() {
                return Err(Error::invalid(format!("group `{}` has no members", g.name)));
            }
            if let Some(&bad) = g.members.iter().find(|&&m| m >= size) {
                return Err(Error::invalid(format!(
                    "group `{}` member {bad} out of range for {size} indices",
                    g.name
                )));
            }
            g.members.sort_unstable();
            g.members.dedup();
            cleaned.push(g);
        }
        Ok(Self { size, groups: cleaned })
    }

    /// Builds from (name, members) pairs.
    pub fn from_members<S: Into<String>>(size: usize, groups: Vec<(S, Vec<usize>)>) -> Result<Self> {
        Self::new(size, groups.into_iter().map(|(n, m)| Group { name: n.into(), members: m }).collect())
    }

    /// Contiguous, non-overlapping groups of near-equal size covering `0..size`.
    pub fn contiguous(size: usize, count: usize, prefix: &str) -> Result<Self> {
        if count == 0 || count > size {
            return Err(Error::invalid(format!("cannot split {size} indices into {count} groups")));
        }
        let base = size / count;
        let extra = size % count;
        let mut start = 0;
        let width = count.to_string().len().max(2);
        let groups = (0..count)
            .map(|g| {
                let len = base + usize::from(g < extra);
                let members = (start..start + len).collect();
                start += len;
                Group { name: format!("{prefix}{:0width$}", g + 1), members }
            })
            .collect();
        Self::new(size, groups)
    }

    /// Builds from (group name, member name) membership rows, resolving names against
    /// `names`. Group order follows first appearance.
    pub fn from_memberships(rows: &[(String, String)], names: &[String]) -> Result<Self> {
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
        let mut order: Vec<String> = Vec::new();
        let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (g, f) in rows {
            let &j = index
                .get(f.as_str())
                .ok_or_else(|| Error::invalid(format!("group `{g}` references unknown name `{f}`")))?;
            members
                .entry(g.clone())
                .or_insert_with(|| {
                    order.push(g.clone());
                    Vec::new()
                })
                .push(j);
        }
        let groups = order
            .into_iter()
            .map(|name| {
                let m = members.remove(&name).unwrap_or_default();
                Group { name, members: m }
            })
            .collect();
        Self::new(names.len(), groups)
    }

    /// Membership rows (group name, member name) in group order.
    pub fn memberships(&self, names: &[String]) -> Vec<(String, String)> {
        self.groups
            .iter()
            .flat_map(|g| g.members.iter().map(move |&j| (g.name.clone(), names[j].clone())))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// True when some index belongs to more than one group.
    pub fn overlapping(&self) -> bool {
        let mut seen = vec![false; self.size];
        for g in &self.groups {
            for &m in &g.members {
                if seen[m] {
                    return true;
                }
                seen[m] = true;
            }
        }
        false
    }

    /// index → groups containing it.
    pub fn memberships_by_index(&self) -> Vec<Vec<usize>> {
        let mut by_index = vec![Vec::new(); self.size];
        for (g, grp) in self.groups.iter().enumerate() {
            for &m in &grp.members {
                by_index[m].push(g);
            }
        }
        by_index
    }

    /// Maps members through `map` (old index → new index), dropping unmapped members and
    /// groups left empty. Returns the names of dropped groups.
    pub fn remap(&self, new_size: usize, map: &[Option<usize>]) -> Result<(Self, Vec<String>)> {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for g in &self.groups {
            let members: Vec<usize> = g.members.iter().filter_map(|&m| map.get(m).copied().flatten()).collect();
            if members.is_empty() {
                dropped.push(g.name.clone());
            } else {
                kept.push(Group { name: g.name.clone(), members });
            }
        }
        Ok((Self::new(new_size, kept)?, dropped))
    }
}

/// One penalized block of cells of the p × q coefficient matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGroup {
    pub name: String,
    /// (feature j, response k) cells, sorted and de-duplicated.
    pub cells: Vec<(usize, usize)>,
    /// Predictor group whose cross-model weight scales this block, if any.
    pub x_group: Option<usize>,
}

/// Arbitrary (possibly overlapping) block structure on the coefficient matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGroupStructure {
    p: usize,
    q: usize,
    blocks: Vec<BlockGroup>,
}

impl BlockGroupStructure {
    pub fn new(p: usize, q: usize, blocks: Vec<BlockGroup>) -> Result<Self> {
        let mut cleaned = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.cells.is_empty() {
                return Err(Error::invalid(format!("block `{}` has no cells", b.name)));
            }
            if let Some(&(j, k)) = b.cells.iter().find(|&&(j, k)| j >= p || k >= q) {
                return Err(Error::invalid(format!(
                    "block `{}` cell ({j}, {k}) out of range for {p} x {q}",
                    b.name
                )));
            }
            b.cells.sort_unstable();
            b.cells.dedup();
            cleaned.push(b);
        }
        Ok(Self { p, q, blocks: cleaned })
    }

    /// No blocks at all: only the per-cell lasso penalty applies.
    pub fn empty(p: usize, q: usize) -> Self {
        Self { p, q, blocks: Vec::new() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn blocks(&self) -> &[BlockGroup] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// One block per (predictor group, response group) pair.
pub fn cross_block_groups(xgroups: &GroupStructure, ygroups: &GroupStructure) -> Result<BlockGroupStructure> {
    let mut blocks = Vec::with_capacity(xgroups.len() * ygroups.len());
    for (a, xg) in xgroups.groups().iter().enumerate() {
        for yg in ygroups.groups() {
            let cells = xg
                .members
                .iter()
                .flat_map(|&j| yg.members.iter().map(move |&k| (j, k)))
                .collect();
            blocks.push(BlockGroup { name: format!("{}:{}", xg.name, yg.name), cells, x_group: Some(a) });
        }
    }
    BlockGroupStructure::new(xgroups.size(), ygroups.size(), blocks)
}

/// Model 1 coefficients, p × q.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix<F> {
    pub values: Array2<F>,
}

impl<F: Scalar> CoefficientMatrix<F> {
    pub fn zeros(p: usize, q: usize) -> Self {
        Self { values: Array2::zeros((p, q)) }
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != F::zero()).count()
    }

    /// Indices of rows with at least one nonzero entry.
    pub fn support_rows(&self) -> Vec<usize> {
        self.values
            .axis_iter(Axis(0))
            .enumerate()
            .filter(|(_, r)| r.iter().any(|v| *v != F::zero()))
            .map(|(j, _)| j)
            .collect()
    }
}

/// Model 2 coefficients, length p.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<F> {
    pub values: Array1<F>,
}

impl<F: Scalar> CoefficientVector<F> {
    pub fn zeros(p: usize) -> Self {
        Self { values: Array1::zeros(p) }
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != F::zero()).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v != F::zero()).map(|(j, _)| j).collect()
    }
}

/// Cross-model multiplicative penalty weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights<F> {
    /// One weight per predictor, mean one.
    pub feature_weights: Array1<F>,
    /// One weight per predictor group, mean one.
    pub group_weights: Array1<F>,
}

impl<F: Scalar> PenaltyWeights<F> {
    /// All-ones weights: the state before any cross-model information is available.
    pub fn uniform(p: usize, groups: usize) -> Self {
        Self { feature_weights: Array1::ones(p), group_weights: Array1::ones(groups) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: &F| !(v.is_finite() && *v > F::zero());
        if self.feature_weights.iter().any(bad) || self.group_weights.iter().any(bad) {
            return Err(Error::invalid("penalty weights must be finite and strictly positive"));
        }
        Ok(())
    }
}

/// Group penalty level: one value for every group, or one per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaGroup<F> {
    Uniform(F),
    PerGroup(Vec<F>),
}

impl<F: Scalar> LambdaGroup<F> {
    pub fn get(&self, g: usize) -> F {
        match self {
            LambdaGroup::Uniform(v) => *v,
            LambdaGroup::PerGroup(v) => v[g],
        }
    }

    pub fn check(&self, groups: usize) -> Result<()> {
        match self {
            LambdaGroup::Uniform(v) if *v < F::zero() || !v.is_finite() => {
                Err(Error::invalid(format!("group penalty must be finite and nonnegative, got {v}")))
            }
            LambdaGroup::PerGroup(v) if v.len() != groups => Err(Error::invalid(format!(
                "{} per-group penalties for {groups} groups",
                v.len()
            ))),
            LambdaGroup::PerGroup(v) if v.iter().any(|x| *x < F::zero() || !x.is_finite()) => {
                Err(Error::invalid("group penalties must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }
}

/// Penalty levels and iteration controls for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<F> {
    pub lambda_feature: F,
    pub lambda_group: LambdaGroup<F>,
    /// Exponent applied to the cross-model weights; 0 gives separate models.
    pub alpha: F,
    pub inner_tol: F,
    pub outer_tol: F,
    pub joint_tol: F,
    pub max_inner_iter: usize,
    pub max_outer_iter: usize,
    pub max_joint_iter: usize,
    pub step_init: F,
    pub step_shrink: F,
}

impl<F: Scalar> Default for SolverConfig<F> {
    fn default() -> Self {
        Self {
            lambda_feature: F::zero(),
            lambda_group: LambdaGroup::Uniform(F::zero()),
            alpha: F::one(),
            inner_tol: F::lit(1e-6),
            outer_tol: F::lit(1e-4),
            joint_tol: F::lit(1e-3),
            max_inner_iter: 50,
            max_outer_iter: 1000,
            max_joint_iter: 20,
            step_init: F::one(),
            step_shrink: F::lit(0.8),
        }
    }
}

impl<F: Scalar> SolverConfig<F> {
    pub fn with_lambdas(lambda_feature: F, lambda_group: F) -> Self {
        Self { lambda_feature, lambda_group: LambdaGroup::Uniform(lambda_group), ..Self::default() }
    }

    pub fn validate(&self, groups: usize) -> Result<()> {
        if !(self.lambda_feature >= F::zero() && self.lambda_feature.is_finite()) {
            return Err(Error::invalid(format!("lambda_feature must be finite and nonnegative, got {}", self.lambda_feature)));
        }
        self.lambda_group.check(groups)?;
        if !(self.alpha >= F::zero() && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and nonnegative, got {}", self.alpha)));
        }
        for (name, v) in [("inner_tol", self.inner_tol), ("outer_tol", self.outer_tol), ("joint_tol", self.joint_tol)] {
            if !(v > F::zero()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_inner_iter == 0 || self.max_outer_iter == 0 || self.max_joint_iter == 0 {
            return Err(Error::invalid("iteration limits must be positive"));
        }
        if !(self.step_init > F::zero() && self.step_init.is_finite()) {
            return Err(Error::invalid(format!("step_init must be positive, got {}", self.step_init)));
        }
        if !(self.step_shrink > F::zero() && self.step_shrink < F::one()) {
            return Err(Error::invalid(format!("step_shrink must lie in (0, 1), got {}", self.step_shrink)));
        }
        Ok(())
    }

    pub fn penalties(&self) -> PenaltySettings<F> {
        PenaltySettings {
            lambda_feature: self.lambda_feature,
            lambda_group: self.lambda_group.clone(),
            alpha: self.alpha,
        }
    }
}

/// The penalty part of a [`SolverConfig`], echoed in fit results.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySettings<F> {
    pub lambda_feature: F,
    pub lambda_group: LambdaGroup<F>,
    pub alpha: F,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IterationCounts {
    /// Largest number of inner iterations spent on any single coordinate visit.
    pub inner: usize,
    pub outer: usize,
    pub joint: usize,
}

/// Output of a single-model fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<C, F> {
    pub coefficients: C,
    pub converged: bool,
    pub iterations: IterationCounts,
    pub final_objective: F,
    /// Penalized objective after each outer pass.
    pub objective_trace: Vec<F>,
    pub lambdas_used: PenaltySettings<F>,
    pub weights_used: PenaltyWeights<F>,
    pub warnings: Vec<String>,
}
