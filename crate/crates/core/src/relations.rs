//! Finite confidence preorders and their ordinal influence representations.
//!
//! A [`ConfidenceRelation`] is a boolean table over a [`ChoiceSet`]. When it
//! is a complete preorder it can be represented by an [`InfluenceAssignment`]
//! whose values order the elements exactly as the relation does. Only the
//! signs of value differences carry meaning, so any [`MonotoneTransform`] of
//! a representation is again a representation.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("choice set is empty")]
    EmptyChoiceSet,
    #[error("duplicate label `{0}` in choice set")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("relation table is {rows}x{cols}, expected {expected}x{expected}")]
    TableShape { rows: usize, cols: usize, expected: usize },
    #[error("relation is not a complete preorder")]
    NotAPreorder(Box<AxiomReport>),
    #[error("choice sets differ")]
    ChoiceSetMismatch,
    #[error("assignment has {got} values for {expected} elements")]
    AssignmentLength { got: usize, expected: usize },
    #[error("assignment value for `{0}` is not finite")]
    NonFiniteValue(String),
    #[error("monotone transform needs at least 2 breakpoints, got {0}")]
    TooFewBreakpoints(usize),
    #[error("breakpoints must be finite and strictly increasing in both coordinates (at index {0})")]
    NotStrictlyIncreasing(usize),
}

/// Ordered list of distinct element labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChoiceSet {
    elements: Vec<String>,
}

impl ChoiceSet {
    pub fn new<I, S>(elements: I) -> Result<Self, RelationError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(RelationError::EmptyChoiceSet);
        }
        let mut seen = BTreeSet::new();
        for label in &elements {
            if !seen.insert(label.as_str()) {
                return Err(RelationError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn label(&self, index: usize) -> &str {
        &self.elements[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == label)
    }
}

/// `holds[i][j]` means element `i` is held at least as confidently as `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfidenceRelation {
    choice_set: ChoiceSet,
    holds: Vec<Vec<bool>>,
}

impl ConfidenceRelation {
    pub fn new(choice_set: ChoiceSet, holds: Vec<Vec<bool>>) -> Result<Self, RelationError> {
        let n = choice_set.len();
        if holds.len() != n {
            return Err(RelationError::TableShape {
                rows: holds.len(),
                cols: holds.first().map_or(0, Vec::len),
                expected: n,
            });
        }
        if let Some(row) = holds.iter().find(|row| row.len() != n) {
            return Err(RelationError::TableShape { rows: holds.len(), cols: row.len(), expected: n });
        }
        Ok(Self { choice_set, holds })
    }

    /// Builds a relation from explicit `(x, y)` pairs meaning `x ≥ y`.
    /// Pairs that are not listed are false, including the diagonal.
    pub fn from_pairs<'a, I>(choice_set: ChoiceSet, pairs: I) -> Result<Self, RelationError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let n = choice_set.len();
        let mut holds = vec![vec![false; n]; n];
        for (x, y) in pairs {
            let i = choice_set.index_of(x).ok_or_else(|| RelationError::UnknownLabel(x.to_string()))?;
            let j = choice_set.index_of(y).ok_or_else(|| RelationError::UnknownLabel(y.to_string()))?;
            holds[i][j] = true;
        }
        Ok(Self { choice_set, holds })
    }

    pub fn choice_set(&self) -> &ChoiceSet {
        &self.choice_set
    }

    pub fn holds(&self, i: usize, j: usize) -> bool {
        self.holds[i][j]
    }

    pub fn table(&self) -> &[Vec<bool>] {
        &self.holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub reflexive: bool,
    pub complete: bool,
    pub transitive: bool,
    /// Element `x` with `x ≥ x` missing.
    pub reflexivity_witness: Option<String>,
    /// Pair `(x, y)` with neither `x ≥ y` nor `y ≥ x`.
    pub completeness_witness: Option<(String, String)>,
    /// Triple `(x, y, z)` with `x ≥ y`, `y ≥ z` but not `x ≥ z`.
    pub transitivity_witness: Option<(String, String, String)>,
}

impl AxiomReport {
    pub fn is_preorder(&self) -> bool {
        self.reflexive && self.complete && self.transitive
    }
}

/// Checks reflexivity, completeness and transitivity. Each witness is the
/// first violation in lexicographic order of element indices.
pub fn check_axioms(rel: &ConfidenceRelation) -> AxiomReport {
    let n = rel.choice_set.len();
    let label = |i: usize| rel.choice_set.label(i).to_string();

    let reflexivity_witness = (0..n).find(|&i| !rel.holds(i, i)).map(label);

    let completeness_witness = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| !rel.holds(i, j) && !rel.holds(j, i))
        .map(|(i, j)| (label(i), label(j)));

    let mut transitivity_witness = None;
    'outer: for i in 0..n {
        for j in 0..n {
            if !rel.holds(i, j) {
                continue;
            }
            for k in 0..n {
                if rel.holds(j, k) && !rel.holds(i, k) {
                    transitivity_witness = Some((label(i), label(j), label(k)));
                    break 'outer;
                }
            }
        }
    }

    AxiomReport {
        reflexive: reflexivity_witness.is_none(),
        complete: completeness_witness.is_none(),
        transitive: transitivity_witness.is_none(),
        reflexivity_witness,
        completeness_witness,
        transitivity_witness,
    }
}

/// One real value per element of a choice set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceAssignment {
    choice_set: ChoiceSet,
    values: Vec<f64>,
}

impl InfluenceAssignment {
    /// Values are matched positionally with the elements of `choice_set`.
    pub fn new(choice_set: ChoiceSet, values: Vec<f64>) -> Result<Self, RelationError> {
        if values.len() != choice_set.len() {
            return Err(RelationError::AssignmentLength { got: values.len(), expected: choice_set.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RelationError::NonFiniteValue(choice_set.label(i).to_string()));
        }
        Ok(Self { choice_set, values })
    }

    pub fn from_map(choice_set: ChoiceSet, map: &HashMap<String, f64>) -> Result<Self, RelationError> {
        if map.len() != choice_set.len() {
            return Err(RelationError::AssignmentLength { got: map.len(), expected: choice_set.len() });
        }
        let values = choice_set
            .elements()
            .iter()
            .map(|e| map.get(e).copied().ok_or_else(|| RelationError::UnknownLabel(e.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(choice_set, values)
    }

    pub fn choice_set(&self) -> &ChoiceSet {
        &self.choice_set
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        self.choice_set.index_of(label).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.choice_set.elements().iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// Canonical representation: each indifference class gets a consecutive
/// integer level, the lowest class being 0.
pub fn build_influence(rel: &ConfidenceRelation) -> Result<InfluenceAssignment, RelationError> {
    let report = check_axioms(rel);
    if !report.is_preorder() {
        return Err(RelationError::NotAPreorder(Box::new(report)));
    }
    let n = rel.choice_set.len();
    // In a complete preorder the number of elements an element dominates is
    // strictly larger for strictly higher classes and equal within a class.
    let dominated: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| rel.holds(i, j)).count()).collect();
    let levels: Vec<usize> = dominated.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let values = dominated.iter().map(|d| levels.binary_search(d).expect("level present") as f64).collect();
    InfluenceAssignment::new(rel.choice_set.clone(), values)
}

/// True iff `x ≥ y ⇔ I(x) ≥ I(y)` for every ordered pair.
pub fn verify_representation(rel: &ConfidenceRelation, influence: &InfluenceAssignment) -> Result<bool, RelationError> {
    if rel.choice_set != influence.choice_set {
        return Err(RelationError::ChoiceSetMismatch);
    }
    let n = rel.choice_set.len();
    let v = &influence.values;
    Ok((0..n).all(|i| (0..n).all(|j| rel.holds(i, j) == (v[i] >= v[j]))))
}

/// Strictly increasing piecewise-linear map, linearly extrapolated beyond
/// the first and last breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneTransform {
    breakpoints: Vec<(f64, f64)>,
}

impl MonotoneTransform {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, RelationError> {
        if breakpoints.len() < 2 {
            return Err(RelationError::TooFewBreakpoints(breakpoints.len()));
        }
        if let Some(i) = breakpoints.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(RelationError::NotStrictlyIncreasing(i));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(RelationError::NotStrictlyIncreasing(i + 1));
        }
        Ok(Self { breakpoints })
    }

    pub fn identity() -> Self {
        Self { breakpoints: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn eval(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        // Segment whose interpolation covers t; end segments extrapolate.
        let seg = match bp.iter().position(|&(x, _)| x > t) {
            None => bp.len() - 2,
            Some(0) => 0,
            Some(k) => (k - 1).min(bp.len() - 2),
        };
        let (x0, y0) = bp[seg];
        let (x1, y1) = bp[seg + 1];
        if t == x0 {
            return y0;
        }
        if t == x1 {
            return y1;
        }
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }
}

pub fn apply_transform(influence: &InfluenceAssignment, phi: &MonotoneTransform) -> InfluenceAssignment {
    InfluenceAssignment {
        choice_set: influence.choice_set.clone(),
        values: influence.values.iter().map(|&v| phi.eval(v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[&str]) -> ChoiceSet {
        ChoiceSet::new(labels.iter().copied()).unwrap()
    }

    fn chain_abc() -> ConfidenceRelation {
        ConfidenceRelation::from_pairs(
            set(&["a", "b", "c"]),
            [("a", "a"), ("b", "b"), ("c", "c"), ("a", "b"), ("b", "c"), ("a", "c")],
        )
        .unwrap()
    }

    #[test]
    fn choice_set_invariants() {
        assert_eq!(ChoiceSet::new(Vec::<String>::new()), Err(RelationError::EmptyChoiceSet));
        assert_eq!(ChoiceSet::new(["a", "b", "a"]), Err(RelationError::DuplicateLabel("a".into())));
    }

    #[test]
    fn table_shape_is_checked() {
        let err = ConfidenceRelation::new(set(&["a", "b"]), vec![vec![true, true], vec![true]]);
        assert!(matches!(err, Err(RelationError::TableShape { .. })));
        let err = ConfidenceRelation::from_pairs(set(&["a"]), [("a", "z")]);
        assert_eq!(err, Err(RelationError::UnknownLabel("z".into())));
    }

    #[test]
    fn chain_satisfies_all_axioms() {
        let r = check_axioms(&chain_abc());
        assert!(r.reflexive && r.complete && r.transitive);
        assert_eq!(r.reflexivity_witness, None);
        assert_eq!(r.completeness_witness, None);
        assert_eq!(r.transitivity_witness, None);
    }

    #[test]
    fn missing_transitive_pair_is_witnessed() {
        let rel = ConfidenceRelation::from_pairs(
            set(&["x", "y", "z"]),
            [("x", "x"), ("y", "y"), ("z", "z"), ("x", "y"), ("y", "z")],
        )
        .unwrap();
        let r = check_axioms(&rel);
        assert!(r.reflexive);
        assert!(!r.transitive);
        assert_eq!(r.transitivity_witness, Some(("x".into(), "y".into(), "z".into())));
        // x and z are also incomparable.
        assert!(!r.complete);
        assert_eq!(r.completeness_witness, Some(("x".into(), "z".into())));
    }

    #[test]
    fn empty_relation_fails_reflexivity_at_first_element() {
        let rel = ConfidenceRelation::from_pairs(set(&["p", "q"]), []).unwrap();
        let r = check_axioms(&rel);
        assert_eq!(r.reflexivity_witness.as_deref(), Some("p"));
        assert_eq!(r.completeness_witness, Some(("p".into(), "p".into())));
        assert!(r.transitive);
    }

    #[test]
    fn indifferent_elements_share_level_zero() {
        let s = set(&["a", "b", "c"]);
        let rel = ConfidenceRelation::new(s, vec![vec![true; 3]; 3]).unwrap();
        let inf = build_influence(&rel).unwrap();
        assert_eq!(inf.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn strict_chain_gets_consecutive_levels() {
        let inf = build_influence(&chain_abc()).unwrap();
        assert_eq!(inf.value("a"), Some(2.0));
        assert_eq!(inf.value("b"), Some(1.0));
        assert_eq!(inf.value("c"), Some(0.0));
        assert!(verify_representation(&chain_abc(), &inf).unwrap());
    }

    #[test]
    fn build_rejects_non_preorder() {
        let rel = ConfidenceRelation::from_pairs(set(&["a", "b"]), [("a", "a")]).unwrap();
        match build_influence(&rel) {
            Err(RelationError::NotAPreorder(report)) => {
                assert!(!report.reflexive);
                assert!(!report.complete);
            }
            other => panic!("expected NotAPreorder, got {other:?}"),
        }
    }

    #[test]
    fn reversed_assignment_is_rejected() {
        let rel = chain_abc();
        let inf = InfluenceAssignment::new(rel.choice_set().clone(), vec![0.0, 1.0, 2.0]).unwrap();
        assert!(!verify_representation(&rel, &inf).unwrap());
    }

    #[test]
    fn mismatched_choice_set_is_an_error() {
        let inf = InfluenceAssignment::new(set(&["a", "b", "d"]), vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(verify_representation(&chain_abc(), &inf), Err(RelationError::ChoiceSetMismatch));
    }

    #[test]
    fn assignment_from_map() {
        let map: HashMap<String, f64> = [("b".to_string(), 1.0), ("a".to_string(), 3.0)].into();
        let inf = InfluenceAssignment::from_map(set(&["a", "b"]), &map).unwrap();
        assert_eq!(inf.values(), &[3.0, 1.0]);
        let short: HashMap<String, f64> = [("a".to_string(), 3.0)].into();
        assert!(InfluenceAssignment::from_map(set(&["a", "b"]), &short).is_err());
    }

    #[test]
    fn transform_validation() {
        assert_eq!(MonotoneTransform::new(vec![(0.0, 0.0)]), Err(RelationError::TooFewBreakpoints(1)));
        assert_eq!(MonotoneTransform::new(vec![(0.0, 0.0), (1.0, 0.0)]), Err(RelationError::NotStrictlyIncreasing(1)));
        assert_eq!(
            MonotoneTransform::new(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]),
            Err(RelationError::NotStrictlyIncreasing(2))
        );
    }

    #[test]
    fn identity_transform_leaves_values() {
        let inf = build_influence(&chain_abc()).unwrap();
        assert_eq!(apply_transform(&inf, &MonotoneTransform::identity()), inf);
    }

    #[test]
    fn affine_transform() {
        let inf = build_influence(&chain_abc()).unwrap();
        let phi = MonotoneTransform::new(vec![(0.0, 5.0), (1.0, 7.0)]).unwrap();
        let out = apply_transform(&inf, &phi);
        assert_eq!(out.values(), &[9.0, 7.0, 5.0]);
        assert!(verify_representation(&chain_abc(), &out).unwrap());
    }

    #[test]
    fn piecewise_evaluation_interpolates_and_extrapolates() {
        let phi = MonotoneTransform::new(vec![(0.0, 0.0), (1.0, 10.0), (3.0, 11.0)]).unwrap();
        assert_eq!(phi.eval(0.5), 5.0);
        assert_eq!(phi.eval(1.0), 10.0);
        assert_eq!(phi.eval(2.0), 10.5);
        assert_eq!(phi.eval(-1.0), -10.0);
        assert_eq!(phi.eval(5.0), 12.0);
    }
}
