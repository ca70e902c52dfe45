//! Problem instances and clustering solutions.
//!
//! An [`Instance`] is a set of elements, each with a non-negative weight and
//! an ordinal type, plus a symmetric weighted relation graph over the
//! elements. A [`ClusteringSolution`] is a partition of the element set into
//! non-empty clusters, kept in a canonical form so that solvers and parallel
//! enumeration are deterministic.
//!
//! The JSON interchange format uses 1-based element ids; internally ids are
//! 0-based indices into the element list.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Zero-based element index, unique and contiguous within an [`Instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub usize);

impl ElementId {
    /// The 1-based id used by the JSON format and in reports.
    pub fn external(self) -> usize {
        self.0 + 1
    }

    /// Converts a 1-based external id; `None` when out of range for `n`.
    pub fn from_external(id: usize, n: usize) -> Option<Self> {
        if id >= 1 && id <= n {
            Some(ElementId(id - 1))
        } else {
            None
        }
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.external())
    }
}

/// One element: a non-negative weight and an ordinal type in
/// `1..=type_count`, where type 1 is the most important/complex.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: ElementId,
    pub weight: f64,
    pub element_type: usize,
}

/// Symmetric weighted graph over the element set.
///
/// Each unordered pair is stored once; self-loops are rejected at parse
/// time. A missing pair is equivalent to weight 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedGraph {
    edges: BTreeMap<(usize, usize), f64>,
}

impl WeightedGraph {
    /// Number of stored edges (zero-weight edges included).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Weight between two elements, 0.0 when no edge is present.
    pub fn weight_between(&self, a: ElementId, b: ElementId) -> f64 {
        let key = if a.0 <= b.0 { (a.0, b.0) } else { (b.0, a.0) };
        self.edges.get(&key).copied().unwrap_or(0.0)
    }

    /// Iterates stored edges as `(a, b, weight)` with `a < b`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (ElementId, ElementId, f64)> + '_ {
        self.edges
            .iter()
            .map(|(&(a, b), &w)| (ElementId(a), ElementId(b), w))
    }
}

/// A note recording a cell of the source data that the bundled fixture
/// intentionally deviates from; `evaluate` surfaces these as notes when the
/// computed value differs from the published one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Erratum {
    /// Which reported field the note refers to, e.g. `intra_edge_weight`,
    /// `edge_diff`, `edge_ref`, `proximity`.
    pub field: String,
    /// 1-based canonical cluster index for per-cluster fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    /// 1-based canonical cluster pair for proximity cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    /// The value printed in the published table.
    pub printed: f64,
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    type_count: usize,
    elements: Vec<Element>,
    graph: WeightedGraph,
    solutions: BTreeMap<String, ClusteringSolution>,
    errata: BTreeMap<String, Vec<Erratum>>,
    criteria: Option<Vec<Vec<u8>>>,
    compatibility: Option<Vec<Vec<u8>>>,
}

impl Instance {
    /// Number of elements.
    pub fn n(&self) -> usize {
        self.elements.len()
    }

    /// Number of element types (excluding the implicit "empty" padding type).
    pub fn type_count(&self) -> usize {
        self.type_count
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn weight_of(&self, id: ElementId) -> f64 {
        self.elements[id.0].weight
    }

    pub fn type_of(&self, id: ElementId) -> usize {
        self.elements[id.0].element_type
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// A named solution from the document's optional `solutions` block.
    pub fn solution(&self, name: &str) -> Option<&ClusteringSolution> {
        self.solutions.get(name)
    }

    pub fn solution_names(&self) -> impl Iterator<Item = &str> {
        self.solutions.keys().map(String::as_str)
    }

    /// Errata notes attached to a named solution.
    pub fn errata_for(&self, name: &str) -> &[Erratum] {
        self.errata.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Per-element criteria grades (rows) when the document carries a
    /// `criteria` block; grades are on the ordinal scale `0..=3`.
    pub fn criteria(&self) -> Option<&Vec<Vec<u8>>> {
        self.criteria.as_ref()
    }

    /// Full symmetric compatibility grade matrix when the document carries a
    /// `compatibility` block; grade 0 means incompatibility.
    pub fn compatibility(&self) -> Option<&Vec<Vec<u8>>> {
        self.compatibility.as_ref()
    }

    /// Serializes back to the JSON document format.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceDoc::from(self)).expect("instance serializes")
    }
}

/// A partition of the element set into non-empty clusters, in canonical
/// form: members of each cluster sorted ascending, clusters sorted by their
/// smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusteringSolution {
    clusters: Vec<Vec<ElementId>>,
}

impl ClusteringSolution {
    /// Number of clusters.
    pub fn lambda(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Vec<ElementId>] {
        &self.clusters
    }

    pub fn cluster(&self, index: usize) -> &[ElementId] {
        &self.clusters[index]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total number of elements covered.
    pub fn n(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Clusters as lists of 1-based external ids.
    pub fn to_external(&self) -> Vec<Vec<usize>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|id| id.external()).collect())
            .collect()
    }

    /// Per-element canonical cluster index.
    pub fn assignment(&self) -> Vec<usize> {
        let mut assign = vec![0usize; self.n()];
        for (b, cluster) in self.clusters.iter().enumerate() {
            for &id in cluster {
                assign[id.0] = b;
            }
        }
        assign
    }

    /// Builds the canonical solution from a per-element cluster label array.
    /// Labels may be arbitrary; every element must carry one.
    pub fn from_assignment(assign: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<ElementId>> = BTreeMap::new();
        for (elem, &label) in assign.iter().enumerate() {
            groups.entry(label).or_default().push(ElementId(elem));
        }
        let mut clusters: Vec<Vec<ElementId>> = groups.into_values().collect();
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        ClusteringSolution { clusters }
    }
}

/// Errors raised while validating a candidate cluster list against an
/// instance.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error("unknown element id {id}")]
    UnknownId { id: usize },
    #[error("element {id} appears in more than one cluster")]
    Overlap { id: usize },
    #[error("element {id} is not covered by any cluster")]
    Missing { id: usize },
    #[error("cluster {index} is empty")]
    EmptyCluster { index: usize },
}

/// Validates a candidate cluster list (1-based external ids) as a partition
/// of the instance's element set and returns its canonical form.
pub fn validate_solution(
    inst: &Instance,
    clusters: &[Vec<usize>],
) -> Result<ClusteringSolution, SolutionError> {
    let n = inst.n();
    let mut seen = vec![false; n];
    let mut canonical: Vec<Vec<ElementId>> = Vec::with_capacity(clusters.len());
    for (index, cluster) in clusters.iter().enumerate() {
        if cluster.is_empty() {
            return Err(SolutionError::EmptyCluster { index: index + 1 });
        }
        let mut members = Vec::with_capacity(cluster.len());
        for &ext in cluster {
            let id = ElementId::from_external(ext, n)
                .ok_or(SolutionError::UnknownId { id: ext })?;
            if seen[id.0] {
                return Err(SolutionError::Overlap { id: ext });
            }
            seen[id.0] = true;
            members.push(id);
        }
        members.sort_unstable();
        canonical.push(members);
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(SolutionError::Missing { id: missing + 1 });
    }
    canonical.sort_unstable_by_key(|c| c[0]);
    Ok(ClusteringSolution {
        clusters: canonical,
    })
}

/// Errors raised while parsing an instance document.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    Json(String),
    #[error("type_count must be at least 1, got {0}")]
    BadTypeCount(usize),
    #[error("document has no elements")]
    NoElements,
    #[error("elements[{index}].id: duplicate id {id}")]
    DuplicateId { index: usize, id: usize },
    #[error("elements[{index}].id: id {id} outside 1..={n}")]
    IdOutOfRange { index: usize, id: usize, n: usize },
    #[error("elements[{index}].weight: weight {weight} of element {id} must be finite and non-negative")]
    InvalidWeight { index: usize, id: usize, weight: f64 },
    #[error("elements[{index}].type: type {element_type} of element {id} outside 1..={type_count}")]
    TypeOutOfRange {
        index: usize,
        id: usize,
        element_type: usize,
        type_count: usize,
    },
    #[error("edges[{index}]: self-loop on element {id}")]
    SelfLoop { index: usize, id: usize },
    #[error("edges[{index}]: unknown endpoint {id}")]
    UnknownEndpoint { index: usize, id: usize },
    #[error("edges[{index}]: weight {weight} must be finite and non-negative")]
    InvalidEdgeWeight { index: usize, weight: f64 },
    #[error("edges[{index}]: asymmetric edge ({a},{b}): weights {first} and {second} conflict")]
    AsymmetricEdge {
        index: usize,
        a: usize,
        b: usize,
        first: f64,
        second: f64,
    },
    #[error("solutions.{name}: {source}")]
    Solution {
        name: String,
        source: SolutionError,
    },
    #[error("criteria[{row}]: {message}")]
    Criteria { row: usize, message: String },
    #[error("compatibility[{index}]: {message}")]
    Compatibility { index: usize, message: String },
}

#[derive(Serialize, Deserialize)]
struct ElementDoc {
    id: usize,
    weight: f64,
    #[serde(rename = "type")]
    element_type: usize,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    type_count: usize,
    elements: Vec<ElementDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    solutions: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    errata: BTreeMap<String, Vec<Erratum>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    criteria: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compatibility: Option<Vec<(usize, usize, u8)>>,
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        let compatibility = inst.compatibility.as_ref().map(|matrix| {
            let mut pairs = Vec::new();
            for a in 0..matrix.len() {
                for b in (a + 1)..matrix.len() {
                    if matrix[a][b] > 0 {
                        pairs.push((a + 1, b + 1, matrix[a][b]));
                    }
                }
            }
            pairs
        });
        InstanceDoc {
            type_count: inst.type_count,
            elements: inst
                .elements
                .iter()
                .map(|e| ElementDoc {
                    id: e.id.external(),
                    weight: e.weight,
                    element_type: e.element_type,
                })
                .collect(),
            edges: inst
                .graph
                .edges()
                .map(|(a, b, w)| (a.external(), b.external(), w))
                .collect(),
            solutions: inst
                .solutions
                .iter()
                .map(|(name, sol)| (name.clone(), sol.to_external()))
                .collect(),
            errata: inst.errata.clone(),
            criteria: inst.criteria.clone(),
            compatibility,
        }
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    if doc.type_count < 1 {
        return Err(ParseError::BadTypeCount(doc.type_count));
    }
    let n = doc.elements.len();
    if n == 0 {
        return Err(ParseError::NoElements);
    }

    let mut elements: Vec<Option<Element>> = vec![None; n];
    for (index, e) in doc.elements.iter().enumerate() {
        if e.id < 1 || e.id > n {
            return Err(ParseError::IdOutOfRange {
                index,
                id: e.id,
                n,
            });
        }
        if elements[e.id - 1].is_some() {
            return Err(ParseError::DuplicateId { index, id: e.id });
        }
        if !e.weight.is_finite() || e.weight < 0.0 {
            return Err(ParseError::InvalidWeight {
                index,
                id: e.id,
                weight: e.weight,
            });
        }
        if e.element_type < 1 || e.element_type > doc.type_count {
            return Err(ParseError::TypeOutOfRange {
                index,
                id: e.id,
                element_type: e.element_type,
                type_count: doc.type_count,
            });
        }
        elements[e.id - 1] = Some(Element {
            id: ElementId(e.id - 1),
            weight: e.weight,
            element_type: e.element_type,
        });
    }
    let elements: Vec<Element> = elements.into_iter().map(|e| e.unwrap()).collect();

    let mut graph = WeightedGraph::default();
    for (index, &(a, b, w)) in doc.edges.iter().enumerate() {
        if a == b {
            return Err(ParseError::SelfLoop { index, id: a });
        }
        for id in [a, b] {
            if id < 1 || id > n {
                return Err(ParseError::UnknownEndpoint { index, id });
            }
        }
        if !w.is_finite() || w < 0.0 {
            return Err(ParseError::InvalidEdgeWeight { index, weight: w });
        }
        let key = ((a - 1).min(b - 1), (a - 1).max(b - 1));
        if let Some(&existing) = graph.edges.get(&key) {
            if existing != w {
                return Err(ParseError::AsymmetricEdge {
                    index,
                    a,
                    b,
                    first: existing,
                    second: w,
                });
            }
        } else {
            graph.edges.insert(key, w);
        }
    }

    let criteria = match doc.criteria {
        None => None,
        Some(rows) => {
            if rows.len() != n {
                return Err(ParseError::Criteria {
                    row: rows.len(),
                    message: format!("expected {n} rows, got {}", rows.len()),
                });
            }
            let width = rows[0].len();
            for (row, grades) in rows.iter().enumerate() {
                if grades.len() != width || width == 0 {
                    return Err(ParseError::Criteria {
                        row,
                        message: format!("expected {width} grades, got {}", grades.len()),
                    });
                }
                if let Some(&g) = grades.iter().find(|&&g| g > 3) {
                    return Err(ParseError::Criteria {
                        row,
                        message: format!("grade {g} outside 0..=3"),
                    });
                }
            }
            Some(rows)
        }
    };

    let compatibility = match doc.compatibility {
        None => None,
        Some(pairs) => {
            let mut matrix = vec![vec![0u8; n]; n];
            let mut set = vec![vec![false; n]; n];
            for (index, &(a, b, g)) in pairs.iter().enumerate() {
                if a == b {
                    return Err(ParseError::Compatibility {
                        index,
                        message: format!("self-pair on element {a}"),
                    });
                }
                for id in [a, b] {
                    if id < 1 || id > n {
                        return Err(ParseError::Compatibility {
                            index,
                            message: format!("unknown element {id}"),
                        });
                    }
                }
                if g > 3 {
                    return Err(ParseError::Compatibility {
                        index,
                        message: format!("grade {g} outside 0..=3"),
                    });
                }
                let (x, y) = (a - 1, b - 1);
                if set[x][y] && matrix[x][y] != g {
                    return Err(ParseError::Compatibility {
                        index,
                        message: format!(
                            "conflicting grades {} and {g} for pair ({a},{b})",
                            matrix[x][y]
                        ),
                    });
                }
                matrix[x][y] = g;
                matrix[y][x] = g;
                set[x][y] = true;
                set[y][x] = true;
            }
            Some(matrix)
        }
    };

    let mut inst = Instance {
        type_count: doc.type_count,
        elements,
        graph,
        solutions: BTreeMap::new(),
        errata: doc.errata,
        criteria,
        compatibility,
    };
    for (name, clusters) in doc.solutions {
        let sol = validate_solution(&inst, &clusters).map_err(|source| ParseError::Solution {
            name: name.clone(),
            source,
        })?;
        inst.solutions.insert(name, sol);
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_doc() -> &'static str {
        r#"{
            "type_count": 2,
            "elements": [
                {"id": 1, "weight": 1.5, "type": 1},
                {"id": 2, "weight": 0.0, "type": 2},
                {"id": 3, "weight": 2.0, "type": 2}
            ],
            "edges": [[1, 2, 3.5], [2, 3, 0.0]],
            "solutions": {"split": [[1, 2], [3]]}
        }"#
    }

    #[test]
    fn parses_and_validates() {
        let inst = parse_instance(small_doc()).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.type_count(), 2);
        assert_eq!(inst.graph().edge_count(), 2);
        assert_eq!(inst.graph().weight_between(ElementId(0), ElementId(1)), 3.5);
        assert_eq!(inst.graph().weight_between(ElementId(0), ElementId(2)), 0.0);
        let sol = inst.solution("split").unwrap();
        assert_eq!(sol.lambda(), 2);
    }

    #[test]
    fn single_element_no_edges() {
        let inst = parse_instance(
            r#"{"type_count": 1, "elements": [{"id": 1, "weight": 0.0, "type": 1}]}"#,
        )
        .unwrap();
        assert_eq!(inst.n(), 1);
    }

    #[test]
    fn self_loop_rejected() {
        let text = r#"{
            "type_count": 1,
            "elements": [{"id": 1, "weight": 0, "type": 1}, {"id": 2, "weight": 0, "type": 1},
                         {"id": 3, "weight": 0, "type": 1}],
            "edges": [[3, 3, 1.0]]
        }"#;
        assert!(matches!(
            parse_instance(text),
            Err(ParseError::SelfLoop { id: 3, .. })
        ));
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = r#"{
            "type_count": 1,
            "elements": [{"id": 1, "weight": 0, "type": 1}, {"id": 1, "weight": 0, "type": 1}]
        }"#;
        assert!(matches!(
            parse_instance(text),
            Err(ParseError::DuplicateId { id: 1, .. })
        ));
    }

    #[test]
    fn negative_weight_rejected() {
        let text = r#"{"type_count": 1, "elements": [{"id": 1, "weight": -0.5, "type": 1}]}"#;
        assert!(matches!(
            parse_instance(text),
            Err(ParseError::InvalidWeight { id: 1, .. })
        ));
    }

    #[test]
    fn type_out_of_range_rejected() {
        let text = r#"{"type_count": 2, "elements": [{"id": 1, "weight": 0.5, "type": 3}]}"#;
        assert!(matches!(
            parse_instance(text),
            Err(ParseError::TypeOutOfRange { id: 1, .. })
        ));
    }

    #[test]
    fn conflicting_duplicate_edge_rejected() {
        let text = r#"{
            "type_count": 1,
            "elements": [{"id": 1, "weight": 0, "type": 1}, {"id": 2, "weight": 0, "type": 1}],
            "edges": [[1, 2, 1.0], [2, 1, 2.0]]
        }"#;
        assert!(matches!(
            parse_instance(text),
            Err(ParseError::AsymmetricEdge { .. })
        ));
    }

    #[test]
    fn symmetric_duplicate_edge_accepted() {
        let text = r#"{
            "type_count": 1,
            "elements": [{"id": 1, "weight": 0, "type": 1}, {"id": 2, "weight": 0, "type": 1}],
            "edges": [[1, 2, 1.0], [2, 1, 1.0]]
        }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.graph().edge_count(), 1);
    }

    #[test]
    fn overlap_detected() {
        let inst = parse_instance(small_doc()).unwrap();
        let err = validate_solution(&inst, &[vec![1, 2], vec![2, 3]]).unwrap_err();
        assert_eq!(err, SolutionError::Overlap { id: 2 });
    }

    #[test]
    fn coverage_detected() {
        let inst = parse_instance(small_doc()).unwrap();
        let err = validate_solution(&inst, &[vec![1, 2]]).unwrap_err();
        assert_eq!(err, SolutionError::Missing { id: 3 });
    }

    #[test]
    fn unknown_id_detected() {
        let inst = parse_instance(small_doc()).unwrap();
        let err = validate_solution(&inst, &[vec![1, 2], vec![3, 9]]).unwrap_err();
        assert_eq!(err, SolutionError::UnknownId { id: 9 });
    }

    #[test]
    fn empty_cluster_detected() {
        let inst = parse_instance(small_doc()).unwrap();
        let err = validate_solution(&inst, &[vec![1, 2, 3], vec![]]).unwrap_err();
        assert_eq!(err, SolutionError::EmptyCluster { index: 2 });
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let inst = parse_instance(small_doc()).unwrap();
        let sol = validate_solution(&inst, &[vec![3], vec![2, 1]]).unwrap();
        assert_eq!(sol.to_external(), vec![vec![1, 2], vec![3]]);
        let again = validate_solution(&inst, &sol.to_external()).unwrap();
        assert_eq!(sol, again);
    }

    #[test]
    fn round_trip_preserves_instance() {
        let inst = parse_instance(small_doc()).unwrap();
        let text = inst.to_json_string();
        let reparsed = parse_instance(&text).unwrap();
        assert_eq!(inst, reparsed);
    }

    #[test]
    fn assignment_round_trip() {
        let sol = ClusteringSolution::from_assignment(&[1, 0, 1, 2]);
        assert_eq!(sol.to_external(), vec![vec![1, 3], vec![2], vec![4]]);
        assert_eq!(sol.assignment(), vec![0, 1, 0, 2]);
        let rebuilt = ClusteringSolution::from_assignment(&sol.assignment());
        assert_eq!(sol, rebuilt);
    }
}
