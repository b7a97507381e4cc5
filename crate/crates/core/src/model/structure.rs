//! Connectivity between input factors, output factors and product slots.
//!
//! The core tensor has entries in {0, 1}; it is stored as the list of its
//! nonzero `(input factor, output factor, product slot)` triples. Within a
//! group, the product of local members `d` and `e` goes to slot
//! `first_slot + d·|group| + e`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreKind {
    Diagonal,
    Grouped {
        group_size: usize,
    },
    AsymGrouped {
        group_size: usize,
    },
    Topographic {
        grid_rows: usize,
        grid_cols: usize,
        neighborhood: usize,
        wraparound: bool,
    },
}

impl CoreKind {
    pub fn name(&self) -> &'static str {
        match self {
            CoreKind::Diagonal => "diagonal",
            CoreKind::Grouped { .. } => "grouped",
            CoreKind::AsymGrouped { .. } => "asym_grouped",
            CoreKind::Topographic { .. } => "topographic",
        }
    }

    /// Whether both images use the same number of factors and `x̂` exists.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, CoreKind::AsymGrouped { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductTriple {
    pub input: usize,
    pub output: usize,
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorGroup {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub first_slot: usize,
}

impl FactorGroup {
    pub fn num_products(&self) -> usize {
        self.inputs.len() * self.outputs.len()
    }

    pub fn slots(&self) -> std::ops::Range<usize> {
        self.first_slot..self.first_slot + self.num_products()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreStructure {
    kind: CoreKind,
    input_factors: usize,
    output_factors: usize,
    groups: Vec<FactorGroup>,
    triples: Vec<ProductTriple>,
}

impl CoreStructure {
    /// Builds the structure for `num_factors` filters. For asymmetric groups
    /// `num_factors` counts output filters; for topographic maps it must be
    /// `grid_rows · grid_cols`.
    pub fn new(kind: CoreKind, num_factors: usize) -> Result<Self> {
        if num_factors == 0 {
            return Err(Error::InvalidArgument("num_factors must be positive".into()));
        }
        let (input_factors, output_factors, groups) = match &kind {
            CoreKind::Diagonal => {
                let groups = (0..num_factors)
                    .map(|f| (vec![f], vec![f]))
                    .collect::<Vec<_>>();
                (num_factors, num_factors, groups)
            }
            CoreKind::Grouped { group_size } => {
                let gs = check_group_size(*group_size)?;
                let groups = chunk(num_factors, gs)
                    .into_iter()
                    .map(|m| (m.clone(), m))
                    .collect::<Vec<_>>();
                (num_factors, num_factors, groups)
            }
            CoreKind::AsymGrouped { group_size } => {
                let gs = check_group_size(*group_size)?;
                let groups = chunk(num_factors, gs)
                    .into_iter()
                    .enumerate()
                    .map(|(g, m)| (vec![g], m))
                    .collect::<Vec<_>>();
                (groups.len(), num_factors, groups)
            }
            CoreKind::Topographic {
                grid_rows,
                grid_cols,
                neighborhood,
                wraparound,
            } => {
                let (rows, cols, n) = (*grid_rows, *grid_cols, *neighborhood);
                if rows * cols != num_factors {
                    return Err(Error::InvalidArgument(format!(
                        "topographic grid {rows}x{cols} needs {} factors, got {num_factors}",
                        rows * cols
                    )));
                }
                if n == 0 || n > rows || n > cols {
                    return Err(Error::InvalidArgument(format!(
                        "neighborhood {n} must be in 1..=min({rows}, {cols})"
                    )));
                }
                let groups = topographic_groups(rows, cols, n, *wraparound)
                    .into_iter()
                    .map(|m| (m.clone(), m))
                    .collect::<Vec<_>>();
                (num_factors, num_factors, groups)
            }
        };
        let mut out_groups = Vec::with_capacity(groups.len());
        let mut triples = Vec::new();
        let mut slot = 0;
        for (inputs, outputs) in groups {
            let first_slot = slot;
            for &d in &inputs {
                for &e in &outputs {
                    triples.push(ProductTriple {
                        input: d,
                        output: e,
                        slot,
                    });
                    slot += 1;
                }
            }
            out_groups.push(FactorGroup {
                inputs,
                outputs,
                first_slot,
            });
        }
        Ok(Self {
            kind,
            input_factors,
            output_factors,
            groups: out_groups,
            triples,
        })
    }

    pub fn diagonal(num_factors: usize) -> Result<Self> {
        Self::new(CoreKind::Diagonal, num_factors)
    }

    pub fn grouped(num_factors: usize, group_size: usize) -> Result<Self> {
        Self::new(CoreKind::Grouped { group_size }, num_factors)
    }

    pub fn asym_grouped(output_factors: usize, group_size: usize) -> Result<Self> {
        Self::new(CoreKind::AsymGrouped { group_size }, output_factors)
    }

    pub fn topographic(rows: usize, cols: usize, neighborhood: usize, wraparound: bool) -> Result<Self> {
        Self::new(
            CoreKind::Topographic {
                grid_rows: rows,
                grid_cols: cols,
                neighborhood,
                wraparound,
            },
            rows * cols,
        )
    }

    pub fn kind(&self) -> &CoreKind {
        &self.kind
    }

    pub fn input_factors(&self) -> usize {
        self.input_factors
    }

    pub fn output_factors(&self) -> usize {
        self.output_factors
    }

    /// Number of filters as counted in experiment tables.
    pub fn num_factors(&self) -> usize {
        self.output_factors
    }

    pub fn num_products(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[ProductTriple] {
        &self.triples
    }

    pub fn groups(&self) -> &[FactorGroup] {
        &self.groups
    }
}

fn check_group_size(gs: usize) -> Result<usize> {
    if gs == 0 {
        Err(Error::InvalidArgument("group_size must be positive".into()))
    } else {
        Ok(gs)
    }
}

/// Consecutive groups of `size`; a trailing remainder forms a smaller group.
fn chunk(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0..n)
        .step_by(size)
        .map(|start| (start..(start + size).min(n)).collect())
        .collect()
}

/// Centered offsets for an `n`-wide window: `-(n-1)/2 ..= n/2`.
fn window(n: usize) -> std::ops::RangeInclusive<i64> {
    let lo = -((n as i64 - 1) / 2);
    lo..=lo + n as i64 - 1
}

/// One group per grid cell holding its `n×n` neighborhood, row-major filter
/// index `r·cols + c`. Without wraparound, neighborhoods are clipped at the
/// border.
fn topographic_groups(rows: usize, cols: usize, n: usize, wrap: bool) -> Vec<Vec<usize>> {
    let mut groups = Vec::with_capacity(rows * cols);
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            let mut members = Vec::with_capacity(n * n);
            for dr in window(n) {
                for dc in window(n) {
                    let (mut rr, mut cc) = (r + dr, c + dc);
                    if wrap {
                        rr = rr.rem_euclid(rows as i64);
                        cc = cc.rem_euclid(cols as i64);
                    } else if rr < 0 || cc < 0 || rr >= rows as i64 || cc >= cols as i64 {
                        continue;
                    }
                    members.push(rr as usize * cols + cc as usize);
                }
            }
            groups.push(members);
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_triples_are_the_diagonal() {
        let s = CoreStructure::diagonal(5).unwrap();
        let want: Vec<_> = (0..5)
            .map(|f| ProductTriple {
                input: f,
                output: f,
                slot: f,
            })
            .collect();
        assert_eq!(s.triples(), &want[..]);
    }

    #[test]
    fn grouped_slots_follow_local_index() {
        let s = CoreStructure::grouped(6, 3).unwrap();
        assert_eq!(s.num_products(), 18);
        let g1 = &s.groups()[1];
        assert_eq!(g1.inputs, vec![3, 4, 5]);
        for t in s.triples().iter().filter(|t| t.slot >= 9) {
            let (d, e) = (t.input - 3, t.output - 3);
            assert_eq!(t.slot, 9 + d * 3 + e);
        }
    }

    #[test]
    fn group_of_one_equals_diagonal() {
        assert_eq!(
            CoreStructure::grouped(7, 1).unwrap().triples(),
            CoreStructure::diagonal(7).unwrap().triples()
        );
    }

    #[test]
    fn remainder_group_is_smaller() {
        let s = CoreStructure::grouped(121, 3).unwrap();
        assert_eq!(s.groups().len(), 41);
        assert_eq!(s.groups()[40].inputs, vec![120]);
        assert_eq!(s.num_products(), 40 * 9 + 1);
    }

    #[test]
    fn asymmetric_pairs_first_input_with_all_outputs() {
        let s = CoreStructure::asym_grouped(8, 4).unwrap();
        assert_eq!(s.input_factors(), 2);
        assert_eq!(s.output_factors(), 8);
        assert_eq!(s.num_products(), 8);
        assert!(s.triples().iter().all(|t| t.input == t.output / 4));
    }

    #[test]
    fn topographic_membership() {
        let s = CoreStructure::topographic(4, 5, 3, true).unwrap();
        assert_eq!(s.groups().len(), 20);
        let mut count = vec![0; 20];
        for g in s.groups() {
            assert_eq!(g.inputs.len(), 9);
            for &m in &g.inputs {
                count[m] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 9));
        // cell (0,0) wraps to the last row and column
        assert!(s.groups()[0].inputs.contains(&(3 * 5 + 4)));
        let clipped = CoreStructure::topographic(4, 5, 3, false).unwrap();
        assert_eq!(clipped.groups()[0].inputs.len(), 4);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(CoreStructure::grouped(4, 0).is_err());
        assert!(CoreStructure::diagonal(0).is_err());
        assert!(CoreStructure::topographic(3, 3, 4, true).is_err());
        assert!(CoreStructure::new(
            CoreKind::Topographic {
                grid_rows: 3,
                grid_cols: 3,
                neighborhood: 3,
                wraparound: true
            },
            10
        )
        .is_err());
    }
}
