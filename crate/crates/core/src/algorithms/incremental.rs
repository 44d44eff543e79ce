//! Adding users (or items) to a fitted clustering-based completion without
//! recomputing existing pairs.

use super::fit::{theory_sets, NeighborSet, Provenance};
use super::predict::{row_vote, Plan};
use super::select::{anchor, by_normalized};
use super::{Algorithm, CompletedMatrix};
use crate::error::{domain, Error, Result};
use crate::ratings::{Axis, Level, RatingMatrix};
use crate::similarity::{pair_stats, similarity_table, SimilarityIndex, SimilarityTable};
use super::vote::Prediction;

/// Similarity table, neighbor sets and predicted rows of a clustering run on
/// one axis. New entities get their pair scores, neighbor set and
/// prediction row; existing ones are left as they were.
#[derive(Clone, Debug)]
pub struct IncrementalState {
    axis: Axis,
    /// Entities as rows: the ratings for the user axis, their transpose for
    /// the item axis.
    rows: RatingMatrix,
    table: SimilarityTable,
    cluster_size: usize,
    liked: Level,
    sets: Vec<NeighborSet>,
    predictions: Vec<Vec<Prediction>>,
}

impl IncrementalState {
    pub fn new(r: &RatingMatrix, axis: Axis, cluster_size: usize) -> Result<Self> {
        let algo = match axis {
            Axis::Users => Algorithm::Ucr { cluster_size },
            Axis::Items => Algorithm::Icr { cluster_size },
        };
        algo.validate(r)?;
        let index = SimilarityIndex::new(r, axis);
        let rows = index.rows().clone();
        let sets = theory_sets(&index, cluster_size);
        let members: Vec<Vec<usize>> = sets.iter().map(|s| s.members.clone()).collect();
        let plan = Plan::All {
            rows: rows.num_users(),
            cols: rows.num_items(),
        };
        let liked = r.levels();
        let predictions = row_vote(&rows, &members, &plan, liked);
        Ok(IncrementalState {
            axis,
            table: similarity_table(&rows, Axis::Users, true),
            rows,
            cluster_size,
            liked,
            sets,
            predictions,
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn len(&self) -> usize {
        self.rows.num_users()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pair scores on the state's axis.
    pub fn table(&self) -> &SimilarityTable {
        &self.table
    }

    pub fn neighbor_set(&self, entity: usize) -> Option<&NeighborSet> {
        self.sets.get(entity)
    }

    /// Current ratings in the usual user x item orientation.
    pub fn ratings(&self) -> RatingMatrix {
        match self.axis {
            Axis::Users => self.rows.clone(),
            Axis::Items => self.rows.transpose(),
        }
    }

    pub fn completed(&self) -> CompletedMatrix {
        let (num_users, num_items) = match self.axis {
            Axis::Users => (self.rows.num_users(), self.rows.num_items()),
            Axis::Items => (self.rows.num_items(), self.rows.num_users()),
        };
        let plan = Plan::All {
            rows: self.rows.num_users(),
            cols: self.rows.num_items(),
        };
        let method = match self.axis {
            Axis::Users => Algorithm::Ucr {
                cluster_size: self.cluster_size,
            },
            Axis::Items => Algorithm::Icr {
                cluster_size: self.cluster_size,
            },
        };
        CompletedMatrix::assemble(
            num_users,
            num_items,
            self.rows.levels(),
            self.liked,
            method,
            &plan,
            self.predictions.clone(),
            self.axis == Axis::Items,
        )
    }

    /// Append a user; only valid on a user-axis state.
    pub fn add_user(&mut self, ratings: &[Option<Level>]) -> Result<usize> {
        if self.axis != Axis::Users {
            return domain("state clusters items; use add_item");
        }
        self.add_entity(ratings)
    }

    /// Append an item given its column; only valid on an item-axis state.
    pub fn add_item(&mut self, ratings: &[Option<Level>]) -> Result<usize> {
        if self.axis != Axis::Items {
            return domain("state clusters users; use add_user");
        }
        self.add_entity(ratings)
    }

    fn add_entity(&mut self, ratings: &[Option<Level>]) -> Result<usize> {
        if ratings.len() != self.rows.num_items() {
            return Err(Error::Dimension {
                expected: self.rows.num_items(),
                actual: ratings.len(),
            });
        }
        let rows = self.rows.with_appended_row(ratings)?;
        let new = rows.num_users() - 1;
        let stats = (0..new)
            .map(|w| pair_stats(&rows, new, w, Axis::Users))
            .collect::<Result<Vec<_>>>()?;
        self.table.push_entity(&stats)?;
        self.rows = rows;

        let mut own = stats;
        own.push(Default::default());
        let set = match anchor(&own, new) {
            None => NeighborSet {
                target: new,
                anchor: None,
                members: vec![new],
                provenance: Provenance::Theory,
            },
            Some(v) => {
                let mut members = vec![new, v];
                let to_anchor = self.table.row(v);
                members.extend(by_normalized(&to_anchor, &[new, v], self.cluster_size.saturating_sub(2)));
                NeighborSet {
                    target: new,
                    anchor: Some(v),
                    members,
                    provenance: Provenance::Theory,
                }
            }
        };
        let plan = Plan::Cells {
            per_row: (0..=new)
                .map(|u| if u == new { (0..self.rows.num_items() as u32).collect() } else { Vec::new() })
                .collect(),
        };
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); new];
        sets.push(set.members.clone());
        let row = row_vote(&self.rows, &sets, &plan, self.liked).pop().unwrap_or_default();
        self.sets.push(set);
        self.predictions.push(row);
        Ok(new)
    }
}
