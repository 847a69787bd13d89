use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Finite homogeneous model over the points `0..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomogeneousModel {
    #[serde(rename = "N")]
    n: usize,
    points: Vec<BTreeSet<String>>,
}

impl HomogeneousModel {
    pub fn new(points: Vec<BTreeSet<String>>) -> Self {
        assert!(!points.is_empty(), "a model has at least one point");
        HomogeneousModel {
            n: points.len() - 1,
            points,
        }
    }

    pub fn from_points<S: AsRef<str>>(points: Vec<Vec<S>>) -> Self {
        Self::new(
            points
                .into_iter()
                .map(|p| p.iter().map(|s| s.as_ref().to_string()).collect())
                .collect(),
        )
    }

    pub fn uniform(n: usize, letters: &[&str]) -> Self {
        Self::from_points(vec![letters.to_vec(); n + 1])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self, z: usize) -> &BTreeSet<String> {
        &self.points[z]
    }

    pub fn points(&self) -> &[BTreeSet<String>] {
        &self.points
    }

    pub fn holds_at(&self, z: usize, letter: &str) -> bool {
        self.points[z].contains(letter)
    }

    /// `V([x,y])`: letters true at every point of the interval.
    pub fn interval_letters(&self, x: usize, y: usize) -> BTreeSet<String> {
        let mut acc = self.points[x].clone();
        for z in x + 1..=y {
            acc.retain(|l| self.points[z].contains(l));
        }
        acc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let m: HomogeneousModel = serde_json::from_str(s)?;
        if m.points.len() != m.n + 1 {
            return Err(serde::de::Error::custom(
                "N does not match the number of points",
            ));
        }
        Ok(m)
    }
}
