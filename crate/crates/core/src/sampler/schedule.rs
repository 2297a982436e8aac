use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One homogeneous stage: `steps` kernel steps at inverse temperature `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(rename = "J")]
    pub j: f64,
    pub steps: u64,
}

/// A cooling schedule made of finitely many homogeneous stages with
/// non-decreasing `J`. Only the last stage is covered by a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    stages: Vec<Stage>,
}

impl Schedule {
    /// Zero-length stages are allowed and skipped when running.
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidParameter(
                "schedule needs at least one stage".into(),
            ));
        }
        for s in &stages {
            if !(s.j.is_finite() && s.j >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "stage J must be >= 1, got {}",
                    s.j
                )));
            }
        }
        if stages.windows(2).any(|w| w[1].j < w[0].j) {
            return Err(Error::InvalidParameter(
                "stage J values must be non-decreasing".into(),
            ));
        }
        Ok(Self { stages })
    }

    pub fn single(j: f64, steps: u64) -> Result<Self> {
        Self::new(vec![Stage { j, steps }])
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn final_stage(&self) -> Stage {
        *self.stages.last().expect("schedule is non-empty")
    }

    pub fn total_steps(&self) -> u64 {
        self.stages.iter().map(|s| s.steps).sum()
    }
}

/// Geometric warm-up ladder `J = 1, 2, 4, ...` below `j_final`, each rung
/// getting `k_final / 10` steps (at least one), then `k_final` steps at
/// `j_final`.
pub fn default_schedule(j_final: f64, k_final: u64) -> Result<Schedule> {
    if !(j_final.is_finite() && j_final >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "J must be >= 1, got {j_final}"
        )));
    }
    if k_final == 0 {
        return Err(Error::InvalidParameter(
            "final stage needs at least one step".into(),
        ));
    }
    let warm = (k_final / 10).max(1);
    let mut stages = Vec::new();
    let mut j = 1.0;
    while j < j_final {
        stages.push(Stage { j, steps: warm });
        j *= 2.0;
    }
    stages.push(Stage {
        j: j_final,
        steps: k_final,
    });
    Schedule::new(stages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_examples() {
        assert_eq!(
            default_schedule(1.0, 50).unwrap().stages(),
            &[Stage { j: 1.0, steps: 50 }]
        );
        let s = default_schedule(6.0, 100).unwrap();
        let pairs: Vec<_> = s.stages().iter().map(|s| (s.j, s.steps)).collect();
        assert_eq!(pairs, vec![(1.0, 10), (2.0, 10), (4.0, 10), (6.0, 100)]);
        assert_eq!(default_schedule(3.0, 5).unwrap().stages()[0].steps, 1);
        assert!(default_schedule(0.5, 10).is_err());
        assert!(default_schedule(2.0, 0).is_err());
    }

    #[test]
    fn default_schedule_total_steps() {
        for (j, k) in [
            (2.0, 1000u64),
            (6.0, 100),
            (37.5, 12345),
            (1024.0, 10),
            (1025.0, 10),
        ] {
            let s = default_schedule(j, k).unwrap();
            let rungs = j.log2().ceil() as u64;
            assert_eq!(s.total_steps(), k + rungs * (k / 10).max(1), "J = {j}");
            assert_eq!(s.final_stage().j, j);
        }
    }

    #[test]
    fn rejects_decreasing_j() {
        let bad = vec![Stage { j: 4.0, steps: 1 }, Stage { j: 2.0, steps: 1 }];
        assert!(Schedule::new(bad).is_err());
        assert!(Schedule::new(vec![]).is_err());
        assert!(Schedule::single(0.0, 1).is_err());
    }
}
