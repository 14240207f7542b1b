use std::cmp::Ordering;

/// A configuration placed in cost/accuracy space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub cost: f64,
    pub accuracy: f64,
    pub tag: String,
}

impl ParetoPoint {
    pub fn new(cost: f64, accuracy: f64, tag: impl Into<String>) -> Self {
        Self {
            cost,
            accuracy,
            tag: tag.into(),
        }
    }

    /// `self` is no more expensive, no less accurate, and strictly better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.cost <= other.cost
            && self.accuracy >= other.accuracy
            && (self.cost < other.cost || self.accuracy > other.accuracy)
    }
}

/// Non-dominated points sorted by ascending cost. Points that coincide
/// exactly are all kept.
///
/// Sorting by cost (ties by accuracy, best first) means a point survives iff
/// it beats the best accuracy seen so far, or sits exactly on the point that
/// set it.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut sorted: Vec<&ParetoPoint> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then_with(|| b.accuracy.total_cmp(&a.accuracy))
    });
    let mut front: Vec<ParetoPoint> = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for p in sorted {
        let keep = match best {
            None => true,
            Some((cost, acc)) => match p.accuracy.total_cmp(&acc) {
                Ordering::Greater => true,
                Ordering::Equal => p.cost == cost,
                Ordering::Less => false,
            },
        };
        if keep {
            if best.is_none_or(|(_, acc)| p.accuracy > acc) {
                best = Some((p.cost, p.accuracy));
            }
            front.push(p.clone());
        }
    }
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<ParetoPoint> {
        v.iter()
            .enumerate()
            .map(|(i, &(c, a))| ParetoPoint::new(c, a, format!("p{i}")))
            .collect()
    }

    #[test]
    fn strict_domination() {
        let f = pareto_frontier(&pts(&[(1.0, 0.9), (2.0, 0.8)]));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].tag, "p0");
    }

    #[test]
    fn incomparable_points_both_survive() {
        let f = pareto_frontier(&pts(&[(2.0, 0.9), (1.0, 0.8)]));
        let tags: Vec<_> = f.iter().map(|p| p.tag.as_str()).collect();
        assert_eq!(tags, ["p1", "p0"]);
    }

    #[test]
    fn coincident_points_kept() {
        let f = pareto_frontier(&pts(&[(1.0, 0.9), (1.0, 0.9), (1.0, 0.8), (2.0, 0.9)]));
        let tags: Vec<_> = f.iter().map(|p| p.tag.as_str()).collect();
        assert_eq!(tags, ["p0", "p1"]);
    }

    #[test]
    fn empty_input() {
        assert!(pareto_frontier(&[]).is_empty());
    }
}
