//! Linkage rules, expressed as the aggregate kept per adjacent cluster pair.
//!
//! The engine stores one aggregate per pair and folds the two aggregates of
//! `(X, U)` and `(Y, U)` when `X` and `Y` merge. Average linkage keeps the
//! total cut weight and divides by both cluster sizes on demand; the other
//! rules keep the similarity itself.

use crate::rational::{int, Rational};

pub trait Linkage: Send + Sync {
    fn name(&self) -> &'static str;

    /// Aggregate for `(X ∪ Y, U)`; at least one side is present.
    fn fold(&self, a: Option<&Rational>, b: Option<&Rational>) -> Rational;

    /// True when the similarity is the aggregate over `|X||Y|`.
    fn size_scaled(&self) -> bool {
        false
    }

    fn similarity(&self, agg: &Rational, x: usize, y: usize) -> Rational {
        if self.size_scaled() {
            agg / int((x * y) as i64)
        } else {
            agg.clone()
        }
    }
}

fn present<'a>(a: Option<&'a Rational>, b: Option<&'a Rational>) -> (&'a Rational, Option<&'a Rational>) {
    match (a, b) {
        (Some(a), b) => (a, b),
        (None, Some(b)) => (b, None),
        (None, None) => panic!("fold needs at least one aggregate"),
    }
}

pub struct Single;
pub struct Complete;
pub struct Average;
pub struct WeightedAverage;

impl Linkage for Single {
    fn name(&self) -> &'static str {
        "single"
    }

    fn fold(&self, a: Option<&Rational>, b: Option<&Rational>) -> Rational {
        match present(a, b) {
            (a, Some(b)) => a.max(b).clone(),
            (a, None) => a.clone(),
        }
    }
}

impl Linkage for Complete {
    fn name(&self) -> &'static str {
        "complete"
    }

    fn fold(&self, a: Option<&Rational>, b: Option<&Rational>) -> Rational {
        match present(a, b) {
            (a, Some(b)) => a.min(b).clone(),
            (a, None) => a.clone(),
        }
    }
}

impl Linkage for Average {
    fn name(&self) -> &'static str {
        "average"
    }

    fn fold(&self, a: Option<&Rational>, b: Option<&Rational>) -> Rational {
        match present(a, b) {
            (a, Some(b)) => a + b,
            (a, None) => a.clone(),
        }
    }

    fn size_scaled(&self) -> bool {
        true
    }
}

impl Linkage for WeightedAverage {
    fn name(&self) -> &'static str {
        "weighted_average"
    }

    fn fold(&self, a: Option<&Rational>, b: Option<&Rational>) -> Rational {
        match present(a, b) {
            (a, Some(b)) => (a + b) / int(2),
            (a, None) => a.clone(),
        }
    }
}

pub const LINKAGE_NAMES: [&str; 4] = ["single", "complete", "average", "weighted_average"];

/// Looks a linkage up by name. `upgma` and `wpgma` are accepted as aliases.
pub fn linkage_by_name(name: &str) -> Option<Box<dyn Linkage>> {
    match name {
        "single" => Some(Box::new(Single)),
        "complete" => Some(Box::new(Complete)),
        "average" | "upgma" => Some(Box::new(Average)),
        "weighted_average" | "wpgma" => Some(Box::new(WeightedAverage)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn folds() {
        let (a, b) = (int(3), int(8));
        assert_eq!(Single.fold(Some(&a), Some(&b)), b);
        assert_eq!(Complete.fold(Some(&a), Some(&b)), a);
        assert_eq!(Average.fold(Some(&a), Some(&b)), int(11));
        assert_eq!(WeightedAverage.fold(Some(&a), Some(&b)), frac(11, 2));
        assert_eq!(WeightedAverage.fold(None, Some(&b)), b);
        assert_eq!(Average.similarity(&int(11), 2, 3), frac(11, 6));
    }

    #[test]
    fn registry_names() {
        for name in LINKAGE_NAMES {
            assert_eq!(linkage_by_name(name).unwrap().name(), name);
        }
        assert_eq!(linkage_by_name("wpgma").unwrap().name(), "weighted_average");
        assert!(linkage_by_name("ward").is_none());
    }
}
