use crate::error::{Error, Result};
use crate::BinaryMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl PrfScore {
    /// F recomputed as the harmonic mean, 0 when `P + R = 0`.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PrfScore {
            precision,
            recall,
            f_measure,
        }
    }
}

/// Pixel counts of a prediction against ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn of(pred: &BinaryMap, gt: &BinaryMap) -> Result<Self> {
        pred.ensure_same_dims(gt, "prediction vs ground truth")?;
        let mut c = Confusion::default();
        for (&p, &g) in pred.data().iter().zip(gt.data()) {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                _ => {}
            }
        }
        Ok(c)
    }

    pub fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }

    pub fn score(&self) -> PrfScore {
        let predicted = self.tp + self.fp;
        let actual = self.tp + self.fn_;
        match (predicted, actual) {
            (0, 0) => PrfScore::from_pr(1.0, 1.0),
            (0, _) | (_, 0) => PrfScore::from_pr(0.0, 0.0),
            _ => PrfScore::from_pr(
                self.tp as f64 / predicted as f64,
                self.tp as f64 / actual as f64,
            ),
        }
    }
}

pub fn prf(pred: &BinaryMap, gt: &BinaryMap) -> Result<PrfScore> {
    Ok(Confusion::of(pred, gt)?.score())
}

/// Per-image averaging: each field is averaged on its own.
pub fn average_prf(scores: &[PrfScore]) -> Result<PrfScore> {
    if scores.is_empty() {
        return Err(Error::Param("cannot average zero scores".into()));
    }
    let n = scores.len() as f64;
    let sum = |f: fn(&PrfScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    Ok(PrfScore {
        precision: sum(|s| s.precision),
        recall: sum(|s| s.recall),
        f_measure: sum(|s| s.f_measure),
    })
}

/// Harmonic mean taken of the averaged precision and recall.
pub fn formula_on_averages(scores: &[PrfScore]) -> Result<PrfScore> {
    let avg = average_prf(scores)?;
    Ok(PrfScore::from_pr(avg.precision, avg.recall))
}

/// All pixels of all images counted together.
pub fn pooled_prf(pairs: &[(&BinaryMap, &BinaryMap)]) -> Result<PrfScore> {
    let mut total = Confusion::default();
    for (p, g) in pairs {
        total = total.add(Confusion::of(p, g)?);
    }
    Ok(total.score())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(bits: &[u8]) -> BinaryMap {
        BinaryMap::from_vec(bits.len(), 1, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn edge_cases() {
        let e = mask(&[0, 0, 0]);
        let g = mask(&[0, 1, 1]);
        assert_eq!(prf(&g, &g).unwrap(), PrfScore::from_pr(1.0, 1.0));
        assert_eq!(prf(&e, &e).unwrap(), PrfScore::from_pr(1.0, 1.0));
        assert_eq!(prf(&e, &g).unwrap(), PrfScore::from_pr(0.0, 0.0));
        assert!(matches!(prf(&e, &mask(&[0, 0])), Err(Error::Dim(_))));
    }

    #[test]
    fn half_and_half() {
        let s = prf(&mask(&[1, 1, 0, 0]), &mask(&[1, 0, 1, 0])).unwrap();
        assert_eq!((s.precision, s.recall, s.f_measure), (0.5, 0.5, 0.5));
    }

    #[test]
    fn formula_value() {
        let s = PrfScore::from_pr(0.366, 0.774);
        assert!((s.f_measure - 0.497).abs() < 5e-4);
    }

    #[test]
    fn averaging_modes() {
        let one = PrfScore::from_pr(1.0, 1.0);
        let zero = PrfScore::from_pr(0.0, 0.0);
        assert_eq!(average_prf(&[one]).unwrap(), one);
        let avg = average_prf(&[one, zero]).unwrap();
        assert_eq!((avg.precision, avg.recall, avg.f_measure), (0.5, 0.5, 0.5));
        assert!(average_prf(&[]).is_err());
        let skew = [PrfScore::from_pr(0.9, 0.1), PrfScore::from_pr(0.1, 0.9)];
        assert!((average_prf(&skew).unwrap().f_measure - 0.18).abs() < 1e-12);
        assert!((formula_on_averages(&skew).unwrap().f_measure - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pooled_counts() {
        let (p1, g1) = (mask(&[1, 1]), mask(&[1, 0]));
        let (p2, g2) = (mask(&[0, 0]), mask(&[1, 1]));
        let s = pooled_prf(&[(&p1, &g1), (&p2, &g2)]).unwrap();
        assert_eq!((s.precision, s.recall), (0.5, 1.0 / 3.0));
    }
}
