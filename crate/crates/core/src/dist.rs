//! Validated finite distributions on one alphabet and on a product of two alphabets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass accepted by validation.
pub const MASS_TOL: f64 = 1e-9;
/// Entries below `-NEG_TOL` are rejected; entries in `[-NEG_TOL, 0)` are clamped to zero.
pub const NEG_TOL: f64 = 1e-12;

/// A probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDist {
    probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// A probability matrix on `X x Y`, stored row-major (`x` is the row).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDist {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_labels: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_labels: Option<Vec<String>>,
}

fn validate_entries(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    let mut out = Vec::with_capacity(raw.len());
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < -NEG_TOL {
            return Err(Error::NegativeMass { index, value });
        }
        out.push(value.max(0.0));
    }
    let sum: f64 = out.iter().sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(Error::MassMismatch { sum });
    }
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

impl FiniteDist {
    /// Validates a raw probability vector, renormalizing inside the tolerance.
    pub fn new(raw: &[f64]) -> Result<FiniteDist> {
        Ok(FiniteDist { probs: validate_entries(raw)?, labels: None })
    }

    /// Attaches symbol labels; their number must match the alphabet size.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<FiniteDist> {
        if labels.len() != self.probs.len() {
            return Err(Error::AlphabetMismatch { left: self.probs.len(), right: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Uniform distribution on `k` symbols.
    pub fn uniform(k: usize) -> Result<FiniteDist> {
        if k == 0 {
            return Err(Error::Empty);
        }
        FiniteDist::new(&vec![1.0 / k as f64; k])
    }

    /// Binary distribution `(a, 1 - a)`.
    pub fn binary(a: f64) -> Result<FiniteDist> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::OutOfRange { what: "binary parameter", value: a });
        }
        Ok(FiniteDist { probs: vec![a, 1.0 - a], labels: None })
    }

    /// Point mass on symbol `i` of a `k`-letter alphabet.
    pub fn dirac(k: usize, i: usize) -> Result<FiniteDist> {
        if i >= k {
            return Err(Error::OutOfRange { what: "dirac index", value: i as f64 });
        }
        let mut p = vec![0.0; k];
        p[i] = 1.0;
        Ok(FiniteDist { probs: p, labels: None })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn is_dirac(&self) -> bool {
        self.support().len() == 1
    }

    /// Largest value of `-log P(x)` over atoms of positive mass.
    pub fn alpha_max(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p.ln())
            .fold(0.0, f64::max)
    }

    /// Mass of a subset given as a membership mask.
    pub fn mass_of(&self, members: &[bool]) -> f64 {
        self.probs.iter().zip(members).filter(|(_, &m)| m).map(|(p, _)| p).sum()
    }

    /// Support containment `self << other`.
    pub fn abs_cont(&self, other: &FiniteDist) -> bool {
        self.probs.iter().zip(&other.probs).all(|(&q, &p)| q == 0.0 || p > 0.0)
    }

    pub(crate) fn check_same(&self, other: &FiniteDist) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::AlphabetMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }
}

impl JointDist {
    /// Validates a row-major matrix given as rows.
    pub fn new(rows: &[Vec<f64>]) -> Result<JointDist> {
        let nx = rows.len();
        if nx == 0 {
            return Err(Error::Empty);
        }
        let ny = rows[0].len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != ny {
                return Err(Error::Ragged { row, len: r.len(), expected: ny });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(JointDist { nx, ny, probs: validate_entries(&flat)?, x_labels: None, y_labels: None })
    }

    /// Validates a flat row-major matrix of shape `nx x ny`.
    pub fn from_flat(nx: usize, ny: usize, flat: &[f64]) -> Result<JointDist> {
        if flat.len() != nx * ny {
            return Err(Error::AlphabetMismatch { left: nx * ny, right: flat.len() });
        }
        Ok(JointDist { nx, ny, probs: validate_entries(flat)?, x_labels: None, y_labels: None })
    }

    /// Product distribution `px (x) py`.
    pub fn product(px: &FiniteDist, py: &FiniteDist) -> JointDist {
        let mut probs = Vec::with_capacity(px.len() * py.len());
        for &a in px.probs() {
            for &b in py.probs() {
                probs.push(a * b);
            }
        }
        JointDist { nx: px.len(), ny: py.len(), probs, x_labels: None, y_labels: None }
    }

    /// Doubly symmetric binary distribution with correlation `rho`.
    pub fn dsbs(rho: f64) -> Result<JointDist> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::OutOfRange { what: "rho", value: rho });
        }
        let d = (1.0 + rho) / 4.0;
        let o = (1.0 - rho) / 4.0;
        JointDist::new(&[vec![d, o], vec![o, d]])
    }

    pub fn with_labels(mut self, x: Option<Vec<String>>, y: Option<Vec<String>>) -> Result<JointDist> {
        if let Some(l) = &x {
            if l.len() != self.nx {
                return Err(Error::AlphabetMismatch { left: self.nx, right: l.len() });
            }
        }
        if let Some(l) = &y {
            if l.len() != self.ny {
                return Err(Error::AlphabetMismatch { left: self.ny, right: l.len() });
            }
        }
        self.x_labels = x;
        self.y_labels = y;
        Ok(self)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Row-major entries.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.ny).map(|r| r.to_vec()).collect()
    }

    pub fn x_labels(&self) -> Option<&[String]> {
        self.x_labels.as_deref()
    }

    pub fn y_labels(&self) -> Option<&[String]> {
        self.y_labels.as_deref()
    }

    /// Row and column sums.
    pub fn marginals(&self) -> (FiniteDist, FiniteDist) {
        let mut px = vec![0.0; self.nx];
        let mut py = vec![0.0; self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                let v = self.get(x, y);
                px[x] += v;
                py[y] += v;
            }
        }
        (FiniteDist { probs: px, labels: self.x_labels.clone() }, FiniteDist { probs: py, labels: self.y_labels.clone() })
    }

    /// Swaps the roles of `X` and `Y`.
    pub fn transpose(&self) -> JointDist {
        let mut probs = vec![0.0; self.probs.len()];
        for x in 0..self.nx {
            for y in 0..self.ny {
                probs[y * self.nx + x] = self.get(x, y);
            }
        }
        JointDist { nx: self.ny, ny: self.nx, probs, x_labels: self.y_labels.clone(), y_labels: self.x_labels.clone() }
    }

    /// True when both alphabets have two letters.
    pub fn is_binary(&self) -> bool {
        self.nx == 2 && self.ny == 2
    }
}

/// Distribution input accepted from JSON: either a joint matrix or a single vector.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistInput {
    Joint {
        pxy: Vec<Vec<f64>>,
        #[serde(default)]
        x_labels: Option<Vec<String>>,
        #[serde(default)]
        y_labels: Option<Vec<String>>,
    },
    Marginal {
        p: Vec<f64>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
}

/// A validated distribution of either shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    Joint(JointDist),
    Marginal(FiniteDist),
}

impl DistInput {
    pub fn validate(self) -> Result<Dist> {
        match self {
            DistInput::Joint { pxy, x_labels, y_labels } => {
                Ok(Dist::Joint(JointDist::new(&pxy)?.with_labels(x_labels, y_labels)?))
            }
            DistInput::Marginal { p, labels } => {
                let d = FiniteDist::new(&p)?;
                Ok(Dist::Marginal(match labels {
                    Some(l) => d.with_labels(l)?,
                    None => d,
                }))
            }
        }
    }
}

/// Parses and validates distribution JSON.
pub fn parse_dist_json(text: &str) -> Result<Dist> {
    let input: DistInput =
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("distribution JSON: {e}")))?;
    input.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_examples() {
        let u = FiniteDist::new(&[0.5, 0.5]).unwrap();
        assert_eq!(u.probs(), &[0.5, 0.5]);
        let j = JointDist::new(&[vec![0.475, 0.025], vec![0.025, 0.475]]).unwrap();
        let k = JointDist::dsbs(0.9).unwrap();
        for (a, b) in j.probs().iter().zip(k.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(FiniteDist::new(&[0.6, 0.5]), Err(Error::MassMismatch { .. })));
        assert!(matches!(FiniteDist::new(&[1.1, -0.1]), Err(Error::NegativeMass { .. })));
        assert!(matches!(FiniteDist::new(&[f64::NAN, 1.0]), Err(Error::NonFinite { .. })));
        let r = FiniteDist::new(&[0.5, 0.5 + 5e-10]).unwrap();
        assert!((r.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_examples() {
        let (px, py) = JointDist::dsbs(0.9).unwrap().marginals();
        assert!((px.probs()[0] - 0.5).abs() < 1e-15 && (py.probs()[1] - 0.5).abs() < 1e-15);
        let (px, py) = JointDist::new(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap().marginals();
        assert!((px.probs()[0] - 0.5).abs() < 1e-15 && (px.probs()[1] - 0.5).abs() < 1e-15);
        assert!((py.probs()[0] - 0.3).abs() < 1e-15 && (py.probs()[1] - 0.7).abs() < 1e-15);
        let (px, py) = JointDist::new(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap().marginals();
        assert_eq!(px.probs(), &[1.0, 0.0]);
        assert_eq!(py.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn alpha_max_examples() {
        assert!((FiniteDist::uniform(2).unwrap().alpha_max() - 2f64.ln()).abs() < 1e-15);
        assert!((FiniteDist::new(&[0.9, 0.1]).unwrap().alpha_max() - 2.302585).abs() < 1e-6);
        assert_eq!(FiniteDist::new(&[1.0, 0.0]).unwrap().alpha_max(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let d = parse_dist_json(r#"{"pxy": [[0.475,0.025],[0.025,0.475]], "x_labels": ["a","b"]}"#).unwrap();
        match d {
            Dist::Joint(j) => assert_eq!(j.x_labels().unwrap()[1], "b"),
            _ => panic!("expected joint"),
        }
        assert!(matches!(parse_dist_json(r#"{"p": [0.25, 0.75]}"#).unwrap(), Dist::Marginal(_)));
        assert!(parse_dist_json(r#"{"p": [0.25, 0.25]}"#).is_err());
    }

    #[test]
    fn transpose_swaps_marginals() {
        let j = JointDist::new(&[vec![0.2, 0.3, 0.1], vec![0.1, 0.2, 0.1]]).unwrap();
        let t = j.transpose();
        assert_eq!(j.marginals().0.probs(), t.marginals().1.probs());
        assert_eq!(t.get(2, 1), j.get(1, 2));
    }
}
