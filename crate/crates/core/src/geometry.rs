//! Axis-parallel boxes and diagonal affine maps.
//!
//! A box is stored by its lower and upper corner. Upper coordinates below the
//! lower ones are allowed and denote an empty box; volumes clamp such sides
//! to zero.

/// Floor applied to the denominator of [`disjoint_measure`].
pub const VOLUME_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch(lower.len(), upper.len()));
        }
        Ok(AxisBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn side(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn sides(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo)
    }

    /// True if every point of `self` lies in `other` (empty boxes are inside
    /// everything).
    pub fn is_within(&self, other: &AxisBox) -> bool {
        volume(self) == 0.0
            || self
                .lower
                .iter()
                .zip(&self.upper)
                .zip(other.lower.iter().zip(&other.upper))
                .all(|((lo, hi), (olo, ohi))| lo >= olo && hi <= ohi)
    }
}

/// Smooth replacement for `max(0, x)`: `t·ln(1 + e^{x/t})`.
pub fn softplus(x: f64, temperature: f64) -> f64 {
    let z = x / temperature;
    if z > 0.0 {
        x + temperature * (-z).exp().ln_1p()
    } else {
        temperature * z.exp().ln_1p()
    }
}

/// Derivative of [`softplus`] with respect to `x`, the logistic function of `x/t`.
pub fn softplus_slope(x: f64, temperature: f64) -> f64 {
    let z = x / temperature;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// How side lengths are turned into volumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeKind {
    /// Product of clamped side lengths.
    Hard,
    /// Product of softplus side lengths at the given temperature.
    Softplus(f64),
}

impl VolumeKind {
    pub fn side(self, x: f64) -> f64 {
        match self {
            VolumeKind::Hard => x.max(0.0),
            VolumeKind::Softplus(t) => softplus(x, t),
        }
    }

    /// Derivative of [`VolumeKind::side`]; zero at the hard kink.
    pub fn side_slope(self, x: f64) -> f64 {
        match self {
            VolumeKind::Hard => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            VolumeKind::Softplus(t) => softplus_slope(x, t),
        }
    }

    pub fn volume(self, b: &AxisBox) -> f64 {
        b.sides().map(|s| self.side(s)).product()
    }
}

pub fn volume(b: &AxisBox) -> f64 {
    VolumeKind::Hard.volume(b)
}

pub fn softplus_volume(b: &AxisBox, temperature: f64) -> f64 {
    VolumeKind::Softplus(temperature).volume(b)
}

pub fn intersect(a: &AxisBox, b: &AxisBox) -> Result<AxisBox, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(AxisBox {
        lower: a.lower.iter().zip(&b.lower).map(|(x, y)| x.max(*y)).collect(),
        upper: a.upper.iter().zip(&b.upper).map(|(x, y)| x.min(*y)).collect(),
    })
}

/// `1 − vol(a ∩ b) / vol(a)`, with the denominator floored at [`VOLUME_FLOOR`].
pub fn disjoint_measure(
    a: &AxisBox,
    b: &AxisBox,
    vol: impl Fn(&AxisBox) -> f64,
) -> Result<f64, GeometryError> {
    let meet = intersect(a, b)?;
    let ratio = vol(&meet) / vol(a).max(VOLUME_FLOOR);
    Ok((1.0 - ratio).clamp(0.0, 1.0))
}

/// `x ↦ diag·x + offset` with a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    diag: Vec<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    /// Panics if the lengths differ or a diagonal entry is not positive.
    pub fn new(diag: Vec<f64>, offset: Vec<f64>) -> Self {
        assert_eq!(diag.len(), offset.len(), "diag and offset must have equal length");
        assert!(
            diag.iter().all(|d| *d > 0.0 && d.is_finite()),
            "affine diagonal must be strictly positive"
        );
        AffineMap { diag, offset }
    }

    pub fn identity(dim: usize) -> Self {
        AffineMap {
            diag: vec![1.0; dim],
            offset: vec![0.0; dim],
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.diag)
            .zip(&self.offset)
            .map(|((x, d), b)| d * x + b)
            .collect()
    }
}

/// Image of `b` under `f`; corners map to corners because the diagonal is positive.
pub fn apply_affine(f: &AffineMap, b: &AxisBox) -> AxisBox {
    AxisBox {
        lower: f.apply_point(&b.lower),
        upper: f.apply_point(&b.upper),
    }
}

/// `x ↦ diag⁻¹·(x − offset)`.
pub fn invert_affine(f: &AffineMap) -> AffineMap {
    AffineMap {
        diag: f.diag.iter().map(|d| 1.0 / d).collect(),
        offset: f.offset.iter().zip(&f.diag).map(|(b, d)| -b / d).collect(),
    }
}
