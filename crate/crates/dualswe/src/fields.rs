//! Discrete field containers, one per mesh location.
//!
//! A scalar field lives at primal cell centers ([`CellField`]), at dual
//! cell centers ([`VertexField`]), or at edges. Discrete vector fields
//! carry a single component per edge: either the component along the
//! primal-edge normal n_e ([`NormalEdgeField`]) or along the tangent
//! t_e = k×n_e ([`TangentialEdgeField`]). Direction-free edge scalars
//! (edge-averaged thickness, potential vorticity, ...) use [`EdgeField`].
//!
//! The containers are plain `Vec<f64>` newtypes; all mesh-aware work is
//! done by the operators in [`crate::ops`].

macro_rules! field_container {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            pub values: Vec<f64>,
        }

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self { values }
            }

            pub fn zeros(len: usize) -> Self {
                Self { values: vec![0.0; len] }
            }

            pub fn constant(value: f64, len: usize) -> Self {
                Self { values: vec![value; len] }
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            /// Builds a field by evaluating `f` at each index.
            pub fn from_fn(len: usize, f: impl FnMut(usize) -> f64) -> Self {
                Self { values: (0..len).map(f).collect() }
            }

            /// Componentwise combination with another field of the same kind.
            pub fn zip_with(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Self {
                debug_assert_eq!(self.len(), other.len());
                Self {
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(&a, &b)| f(a, b))
                        .collect(),
                }
            }

            pub fn map(&self, f: impl FnMut(&f64) -> f64) -> Self {
                Self { values: self.values.iter().map(f).collect() }
            }

            pub fn scale(&self, s: f64) -> Self {
                self.map(|v| s * v)
            }

            pub fn add(&self, other: &Self) -> Self {
                self.zip_with(other, |a, b| a + b)
            }

            pub fn sub(&self, other: &Self) -> Self {
                self.zip_with(other, |a, b| a - b)
            }

            /// self + s * other.
            pub fn axpy(&self, s: f64, other: &Self) -> Self {
                self.zip_with(other, |a, b| a + s * b)
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }
        }
    };
}

field_container!(
    /// Scalar per primal cell; length N_c + N_cb.
    CellField
);
field_container!(
    /// Scalar per dual cell (vertex); length N_v.
    VertexField
);
field_container!(
    /// n_e component of a vector field, one value per edge pair.
    NormalEdgeField
);
field_container!(
    /// t_e component of a vector field, one value per edge pair.
    TangentialEdgeField
);
field_container!(
    /// Direction-free scalar per edge pair.
    EdgeField
);

impl EdgeField {
    /// Componentwise reciprocal. Caller guarantees nonzero entries.
    pub fn recip(&self) -> Self {
        self.map(|v| 1.0 / v)
    }
}

impl NormalEdgeField {
    /// Componentwise scaling by an edge scalar (e.g. q̂ u).
    pub fn scaled_by(&self, s: &EdgeField) -> Self {
        debug_assert_eq!(self.len(), s.len());
        Self::from_fn(self.len(), |e| self.values[e] * s.values[e])
    }

    /// Per-edge product of two normal components, e.g. ∇⊥ψ̃ · ∇χ.
    pub fn dot_per_edge(&self, other: &Self) -> EdgeField {
        debug_assert_eq!(self.len(), other.len());
        EdgeField::from_fn(self.len(), |e| self.values[e] * other.values[e])
    }
}

impl TangentialEdgeField {
    pub fn scaled_by(&self, s: &EdgeField) -> Self {
        debug_assert_eq!(self.len(), s.len());
        Self::from_fn(self.len(), |e| self.values[e] * s.values[e])
    }

    pub fn dot_per_edge(&self, other: &Self) -> EdgeField {
        debug_assert_eq!(self.len(), other.len());
        EdgeField::from_fn(self.len(), |e| self.values[e] * other.values[e])
    }
}
