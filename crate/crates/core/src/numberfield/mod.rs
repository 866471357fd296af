//! Exact arithmetic in `Q(λ)` and the Minkowski embedding of `Z[λ]`.

pub mod embedding;
pub mod field;
pub mod poly;
pub mod snf;

pub use embedding::{minimal_polynomial, minimal_polynomial_of, EmbeddingData, WaveVector};
pub use field::{FieldElement, NumberField};
pub use poly::IntPoly;
