//! Scenes shared by the benchmarks in `benches/`.

use divpair::geometry::FinitePerimeterSet;
use divpair::scenes::{BVFunction, DMField, JumpTerm};
use divpair::{Poly2, Vec2, VecPoly};

pub fn unit_disc() -> FinitePerimeterSet {
    FinitePerimeterSet::disc(Vec2::ZERO, 1.0).unwrap()
}

/// `a χ_B` on the unit disc `B`.
pub fn disc_field(a: Vec2) -> DMField {
    DMField::new(VecPoly::zero(), vec![JumpTerm::constant(a, unit_disc())]).unwrap()
}

/// Polynomial field with a constant jump across the unit circle.
pub fn jump_field() -> DMField {
    DMField::new(
        VecPoly::new(
            Poly2::from_terms(&[(0, 1, 0.5)]),
            Poly2::from_terms(&[(1, 0, -0.3), (0, 0, 0.2)]),
        ),
        vec![JumpTerm::constant(Vec2::new(0.4, 1.0), unit_disc())],
    )
    .unwrap()
}

/// `1 + x₁/2` on the unit disc.
pub fn affine_on_disc() -> BVFunction {
    BVFunction::polynomial_on(unit_disc(), Poly2::from_terms(&[(0, 0, 1.0), (1, 0, 0.5)])).unwrap()
}
