use std::sync::Arc;

use elastocap_fem::kernels::{Order, ScalarKernel};
use elastocap_fem::{
    assemble, build_structured_mesh, BlockLayout, Configuration, CsrMatrix, Family, FunctionSpace, Kernel,
    LocalSystem, Rect, ReferenceTables, RefineBox, SparseSystem, Symmetry,
};
use proptest::prelude::*;

struct Combo<'a> {
    a: f64,
    k1: ScalarKernel<'a>,
    k2: ScalarKernel<'a>,
}

impl Kernel for Combo<'_> {
    fn local_dims(&self) -> (usize, usize) {
        self.k1.local_dims()
    }
    fn cell(&self, c: usize, l: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let mut l1 = LocalSystem::new(l.rows, l.cols, true);
        let mut l2 = LocalSystem::new(l.rows, l.cols, true);
        self.k1.cell(c, &mut l1)?;
        self.k2.cell(c, &mut l2)?;
        for i in 0..l.matrix.len() {
            l.matrix[i] = self.a * l1.matrix[i] + l2.matrix[i];
        }
        for i in 0..l.vector.len() {
            l.vector[i] = self.a * l1.vector[i] + l2.vector[i];
        }
        Ok(())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn assembly_is_linear_in_the_kernel(a in -3.0f64..3.0, c in 0.1f64..0.9) {
        let boxes = [RefineBox { region: Rect::new(0.0, c, 0.0, c), levels: 2 }];
        let m = Arc::new(build_structured_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), (2, 2), &boxes).unwrap());
        let s = Arc::new(FunctionSpace::new(m, Family::Scalar, 2).unwrap());
        let t = ReferenceTables::standard();
        let src = |p: [f64; 2]| p[0] - p[1] * p[1];
        let mk = |mass: f64, stiff: f64, with_src: bool| ScalarKernel {
            config: Configuration::reference(&s),
            tables: &t,
            symmetry: Symmetry::Axisymmetric,
            order: Order::Biquadratic,
            mass,
            stiffness: stiff,
            source: if with_src { Some(&src) } else { None },
            state: None,
        };
        let l = BlockLayout::single(s.clone());
        let s1 = assemble(&mk(1.0, 0.0, true), &l, &l).unwrap();
        let s2 = assemble(&mk(0.0, 1.0, false), &l, &l).unwrap();
        let sc = assemble(&Combo { a, k1: mk(1.0, 0.0, true), k2: mk(0.0, 1.0, false) }, &l, &l).unwrap();
        let scale = sc.matrix.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..sc.matrix.values.len() {
            let lin = a * s1.matrix.values[k] + s2.matrix.values[k];
            prop_assert!((sc.matrix.values[k] - lin).abs() <= 1e-12 * scale);
        }
        for k in 0..sc.rhs.len() {
            prop_assert!((sc.rhs[k] - a * s1.rhs[k] - s2.rhs[k]).abs() <= 1e-12 * (1.0 + s1.rhs[k].abs()));
        }
    }

    #[test]
    fn constraints_are_idempotent(vals in proptest::collection::vec(-5.0f64..5.0, 16), picks in proptest::collection::btree_set(0usize..4, 0..4)) {
        let a = CsrMatrix::from_dense(4, 4, &vals.iter().enumerate().map(|(i, v)| if i % 5 == 0 { v + 20.0 } else { *v }).collect::<Vec<_>>());
        let mut s = SparseSystem::new(a, vec![1.0, 2.0, 3.0, 4.0]);
        for p in picks {
            s.constrain(p, p as f64 * 0.5);
        }
        s.apply_constraints();
        let once = s.clone();
        s.apply_constraints();
        prop_assert_eq!(once, s);
    }
}
