//! Properties of annihilators, reductions and their interaction with
//! subordinate structures.

mod common;

use std::sync::Arc;

use common::*;
use nambu_core::coeffs::int;
use nambu_core::exterior::{interior, pair};
use nambu_core::reduction::{
    ann1, ann_top, check_sharp_range, constant_vector, falsify_canonicity, reduce, subordinate, Canonicity, ReducedStructure, ReductionProblem, SharpTarget, Subbundle,
    Submanifold,
};
use nambu_core::{Chart, Form, MultiIndex, Multivector, NambuStructure, Rational, RationalFunction};
use proptest::prelude::*;

const CASES: u32 = 16;

fn c4() -> Arc<Chart> {
    chart(&["x", "y", "z", "w"])
}

fn rational_rows(m: usize, rows: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    prop::collection::vec(prop::collection::vec(-2i64..=2, m), rows).prop_map(|rs| rs.into_iter().map(|r| r.into_iter().map(int).collect()).collect())
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A reducible configuration: `f ∂_a∧∂_b∧∂_c` with `N` a graph over the
/// remaining coordinate `s` and `E = ℝ∂_s`.
#[derive(Debug, Clone)]
struct GraphCase {
    pi: NambuStructure,
    n_sub: Submanifold,
    e: Subbundle,
    s: usize,
}

fn graph_case() -> impl Strategy<Value = GraphCase> {
    (0usize..4, poly(4, 3, 2), prop::collection::vec(-2i64..=2, 4)).prop_map(|(s, f, slope)| {
        let c = c4();
        let rest: Vec<usize> = (0..4).filter(|&i| i != s).collect();
        let pi = NambuStructure::new(Multivector::basis(&c, MultiIndex::new(&rest).unwrap()).scale(&RationalFunction::from_poly(f))).unwrap();
        // x_s = Σ slope_i x_i + slope_s
        let mut l = c.coordinate(s);
        for &i in &rest {
            l = &l - &c.coordinate(i).scale(&int(slope[i]));
        }
        l = &l - &RationalFunction::from_int(slope[s], c.nvars());
        let n_sub = Submanifold::from_functions(&c, &[l]).unwrap();
        let e = Subbundle::from_vectors(&c, &[Multivector::coordinate(&c, s)]).unwrap();
        GraphCase { pi, n_sub, e, s }
    })
}

fn reduce_case(case: &GraphCase, pi: &NambuStructure) -> ReducedStructure {
    let prob = ReductionProblem::new(pi.clone(), case.n_sub.clone(), case.e.clone()).unwrap();
    reduce(&prob).unwrap()
}

/// Lifts a quotient function to `M` through the adapted chart.
fn lift(r: &ReducedStructure, f: &RationalFunction, original: &Arc<Chart>) -> RationalFunction {
    r.adaptation.lift_form(&Form::scalar(r.quotient_chart(), f.clone()), original).unwrap().as_scalar()
}

proptest! {
    #![proptest_config(cases(CASES))]

    #[test]
    fn ann1_satisfies_its_defining_conditions(rows in rational_rows(4, 2), n in 2usize..=4) {
        let c = c4();
        let Ok(e) = Subbundle::from_rational(&c, rows) else { return Ok(()) };
        let basis = ann1(&e, n);
        prop_assert_eq!(basis.len(), binomial(4 - e.rank(), n - 1));
        for eta in &basis {
            for v in e.vectors() {
                prop_assert!(interior(&v, eta).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn ann_top_satisfies_its_defining_conditions(rows in rational_rows(4, 2), offsets in prop::collection::vec(-3i64..=3, 2), n in 2usize..=4) {
        let c = c4();
        let constraints: Vec<(Vec<Rational>, Rational)> = rows.into_iter().zip(offsets.into_iter().map(int)).collect();
        let Ok(n_sub) = Submanifold::new(&c, constraints) else { return Ok(()) };
        let basis = ann_top(&n_sub, n);
        let k = n - 1;
        prop_assert_eq!(basis.len(), binomial(4, k) - binomial(n_sub.dim(), k));
        let tangent: Vec<Multivector> = n_sub.tangent_basis().iter().map(|t| constant_vector(&c, t)).collect();
        for eta in &basis {
            for sel in MultiIndex::all(tangent.len(), k) {
                let items: Vec<Multivector> = sel.indices().map(|i| tangent[i].clone()).collect();
                let w = Multivector::wedge_all(&c, &items).unwrap();
                prop_assert!(pair(eta, &w).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn reductions_pass_fi_and_are_pi_related(case in graph_case()) {
        let c = c4();
        let r = reduce_case(&case, &case.pi);
        prop_assert!(r.tensor.check_fi().is_verified());
        let qc = r.quotient_chart().clone();
        for i in MultiIndex::all(qc.dim(), 2) {
            let eta_q = Form::basis(&qc, i);
            let eta = r.adaptation.lift_form(&eta_q, &c).unwrap();
            for v in case.e.vectors() {
                prop_assert!(interior(&v, &eta).unwrap().is_zero());
            }
            let upstairs = case.n_sub.restrict_tensor(&case.pi.sharp(&eta).unwrap()).unwrap();
            let projected = r.adaptation.project_vector(&upstairs).unwrap().unwrap();
            prop_assert_eq!(projected, r.tensor.sharp(&eta_q).unwrap());
        }
    }

    #[test]
    fn subordinate_commutes_with_reduction(case in graph_case(), fq in poly(3, 2, 2)) {
        let c = c4();
        let r = reduce_case(&case, &case.pi);
        let fq = RationalFunction::from_poly(fq);
        let f = lift(&r, &fq, &c);
        prop_assert!(!f.depends_on(case.s));
        let sub_then_reduce = reduce_case(&case, &subordinate(&case.pi, std::slice::from_ref(&f)).unwrap());
        let reduce_then_sub = subordinate(&r.tensor, &[fq]).unwrap();
        prop_assert_eq!(sub_then_reduce.tensor.tensor(), reduce_then_sub.tensor());
    }

    #[test]
    fn reduced_brackets_ignore_the_extension(case in graph_case(), fs in prop::collection::vec(poly(3, 2, 2), 3), h in poly(4, 2, 1)) {
        let c = c4();
        let r = reduce_case(&case, &case.pi);
        let fq: Vec<RationalFunction> = fs.into_iter().map(RationalFunction::from_poly).collect();
        let plain: Vec<RationalFunction> = fq.iter().map(|f| lift(&r, f, &c)).collect();
        // add ℓ²·h, which vanishes on N together with its differential
        let l = case.n_sub.constraint_function(0);
        let bump = &(&l * &l) * &RationalFunction::from_poly(h);
        let mut bumped = plain.clone();
        bumped[0] = &bumped[0] + &bump;
        let a = case.n_sub.restrict(&case.pi.bracket(&plain).unwrap()).unwrap();
        let b = case.n_sub.restrict(&case.pi.bracket(&bumped).unwrap()).unwrap();
        prop_assert_eq!(&a, &b);
        let reduced = lift(&r, &r.tensor.bracket(&fq).unwrap(), &c);
        prop_assert_eq!(case.n_sub.restrict(&reduced).unwrap(), a);
    }
}

/// No counterexample to canonicity up to degree 2 with `E ≠ 0` is expected
/// to force `Π♯(Ann^{n−1}TN) ⊆ TN`. Violations are reported, not asserted.
#[test]
fn canonicity_and_tangent_range_log() {
    let c = c4();
    let mut suspects = Vec::new();
    let mut checked = 0;
    let structures = [
        Multivector::basis(&c, MultiIndex::new(&[0, 1, 2]).unwrap()).scale(&c.coordinate(3)),
        Multivector::basis(&c, MultiIndex::new(&[0, 1, 2]).unwrap()),
        Multivector::basis(&c, MultiIndex::new(&[0, 1, 3]).unwrap()).scale(&c.coordinate(2)),
        Multivector::basis(&c, MultiIndex::new(&[1, 2, 3]).unwrap()).scale(&(&c.coordinate(0) + &c.one())),
    ];
    for p in structures {
        let pi = NambuStructure::new(p).unwrap();
        for hyper in 0..4 {
            let n_sub = Submanifold::from_functions(&c, &[c.coordinate(hyper)]).unwrap();
            for dir in 0..4 {
                let e = Subbundle::from_vectors(&c, &[Multivector::coordinate(&c, dir)]).unwrap();
                let Ok(prob) = ReductionProblem::new(pi.clone(), n_sub.clone(), e.clone()) else { continue };
                if falsify_canonicity(&pi, &e, Some(&n_sub), 2).unwrap() != Canonicity::UpToBound {
                    continue;
                }
                checked += 1;
                if !check_sharp_range(&prob, SharpTarget::Tangent).unwrap().holds {
                    suspects.push(format!("{} on x{hyper} = 0 with E = D{dir}", pi.tensor()));
                }
            }
        }
    }
    for s in &suspects {
        eprintln!("suspected counterexample to the degree bound: {s}");
    }
    eprintln!("canonicity/tangent-range: {checked} configurations, {} suspects", suspects.len());
    assert!(checked > 0);
}
