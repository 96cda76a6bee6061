//! Gauge transformations of Nambu structures by closed `n`-forms.

use std::sync::Arc;

use rayon::prelude::*;

use crate::calculus::{exterior_d, lie_derivative_form};
use crate::chart::{same_chart, Chart};
use crate::coeffs::{MultiPoly, Rational, RationalFunction};
use crate::error::{Error, Result};
use crate::exterior::{interior, Form, MultiIndex, Multivector};
use crate::linalg::{rank_of, Matrix};
use crate::nambu::NambuStructure;
use crate::reduction::{constant_vector, reduce, CheckOutcome, ReducedStructure, ReductionProblem, Route};

/// `B̃(X) = i_X B`.
pub fn btilde(b: &Form, x: &Multivector) -> Result<Form> {
    interior(x, b)
}

/// `Id + B̃∘Π♯` on `Λ^{n−1}T*M` in the basis `dx^I`, with its determinant,
/// inverse and the transported structure.
#[derive(Clone, Debug)]
pub struct GaugeData {
    pub b: Form,
    pub basis: Vec<MultiIndex>,
    pub matrix: Matrix<RationalFunction>,
    pub det: RationalFunction,
    pub inverse: Option<Matrix<RationalFunction>>,
    pub transported: Option<NambuStructure>,
}

impl GaugeData {
    /// Numerator of the determinant: the transport is valid off its zeros.
    pub fn vanishing_locus(&self) -> &MultiPoly {
        self.det.numer()
    }

    fn form_to_vec(&self, omega: &Form) -> Vec<RationalFunction> {
        self.basis.iter().map(|i| omega.coeff(i)).collect()
    }

    fn vec_to_form(&self, chart: &Arc<Chart>, v: Vec<RationalFunction>) -> Form {
        Form::from_terms(chart, self.basis.first().map_or(0, MultiIndex::len), self.basis.iter().cloned().zip(v))
    }

    /// `(Id + B̃∘Π♯) ω`.
    pub fn apply(&self, omega: &Form) -> Form {
        let v = self.matrix.mul_vec(&self.form_to_vec(omega));
        self.vec_to_form(omega.chart(), v)
    }

    /// `(Id + B̃∘Π♯)⁻¹ ω`.
    pub fn apply_inverse(&self, omega: &Form) -> Option<Form> {
        let inv = self.inverse.as_ref()?;
        Some(self.vec_to_form(omega.chart(), inv.mul_vec(&self.form_to_vec(omega))))
    }
}

fn check_closed(pi: &NambuStructure, b: &Form) -> Result<()> {
    same_chart(pi.chart(), b.chart())?;
    if b.degree() != pi.order() {
        return Err(Error::DegreeMismatch(format!("gauge form must have degree {}, got {}", pi.order(), b.degree())));
    }
    if !exterior_d(b).is_zero() {
        return Err(Error::NotClosed);
    }
    Ok(())
}

/// Builds `Id + B̃∘Π♯`; errors when `B` is not closed or the map is
/// singular as a matrix over the rational-function field.
pub fn gauge_matrix(pi: &NambuStructure, b: &Form) -> Result<GaugeData> {
    check_closed(pi, b)?;
    let chart = pi.chart();
    let basis = MultiIndex::all(chart.dim(), pi.order() - 1);
    let k = basis.len();
    let mut matrix = Matrix::identity(k, chart.zero());
    for (col, i) in basis.iter().enumerate() {
        let image = btilde(b, &pi.sharp(&Form::basis(chart, i.clone()))?)?;
        for (row, j) in basis.iter().enumerate() {
            let c = image.coeff(j);
            if !c.is_zero() {
                matrix[(row, col)] = &matrix[(row, col)] + &c;
            }
        }
    }
    let det = matrix.determinant();
    if det.is_zero() {
        return Err(Error::SingularEverywhere);
    }
    let inverse = matrix.inverse();
    Ok(GaugeData { b: b.clone(), basis, matrix, det, inverse, transported: None })
}

/// `T_B(Π)` with `T_B(Π)♯ = Π♯∘(Id + B̃∘Π♯)⁻¹`; skew-symmetry of the result
/// is verified, never imposed.
pub fn gauge_transform(pi: &NambuStructure, b: &Form) -> Result<GaugeData> {
    let mut data = gauge_matrix(pi, b)?;
    let chart = pi.chart().clone();
    let n = pi.order();
    let inv = data.inverse.as_ref().ok_or(Error::SingularEverywhere)?;
    let sharps: Vec<Multivector> = data.basis.iter().map(|i| pi.sharp(&Form::basis(&chart, i.clone()))).collect::<Result<_>>()?;
    // V_K = T♯(dx^K) = Σ_I (M⁻¹)_{I K} Π♯(dx^I).
    let images: Vec<Multivector> = (0..data.basis.len())
        .map(|k| {
            let mut acc = Multivector::zero(&chart, 1);
            for (i, s) in sharps.iter().enumerate() {
                let c = &inv[(i, k)];
                if !c.is_zero() && !s.is_zero() {
                    acc = &acc + &s.scale(c);
                }
            }
            acc
        })
        .collect();
    let mut terms = Vec::new();
    for j in MultiIndex::all(chart.dim(), n) {
        let last = j.get(n - 1);
        let head = j.without_pos(n - 1);
        let k = data.basis.iter().position(|b| *b == head).expect("basis is complete");
        terms.push((j, images[k].coeff(&MultiIndex::single(last))));
    }
    let tensor = Multivector::from_terms(&chart, n, terms);
    for (k, head) in data.basis.iter().enumerate() {
        for j in 0..chart.dim() {
            let got = images[k].coeff(&MultiIndex::single(j));
            let mut full = head.to_vec();
            full.push(j);
            if got != tensor.coeff_at(&full) {
                return Err(Error::SkewSymmetryViolated);
            }
        }
    }
    data.transported = Some(NambuStructure::new(tensor)?);
    Ok(data)
}

/// Outcome of a comparison of characteristic distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicMatch {
    pub matched: bool,
    pub points_used: usize,
    pub first_mismatch: Option<Vec<Rational>>,
}

fn sharp_span_at(pi: &NambuStructure, point: &[Rational]) -> Option<Vec<Vec<Rational>>> {
    let chart = pi.chart();
    let m = chart.dim();
    let mut rows = Vec::new();
    for i in MultiIndex::all(m, pi.order() - 1) {
        let v = pi.sharp(&Form::basis(chart, i)).ok()?;
        let vals = v.evaluate(point).ok()?;
        rows.push((0..m).map(|j| vals.get(&MultiIndex::single(j)).cloned().unwrap_or_default()).collect());
    }
    Some(rows)
}

/// Compares the spans of `Π♯` and `Π'♯` at the given points; points where
/// either side has a pole are skipped.
pub fn check_characteristic_match(a: &NambuStructure, b: &NambuStructure, points: &[Vec<Rational>]) -> Result<CharacteristicMatch> {
    same_chart(a.chart(), b.chart())?;
    if a.order() != b.order() {
        return Err(Error::DegreeMismatch("structures of different orders".into()));
    }
    let m = a.chart().dim();
    let mut used = 0;
    for p in points {
        let (Some(sa), Some(sb)) = (sharp_span_at(a, p), sharp_span_at(b, p)) else { continue };
        used += 1;
        let ra = rank_of(&sa, m);
        let rb = rank_of(&sb, m);
        let mut both = sa.clone();
        both.extend(sb);
        if ra != rb || rank_of(&both, m) != ra {
            return Ok(CharacteristicMatch { matched: false, points_used: used, first_mismatch: Some(p.clone()) });
        }
    }
    Ok(CharacteristicMatch { matched: true, points_used: used, first_mismatch: None })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsoCheck {
    pub holds: bool,
    /// First failing pair of basis forms and the failing identity.
    pub witness: Option<(Form, Form, String)>,
}

/// Checks that `Id + B̃∘Π♯` intertwines anchors and Leibniz brackets of `Π`
/// and `T_B(Π)` on every pair of basis forms.
pub fn check_leibniz_iso(pi: &NambuStructure, b: &Form) -> Result<IsoCheck> {
    let data = gauge_transform(pi, b)?;
    let t = data.transported.as_ref().expect("transported");
    let chart = pi.chart();
    let forms: Vec<Form> = data.basis.iter().map(|i| Form::basis(chart, i.clone())).collect();
    for a in &forms {
        if pi.sharp(a)? != t.sharp(&data.apply(a))? {
            return Ok(IsoCheck { holds: false, witness: Some((a.clone(), a.clone(), "anchor".into())) });
        }
    }
    let pairs: Vec<(usize, usize)> = (0..forms.len()).flat_map(|i| (0..forms.len()).map(move |j| (i, j))).collect();
    let bad = pairs.par_iter().find_map_first(|&(i, j)| {
        let (a, bb) = (&forms[i], &forms[j]);
        let lhs = t.leibniz_bracket(&data.apply(a), &data.apply(bb)).expect("degrees");
        let rhs = data.apply(&pi.leibniz_bracket(a, bb).expect("degrees"));
        (lhs != rhs).then(|| (a.clone(), bb.clone(), "bracket".to_string()))
    });
    Ok(IsoCheck { holds: bad.is_none(), witness: bad })
}

/// Both sides of the gauge/reduction square.
#[derive(Clone, Debug)]
pub struct Commutation {
    /// Whether the tangent-range route and hypotheses (a), (b) all hold.
    pub theorem_applies: bool,
    pub hypotheses: Vec<CheckOutcome>,
    pub projected_form: Form,
    /// `reduce(T_B(Π))`.
    pub gauge_then_reduce: ReducedStructure,
    /// `T_{B̄}(reduce(Π))`.
    pub reduce_then_gauge: NambuStructure,
    pub equal: bool,
}

/// Compares `reduce(T_B Π)` with `T_{B̄}(reduce Π)`.
///
/// Hypothesis (a) is `B̃(TN)|_N ⊆ Ann¹E`; (b) asks `B` to be basic for the
/// fibres: `(i_X B)|_N = (L_X B)|_N = 0` along an `F`-frame and the
/// surviving coefficients of `B|_N` depend on quotient coordinates only.
/// Failures of (a) or (b) are errors unless `force` is set; reducibility and
/// invertibility are always required.
pub fn gauge_reduce_commute(problem: &ReductionProblem, b: &Form, force: bool) -> Result<Commutation> {
    let pi = &problem.pi;
    check_closed(pi, b)?;
    let chart = pi.chart();
    let n_sub = &problem.submanifold;
    let e_vectors = problem.bundle.vectors();

    let mut a_witness = None;
    'outer: for t in n_sub.tangent_basis() {
        let v = constant_vector(chart, t);
        let eta = n_sub.restrict_tensor(&btilde(b, &v)?)?;
        for e in &e_vectors {
            if !interior(e, &eta)?.is_zero() {
                a_witness = Some(format!("B~({}) = {}", v.render(), eta.render()));
                break 'outer;
            }
        }
    }
    let hyp_a = CheckOutcome { name: "(a) B~(TN) in Ann1(E)".into(), passed: a_witness.is_none(), witness: a_witness };

    let mut b_witness = None;
    for x in problem.fibre().vectors() {
        let ix = n_sub.restrict_tensor(&interior(&x, b)?)?;
        let lx = n_sub.restrict_tensor(&lie_derivative_form(&x, b)?)?;
        if !ix.is_zero() || !lx.is_zero() {
            b_witness = Some(format!("fibre direction {}", x.render()));
            break;
        }
    }

    let reduced = reduce(problem)?;
    let ad = &reduced.adaptation;
    let projected = ad.project_form(b)?;
    if projected.is_none() && b_witness.is_none() {
        b_witness = Some("B|_N depends on fibre coordinates".into());
    }
    let hyp_b = CheckOutcome { name: "(b) B projects".into(), passed: b_witness.is_none(), witness: b_witness };

    let tangent_route = reduced.report.routes.iter().any(|r| r.route == Route::TangentRange && r.passed);
    let theorem_applies = tangent_route && hyp_a.passed && hyp_b.passed;
    if !force {
        for h in [&hyp_a, &hyp_b] {
            if !h.passed {
                return Err(Error::HypothesesFailed(format!("{} failed: {}", h.name, h.witness.clone().unwrap_or_default())));
            }
        }
    }
    let projected = projected.ok_or_else(|| Error::HypothesesFailed("(b) B does not project to the quotient".into()))?;

    let gauged = gauge_transform(pi, b).map_err(|e| match e {
        Error::SingularEverywhere => Error::HypothesesFailed("invertibility: Id + B~ o sharp is singular".into()),
        other => other,
    })?;
    let mut lifted = problem.clone();
    lifted.pi = gauged.transported.expect("transported");
    let path1 = reduce(&lifted)?;
    let path2 = gauge_transform(&reduced.tensor, &projected).map_err(|e| match e {
        Error::SingularEverywhere => Error::HypothesesFailed("invertibility on the quotient".into()),
        other => other,
    })?;
    let path2 = path2.transported.expect("transported");
    let equal = path1.tensor == path2;
    Ok(Commutation {
        theorem_applies,
        hypotheses: vec![hyp_a, hyp_b],
        projected_form: projected,
        gauge_then_reduce: path1,
        reduce_then_gauge: path2,
        equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::int;
    use crate::reduction::{Submanifold, Subbundle};

    fn idx(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    fn r3c() -> Arc<Chart> {
        Chart::new(["x", "y", "z"], ["c"]).unwrap()
    }

    fn unit(c: &Arc<Chart>) -> NambuStructure {
        NambuStructure::new(Multivector::basis(c, idx(&[0, 1, 2]))).unwrap()
    }

    #[test]
    fn btilde_examples() {
        let c = Chart::new(["x", "y", "z", "w"], ["b"]).unwrap();
        let b = Form::basis(&c, idx(&[0, 1, 2]));
        assert_eq!(btilde(&b, &Multivector::coordinate(&c, 0)).unwrap(), Form::basis(&c, idx(&[1, 2])));
        assert!(btilde(&b, &Multivector::coordinate(&c, 3)).unwrap().is_zero());
        let bb = b.scale(&RationalFunction::var(4, 5));
        assert_eq!(btilde(&bb, &Multivector::coordinate(&c, 1)).unwrap(), -Form::basis(&c, idx(&[0, 2])).scale(&RationalFunction::var(4, 5)));
    }

    #[test]
    fn zero_form_is_identity() {
        let c = r3c();
        let d = gauge_transform(&unit(&c), &Form::zero(&c, 3)).unwrap();
        assert!(d.matrix.is_identity());
        assert!(d.det.is_one());
        assert_eq!(d.transported.unwrap(), unit(&c));
    }

    #[test]
    fn constant_gauge() {
        let c = r3c();
        let cc = RationalFunction::var(3, 4);
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale(&cc);
        let d = gauge_transform(&unit(&c), &b).unwrap();
        let one_c = &c.one() + &cc;
        assert_eq!(d.det, one_c.pow(3));
        let expected = Multivector::basis(&c, idx(&[0, 1, 2])).scale(&one_c.inv().unwrap());
        assert_eq!(d.transported.as_ref().unwrap().tensor(), &expected);
        assert_eq!(d.transported.unwrap().tensor().render(), "1/(c + 1)*Dx^Dy^Dz");
    }

    #[test]
    fn coordinate_gauge_and_locus() {
        let c = r3c();
        let x = c.coordinate(0);
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale(&x);
        let d = gauge_transform(&unit(&c), &b).unwrap();
        let one_x = &c.one() + &x;
        assert_eq!(d.det, one_x.pow(3));
        assert_eq!(d.vanishing_locus().render(&c.var_names()), "x^3 + 3*x^2 + 3*x + 1");
        let t = d.transported.unwrap();
        assert_eq!(t.tensor(), &Multivector::basis(&c, idx(&[0, 1, 2])).scale(&one_x.inv().unwrap()));
        assert!(t.check_fi().is_verified());
    }

    #[test]
    fn not_closed_rejected() {
        let c = Chart::new(["x", "y", "z", "w"], []).unwrap();
        let p = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale(&c.coordinate(3));
        assert!(matches!(gauge_matrix(&p, &b), Err(Error::NotClosed)));
    }

    #[test]
    fn singular_everywhere_rejected() {
        let c = Chart::new(["x", "y", "z"], []).unwrap();
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale_rational(&int(-1));
        assert!(matches!(gauge_matrix(&unit(&c), &b), Err(Error::SingularEverywhere)));
    }

    #[test]
    fn leibniz_iso_examples() {
        let c = r3c();
        let b0 = Form::zero(&c, 3);
        assert!(check_leibniz_iso(&unit(&c), &b0).unwrap().holds);
        let bc = Form::basis(&c, idx(&[0, 1, 2])).scale(&RationalFunction::var(3, 4));
        assert!(check_leibniz_iso(&unit(&c), &bc).unwrap().holds);
        let bx = Form::basis(&c, idx(&[0, 1, 2])).scale(&c.coordinate(0));
        assert!(check_leibniz_iso(&unit(&c), &bx).unwrap().holds);
    }

    #[test]
    fn characteristic_match_examples() {
        let c = Chart::new(["x", "y", "z"], []).unwrap();
        let p = unit(&c);
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale(&c.coordinate(0));
        let t = gauge_transform(&p, &b).unwrap().transported.unwrap();
        let pts: Vec<Vec<Rational>> = vec![vec![int(1), int(2), int(3)], vec![int(-1), int(0), int(0)], vec![int(5), int(-2), int(1)]];
        let r = check_characteristic_match(&p, &t, &pts).unwrap();
        assert!(r.matched);
        assert_eq!(r.points_used, 2);
        let zero = NambuStructure::new(Multivector::zero(&c, 3)).unwrap();
        assert!(!check_characteristic_match(&p, &zero, &pts).unwrap().matched);
    }

    #[test]
    fn commutation_on_graph_submanifold() {
        let c = Chart::new(["x", "y", "z", "w"], ["c"]).unwrap();
        let p = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2])).scale(&c.coordinate(3))).unwrap();
        let n = Submanifold::from_functions(&c, &[&c.coordinate(3) - &c.coordinate(0)]).unwrap();
        let e = Subbundle::from_vectors(&c, &[Multivector::coordinate(&c, 3)]).unwrap();
        let prob = ReductionProblem::new(p, n, e).unwrap();
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale(&RationalFunction::var(4, 5));
        let r = gauge_reduce_commute(&prob, &b, false).unwrap();
        assert!(r.equal);
        assert!(r.hypotheses.iter().all(|h| h.passed));
        assert!(!r.theorem_applies);
        assert_eq!(r.reduce_then_gauge.tensor().render(), "x/(x*c + 1)*Dx^Dy^Dz");
        let zero = Form::zero(&c, 3);
        let r = gauge_reduce_commute(&prob, &zero, false).unwrap();
        assert!(r.equal);
        assert_eq!(r.reduce_then_gauge.tensor().render(), "x*Dx^Dy^Dz");
    }

    #[test]
    fn commutation_reports_failing_hypothesis() {
        let c = Chart::new(["x", "y", "z", "w"], ["c"]).unwrap();
        let p = NambuStructure::new(Multivector::basis(&c, idx(&[0, 1, 2]))).unwrap();
        let n = Submanifold::from_functions(&c, &[c.coordinate(2)]).unwrap();
        let e = Subbundle::from_vectors(&c, &[Multivector::coordinate(&c, 2)]).unwrap();
        let prob = ReductionProblem::new(p, n, e.clone()).unwrap().with_distribution(e).unwrap();
        let cc = RationalFunction::var(4, 5);
        // (a) and (b) hold; only the distribution route licenses the reduction.
        let b = Form::basis(&c, idx(&[0, 1, 3])).scale(&cc);
        let r = gauge_reduce_commute(&prob, &b, false).unwrap();
        assert!(r.equal && !r.theorem_applies);
        // i_{Dz} B~(Dx) = -c dy, so (a) fails.
        let b = Form::basis(&c, idx(&[0, 1, 2])).scale(&cc);
        match gauge_reduce_commute(&prob, &b, false) {
            Err(Error::HypothesesFailed(msg)) => assert!(msg.starts_with("(a)"), "{msg}"),
            other => panic!("expected a hypothesis failure, got {other:?}"),
        }
    }
}
