//! Weak convergence through asymptotic centers, and executable Mosco,
//! Gamma and Frolik-Wijsman checks over finite index windows.

mod center;
mod mosco;

pub use center::{
    asymptotic_center, weak_limit, Convergence, PointSequence, Selector, SelectorCenter, WeakLimitVerdict,
    WeakWitness,
};
pub use mosco::{
    build_recovery_sequence, check_envelope_convergence, check_liminf_condition, check_recovery,
    frolik_wijsman_check, gamma_limit_from_envelopes, mosco_check, vanishes, DistanceGap, EnvelopeCell,
    EnvelopeConvergenceReport, FrolikWijsmanReport, GammaRow, GammaTable, LiminfCheck, MoscoOptions, MoscoReport,
    MoscoVerdict, MoscoWitness, RecoveryCheck, Schedule,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ConvexFunction, ConvexSet, FunctionSequence, SetSequence, Window};
    use crate::error::LabError;
    use crate::metric::{LambdaGrid, ProbeGrid};
    use crate::space::{Point, Space, SpaceRef};

    fn plane() -> SpaceRef {
        Space::euclidean(2).unwrap()
    }

    fn pt(s: &SpaceRef, x: f64, y: f64) -> Point {
        Point::vector(s, vec![x, y]).unwrap()
    }

    fn shrinking_balls(s: &SpaceRef) -> SetSequence {
        let s2 = s.clone();
        SetSequence::new(s, move |n| {
            let h = 1.0 / n as f64;
            ConvexSet::ball(pt(&s2, h, 0.0), 1.0 + h)
        })
    }

    fn alternating_balls(s: &SpaceRef) -> SetSequence {
        let s2 = s.clone();
        SetSequence::new(s, move |n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            ConvexSet::ball(pt(&s2, sign, 0.0), 0.5)
        })
    }

    #[test]
    fn vanishing_rule() {
        let ns: Vec<usize> = (1..=100).collect();
        let harmonic: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        assert!(vanishes(&ns, &harmonic, 1e-9));
        assert!(!vanishes(&ns, &vec![0.5; 100], 1e-9));
        assert!(vanishes(&ns, &vec![0.0; 100], 1e-9));
        let growing: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        assert!(!vanishes(&ns, &growing, 1e-9));
    }

    #[test]
    fn liminf_holds_for_shrinking_balls() {
        let s = plane();
        let seq = shrinking_balls(&s).indicators();
        let f = ConvexFunction::indicator(ConvexSet::ball(Point::origin(&s), 1.0).unwrap());
        let x = pt(&s, 0.0, 1.0);
        let wseq = PointSequence::constant(x.clone(), Window::new(1, 32).unwrap());
        let c = check_liminf_condition(&seq, &f, &wseq, &x, &MoscoOptions::default()).unwrap();
        assert!(c.pass);
        assert_eq!(c.liminf_estimate, 0.0);
        let elsewhere = pt(&s, 0.5, 0.0);
        assert!(matches!(
            check_liminf_condition(&seq, &f, &wseq, &elsewhere, &MoscoOptions::default()),
            Err(LabError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn recovery_sequence_of_a_fixed_quadratic() {
        let s = Space::euclidean(1).unwrap();
        let f = ConvexFunction::squared_distance(Point::origin(&s), 1.0).unwrap();
        let seq = FunctionSequence::constant(f.clone());
        let x = Point::vector(&s, vec![2.0]).unwrap();
        let window = Window::new(1, 64).unwrap();
        let ys = build_recovery_sequence(&seq, &x, &Schedule::harmonic(), window).unwrap();
        for n in [1usize, 5, 64] {
            let expect = 2.0 / (1.0 + 1.0 / n as f64);
            assert!((ys.at(n).unwrap().as_vector().unwrap()[0] - expect).abs() < 1e-14);
        }
        let rising = Schedule::new(|n| n as f64);
        assert!(matches!(build_recovery_sequence(&seq, &x, &rising, window), Err(LabError::DomainError(_))));
        let c = check_recovery(&seq, &f, &x, &MoscoOptions::default()).unwrap();
        assert!(c.pass && c.converges_to_x);
    }

    #[test]
    fn mosco_consistent_on_shrinking_balls() {
        let s = plane();
        let seq = shrinking_balls(&s).indicators();
        let f = ConvexFunction::indicator(ConvexSet::ball(Point::origin(&s), 1.0).unwrap());
        let probes = ProbeGrid::lattice(&s, &[-1.5, -1.5], &[1.5, 1.5], 0.75).unwrap();
        let window = Window::new(1, 32).unwrap();
        let adversarial = vec![PointSequence::constant(pt(&s, 0.0, 1.0), window)];
        let r = mosco_check(&seq, &f, &probes, &adversarial, &MoscoOptions::default()).unwrap();
        assert_eq!(r.verdict, MoscoVerdict::Consistent, "{:?}", r.witness);
        assert!(!r.envelope_recovery_checks.is_empty());
    }

    #[test]
    fn mosco_falsifies_alternating_balls() {
        let s = plane();
        let seq = alternating_balls(&s).indicators();
        let f = ConvexFunction::indicator(ConvexSet::ball(Point::origin(&s), 0.5).unwrap());
        let probes = ProbeGrid::explicit(vec![Point::origin(&s)]).unwrap();
        let adversarial = vec![PointSequence::constant(pt(&s, 1.0, 0.0), Window::new(1, 32).unwrap())];
        let r = mosco_check(&seq, &f, &probes, &adversarial, &MoscoOptions::default()).unwrap();
        assert_eq!(r.verdict, MoscoVerdict::Falsified);
        match r.witness.unwrap() {
            MoscoWitness::Liminf { f_x, liminf_estimate, .. } => {
                assert_eq!(f_x, f64::INFINITY);
                assert_eq!(liminf_estimate, 0.0);
            }
            w => panic!("unexpected witness {w:?}"),
        }
        assert!(!r.recovery_checks[0].pass);
    }

    #[test]
    fn envelope_gaps_of_moving_quadratics() {
        let s = Space::euclidean(1).unwrap();
        let s2 = s.clone();
        let seq = FunctionSequence::new(&s, move |n| {
            ConvexFunction::squared_distance(Point::vector(&s2, vec![1.0 / n as f64])?, 1.0)
        });
        let f = ConvexFunction::squared_distance(Point::origin(&s), 1.0).unwrap();
        let probes = ProbeGrid::explicit(vec![Point::vector(&s, vec![1.0]).unwrap()]).unwrap();
        let lambdas = LambdaGrid::new(vec![1.0]).unwrap();
        let r = check_envelope_convergence(&seq, Some(&f), &lambdas, &probes, Window::new(1, 100).unwrap(), 1e-8).unwrap();
        for (&n, &gap) in r.indices.iter().zip(&r.max_gap) {
            let expect = ((1.0 - 1.0 / n as f64).powi(2) - 1.0).abs() / 4.0;
            assert!((gap - expect).abs() < 1e-14);
        }
        assert!(r.gaps_vanish && r.prox_distances_vanish && r.pointwise_limit);
    }

    #[test]
    fn escaping_points_have_no_envelope_limit() {
        let s = Space::euclidean(1).unwrap();
        let seq = escaping(&s);
        let probes = ProbeGrid::explicit(vec![Point::origin(&s)]).unwrap();
        let r = check_envelope_convergence(&seq, None, &LambdaGrid::dyadic(3).unwrap(), &probes, Window::new(1, 16).unwrap(), 1e-8)
            .unwrap();
        assert!(!r.pointwise_limit);
    }

    fn escaping(s: &SpaceRef) -> FunctionSequence {
        let s2 = s.clone();
        FunctionSequence::new(s, move |n| {
            Ok(ConvexFunction::indicator(ConvexSet::ball(Point::vector(&s2, vec![n as f64])?, 0.0)?))
        })
    }

    #[test]
    fn gamma_table_for_fixed_indicator() {
        let s = Space::euclidean(1).unwrap();
        let f = ConvexFunction::indicator(ConvexSet::ball(Point::origin(&s), 1.0).unwrap());
        let probes =
            ProbeGrid::explicit(vec![Point::origin(&s), Point::vector(&s, vec![2.0]).unwrap()]).unwrap();
        let t = gamma_limit_from_envelopes(
            &FunctionSequence::constant(f),
            &LambdaGrid::default(),
            &probes,
            Window::new(1, 8).unwrap(),
        )
        .unwrap();
        assert_eq!(t.rows[0].sup, 0.0);
        assert!(t.rows[1].divergent && t.rows[1].sup == f64::INFINITY);
        assert!(t.monotone_in_k(0.0));
        let refused = gamma_limit_from_envelopes(&escaping(&s), &LambdaGrid::default(), &probes, Window::new(1, 8).unwrap());
        assert!(matches!(refused, Err(LabError::NoUniformBound(_))));
    }

    #[test]
    fn frolik_wijsman_agrees_with_mosco() {
        let s = plane();
        let probes = ProbeGrid::lattice(&s, &[-2.0, -2.0], &[2.0, 2.0], 1.0).unwrap();
        let opts = MoscoOptions { window: Window::new(1, 64).unwrap(), ..MoscoOptions::default() };
        let c = ConvexSet::ball(Point::origin(&s), 1.0).unwrap();
        let r = frolik_wijsman_check(&shrinking_balls(&s), &c, &probes, &[], &opts).unwrap();
        assert!(r.distances_converge && r.agree && r.bridge_residual < 1e-12);
        for g in &r.distance_gaps {
            for (&n, gap) in r.indices.iter().zip(&g.gaps) {
                assert!(*gap <= 2.0 / n as f64 + 1e-12);
            }
        }
    }
}
