use ltb_core::classify::NumericVerdict;
use ltb_core::*;

#[test]
fn agreement_over_wide_grid() {
    let cc = critical_constants();
    let grid = SweepGrid {
        n_values: vec![1, 2, 3, 4, 5],
        a_min: 0.05,
        a_max: 5.0,
        a_steps: 40,
        spacing: Spacing::Linear,
    };
    let res = run_sweep(&grid, &SweepSettings::default(), None).unwrap();
    assert_eq!(res.rows.len(), 200);
    let mut agree = 0;
    for row in &res.rows {
        let rep = row.report.as_ref().expect("power-law grid points are valid");
        if rep.agree {
            agree += 1;
        } else {
            assert_eq!(row.n, 3, "disagreement at n={} a={}: {:?}", row.n, row.a, rep.reason);
            assert!((row.a - cc.a_c).abs() < 0.02, "disagreement at a={}: {:?}", row.a, rep.reason);
        }
    }
    assert!(agree as f64 / 200.0 >= 0.98, "{agree}/200 agree");
}

#[test]
fn cubic_profile_has_one_naked_region() {
    let cc = critical_constants();
    let settings = NumericSettings::default();
    let a_values: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    let naked: Vec<bool> = a_values
        .iter()
        .map(|&a| {
            let p = ModelParams::power_law(3, a, 0.1).unwrap();
            classify_numeric(&p, &settings).verdict == NumericVerdict::Naked
        })
        .collect();
    let first = naked.iter().position(|&v| v).expect("a naked region exists");
    assert!(naked[first..].iter().all(|&v| v), "naked region is not contiguous");
    // boundary within one cell of a_c
    assert!((a_values[first] - cc.a_c).abs() <= 0.05 + 1e-12, "boundary at {}", a_values[first]);
}

#[test]
fn linear_and_quartic_rows() {
    let grid = |n| SweepGrid {
        n_values: vec![n],
        a_min: 0.1,
        a_max: 5.0,
        a_steps: 12,
        spacing: Spacing::Logarithmic,
    };
    let settings = SweepSettings::default();
    for row in run_sweep(&grid(1), &settings, Some(2)).unwrap().rows {
        let rep = row.report.unwrap();
        assert_eq!(rep.numeric.verdict, NumericVerdict::Naked, "a = {}", row.a);
        assert_eq!(rep.analytic.rule, Rule::T41);
    }
    for row in run_sweep(&grid(4), &settings, Some(2)).unwrap().rows {
        let rep = row.report.unwrap();
        assert_eq!(rep.numeric.verdict, NumericVerdict::BlackHole, "a = {}", row.a);
        assert_eq!(rep.analytic.rule, Rule::T31);
    }
}

#[test]
fn gap_amplitudes_are_covered_numerically() {
    // between the horizon threshold and a_c no singular start exists and the
    // probes return to the regular center
    let settings = NumericSettings::default();
    for a in [0.35, 1.0, 2.5, 3.8] {
        let p = ModelParams::power_law(3, a, 0.1).unwrap();
        let rep = classify_numeric(&p, &settings);
        assert_eq!(rep.verdict, NumericVerdict::BlackHole, "a = {a}: {:?}", rep.reason);
        assert!(rep.evidence.start.is_none());
        assert!(rep.evidence.probes.iter().all(|pr| pr.certified));
    }
}

#[test]
fn forward_paths_are_monotone_and_sit_below_the_tangent() {
    for (n, a) in [(1u32, 1.0), (1, 0.3), (2, 8.0), (2, 0.5)] {
        let p = ModelParams::power_law(n, a, 0.1).unwrap();
        let start = singular_start(&p).unwrap();
        let path = integrate_from_singularity(&p, start, 0.1, &StepControl::default()).unwrap();
        assert_eq!(path.termination, Termination::ReachedRMax);
        for w in path.samples.windows(2) {
            assert!(w[1].offset > w[0].offset, "t not increasing at r = {}", w[1].r);
        }
        // (x - x0) / r^beta settles to a negative band once the start
        // transient has decayed
        let beta = 1.0 - n as f64 / 3.0;
        for (r, x) in path.scaled(start.alpha) {
            if r < 1e3 * start.epsilon {
                continue;
            }
            let z = (x - start.x0) / r.powf(beta);
            assert!(z < -1e-3 && z > -1.0, "(n={n}, a={a}) r = {r}: {z}");
        }
    }
}
