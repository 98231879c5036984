use rabi_lab::sweep::output::to_csv;
use rabi_lab::sweep::{cache_key, run_sweep, run_sweep_with, Axis, Cache, Observable, SweepSpec};
use rabi_lab::{Error, PhaseLabel};

const LINE: &str = r#"
model = "effective"
observables = ["analytic", "numeric"]

[fixed]
omega_a = 40.0
omega_q = 5.0
j_tilde = 0.95

[numerics]
schedule = [[0, 20], [0, 30]]
observable_tol = 0.001

[[axes]]
name = "g_tilde"
min = 0.1
max = 0.5
count = 5
"#;

fn line() -> SweepSpec {
    SweepSpec::from_toml_str(LINE).unwrap()
}

#[test]
fn byte_identical_across_runs_and_workers() {
    let spec = line();
    let a = to_csv(&run_sweep(&spec, 1, None).unwrap()).unwrap();
    let b = to_csv(&run_sweep(&spec, 1, None).unwrap()).unwrap();
    let c = to_csv(&run_sweep(&spec, 4, None).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let header = a.lines().next().unwrap();
    assert_eq!(
        header,
        "g_tilde,phase,n_b_analytic,n_b_numeric,n_a_numeric,energy,gap01,converged,error"
    );
    assert_eq!(a.lines().count(), 6);
    assert!(!a.contains('\r'));
}

#[test]
fn warm_cache_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::open(dir.path()).unwrap();
    let spec = line();
    let cold = to_csv(&run_sweep(&spec, 2, Some(&cache)).unwrap()).unwrap();
    assert_eq!(cache.stats().unwrap().entries, 5);
    // a poisoned evaluator proves the warm run never recomputes
    let warm = run_sweep_with(&spec, 2, Some(&cache), &|_, _| {
        Err(Error::InvalidParameter("cache miss".into()))
    })
    .unwrap();
    assert_eq!(to_csv(&warm).unwrap(), cold);
    assert_eq!(cache.clear().unwrap(), 5);
    assert_eq!(cache.stats().unwrap().entries, 0);
}

#[test]
fn cache_keys_are_canonical() {
    let spec = line();
    let p = spec.resolve(&[0.3]).unwrap();
    assert_eq!(cache_key(&spec, &p), cache_key(&spec, &spec.resolve(&[0.3]).unwrap()));
    assert_ne!(cache_key(&spec, &p), cache_key(&spec, &spec.resolve(&[0.31]).unwrap()));

    let mut tighter = spec.clone();
    tighter.numerics.solver_tol = 1e-10;
    assert_ne!(cache_key(&spec, &p), cache_key(&tighter, &tighter.resolve(&[0.3]).unwrap()));
    let mut longer = spec.clone();
    longer.numerics.schedule = Some(vec![[0, 20], [0, 40]]);
    assert_ne!(cache_key(&spec, &p), cache_key(&longer, &longer.resolve(&[0.3]).unwrap()));

    // same point set, axes listed in the other order
    let mut ab = spec.clone();
    ab.fixed.j_tilde = None;
    ab.axes = vec![Axis::linear("j_tilde", 0.9, 0.95, 2), Axis::linear("g_tilde", 0.1, 0.3, 3)];
    let mut ba = ab.clone();
    ba.axes.reverse();
    let mut ka: Vec<String> = ab.grid().iter().map(|c| cache_key(&ab, &ab.resolve(c).unwrap())).collect();
    let mut kb: Vec<String> = ba.grid().iter().map(|c| cache_key(&ba, &ba.resolve(c).unwrap())).collect();
    assert_ne!(ka, kb);
    ka.sort();
    kb.sort();
    assert_eq!(ka, kb);
}

#[test]
fn config_round_trips_exactly() {
    let spec = line();
    let text = spec.to_toml_string().unwrap();
    let again = SweepSpec::from_toml_str(&text).unwrap();
    assert_eq!(again, spec);
    assert_eq!(again.to_toml_string().unwrap(), text);
    for a in &again.axes {
        let b = spec.axes.iter().find(|b| b.name == a.name).unwrap();
        assert_eq!(a.min.to_bits(), b.min.to_bits());
        assert_eq!(a.max.to_bits(), b.max.to_bits());
    }
}

#[test]
fn poisoned_point_is_isolated() {
    let spec = line();
    let clean = run_sweep(&spec, 3, None).unwrap();
    let poisoned = run_sweep_with(&spec, 3, None, &|pt, s| {
        if (pt.g_tilde() - 0.3).abs() < 1e-12 {
            Err(Error::InvalidParameter("forced failure".into()))
        } else {
            rabi_lab::sweep::run::default_numerics(pt, s)
        }
    })
    .unwrap();
    assert_eq!(poisoned.failures(), 1);
    for (a, b) in clean.records.iter().zip(&poisoned.records) {
        if (a.coords[0] - 0.3).abs() < 1e-12 {
            assert!(b.outcome.error.as_deref().unwrap().contains("forced failure"));
            assert_eq!(b.outcome.n_b_numeric, None);
            assert_eq!(b.outcome.n_b_analytic, a.outcome.n_b_analytic);
        } else {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn config_errors_abort_the_run() {
    let mut spec = line();
    spec.axes[0].name = "d_tilde".into();
    assert!(matches!(run_sweep(&spec, 1, None), Err(Error::Config(_))));
    let mut spec = line();
    spec.fixed.omega_q = None;
    assert!(matches!(run_sweep(&spec, 1, None), Err(Error::Config(_))));
}

#[test]
fn labels_follow_the_analytic_boundary() {
    let mut spec = line();
    spec.observables = vec![Observable::Analytic];
    spec.axes = vec![Axis::linear("g_tilde", 0.0, 0.65, 14)];
    let res = run_sweep(&spec, 2, None).unwrap();
    for r in &res.records {
        let expected = if r.coords[0] < 0.3286 { PhaseLabel::Normal } else { PhaseLabel::Superradiant };
        assert_eq!(r.outcome.phase, Some(expected), "{}", r.coords[0]);
    }
}
