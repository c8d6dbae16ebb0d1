use num_complex::Complex64;
use tb::*;

#[test]
fn dbg_b() {
    let spec = tb::presets::mixed_two_term();
    let fam = HerglotzFamily::new(spec).unwrap();
    let ev1 = ChainEvaluator::new(fam.clone()).with_tolerances(1e-10, 1e-300);
    let ev2 = ChainEvaluator::new(fam.clone()).with_tolerances(1e-12, 1e-300);
    let t = 1.0;
    let b1 = ev1.omega_prime_zero(t).unwrap();
    let b2 = ev2.omega_prime_zero(t).unwrap();
    eprintln!("quad b(1) rtol1e-10 = {b1:?}");
    eprintln!("quad b(1) rtol1e-12 = {b2:?}  diff {:e}", (b1-b2).norm());
    let h = 1e-5;
    for (name, ev) in [("1e-10", &ev1), ("1e-12", &ev2)] {
        let (p, st) = ev.omega_detailed(Complex64::new(h, 0.0), t, None).unwrap();
        let m = ev.omega(Complex64::new(-h, 0.0), t).unwrap();
        let fd = (p - m) / (2.0 * h);
        eprintln!("rtol {name}: fd = {fd:?} diff_vs_b2 {:e} stats {:?}", (fd-b2).norm(), st);
    }
}
