use symred_core::expr::Config;
use symred_core::jet::{JetSpace, VectorField};
use symred_core::reduction::{reduce_ode, ReducedSystem};
use symred_core::system::{equations_equivalent, DESystem};
use symred_core::transform::{transform_de, verify_canonical, PointTransformation};

fn cfg() -> Config {
    Config::default()
}

fn chart(src: &JetSpace, names: (&str, &str), fwd: [&str; 2], inv: [&str; 2]) -> PointTransformation {
    let tgt = JetSpace::new(&[names.0], &[names.1], src.order()).unwrap();
    let f = fwd.iter().map(|t| src.parse(t).unwrap()).collect();
    let i = inv.iter().map(|t| tgt.parse(t).unwrap()).collect();
    PointTransformation::new(src, &tgt, f, Some(i)).unwrap()
}

fn reduce(sys: &DESystem, name: &str) -> ReducedSystem {
    reduce_ode(sys, None, Some(name), &cfg()).unwrap()
}

fn assert_same(sys: &DESystem, want: &str) {
    let w = sys.space.parse(want).unwrap();
    assert!(
        equations_equivalent(&sys.space, &sys.equations[0].expr, &w, &cfg()).unwrap(),
        "got {}",
        sys.equations[0].expr
    );
}

#[test]
fn second_example_chain_ends_algebraic() {
    let s = JetSpace::new(&["x"], &["y"], 2).unwrap();
    let sys = DESystem::parse(&s, &["x*y^2*y'' + x*y' - y"], &cfg()).unwrap();
    let t = chart(&s, ("r", "s"), ["y/x", "-1/x"], ["-1/s", "-r/s"]);
    let canon = transform_de(&sys, &t, &cfg()).unwrap();
    let red = reduce(&canon, "alpha");
    assert_same(&red.system, "r^2*alpha' - alpha^2");

    let x2 = VectorField::parse(&red.system.space, &["r", "alpha"]).unwrap();
    let t2 = chart(&red.system.space, ("R", "S"), ["alpha/r", "log(r)"], ["exp(S)", "R*exp(S)"]);
    assert!(verify_canonical(&x2, &t2, 0, &cfg()).unwrap());
    let canon2 = transform_de(&red.system, &t2, &cfg()).unwrap();
    assert_same(&canon2, "1 + R*(1 - R)*S'");
    let last = reduce(&canon2, "omega");
    assert_eq!(last.system.order(), 0);
    assert_same(&last.system, "1 + R*(1 - R)*omega");
}

#[test]
fn blasius_chain() {
    let s = JetSpace::new(&["x"], &["y"], 3).unwrap();
    let sys = DESystem::parse(&s, &["y''' + 1/2*y*y''"], &cfg()).unwrap();
    let x1 = VectorField::parse(&s, &["1", "0"]).unwrap();
    let t = chart(&s, ("r", "s"), ["y", "x"], ["s", "r"]);
    assert!(verify_canonical(&x1, &t, 0, &cfg()).unwrap());
    let canon = transform_de(&sys, &t, &cfg()).unwrap();
    assert_same(&canon, "2*s'*s''' - 6*s''^2 + r*s'^2*s''");

    let s2 = JetSpace::new(&["x"], &["y"], 3).unwrap();
    let renamed = DESystem::parse(&s2, &["2*y'*y''' - 6*y''^2 + x*y'^2*y''"], &cfg()).unwrap();
    let red = reduce(&renamed, "alpha");
    assert_same(&red.system, "2*alpha*alpha'' - 6*alpha'^2 + x*alpha^2*alpha'");

    let t2 = chart(&red.system.space, ("r", "s"), ["x^2*alpha", "log(x)"], ["exp(s)", "r*exp(-2*s)"]);
    let x2 = VectorField::parse(&red.system.space, &["x", "-2*alpha"]).unwrap();
    assert!(verify_canonical(&x2, &t2, 0, &cfg()).unwrap());
    let canon2 = transform_de(&red.system, &t2, &cfg()).unwrap();
    assert_same(&canon2, "2*r*s'' + 2*r^2*(r+6)*s'^3 - r*(r+14)*s'^2 + 6*s'");
    let last = reduce(&canon2, "omega");
    assert_same(&last.system, "2*r*omega' + 2*r^2*(r+6)*omega^3 - r*(r+14)*omega^2 + 6*omega");
}
