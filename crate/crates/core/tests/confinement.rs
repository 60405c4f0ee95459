use nlsmix_core::confinement::*;
use nlsmix_core::shooting::ShootingOptions;

#[test]
fn mass_round_trip_at_fine_mesh() {
    let p = 4.0;
    let w_inf = solve_w_infty(p, &ShootingOptions::default()).unwrap();
    let sol = solve_extrapolated(1e3, p, 513, &FlowOptions::default(), Start::Cold(Some(&w_inf.profile))).unwrap();
    let nc = sol.normalized().unwrap();
    assert!(nc.mass_rel.abs() < 1e-4, "{:e}", nc.mass_rel);
    assert!(nc.pohozaev_rel.abs() < 1e-4, "{:e}", nc.pohozaev_rel);
    assert!(sol.mesh_change() < 0.01);
    assert!(sol.fine.is_monotone());
}
