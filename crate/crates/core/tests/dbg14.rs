mod common;
use netloc::allocate::{build_min_power_prior_wnl, PriorInfo};
use netloc::fisher::{direction_matrix, Efim};

#[test]
#[ignore]
fn probe() {
    let seed = 1u64;
    let net = common::random_wnl(5, 1, seed ^ 0x1414, 0.0);
    let rho = net.requirements[0];
    let jkj: Vec<Efim> = (0..5)
        .map(|j| {
            let (phi, _) = net.link_geometry(0, j);
            let mut m = direction_matrix(phi).matrix().to_owned();
            m *= net.erc(0, j);
            Efim::new(m).unwrap()
        })
        .collect();
    let strong = PriorInfo {
        j0: vec![Efim::new(nalgebra::Matrix2::identity() * (2.0 / rho)).unwrap()],
        jkj: vec![jkj.clone()],
    };
    let prog = build_min_power_prior_wnl(&net, &strong).unwrap();
    eprintln!("{}", prog.dump_triplets());
    let sol = prog.solve();
    eprintln!("status {:?} obj {} iters {} res {:?}", sol.status, sol.objective_value, sol.iterations, sol.residuals);
}
