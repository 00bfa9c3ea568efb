use bivirial::data;
use bivirial::nls::{self, EvolutionConfig};
use bivirial::verify::{verify_identity, IdentityOptions, PairT3, Verdict};
use bivirial::virial::Weight;
use bivirial::Grid;

#[test]
fn smooth_weight_identity_holds_along_nonlinear_flow() {
    let g = Grid::new(2, 32, 5.0).unwrap();
    let u0 = data::gaussian(&g, [-0.8, 0.0], [0.3, 0.0], 1.0, 1.5);
    let v0 = data::gaussian(&g, [0.9, 0.3], [-0.2, 0.1], 1.1, 1.2);
    for epsilon in [-1, 1] {
        let cfg = EvolutionConfig::new(epsilon, 3.0, 5e-4, 0.02, 4).unwrap();
        let tu = nls::evolve(&u0, &cfg, &[]).unwrap().trajectory;
        let tv = nls::evolve(&v0, &cfg, &[]).unwrap().trajectory;
        let pair = PairT3 { weight: Weight::japanese_bracket(), epsilon, p: 3.0, budget: 1 << 24 };
        let opts = IdentityOptions { tolerance: 2e-3, rhs_stride: 2, wrap_limit: 1e-3 };
        let rep = verify_identity(&tu, Some(&tv), &pair, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "eps {epsilon}: {}", rep.measured);
        // the nonlinear terms carry weight: halving them would break the tolerance
        let rhs = bivirial::virial::rhs_theorem_t3(&u0, &v0, &pair.weight, epsilon, 3.0, 1 << 24).unwrap();
        let nl = rhs.term("nonlinear_term_x") + rhs.term("nonlinear_term_y");
        assert!(0.5 * nl.abs() / (1.0 + rhs.total.abs()) > 10.0 * opts.tolerance, "{nl} {}", rhs.total);
    }
}
