mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn slopes_match_numeric_root_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let poly = common::random_poly(&mut rng);
        common::check_newton(&poly, 1e-3).unwrap();
    }
}

#[test]
fn hand_polygon() {
    // (y - q)(y - q^2)(y + 1) = y^3 + (1 - q - q^2) y^2 + (q^3 - q - q^2) y + q^3
    let poly = vec![
        (3, 0, 1),
        (2, 0, 1),
        (2, 1, -1),
        (2, 2, -1),
        (1, 3, 1),
        (1, 1, -1),
        (1, 2, -1),
        (0, 3, 1),
    ];
    assert_eq!(common::predicted_valuations(&poly), vec![2.0, 1.0, 0.0]);
    common::check_newton(&poly, 1e-3).unwrap();
}
