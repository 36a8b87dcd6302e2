#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use ruinkit_core::onedim::CompoundPoissonLine;
use ruinkit_core::phasetype::PhaseType;

/// Composite 5-point Gauss-Legendre rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for k in 0..5 {
            total += W[k] * f(mid + 0.5 * h * X[k]);
        }
    }
    total * 0.5 * h
}

/// Random transient phase-type law with `1..=4` phases; every phase has a
/// positive exit rate.
pub fn arb_phasetype() -> impl Strategy<Value = PhaseType> {
    (1usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(0.05f64..1.0, m),
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], m * m),
            prop::collection::vec(0.1f64..2.0, m),
        )
            .prop_map(move |(a, off, exit)| {
                let s: f64 = a.iter().sum();
                let alpha: Vec<f64> = a.iter().map(|v| v / s).collect();
                let mut q = DMatrix::zeros(m, m);
                for i in 0..m {
                    let mut row = 0.0;
                    for j in 0..m {
                        if i != j {
                            q[(i, j)] = off[i * m + j];
                            row += off[i * m + j];
                        }
                    }
                    q[(i, i)] = -(row + exit[i]);
                }
                PhaseType::new(alpha, q).expect("valid by construction")
            })
    })
}

pub fn arb_line() -> impl Strategy<Value = CompoundPoissonLine> {
    (arb_phasetype(), 0.2f64..3.0, 0.05f64..2.0).prop_map(|(claim, lambda, theta)| {
        let c = (1.0 + theta) * lambda * claim.mean();
        CompoundPoissonLine::new(lambda, claim, c).unwrap()
    })
}

pub fn dickson_hipp() -> PhaseType {
    PhaseType::erlang_mixture(&[0.5, 0.5], &[(2, 1.0), (2, 2.0)]).unwrap()
}
