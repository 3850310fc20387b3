use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::parse::RESERVED;

/// Numeric assignment of the phase-space symbols and parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub x: [f64; 4],
    pub p: [f64; 4],
    pub kappa: f64,
    pub kappabar: f64,
    pub m: f64,
}

impl PhasePoint {
    pub fn w(&self) -> f64 {
        let xx = self.x[1].powi(2) + self.x[2].powi(2) + self.x[3].powi(2);
        (self.kappabar.powi(2) * (self.x[0].powi(2) - xx) + 1.0).sqrt()
    }

    pub fn is_on_shell(&self) -> bool {
        let pp = self.p[1].powi(2) + self.p[2].powi(2) + self.p[3].powi(2);
        (self.p[0] - (self.m * self.m + pp).sqrt()).abs() <= 1e-12 * self.p[0].abs().max(1.0)
    }

    pub fn values(&self) -> BTreeMap<String, f64> {
        let mut v = BTreeMap::new();
        for i in 0..4 {
            v.insert(format!("x{i}"), self.x[i]);
            v.insert(format!("p{i}"), self.p[i]);
        }
        v.insert("kappa".into(), self.kappa);
        v.insert("kappabar".into(), self.kappabar);
        v.insert("m".into(), self.m);
        v.insert("psq".into(), self.p[1..].iter().map(|a| a * a).sum());
        v.insert("xsq".into(), self.x[1..].iter().map(|a| a * a).sum());
        v
    }
}

/// Draws one domain-valid point: all radicands and logarithm arguments of
/// the cataloged bases stay positive and away from branch points.
pub fn sample_point<R: Rng>(rng: &mut R, on_shell: bool) -> PhasePoint {
    let m = rng.gen_range(0.1..2.0);
    let mut p = [0.0; 4];
    for pi in p.iter_mut().skip(1) {
        *pi = rng.gen_range(-1.0..1.0);
    }
    let pp: f64 = p[1..].iter().map(|a| a * a).sum();
    p[0] = if on_shell {
        (m * m + pp).sqrt()
    } else {
        rng.gen_range(1.0..3.0)
    };
    let kappa = rng.gen_range(0.5..2.0);
    let kappabar: f64 = rng.gen_range(0.5..2.0);
    loop {
        let mut x = [0.0; 4];
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-1.0..1.0);
        }
        let xx: f64 = x[1..].iter().map(|a| a * a).sum();
        let w2 = kappabar * kappabar * (x[0] * x[0] - xx) + 1.0;
        if w2 > 0.25 && kappabar * x[0] + w2.sqrt() > 0.25 {
            return PhasePoint {
                x,
                p,
                kappa,
                kappabar,
                m,
            };
        }
    }
}

/// Deterministic sample set: phase-space points plus values for any extra
/// symbols (deformed generators, expansion variables) in `(0.1, 1.1)`.
pub fn sample_values(seed: u64, n: usize, on_shell: bool, extra: &BTreeSet<String>) -> Vec<BTreeMap<String, f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let pt = sample_point(&mut rng, on_shell);
            let mut v = pt.values();
            for s in extra {
                if !RESERVED.contains(&s.as_str()) && s != "psq" && s != "xsq" {
                    v.insert(s.clone(), rng.gen_range(0.1..1.1));
                }
            }
            v
        })
        .collect()
}
