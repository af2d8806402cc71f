#![allow(dead_code)]

use stochreach_core::certify::{Certificate, Params};
use stochreach_core::poly::parse_poly;
use stochreach_core::{Disturbance, Hyperbox, Mode, Polynomial, ProblemParts, ProblemSpec, RegionSpec, SystemModel};

pub fn region(boxes: &[(f64, f64)]) -> RegionSpec {
    RegionSpec::new(1, boxes.iter().map(|b| Hyperbox::from_bounds(&[*b])).collect()).unwrap()
}

pub fn poly(text: &str) -> Polynomial {
    parse_poly(text, &["x"]).unwrap()
}

pub struct OneDim<'a> {
    pub dynamics: &'a str,
    pub support: &'a [f64],
    pub probs: &'a [f64],
    pub x: &'a [(f64, f64)],
    pub x0: &'a [(f64, f64)],
    pub xr: &'a [(f64, f64)],
    pub xhat: Option<&'a [(f64, f64)]>,
    pub mode: Mode,
}

impl OneDim<'_> {
    pub fn build(&self) -> ProblemSpec {
        let model = SystemModel::new(1, 1, vec![parse_poly(self.dynamics, &["x", "t"]).unwrap()]).unwrap();
        let dist = Disturbance::new(self.support.iter().map(|t| vec![*t]).collect(), self.probs.to_vec()).unwrap();
        ProblemSpec::new(ProblemParts {
            state_vars: vec!["x".into()],
            dist_vars: vec!["t".into()],
            model,
            dist,
            x: region(self.x),
            x0: region(self.x0),
            xr: region(self.xr),
            xhat: self.xhat.map(region),
            mode: self.mode,
        })
        .unwrap()
    }
}

/// `x+ = 0.5x + t`, `t = +-0.05`.
pub fn model_a() -> ProblemSpec {
    OneDim {
        dynamics: "0.5*x + t",
        support: &[-0.05, 0.05],
        probs: &[0.5, 0.5],
        x: &[(-1.0, 1.0)],
        x0: &[(-0.1, 0.1)],
        xr: &[(-1.0, -0.9), (0.9, 1.0)],
        xhat: None,
        mode: Mode::AssumedInvariant,
    }
    .build()
}

/// Gambler's ruin on `[0, 10]`, absorbing outside `X`.
pub fn model_b() -> ProblemSpec {
    OneDim {
        dynamics: "x + t",
        support: &[-1.0, 1.0],
        probs: &[0.5, 0.5],
        x: &[(0.0, 10.0)],
        x0: &[(5.0, 5.0)],
        xr: &[(9.0, 10.0)],
        xhat: Some(&[(-1.0, 11.0)]),
        mode: Mode::Xhat,
    }
    .build()
}

/// Deterministic contraction `x+ = 0.5x`.
pub fn model_c() -> ProblemSpec {
    OneDim {
        dynamics: "0.5*x",
        support: &[0.0],
        probs: &[1.0],
        x: &[(-1.0, 1.0)],
        x0: &[(-0.1, 0.1)],
        xr: &[(-1.0, -0.9), (0.9, 1.0)],
        xhat: None,
        mode: Mode::AssumedInvariant,
    }
    .build()
}

/// Drift toward 1: `x+ = 0.5x + 0.5 + t`.
pub fn model_d() -> ProblemSpec {
    OneDim {
        dynamics: "0.5*x + 0.5 + t",
        support: &[-0.05, 0.05],
        probs: &[0.5, 0.5],
        x: &[(0.0, 1.1)],
        x0: &[(0.1, 0.2)],
        xr: &[(0.9, 1.1)],
        xhat: None,
        mode: Mode::AssumedInvariant,
    }
    .build()
}

/// Jump into a separate target component with probability 1/2 per step.
pub fn model_e() -> ProblemSpec {
    OneDim {
        dynamics: "0.45*x + 0.62*t - 0.15*x*t",
        support: &[0.0, 1.0],
        probs: &[0.5, 0.5],
        x: &[(0.0, 0.5), (0.6, 1.0)],
        x0: &[(0.1, 0.2)],
        xr: &[(0.6, 1.0)],
        xhat: None,
        mode: Mode::AssumedInvariant,
    }
    .build()
}

pub fn cert(v: &str, w: Option<&str>, params: Params) -> Certificate {
    Certificate {
        v: poly(v),
        w: w.map(poly),
        params,
    }
}

/// Small deterministic generator for test data (splitmix64).
pub struct Rng(pub u64);

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}
