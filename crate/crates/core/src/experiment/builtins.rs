//! Named benchmark fields.
//!
//! Specs are `name` or `name:key=value,...`; `wells:` takes a `;`-separated
//! site list instead (`wells:0.2,0.3;0.7,0.6`).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stochastic::{sample_hamiltonian, RandomFieldSpec};
use crate::torus::{PeriodicGrid, ScalarField};

/// Sites of the two-well benchmark.
pub const TWO_WELL_SITES: [[f64; 2]; 2] = [[0.25, 0.25], [0.75, 0.75]];
/// Sites of the three-well benchmark; dyadic so they fall on grid nodes for `N ≥ 16`.
pub const WELLS3_SITES: [[f64; 2]; 3] = [[0.1875, 0.25], [0.6875, 0.375], [0.4375, 0.8125]];
pub const SINGLE_MIN_SITE: [f64; 2] = [0.5, 0.5];

/// `(usage, description)` for `list-builtins`.
pub const CATALOGUE: [(&str, &str); 8] = [
    ("zero", "H ≡ 0"),
    ("flat", "constant 1 (flat density for Hele-Shaw runs)"),
    ("cosine:a=<a>", "a·cos(2πx) in 1D, a·(cos 2πx + cos 2πy) in 2D"),
    ("twowell", "2D wells at (0.25,0.25) and (0.75,0.75)"),
    ("wells3", "2D wells at (0.1875,0.25), (0.6875,0.375), (0.4375,0.8125)"),
    ("singlemin", "2D single well at (0.5,0.5)"),
    ("wells:<x,y;...>", "wells at the given sites (one coordinate each in 1D)"),
    ("random:h=<h>,kmax=<k>,c=<c>,seed=<s>", "1D Gaussian series with mode variance c·k^(−3−2h)"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Zero,
    Flat,
    Cosine { a: f64 },
    Wells(Vec<[f64; 2]>),
    Random(RandomFieldSpec),
}

fn parse_f64(spec: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Config(format!("builtin `{spec}`: `{v}` is not a number")))
}

fn key_values<'a>(spec: &str, args: &'a str) -> Result<Vec<(&'a str, &'a str)>> {
    args.split(',')
        .filter(|s| !s.is_empty())
        .map(|kv| kv.split_once('=').ok_or_else(|| Error::Config(format!("builtin `{spec}`: expected key=value, got `{kv}`"))))
        .collect()
}

pub fn parse(spec: &str) -> Result<Builtin> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let no_args = |b: Builtin| if args.is_empty() { Ok(b) } else { Err(Error::Config(format!("builtin `{name}` takes no arguments"))) };
    match name {
        "zero" => no_args(Builtin::Zero),
        "flat" => no_args(Builtin::Flat),
        "twowell" => no_args(Builtin::Wells(TWO_WELL_SITES.to_vec())),
        "wells3" => no_args(Builtin::Wells(WELLS3_SITES.to_vec())),
        "singlemin" => no_args(Builtin::Wells(vec![SINGLE_MIN_SITE])),
        "cosine" => {
            let mut a = 1.0;
            for (k, v) in key_values(spec, args)? {
                match k {
                    "a" => a = parse_f64(spec, v)?,
                    _ => return Err(Error::Config(format!("builtin `{spec}`: unknown key `{k}`"))),
                }
            }
            Ok(Builtin::Cosine { a })
        }
        "wells" => {
            let sites = args
                .split(';')
                .map(|site| {
                    let c: Vec<f64> = site.split(',').map(|v| parse_f64(spec, v.trim())).collect::<Result<_>>()?;
                    match c.as_slice() {
                        [x] => Ok([*x, 0.0]),
                        [x, y] => Ok([*x, *y]),
                        _ => Err(Error::Config(format!("builtin `{spec}`: bad site `{site}`"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Builtin::Wells(sites))
        }
        "random" => {
            let mut s = RandomFieldSpec { h_exponent: 0.5, k_max: 0, amplitude: 1.0, seed: 0 };
            for (k, v) in key_values(spec, args)? {
                match k {
                    "h" => s.h_exponent = parse_f64(spec, v)?,
                    "kmax" => s.k_max = parse_f64(spec, v)? as usize,
                    "c" => s.amplitude = parse_f64(spec, v)?,
                    "seed" => s.seed = parse_f64(spec, v)? as u64,
                    _ => return Err(Error::Config(format!("builtin `{spec}`: unknown key `{k}`"))),
                }
            }
            Ok(Builtin::Random(s))
        }
        _ => Err(Error::UnknownBuiltin(spec.to_string())),
    }
}

/// `min_s Σ_a sin²(π(x_a − s_a))/π²`: smooth, periodic, zero exactly at the
/// sites and quadratic `|x − s|²` near each.
pub fn wells(grid: &PeriodicGrid, sites: &[[f64; 2]]) -> Result<ScalarField> {
    if sites.is_empty() {
        return Err(Error::EmptySiteSet);
    }
    let d = grid.dim();
    Ok(ScalarField::from_fn(*grid, |x| {
        sites
            .iter()
            .map(|s| (0..d).map(|a| (PI * (x[a] - s[a])).sin().powi(2)).sum::<f64>() / (PI * PI))
            .fold(f64::INFINITY, f64::min)
    }))
}

impl Builtin {
    pub fn sample(&self, grid: &PeriodicGrid) -> Result<ScalarField> {
        match self {
            Builtin::Zero => Ok(ScalarField::zeros(*grid)),
            Builtin::Flat => Ok(ScalarField::constant(*grid, 1.0)),
            Builtin::Cosine { a } => Ok(ScalarField::from_fn(*grid, |x| {
                let c = (2.0 * PI * x[0]).cos();
                if grid.dim() == 1 {
                    a * c
                } else {
                    a * (c + (2.0 * PI * x[1]).cos())
                }
            })),
            Builtin::Wells(sites) => wells(grid, sites),
            Builtin::Random(spec) => {
                let spec = RandomFieldSpec { k_max: if spec.k_max == 0 { grid.n() / 2 } else { spec.k_max }, ..*spec };
                sample_hamiltonian(&spec, grid)
            }
        }
    }

    /// Well sites, if the field is a well benchmark.
    pub fn sites(&self) -> Option<&[[f64; 2]]> {
        match self {
            Builtin::Wells(s) => Some(s),
            _ => None,
        }
    }
}

/// Parse and sample in one go.
pub fn builtin_hamiltonian(spec: &str, grid: &PeriodicGrid) -> Result<ScalarField> {
    parse(spec)?.sample(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_matches_closed_form() {
        let g = PeriodicGrid::line(256).unwrap();
        let f = builtin_hamiltonian("cosine:a=1.0", &g).unwrap();
        for (k, v) in f.values().iter().enumerate() {
            assert!((v - (2.0 * PI * g.coord(k)[0]).cos()).abs() <= 1e-15);
        }
        assert_eq!(builtin_hamiltonian("zero", &g).unwrap(), ScalarField::zeros(g));
    }

    #[test]
    fn wells3_has_three_isolated_minima_at_the_sites() {
        let g = PeriodicGrid::square(64).unwrap();
        let f = builtin_hamiltonian("wells3", &g).unwrap();
        let n = g.n() as isize;
        let mut minima = Vec::new();
        for k in 0..g.len() {
            let [i, j] = g.multi_index(k);
            let (i, j) = (i as isize, j as isize);
            let v = f.values()[k];
            let strict = (-1..=1)
                .flat_map(|a| (-1..=1).map(move |b| (a, b)))
                .filter(|&d| d != (0, 0))
                .all(|(a, b)| f.values()[g.index((i + a).rem_euclid(n), (j + b).rem_euclid(n))] > v);
            if strict {
                minima.push(g.coord(k));
            }
        }
        assert_eq!(minima.len(), 3, "{minima:?}");
        for s in WELLS3_SITES {
            assert!(minima.iter().any(|m| (m[0] - s[0]).abs() < 1e-12 && (m[1] - s[1]).abs() < 1e-12));
            assert_eq!(f.values()[g.nearest_node(s)], 0.0);
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(parse("wells:0.2,0.3;0.7,0.6").unwrap(), Builtin::Wells(vec![[0.2, 0.3], [0.7, 0.6]]));
        assert_eq!(parse("wells:0.25;0.75").unwrap(), Builtin::Wells(vec![[0.25, 0.0], [0.75, 0.0]]));
        assert!(matches!(parse("cosine:b=2"), Err(Error::Config(_))));
        assert!(matches!(parse("zero:a=1"), Err(Error::Config(_))));
        assert!(matches!(parse("mystery"), Err(Error::UnknownBuiltin(_))));
        let g = PeriodicGrid::line(64).unwrap();
        let r = builtin_hamiltonian("random:h=0.5,c=1e-3,seed=4", &g).unwrap();
        assert_eq!(r, builtin_hamiltonian("random:h=0.5,c=1e-3,seed=4", &g).unwrap());
    }
}
