//! Parameter sweeps behind the load-versus-K and load-versus-r figures.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytics::{achievable_load, het_lower_bounds, homo_lower_bound, li_baseline};
use crate::lattice::HypercuboidShape;
use crate::placement::PlacementConfig;
use crate::rational::{decimal, fraction, Rational};
use crate::simulator::{simulate, SimOptions};

pub const CSV_HEADER: &str = "K,r,dims,L_sim,L_formula,L1,LB_homo,LB_P1,LB_P2,L_sim_frac,L_formula_frac";

/// Shapes above this many lattice points get no `L_sim` column.
pub const DEFAULT_SIM_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Homogeneous shapes for fixed `K` and each `r` in range.
    FixKIncreaseR,
    /// Homogeneous `[K/2, K/2]` for each `K` in range.
    FixR2IncreaseK,
    /// `(2, K/5), (1, 3K/5)`: two dimensions of `0.2K`, one of `0.6K`.
    HetCase1,
    /// `(2, K/10), (2, 4K/10)`.
    HetCase2,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fix-k-increase-r" => Ok(Self::FixKIncreaseR),
            "fix-r2-increase-k" => Ok(Self::FixR2IncreaseK),
            "het-case1" => Ok(Self::HetCase1),
            "het-case2" => Ok(Self::HetCase2),
            _ => Err(format!(
                "unknown preset {s:?}; expected fix-k-increase-r, fix-r2-increase-k, het-case1 or het-case2"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub preset: Preset,
    /// `K` values; only the first is used by [`Preset::FixKIncreaseR`].
    pub k_values: Vec<usize>,
    /// `r` values for [`Preset::FixKIncreaseR`].
    pub r_values: Vec<usize>,
    pub simulate: bool,
    pub sim_limit: usize,
    pub iv_bits: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(preset: Preset, k_values: Vec<usize>) -> Self {
        Self {
            preset,
            k_values,
            r_values: Vec::new(),
            simulate: true,
            sim_limit: DEFAULT_SIM_LIMIT,
            iv_bits: 8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepValues {
    pub dims: Vec<usize>,
    pub heterogeneous: bool,
    pub l_sim: Option<Rational>,
    /// `Some(false)` when the simulation ran and failed verification.
    pub verified: Option<bool>,
    pub l_formula: Rational,
    pub l1: Rational,
    pub lb_homo: Option<Rational>,
    pub lb_p1: Rational,
    pub lb_p2: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub k: usize,
    pub r: usize,
    /// `Err` holds the reason a point was skipped.
    pub values: Result<SweepValues, String>,
}

type ClassesOf = fn(usize) -> Vec<(usize, usize)>;

enum Point {
    Shape { k: usize, classes: Vec<(usize, usize)>, heterogeneous: bool },
    Skip { k: usize, r: usize, reason: String },
}

fn points(spec: &SweepSpec) -> Vec<Point> {
    let homo = |k: usize, r: usize| {
        if r == 0 || !k.is_multiple_of(r) || k / r < 1 {
            Point::Skip { k, r, reason: format!("r={r} does not divide K={k}") }
        } else {
            Point::Shape { k, classes: vec![(r, k / r)], heterogeneous: false }
        }
    };
    match spec.preset {
        Preset::FixKIncreaseR => {
            let k = spec.k_values.first().copied().unwrap_or(0);
            spec.r_values.iter().map(|&r| homo(k, r)).collect()
        }
        Preset::FixR2IncreaseK => spec.k_values.iter().map(|&k| homo(k, 2)).collect(),
        Preset::HetCase1 | Preset::HetCase2 => {
            let (r, div, classes): (usize, usize, ClassesOf) = match spec.preset {
                Preset::HetCase1 => (3, 5, |k| vec![(2, k / 5), (1, 3 * k / 5)]),
                _ => (4, 10, |k| vec![(2, k / 10), (2, 4 * k / 10)]),
            };
            spec.k_values
                .iter()
                .flat_map(|&k| {
                    let het = if k.is_multiple_of(div) {
                        Point::Shape { k, classes: classes(k), heterogeneous: true }
                    } else {
                        Point::Skip { k, r, reason: format!("K={k} is not a multiple of {div}") }
                    };
                    let mut out = vec![het];
                    if k.is_multiple_of(r) {
                        out.push(homo(k, r));
                    }
                    out
                })
                .collect()
        }
    }
}

fn evaluate(spec: &SweepSpec, k: usize, classes: &[(usize, usize)], heterogeneous: bool) -> SweepRow {
    let r: usize = classes.iter().map(|c| c.0).sum();
    let shape = match HypercuboidShape::from_classes(classes) {
        Ok(s) => s,
        Err(e) => return SweepRow { k, r, values: Err(e.to_string()) },
    };
    let l1 = match li_baseline(k, r, r) {
        Ok(v) => v,
        Err(e) => return SweepRow { k, r, values: Err(e.to_string()) },
    };
    let lb_homo = match (shape.is_homogeneous(), shape.dims()[0]) {
        (true, m) if m >= 2 => homo_lower_bound(m, r).ok(),
        _ => None,
    };
    let (lb_p1, lb_p2) = het_lower_bounds(&shape);
    let (l_sim, verified) = if spec.simulate && shape.points() <= spec.sim_limit {
        let config = PlacementConfig::new(shape.clone()).with_iv_bits(spec.iv_bits).with_seed(spec.seed);
        match simulate(&config, SimOptions::default()) {
            Ok(rep) => (Some(rep.load.clone()), Some(rep.passed())),
            Err(_) => (None, Some(false)),
        }
    } else {
        (None, None)
    };
    SweepRow {
        k,
        r,
        values: Ok(SweepValues {
            dims: shape.dims().to_vec(),
            heterogeneous,
            l_sim,
            verified,
            l_formula: achievable_load(&shape),
            l1,
            lb_homo,
            lb_p1,
            lb_p2,
        }),
    }
}

/// Evaluates every point in parallel; rows come back in parameter order.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    points(spec)
        .into_par_iter()
        .map(|p| match p {
            Point::Shape { k, classes, heterogeneous } => evaluate(spec, k, &classes, heterogeneous),
            Point::Skip { k, r, reason } => SweepRow { k, r, values: Err(reason) },
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let opt = |v: &Option<Rational>| v.as_ref().map(decimal).unwrap_or_default();
    for row in rows {
        match &row.values {
            Err(reason) => {
                let _ = writeln!(out, "{},{},skipped: {reason},,,,,,,,", row.k, row.r);
            }
            Ok(v) => {
                let dims = v.dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
                let l_sim = match v.verified {
                    Some(false) => "fail".to_string(),
                    _ => opt(&v.l_sim),
                };
                let _ = writeln!(
                    out,
                    "{},{},{dims},{l_sim},{},{},{},{},{},{},{}",
                    row.k,
                    row.r,
                    decimal(&v.l_formula),
                    decimal(&v.l1),
                    opt(&v.lb_homo),
                    decimal(&v.lb_p1),
                    decimal(&v.lb_p2),
                    v.l_sim.as_ref().map(fraction).unwrap_or_default(),
                    fraction(&v.l_formula),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fix_r2_rows() {
        let spec = SweepSpec::new(Preset::FixR2IncreaseK, (4..=12).step_by(2).collect());
        let rows = run_sweep(&spec);
        assert_eq!(rows.len(), 5);
        for row in &rows {
            let v = row.values.as_ref().unwrap();
            assert!(v.l_formula < v.l1);
            assert_eq!(v.l_sim.as_ref(), Some(&v.l_formula));
            assert_eq!(v.verified, Some(true));
        }
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert!(csv.lines().nth(1).unwrap().starts_with("4,2,2x2,0.416667,0.416667,0.444444,"));
    }

    #[test]
    fn het_case_shapes() {
        let mut spec = SweepSpec::new(Preset::HetCase1, vec![20]);
        spec.simulate = false;
        let rows = run_sweep(&spec);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].values.as_ref().unwrap().dims, vec![4, 4, 12]);
        let mut spec = SweepSpec::new(Preset::HetCase2, vec![20]);
        spec.simulate = false;
        let rows = run_sweep(&spec);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].values.as_ref().unwrap().dims, vec![2, 2, 8, 8]);
        assert_eq!(rows[1].values.as_ref().unwrap().dims, vec![5, 5, 5, 5]);
    }

    #[test]
    fn skipped_points_become_warning_rows() {
        let mut spec = SweepSpec::new(Preset::HetCase1, vec![12]);
        spec.simulate = false;
        let rows = run_sweep(&spec);
        assert!(rows[0].values.is_err());
        let csv = to_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().starts_with("12,3,skipped: "));
        assert_eq!(csv.lines().nth(1).unwrap().matches(',').count(), CSV_HEADER.matches(',').count());
    }

    #[test]
    fn deterministic_output() {
        let mut spec = SweepSpec::new(Preset::FixKIncreaseR, vec![12]);
        spec.r_values = (1..=6).collect();
        assert_eq!(to_csv(&run_sweep(&spec)), to_csv(&run_sweep(&spec)));
    }

    #[test]
    fn preset_names() {
        assert_eq!("het-case2".parse::<Preset>().unwrap(), Preset::HetCase2);
        assert!("fig5".parse::<Preset>().is_err());
    }
}
