//! Python bindings. Loads come back as `fractions.Fraction`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hypercdc_core::analytics::{self, bound_report};
use hypercdc_core::lattice::{HypercuboidShape, NodeId};
use hypercdc_core::placement::{Placement as CorePlacement, PlacementConfig};
use hypercdc_core::rational::Rational;
use hypercdc_core::shuffle::ShufflePlan;
use hypercdc_core::simulator::{self, Fault, SimOptions};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn frac<'py>(py: Python<'py>, v: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((v.numer().clone(), v.denom().clone()))
}

fn opt_frac<'py>(py: Python<'py>, v: Option<&Rational>) -> PyResult<Option<Bound<'py, PyAny>>> {
    v.map(|v| frac(py, v)).transpose()
}

fn nodes(perm: &[usize]) -> Vec<NodeId> {
    perm.iter().map(|&k| NodeId(k)).collect()
}

/// Hypercuboid node layout `[x_1, ..., x_r]`.
#[pyclass(name = "Shape", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Shape {
    inner: HypercuboidShape,
}

#[pymethods]
impl Shape {
    /// `axis_order` lists dimensions (0-based) from most to least significant.
    #[new]
    #[pyo3(signature = (dims, axis_order=None))]
    fn new(dims: Vec<usize>, axis_order: Option<Vec<usize>>) -> PyResult<Self> {
        let mut inner = HypercuboidShape::new(dims).map_err(err)?;
        if let Some(order) = axis_order {
            inner = inner.with_axis_order(order).map_err(err)?;
        }
        Ok(Self { inner })
    }

    /// Builds from `(count, size)` classes.
    #[staticmethod]
    fn from_classes(classes: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self { inner: HypercuboidShape::from_classes(&classes).map_err(err)? })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.inner.nodes()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    fn is_homogeneous(&self) -> bool {
        self.inner.is_homogeneous()
    }

    /// 1-based node ids of dimension `dim`.
    fn dim_nodes(&self, dim: usize) -> PyResult<Vec<usize>> {
        if dim >= self.inner.rank() {
            return Err(err(format!("dimension {dim} out of range")));
        }
        Ok(self.inner.dim_nodes(dim).map(|n| n.0).collect())
    }

    fn achievable_load<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &analytics::achievable_load(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!("Shape({:?})", self.inner.dims())
    }
}

/// File and function placement for a shape.
#[pyclass(name = "Placement", frozen)]
struct Placement {
    inner: CorePlacement,
}

#[pymethods]
impl Placement {
    #[new]
    #[pyo3(signature = (shape, eta1=1, eta2=1, iv_bits=128, seed=1))]
    fn new(shape: &Shape, eta1: usize, eta2: usize, iv_bits: usize, seed: u64) -> PyResult<Self> {
        let config = PlacementConfig::new(shape.inner.clone()).with_eta(eta1, eta2).with_iv_bits(iv_bits).with_seed(seed);
        Ok(Self { inner: CorePlacement::build(config).map_err(err)? })
    }

    #[getter]
    fn num_files(&self) -> usize {
        self.inner.num_files()
    }

    #[getter]
    fn num_functions(&self) -> usize {
        self.inner.num_functions()
    }

    fn files_of(&self, node: usize) -> PyResult<Vec<usize>> {
        self.check(node)?;
        Ok(self.inner.files_of(NodeId(node)).to_vec())
    }

    fn functions_of(&self, node: usize) -> PyResult<Vec<usize>> {
        self.check(node)?;
        Ok(self.inner.functions_of(NodeId(node)).to_vec())
    }

    fn reducers_of(&self, function: usize) -> PyResult<Vec<usize>> {
        if function == 0 || function > self.inner.num_functions() {
            return Err(err(format!("function {function} out of range")));
        }
        Ok(self.inner.reducers_of(function).into_iter().map(|n| n.0).collect())
    }

    fn export(&self) -> String {
        self.inner.export()
    }

    /// Shuffle plan dump, one message per line.
    #[pyo3(signature = (seed=1))]
    fn plan(&self, seed: u64) -> PyResult<String> {
        Ok(ShufflePlan::build(&self.inner, seed).map_err(err)?.dump(&self.inner))
    }

    /// Per-round message counts.
    #[pyo3(signature = (seed=1))]
    fn message_counts(&self, seed: u64) -> PyResult<Vec<usize>> {
        let plan = ShufflePlan::build(&self.inner, seed).map_err(err)?;
        Ok((1..=self.inner.shape().rank()).map(|g| plan.message_count(g)).collect())
    }
}

impl Placement {
    fn check(&self, node: usize) -> PyResult<()> {
        if node == 0 || node > self.inner.shape().nodes() {
            return Err(err(format!("node {node} out of range")));
        }
        Ok(())
    }
}

fn parse_fault(fault: Option<&str>) -> PyResult<Option<Fault>> {
    let Some(spec) = fault else { return Ok(None) };
    let (kind, idx) = spec.split_once(':').ok_or_else(|| err(format!("bad fault {spec:?}")))?;
    let idx: usize = idx.parse().map_err(err)?;
    match kind {
        "drop" => Ok(Some(Fault::Drop(idx))),
        "corrupt" => Ok(Some(Fault::Corrupt(idx))),
        _ => Err(err(format!("bad fault {spec:?}"))),
    }
}

/// Runs Map, Shuffle and Reduce and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (shape, eta1=1, eta2=1, iv_bits=128, seed=1, verify=true, fault=None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    shape: &Shape,
    eta1: usize,
    eta2: usize,
    iv_bits: usize,
    seed: u64,
    verify: bool,
    fault: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = PlacementConfig::new(shape.inner.clone()).with_eta(eta1, eta2).with_iv_bits(iv_bits).with_seed(seed);
    let options = SimOptions { verify, fault: parse_fault(fault)? };
    let rep = py.detach(|| simulator::simulate(&config, options)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("dims", rep.dims.clone())?;
    let rounds: Vec<(usize, usize, Bound<'py, PyAny>)> =
        rep.rounds.iter().map(|r| Ok((r.round, r.messages, frac(py, &r.units)?))).collect::<PyResult<_>>()?;
    out.set_item("rounds", rounds)?;
    out.set_item("total_units", frac(py, &rep.total_units)?)?;
    out.set_item("total_bits", frac(py, &rep.total_bits)?)?;
    out.set_item("load", frac(py, &rep.load)?)?;
    out.set_item("lc_redraws", rep.lc_redraws)?;
    out.set_item("verified", rep.verification.as_ref().map(|v| v.passed()))?;
    out.set_item("witness", rep.verification.as_ref().and_then(|v| v.witness.as_ref()).map(|w| w.to_string()))?;
    out.set_item("report", rep.to_text())?;
    Ok(out)
}

/// Closed-form loads and lower bounds as a dict.
#[pyfunction]
#[pyo3(signature = (shape, permutation=None))]
fn analyze<'py>(py: Python<'py>, shape: &Shape, permutation: Option<Vec<usize>>) -> PyResult<Bound<'py, PyDict>> {
    let perm = permutation.as_deref().map(nodes);
    let rep = bound_report(&shape.inner, perm.as_deref()).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("dims", rep.dims.clone())?;
    out.set_item("K", rep.k)?;
    out.set_item("r", rep.r)?;
    out.set_item("L_formula", frac(py, &rep.l_formula)?)?;
    out.set_item("L_upper", frac(py, &rep.l_upper)?)?;
    out.set_item("L1", frac(py, &rep.l1)?)?;
    out.set_item("LB_permutation", opt_frac(py, rep.lb_permutation.as_ref().map(|p| &p.value))?)?;
    out.set_item("LB_permutation_steps", rep.lb_permutation.as_ref().map(|p| p.steps.clone()))?;
    out.set_item("LB_homo", opt_frac(py, rep.lb_homo.as_ref())?)?;
    out.set_item("LB_P1", frac(py, &rep.lb_p1)?)?;
    out.set_item("LB_P2", frac(py, &rep.lb_p2)?)?;
    out.set_item("ratio", opt_frac(py, rep.ratio.as_ref())?)?;
    Ok(out)
}

/// Baseline load `L1(K, r, s)`.
#[pyfunction]
fn li_baseline(py: Python<'_>, k: usize, r: usize, s: usize) -> PyResult<Bound<'_, PyAny>> {
    frac(py, &analytics::li_baseline(k, r, s).map_err(err)?)
}

/// Homogeneous lower bound for `m` nodes per dimension and `r` dimensions.
#[pyfunction]
fn homo_lower_bound(py: Python<'_>, m: usize, r: usize) -> PyResult<Bound<'_, PyAny>> {
    frac(py, &analytics::homo_lower_bound(m, r).map_err(err)?)
}

/// `(L_P1, L_P2)` for a shape.
#[pyfunction]
fn het_lower_bounds<'py>(py: Python<'py>, shape: &Shape) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let (p1, p2) = analytics::het_lower_bounds(&shape.inner);
    Ok((frac(py, &p1)?, frac(py, &p2)?))
}

/// Permutation bound via the lattice counting rule.
#[pyfunction]
fn permutation_bound<'py>(py: Python<'py>, shape: &Shape, permutation: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let b = analytics::lattice_permutation_bound(&shape.inner, &nodes(&permutation)).map_err(err)?;
    frac(py, &b.value)
}

#[pymodule]
fn hypercdc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Shape>()?;
    m.add_class::<Placement>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(li_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(homo_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(het_lower_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_bound, m)?)?;
    Ok(())
}
