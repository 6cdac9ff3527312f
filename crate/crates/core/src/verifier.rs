//! Closed-loop reachability for a neural-network controlled plant:
//! alternate controller range abstraction and flowpipe construction over a
//! bounded number of control steps, render three-valued property verdicts,
//! and provide the concrete simulation oracle used for containment
//! checking.

use std::time::Instant;

use thiserror::Error;

use crate::bernstein::RemainderMode;
use crate::flowpipe::{integrate_control_step, FlowError, Flowpipe, PolynomialODE};
use crate::interval::Interval;
use crate::network::NeuralNetwork;
use crate::polynomial::{Domain, SparsePolynomial};
use crate::propagation::{
    nn_output_tm_with_stats, nn_output_tm_symbolic_with_stats, AbstractionConfig,
    PropagationError,
};
use crate::taylor_model::{TMVector, TaylorModel};

/// A controlled plant: `n` state equations over the `n + m` variables
/// `(x, u)`, a controller mapping states to the `m` control inputs held
/// constant for `control_step` seconds, and a box of initial states.
#[derive(Debug, Clone)]
pub struct NNCSModel {
    /// Extended square system; the trailing `m` control rows are zero.
    pub ode: PolynomialODE,
    pub net: NeuralNetwork,
    pub control_step: f64,
    pub init: Domain,
    pub state_names: Vec<String>,
    pub control_names: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model is inconsistent: {0}")]
    Inconsistent(String),
}

impl NNCSModel {
    /// Build from the `n` state equations (each over the `n + m` variables,
    /// states first); zero-derivative rows for the controls are appended.
    pub fn new(
        state_rhs: Vec<SparsePolynomial>,
        net: NeuralNetwork,
        control_step: f64,
        init: Domain,
        state_names: Vec<String>,
        control_names: Vec<String>,
    ) -> Result<Self, ModelError> {
        let n = state_names.len();
        let m = control_names.len();
        if state_rhs.len() != n {
            return Err(ModelError::Inconsistent(format!(
                "{} equations for {n} state variables",
                state_rhs.len()
            )));
        }
        if m == 0 {
            return Err(ModelError::Inconsistent("no control variables".into()));
        }
        if state_rhs.iter().any(|p| p.num_vars() != n + m) {
            return Err(ModelError::Inconsistent(
                "state equations must range over all state and control variables".into(),
            ));
        }
        if net.input_dim() != n {
            return Err(ModelError::Inconsistent(format!(
                "controller takes {} inputs but the plant has {n} states",
                net.input_dim()
            )));
        }
        if net.output_dim() != m {
            return Err(ModelError::Inconsistent(format!(
                "controller emits {} outputs but the plant has {m} control inputs",
                net.output_dim()
            )));
        }
        if !(control_step > 0.0) {
            return Err(ModelError::Inconsistent("control step must be positive".into()));
        }
        if init.dim() != n {
            return Err(ModelError::Inconsistent(format!(
                "initial box has {} dimensions for {n} states",
                init.dim()
            )));
        }
        Ok(NNCSModel {
            ode: PolynomialODE::with_zero_derivative_controls(state_rhs, m),
            net,
            control_step,
            init,
            state_names,
            control_names,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_names.len()
    }

    pub fn control_dim(&self) -> usize {
        self.control_names.len()
    }

    /// The affine initial model: states normalized onto `z in [-1,1]^n` by
    /// `p_j(z) = center_j + halfwidth_j * z_j` with zero remainder.
    pub fn initial_tm(&self, order: usize) -> TMVector {
        let n = self.state_dim();
        let domain = Domain::unit(n);
        let comps = (0..n)
            .map(|j| {
                let b = self.init.get(j);
                let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
                if b.mid() != 0.0 {
                    terms.push((vec![0; n], b.mid()));
                }
                let half = 0.5 * (b.hi - b.lo);
                if half != 0.0 {
                    let mut e = vec![0; n];
                    e[j] = 1;
                    terms.push((e, half));
                }
                let refs: Vec<(&[usize], f64)> =
                    terms.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
                TaylorModel::new(
                    SparsePolynomial::from_terms(n, &refs),
                    Interval::zero(),
                    domain.clone(),
                    order,
                )
            })
            .collect();
        TMVector::new(comps)
    }

    /// Parameter of an initial state in the normalized domain.
    pub fn normalize_initial(&self, x0: &[f64]) -> Vec<f64> {
        assert_eq!(x0.len(), self.state_dim());
        x0.iter()
            .enumerate()
            .map(|(j, x)| {
                let b = self.init.get(j);
                let half = 0.5 * (b.hi - b.lo);
                if half == 0.0 {
                    0.0
                } else {
                    ((x - b.mid()) / half).clamp(-1.0, 1.0)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachConfig {
    /// Taylor model order for flowpipes.
    pub order: usize,
    /// Override for the controller-propagation order (defaults to `order`).
    pub nn_order: Option<usize>,
    pub bernstein_order: usize,
    pub samples: usize,
    /// Flowpipe substeps per control step.
    pub flow_substeps: usize,
    /// Use the symbolic-remainder controller propagation.
    pub symbolic: bool,
    pub remainder_mode: RemainderMode,
}

impl Default for ReachConfig {
    fn default() -> Self {
        ReachConfig {
            order: 4,
            nn_order: None,
            bernstein_order: 2,
            samples: 100,
            flow_substeps: 10,
            symbolic: false,
            remainder_mode: RemainderMode::Sampled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Proved,
    Disproved,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Proved => "proved",
            Verdict::Disproved => "disproved",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    /// The region is an unsafe set: proved means never entered.
    Safety,
    /// The region is a target set: proved means certainly reached.
    Reachability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckAt {
    FinalStep,
    AllSteps,
}

#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub region: Domain,
    pub kind: PropertyKind,
    pub check_at: CheckAt,
}

#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub wall_seconds: f64,
    /// Largest state remainder width per control step.
    pub step_max_remainder_width: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    /// `(control_step, flowpipe)` in execution order.
    pub flowpipes: Vec<(usize, Flowpipe)>,
    /// Hull of the state enclosures within each control step.
    pub step_ranges: Vec<Vec<Interval>>,
    /// State enclosure at the end of the horizon.
    pub final_range: Vec<Interval>,
    pub verdict: Option<Verdict>,
    pub stats: RunStats,
    pub control_step: f64,
    pub flow_substeps: usize,
    pub init: Domain,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("control step {control_step}: {source}")]
    Flow {
        control_step: usize,
        source: FlowError,
    },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

/// Bounded-horizon reachability: for each of `steps` control steps,
/// enclose the controller's range on the current state model, extend the
/// state with the constant control models, and integrate the plant over
/// the control step, collecting every flowpipe along the way.
pub fn run_reachability(
    model: &NNCSModel,
    steps: usize,
    cfg: &ReachConfig,
    target: Option<&TargetSpec>,
) -> Result<ReachResult, VerifyError> {
    if steps == 0 {
        return Err(VerifyError::BadConfig("need at least one control step".into()));
    }
    if cfg.order == 0 || cfg.bernstein_order == 0 || cfg.samples == 0 || cfg.flow_substeps == 0 {
        return Err(VerifyError::BadConfig(
            "orders, sample count and substep count must be at least 1".into(),
        ));
    }
    let started = Instant::now();
    let n = model.state_dim();
    let abs_cfg = AbstractionConfig {
        bernstein_order: cfg.bernstein_order,
        samples: cfg.samples,
        mode: cfg.remainder_mode,
    };

    let mut state = model.initial_tm(cfg.order);
    let mut flowpipes = Vec::with_capacity(steps * cfg.flow_substeps);
    let mut step_ranges = Vec::with_capacity(steps);
    let mut stats = RunStats::default();

    for step in 0..steps {
        let nn_input = match cfg.nn_order {
            Some(k) => state.with_order(k),
            None => state.clone(),
        };
        let (controls, _) = if cfg.symbolic {
            nn_output_tm_symbolic_with_stats(&model.net, &nn_input, &abs_cfg)?
        } else {
            nn_output_tm_with_stats(&model.net, &nn_input, &abs_cfg)?
        };
        let controls = controls.with_order(cfg.order);

        let (pipes, next) = integrate_control_step(
            &model.ode,
            &state,
            Some(&controls),
            model.control_step,
            cfg.flow_substeps,
            cfg.order,
        )
        .map_err(|source| VerifyError::Flow {
            control_step: step,
            source,
        })?;

        let mut hull: Vec<Interval> = pipes[0].tm.range_box();
        let mut max_rem_width = 0.0f64;
        for pipe in &pipes {
            for (h, r) in hull.iter_mut().zip(pipe.tm.range_box()) {
                *h = h.hull(&r);
            }
            for c in pipe.tm.components() {
                max_rem_width = max_rem_width.max(c.rem.width());
            }
        }
        step_ranges.push(hull);
        stats.step_max_remainder_width.push(max_rem_width);
        flowpipes.extend(pipes.into_iter().map(|p| (step, p)));
        state = next;
    }

    stats.wall_seconds = started.elapsed().as_secs_f64();
    let mut result = ReachResult {
        flowpipes,
        step_ranges,
        final_range: state.range_box().into_iter().take(n).collect(),
        verdict: None,
        stats,
        control_step: model.control_step,
        flow_substeps: cfg.flow_substeps,
        init: model.init.clone(),
    };
    result.verdict = target.map(|t| check_property(&result, t));
    Ok(result)
}

fn box_subset(a: &[Interval], b: &Domain) -> bool {
    a.iter()
        .enumerate()
        .all(|(i, iv)| iv.is_subset_of(&b.get(i)))
}

fn box_intersects(a: &[Interval], b: &Domain) -> bool {
    a.iter().enumerate().all(|(i, iv)| iv.intersects(&b.get(i)))
}

/// Three-valued verdict of a safety or reachability property against the
/// computed enclosures.
pub fn check_property(result: &ReachResult, spec: &TargetSpec) -> Verdict {
    assert_eq!(
        spec.region.dim(),
        result.final_range.len(),
        "property dimension mismatch"
    );
    let step_boxes: Vec<Vec<Interval>> = match spec.check_at {
        CheckAt::FinalStep => vec![result.final_range.clone()],
        CheckAt::AllSteps => result
            .flowpipes
            .iter()
            .map(|(_, p)| p.tm.range_box())
            .collect(),
    };
    match spec.kind {
        PropertyKind::Safety => {
            if step_boxes.iter().all(|b| !box_intersects(b, &spec.region)) {
                Verdict::Proved
            } else if step_boxes.iter().any(|b| box_subset(b, &spec.region)) {
                Verdict::Disproved
            } else {
                Verdict::Unknown
            }
        }
        PropertyKind::Reachability => {
            if step_boxes.iter().any(|b| box_subset(b, &spec.region)) {
                Verdict::Proved
            } else if step_boxes.iter().all(|b| !box_intersects(b, &spec.region)) {
                Verdict::Disproved
            } else {
                Verdict::Unknown
            }
        }
    }
}

/// A concrete execution: time-stamped states sampled at the fine
/// integration resolution, starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("fine time step {fine_dt} does not divide the control step {control_step}")]
    StepMismatch { fine_dt: f64, control_step: f64 },
    #[error("state diverged (non-finite) at t = {t}")]
    Diverged { t: f64 },
    #[error("initial state outside the initial box")]
    BadInitialState,
}

/// Classical fourth-order Runge-Kutta integration with the control inputs
/// recomputed at every control step boundary and held constant in between.
pub fn simulate(
    model: &NNCSModel,
    x0: &[f64],
    steps: usize,
    fine_dt: f64,
) -> Result<Trajectory, SimulationError> {
    if !model.init.contains_point(x0) {
        return Err(SimulationError::BadInitialState);
    }
    let per_step = (model.control_step / fine_dt).round();
    if per_step < 1.0 || (per_step * fine_dt - model.control_step).abs() > 1e-9 * model.control_step
    {
        return Err(SimulationError::StepMismatch {
            fine_dt,
            control_step: model.control_step,
        });
    }
    let per_step = per_step as usize;
    let n = model.state_dim();

    let deriv = |x: &[f64], u: &[f64]| -> Vec<f64> {
        let full: Vec<f64> = x.iter().chain(u.iter()).copied().collect();
        (0..n).map(|j| model.ode.equation(j).eval(&full)).collect()
    };

    let mut state = x0.to_vec();
    let mut samples = Vec::with_capacity(steps * per_step + 1);
    samples.push((0.0, state.clone()));
    for step in 0..steps {
        let u = model.net.forward(&state);
        for sub in 0..per_step {
            let h = fine_dt;
            let k1 = deriv(&state, &u);
            let s2: Vec<f64> = state.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = deriv(&s2, &u);
            let s3: Vec<f64> = state.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = deriv(&s3, &u);
            let s4: Vec<f64> = state.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = deriv(&s4, &u);
            for (j, x) in state.iter_mut().enumerate() {
                *x += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            let t = (step * per_step + sub + 1) as f64 * fine_dt;
            if state.iter().any(|v| !v.is_finite()) {
                return Err(SimulationError::Diverged { t });
            }
            samples.push((t, state.clone()));
        }
    }
    Ok(Trajectory { samples })
}

/// One sample of a trajectory that escaped its covering flowpipe box.
#[derive(Debug, Clone)]
pub struct Violation {
    pub time: f64,
    pub component: usize,
    pub value: f64,
    pub enclosure: Interval,
}

#[derive(Debug, Error)]
pub enum ContainmentError {
    #[error("sample time {t} is outside the computed horizon {horizon}")]
    TimeOutOfRange { t: f64, horizon: f64 },
}

/// Check a concrete trajectory against the point-wise enclosures: for each
/// sample, the flowpipe covering its time, evaluated at the trajectory's
/// normalized initial parameter, must contain the state.
pub fn containment_check(
    result: &ReachResult,
    model: &NNCSModel,
    trajectory: &Trajectory,
) -> Result<Vec<Violation>, ContainmentError> {
    let steps = result.step_ranges.len();
    let substeps = result.flow_substeps;
    let delta_c = result.control_step;
    let delta = delta_c / substeps as f64;
    let horizon = steps as f64 * delta_c;
    let x0 = &trajectory.samples[0].1;
    let z = model.normalize_initial(x0);

    let mut violations = Vec::new();
    for (t, state) in &trajectory.samples {
        if *t > horizon * (1.0 + 1e-12) || *t < 0.0 {
            return Err(ContainmentError::TimeOutOfRange { t: *t, horizon });
        }
        let step = ((t / delta_c).floor() as usize).min(steps - 1);
        let in_step = t - step as f64 * delta_c;
        let sub = ((in_step / delta).floor() as usize).min(substeps - 1);
        let t_local = (in_step - sub as f64 * delta).clamp(0.0, delta);
        let (step_id, pipe) = &result.flowpipes[step * substeps + sub];
        debug_assert_eq!(*step_id, step);
        debug_assert_eq!(pipe.step_index, sub);

        let mut point = z.clone();
        point.push(t_local);
        for (c, value) in state.iter().enumerate() {
            let enc = pipe.tm.component(c).enclosure_at(&point);
            let tol = 1e-9 * (1.0 + enc.magnitude());
            if !enc.inflate(tol).contains(*value) {
                violations.push(Violation {
                    time: *t,
                    component: c,
                    value: *value,
                    enclosure: enc,
                });
            }
        }
    }
    Ok(violations)
}
