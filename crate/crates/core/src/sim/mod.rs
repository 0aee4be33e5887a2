//! Closed-loop time integration with zero-order-hold distributed control and
//! Lyapunov monitors.

pub mod config;
pub mod stepper;

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

pub use config::{ConfigError, ControlMode, IcKind, InitialCondition, MonitorWeights, SimConfig};
pub use stepper::Stepper;

use crate::field::{self, Field, FieldError, Grid2D, Partition};
use crate::linalg::LinalgError;

/// C0 norm above which a run is declared blown up.
pub const BLOWUP_C0: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("implicit operator is not positive definite for this dt: {0}")]
    Factorization(#[from] LinalgError),
    #[error("sampling requested at step {step}, which is not a multiple of {every}")]
    OffSampleGrid { step: usize, every: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub z: Field,
    pub held_u: Vec<f64>,
    pub last_sample_t: f64,
    /// `||z_t||^2` at the end of every step since the last sample.
    pub zt_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub v: f64,
    pub v1: f64,
    pub c0: f64,
    pub lap_sq: f64,
    pub blowup: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSeries {
    pub rows: Vec<MonitorRow>,
}

impl MonitorSeries {
    pub const HEADER: &'static str = "t,V,V1,c0,lap_sq,blowup";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{}",
                r.t, r.v, r.v1, r.c0, r.lap_sq, r.blowup as u8
            )?;
        }
        Ok(())
    }

    pub fn first(&self) -> Option<&MonitorRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&MonitorRow> {
        self.rows.last()
    }

    /// Row nearest to time `t`.
    pub fn at(&self, t: f64) -> Option<&MonitorRow> {
        self.rows.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub series: MonitorSeries,
    pub snapshots: Vec<(f64, Field)>,
    /// `(t_k, held_u)` at every sampling instant (sampled mode only).
    pub control_log: Vec<(f64, Vec<f64>)>,
    pub final_state: SimState,
    pub blowup: bool,
}

impl SimOutput {
    /// Writes `monitor.csv` and `snapshot_t<value>.csv` files into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        self.series.write_csv(io::BufWriter::new(fs::File::create(dir.join("monitor.csv"))?))?;
        for (t, f) in &self.snapshots {
            let path = dir.join(format!("snapshot_t{t}.csv"));
            f.write_csv(io::BufWriter::new(fs::File::create(path)?))?;
        }
        Ok(())
    }
}

/// Measures every subdomain and returns `-mu * y_j`.
pub fn sample_and_hold(state: &mut SimState, partition: &Partition, config: &SimConfig) -> Result<(), SimError> {
    if config.control == ControlMode::Sampled {
        let every = config.steps_per_sample();
        if state.step % every != 0 {
            return Err(SimError::OffSampleGrid { step: state.step, every });
        }
    }
    for s in partition.subdomains() {
        let y = field::measure(&state.z, partition, s, config.measurement)?;
        state.held_u[s.index] = -config.mu * y;
    }
    state.last_sample_t = state.t;
    state.zt_history.clear();
    Ok(())
}

/// Adds `held_u[owner(node)]` to a nodal accumulator.
pub fn apply_control(acc: &mut [f64], grid: &Grid2D, partition: &Partition, held_u: &[f64]) -> Result<(), SimError> {
    partition.check_aligned(grid)?;
    for i in 0..grid.side() {
        for j in 0..grid.side() {
            acc[grid.idx(i, j)] += held_u[partition.owner(grid, i, j)];
        }
    }
    Ok(())
}

/// A configured closed loop ready to integrate.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    grid: Grid2D,
    partition: Partition,
    owners: Vec<usize>,
    stepper: Stepper,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let grid = config.grid()?;
        let partition = config.partition()?;
        let owners = partition.owner_map(&grid)?;
        let stepper = Stepper::new(grid, config.kappa, config.dt)?;
        Ok(Self { config, grid, partition, owners, stepper })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn initial_state(&self) -> SimState {
        SimState {
            t: 0.0,
            step: 0,
            z: self.config.ic.field(self.grid),
            held_u: vec![0.0; self.partition.len()],
            last_sample_t: 0.0,
            zt_history: Vec::new(),
        }
    }

    /// Advances one step with the currently held control.
    pub fn step(&self, state: &mut SimState) {
        let mut u = vec![0.0; self.grid.len()];
        for (k, o) in self.owners.iter().enumerate() {
            u[k] = state.held_u[*o];
        }
        let next = self.stepper.step(&state.z, &u);
        let dt = self.config.dt;
        let vel = next.lin_comb(1.0 / dt, &state.z, -1.0 / dt).expect("same grid");
        state.zt_history.push(field::l2_sq(&vel));
        state.z = next;
        state.step += 1;
        state.t = state.step as f64 * dt;
    }

    fn weights(&self) -> MonitorWeights {
        self.config.monitor.unwrap_or(MonitorWeights { p1: 1.0, p2: 0.0, r: 0.0, delta: 0.0 })
    }

    /// History term `r (t_{k+1} - t) int_{t_k}^t e^{2 delta (s - t)} ||z_s||^2 ds`
    /// by the trapezoidal rule, taking `||z_t||^2` at `t_k` equal to its value
    /// after the first step.
    fn history_term(&self, state: &SimState) -> f64 {
        let w = self.weights();
        if self.config.control != ControlMode::Sampled || w.r == 0.0 || state.zt_history.is_empty() {
            return 0.0;
        }
        let dt = self.config.dt;
        let n = state.zt_history.len();
        let q = |k: usize| state.zt_history[k.saturating_sub(1)];
        let e = |k: usize| (2.0 * w.delta * (k as f64 - n as f64) * dt).exp();
        let mut acc = 0.0;
        for k in 1..=n {
            acc += 0.5 * dt * (e(k - 1) * q(k - 1) + e(k) * q(k));
        }
        let t_next = state.last_sample_t + self.config.h;
        w.r * (t_next - state.t).max(0.0) * acc
    }

    pub fn monitor_row(&self, state: &SimState) -> MonitorRow {
        let w = self.weights();
        let v = field::l2_sq(&state.z);
        let lap_sq = field::l2_sq(&field::laplacian(&state.z).expect("state is clamped"));
        let c0 = field::c0_norm(&state.z);
        let finite = state.z.values().iter().all(|x| x.is_finite());
        MonitorRow {
            t: state.t,
            v,
            v1: w.p1 * v + w.p2 * lap_sq + self.history_term(state),
            c0,
            lap_sq,
            blowup: !finite || c0 > BLOWUP_C0,
        }
    }

    /// Integrates to `t_end`, sampling every `h` (sampled mode) or every step
    /// (continuous mode).
    pub fn run(&self) -> Result<SimOutput, SimError> {
        let c = &self.config;
        let n_steps = c.n_steps();
        let every = match c.control {
            ControlMode::Sampled => c.steps_per_sample(),
            ControlMode::Continuous => 1,
        };
        let snap_steps: Vec<(usize, f64)> = c.snapshots.iter().map(|&t| ((t / c.dt).round() as usize, t)).collect();
        let mut state = self.initial_state();
        let mut out = SimOutput {
            series: MonitorSeries::default(),
            snapshots: Vec::new(),
            control_log: Vec::new(),
            final_state: state.clone(),
            blowup: false,
        };
        loop {
            if state.step % every == 0 && state.step < n_steps {
                sample_and_hold(&mut state, &self.partition, c)?;
                if c.control == ControlMode::Sampled {
                    out.control_log.push((state.t, state.held_u.clone()));
                }
            }
            let row = self.monitor_row(&state);
            let emit = state.step % c.output_stride == 0 || state.step == n_steps || row.blowup;
            if emit {
                out.series.rows.push(row);
            }
            for &(k, t) in &snap_steps {
                if k == state.step {
                    out.snapshots.push((t, state.z.clone()));
                }
            }
            if row.blowup {
                out.blowup = true;
                break;
            }
            if state.step >= n_steps {
                break;
            }
            self.step(&mut state);
        }
        out.final_state = state;
        Ok(out)
    }
}

/// Runs `config` as given.
pub fn run(config: &SimConfig) -> Result<SimOutput, SimError> {
    Simulation::new(config.clone())?.run()
}

/// Runs `config` with the measurement refreshed at every step.
pub fn run_continuous(config: &SimConfig) -> Result<SimOutput, SimError> {
    let mut c = config.clone();
    c.control = ControlMode::Continuous;
    Simulation::new(c)?.run()
}
