//! Wear catch-up controller.
//!
//! Once per sampling period the controller receives the mean effective
//! lifetime of the original and the extended disk groups. While chasing it
//! runs a PID over the relative lifetime gap to produce a hotness baseline
//! `u`; migrations toward the lagging disk are approved while that disk's
//! hotness stays below `u`. A sign-based coordinate tuner adjusts one gain per
//! epoch from the wear-leveling share of total I/O.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("lifetime group is empty")]
    EmptyGroup,
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("invalid controller configuration: {0}")]
    ConfigError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Sampling period in host events.
    pub t0: u64,
    /// Exit threshold on the relative lifetime gap.
    pub lambda: f64,
    /// Restart threshold; defaults to `2 * lambda` when absent.
    pub lambda_restart: Option<f64>,
    /// Tuner learning rate.
    pub alpha: f64,
    /// Samples between tuner updates.
    pub epoch: u32,
    /// Output bound used for the integral clamp.
    pub u_max: f64,
    /// Lifetime difference that maps to a PID input of 1.
    pub error_scale: f64,
    /// Migration decisions allowed per sampling period per unit of `u`.
    pub migrations_per_period: u32,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            kp: 0.5,
            ki: 0.01,
            kd: 0.1,
            t0: 4096,
            lambda: 0.02,
            lambda_restart: None,
            alpha: 0.01,
            epoch: 16,
            u_max: 1.0,
            error_scale: 1000.0,
            migrations_per_period: 1,
        }
    }
}

impl ControllerParams {
    pub fn lambda_restart(&self) -> f64 {
        self.lambda_restart.unwrap_or(2.0 * self.lambda)
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |m: &str| Err(ControllerError::ConfigError(m.to_string()));
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 {
            return bad("PID gains must be >= 0");
        }
        if self.t0 == 0 {
            return bad("t0 must be >= 1");
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad("lambda must be in (0, 1)");
        }
        if self.lambda_restart() <= self.lambda {
            return bad("lambda_restart must exceed lambda");
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be > 0");
        }
        if self.epoch == 0 {
            return bad("epoch must be >= 1");
        }
        if !(self.u_max > 0.0) {
            return bad("u_max must be > 0");
        }
        if !(self.error_scale > 0.0 && self.error_scale.is_finite()) {
            return bad("error_scale must be > 0");
        }
        if self.migrations_per_period == 0 {
            return bad("migrations_per_period must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerPhase {
    Idle,
    Chasing,
    Converged,
}

impl ControllerPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerPhase::Idle => "idle",
            ControllerPhase::Chasing => "chasing",
            ControllerPhase::Converged => "converged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub t0: u64,
    pub u_max: f64,
}

impl PidState {
    pub fn new(kp: f64, ki: f64, kd: f64, t0: u64, u_max: f64) -> Self {
        PidState {
            kp,
            ki,
            kd,
            integral: 0.0,
            prev_error: None,
            t0: t0.max(1),
            u_max,
        }
    }

    pub fn from_params(p: &ControllerParams) -> Self {
        PidState::new(p.kp, p.ki, p.kd, p.t0, p.u_max)
    }

    pub fn gains(&self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    fn gain_mut(&mut self, j: usize) -> &mut f64 {
        match j {
            0 => &mut self.kp,
            1 => &mut self.ki,
            _ => &mut self.kd,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = None;
    }
}

/// One PID update. The derivative term is the absolute change of the error
/// over one sampling period; the first sample has no derivative.
pub fn pid_step(s: &mut PidState, e_now: f64) -> f64 {
    s.integral += e_now;
    if s.ki > 0.0 {
        let bound = s.u_max / s.ki;
        s.integral = s.integral.clamp(-bound, bound);
    }
    let derivative = s.prev_error.map_or(0.0, |prev| (e_now - prev).abs());
    s.prev_error = Some(e_now);
    s.kp * e_now + s.ki * s.integral + s.kd * derivative
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerState {
    pub alpha: f64,
    pub prev_loss: Option<f64>,
    pub coord_cursor: usize,
}

impl TunerState {
    pub fn new(alpha: f64) -> Self {
        TunerState {
            alpha,
            prev_loss: None,
            coord_cursor: 0,
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Move one gain by `-alpha * sign(J_prev - J_now)`, clamped at zero. The
/// first observation only records the loss.
pub fn tune_gains(t: &mut TunerState, s: &mut PidState, loss_now: f64) {
    if let Some(prev) = t.prev_loss {
        let step = t.alpha * sign(prev - loss_now);
        let gain = s.gain_mut(t.coord_cursor);
        *gain = (*gain - step).max(0.0);
        t.coord_cursor = (t.coord_cursor + 1) % 3;
    }
    t.prev_loss = Some(loss_now);
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean effective lifetime of the originals minus that of the extended disks.
pub fn lifetime_error(originals: &[f64], extendeds: &[f64]) -> Result<f64, ControllerError> {
    if originals.is_empty() || extendeds.is_empty() {
        return Err(ControllerError::EmptyGroup);
    }
    Ok(mean(originals) - mean(extendeds))
}

pub fn should_exit(l_o_mean: f64, l_s_mean: f64, lambda: f64) -> Result<bool, ControllerError> {
    if !(l_o_mean > 0.0) {
        return Err(ControllerError::DomainError(format!(
            "original-group lifetime must be > 0, got {l_o_mean}"
        )));
    }
    Ok((l_o_mean - l_s_mean).abs() / l_o_mean < lambda)
}

pub fn approve_migration(disk_hotness_scalar: f64, u: f64) -> bool {
    disk_hotness_scalar < u
}

/// Relative gap between the groups, with the degenerate zero-wear cases
/// resolved: both zero is balanced, only the originals at zero is maximal.
pub fn relative_gap(l_o_mean: f64, l_s_mean: f64) -> f64 {
    if l_o_mean > 0.0 {
        (l_o_mean - l_s_mean).abs() / l_o_mean
    } else if l_s_mean > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Controller output for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlSample {
    pub error: f64,
    pub relative_gap: f64,
    pub u: f64,
    pub gains: [f64; 3],
    pub phase: ControllerPhase,
}

/// PID + tuner + phase machine, driven once per sampling period.
#[derive(Debug, Clone)]
pub struct WearController {
    params: ControllerParams,
    pid: PidState,
    tuner: TunerState,
    phase: ControllerPhase,
    samples_in_epoch: u32,
    epoch_start: (u64, u64),
    transitions: Vec<(u64, ControllerPhase, f64)>,
}

impl WearController {
    pub fn new(params: ControllerParams) -> Self {
        WearController {
            pid: PidState::from_params(&params),
            tuner: TunerState::new(params.alpha),
            params,
            phase: ControllerPhase::Idle,
            samples_in_epoch: 0,
            epoch_start: (0, 0),
            transitions: Vec::new(),
        }
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn phase(&self) -> ControllerPhase {
        self.phase
    }

    pub fn pid(&self) -> &PidState {
        &self.pid
    }

    /// `(event index, new phase, relative gap)` for every phase change.
    pub fn transitions(&self) -> &[(u64, ControllerPhase, f64)] {
        &self.transitions
    }

    fn enter(&mut self, phase: ControllerPhase, event: u64, io: (u64, u64), gap: f64) {
        if phase == ControllerPhase::Chasing {
            self.pid.reset();
            self.samples_in_epoch = 0;
            self.epoch_start = io;
        }
        self.phase = phase;
        self.transitions.push((event, phase, gap));
    }

    /// Advance one sample. The PID sees the absolute lifetime difference
    /// divided by `error_scale`, so the chase speeds up as the lifetime
    /// measure itself grows.
    ///
    /// `ready` is false until scaling redistribution has finished. `io` is the
    /// cumulative `(wl_page_ios, total_page_ios)` pair used by the tuner.
    pub fn sample(
        &mut self,
        l_o_mean: f64,
        l_s_mean: f64,
        ready: bool,
        event: u64,
        io: (u64, u64),
    ) -> ControlSample {
        let input = (l_o_mean - l_s_mean).abs() / self.params.error_scale;
        self.sample_with_input(l_o_mean, l_s_mean, input, ready, event, io)
    }

    /// Like [`sample`](Self::sample), but the PID is fed `pid_input` instead
    /// of the scaled lifetime difference. Phase changes follow the relative
    /// gap either way.
    pub fn sample_with_input(
        &mut self,
        l_o_mean: f64,
        l_s_mean: f64,
        pid_input: f64,
        ready: bool,
        event: u64,
        io: (u64, u64),
    ) -> ControlSample {
        let error = l_o_mean - l_s_mean;
        let gap = relative_gap(l_o_mean, l_s_mean);
        let lambda = self.params.lambda;
        let restart = self.params.lambda_restart();
        match self.phase {
            ControllerPhase::Idle if ready => {
                if gap < lambda {
                    self.enter(ControllerPhase::Converged, event, io, gap);
                } else if gap >= restart {
                    self.enter(ControllerPhase::Chasing, event, io, gap);
                }
            }
            ControllerPhase::Chasing if gap < lambda => {
                self.enter(ControllerPhase::Converged, event, io, gap);
            }
            ControllerPhase::Converged if gap > restart => {
                self.enter(ControllerPhase::Chasing, event, io, gap);
            }
            _ => {}
        }
        let u = if self.phase == ControllerPhase::Chasing {
            let u = pid_step(&mut self.pid, pid_input);
            self.samples_in_epoch += 1;
            if self.samples_in_epoch >= self.params.epoch {
                let d_wl = io.0 - self.epoch_start.0;
                let d_total = io.1 - self.epoch_start.1;
                if d_total > 0 {
                    tune_gains(&mut self.tuner, &mut self.pid, d_wl as f64 / d_total as f64);
                }
                self.samples_in_epoch = 0;
                self.epoch_start = io;
            }
            u
        } else {
            0.0
        };
        ControlSample {
            error,
            relative_gap: gap,
            u,
            gains: self.pid.gains(),
            phase: self.phase,
        }
    }
}
