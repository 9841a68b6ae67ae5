//! Three-stage solve controller: DC ladder, shunt injection, AC ladder.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::ac::{ac_options, solve_ac_opf, WarmStart};
use super::dc::solve_dc_opf;
use super::ipm::IpmOptions;
use super::network::PuNetwork;
use super::precondition::{decommit_generators, inject_shunts, DecommitReport, ShuntReport};
use super::relax::{enforce_impedance_consistency, Level, RelaxationPlan, RelaxedNetwork};
use super::solution::{Attempt, Formulation, OpfSolution, Status};

pub const AC_TIMEOUT: Duration = Duration::from_secs(1800);

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub plan: RelaxationPlan,
    pub max_level: Level,
    pub dc_only: bool,
    pub timeout: Duration,
    pub ipm: IpmOptions,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            plan: RelaxationPlan::default(),
            max_level: Level::L5,
            dc_only: false,
            timeout: AC_TIMEOUT,
            ipm: ac_options(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveResult {
    /// Final DC attempt: the first converged level, or the last failure.
    pub dc: Option<OpfSolution>,
    /// Final AC attempt, as for `dc`.
    pub ac: Option<OpfSolution>,
    pub attempts: Vec<Attempt>,
    pub decommit: DecommitReport,
    pub shunts: ShuntReport,
    /// Branches whose rating was capped for angle consistency at L0.
    pub impedance_capped: usize,
}

impl ProgressiveResult {
    /// Every requested stage produced a converged solution.
    pub fn success(&self, dc_only: bool) -> bool {
        let ok = |s: &Option<OpfSolution>| s.as_ref().is_some_and(|s| s.status.converged());
        ok(&self.dc) && (dc_only || ok(&self.ac))
    }
}

/// Order of AC attempts: plain L0, then the AC1 layer at every level.
pub fn ac_sequence(max: Level) -> Vec<(Level, bool)> {
    let mut seq = vec![(Level::L0, false)];
    seq.extend(Level::up_to(max).map(|l| (l, true)));
    seq
}

/// Runs one AC attempt on its own thread; on timeout the attempt is
/// cancelled and abandoned.
pub fn run_ac_isolated(
    relaxed: RelaxedNetwork,
    warm: Option<WarmStart>,
    opts: IpmOptions,
    timeout: Duration,
) -> OpfSolution {
    let cancel = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let flag = Arc::clone(&cancel);
    let job = relaxed.clone();
    let start = Instant::now();
    let spawned = thread::Builder::new()
        .name(format!("ac-{}", relaxed.level))
        .spawn(move || {
            let sol = solve_ac_opf(&job, warm.as_ref(), &opts, Some(&flag));
            let _ = tx.send(sol);
        });
    if spawned.is_err() {
        return OpfSolution::failed(Status::Infeasible, Formulation::Ac, &relaxed);
    }
    match rx.recv_timeout(timeout) {
        Ok(sol) => sol,
        Err(_) => {
            cancel.store(true, Ordering::Relaxed);
            let mut sol = OpfSolution::failed(Status::Timeout, Formulation::Ac, &relaxed);
            sol.solve_seconds = start.elapsed().as_secs_f64();
            sol
        }
    }
}

/// Decommits, walks the DC ladder to the first converged level, sizes shunts
/// from that dispatch, then walks the AC ladder.
pub fn progressive_solve(net: &PuNetwork, config: &SolveConfig) -> ProgressiveResult {
    let mut base = net.clone();
    let decommit = decommit_generators(&mut base);
    let impedance_capped = enforce_impedance_consistency(&mut base.clone());
    let mut attempts = Vec::new();

    let mut dc = None;
    for level in Level::up_to(config.max_level) {
        let relaxed = config.plan.apply(&base, level, false);
        let sol = solve_dc_opf(&relaxed);
        info!("dc {level}: {}", sol.status);
        attempts.push(Attempt::of(&sol));
        let done = sol.status.converged();
        dc = Some(sol);
        if done {
            break;
        }
    }

    let mut shunts = ShuntReport::default();
    let mut ac = None;
    match dc.as_ref().filter(|d| d.status.converged()) {
        None => warn!("dc-opf failed at every level up to {}", config.max_level),
        Some(d) if !config.dc_only => {
            shunts = inject_shunts(&mut base, d);
            let warm = WarmStart::from_dc(d);
            for (level, ac1) in ac_sequence(config.max_level) {
                let relaxed = config.plan.apply(&base, level, ac1);
                let sol = run_ac_isolated(relaxed, warm.clone(), config.ipm.clone(), config.timeout);
                info!("ac {level}{}: {}", if ac1 { "+ac1" } else { "" }, sol.status);
                attempts.push(Attempt::of(&sol));
                let done = sol.status.converged();
                ac = Some(sol);
                if done {
                    break;
                }
            }
            if !ac.as_ref().is_some_and(|a| a.status.converged()) {
                warn!("ac-opf failed at every level up to {}", config.max_level);
            }
        }
        Some(_) => {}
    }
    ProgressiveResult {
        dc,
        ac,
        attempts,
        decommit,
        shunts,
        impedance_capped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence() {
        let s = ac_sequence(Level::L5);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], (Level::L0, false));
        assert_eq!(s[1], (Level::L0, true));
        assert_eq!(s[6], (Level::L5, true));
    }
}
