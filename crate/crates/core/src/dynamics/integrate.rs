use super::{check_window, energy_of, ModelParams, StrangPropagator};
use crate::error::{Error, Result};
use crate::lattice::{DiffusionTrace, LatticeState, TraceMetadata};
use crate::potential::Potential;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    /// Tail observable `Σ_{|k|>j0} |q_k|²` is recorded for this `j0`.
    pub j0: usize,
    /// Abort when the mass on the outer `edge_width` sites at each end
    /// exceeds this fraction of the total. `None` disables the check. On
    /// small windows the edge layer is clamped to `W / 2` sites.
    pub boundary_fraction: Option<f64>,
    pub edge_width: usize,
    /// Boundary check cadence in steps (it also runs at every sample).
    pub check_every: usize,
}

impl IntegrateOptions {
    pub fn new(j0: usize) -> Self {
        Self {
            j0,
            boundary_fraction: Some(1e-6),
            edge_width: 16,
            check_every: 1000,
        }
    }
}

/// Times `0, t_first·10^{k/per_decade}, …` up to and including `t_final`.
pub fn log_grid(t_first: f64, t_final: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(t_first > 0.0 && t_final >= t_first && per_decade > 0) {
        return Err(Error::InvalidParameter(format!(
            "log grid needs 0 < t_first <= t_final and per_decade > 0 (got {t_first}, {t_final}, {per_decade})"
        )));
    }
    let mut grid = vec![0.0];
    let decades = (t_final / t_first).log10();
    let n = (decades * per_decade as f64 + 1e-9).floor() as usize;
    for k in 0..=n {
        let t = t_first * 10f64.powf(k as f64 / per_decade as f64);
        if t < t_final * (1.0 - 1e-12) {
            grid.push(t);
        }
    }
    grid.push(t_final);
    grid.dedup();
    Ok(grid)
}

/// Integrates from `state.time()` and samples the observables at every grid
/// time (grid times are absolute and must lie in `[state.time(), t_final]`).
///
/// Between consecutive samples `Δ` apart the step is `Δ / ⌈Δ/dt⌉`, so every
/// sample lands exactly on a step boundary.
pub fn integrate(
    state: &LatticeState,
    pot: &Potential,
    params: &ModelParams,
    t_final: f64,
    sample_grid: &[f64],
    options: &IntegrateOptions,
) -> Result<(DiffusionTrace, LatticeState)> {
    check_window(state, pot)?;
    params.validate()?;
    let t0 = state.time();
    if sample_grid.is_empty() {
        return Err(Error::InvalidParameter("empty sample grid".into()));
    }
    if sample_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sample grid must be strictly increasing".into(),
        ));
    }
    if sample_grid[0] < t0 || *sample_grid.last().unwrap() > t_final {
        return Err(Error::InvalidParameter(format!(
            "sample grid must lie in [{t0}, {t_final}]"
        )));
    }
    if options.j0 == 0 || options.j0 > state.radius() {
        return Err(Error::InvalidParameter(format!(
            "tail j0 = {} outside (0, {}]",
            options.j0,
            state.radius()
        )));
    }
    let metadata = TraceMetadata {
        seed: pot.seed(),
        epsilon: params.epsilon,
        delta: params.delta,
        radius: state.radius(),
        dt: params.dt,
        j0: options.j0,
        boundary: params.boundary.to_string(),
    };
    let mut trace = DiffusionTrace::new(metadata);
    let mut current = state.clone();
    let total = current.l2_mass();
    let mut t = t0;
    let edge = options.edge_width.min(state.radius() / 2);
    let check = |s: &LatticeState, time: f64| -> Result<()> {
        if let Some(limit) = options.boundary_fraction {
            if total > 0.0 && edge > 0 {
                let fraction = s.edge_mass(edge) / total;
                if fraction > limit {
                    return Err(Error::BoundaryMass { time, fraction, limit });
                }
            }
        }
        Ok(())
    };
    for &ts in sample_grid {
        let span = ts - t;
        if span > 0.0 {
            let steps = (span / params.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            let mut prop = StrangPropagator::new(pot, params, h);
            let mut done = 0;
            while done < steps {
                let chunk = options.check_every.max(1).min(steps - done);
                prop.advance(current.amplitudes_mut(), chunk);
                done += chunk;
                check(&current, t + done as f64 * h)?;
            }
            t = ts;
        }
        current.set_time(ts);
        check(&current, ts)?;
        trace.push(
            ts,
            current.diffusion_moment(),
            current.l2_mass(),
            energy_of(current.amplitudes(), pot.values(), params),
            current.tail_mass(options.j0)?,
        );
    }
    if t < t_final {
        let span = t_final - t;
        let steps = (span / params.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let mut prop = StrangPropagator::new(pot, params, span / steps as f64);
        prop.advance(current.amplitudes_mut(), steps);
        current.set_time(t_final);
        check(&current, t_final)?;
    }
    Ok((trace, current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{exact_onsite_solution, l2_distance, Boundary};
    use num_complex::Complex64;

    #[test]
    fn log_grid_shape() {
        let g = log_grid(1.0, 100.0, 4).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 100.0);
        assert_eq!(g.len(), 1 + 9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn zero_final_time_gives_one_sample() {
        let pot = Potential::sample(1, 8).unwrap();
        let q = LatticeState::delta(8, 2).unwrap();
        let (trace, _) = integrate(
            &q,
            &pot,
            &ModelParams::default(),
            0.0,
            &[0.0],
            &IntegrateOptions::new(4),
        )
        .unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.diffusion_values[0], 4.0);
    }

    #[test]
    fn onsite_run_matches_exact_solution_at_samples() {
        let pot = Potential::sample(3, 10).unwrap();
        let amps: Vec<Complex64> = (0..21).map(|i| Complex64::new(0.1 * i as f64, 0.05)).collect();
        let q = LatticeState::from_amplitudes(10, amps).unwrap();
        let params = ModelParams::new(0.0, 0.3, 0.01, Boundary::Periodic).unwrap();
        let grid = [0.0, 0.5, 2.0, 7.0];
        let mut opts = IntegrateOptions::new(5);
        opts.boundary_fraction = None;
        let (trace, last) = integrate(&q, &pot, &params, 7.0, &grid, &opts).unwrap();
        assert!(trace.is_consistent());
        let exact = exact_onsite_solution(&q, &pot, 0.3, 7.0).unwrap();
        let err = l2_distance(&last, &exact);
        assert!(err < 1e-12, "{err}");
        let d0 = trace.diffusion_values[0];
        assert!(trace.diffusion_values.iter().all(|d| (d - d0).abs() < 1e-12 * d0));
    }

    #[test]
    fn boundary_leak_aborts() {
        let pot = Potential::from_values(6, vec![0.0; 13]).unwrap();
        let q = LatticeState::delta(6, 0).unwrap();
        let params = ModelParams::new(1.0, 0.0, 0.01, Boundary::Dirichlet).unwrap();
        let mut opts = IntegrateOptions::new(3);
        opts.edge_width = 1;
        let err = integrate(&q, &pot, &params, 20.0, &[0.0, 20.0], &opts).unwrap_err();
        assert!(matches!(err, Error::BoundaryMass { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn rejects_bad_grids() {
        let pot = Potential::sample(1, 8).unwrap();
        let q = LatticeState::delta(8, 0).unwrap();
        let p = ModelParams::default();
        let o = IntegrateOptions::new(4);
        assert!(integrate(&q, &pot, &p, 1.0, &[0.5, 0.2], &o).is_err());
        assert!(integrate(&q, &pot, &p, 1.0, &[0.0, 2.0], &o).is_err());
        assert!(integrate(&q, &pot, &p, 1.0, &[], &o).is_err());
        assert!(integrate(&q, &pot, &p, 1.0, &[0.0], &IntegrateOptions::new(9)).is_err());
    }
}
