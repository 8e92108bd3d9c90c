//! Test support: reproducible random mixed-binary SOCPs and a brute-force
//! reference solver.
//!
//! The generator builds programs that are feasible by construction (every
//! constraint is sampled with slack around a known interior point), which
//! keeps comparisons against the enumeration oracle meaningful. Randomness
//! comes from an inlined SplitMix64 so the sequence is identical on every
//! platform and run.

use crate::program::{ConicProgram, VarId};
use crate::solve::{BackendError, RelaxOutcome, SocpBackend};
use crate::LinExpr;

/// Minimal deterministic RNG (SplitMix64).
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform(0.0, 1.0) < p
    }
}

/// Builds a random feasible mixed-binary SOCP with at most `max_binaries`
/// binaries and at most `max_cones` second-order cones.
pub fn random_misocp(seed: u64, max_binaries: usize, max_cones: usize) -> ConicProgram {
    let mut rng = SplitMix64::new(seed);
    let mut p = ConicProgram::new();

    let nc = rng.int(2, 4);
    let nb = rng.int(1, max_binaries.max(1));
    let mut cont: Vec<VarId> = Vec::new();
    let mut bins: Vec<VarId> = Vec::new();
    for i in 0..nc {
        cont.push(p.add_var(&format!("x{i}"), -5.0, 5.0).unwrap());
    }
    for i in 0..nb {
        bins.push(p.add_binary(&format!("b{i}")).unwrap());
    }

    // Interior point around which all constraints are given slack.
    let mut point = vec![0.0; nc + nb];
    for (i, v) in cont.iter().enumerate() {
        let _ = v;
        point[i] = rng.uniform(-2.0, 2.0);
    }
    for (i, _) in bins.iter().enumerate() {
        point[nc + i] = if rng.chance(0.5) { 1.0 } else { 0.0 };
    }

    let mut obj = LinExpr::zero();
    for v in cont.iter().chain(bins.iter()) {
        obj.add_term(*v, rng.uniform(-3.0, 3.0));
    }

    let nrows = rng.int(2, 4);
    for _ in 0..nrows {
        let mut e = LinExpr::zero();
        let mut at_point = 0.0;
        for (i, v) in cont.iter().chain(bins.iter()).enumerate() {
            if rng.chance(0.6) {
                let c = rng.uniform(-2.0, 2.0);
                e.add_term(*v, c);
                at_point += c * point[i];
            }
        }
        p.add_le(e, at_point + rng.uniform(0.3, 2.0)).unwrap();
    }
    if rng.chance(0.3) {
        // One equality over continuous variables keeps every binary
        // assignment feasible in that row.
        let mut e = LinExpr::zero();
        let mut at_point = 0.0;
        for (i, v) in cont.iter().enumerate() {
            let c = rng.uniform(-1.5, 1.5);
            e.add_term(*v, c);
            at_point += c * point[i];
        }
        p.add_eq(e, at_point).unwrap();
    }

    let ncones = rng.int(0, max_cones);
    for k in 0..ncones {
        let mut elems = Vec::new();
        let mut norm2 = 0.0;
        for _ in 0..2 {
            let mut e = LinExpr::constant(rng.uniform(-1.0, 1.0));
            for (i, v) in cont.iter().enumerate() {
                if rng.chance(0.5) {
                    let c = rng.uniform(-1.0, 1.0);
                    e.add_term(*v, c);
                }
                let _ = i;
            }
            norm2 += e.eval(&point).powi(2);
            elems.push(e);
        }
        let norm = f64::sqrt(norm2);
        let head = p
            .add_var(&format!("h{k}"), norm + 0.2, norm + 12.0)
            .unwrap();
        obj.add_term(head, rng.uniform(0.1, 1.0));
        p.add_soc(LinExpr::var(head), elems).unwrap();
    }

    p.set_objective(obj).unwrap();
    p
}

/// Reference mixed-integer solve by full enumeration of binary assignments.
/// Returns the optimal objective, or `None` when every assignment is
/// infeasible. Intended for programs with few binaries.
pub fn brute_force_misocp(
    program: &ConicProgram,
    backend: &dyn SocpBackend,
) -> Result<Option<f64>, BackendError> {
    let bins = program.binary_ids();
    assert!(bins.len() <= 20, "enumeration oracle is exponential");
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << bins.len()) {
        let patch: Vec<(VarId, f64, f64)> = bins
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let val = ((mask >> i) & 1) as f64;
                (v, val, val)
            })
            .collect();
        match backend.solve(program, &patch, None)? {
            RelaxOutcome::Optimal { objective, .. } => {
                if best.is_none_or(|b| objective < b) {
                    best = Some(objective);
                }
            }
            RelaxOutcome::Infeasible => {}
            RelaxOutcome::Unbounded => return Ok(Some(f64::NEG_INFINITY)),
            RelaxOutcome::Failed { kind, .. } => {
                panic!("reference enumeration hit a backend failure: {kind:?}")
            }
        }
    }
    Ok(best)
}
