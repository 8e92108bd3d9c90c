//! Convexification layer: turns a built model (linear program rows plus the
//! registry of nonconvex relations) into a solvable conic program.
//!
//! Three constructions cover everything the builders register:
//!
//! - quadratic pressure-loss equalities `drop = μ·m²` keep only their
//!   convex side `drop ≥ μ·m²`, written as the second-order cone
//!   `‖(2√μ·m, drop − 1)‖₂ ≤ drop + 1`;
//! - pump operating curves, with the speed already eliminated by the
//!   builders, become `curve·m² ≤ shutoff − Δp` through the same cone
//!   pattern;
//! - every registered bilinear product `z = c·x·y` is outer-approximated
//!   over the factor box, either by the four-inequality convex hull
//!   (single partition) or by a partitioned formulation that splits each
//!   factor range into `n` uniform intervals: interpolation weights
//!   `φ_{ij}` over the `(n+1)²` grid corners reproduce `x`, `y` and `z`,
//!   and two rows of `n` binary indicators (one per axis) restrict the
//!   weight support to one active cell, so the hull is taken cell-by-cell.
//!
//! Factor bounds are read from the program at relaxation time. That makes
//! recovery cheap: pinning a flow variable's bounds collapses every
//! envelope that involves it to an exact line, with no rebuild of the
//! model. [`PartitionState`] holds the per-term partition counts across
//! refinement iterations (they only ever grow), and [`relax_all`] applies
//! the whole layer in one pass, returning a [`RelaxationReport`] of what
//! was added.

use std::collections::HashMap;
use std::fmt;

use conic::{ConicProgram, LinExpr, VarId};

use crate::model::{BilinearRegistry, BilinearTerm, BuildError, PumpRegion, QuadRelation, TermFamily};

/// Default cap on partitions per term; refinement never pushes a term
/// beyond it.
pub const DEFAULT_PARTITION_CAP: usize = 16;

/// Per-term partition counts plus the bookkeeping of a refinement run.
///
/// Counts only ever increase: the only mutators are construction (uniform
/// base) and [`increment`](Self::increment).
#[derive(Clone, Debug)]
pub struct PartitionState {
    base: usize,
    overrides: HashMap<usize, usize>,
    cap: usize,
    /// Completed refinement iterations.
    pub iteration: usize,
    /// Worst bilinear violation recorded per iteration.
    pub history: Vec<f64>,
}

impl Default for PartitionState {
    fn default() -> Self {
        Self::uniform(1)
    }
}

impl PartitionState {
    /// Every term starts at a single partition (plain convex hull).
    pub fn new() -> Self {
        Self::default()
    }

    /// Every term starts at `n` partitions.
    pub fn uniform(n: usize) -> Self {
        Self {
            base: n.max(1),
            overrides: HashMap::new(),
            cap: DEFAULT_PARTITION_CAP,
            iteration: 0,
            history: Vec::new(),
        }
    }

    /// Replaces the partition cap (still at least 1).
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Partition count for a term id.
    pub fn partitions(&self, term: usize) -> usize {
        self.overrides.get(&term).copied().unwrap_or(self.base)
    }

    /// Grows a term's count by one; returns `false` when the cap blocks it.
    pub fn increment(&mut self, term: usize) -> bool {
        let n = self.partitions(term);
        if n >= self.cap {
            return false;
        }
        self.overrides.insert(term, n + 1);
        true
    }

    /// Records one finished iteration and its worst violation.
    pub fn record(&mut self, worst_violation: f64) {
        self.history.push(worst_violation);
        self.iteration += 1;
    }
}

/// Handles of one partitioned envelope, enough to reconstruct a warm-start
/// point for its auxiliary variables from values of `x` and `y`.
#[derive(Clone, Debug)]
pub struct EnvelopeBlock {
    /// Registry id of the term this block relaxes.
    pub term: usize,
    /// Partition count per axis.
    pub n: usize,
    /// Product coefficient, copied from the term.
    pub c: f64,
    /// Grid coordinates, `n + 1` each.
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// Partition indicators along x and y, `n` each (binary).
    pub alpha: Vec<VarId>,
    pub beta: Vec<VarId>,
    /// Interpolation weights over grid corners, `(n+1)²` in row-major
    /// order (`i·(n+1) + j` for grid point `(x_i, y_j)`).
    pub weights: Vec<VarId>,
}

/// What one [`relax_all`] pass added to the program.
#[derive(Clone, Debug)]
pub struct RelaxationReport {
    pub variables_added: usize,
    pub rows_added: usize,
    pub cones_added: usize,
    pub binaries_added: usize,
    /// Relaxed bilinear terms per family:
    /// (pump-power, heat-transfer, mixing, std).
    pub terms_by_family: [usize; 4],
    /// Envelope handles of every term with two or more partitions.
    pub blocks: Vec<EnvelopeBlock>,
}

impl RelaxationReport {
    pub fn terms_total(&self) -> usize {
        self.terms_by_family.iter().sum()
    }
}

impl fmt::Display for RelaxationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "relaxed {} terms (pump-power {}, heat-transfer {}, mixing {}, std {}): \
             +{} variables, +{} rows, +{} cones, +{} binaries",
            self.terms_total(),
            self.terms_by_family[0],
            self.terms_by_family[1],
            self.terms_by_family[2],
            self.terms_by_family[3],
            self.variables_added,
            self.rows_added,
            self.cones_added,
            self.binaries_added,
        )
    }
}

/// Finite factor box of a term, read from the program.
fn factor_box(
    program: &ConicProgram,
    term_label: &str,
    var: VarId,
) -> Result<(f64, f64), BuildError> {
    let (lb, ub) = program.bounds(var);
    if !lb.is_finite() || !ub.is_finite() {
        return Err(BuildError::Data(format!(
            "{term_label}: envelope factor has unbounded range [{lb}, {ub}]"
        )));
    }
    Ok((lb, ub))
}

/// Keeps the convex side of `drop = coeff·flow²` as a second-order cone;
/// returns the cone index.
pub fn relax_quadratic_equality(
    program: &mut ConicProgram,
    relation: &QuadRelation,
) -> Result<usize, BuildError> {
    if !(relation.coeff.is_finite() && relation.coeff > 0.0) {
        return Err(BuildError::Data(format!(
            "{}: loss coefficient must be positive, got {}",
            relation.label, relation.coeff
        )));
    }
    // drop ≥ μ·m²  ⟺  ‖(2√μ·m, drop − 1)‖ ≤ drop + 1.
    let cone = program.add_soc(
        relation.drop.clone() + 1.0,
        vec![
            LinExpr::term(relation.flow, 2.0 * relation.coeff.sqrt()),
            relation.drop.clone() - 1.0,
        ],
    )?;
    Ok(cone)
}

/// Adds a pump's convex operating region `Δp ≤ shutoff − curve·m²` as a
/// second-order cone; returns the cone index.
pub fn pump_convex_region(
    program: &mut ConicProgram,
    region: &PumpRegion,
) -> Result<usize, BuildError> {
    if !(region.shutoff.is_finite() && region.shutoff > 0.0)
        || !(region.curve.is_finite() && region.curve > 0.0)
    {
        return Err(BuildError::Data(format!(
            "{}: pump region needs positive shutoff and curve coefficients",
            region.label
        )));
    }
    // curve·m² ≤ u with u = shutoff − Δp:
    // ‖(2√curve·m, u − 1)‖ ≤ u + 1.
    let u = LinExpr::term(region.dp, -1.0) + region.shutoff;
    let cone = program.add_soc(
        u.clone() + 1.0,
        vec![
            LinExpr::term(region.flow, 2.0 * region.curve.sqrt()),
            u - 1.0,
        ],
    )?;
    Ok(cone)
}

/// Adds the convex hull of `z = c·x·y` over the factor box; returns the
/// row indices. A proper box gets the four-inequality hull (two floors,
/// two ceilings for `c > 0`). A box pinned to a point on either axis gets
/// one equality row instead: the product is affine there, and the usual
/// planes would degenerate into opposing inequality pairs with no
/// interior, which starve interior-point solvers.
pub fn mccormick_envelope(
    program: &mut ConicProgram,
    term: &BilinearTerm,
) -> Result<Vec<usize>, BuildError> {
    if !(term.c.is_finite() && term.c != 0.0) {
        return Err(BuildError::Data(format!(
            "{}: product coefficient must be nonzero, got {}",
            term.label, term.c
        )));
    }
    let (xl, xu) = factor_box(program, &term.label, term.x)?;
    let (yl, yu) = factor_box(program, &term.label, term.y)?;
    let c = term.c;

    if xl == xu || yl == yu {
        // z = c·(x̄·y + ȳ·x − x̄·ȳ) — exact whenever x = x̄ or y = ȳ, and
        // the box pins at least one of them.
        let mut expr = LinExpr::var(term.z);
        expr.add_term(term.y, -c * xl);
        expr.add_term(term.x, -c * yl);
        let row = program.add_eq(expr, -c * xl * yl)?;
        return Ok(vec![row]);
    }

    // z ≥/≤ c·(a·y + b·x − a·b) over the two diagonal corner pairs; with
    // c < 0 the floor/ceiling roles swap.
    let mut rows = Vec::with_capacity(4);
    let planes = [
        (xl, yl, true),  // floor through (x̲, y̲)
        (xu, yu, true),  // floor through (x̄, ȳ)
        (xl, yu, false), // ceiling through (x̲, ȳ)
        (xu, yl, false), // ceiling through (x̄, y̲)
    ];
    for (a, b, floor) in planes {
        let mut expr = LinExpr::var(term.z);
        expr.add_term(term.y, -c * a);
        expr.add_term(term.x, -c * b);
        let rhs = -c * a * b;
        let lower = floor == (c > 0.0);
        rows.push(if lower {
            program.add_ge(expr, rhs)?
        } else {
            program.add_le(expr, rhs)?
        });
    }
    Ok(rows)
}

/// Adds the `n`-partition envelope of `z = c·x·y`: grid interpolation
/// weights plus per-axis binary partition indicators.
pub fn piecewise_envelope(
    program: &mut ConicProgram,
    term: &BilinearTerm,
    n: usize,
    cap: usize,
) -> Result<EnvelopeBlock, BuildError> {
    if n == 0 {
        return Err(BuildError::Data(format!(
            "{}: partition count must be at least 1",
            term.label
        )));
    }
    if n > cap {
        return Err(BuildError::Data(format!(
            "{}: {n} partitions exceed the cap of {cap}",
            term.label
        )));
    }
    if !(term.c.is_finite() && term.c != 0.0) {
        return Err(BuildError::Data(format!(
            "{}: product coefficient must be nonzero, got {}",
            term.label, term.c
        )));
    }
    let (xl, xu) = factor_box(program, &term.label, term.x)?;
    let (yl, yu) = factor_box(program, &term.label, term.y)?;
    let id = term.id;

    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..=n).map(|i| lo + (hi - lo) * (i as f64) / (n as f64)).collect()
    };
    let grid_x = grid(xl, xu);
    let grid_y = grid(yl, yu);

    let mut weights = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            weights.push(program.add_var(&format!("phi{id}_{i}_{j}"), 0.0, 1.0)?);
        }
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for k in 1..=n {
        alpha.push(program.add_binary(&format!("pwx{id}_{k}"))?);
        beta.push(program.add_binary(&format!("pwy{id}_{k}"))?);
    }

    // Σφ = 1 and the three interpolation identities.
    let mut total = LinExpr::zero();
    let mut x_row = LinExpr::term(term.x, -1.0);
    let mut y_row = LinExpr::term(term.y, -1.0);
    let mut z_row = LinExpr::term(term.z, -1.0);
    for i in 0..=n {
        for j in 0..=n {
            let w = weights[i * (n + 1) + j];
            total.add_term(w, 1.0);
            x_row.add_term(w, grid_x[i]);
            y_row.add_term(w, grid_y[j]);
            z_row.add_term(w, term.c * grid_x[i] * grid_y[j]);
        }
    }
    program.add_eq(total, 1.0)?;
    program.add_eq(x_row, 0.0)?;
    program.add_eq(y_row, 0.0)?;
    program.add_eq(z_row, 0.0)?;

    // One active partition per axis; a grid line may carry weight only
    // when one of its at most two adjacent partitions is active.
    let mut alpha_sum = LinExpr::zero();
    let mut beta_sum = LinExpr::zero();
    for k in 0..n {
        alpha_sum.add_term(alpha[k], 1.0);
        beta_sum.add_term(beta[k], 1.0);
    }
    program.add_eq(alpha_sum, 1.0)?;
    program.add_eq(beta_sum, 1.0)?;
    for i in 0..=n {
        let mut row = LinExpr::zero();
        for j in 0..=n {
            row.add_term(weights[i * (n + 1) + j], 1.0);
        }
        if i >= 1 {
            row.add_term(alpha[i - 1], -1.0);
        }
        if i < n {
            row.add_term(alpha[i], -1.0);
        }
        program.add_le(row, 0.0)?;
    }
    for j in 0..=n {
        let mut row = LinExpr::zero();
        for i in 0..=n {
            row.add_term(weights[i * (n + 1) + j], 1.0);
        }
        if j >= 1 {
            row.add_term(beta[j - 1], -1.0);
        }
        if j < n {
            row.add_term(beta[j], -1.0);
        }
        program.add_le(row, 0.0)?;
    }

    Ok(EnvelopeBlock {
        term: id,
        n,
        c: term.c,
        grid_x,
        grid_y,
        alpha,
        beta,
        weights,
    })
}

/// Applies the whole convexification pass: cones for quadratic losses and
/// pump regions, envelopes (partitioned where the state says so) for every
/// registered product.
pub fn relax_all(
    program: &mut ConicProgram,
    registry: &BilinearRegistry,
    partitions: &PartitionState,
) -> Result<RelaxationReport, BuildError> {
    let vars0 = program.num_vars();
    let rows0 = program.num_linear();
    let cones0 = program.num_socs();
    let binaries0 = program.num_binaries();

    for relation in registry.quadratics() {
        relax_quadratic_equality(program, relation)?;
    }
    for region in registry.pumps() {
        pump_convex_region(program, region)?;
    }
    let mut blocks = Vec::new();
    for term in registry.terms() {
        let n = partitions.partitions(term.id);
        if n == 1 {
            mccormick_envelope(program, term)?;
        } else {
            blocks.push(piecewise_envelope(program, term, n, partitions.cap())?);
        }
    }

    Ok(RelaxationReport {
        variables_added: program.num_vars() - vars0,
        rows_added: program.num_linear() - rows0,
        cones_added: program.num_socs() - cones0,
        binaries_added: program.num_binaries() - binaries0,
        terms_by_family: [
            registry.family_count(TermFamily::PumpPower),
            registry.family_count(TermFamily::HeatTransfer),
            registry.family_count(TermFamily::Mixing),
            registry.family_count(TermFamily::Std),
        ],
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::case33_30;
    use crate::model::{
        build_hydraulic_relations, build_power_constraints, build_thermal_relations,
        BilinearRegistry,
    };
    use conic::{solve_misocp, ClarabelBackend, MisocpSettings, SolveStatus};

    /// Simple deterministic generator (xorshift) so the property samples
    /// are reproducible without pulling a dependency into the crate.
    struct Rng(u64);

    impl Rng {
        fn next_f64(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }

        fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * self.next_f64()
        }
    }

    /// A scratch program with one registered product z = c·x·y.
    fn product_fixture(
        c: f64,
        x_box: (f64, f64),
        y_box: (f64, f64),
        z_box: (f64, f64),
    ) -> (ConicProgram, BilinearRegistry) {
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let x = program.add_var("x", x_box.0, x_box.1).unwrap();
        let y = program.add_var("y", y_box.0, y_box.1).unwrap();
        let z = program.add_var("z", z_box.0, z_box.1).unwrap();
        registry.register(z, x, y, c, TermFamily::Mixing, "test product", 0);
        (program, registry)
    }

    fn values(program: &ConicProgram, triple: (f64, f64, f64)) -> Vec<f64> {
        // x, y, z are the first three variables of the scratch fixtures.
        let mut v = vec![0.0; program.num_vars()];
        v[0] = triple.0;
        v[1] = triple.1;
        v[2] = triple.2;
        v
    }

    /// Floor and ceiling of the single-partition hull at a point.
    fn hull_interval(c: f64, (xl, xu): (f64, f64), (yl, yu): (f64, f64), x: f64, y: f64) -> (f64, f64) {
        let planes = [
            c * (xl * y + x * yl - xl * yl),
            c * (xu * y + x * yu - xu * yu),
            c * (xl * y + x * yu - xl * yu),
            c * (xu * y + x * yl - xu * yl),
        ];
        if c > 0.0 {
            (planes[0].max(planes[1]), planes[2].min(planes[3]))
        } else {
            (planes[2].max(planes[3]), planes[0].min(planes[1]))
        }
    }

    #[test]
    fn quadratic_relaxation_keeps_only_the_convex_side() {
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let m = program.add_var("m", 0.0, 10.0).unwrap();
        let d = program.add_var("d", 0.0, 100.0).unwrap();
        registry.register_quadratic(LinExpr::var(d), m, 2.0, "loss", 0);
        relax_quadratic_equality(&mut program, &registry.quadratics()[0]).unwrap();
        assert_eq!(program.num_socs(), 1);

        // Equality point: tight. Above: slack. Below: cut off.
        let tight = vec![3.0, 18.0];
        assert!(program.max_violation(&tight) <= 1e-9);
        assert!(program.soc_slacks(&tight)[0].abs() <= 1e-9);
        let above = vec![3.0, 19.0];
        assert!(program.max_violation(&above) <= 1e-9);
        assert!(program.soc_slacks(&above)[0] > 0.02);
        let below = vec![3.0, 17.0];
        assert!(program.max_violation(&below) > 0.02);
    }

    #[test]
    fn nonpositive_loss_coefficient_is_rejected() {
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let m = program.add_var("m", 0.0, 10.0).unwrap();
        let d = program.add_var("d", 0.0, 100.0).unwrap();
        registry.register_quadratic(LinExpr::var(d), m, -2.0, "loss", 0);
        let err = relax_quadratic_equality(&mut program, &registry.quadratics()[0])
            .expect_err("negative coefficient");
        assert!(matches!(err, BuildError::Data(msg) if msg.contains("positive")));
    }

    #[test]
    fn pump_region_matches_the_characteristic_curve() {
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let shutoff = 9810.0 * 99.02;
        let curve = 9810.0 * 57.74 / 1e6;
        let m = program.add_var("m", 0.0, 300.0).unwrap();
        let dp = program.add_var("dp", 0.0, shutoff).unwrap();
        registry.register_pump(dp, m, shutoff, curve, "pump", 0);
        pump_convex_region(&mut program, &registry.pumps()[0]).unwrap();

        // Zero flow: the rise may reach exactly the shutoff pressure.
        assert!(program.max_violation(&[0.0, shutoff]) <= 1e-6);
        // On the full-speed curve: tight within rounding.
        let m_on = 150.0;
        let dp_on = shutoff - curve * m_on * m_on;
        let on_curve = vec![m_on, dp_on];
        assert!(program.max_violation(&on_curve) <= 1e-6);
        assert!(program.soc_slacks(&on_curve)[0].abs() <= 1e-6);
        // Above the shutoff head: cut off.
        assert!(program.max_violation(&[0.0, shutoff + 1.0]) > 0.4);
    }

    #[test]
    fn mccormick_gap_at_the_box_center_is_the_analytic_quarter_area() {
        let bounds = ((1.0, 3.0), (-1.0, 2.0));
        let c = 1.5;
        let (mut program, registry) = product_fixture(c, bounds.0, bounds.1, (-50.0, 50.0));
        mccormick_envelope(&mut program, &registry.terms()[0]).unwrap();

        // The worst one-sided distance between the product and either
        // envelope over the box is c·Δx·Δy/4, attained at the center.
        let quarter = c * (bounds.0 .1 - bounds.0 .0) * (bounds.1 .1 - bounds.1 .0) / 4.0;
        let center = (
            0.5 * (bounds.0 .0 + bounds.0 .1),
            0.5 * (bounds.1 .0 + bounds.1 .1),
        );
        let mut rng = Rng(0x909);
        let mut samples: Vec<(f64, f64)> = (0..2000)
            .map(|_| {
                (
                    rng.in_range(bounds.0 .0, bounds.0 .1),
                    rng.in_range(bounds.1 .0, bounds.1 .1),
                )
            })
            .collect();
        samples.push(center);
        let (mut worst_over, mut worst_under) = (0.0f64, 0.0f64);
        for (x, y) in samples {
            let (lo, hi) = hull_interval(c, bounds.0, bounds.1, x, y);
            worst_over = worst_over.max(hi - c * x * y);
            worst_under = worst_under.max(c * x * y - lo);
        }
        assert!((worst_over - quarter).abs() <= 1e-9, "over {worst_over} vs {quarter}");
        assert!((worst_under - quarter).abs() <= 1e-9, "under {worst_under} vs {quarter}");

        // At the center the hull admits exactly product ± quarter, and the
        // program agrees with the analytic interval.
        let product = c * center.0 * center.1;
        for z in [product - quarter, product, product + quarter] {
            assert!(program.max_violation(&values(&program, (center.0, center.1, z))) <= 1e-9);
        }
        for z in [product - quarter - 0.01, product + quarter + 0.01] {
            assert!(program.max_violation(&values(&program, (center.0, center.1, z))) > 1e-3);
        }
    }

    #[test]
    fn pinned_factor_collapses_the_envelope_to_a_line() {
        let (mut program, registry) = product_fixture(3.0, (2.0, 2.0), (0.0, 1.0), (-10.0, 10.0));
        mccormick_envelope(&mut program, &registry.terms()[0]).unwrap();
        for y in [0.0, 0.3, 1.0] {
            let exact = 3.0 * 2.0 * y;
            assert!(program.max_violation(&values(&program, (2.0, y, exact))) <= 1e-12);
            assert!(program.max_violation(&values(&program, (2.0, y, exact + 0.01))) > 1e-3);
            assert!(program.max_violation(&values(&program, (2.0, y, exact - 0.01))) > 1e-3);
        }
    }

    #[test]
    fn box_corner_pins_the_product_exactly() {
        let (mut program, registry) = product_fixture(2.0, (1.0, 4.0), (-1.0, 3.0), (-50.0, 50.0));
        mccormick_envelope(&mut program, &registry.terms()[0]).unwrap();
        let corner = (4.0, 3.0, 2.0 * 12.0);
        assert!(program.max_violation(&values(&program, corner)) <= 1e-12);
        assert!(program.max_violation(&values(&program, (4.0, 3.0, 24.1))) > 1e-3);
        assert!(program.max_violation(&values(&program, (4.0, 3.0, 23.9))) > 1e-3);
    }

    #[test]
    fn true_products_never_violate_the_single_partition_hull() {
        let (mut program, registry) = product_fixture(2.5, (-1.0, 3.0), (0.5, 4.0), (-100.0, 100.0));
        mccormick_envelope(&mut program, &registry.terms()[0]).unwrap();
        let mut rng = Rng(0x5eed);
        for _ in 0..1000 {
            let x = rng.in_range(-1.0, 3.0);
            let y = rng.in_range(0.5, 4.0);
            let point = values(&program, (x, y, 2.5 * x * y));
            assert!(program.max_violation(&point) <= 1e-9);
        }
    }

    /// Extended feasible point of a partitioned envelope at (x, y, c·x·y):
    /// one-hot partition indicators for the containing cell and bilinear
    /// interpolation weights on its four corners.
    fn product_point(block: &EnvelopeBlock, program: &ConicProgram, x: f64, y: f64) -> Vec<f64> {
        let n = block.n;
        let cell = |grid: &[f64], v: f64| -> usize {
            let width = grid[1] - grid[0];
            if width <= 0.0 {
                return 0;
            }
            (((v - grid[0]) / width) as usize).min(n - 1)
        };
        let (ci, cj) = (cell(&block.grid_x, x), cell(&block.grid_y, y));
        let s = if block.grid_x[ci + 1] > block.grid_x[ci] {
            (x - block.grid_x[ci]) / (block.grid_x[ci + 1] - block.grid_x[ci])
        } else {
            0.0
        };
        let u = if block.grid_y[cj + 1] > block.grid_y[cj] {
            (y - block.grid_y[cj]) / (block.grid_y[cj + 1] - block.grid_y[cj])
        } else {
            0.0
        };
        let mut point = vec![0.0; program.num_vars()];
        point[0] = x;
        point[1] = y;
        point[2] = block.c * x * y;
        let pos = |v: VarId| program.var_ids().position(|w| w == v).unwrap();
        point[pos(block.alpha[ci])] = 1.0;
        point[pos(block.beta[cj])] = 1.0;
        for (di, dj, w) in [
            (0, 0, (1.0 - s) * (1.0 - u)),
            (0, 1, (1.0 - s) * u),
            (1, 0, s * (1.0 - u)),
            (1, 1, s * u),
        ] {
            point[pos(block.weights[(ci + di) * (n + 1) + (cj + dj)])] = w;
        }
        point
    }

    #[test]
    fn true_products_never_violate_the_partitioned_envelope() {
        for n in [2usize, 4] {
            let bounds = ((-1.0, 3.0), (0.5, 4.0));
            let (mut program, registry) =
                product_fixture(2.5, bounds.0, bounds.1, (-100.0, 100.0));
            let block =
                piecewise_envelope(&mut program, &registry.terms()[0], n, DEFAULT_PARTITION_CAP)
                    .unwrap();
            let mut rng = Rng(0xfeed + n as u64);
            for _ in 0..1000 {
                let x = rng.in_range(bounds.0 .0, bounds.0 .1);
                let y = rng.in_range(bounds.1 .0, bounds.1 .1);
                let point = product_point(&block, &program, x, y);
                assert!(
                    program.max_violation(&point) <= 1e-9,
                    "n={n} x={x} y={y} violation {}",
                    program.max_violation(&point)
                );
            }
        }
    }

    #[test]
    fn one_partition_block_is_the_mccormick_hull() {
        let bounds = ((1.0, 4.0), (-1.0, 3.0));
        let c = 2.0;
        let (mut program, registry) = product_fixture(c, bounds.0, bounds.1, (-50.0, 50.0));
        let block =
            piecewise_envelope(&mut program, &registry.terms()[0], 1, DEFAULT_PARTITION_CAP)
                .unwrap();
        assert_eq!(block.alpha.len() + block.beta.len(), 2);
        assert_eq!(block.weights.len(), 4);

        // Any point of the single-partition hull extends to a feasible
        // weight assignment: bilinear weights shifted along the null
        // direction that trades z while keeping x and y.
        let (w, h) = (bounds.0 .1 - bounds.0 .0, bounds.1 .1 - bounds.1 .0);
        let mut rng = Rng(0xabc);
        for _ in 0..400 {
            let x = rng.in_range(bounds.0 .0, bounds.0 .1);
            let y = rng.in_range(bounds.1 .0, bounds.1 .1);
            let (lo, hi) = hull_interval(c, bounds.0, bounds.1, x, y);
            let z = rng.in_range(lo, hi);
            let mut point = product_point(&block, &program, x, y);
            let t = (z - c * x * y) / (c * w * h);
            let pos = |v: VarId| program.var_ids().position(|q| q == v).unwrap();
            for (i, j, sign) in [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)] {
                point[pos(block.weights[i * 2 + j])] += sign * t;
            }
            point[2] = z;
            assert!(
                program.max_violation(&point) <= 1e-9,
                "inside-hull point rejected: x={x} y={y} z={z}"
            );
            // The weights stay a convex combination exactly because the
            // hull bounds z; stepping past the ceiling breaks a weight.
            let beyond = hi + 0.05 * (hi - lo).max(0.1);
            let t_bad = (beyond - c * x * y) / (c * w * h);
            let mut bad = product_point(&block, &program, x, y);
            for (i, j, sign) in [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)] {
                bad[pos(block.weights[i * 2 + j])] += sign * t_bad;
            }
            bad[2] = beyond;
            assert!(program.max_violation(&bad) > 1e-9);
        }
    }

    #[test]
    fn partition_block_sizes_follow_the_count() {
        for n in [1usize, 2, 3, 5] {
            let (mut program, registry) =
                product_fixture(1.0, (0.0, 1.0), (0.0, 1.0), (-10.0, 10.0));
            let binaries0 = program.num_binaries();
            let block =
                piecewise_envelope(&mut program, &registry.terms()[0], n, DEFAULT_PARTITION_CAP)
                    .unwrap();
            assert_eq!(block.alpha.len(), n);
            assert_eq!(block.beta.len(), n);
            assert_eq!(block.weights.len(), (n + 1) * (n + 1));
            assert_eq!(program.num_binaries() - binaries0, 2 * n);
        }
    }

    #[test]
    fn grid_points_pin_the_product() {
        let bounds = ((0.0, 2.0), (0.0, 3.0));
        let c = 1.5;
        let (mut program, registry) = product_fixture(c, bounds.0, bounds.1, (-50.0, 50.0));
        let block =
            piecewise_envelope(&mut program, &registry.terms()[0], 2, DEFAULT_PARTITION_CAP)
                .unwrap();
        // Interior grid point (x_1, y_1) = (1.0, 1.5).
        let point = product_point(&block, &program, 1.0, 1.5);
        assert!(program.max_violation(&point) <= 1e-12);

        // No weight assignment reaches any other z there: pin x, y, z and
        // ask the solver.
        let backend = ClarabelBackend::default();
        let settings = MisocpSettings::default();
        let mut exact = program.clone();
        exact.set_bounds(exact.lookup("x").unwrap(), 1.0, 1.0).unwrap();
        exact.set_bounds(exact.lookup("y").unwrap(), 1.5, 1.5).unwrap();
        let z = exact.lookup("z").unwrap();
        exact.set_bounds(z, c * 1.5, c * 1.5).unwrap();
        let sol = solve_misocp(&exact, &backend, None, &settings).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);

        let mut off = program.clone();
        off.set_bounds(off.lookup("x").unwrap(), 1.0, 1.0).unwrap();
        off.set_bounds(off.lookup("y").unwrap(), 1.5, 1.5).unwrap();
        let z = off.lookup("z").unwrap();
        off.set_bounds(z, c * 1.5 + 0.05, c * 1.5 + 0.05).unwrap();
        let sol = solve_misocp(&off, &backend, None, &settings).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn refining_the_grid_never_widens_the_envelope() {
        // Envelope width at a point is the cell-local hull interval of
        // whichever cell contains it; nested grids can only shrink it.
        let bounds = ((-2.0, 2.0), (1.0, 5.0));
        let c = 1.7;
        let width_at = |n: usize, x: f64, y: f64| -> f64 {
            let cell = |lo: f64, hi: f64, v: f64| -> (f64, f64) {
                let w = (hi - lo) / n as f64;
                let i = (((v - lo) / w) as usize).min(n - 1);
                (lo + w * i as f64, lo + w * (i + 1) as f64)
            };
            let cx = cell(bounds.0 .0, bounds.0 .1, x);
            let cy = cell(bounds.1 .0, bounds.1 .1, y);
            let (lo, hi) = hull_interval(c, cx, cy, x, y);
            hi - lo
        };
        let mut rng = Rng(0x77);
        for _ in 0..500 {
            let x = rng.in_range(bounds.0 .0, bounds.0 .1);
            let y = rng.in_range(bounds.1 .0, bounds.1 .1);
            for n in [1usize, 2, 4, 8] {
                assert!(width_at(2 * n, x, y) <= width_at(n, x, y) + 1e-12);
            }
        }
    }

    #[test]
    fn partition_state_only_grows_and_respects_its_cap() {
        let mut state = PartitionState::uniform(2).with_cap(3);
        assert_eq!(state.partitions(7), 2);
        assert!(state.increment(7));
        assert_eq!(state.partitions(7), 3);
        assert!(!state.increment(7), "cap must block further growth");
        assert_eq!(state.partitions(7), 3);
        assert_eq!(state.partitions(8), 2, "other terms unaffected");
        state.record(0.5);
        state.record(0.1);
        assert_eq!(state.iteration, 2);
        assert_eq!(state.history, vec![0.5, 0.1]);
    }

    #[test]
    fn oversized_partition_request_is_rejected() {
        let (mut program, registry) = product_fixture(1.0, (0.0, 1.0), (0.0, 1.0), (-10.0, 10.0));
        let err = piecewise_envelope(&mut program, &registry.terms()[0], 17, 16)
            .expect_err("beyond the cap");
        assert!(matches!(err, BuildError::Data(msg) if msg.contains("cap")));
    }

    #[test]
    fn unbounded_factor_is_rejected() {
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let x = program.add_var("x", 0.0, f64::INFINITY).unwrap();
        let y = program.add_var("y", 0.0, 1.0).unwrap();
        let z = program.add_var("z", -10.0, 10.0).unwrap();
        registry.register(z, x, y, 1.0, TermFamily::Mixing, "free factor", 0);
        let err = mccormick_envelope(&mut program, &registry.terms()[0])
            .expect_err("unbounded factor");
        assert!(matches!(err, BuildError::Data(msg) if msg.contains("unbounded")));
    }

    #[test]
    fn relax_all_reproduces_the_published_program_sizes() {
        let case = case33_30();
        let mut base = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let hydro = build_hydraulic_relations(&case, &mut base, &mut registry).unwrap();
        let power = build_power_constraints(&case, &mut base, &hydro).unwrap();
        build_thermal_relations(&case, &mut base, &mut registry, &hydro, &power).unwrap();

        // Single partition: a pure SOCP. Cones: one per electric branch
        // and period, one per quadratic loss, one per pump region.
        let mut socp = base.clone();
        let report = relax_all(&mut socp, &registry, &PartitionState::uniform(1)).unwrap();
        assert_eq!(socp.num_socs(), 2472);
        assert_eq!(socp.num_binaries(), 0);
        assert_eq!(report.binaries_added, 0);
        assert_eq!(report.cones_added, 1656 + 48);
        assert_eq!(report.terms_total(), registry.len());
        assert!(report.blocks.is_empty());

        // Two and three uniform partitions: 2n binaries per term.
        let mut two = base.clone();
        let report = relax_all(&mut two, &registry, &PartitionState::uniform(2)).unwrap();
        assert_eq!(two.num_binaries(), 10752);
        assert_eq!(report.binaries_added, 10752);
        assert_eq!(report.blocks.len(), registry.len());

        let mut three = base.clone();
        let report = relax_all(&mut three, &registry, &PartitionState::uniform(3)).unwrap();
        assert_eq!(three.num_binaries(), 16128);
        assert_eq!(report.binaries_added, 16128);
    }
}
