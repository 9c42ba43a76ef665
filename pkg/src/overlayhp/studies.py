"""The four benchmark studies: discontinuous bar, singular corner, small-overlap
conditioning, and the traveling heat source, with their exact solutions,
refinement ladders and CSV outputs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import WeakForm, apply_constraints, assemble, assemble_load
from .basis import BasisSpec
from .mesh import Box, CartesianMesh, build_uniform_mesh
from .postproc import (
    FieldSolution,
    ProbeRecord,
    compute_energy,
    evaluate,
    grid_to_csv,
    relative_energy_error,
    sample_grid,
)
from .regions import AT_LEAST_ONE, compute_regions
from .solvers import NonSPDError, condition_number_spd, pcg_jacobi, solve_direct
from .space import LevelSpec, apply_fitted_deactivation, build_space, count_active, set_dirichlet
from .transient import MovingSource, ThetaScheme, advance_overlays, l2_project, theta_step

# ladders stop adding overlays whose elements would collapse under the
# breakpoint merge tolerance of the region construction
_MIN_OVERLAY_ELEMENT = 1e-10

# heat-source overlays move every 0.1 time units; the integration step is
# finer (the probe histories need to resolve the source passage)
_MOVE_PERIOD = 0.1
_HEAT_DT = {"reference": 1.0 / 120.0, "unrefined": 1.0 / 360.0, "dynamic": 1.0 / 360.0}


@dataclass
class StudyConfig:
    study: str = "bar"
    strategy: str = "unfitted"
    alpha: float = 0.5
    p_max: int = 15
    dt: float | None = None
    over_integration: int | None = None
    out: Path | None = None
    reference_resolution: int = 501
    field_resolution: int = 200
    models: tuple = ("reference", "unrefined", "dynamic")

    def __post_init__(self):
        if self.strategy not in ("fitted", "unfitted", "none"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.study == "bar" and self.strategy == "unfitted" and not 0 < self.alpha <= 2.0 / 3.0:
            raise ValueError("bar overlay size factor must lie in (0, 2/3]")
        if self.study == "corner" and self.strategy == "unfitted" and not 0 < self.alpha < 1.0:
            raise ValueError("corner overlay size factor must lie in (0, 1)")
        if self.out is not None:
            self.out = Path(self.out)


@dataclass
class ConvergenceRecord:
    cycle: int
    p: int
    n_unknowns: int
    error_percent: float


@dataclass
class LadderResult:
    records: list
    truncated_cycles: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# elastic bar with discontinuous strains
# ---------------------------------------------------------------------------

_BAR_F = 0.2
_BAR_SPLIT = 2.0 / 3.0


def bar_exact(x: float):
    """Displacement and strain of the clamped bar under sin(8x) plus a point load."""
    c8 = math.cos(8.0)
    u = 0.125 * (math.sin(8.0 * x) / 8.0 - x * c8)
    du = 0.125 * (math.cos(8.0 * x) - c8)
    if x <= _BAR_SPLIT:
        u += _BAR_F * x
        du += _BAR_F
    else:
        u += _BAR_F * _BAR_SPLIT
    return u, du


def bar_exact_energy() -> float:
    """Closed-form strain energy of the exact bar solution.

    Antiderivatives of the squared strain, split at the strain jump:
    with g = (cos 8x - cos 8)/8, the energy is int g^2 over [0,1] plus the
    point-load cross terms 2f int_0^{2/3} g + f^2 (2/3).
    """
    c = math.cos(8.0)
    term_sq = (0.5 + math.sin(16.0) / 32.0 - 2.0 * c * math.sin(8.0) / 8.0 + c * c) / 64.0
    term_cross = 2.0 * _BAR_F * (math.sin(16.0 / 3.0) / 8.0 - _BAR_SPLIT * c) / 8.0
    return term_sq + term_cross + _BAR_F * _BAR_F * _BAR_SPLIT


def _bar_fitted_levels(p: int):
    levels = [LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(p, 1))]
    lo, hi = 0.0, 1.0
    for k in range(1, p):
        mid = 0.5 * (lo + hi)
        levels.append(LevelSpec(CartesianMesh([(lo, mid, hi)]), BasisSpec(p - k, 1)))
        if _BAR_SPLIT <= mid:
            hi = mid
        else:
            lo = mid
    return levels, False


def _bar_unfitted_levels(p: int, alpha: float):
    levels = [LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(p, 1))]
    truncated = False
    for k in range(1, p):
        w = alpha**k
        if 0.5 * w <= _MIN_OVERLAY_ELEMENT:
            truncated = True
            break
        lo, hi = _BAR_SPLIT - 0.5 * w, _BAR_SPLIT + 0.5 * w
        levels.append(LevelSpec(CartesianMesh([(lo, 0.5 * (lo + hi), hi)]), BasisSpec(p - k, 1)))
    return levels, truncated


def run_bar(config: StudyConfig) -> LadderResult:
    """Convergence ladder for the bar benchmark; one record per cycle."""
    if config.strategy not in ("fitted", "unfitted"):
        raise ValueError("bar study needs strategy fitted or unfitted")
    a_exact = bar_exact_energy()
    m = config.over_integration or 1
    result = LadderResult([])
    for p in range(1, config.p_max + 1):
        if config.strategy == "fitted":
            levels, truncated = _bar_fitted_levels(p)
        else:
            levels, truncated = _bar_unfitted_levels(p, config.alpha)
        if truncated:
            result.truncated_cycles.append(p)
        space = build_space(levels, Box((0.0,), (1.0,)))
        space = set_dirichlet(space, [(0, 0)], lambda x: 0.0)
        if config.strategy == "fitted":
            space = apply_fitted_deactivation(space)
        regions = compute_regions([(i, lv.mesh) for i, lv in enumerate(space.levels)], AT_LEAST_ONE)
        form = WeakForm(
            source=lambda pts: np.sin(8.0 * pts[:, 0]),
            point_loads=(((_BAR_SPLIT,), _BAR_F),),
        )
        system = assemble(space, regions, form, over_integration=m)
        red, recover = apply_constraints(system)
        sol = FieldSolution(space, recover(solve_direct(red)))
        a_num = compute_energy(sol, regions)
        result.records.append(
            ConvergenceRecord(p, p, count_active(space), relative_energy_error(a_exact, a_num))
        )
    if config.out is not None:
        name = (
            "bar_fitted.csv"
            if config.strategy == "fitted"
            else f"bar_unfitted_a{config.alpha:g}.csv"
        )
        _write_convergence_csv(config.out / name, result.records)
    return result


# ---------------------------------------------------------------------------
# singular corner problem
# ---------------------------------------------------------------------------


def corner_exact(x):
    """Manufactured solution sqrt(rho) and its interior source (1/4) rho^(-3/2)."""
    rho = math.hypot(x[0], x[1])
    if rho <= 0.0:
        raise ValueError("source is singular at the origin")
    return math.sqrt(rho), 0.25 * rho ** (-1.5)


def corner_exact_energy() -> float:
    return 0.5 * math.log(1.0 + math.sqrt(2.0))


def _corner_source(pts: np.ndarray) -> np.ndarray:
    rho = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rho <= 0.0):
        raise ValueError("quadrature point hit the singularity")
    # the PDE reads lap(u) = s, so the weak-form load carries -s
    return -0.25 * rho ** (-1.5)


def _corner_dirichlet(x) -> float:
    return math.sqrt(math.hypot(x[0], x[1]))


def _corner_fitted_levels(p: int):
    levels = [LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (1, 1)), BasisSpec(p, 2, "trunk"))]
    truncated = False
    for k in range(1, p):
        s = 2.0 ** (1 - k)
        if 0.5 * s <= _MIN_OVERLAY_ELEMENT:
            truncated = True
            break
        levels.append(
            LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (s, s)), (2, 2)), BasisSpec(p - k, 2, "trunk"))
        )
    return levels, truncated


def _corner_unfitted_levels(p: int, alpha: float):
    levels = [LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (1, 1)), BasisSpec(p, 2, "trunk"))]
    truncated = False
    for k in range(1, p):
        s = alpha**k
        if s <= _MIN_OVERLAY_ELEMENT:
            truncated = True
            break
        levels.append(
            LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (s, s)), (1, 1)), BasisSpec(p - k, 2, "trunk"))
        )
    return levels, truncated


def run_corner(config: StudyConfig) -> LadderResult:
    """Convergence ladder for the singular corner benchmark."""
    if config.strategy not in ("fitted", "unfitted"):
        raise ValueError("corner study needs strategy fitted or unfitted")
    a_exact = corner_exact_energy()
    m = config.over_integration or 1
    result = LadderResult([])
    for p in range(1, config.p_max + 1):
        if config.strategy == "fitted":
            levels, truncated = _corner_fitted_levels(p)
        else:
            levels, truncated = _corner_unfitted_levels(p, config.alpha)
        if truncated:
            result.truncated_cycles.append(p)
        space = build_space(levels, Box((0.0, 0.0), (1.0, 1.0)))
        space = set_dirichlet(space, [(0, 1), (1, 1)], _corner_dirichlet)
        if config.strategy == "fitted":
            space = apply_fitted_deactivation(space)
        regions = compute_regions([(i, lv.mesh) for i, lv in enumerate(space.levels)], AT_LEAST_ONE)
        system = assemble(space, regions, WeakForm(source=_corner_source), over_integration=m)
        red, recover = apply_constraints(system)
        sol = FieldSolution(space, recover(solve_direct(red)))
        a_num = compute_energy(sol, regions)
        result.records.append(
            ConvergenceRecord(p, p, count_active(space), relative_energy_error(a_exact, a_num))
        )
    if config.out is not None:
        name = (
            "corner_fitted.csv"
            if config.strategy == "fitted"
            else f"corner_unfitted_a{config.alpha:g}.csv"
        )
        _write_convergence_csv(config.out / name, result.records)
    return result


# ---------------------------------------------------------------------------
# small-overlap conditioning and PCG study
# ---------------------------------------------------------------------------


@dataclass
class OverlapResult:
    etas: np.ndarray
    condition: np.ndarray  # shape (n_eta, 8); NaN where not SPD
    iterations: np.ndarray  # shape (n_eta, 8)
    non_spd: list = field(default_factory=list)
    unconverged: list = field(default_factory=list)


def run_overlap(config: StudyConfig, n_eta: int = 13, p_range=range(1, 9)) -> OverlapResult:
    """Condition numbers and PCG iteration counts over the overlap parameter.

    The base is a 3x3 mesh on [0, 3]^2; the overlay a 2x2 mesh on
    [eta, eta + 2]^2 at the same degree.  Homogeneous Dirichlet data on the
    outer boundary makes the Laplace matrix SPD.  The right-hand side is the
    all-ones load vector: a smooth manufactured solution would leave the
    sliver-induced stiff modes unexcited and let PCG converge quickly at tiny
    overlaps, hiding exactly the effect this study measures.
    """
    etas = np.logspace(np.log10(1e-6), np.log10(0.5), n_eta)
    ps = list(p_range)
    cond = np.full((n_eta, len(ps)), np.nan)
    iters = np.zeros((n_eta, len(ps)), dtype=int)
    result = OverlapResult(etas, cond, iters)
    dom = Box((0.0, 0.0), (3.0, 3.0))
    for ip, p in enumerate(ps):
        for ie, eta in enumerate(etas):
            base = LevelSpec(build_uniform_mesh(dom, (3, 3)), BasisSpec(p, 2, "trunk"))
            overlay = LevelSpec(
                build_uniform_mesh(Box((eta, eta), (eta + 2.0, eta + 2.0)), (2, 2)),
                BasisSpec(p, 2, "trunk"),
            )
            space = build_space([base, overlay], dom)
            space = set_dirichlet(space, [(0, 0), (0, 1), (1, 0), (1, 1)], lambda x: 0.0)
            regions = compute_regions([(0, base.mesh), (1, overlay.mesh)], AT_LEAST_ONE)
            system = assemble(space, regions, WeakForm())
            red, _ = apply_constraints(system)
            try:
                cond[ie, ip] = condition_number_spd(red.K)
            except NonSPDError:
                result.non_spd.append((eta, p))
            report = pcg_jacobi(red.K, np.ones(red.K.shape[0]), rel_tol=1e-10)
            iters[ie, ip] = report.iterations
            if not report.converged:
                result.unconverged.append((eta, p))
    if config.out is not None:
        _write_overlap_csv(config.out / "overlap_condition.csv", etas, ps, cond)
        _write_overlap_csv(config.out / "overlap_pcg.csv", etas, ps, iters)
    return result


# ---------------------------------------------------------------------------
# traveling heat source
# ---------------------------------------------------------------------------

_HEAT_DOMAIN = Box((-5.0, -5.0), (5.0, 5.0))
_HEAT_PROBE = (0.0, 2.5)
_HEAT_TMAX = 4.0
_HEAT_SNAPSHOT = 2.134
_ALL_FACES = [(0, 0), (0, 1), (1, 0), (1, 1)]


@dataclass
class HeatModelResult:
    model: str
    n_unknowns: int
    probe: np.ndarray  # columns: step, t, T, |grad T|
    snapshot_time: float
    max_temperature: float
    max_gradient: float


def _zero(x):
    return 0.0


def _probe_row(sol, step, t):
    value, grad = evaluate(sol, _HEAT_PROBE)
    rec = ProbeRecord(float(t), value, float(np.hypot(grad[0], grad[1])))
    return [float(step), rec.t, rec.value, rec.gradient_magnitude]


def _window_regions(regions, mesh, bbox):
    """Subset of a uniform single-mesh region list intersecting a box.

    Regions of a single mesh are its elements in row-major order, so the
    window is an index rectangle.
    """
    n1, n2 = mesh.shape
    lo0, lo1 = mesh.box.lo
    h0 = mesh.breakpoints[0][1] - lo0
    h1 = mesh.breakpoints[1][1] - lo1
    i0 = max(int((bbox.lo[0] - lo0) / h0), 0)
    i1 = min(int((bbox.hi[0] - lo0) / h0) + 1, n1)
    j0 = max(int((bbox.lo[1] - lo1) / h1), 0)
    j1 = min(int((bbox.hi[1] - lo1) / h1) + 1, n2)
    return [regions[i * n2 + j] for i in range(i0, i1) for j in range(j0, j1)]


def _swept_bbox(source: MovingSource, t0: float, t1: float) -> Box:
    c0 = source.center(t0)
    c1 = source.center(t1)
    r = source.source_radius + 0.02  # margin for the arc sagitta
    return Box(
        (min(c0[0], c1[0]) - r, min(c0[1], c1[1]) - r),
        (max(c0[0], c1[0]) + r, max(c0[1], c1[1]) + r),
    )


def _run_heat_static(resolution, basis, dt, over_integration, source, field_resolution, out, model):
    mesh = build_uniform_mesh(_HEAT_DOMAIN, (resolution, resolution))
    space = build_space([LevelSpec(mesh, basis)], _HEAT_DOMAIN)
    space = set_dirichlet(space, _ALL_FACES, _zero)
    regions = compute_regions([(0, mesh)], AT_LEAST_ONE)
    system = assemble(space, regions, WeakForm(include_mass=True))
    red, recover = apply_constraints(system)
    scheme = ThetaScheme(0.5, dt)
    lu = spla.splu((red.M / dt + scheme.theta * red.K).tocsc())

    n_steps = int(round(_HEAT_TMAX / dt))
    n = red.K.shape[0]
    T = np.zeros(n)

    load_cache: dict = {}

    def load(t):
        bbox = source.bbox(t)
        near = _window_regions(regions, mesh, bbox)
        src = lambda pts: source(pts, t)
        return assemble_load(space, near, src, over_integration, bbox=bbox, cache=load_cache)[:n]

    probe = [_probe_row(FieldSolution.from_reduced(space, T), 0, 0.0)]
    F0 = load(0.0)
    snapshot = (abs(0.0 - _HEAT_SNAPSHOT), 0.0, T.copy())
    for step in range(1, n_steps + 1):
        t1 = step * dt
        F1 = load(t1)
        try:
            T = theta_step(red.M, red.K, F0, F1, T, scheme, solve=lu.solve)
        except Exception as exc:
            raise RuntimeError(f"{model} model failed at step {step} (t={t1:g}): {exc}") from exc
        F0 = F1
        probe.append(_probe_row(FieldSolution.from_reduced(space, T), step, t1))
        if abs(t1 - _HEAT_SNAPSHOT) < snapshot[0]:
            snapshot = (abs(t1 - _HEAT_SNAPSHOT), t1, T.copy())

    probe = np.array(probe)
    sol = FieldSolution.from_reduced(space, snapshot[2])
    if out is not None:
        _write_probe_csv(out / f"heat_probe_{model}.csv", probe)
        grid_to_csv(sample_grid(sol, field_resolution), out / f"heat_field_{model}.csv")
    return HeatModelResult(
        model,
        count_active(space),
        probe,
        snapshot[1],
        float(np.max(probe[:, 2])),
        float(np.max(probe[:, 3])),
    )


def _run_heat_dynamic(dt, over_integration, source, field_resolution, out):
    base = LevelSpec(build_uniform_mesh(_HEAT_DOMAIN, (11, 11)), BasisSpec(4, 2, "trunk"))
    sizes, degrees, counts = (2.5, 1.25, 0.625), (3, 2, 1), (11, 11, 11)
    n_sub = max(1, int(round(_MOVE_PERIOD / dt)))
    dt_eff = _MOVE_PERIOD / n_sub
    scheme = ThetaScheme(0.5, dt_eff)
    n_moves = int(round(_HEAT_TMAX / _MOVE_PERIOD))

    sol = None
    probe = []
    snapshot = None
    n_unknowns = 0
    step = 0
    for j in range(n_moves):
        tau = j * _MOVE_PERIOD
        # overlays advance to the source position at the new time level; the
        # state is then transferred onto the moved space before stepping
        levels = advance_overlays(base, tau + _MOVE_PERIOD, sizes, degrees, counts, source)
        space = build_space(levels, _HEAT_DOMAIN)
        space = set_dirichlet(space, _ALL_FACES, _zero)
        n_unknowns = count_active(space)
        if sol is None:
            sol = FieldSolution.zero(space)
        else:
            sol = l2_project(sol, space)
        regions = compute_regions([(i, lv.mesh) for i, lv in enumerate(space.levels)], AT_LEAST_ONE)
        system = assemble(space, regions, WeakForm(include_mass=True))
        red, recover = apply_constraints(system)
        n = red.K.shape[0]
        lu = spla.splu((red.M / dt_eff + scheme.theta * red.K).tocsc())
        T = sol.coefficients[:n].copy()

        swept = _swept_bbox(source, tau, tau + _MOVE_PERIOD)
        near_regions = [
            r
            for r in regions
            if all(r.box.lo[a] <= swept.hi[a] and swept.lo[a] <= r.box.hi[a] for a in range(2))
        ]
        load_cache: dict = {}

        def load(t):
            src = lambda pts: source(pts, t)
            return assemble_load(
                space, near_regions, src, over_integration, bbox=source.bbox(t), cache=load_cache
            )[:n]

        if j == 0:
            probe.append(_probe_row(sol, 0, 0.0))
            snapshot = (abs(-_HEAT_SNAPSHOT), 0.0, sol)
        F0 = load(tau)
        for s in range(1, n_sub + 1):
            t1 = tau + s * dt_eff
            F1 = load(t1)
            try:
                T = theta_step(red.M, red.K, F0, F1, T, scheme, solve=lu.solve)
            except Exception as exc:
                raise RuntimeError(f"dynamic model failed at step {step + 1} (t={t1:g}): {exc}") from exc
            F0 = F1
            step += 1
            sol = FieldSolution.from_reduced(space, T)
            probe.append(_probe_row(sol, step, t1))
            if abs(t1 - _HEAT_SNAPSHOT) < snapshot[0]:
                snapshot = (abs(t1 - _HEAT_SNAPSHOT), t1, sol)

    probe = np.array(probe)
    if out is not None:
        _write_probe_csv(out / "heat_probe_dynamic.csv", probe)
        grid_to_csv(sample_grid(snapshot[2], field_resolution), out / "heat_field_dynamic.csv")
    return HeatModelResult(
        "dynamic",
        n_unknowns,
        probe,
        snapshot[1],
        float(np.max(probe[:, 2])),
        float(np.max(probe[:, 3])),
    )


def run_heat(config: StudyConfig) -> dict:
    """Run the requested heat-transfer models and emit probe/field CSVs."""
    source = MovingSource()
    out = config.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for model in config.models:
        if model not in _HEAT_DT:
            raise ValueError(f"unknown heat model {model!r}")
    results = {}
    for model in config.models:
        dt = config.dt if config.dt is not None else _HEAT_DT[model]
        if model == "reference":
            results[model] = _run_heat_static(
                config.reference_resolution,
                BasisSpec(1, 2, "tensor"),
                dt,
                1,
                source,
                config.field_resolution,
                out,
                "reference",
            )
        elif model == "unrefined":
            m = config.over_integration if config.over_integration is not None else 5
            results[model] = _run_heat_static(
                11, BasisSpec(4, 2, "trunk"), dt, m, source, config.field_resolution, out, "unrefined"
            )
        elif model == "dynamic":
            results[model] = _run_heat_dynamic(dt, 1, source, config.field_resolution, out)
        else:
            raise ValueError(f"unknown heat model {model!r}")
    return results


# ---------------------------------------------------------------------------
# CSV writers
# ---------------------------------------------------------------------------


def _write_convergence_csv(path: Path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "E"])
        for rec in records:
            writer.writerow([rec.n_unknowns, repr(rec.error_percent)])


def _write_overlap_csv(path: Path, etas, ps, table):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["o"] + [f"p{p}" for p in ps])
        for ie, eta in enumerate(etas):
            writer.writerow([repr(float(eta))] + [repr(float(v)) for v in table[ie]])


def _write_probe_csv(path: Path, probe):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "t", "T", "gradT"])
        for row in probe:
            writer.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), repr(float(row[3]))])
