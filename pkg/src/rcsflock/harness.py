"""Scenario construction, config files, output writers and parameter sweeps."""
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
import yaml

from .diagnostics import (
    admissibility_report, deviation, energy_identity_residual, energy_report,
    flocking_metrics, uniform_energy_condition,
)
from .dynamics import ConstantKernel, CuckerSmaleKernel, ModelParams, SystemState
from .errors import ConditionError, DegenerateError, ParamError
from .geometry import Euclidean, make_backend
from .integrate import StepperConfig, simulate
from .relkin import to_momentum

KINDS = ("pattern", "collision", "flocking", "sweep", "manifold")
JSONL_FIELDS = (
    "t", "kinetic", "potential", "total", "production", "max_rel_speed",
    "min_pair_dist", "max_pair_dist", "momentum_sum_norm",
)


@dataclass(eq=False)
class ScenarioSpec:
    """Everything needed to reproduce a run, including explicit initial data.

    ``points`` holds pattern target points, ``cs`` the speeds of light of a
    limit sweep; both are empty for kinds that do not use them.
    """

    kind: str
    params: ModelParams
    stepper: StepperConfig
    x0: np.ndarray
    w0: np.ndarray
    geometry: object = None
    seed: int = 0
    points: Optional[np.ndarray] = None
    cs: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParamError(f"unknown scenario kind {self.kind!r}; choose from {KINDS}")
        self.x0 = np.array(self.x0, dtype=float, ndmin=2)
        self.w0 = np.array(self.w0, dtype=float, ndmin=2)
        if self.geometry is None:
            self.geometry = Euclidean(self.x0.shape[1])
        if self.x0.shape != self.w0.shape or self.x0.shape[0] != self.params.n:
            raise ParamError("initial data do not match the target matrix")
        if self.x0.shape[1] != self.geometry.ambient_dim:
            raise ParamError("initial data do not match the geometry dimension")
        if self.geometry.kind != 0:
            self.geometry.check_point(self.x0)
            for x, w in zip(self.x0, self.w0):
                self.geometry.check_tangent(x, w)
        self.cs = tuple(float(c) for c in self.cs)
        if any(b <= a for a, b in zip(self.cs, self.cs[1:])):
            raise ParamError("sweep speeds of light must be strictly increasing")
        if self.points is not None:
            self.points = np.array(self.points, dtype=float, ndmin=2)

    @property
    def state(self):
        return SystemState(self.x0.copy(), self.w0.copy(), 0.0)

    def __eq__(self, other):
        if not isinstance(other, ScenarioSpec):
            return NotImplemented
        return to_dict(self) == to_dict(other)


@dataclass
class RunArtifacts:
    trajectory_path: str
    diagnostics_path: str
    summary_path: str
    summary: dict
    trajectory: object = field(default=None, repr=False)


# ---- target patterns --------------------------------------------------------

def build_pattern_targets(points):
    """Pairwise distances of the given target points as a target matrix."""
    pts = np.array(points, dtype=float, ndmin=2)
    if pts.shape[0] < 2:
        raise DegenerateError("a pattern needs at least two points")
    R = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    off = R[~np.eye(len(pts), dtype=bool)]
    if np.any(off == 0):
        raise DegenerateError("pattern points must be pairwise distinct")
    return R


def star_points(n=5, radius=1.0):
    """Tips of a regular n-pointed star (the vertices of a regular n-gon)."""
    ang = math.pi / 2 + 2 * math.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def _rotation2(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def build_pattern_scenario(points=None, seed=0, kappas=(1.0, 2.0, 4.0), c=math.inf,
                           noise=0.25, speed=0.1, dt=1e-2, t_end=50.0, record_stride=10):
    """Particles start near a randomly rotated copy of the pattern with small random momenta."""
    points = star_points() if points is None else np.array(points, dtype=float)
    R = build_pattern_targets(points)
    rng = np.random.default_rng(seed)
    x0 = points.copy()
    if points.shape[1] == 2:
        x0 = x0 @ _rotation2(rng.uniform(0, 2 * math.pi)).T
    x0 = x0 + rng.normal(scale=noise, size=x0.shape)
    v0 = rng.normal(scale=speed, size=x0.shape)
    p = ModelParams(c, *kappas, R)
    cfg = StepperConfig(dt=dt, t_end=t_end, record_stride=record_stride)
    return ScenarioSpec("pattern", p, cfg, x0, to_momentum(v0, c), seed=seed, points=points)


# ---- finite-time collision ----------------------------------------------------

def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Adaptive Simpson quadrature with the usual 1/15 Richardson correction."""
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        err = left + right - whole
        if depth <= 0 or abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        return rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def collision_conditions(spec):
    """Evaluate the four defining conditions of the two-particle collision example.

    (C1)-(C3) are the stated sign and smallness inequalities.  "k2 << 1" is
    made concrete through the comparison ODE y' = -A y + B t + C that bounds
    x2 - x1 from above: if its minimum y(t*) is negative the particles must
    meet.  Returns a dict of booleans and the numbers behind them.
    """
    p = spec.params
    (x1, x2), (v1, v2) = spec.x0[:, 0], spec.w0[:, 0]
    R = p.targets[0, 1]
    k0, k1, k2 = p.kappa0, p.kappa1, p.kappa2
    E0 = energy_report(spec.state, p).total
    r0 = x2 - x1
    r_bar = R + math.sqrt(8.0 * (E0 - 2.0) / k2)
    phi_m = p.kernel.min_on(r_bar)
    Phi = adaptive_simpson(lambda r: float(p.kernel(r)), 0.0, r0, tol=1e-10)
    A = k0 * phi_m + 0.5 * k1
    B = 2.0 * math.sqrt(k2 * E0)
    C = v2 - v1 + k0 * Phi + 0.5 * k1 * r0
    if A > 0:
        k = r0 + (B - A * C) / (A * A)
        y_min = B / A**2 * math.log(A * A * k / B) + C / A if A * A * k > B else r0
    else:
        y_min = r0 - C * C / (2.0 * B) if C < 0 else r0
    return {
        "C1": bool(abs(x1) < R / 2 and abs(x2) < R / 2 and x1 < 0 < x2 and v2 < 0 < v1),
        "C2": bool(k0 * Phi - k0 * phi_m * r0 < v1 - v2),
        "C3": bool(k0 * Phi + 0.5 * k1 * r0 < v1 - v2),
        "C4": bool(y_min < 0),
        "Phi": Phi, "phi_m": phi_m, "r_bar": r_bar, "E0": E0,
        "A": A, "B": B, "C": C, "comparison_min": y_min,
    }


def build_collision_example(R=2.0, kappas=(0.01, 0.01, 1e-4), x0=(-0.5, 0.5), v0=(1.0, -1.0),
                            kernel=None, dt=1e-3, t_end=10.0):
    """Two particles on a line heading at each other, classical dynamics.

    Raises ConditionError naming the first violated condition.
    """
    if not kappas[2] > 0:
        raise ConditionError("the collision example needs kappa2 > 0", clause="C4")
    kernel = CuckerSmaleKernel(0.5) if kernel is None else kernel
    targets = np.array([[0.0, R], [R, 0.0]])
    p = ModelParams(math.inf, *kappas, targets, kernel)
    cfg = StepperConfig(dt=dt, t_end=t_end)
    spec = ScenarioSpec("collision", p, cfg, np.array(x0)[:, None], np.array(v0)[:, None])
    cond = collision_conditions(spec)
    for clause in ("C1", "C2", "C3", "C4"):
        if not cond[clause]:
            raise ConditionError(f"collision example violates ({clause})", clause=clause)
    return spec


# ---- flocking -------------------------------------------------------------------

def build_flocking_scenario(N, d, seed, p, box=None, speed=0.5, min_dist=0.1,
                            dt=1e-2, t_end=100.0, record_stride=10, max_attempts=100):
    """Random positions in a box, random momenta shifted to a zero sum.

    ``speed`` scales the largest initial velocity as a fraction of c when c
    is finite, and is an absolute speed otherwise.  The last momentum is the
    negative sum of the others, so the total is zero up to one rounding.
    """
    if N < 2:
        raise ParamError("a flocking scenario needs N >= 2")
    if math.isfinite(p.c) and not 0 <= speed < 1:
        raise ParamError(f"speed is a fraction of c and must lie in [0, 1), got {speed}")
    box = 2.0 * N ** (1.0 / d) if box is None else box
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        x0 = rng.uniform(-box / 2, box / 2, size=(N, d))
        dist = np.linalg.norm(x0[:, None] - x0[None], axis=-1)
        np.fill_diagonal(dist, np.inf)
        if dist.min() > min_dist:
            break
    else:
        raise DegenerateError("could not draw well-separated positions")
    v = rng.normal(size=(N, d))
    v -= v.mean(axis=0)
    v *= (speed * p.c if math.isfinite(p.c) else speed) / np.linalg.norm(v, axis=1).max()
    w0 = to_momentum(v, p.c)
    w0[-1] = -w0[:-1].sum(axis=0)
    cfg = StepperConfig(dt=dt, t_end=t_end, record_stride=record_stride)
    return ScenarioSpec("flocking", p, cfg, x0, w0, seed=seed)


def default_flocking_params(N=6, c=10.0):
    R = build_pattern_targets(star_points(N))
    return ModelParams(c, 1.0, 1.0, 1.0, R)


# ---- manifolds --------------------------------------------------------------------

def build_manifold_scenario(b, seed=0, N=5, spread=0.4, speed=0.3, target=0.5, kappas=(1.0, 1.0, 1.0),
                            c=5.0, dt=1e-3, t_end=10.0, record_stride=10):
    """Particles clustered around the backend origin with random tangent momenta."""
    rng = np.random.default_rng(seed)
    o = b.origin()
    xs, ws = [], []
    for _ in range(N):
        u = np.zeros(b.ambient_dim)
        free = slice(0, b.d) if b.kind == 1 else slice(1, b.d + 1)
        u[free] = rng.normal(scale=spread * b.radius, size=b.d)
        x = b.exp(o, u)
        xs.append(x)
        ws.append(b.random_tangent(rng, x, speed))
    targets = np.full((N, N), float(target))
    np.fill_diagonal(targets, 0.0)
    p = ModelParams(c, *kappas, targets)
    cfg = StepperConfig(dt=dt, t_end=t_end, record_stride=record_stride)
    return ScenarioSpec("manifold", p, cfg, np.array(xs), np.array(ws), geometry=b, seed=seed)


def default_scenario(name, seed=0):
    if name == "pattern":
        return build_pattern_scenario(seed=seed)
    if name == "collision":
        return build_collision_example()
    if name == "flocking":
        return build_flocking_scenario(6, 2, seed, default_flocking_params())
    if name == "sphere":
        return build_manifold_scenario(make_backend("sphere", 2, 1.0), seed=seed)
    raise ParamError(f"unknown scenario {name!r}")


# ---- limit sweep ------------------------------------------------------------------

def build_sweep_scenario(cs=(10.0, 20.0, 40.0, 80.0), t_end=5.0, dt=1e-3):
    """Two particles with bonding, classical reference at c = inf."""
    x0 = np.array([[0.0, 0.0], [1.5, 0.3]])
    w0 = np.array([[0.5, 0.3], [-0.5, -0.3]])
    R = np.array([[0.0, 2.0], [2.0, 0.0]])
    p = ModelParams(math.inf, 1.0, 1.0, 1.0, R)
    cfg = StepperConfig(dt=dt, t_end=t_end)
    return ScenarioSpec("sweep", p, cfg, x0, w0, cs=cs)


def _sweep_member(args):
    spec, c = args
    return simulate(spec.state, spec.params.with_c(c), spec.stepper, spec.geometry)


@dataclass
class SweepResult:
    cs: list
    sup_D: list
    slope: float
    # slope of sqrt(sup_D), i.e. of the trajectory gap itself
    gap_slope: float
    # classical reference first, then one per c
    trajectories: list = field(default=None, repr=False)


def run_limit_sweep(base, cs=None, T=None, workers=1):
    """Classical reference plus one relativistic run per c on identical grids.

    Returns a SweepResult whose ``slope`` is the least-squares slope of
    log sup_D against log c.  The uniform energy condition is checked at the
    smallest c and at c = inf before anything runs.
    """
    cs = list(base.cs if cs is None else cs)
    if len(cs) < 3 or any(b <= a for a, b in zip(cs, cs[1:])):
        raise ParamError("a sweep needs at least three strictly increasing speeds of light")
    spec = base if T is None else replace(base, stepper=replace(base.stepper, t_end=T))
    s0 = spec.state
    if np.max(np.linalg.norm(s0.w, axis=-1)) >= min(cs):
        raise ConditionError("initial momenta must be below the smallest c", clause="momentum")
    for c in (min(cs), math.inf):
        ok, lhs, rhs = uniform_energy_condition(s0, spec.params.with_c(c))
        if not ok:
            raise ConditionError(f"uniform energy condition fails at c={c}: {lhs:.6g} > {rhs:.6g}", clause="energy")
    jobs = [(spec, math.inf)] + [(spec, float(c)) for c in cs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_sweep_member, jobs))
    else:
        trajs = [_sweep_member(j) for j in jobs]
    ref = trajs[0]
    for c, tr in zip(cs, trajs[1:]):
        if tr.termination.kind != "completed":
            raise RuntimeError(f"sweep member c={c} ended early: {tr.termination}")
    sup = [deviation(tr, ref).sup_D for tr in trajs[1:]]
    if any(s <= 0 for s in sup):
        return SweepResult(cs, sup, math.nan, math.nan, trajs)
    logc = np.log(cs)
    slope = float(np.polyfit(logc, np.log(sup), 1)[0])
    gap = float(np.polyfit(logc, 0.5 * np.log(sup), 1)[0])
    return SweepResult(cs, sup, slope, gap, trajs)


# ---- config files -------------------------------------------------------------------

def _c_out(c):
    return "inf" if math.isinf(c) else float(c)


def _c_in(c):
    if isinstance(c, str):
        if c.strip().lower() in ("inf", "infinite", "infinity", ".inf"):
            return math.inf
        return float(c)
    return float(c)


def _kernel_out(k):
    if isinstance(k, ConstantKernel):
        return {"kind": "constant", "phi0": float(k.phi0)}
    return {"kind": "cucker_smale", "beta": float(k.beta)}


def _kernel_in(d):
    d = dict(d or {"kind": "cucker_smale"})
    kind = d.pop("kind", "cucker_smale")
    if kind == "cucker_smale":
        return CuckerSmaleKernel(float(d.pop("beta", 0.5)))
    if kind == "constant":
        return ConstantKernel(float(d.pop("phi0", 1.0)))
    raise ParamError(f"unknown kernel kind {kind!r}")


def to_dict(spec):
    """Plain-data form of a ScenarioSpec (the config file layout)."""
    p, b = spec.params, spec.geometry
    d = {
        "kind": spec.kind,
        "seed": int(spec.seed),
        "geometry": {"name": b.name, "d": int(b.d), "radius": float(b.radius)},
        "model": {
            "c": _c_out(p.c),
            "kappa0": float(p.kappa0),
            "kappa1": float(p.kappa1),
            "kappa2": float(p.kappa2),
            "kernel": _kernel_out(p.kernel),
            "targets": p.targets.tolist(),
        },
        "stepper": asdict(spec.stepper),
        "initial": {"x": spec.x0.tolist(), "w": spec.w0.tolist()},
    }
    if spec.points is not None:
        d["pattern"] = {"points": spec.points.tolist()}
    if spec.cs:
        d["sweep"] = {"cs": list(spec.cs)}
    return d


_KEYS = {
    "": {"kind", "seed", "geometry", "model", "stepper", "initial", "pattern", "sweep"},
    "geometry": {"name", "d", "radius"},
    "model": {"c", "kappa0", "kappa1", "kappa2", "kernel", "targets"},
    "stepper": {"dt", "t_end", "scheme", "collision_epsilon", "record_stride"},
    "initial": {"x", "w", "v"},
    "pattern": {"points"},
    "sweep": {"cs"},
}


def _check_keys(d):
    """Reject misspelled keys instead of silently falling back to defaults."""
    for section, allowed in _KEYS.items():
        block = d if section == "" else d.get(section)
        if block is None:
            continue
        if not isinstance(block, dict):
            raise ParamError(f"config section {section!r} must be a table")
        extra = set(block) - allowed
        if extra:
            where = section or "top level"
            raise ParamError(f"unknown config key(s) {sorted(extra)} in {where}")


def from_dict(d):
    """Inverse of :func:`to_dict`.

    ``initial`` may give velocities ``v`` instead of momenta ``w``.  A
    pattern without explicit targets uses the distances of its points; a
    missing ``initial`` block is generated from ``kind`` and ``seed``.
    """
    d = dict(d)
    _check_keys(d)
    kind = d.get("kind", "flocking")
    seed = int(d.get("seed", 0))
    g = d.get("geometry") or {}
    m = dict(d.get("model") or {})
    c = _c_in(m.get("c", "inf"))
    points = (d.get("pattern") or {}).get("points")
    targets = m.get("targets")
    if targets is None:
        if points is None:
            raise ParamError("model.targets is required unless pattern.points is given")
        targets = build_pattern_targets(points)
    p = ModelParams(c, float(m.get("kappa0", 1.0)), float(m.get("kappa1", 1.0)), float(m.get("kappa2", 1.0)),
                    np.array(targets, dtype=float), _kernel_in(m.get("kernel")))
    st = dict(d.get("stepper") or {})
    cfg = StepperConfig(
        dt=float(st.get("dt", 1e-3)), t_end=float(st.get("t_end", 10.0)), scheme=str(st.get("scheme", "rk4")),
        collision_epsilon=float(st.get("collision_epsilon", 1e-8)), record_stride=int(st.get("record_stride", 1)),
    )
    n = p.n
    dim = int(g.get("d", len(points[0]) if points is not None else 2))
    b = make_backend(g.get("name", "euclidean"), dim, float(g.get("radius", 1.0)))
    cs = tuple((d.get("sweep") or {}).get("cs", ()))
    init = d.get("initial")
    if init is None:
        x0, w0 = _generated_initial(kind, seed, p, b, points)
    else:
        if "x" not in init or not ("w" in init or "v" in init):
            raise ParamError("initial needs x and one of w (momenta) or v (velocities)")
        x0 = np.array(init["x"], dtype=float, ndmin=2)
        if "w" in init:
            w0 = np.array(init["w"], dtype=float, ndmin=2)
        else:
            w0 = to_momentum(np.array(init["v"], dtype=float, ndmin=2), c)
    if x0.shape[0] != n:
        raise ParamError(f"initial data has {x0.shape[0]} particles, targets have {n}")
    return ScenarioSpec(kind, p, cfg, x0, w0, geometry=b, seed=seed, points=points, cs=cs)


def _generated_initial(kind, seed, p, b, points):
    if b.kind != 0:
        s = build_manifold_scenario(b, seed=seed, N=p.n, c=p.c)
    elif kind == "pattern" and points is not None:
        s = build_pattern_scenario(points, seed=seed, c=p.c)
    else:
        s = build_flocking_scenario(p.n, b.d, seed, p, speed=0.5)
    return s.x0, s.w0


def serialize_config(spec):
    return yaml.safe_dump(to_dict(spec), sort_keys=False, default_flow_style=None)


def parse_config(text):
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ParamError(f"config is not valid YAML: {e}") from None
    if not isinstance(d, dict):
        raise ParamError("config must be a table of sections")
    return from_dict(d)


def load_config(path):
    with open(path) as f:
        return parse_config(f.read())


def dump_config(spec, path):
    with open(path, "w") as f:
        f.write(serialize_config(spec))


# ---- running and output -----------------------------------------------------------------

def write_trajectory_csv(traj, path):
    n_rec, N, m = traj.x.shape
    t = np.repeat(traj.times, N)
    idx = np.tile(np.arange(N), n_rec)
    data = np.column_stack([t, idx, traj.x.reshape(-1, m), traj.w.reshape(-1, m)])
    header = ",".join(["t", "particle"] + [f"x{k}" for k in range(m)] + [f"w{k}" for k in range(m)])
    fmt = ["%.17g", "%d"] + ["%.17g"] * (2 * m)
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=header, comments="")


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def write_diagnostics_jsonl(traj, path):
    d = traj.diagnostics
    with open(path, "w") as f:
        for k, t in enumerate(traj.times):
            row = {"t": float(t)}
            row.update({name: _finite_or_none(d[name][k]) for name in JSONL_FIELDS[1:]})
            f.write(json.dumps(row) + "\n")


def _termination_dict(term):
    out = {"kind": term.kind}
    out.update({k: (list(v) if isinstance(v, tuple) else float(v)) for k, v in asdict(term).items()})
    return out


def summarize(spec, traj):
    adm = admissibility_report(spec.state, spec.params, spec.geometry)
    fin = flocking_metrics(traj.final_state, spec.params, spec.geometry)
    d = traj.diagnostics
    return {
        "kind": spec.kind,
        "seed": spec.seed,
        "termination": _termination_dict(traj.termination),
        "admissibility": {k: (_finite_or_none(v) if isinstance(v, float) else v) for k, v in asdict(adm).items()},
        "final_flocking": {k: (_finite_or_none(v) if isinstance(v, float) else v) for k, v in asdict(fin).items()},
        "energy_identity_residual": energy_identity_residual(traj),
        "max_speed": float(np.max(d["max_speed"])),
        "max_momentum": float(np.max(d["max_momentum"])),
        "records": int(len(traj.times)),
    }


def run_scenario(spec, out_dir):
    """Simulate, then write trajectory.csv, diagnostics.jsonl and summary.json into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    traj = simulate(spec.state, spec.params, spec.stepper, spec.geometry)
    tpath = os.path.join(out_dir, "trajectory.csv")
    dpath = os.path.join(out_dir, "diagnostics.jsonl")
    spath = os.path.join(out_dir, "summary.json")
    write_trajectory_csv(traj, tpath)
    write_diagnostics_jsonl(traj, dpath)
    summary = summarize(spec, traj)
    with open(spath, "w") as f:
        json.dump(summary, f, indent=2)
    return RunArtifacts(tpath, dpath, spath, summary, traj)
