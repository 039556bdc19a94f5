"""Scenarios, configuration files and the PDE-vs-PCTC comparison.

A scenario bundles a soliton train, a potential, a grid and run settings.
It is stored as TOML:

    name = "afr_free"

    [[train.solitons]]
    nu = 0.51
    mu = 0.0
    xi = -8.0
    delta = 0.0
    theta = 0.9424777960769379
    gamma = 0.0

    [potential.generator]      # or [[potential.terms]] with c, center, inv_width
    c = -0.1
    x0 = -16.0
    spacing = 1.0
    count = 33
    inv_width = 1.0

    [grid]
    x_min = -40.0
    x_max = 40.0
    n_points = 1601

    [run]
    t_end = 500.0
    dt = 0.005
    sample_every = 1.0
    engines = ["pde", "pctc"]

Optional tables ``[run.pde]`` (inner_tol, inner_max), ``[run.pctc]`` (dt,
method, rtol, atol, pol_mode), ``[tracking]`` (min_height, min_separation,
gate) and ``[compare]`` (threshold) override the defaults.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .ctc import CtcTrajectory, IntegrationOptions, init_ctc_state, integrate_ctc
from .lax import RegimeReport, build_lax, classify_regime, eigenvalues
from .potential import PotentialSpec, PotentialTerm
from .soliton import Grid, SolitonParams, TrainConfig
from .tracking import TrajectorySet, associate_tracks, find_peaks
from .vnlse import SolverOptions, VnlseRun, run_vnlse, write_conserved_csv

ENGINES = ("pde", "pctc")
RESULTS_ENV = "MANAKOV_RESULTS"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TrackingOptions:
    min_height: float | None = None  # None -> 0.1 (2 nu0)^2
    min_separation: float = 1.0
    gate: float = 1.0


@dataclass(frozen=True)
class Scenario:
    name: str
    train: TrainConfig
    potential: PotentialSpec
    grid: Grid
    t_end: float
    engines: tuple[str, ...] = ENGINES
    solver: SolverOptions = SolverOptions()
    ctc: IntegrationOptions = IntegrationOptions()
    sample_every: float = 1.0
    tracking: TrackingOptions = TrackingOptions()
    threshold: float = 1.0
    generator: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        engines = tuple(self.engines)
        object.__setattr__(self, "engines", engines)
        if not engines:
            raise ScenarioError("select at least one engine")
        bad = [e for e in engines if e not in ENGINES]
        if bad:
            raise ScenarioError(f"unknown engines {bad}; choose from {list(ENGINES)}")
        if not self.t_end > 0:
            raise ScenarioError("t_end must be positive")
        if not self.sample_every > 0:
            raise ScenarioError("sample_every must be positive")

    def with_engines(self, *engines) -> "Scenario":
        return replace(self, engines=tuple(engines))


# --- presets -------------------------------------------------------------

PRESET_NAMES = ("afr_free", "afr_well", "bsr_free", "bsr_hump", "mar_free", "mar_well")

_WELL = {"c": -0.1, "x0": -16.0, "spacing": 1.0, "count": 33, "inv_width": 1.0}
_HUMP = {"c": 0.01, "x0": -10.0, "spacing": 5.0 / 3.0, "count": 13, "inv_width": 1.0}
_SHALLOW = {"c": -0.01, "x0": -16.0, "spacing": 1.0, "count": 33, "inv_width": 1.0}

# (phases, amplitude step, generator, half-width of the domain, t_end)
_PRESETS = {
    "afr_free": ((0.0, math.pi, 0.0), 0.01, None, 50.0, 300.0),
    "afr_well": ((0.0, math.pi, 0.0), 0.01, _WELL, 40.0, 500.0),
    "bsr_free": ((0.0, 0.0, 0.0), 0.02, None, 40.0, 500.0),
    "bsr_hump": ((0.0, 0.0, 0.0), 0.02, _HUMP, 90.0, 500.0),
    "mar_free": ((0.0, 0.0, 0.0), 0.02, None, 40.0, 500.0),
    "mar_well": ((0.0, 0.0, 0.0), 0.02, _SHALLOW, 40.0, 500.0),
}


def three_soliton_train(delta_nu: float, phases=(0.0, math.pi, 0.0), nu0: float = 0.5,
                        positions=(-8.0, 0.0, 8.0)) -> TrainConfig:
    """Symmetric train at rest: amplitudes ``nu0 + delta_nu, nu0, nu0 - delta_nu``
    and polarization angles ``(4 - k) pi / 10``."""
    amps = (nu0 + delta_nu, nu0, nu0 - delta_nu)
    return TrainConfig(tuple(
        SolitonParams.from_angles(amps[k], 0.0, positions[k], phases[k], (3 - k) * math.pi / 10, 0.0)
        for k in range(3)))


def preset(name: str) -> Scenario:
    """Named three-soliton configurations.

    ``afr_*`` start asymptotically free, ``bsr_*`` and ``mar_*`` start from
    in-phase trains.  The hump in ``bsr_hump`` breaks the bound state and
    frees the lateral solitons; the wells in ``afr_well`` and ``mar_well``
    confine them.
    """
    try:
        phases, dnu, gen, half, t_end = _PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; valid presets: {', '.join(PRESET_NAMES)}") from None
    potential = PotentialSpec.uniform(**gen) if gen else PotentialSpec()
    return Scenario(name, three_soliton_train(dnu, phases), potential,
                    Grid.from_spacing(-half, half, 0.05), t_end,
                    generator=dict(gen) if gen else None)


# --- configuration files -------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    d = {"name": s.name, "train": {"solitons": s.train.to_list()}}
    if s.generator is not None and PotentialSpec.uniform(**s.generator) == s.potential:
        d["potential"] = {"generator": dict(s.generator)}
    else:
        d["potential"] = {"terms": s.potential.to_list()}
    d["grid"] = s.grid.to_dict()
    d["run"] = {
        "t_end": s.t_end, "dt": s.solver.dt, "sample_every": s.sample_every,
        "engines": list(s.engines),
        "pde": {"inner_tol": s.solver.inner_tol, "inner_max": s.solver.inner_max},
        "pctc": {"dt": s.ctc.dt, "method": s.ctc.method, "rtol": s.ctc.rtol,
                 "atol": s.ctc.atol, "pol_mode": s.ctc.pol_mode},
    }
    tr = {"min_separation": s.tracking.min_separation, "gate": s.tracking.gate}
    if s.tracking.min_height is not None:
        tr["min_height"] = s.tracking.min_height
    d["tracking"] = tr
    d["compare"] = {"threshold": s.threshold}
    return d


def scenario_from_dict(d: dict) -> Scenario:
    try:
        train = TrainConfig.from_list(d["train"]["solitons"])
        pot = d.get("potential", {})
        gen = pot.get("generator")
        if gen is not None and pot.get("terms"):
            raise ScenarioError("give either potential.terms or potential.generator, not both")
        if gen is not None:
            gen = {"c": float(gen["c"]), "x0": float(gen["x0"]), "spacing": float(gen["spacing"]),
                   "count": int(gen["count"]), "inv_width": float(gen.get("inv_width", 1.0))}
            potential = PotentialSpec.uniform(**gen)
        else:
            potential = PotentialSpec.from_list(pot.get("terms", []))
        g = d["grid"]
        grid = Grid(float(g["x_min"]), float(g["x_max"]), int(g["n_points"]))
        run = d["run"]
        pde = run.get("pde", {})
        solver = SolverOptions(float(run.get("dt", SolverOptions.dt)),
                               float(pde.get("inner_tol", SolverOptions.inner_tol)),
                               int(pde.get("inner_max", SolverOptions.inner_max)))
        pc = run.get("pctc", {})
        base = IntegrationOptions()
        sample = float(run.get("sample_every", 1.0))
        ctc = IntegrationOptions(float(pc.get("dt", base.dt)), sample,
                                 pc.get("method", base.method), float(pc.get("rtol", base.rtol)),
                                 float(pc.get("atol", base.atol)), pc.get("pol_mode", base.pol_mode))
        tr = d.get("tracking", {})
        tracking = TrackingOptions(tr.get("min_height"), float(tr.get("min_separation", 1.0)),
                                   float(tr.get("gate", 1.0)))
        threshold = float(d.get("compare", {}).get("threshold", 1.0))
        return Scenario(str(d.get("name", "scenario")), train, potential, grid,
                        float(run["t_end"]), tuple(run.get("engines", ENGINES)), solver, ctc,
                        sample, tracking, threshold, gen)
    except KeyError as exc:
        raise ScenarioError(f"missing config key {exc.args[0]!r}") from None


def dumps_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def loads_scenario(text: str) -> Scenario:
    try:
        d = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"invalid config: {exc}") from None
    return scenario_from_dict(d)


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text())


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s))


# --- comparison ----------------------------------------------------------

@dataclass
class ComparisonMetrics:
    max_dev: list
    rms_dev: list
    n_common: list
    t_star: float | None          # first time any track deviates by more than threshold
    t_star_per_track: list
    threshold: float

    def to_dict(self) -> dict:
        return {"max_dev": self.max_dev, "rms_dev": self.rms_dev, "n_common": self.n_common,
                "t_star": self.t_star, "t_star_per_track": self.t_star_per_track,
                "threshold": self.threshold}


def _resample(src: TrajectorySet, times: np.ndarray) -> np.ndarray:
    """Linear interpolation of ``src`` onto ``times``; NaN outside its range
    or next to a missing sample."""
    ts, x = src.times, src.tracks
    out = np.full((len(times), src.n_tracks), np.nan)
    for i, t in enumerate(times):
        j = int(np.searchsorted(ts, t))
        if j < len(ts) and ts[j] == t:
            out[i] = x[j]
        elif 0 < j < len(ts):
            w = (t - ts[j - 1]) / (ts[j] - ts[j - 1])
            out[i] = (1.0 - w) * x[j - 1] + w * x[j]
    return out


def compare_trajectories(a: TrajectorySet, b: TrajectorySet, threshold: float = 1.0) -> ComparisonMetrics:
    """Deviation between two track sets on the sample instants of the sparser one."""
    if a.n_tracks != b.n_tracks:
        raise ValueError(f"track counts differ: {a.n_tracks} vs {b.n_tracks}")
    # the sparser series is the reference; ties broken by content so that the
    # result does not depend on argument order
    key_a = (len(a.times), tuple(a.times))
    key_b = (len(b.times), tuple(b.times))
    if key_b < key_a:
        a, b = b, a
    times = a.times
    dev = np.abs(a.tracks - _resample(b, times))
    ok = np.isfinite(dev)
    max_dev, rms_dev, n_common, t_track = [], [], [], []
    for k in range(a.n_tracks):
        d = dev[ok[:, k], k]
        n_common.append(int(len(d)))
        max_dev.append(float(d.max()) if len(d) else None)
        rms_dev.append(float(np.sqrt(np.mean(d ** 2))) if len(d) else None)
        over = np.nonzero(ok[:, k] & (np.where(ok[:, k], dev[:, k], 0.0) > threshold))[0]
        t_track.append(float(times[over[0]]) if len(over) else None)
    hits = [t for t in t_track if t is not None]
    return ComparisonMetrics(max_dev, rms_dev, n_common, min(hits) if hits else None,
                             t_track, float(threshold))


def count_reversals(x, hysteresis: float = 0.5) -> int:
    """Number of direction changes of a track.

    A turn counts once the track has moved back by more than ``hysteresis``
    from its last extremum, so jitter from peak refinement is ignored.
    Missing samples are skipped.
    """
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 2:
        return 0
    direction = 0
    ext = x[0]
    count = 0
    for v in x[1:]:
        if direction >= 0 and v > ext:
            ext = v
            if direction == 0 and v - x[0] > hysteresis:
                direction = 1
        elif direction <= 0 and v < ext:
            ext = v
            if direction == 0 and x[0] - v > hysteresis:
                direction = -1
        if direction == 1 and ext - v > hysteresis:
            direction, ext, count = -1, v, count + 1
        elif direction == -1 and v - ext > hysteresis:
            direction, ext, count = 1, v, count + 1
    return count


# --- running -------------------------------------------------------------

@dataclass
class ScenarioResult:
    scenario: Scenario
    regime: RegimeReport
    pctc: CtcTrajectory | None = None
    pctc_tracks: TrajectorySet | None = None
    pde: VnlseRun | None = None
    pde_tracks: TrajectorySet | None = None
    metrics: ComparisonMetrics | None = None
    errors: dict = field(default_factory=dict)
    out_dir: Path | None = None

    def summary(self) -> dict:
        engines = {}
        if self.pctc is not None:
            engines["pctc"] = {"status": self.pctc.status, "message": self.pctc.message,
                               "samples": int(len(self.pctc.times))}
        if self.pde is not None:
            engines["pde"] = {"status": self.pde.status, "message": self.pde.message,
                              "samples": int(len(self.pde.times)),
                              "unconverged_steps": int(self.pde.unconverged_steps),
                              "norm_drift": float(abs(self.pde.norm[-1] - self.pde.norm[0])),
                              "energy_drift": float(abs(self.pde.energy[-1] - self.pde.energy[0]))}
        for name, msg in self.errors.items():
            engines[name] = {"status": "error", "message": msg}
        return {"scenario": self.scenario.name, "regime": self.regime.label, "engines": engines,
                "comparison": None if self.metrics is None else self.metrics.to_dict()}


def initial_regime(s: Scenario) -> RegimeReport:
    """Lax-spectrum regime of the initial train (the potential plays no part)."""
    return classify_regime(eigenvalues(build_lax(init_ctc_state(s.train))))


def run_pctc(s: Scenario) -> tuple[CtcTrajectory, TrajectorySet]:
    opts = replace(s.ctc, sample_every=s.sample_every)
    traj = integrate_ctc(init_ctc_state(s.train), s.potential, s.t_end, opts)
    return traj, TrajectorySet(traj.times.copy(), traj.xi)


def run_pde(s: Scenario, progress=None) -> tuple[VnlseRun, TrajectorySet]:
    nu0 = s.train.nu0
    min_height = s.tracking.min_height or 0.1 * (2.0 * nu0) ** 2

    def observer(f):
        return find_peaks(f.intensity, f.grid, min_height, s.tracking.min_separation)

    run = run_vnlse(s.train, s.potential, s.grid, s.t_end, s.solver, s.sample_every,
                    observer=observer, progress=progress)
    tracks = associate_tracks(run.observations, s.train.n, run.times,
                              gate=s.tracking.gate, initial=s.train.xi)
    return run, tracks


def result_dir(s: Scenario, out_dir=None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    return Path(os.environ.get(RESULTS_ENV, "results")) / s.name


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_scenario(s: Scenario, out_dir=None, write: bool = True, progress=None) -> ScenarioResult:
    """Run the selected engines on the same initial train and write the results.

    An engine that raises is recorded in ``errors``; the other engine's
    results are still produced and written.
    """
    res = ScenarioResult(s, initial_regime(s))
    if "pctc" in s.engines:
        try:
            res.pctc, res.pctc_tracks = run_pctc(s)
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            res.errors["pctc"] = f"{type(exc).__name__}: {exc}"
    if "pde" in s.engines:
        try:
            res.pde, res.pde_tracks = run_pde(s, progress)
        except Exception as exc:  # noqa: BLE001
            res.errors["pde"] = f"{type(exc).__name__}: {exc}"
    if res.pctc_tracks is not None and res.pde_tracks is not None:
        res.metrics = compare_trajectories(res.pde_tracks, res.pctc_tracks, s.threshold)
    if write:
        d = result_dir(s, out_dir)
        d.mkdir(parents=True, exist_ok=True)
        res.out_dir = d
        if res.pctc is not None:
            res.pctc.to_csv(d / "trajectories_pctc.csv")
        if res.pde is not None:
            res.pde_tracks.to_csv(d / "trajectories_pde.csv")
            write_conserved_csv(d / "conserved.csv", res.pde)
        _write_json(d / "regime.json", res.regime.to_dict())
        _write_json(d / "metrics.json", res.summary())
        save_scenario(s, d / "scenario.resolved.toml")
    return res
