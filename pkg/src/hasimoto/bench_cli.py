"""Command-line harness: verify | equiv | run | convergence.

Every command reads an optional JSON config, writes a JSON report (stable key
order, no timestamps) into ``--out`` and exits with

    0 all checks pass, 1 a check failed, 2 configuration or I/O error,
    3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__, experiments as ex, flow_geo
from .errors import ConfigError, DomainError, FrameError, RetractionError
from .frames import ComplexProfile, build_frame, hasimoto_transform, to_document
from .geometry import ConstK, FlowParams, Grassmann, KahlerManifold, Sphere2, manifold_from_descriptor
from .tensor_lab import IDENTITIES, STensorField, identity_report

DEFAULT_TOLERANCES = {
    "identity": 1e-10,
    "closed_form": 1e-10,
    "contraction": 1e-10,
    "specialization": 1e-12,
    "min_ratio": 3.0,
    "equivalence": 1e-2,
    "energy_drift": 1e-3,
    "gauge_unitarity": 1e-10,
    "gauge_trace": 1e-12,
    "gauge_abs": 1e-12,
}

DEFAULT_VERIFY_BACKENDS = (
    {"name": "grassmann", "n0": 2, "k0": 1},
    {"name": "grassmann", "n0": 3, "k0": 1},
    {"name": "grassmann", "n0": 4, "k0": 2},
    {"name": "constk", "n": 3, "K": 4.0},
)


@dataclass
class ExperimentConfig:
    backend: dict = field(default_factory=lambda: {"name": "grassmann", "n0": 2, "k0": 1})
    verify_backends: list = field(default_factory=lambda: [dict(b) for b in DEFAULT_VERIFY_BACKENDS])
    L: float = 20.0
    M: int = 129
    grids: list = field(default_factory=lambda: [65, 129, 257])
    params: dict = field(default_factory=lambda: {"alpha": 0.0, "beta": 1.0, "gamma": 0.0})
    initial: dict = field(default_factory=lambda: {"kind": "gaussian_envelope", "amplitude": 0.3, "width": 3.0,
                                                   "carrier": 0.5, "seed": 7})
    T: float = 0.2
    samples: int = 4
    sigma: float = 0.5
    q_scheme: str = "fd"
    q_factor: float = 0.05
    q_variant: str = "closed"
    system: str = "geo"
    seed: int = 0
    trials: int = 100
    contraction_trials: int = 1000
    gauge_steps: int = 1000
    gauge_dt: float = 2e-4
    workers: int = 1
    perturb: dict | None = None
    tolerances: dict = field(default_factory=dict)
    out: str = "out"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.L, (int, float)) and self.L > 0, "L must be positive")
        for M in [self.M, *self.grids]:
            need(isinstance(M, int) and M >= 9, "grid sizes must be integers >= 9")
        need(len(self.grids) >= 1, "grids must not be empty")
        need(self.T > 0 and self.samples >= 1, "T must be positive and samples >= 1")
        need(self.sigma > 0 and self.q_factor > 0, "dt factors must be positive")
        need(self.q_scheme in ("fd", "spectral"), "q_scheme must be 'fd' or 'spectral'")
        need(self.q_variant in ("closed", "generic"), "q_variant must be 'closed' or 'generic'")
        need(self.system in ("geo", "q"), "system must be 'geo' or 'q'")
        need(isinstance(self.seed, int) and 0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer")
        need(self.trials >= 1 and self.contraction_trials >= 1 and self.gauge_steps >= 1, "trial counts must be >= 1")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers must be >= 1")
        bad = sorted(set(self.tolerances) - set(DEFAULT_TOLERANCES))
        need(not bad, f"unknown tolerance keys: {bad}")
        try:
            self.manifold()
            for b in self.verify_backends:
                manifold_from_descriptor(b)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        self.flow_params()
        if self.perturb is not None:
            slot = self.perturb.get("slot")
            need(isinstance(slot, list) and len(slot) == 4, "perturb.slot must list four indices")

    def manifold(self) -> KahlerManifold:
        return manifold_from_descriptor(self.backend)

    def flow_params(self) -> FlowParams:
        p = self.params
        try:
            if {"alpha", "beta", "gamma"} <= set(p):
                return FlowParams.from_energy(float(p["alpha"]), float(p["beta"]), float(p["gamma"]))
            return FlowParams(float(p["a"]), float(p["b"]), float(p["c"]), float(p["lambda"]))
        except KeyError as exc:
            raise ConfigError(f"params need (alpha, beta, gamma) or (a, b, c, lambda); missing {exc}") from None

    def tol(self, key: str, scale: float = 1.0) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key])) * scale

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Report:
    def __init__(self, command: str, cfg: ExperimentConfig, tol_scale: float):
        self.command, self.cfg, self.tol_scale = command, cfg, tol_scale
        self.checks: list[dict] = []
        self.data: dict = {}

    def check(self, name: str, value: float, tol: float, passed: bool | None = None) -> bool:
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks.append({"name": name, "value": value, "tol": tol, "pass": ok})
        return ok

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def document(self) -> dict:
        cfg = self.cfg
        return _json_safe({
            "command": self.command,
            "config": cfg.as_dict(),
            "config_hash": cfg.digest(),
            "grid": {"L": cfg.L, "M": cfg.M, "grids": cfg.grids},
            "tolerances": {k: cfg.tol(k, self.tol_scale) for k in DEFAULT_TOLERANCES},
            "tol_scale": self.tol_scale,
            "versions": {"hasimoto": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "checks": self.checks,
            "data": self.data,
            "pass": self.passed,
        })


def _monotone(errors) -> bool:
    return all(e1 <= e0 for e0, e1 in zip(errors[:-1], errors[1:]))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_verify(cfg: ExperimentConfig, tol_scale: float = 1.0) -> Report:
    rep = Report("verify", cfg, tol_scale)
    rng = np.random.default_rng(cfg.seed)
    t_id, t_cf, t_ct = (cfg.tol(k, tol_scale) for k in ("identity", "closed_form", "contraction"))
    for desc in cfg.verify_backends:
        man = manifold_from_descriptor(desc)
        tag = _tag(man)
        for name, v in sorted(ex.identity_suite(man, rng).items()):
            rep.check(f"{tag}:identity:{name}", v, t_id)
        exact = ex.closed_form_identities(man)
        for name in IDENTITIES:
            rep.check(f"{tag}:closed_form:{name}", exact[name], 0.0 if _integer_s(man) else t_id)
        rep.check(f"{tag}:contraction", ex.contraction_error(man, rng, cfg.contraction_trials), t_ct)
        if isinstance(man, Grassmann):
            cf = ex.closed_form_agreement(man, cfg.L, cfg.M, cfg.seed)
            rep.check(f"{tag}:closed_form:lift_frames", cf["lift_frames"], t_cf)
            rep.data[f"{tag}:closed_form"] = cf
            blocks = [ex.block_identity_error(man, cfg.L, M, cfg.seed) for M in cfg.grids]
            rs = ex.ratios(blocks)
            rep.data[f"{tag}:block_identity"] = {"grids": cfg.grids, "errors": blocks, "ratios": rs}
            worst = min(rs, default=math.inf)
            rep.check(f"{tag}:block_identity:min_ratio", worst, cfg.tol("min_ratio"), worst >= cfg.tol("min_ratio"))
    spec = ex.specialization_suite(rng, cfg.trials, cfg.L, 257, "spectral")
    rep.data["specialization"] = spec
    for name, gaps in sorted(spec.items()):
        rep.check(f"specialization:{name}", gaps["rhs"], cfg.tol("specialization", tol_scale))
    if cfg.perturb is not None:
        _perturbation_checks(rep, cfg, t_id)
    return rep


def _perturbation_checks(rep: Report, cfg: ExperimentConfig, tol: float) -> None:
    man = manifold_from_descriptor(cfg.perturb.get("backend", cfg.verify_backends[0]))
    S = ex.closed_form_s(man).astype(complex)
    slot = tuple(int(i) for i in cfg.perturb["slot"])
    try:
        S[slot] += complex(cfg.perturb.get("size", 1e-6))
    except IndexError:
        raise ConfigError(f"perturb.slot {list(slot)} is out of range for {_tag(man)}") from None
    for name, v in identity_report(STensorField(S)):
        rep.check(f"perturbed:{_tag(man)}:{name}", v, tol)


def _tag(man: KahlerManifold) -> str:
    if isinstance(man, Grassmann):
        return f"G{man.n0}{man.k0}"
    if isinstance(man, ConstK):
        return f"ConstK(n={man.dim},K={man.K:g})"
    if isinstance(man, Sphere2):
        return f"S2(kappa={man.kappa:g})"
    return type(man).__name__


def _integer_s(man) -> bool:
    return isinstance(man, Grassmann)


def _equiv_worker(args):
    cfg_dict, M = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    res = ex.equivalence_run(cfg.manifold(), cfg.flow_params(), cfg.L, M, cfg.T, cfg.initial, cfg.samples,
                             cfg.sigma, cfg.q_scheme, cfg.q_factor, cfg.q_variant)
    return {**res.summary(), "times": res.times, "abs_gap": res.abs_gap, "phase_gap": res.phase_gap,
            "energy": res.energy}


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def cmd_equiv(cfg: ExperimentConfig, tol_scale: float = 1.0) -> Report:
    man, params = cfg.manifold(), cfg.flow_params()
    if isinstance(man, (Grassmann, ConstK)) and not params.hamiltonian:
        raise ConfigError("equivalence on symmetric-space backends needs c = 3(a-b)/2")
    rep = Report("equiv", cfg, tol_scale)
    runs = _map(_equiv_worker, [(cfg.as_dict(), M) for M in cfg.grids], cfg.workers)
    rep.data["runs"] = runs
    disc = [r["discrepancy_abs"] for r in runs]
    rep.data["discrepancy_ratios"] = ex.ratios(disc)
    rep.check("equivalence:monotone", 0.0, 0.0, _monotone(disc))
    rep.check("equivalence:final", disc[-1], cfg.tol("equivalence", tol_scale))
    drift = [r["energy_drift"] for r in runs]
    if params.hamiltonian and all(math.isfinite(d) for d in drift):
        rep.data["energy_ratios"] = ex.ratios(drift)
        rep.check("energy:monotone", 0.0, 0.0, _monotone(drift))
        rep.check("energy:final", drift[-1], cfg.tol("energy_drift", tol_scale))
    if isinstance(man, Grassmann):
        g = ex.gauge_study(man.k0, man.m0, params, cfg.L, cfg.grids[0], cfg.gauge_steps, cfg.gauge_dt, cfg.seed,
                           cfg.q_scheme)
        rep.data["gauge"] = g
        rep.check("gauge:unitarity", g["unitarity"], cfg.tol("gauge_unitarity", tol_scale))
        rep.check("gauge:trace", g["trace_invariance"], cfg.tol("gauge_trace", tol_scale))
        rep.check("gauge:abs_profile", g["abs_profile_identity"], cfg.tol("gauge_abs", tol_scale))
    return rep


def cmd_run(cfg: ExperimentConfig, tol_scale: float = 1.0, out_dir: Path | None = None) -> Report:
    rep = Report("run", cfg, tol_scale)
    man, params = cfg.manifold(), cfg.flow_params()
    L, M, T, samples = cfg.L, cfg.M, cfg.T, cfg.samples
    triple = ex.energy_triple(params)
    rows, snaps = [], []
    curve = ex.initial_curve(man, cfg.initial, L, M)
    if cfg.system == "geo":
        states = flow_geo.integrate_geo(flow_geo.GeoFlowState(curve, 0.0, params), T, samples, cfg.sigma)
        for st in states:
            Q = hasimoto_transform(st.curve, build_frame(st.curve))
            e = flow_geo.energy(st.curve, *triple) if triple else math.nan
            rows.append((st.t, e, _mass(Q), flow_geo.constraint_violation(st.curve)))
            snaps.append({"t": st.t, **to_document(st.curve, Q)})
    else:
        sysq = ex.q_system_for(man, params, L, M, cfg.q_scheme, cfg.q_variant)
        Q = hasimoto_transform(curve, build_frame(curve)).Q
        per = max(1, math.ceil(T / samples / (cfg.q_factor * curve.dx**2)))
        h = T / samples / per
        for s in range(samples + 1):
            if s > 0:
                for _ in range(per):
                    Q = sysq.step(Q, h)
                if not np.all(np.isfinite(Q)):
                    raise FloatingPointError("non-finite values in the transformed system")
            prof = ComplexProfile(Q, L)
            rows.append((s * T / samples, math.nan, _mass(prof), math.nan))
            snaps.append({"t": s * T / samples, **to_document(profile=prof)})
    energies = [r[1] for r in rows]
    if all(math.isfinite(e) for e in energies):
        scale = abs(energies[0]) or 1.0
        drift = max(abs(e - energies[0]) for e in energies) / scale
        rep.data["energy_drift"] = drift
        rep.check("energy:drift", drift, cfg.tol("energy_drift", tol_scale))
    rep.data["rows"] = len(rows)
    if out_dir is not None:
        _write_csv(out_dir / "timeseries.csv", rows)
        _write_json(out_dir / "snapshots.json", _json_safe(snaps))
    return rep


def _mass(profile: ComplexProfile) -> float:
    return float(np.sum(np.abs(profile.Q) ** 2) * profile.dx)


def cmd_convergence(cfg: ExperimentConfig, tol_scale: float = 1.0) -> Report:
    rep = Report("convergence", cfg, tol_scale)
    man = cfg.manifold()
    min_ratio = cfg.tol("min_ratio")
    studies = {"roundtrip": [ex.roundtrip_error(man, cfg.L, M, cfg.seed) for M in cfg.grids]}
    if isinstance(man, Grassmann) and man.k0 < man.n0:
        studies["block_identity"] = [ex.block_identity_error(man, cfg.L, M, cfg.seed) for M in cfg.grids]
        studies["transported_s_deviation"] = [
            ex.closed_form_agreement(man, cfg.L, M, cfg.seed)["parallel_frames"] for M in cfg.grids
        ]
    for name, errs in studies.items():
        rs = ex.ratios(errs)
        rep.data[name] = {"grids": cfg.grids, "errors": errs, "ratios": rs}
        floor = max(errs) < 1e-12  # already at round-off, nothing to converge
        worst = min(rs, default=math.inf)
        rep.check(f"{name}:min_ratio", worst, min_ratio, floor or worst >= min_ratio)
    return rep


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "energy", "mass", "constraint"])
        for r in rows:
            w.writerow(["" if not math.isfinite(v) else repr(float(v)) for v in r])


def load_config(path: str | None, seed: int | None = None) -> ExperimentConfig:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if seed is not None:
        raw = {**raw, "seed": seed}
    return ExperimentConfig.from_dict(raw)


COMMANDS = {"verify": cmd_verify, "equiv": cmd_equiv, "run": cmd_run, "convergence": cmd_convergence}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hasimoto-bench", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output directory (default: config 'out')")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    p.add_argument("--seed", type=int, help="override the config seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if not args.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
        cfg = load_config(args.config, args.seed)
        out_dir = Path(args.out or cfg.out)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc.strerror}") from None
        if args.command == "run":
            rep = cmd_run(cfg, args.tol_scale, out_dir)
        else:
            rep = COMMANDS[args.command](cfg, args.tol_scale)
        report_path = out_dir / f"{args.command}.json"
        try:
            _write_json(report_path, rep.document())
        except OSError as exc:
            raise ConfigError(f"cannot write {report_path}: {exc.strerror}") from None
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, RetractionError, FrameError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for c in rep.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}  value={c['value']:.3e}  tol={c['tol']:.1e}")
    print(f"{args.command}: {'PASS' if rep.passed else 'FAIL'} -> {report_path}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
