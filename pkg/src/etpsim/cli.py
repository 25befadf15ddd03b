"""Command-line front end: simulation runs, estimation reports, Bell
optimization, and the cross-validation suite.

Subcommands
-----------
fringe    simulate a scan; write dataset.csv and model_curve.csv
estimate  r, the r < 1/2 verdict, and mixture fractions from CSVs or a config
bell      optimized CHSH values per source type
validate  closed-form vs quantum cross-checks; exit 0 only if all pass

Configuration is a YAML file (all keys optional); command-line flags
override config keys.  Angles are degrees in configs and CSV files and
radians inside the library.  Exit codes: 0 success, 2 input error,
3 I/O error, 4 infeasible estimate or failed fit, 5 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import bell as bell_mod
from . import estimator as est
from . import measurement as meas
from . import montecarlo as mc
from . import states
from . import validate as validate_mod

__all__ = ["main", "read_dataset_csv", "write_dataset_csv"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_VALIDATION = 5

DATASET_HEADER = ["repetition", "angle_deg", "counts", "sigma"]
MODEL_CURVE_HEADER = ["angle_deg", "expected_counts"]

_DEFAULTS = {
    "source": {"kind": "mixture", "alpha": 1.0, "beta": 0.0, "gamma": 0.0, "c0": 100.0},
    "scan": {
        "kind": "fig2a",
        "grid_step_deg": 22.5,
        "angles_deg": None,
        "window_s": 1.0,
        "rate_scale": 1.0,
        "repetitions": 5,
    },
    "seed": 0,
    "format": "csv",
    "analysis": {"fit_model": "mixture_gamma_fixed", "gamma_fixed": 0.0,
                 "noise_gammas": []},
    "bell": {"source": "etp", "family": "analyzer", "strategy": "multistart_local",
             "n_starts": 24, "maxiter": 4000},
}


def _deep_merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def _load_config(args) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config {args.config} must be a mapping")
        cfg = _deep_merge(cfg, loaded)
    # flag overrides
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "scan", None) is not None:
        cfg = _deep_merge(cfg, {"scan": {"kind": args.scan}})
    for name in ("alpha", "beta", "gamma", "c0"):
        val = getattr(args, name, None)
        if val is not None:
            cfg = _deep_merge(cfg, {"source": {name: val, "kind": "mixture"}})
    if getattr(args, "grid_step_deg", None) is not None:
        cfg = _deep_merge(cfg, {"scan": {"grid_step_deg": args.grid_step_deg}})
    if getattr(args, "reps", None) is not None:
        cfg = _deep_merge(cfg, {"scan": {"repetitions": args.reps}})
    if getattr(args, "gamma_fixed", None) is not None:
        cfg = _deep_merge(cfg, {"analysis": {"gamma_fixed": args.gamma_fixed}})
    if getattr(args, "format", None) is not None:
        cfg["format"] = args.format
    return cfg


def _mixture_from_config(cfg: dict) -> states.MixtureModel:
    src = cfg["source"]
    kind = src.get("kind", "mixture")
    c0 = float(src.get("c0", 100.0))
    if kind == "etp":
        return states.MixtureModel.pure_etp(c0=c0)
    if kind == "double_eop":
        return states.MixtureModel.pure_double_eop(c0=c0)
    if kind != "mixture":
        raise ValueError(f"unknown source kind {kind!r}")
    return states.MixtureModel(
        c0=c0,
        alpha=float(src.get("alpha", 0.0)),
        beta=float(src.get("beta", 0.0)),
        gamma=float(src.get("gamma", 0.0)),
    )


def _plan_from_config(cfg: dict) -> mc.ExperimentPlan:
    scan = cfg["scan"]
    if scan.get("angles_deg"):
        angles_deg = [float(a) for a in scan["angles_deg"]]
    else:
        step = float(scan.get("grid_step_deg", 22.5))
        if not 0.0 < step <= 180.0:
            raise ValueError(f"grid step must lie in (0, 180] degrees, got {step}")
        angles_deg = list(np.arange(0.0, 180.0 + step / 2.0, step))
    return mc.ExperimentPlan(
        scan=scan.get("kind", "fig2a"),
        angles=tuple(math.radians(a) for a in angles_deg),
        window_s=float(scan.get("window_s", 1.0)),
        rate_scale=float(scan.get("rate_scale", 1.0)),
        repetitions=int(scan.get("repetitions", 1)),
        seed=int(cfg.get("seed", 0)),
    )


# ---------------------------------------------------------------------------
# dataset serialization

def write_dataset_csv(path, dataset: mc.CoincidenceDataset) -> None:
    angles_deg = dataset.angles_deg
    sigmas = dataset.sigmas
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for rep in range(dataset.counts.shape[0]):
            for idx in range(dataset.counts.shape[1]):
                writer.writerow(
                    [
                        rep,
                        f"{angles_deg[idx]:.6f}",
                        int(dataset.counts[rep, idx]),
                        f"{sigmas[rep, idx]:.6f}",
                    ]
                )


def read_dataset_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse a dataset CSV. Returns (angles_deg, counts[rep, angle])."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DATASET_HEADER:
            raise ValueError(f"{path}:1: expected header {','.join(DATASET_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                rows.append((int(row[0]), float(row[1]), int(row[2])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    reps = sorted({r[0] for r in rows})
    if reps != list(range(len(reps))):
        raise ValueError(f"{path}: repetition indices must be 0..n-1, got {reps}")
    per_rep = {rep: [(a, c) for r, a, c in rows if r == rep] for rep in reps}
    angles = [a for a, _ in per_rep[0]]
    counts = np.empty((len(reps), len(angles)), dtype=np.int64)
    for rep in reps:
        got = [a for a, _ in per_rep[rep]]
        if not np.allclose(got, angles, atol=1e-9):
            raise ValueError(f"{path}: repetition {rep} has a different angle grid")
        counts[rep] = [c for _, c in per_rep[rep]]
    return np.asarray(angles), counts


def _dataset_from_arrays(scan: str, angles_deg, counts) -> mc.CoincidenceDataset:
    plan = mc.ExperimentPlan(
        scan=scan,
        angles=tuple(math.radians(a) for a in angles_deg),
        repetitions=counts.shape[0],
    )
    return mc.CoincidenceDataset(plan=plan, counts=counts)


def _write_json_records(path, records, meta=None) -> None:
    payload = {"records": records}
    if meta:
        payload["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_fringe(args) -> int:
    cfg = _load_config(args)
    mixture = _mixture_from_config(cfg)
    plan = _plan_from_config(cfg)
    dataset = mc.run_scan(mixture, plan)

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    curve_deg = np.arange(0.0, 180.0 + 0.25, 0.5)
    scale = plan.window_s * plan.rate_scale
    expected = np.asarray(
        meas.fringe_rate(mixture, plan.scan, np.radians(curve_deg)), dtype=float
    ) * scale

    if cfg["format"] == "json":
        _write_json_records(
            out_dir / "dataset.json",
            [
                {
                    "repetition": rep,
                    "angle_deg": round(float(dataset.angles_deg[idx]), 6),
                    "counts": int(dataset.counts[rep, idx]),
                    "sigma": round(float(dataset.sigmas[rep, idx]), 6),
                }
                for rep in range(dataset.counts.shape[0])
                for idx in range(dataset.counts.shape[1])
            ],
            meta={"scan": plan.scan, "seed": plan.seed},
        )
        _write_json_records(
            out_dir / "model_curve.json",
            [
                {"angle_deg": round(float(a), 6), "expected_counts": float(e)}
                for a, e in zip(curve_deg, expected)
            ],
        )
    else:
        write_dataset_csv(out_dir / "dataset.csv", dataset)
        with open(out_dir / "model_curve.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(MODEL_CURVE_HEADER)
            for a, e in zip(curve_deg, expected):
                writer.writerow([f"{a:.6f}", f"{e:.8f}"])

    gamma_fixed = float(cfg["analysis"]["gamma_fixed"])
    fit = est.fit_fringe(dataset, model=cfg["analysis"]["fit_model"], gamma=gamma_fixed)
    fitted = fit.mixture()
    peak = fitted.c0 * (fitted.alpha / 3 + fitted.beta / 2 + fitted.gamma / 4) * scale
    floor = fitted.c0 * (fitted.beta / 4 + fitted.gamma / 4) * scale
    print(f"scan {plan.scan}: {len(plan.angles)} angles x {plan.repetitions} repetitions, seed {plan.seed}")
    print(f"model curve max {float(np.max(expected)):.4f}  min {float(np.min(expected)):.4f}")
    print(f"observed max {int(dataset.counts.max())}  min {int(dataset.counts.min())}")
    print(f"fitted curve max {peak:.4f}  min {floor:.4f}")
    print(f"r from fit: {meas.ratio_r_analytic(fitted):.4f}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _load_config(args)
    scan = cfg["scan"].get("kind", "fig2a")
    summaries = []
    fits = []
    caught = []
    if args.data:
        for path in args.data:
            angles_deg, counts = read_dataset_csv(path)
            dataset = _dataset_from_arrays(scan, angles_deg, counts)
            summaries.extend(est.summarize_scan(dataset))
            fits.append(_fit_record(dataset, cfg, caught))
    else:
        mixture = _mixture_from_config(cfg)
        plan = _plan_from_config(cfg)
        dataset = mc.run_scan(mixture, plan)
        summaries.extend(est.summarize_scan(dataset))
        fits.append(_fit_record(dataset, cfg, caught))

    ratio = est.estimate_r(summaries)
    verdict = est.etp_criterion(ratio)
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        alpha0 = est.alpha_from_r(ratio.r)
    caught.extend(str(w.message) for w in wlist)
    if ratio.r <= 0.5:
        sigma_alpha0 = est.fraction_from_ratio(ratio, gamma=0.0).sigma_alpha
    else:
        sigma_alpha0 = 0.0  # alpha is clamped, no meaningful first-order error

    gammas = [float(g) for g in cfg["analysis"].get("noise_gammas", [])]
    gamma_fixed = float(cfg["analysis"]["gamma_fixed"])
    if gamma_fixed > 0.0 and gamma_fixed not in gammas:
        gammas.insert(0, gamma_fixed)
    corrected = []
    for g in gammas:
        frac = est.fraction_from_ratio(ratio, gamma=g)
        corrected.append(
            {
                "gamma": g,
                "alpha": frac.alpha,
                "beta": frac.beta,
                "sigma_alpha": frac.sigma_alpha,
            }
        )

    report = {
        "scan": scan,
        "n_experiments": ratio.n_experiments,
        "r": ratio.r,
        "sigma_r": ratio.sigma_r,
        "verdict": str(verdict),
        "conservative_indicated": verdict.conservative,
        "alpha_noise_free": alpha0,
        "sigma_alpha_noise_free": sigma_alpha0,
        "noise_corrected": corrected,
        "fits": fits,
        "warnings": caught,
    }
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "estimate.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _fit_record(dataset, cfg, caught) -> dict:
    try:
        fit = est.fit_fringe(
            dataset,
            model=cfg["analysis"]["fit_model"],
            gamma=float(cfg["analysis"]["gamma_fixed"]),
        )
    except est.FitError as exc:
        caught.append(f"fit failed: {exc}")
        return {"model": cfg["analysis"]["fit_model"], "error": str(exc)}
    return {
        "model": fit.model,
        "params": fit.params,
        "errors": fit.errors,
        "reduced_chi2": fit.reduced_chi2,
        "r_from_fit": meas.ratio_r_analytic(fit.mixture()),
    }


_BELL_TARGETS = {
    "etp": bell_mod.COLLECTIVE_MAX_SINGLE_MODE,
    "double_eop": bell_mod.COLLECTIVE_MAX_DOUBLE_EOP,
}


def _cmd_bell(args) -> int:
    cfg = _load_config(args)
    bell_cfg = dict(cfg["bell"])
    if args.source is not None:
        bell_cfg["source"] = args.source
    if args.family is not None:
        bell_cfg["family"] = args.family
    if args.starts is not None:
        bell_cfg["n_starts"] = args.starts
    if args.maxiter is not None:
        bell_cfg["maxiter"] = args.maxiter

    source = bell_cfg["source"]
    if source == "etp":
        state = states.make_etp()
    elif source == "double_eop":
        state = states.make_double_eop()
    elif source == "separable":
        vec = np.zeros(9, dtype=complex)
        vec[0 * 3 + 2] = 1.0  # |HH>_A |VV>_B
        state = vec
    else:
        raise ValueError(f"unknown bell source {source!r}")

    optimum = bell_mod.optimize_chsh(
        state,
        family=bell_cfg["family"],
        strategy=bell_cfg.get("strategy", "multistart_local"),
        seed=int(cfg.get("seed", 0)),
        n_starts=int(bell_cfg["n_starts"]),
        maxiter=int(bell_cfg["maxiter"]),
    )
    classical = bell_mod.classical_chsh_max(state)
    target = _BELL_TARGETS.get(source)
    report = {
        "source": source,
        "family": optimum.family,
        "strategy": optimum.strategy,
        "chsh_value": optimum.value,
        "classical_diagonal_max": classical,
        "tsirelson_bound": bell_mod.TSIRELSON_BOUND,
        "n_starts": optimum.n_starts,
        "restart_spread": optimum.restart_spread,
        "best_restarts": list(optimum.restart_values[:5]),
        "improved_over_classical": optimum.improved_over_classical,
    }
    if target is not None:
        shortfall = max(0.0, target - optimum.value)
        report["target"] = target
        report["shortfall"] = shortfall
        report["meets_target"] = shortfall <= 5e-3
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"bell_{source}.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_validate(args) -> int:
    results = validate_mod.run_validation(tolerance_scale=args.tolerance_scale)
    all_ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
        all_ok &= res.passed
    print(f"{'all checks passed' if all_ok else 'VALIDATION FAILED'}")
    return EXIT_OK if all_ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etpsim",
        description="Simulate and analyze four-fold polarization-correlation scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="master random seed")
        p.add_argument("--out", help="output directory")

    def add_source_scan(p):
        p.add_argument("--scan", choices=sorted(meas.SCANS))
        p.add_argument("--alpha", type=float, help="single-mode pair fraction")
        p.add_argument("--beta", type=float, help="independent-pairs fraction")
        p.add_argument("--gamma", type=float, help="white-noise fraction")
        p.add_argument("--c0", type=float, help="total four-fold rate per window")
        p.add_argument("--grid-step-deg", type=float, dest="grid_step_deg")
        p.add_argument("--reps", type=int, help="scan repetitions")
        p.add_argument("--gamma-fixed", type=float, dest="gamma_fixed",
                       help="noise fraction held fixed in fits/corrections")
        p.add_argument("--format", choices=["csv", "json"])

    p_fringe = sub.add_parser("fringe", help="simulate a scan and export data")
    add_common(p_fringe)
    add_source_scan(p_fringe)
    p_fringe.set_defaults(func=_cmd_fringe)

    p_est = sub.add_parser("estimate", help="estimate r and mixture fractions")
    add_common(p_est)
    add_source_scan(p_est)
    p_est.add_argument("--data", action="append",
                       help="dataset CSV (repeatable); omit to simulate from config")
    p_est.set_defaults(func=_cmd_estimate)

    p_bell = sub.add_parser("bell", help="optimize CHSH values")
    add_common(p_bell)
    p_bell.add_argument("--source", choices=["etp", "double_eop", "separable"])
    p_bell.add_argument("--family", choices=["analyzer", "unrestricted"])
    p_bell.add_argument("--starts", type=int)
    p_bell.add_argument("--maxiter", type=int)
    p_bell.set_defaults(func=_cmd_bell)

    p_val = sub.add_parser("validate", help="run the cross-validation suite")
    p_val.add_argument("--tolerance-scale", type=float, default=1.0,
                       dest="tolerance_scale",
                       help="multiply every check tolerance by this factor")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (est.InfeasibleMixtureError, est.UndefinedRatioError, est.FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError, yaml.YAMLError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
