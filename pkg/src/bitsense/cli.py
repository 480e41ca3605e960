"""Command-line front end: preset and custom ROC runs, theory tables, self-checks.

Subcommands
-----------
roc       Run the Monte Carlo engine and write per-config curve files plus
          a replayable manifest.
theory    Write the analytic table (agreement probability, both modes'
          moments, Gaussian Pfa/Pd per threshold).
validate  Run the built-in oracle suite and write a pass/fail report.

Exit codes: 0 ok, 1 check failure, 2 usage/config/IO error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analytic, montecarlo
from .analytic import TheoryMode
from .model import Hypothesis, ModelParams
from .montecarlo import RunConfig, RunManifest

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

DEFAULT_MASTER_SEED = 123456789

#: Shared manifest note resolving the noise-level convention: config files
#: and presets specify the noise standard deviation (noise_std); the engine
#: works with its square sigma2.
NOISE_NOTE = "configs declare noise_std (standard deviation); engine uses sigma2 = noise_std**2"

CURVE_HEADER = "eta,pfa_emp,pd_emp,pfa_theory,pd_theory,pfa_exact,mode"

_PRESET_BASE = dict(n=20, sigma_s2=1.0, noise_std=1e-2, trials=20000)

#: Named experiment presets: single sensor across correlation levels, and
#: a fixed correlation across network sizes.
PRESETS = {
    "fig2": [
        dict(_PRESET_BASE, label=f"fig2_r{r}", r=r, num_sensors=1)
        for r in (0.1, 0.3, 0.5)
    ],
    "fig3": [
        dict(_PRESET_BASE, label=f"fig3_N{N}", r=0.5, num_sensors=N)
        for N in (1, 2, 3)
    ],
}


class ConfigError(Exception):
    """Bad config file, bad parameter values, or unusable output target."""


def _fmt(x) -> str:
    """Fixed CSV float format: 9 significant digits; None becomes nan."""
    if x is None:
        return "nan"
    return f"{float(x):.9g}"


def _build_config(
    *,
    n: int,
    num_sensors: int,
    sigma_s2: float,
    r: float,
    noise_std: float,
    trials: int,
    master_seed: int,
    theory_mode: TheoryMode,
    thresholds=None,
) -> RunConfig:
    params = ModelParams(
        n=n,
        num_sensors=num_sensors,
        sigma_s2=sigma_s2,
        r=r,
        sigma2=noise_std**2,
    )
    config = RunConfig(
        params=params,
        master_seed=master_seed,
        trials=trials,
        thresholds=thresholds,
        theory_mode=theory_mode,
    )
    problems = config.violations()
    if problems:
        raise ConfigError("; ".join(problems))
    return config


def expand_preset(
    name: str,
    *,
    master_seed: int,
    trials: int | None = None,
    theory_mode: TheoryMode = TheoryMode.CONSISTENT,
) -> list[tuple[str, RunConfig]]:
    """Resolve a preset name into labeled RunConfigs."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    out = []
    for entry in PRESETS[name]:
        config = _build_config(
            n=entry["n"],
            num_sensors=entry["num_sensors"],
            sigma_s2=entry["sigma_s2"],
            r=entry["r"],
            noise_std=entry["noise_std"],
            trials=entry["trials"] if trials is None else trials,
            master_seed=master_seed,
            theory_mode=theory_mode,
        )
        out.append((entry["label"], config))
    return out


_CONFIG_KEYS = {
    "n": int,
    "num_sensors": int,
    "sigma_s2": float,
    "r": float,
    "noise_std": float,
    "trials": int,
    "seed": int,
    "mode": str,
    "thresholds": str,
    "label": str,
}

_CONFIG_DEFAULTS = dict(
    num_sensors=1, sigma_s2=1.0, noise_std=1e-2, trials=20000, mode="consistent"
)


def parse_config_file(path) -> tuple[str, RunConfig]:
    """Read a flat key = value config file (# starts a comment).

    Required keys: n, r.  Optional keys with defaults: num_sensors=1,
    sigma_s2=1.0, noise_std=0.01, trials=20000, seed, mode=consistent,
    thresholds (comma list; default is the canonical half-integer sweep),
    label.
    """
    raw: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(
                f"{path}:{lineno}: unknown key {key!r}; known keys: {sorted(_CONFIG_KEYS)}"
            )
        raw[key] = value

    for required in ("n", "r"):
        if required not in raw:
            raise ConfigError(f"{path}: missing required key {required!r}")

    values: dict = dict(_CONFIG_DEFAULTS)
    values.setdefault("seed", DEFAULT_MASTER_SEED)
    for key, text_value in raw.items():
        try:
            values[key] = _CONFIG_KEYS[key](text_value)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key}: {text_value!r}") from exc

    thresholds = None
    if "thresholds" in values:
        try:
            thresholds = np.array([float(v) for v in values["thresholds"].split(",")])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad thresholds list") from exc

    label = values.get("label", Path(path).stem)
    config = _build_config(
        n=values["n"],
        num_sensors=values["num_sensors"],
        sigma_s2=values["sigma_s2"],
        r=values["r"],
        noise_std=values["noise_std"],
        trials=values["trials"],
        master_seed=values["seed"],
        theory_mode=_parse_mode(values["mode"]),
        thresholds=thresholds,
    )
    return label, config


def _parse_mode(text: str) -> TheoryMode:
    try:
        return TheoryMode(text)
    except ValueError:
        raise ConfigError(
            f"unknown theory mode {text!r}; choose 'paper' or 'consistent'"
        ) from None


def _curve_rows(config: RunConfig) -> list[dict]:
    """Joined empirical/theory/exact rows, one per (mode, threshold).

    Both theory modes are emitted; the mode column tags each row.  A
    paper-literal H1 variance below zero leaves pd_theory as None (nan in
    CSV) for those rows — the negative variance is never patched over.
    """
    empirical = montecarlo.estimate_rates(config)
    rows = []
    for mode in (TheoryMode.CONSISTENT, TheoryMode.PAPER_LITERAL):
        comparison = montecarlo.compare_theory(
            RunConfig(
                params=config.params,
                master_seed=config.master_seed,
                trials=config.trials,
                thresholds=config.thresholds,
                theory_mode=mode,
            ),
            empirical=empirical,
        )
        for row in comparison.rows:
            rows.append(
                {
                    "eta": row.eta,
                    "pfa_emp": row.pfa_emp,
                    "pd_emp": row.pd_emp,
                    "pfa_theory": row.pfa_theory,
                    "pd_theory": row.pd_theory,
                    "pfa_exact": row.pfa_exact,
                    "mode": mode.value,
                }
            )
    return rows


def _write_curve_file(path: Path, rows: list[dict], fmt: str) -> None:
    if fmt == "csv":
        lines = [CURVE_HEADER]
        for row in rows:
            lines.append(
                ",".join(
                    [
                        _fmt(row["eta"]),
                        _fmt(row["pfa_emp"]),
                        _fmt(row["pd_emp"]),
                        _fmt(row["pfa_theory"]),
                        _fmt(row["pd_theory"]),
                        _fmt(row["pfa_exact"]),
                        row["mode"],
                    ]
                )
            )
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_text(json.dumps(rows, indent=2) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_roc(args) -> int:
    started = time.perf_counter()
    if args.preset:
        labeled = expand_preset(
            args.preset,
            master_seed=args.seed,
            trials=args.trials,
            theory_mode=_parse_mode(args.mode),
        )
    else:
        label, config = parse_config_file(args.config)
        if args.trials is not None:
            config = RunConfig(
                params=config.params,
                master_seed=config.master_seed,
                trials=args.trials,
                thresholds=config.thresholds,
                theory_mode=config.theory_mode,
            )
            config.require_valid()
        labeled = [(label, config)]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "csv" if args.format == "csv" else "json"

    outputs = []
    config_dicts = []
    for label, config in labeled:
        rows = _curve_rows(config)
        path = out_dir / f"{label}.{ext}"
        _write_curve_file(path, rows, args.format)
        outputs.append({"file": path.name, "sha256": _sha256(path)})
        config_dicts.append(montecarlo.config_to_dict(config, label=label))
        print(f"wrote {path}")

    trials_total = sum(c["trials"] for c in config_dicts)
    manifest = RunManifest(
        artifact_version=montecarlo.ARTIFACT_VERSION,
        rng_scheme=montecarlo.RNG_SCHEME,
        noise_interpretation=NOISE_NOTE,
        configs=tuple(config_dicts),
        per_hypothesis_trials={"H0": trials_total, "H1": trials_total},
        wall_clock_s=round(time.perf_counter() - started, 3),
        outputs=tuple(outputs),
    )
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    print(f"wrote {manifest_path}")
    return EXIT_OK


def cmd_theory(args) -> int:
    if args.preset:
        labeled = expand_preset(args.preset, master_seed=args.seed, trials=args.trials)
    else:
        labeled = [parse_config_file(args.config)]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    for label, config in labeled:
        params = config.params
        agreement = analytic.agreement_prob(params)
        scalars = {
            "p": agreement.p,
            "rho": agreement.rho,
        }
        moment_block = {}
        for mode in TheoryMode:
            for hyp in Hypothesis:
                m = analytic.moments(params, hyp, mode)
                moment_block[f"{hyp.name}_{mode.value}"] = {
                    "mean": m.mean,
                    "variance": m.variance,
                }
        table = []
        for mode in TheoryMode:
            comparison_rows = _theory_only_rows(config, mode)
            table.extend(comparison_rows)

        path = out_dir / f"{label}_theory.{args.format}"
        if args.format == "json":
            payload = {
                "params": montecarlo.config_to_dict(config, label=label),
                "scalars": scalars,
                "moments": moment_block,
                "rows": table,
            }
            path.write_text(json.dumps(payload, indent=2) + "\n")
        else:
            lines = [f"# p = {_fmt(scalars['p'])}", f"# rho = {_fmt(scalars['rho'])}"]
            for name, m in moment_block.items():
                lines.append(
                    f"# moments {name}: mean = {_fmt(m['mean'])}, "
                    f"variance = {_fmt(m['variance'])}"
                )
            lines.append("eta,mode,pfa_theory,pd_theory,h1_variance_flag")
            for row in table:
                lines.append(
                    ",".join(
                        [
                            _fmt(row["eta"]),
                            row["mode"],
                            _fmt(row["pfa_theory"]),
                            _fmt(row["pd_theory"]),
                            row["h1_variance_flag"],
                        ]
                    )
                )
            path.write_text("\n".join(lines) + "\n")
        print(f"wrote {path}")
    return EXIT_OK


def _theory_only_rows(config: RunConfig, mode: TheoryMode) -> list[dict]:
    params = config.params
    m0 = analytic.moments(params, Hypothesis.H0, mode)
    m1 = analytic.moments(params, Hypothesis.H1, mode)
    direction = config.direction
    rows = []
    for eta in config.thresholds:
        pfa = analytic.gaussian_tail(eta, m0.mean, m0.variance, direction)
        if m1.variance < 0:
            pd, flag = None, "NEGATIVE"
        else:
            pd = analytic.gaussian_tail(eta, m1.mean, m1.variance, direction)
            flag = "ZERO" if m1.variance == 0 else "ok"
        rows.append(
            {
                "eta": float(eta),
                "mode": mode.value,
                "pfa_theory": pfa,
                "pd_theory": pd,
                "h1_variance_flag": flag,
            }
        )
    return rows


def _check(name: str, passed: bool, detail: str) -> dict:
    status = "PASS" if passed else "FAIL"
    print(f"{status} {name}: {detail}")
    return {"name": name, "passed": bool(passed), "detail": detail}


def run_validation_suite(trials: int, master_seed: int) -> list[dict]:
    """Built-in oracle suite: closed form vs quadrature, Monte Carlo vs
    exact binomial, and a determinism replay."""
    checks = []

    # Agreement probability: arcsine closed form against the quadrature
    # oracle over a correlation/noise grid.
    worst = 0.0
    for rho in (-0.49, -0.25, 0.0, 0.1, 0.25, 0.49):
        for sigma2 in (1e-4, 1e-2, 1.0):
            c = 1.0 + sigma2
            closed = 2.0 * analytic.orthant_prob_closed(c, rho * c, c)
            quad = 2.0 * analytic.orthant_prob_quadrature(c, rho * c, c)
            worst = max(worst, abs(closed - quad))
    checks.append(
        _check(
            "agreement-closed-form-vs-quadrature",
            worst <= 1e-6,
            f"max |closed - quadrature| = {worst:.3g} (tolerance 1e-6)",
        )
    )

    # Empirical H0 firing rate against the exact binomial tail at every
    # threshold.  The rate is averaged over 5 derived seeds while the band
    # stays at the single-run width 3*sqrt(q(1-q)/trials), so a pass needs
    # agreement at ~6.7 sigma per point and holds for any master seed.
    config = _build_config(
        n=20,
        num_sensors=1,
        sigma_s2=1.0,
        r=0.5,
        noise_std=1e-2,
        trials=trials,
        master_seed=master_seed,
        theory_mode=TheoryMode.CONSISTENT,
    )
    pfa_runs = []
    for offset in range(5):
        sub = RunConfig(
            params=config.params,
            master_seed=(master_seed + offset) % 2**64,
            trials=trials,
        )
        stats = np.sort(montecarlo.simulate_statistics(sub, Hypothesis.H0))
        pfa_runs.append(
            (trials - np.searchsorted(stats, sub.thresholds, side="left")) / trials
        )
    pfa_avg = np.mean(pfa_runs, axis=0)
    exact = montecarlo.exact_h0_rates(config)
    bands = 3.0 * np.sqrt(exact * (1.0 - exact) / trials)
    devs = np.abs(pfa_avg - exact)
    ok = bool(np.all(devs <= bands + 1e-15))
    margins = np.where(bands > 0, devs - bands, -np.inf)  # endpoints are exact
    j = int(np.argmax(margins))
    checks.append(
        _check(
            "empirical-h0-vs-exact-binomial",
            ok,
            f"most binding threshold eta={config.thresholds[j]}: |emp - exact| = "
            f"{devs[j]:.3g}, band = {bands[j]:.3g} ({trials} trials x 5 seeds)",
        )
    )

    # Determinism: identical statistics serially and with two workers.
    y_serial = montecarlo.simulate_statistics(config, Hypothesis.H1, workers=1)
    y_parallel = montecarlo.simulate_statistics(config, Hypothesis.H1, workers=2)
    same = bool(np.array_equal(y_serial, y_parallel))
    checks.append(
        _check(
            "determinism-serial-vs-parallel",
            same,
            "H1 statistics identical for 1 and 2 workers"
            if same
            else "statistics differ between worker counts",
        )
    )
    return checks


def cmd_validate(args) -> int:
    trials = 2000 if args.quick else 20000
    if args.trials is not None:
        trials = args.trials
    checks = run_validation_suite(trials=trials, master_seed=args.seed)
    all_passed = all(c["passed"] for c in checks)
    report = {
        "all_passed": all_passed,
        "trials": trials,
        "master_seed": args.seed,
        "checks": checks,
    }
    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2) + "\n")
    print(f"wrote {out_path}")
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bitsense",
        description="One-bit spectrum sensing: agreement-count detector toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_format=True):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", choices=sorted(PRESETS), help="named experiment")
        src.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument(
            "--seed", type=int, default=DEFAULT_MASTER_SEED, help="master seed"
        )
        p.add_argument(
            "--mode",
            choices=[m.value for m in TheoryMode],
            default=TheoryMode.CONSISTENT.value,
            help="theory mode used by the engine",
        )
        if with_format:
            p.add_argument("--format", choices=["csv", "json"], default="csv")

    p_roc = sub.add_parser("roc", help="Monte Carlo ROC curves + manifest")
    add_common(p_roc)
    p_roc.set_defaults(func=cmd_roc)

    p_theory = sub.add_parser("theory", help="analytic moments and Pfa/Pd table")
    add_common(p_theory)
    p_theory.set_defaults(func=cmd_theory)

    p_val = sub.add_parser("validate", help="built-in oracle suite")
    p_val.add_argument("--out", default="validation_report.json")
    p_val.add_argument("--quick", action="store_true", help="2000-trial subset")
    p_val.add_argument("--trials", type=int, default=None)
    p_val.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
