"""Command-line front end: diagnostics, experiments, SNR scans, certificates.

Option precedence is flags > environment > config file > defaults.  Every
long flag has an environment twin with the RIDGELESS_ prefix (dashes to
underscores, upper case); multi-token flags take the same tokens space
separated, e.g. RIDGELESS_EXP_FLOOR="300 20 1e-4".

Exit codes: 0 success, 1 usage or config error, 2 degenerate mathematics
(infinite effective-rank index), 3 hard-check failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .diagnostics import Constants, diagnose, effective_rank_index
from .experiments import (
    ALL_CHECKS,
    CHECK_IDENTITY,
    IDENTITY_TOL,
    ExperimentConfig,
    ExperimentError,
    certificate_study,
    record_csv_header,
    record_csv_row,
    result_to_dict,
    run_experiment,
    snr_scan,
)
from .noise import (
    DeterministicNoise,
    GaussianNoise,
    ScaledDirectionNoise,
    StudentTNoise,
    ZeroNoise,
    _load_vector,
    noise_from_dict,
)
from .serialize import csv_line, format_float, to_json, write_text
from .spectra import (
    CovarianceModel,
    Spectrum,
    load_spectrum,
    make_exp_floor_spectrum,
    make_flat_spectrum,
    make_three_level_spectrum,
)

__all__ = ["main", "entry"]

ENV_PREFIX = "RIDGELESS_"

_CONFIG_KEYS = {
    "schema",
    "spectrum",
    "n",
    "beta_norm",
    "beta_direction",
    "beta_values",
    "noise",
    "trials",
    "seed",
    "constants",
    "checks",
    "rel_tol",
    "rotation",
}

_SPECTRUM_KEYS = {
    "flat": {"p", "value"},
    "exp_floor": {"p", "tau", "eps"},
    "three_level": {"k1", "c_times_n", "p", "eps1", "eps2"},
    "values": {"values", "file"},
}


class _CliError(Exception):
    """Config/usage failure; carries every message so typos surface at once."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved here, so remap to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def _pick(flag_value, env_name: str, parse, file_value=None, default=None):
    """Apply the precedence chain for one scalar option."""
    if flag_value is not None:
        return flag_value
    raw = _env(env_name)
    if raw is not None:
        try:
            return parse(raw)
        except (TypeError, ValueError) as exc:
            raise _CliError(f"environment {ENV_PREFIX}{env_name.upper()}: {exc}")
    if file_value is not None:
        return file_value
    return default


# ---------------------------------------------------------------------------
# spectrum resolution


def _parse_int(text, what: str) -> int:
    try:
        value = int(str(text), 10)
    except ValueError:
        raise _CliError(f"{what}: expected an integer, got {text!r}")
    return value


def _parse_float(text, what: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise _CliError(f"{what}: expected a number, got {text!r}")


def _spec_from_tokens(kind: str, tokens) -> dict:
    tokens = list(tokens)
    if kind == "flat":
        if not 1 <= len(tokens) <= 2:
            raise _CliError("--flat takes P [V]")
        spec = {"type": "flat", "p": _parse_int(tokens[0], "--flat P")}
        spec["value"] = _parse_float(tokens[1], "--flat V") if len(tokens) == 2 else 1.0
        return spec
    if kind == "exp_floor":
        if len(tokens) != 3:
            raise _CliError("--exp-floor takes P TAU EPS")
        return {
            "type": "exp_floor",
            "p": _parse_int(tokens[0], "--exp-floor P"),
            "tau": _parse_float(tokens[1], "--exp-floor TAU"),
            "eps": _parse_float(tokens[2], "--exp-floor EPS"),
        }
    if kind == "three_level":
        if len(tokens) != 5:
            raise _CliError("--three-level takes K1 CN P E1 E2")
        return {
            "type": "three_level",
            "k1": _parse_int(tokens[0], "--three-level K1"),
            "c_times_n": _parse_int(tokens[1], "--three-level CN"),
            "p": _parse_int(tokens[2], "--three-level P"),
            "eps1": _parse_float(tokens[3], "--three-level E1"),
            "eps2": _parse_float(tokens[4], "--three-level E2"),
        }
    raise _CliError(f"unknown spectrum builder {kind!r}")


def _spectrum_from_spec(spec: dict) -> tuple[Spectrum, dict]:
    """Build a spectrum from its dict form; returns (spectrum, resolved echo)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise _CliError("spectrum spec must be an object with a 'type' field")
    kind = spec["type"]
    if kind not in _SPECTRUM_KEYS:
        raise _CliError(
            f"spectrum type must be one of {sorted(_SPECTRUM_KEYS)}, got {kind!r}"
        )
    unknown = set(spec) - _SPECTRUM_KEYS[kind] - {"type"}
    if unknown:
        raise _CliError([f"spectrum: unknown key {k!r}" for k in sorted(unknown)])
    try:
        if kind == "flat":
            s = make_flat_spectrum(int(spec["p"]), float(spec.get("value", 1.0)))
            return s, {"type": "flat", "p": int(spec["p"]), "value": float(spec.get("value", 1.0))}
        if kind == "exp_floor":
            s = make_exp_floor_spectrum(int(spec["p"]), float(spec["tau"]), float(spec["eps"]))
            return s, {
                "type": "exp_floor",
                "p": int(spec["p"]),
                "tau": float(spec["tau"]),
                "eps": float(spec["eps"]),
            }
        if kind == "three_level":
            args = (
                int(spec["k1"]),
                int(spec["c_times_n"]),
                int(spec["p"]),
                float(spec["eps1"]),
                float(spec["eps2"]),
            )
            s = make_three_level_spectrum(*args)
            return s, {
                "type": "three_level",
                "k1": args[0],
                "c_times_n": args[1],
                "p": args[2],
                "eps1": args[3],
                "eps2": args[4],
            }
        # values: inline list or external file; the echo pins the resolved
        # (sorted) values so a re-run does not depend on the file's future.
        if "values" in spec:
            s = Spectrum(np.asarray(spec["values"], dtype=float))
        elif "file" in spec:
            loaded = load_spectrum(spec["file"])
            if loaded.reordered:
                print(
                    f"note: spectrum file {spec['file']} was not sorted; "
                    "values reordered to non-increasing",
                    file=sys.stderr,
                )
            s = loaded.spectrum
        else:
            raise _CliError("spectrum of type 'values' needs 'values' or 'file'")
        return s, {"type": "values", "values": [float(v) for v in s.values]}
    except _CliError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise _CliError(f"spectrum: {exc}")


def _resolve_spectrum(ns, file_spec) -> tuple[Spectrum, dict]:
    """Flags beat environment beat config file; exactly one source required."""
    flag_sources = []
    if ns.flat is not None:
        flag_sources.append(_spec_from_tokens("flat", ns.flat))
    if ns.exp_floor is not None:
        flag_sources.append(_spec_from_tokens("exp_floor", ns.exp_floor))
    if ns.three_level is not None:
        flag_sources.append(_spec_from_tokens("three_level", ns.three_level))
    if ns.spectrum_file is not None:
        flag_sources.append({"type": "values", "file": ns.spectrum_file})
    if len(flag_sources) > 1:
        raise _CliError("give exactly one spectrum source")
    if flag_sources:
        return _spectrum_from_spec(flag_sources[0])

    env_sources = []
    for kind, var in (("flat", "flat"), ("exp_floor", "exp_floor"), ("three_level", "three_level")):
        raw = _env(var)
        if raw is not None:
            env_sources.append(_spec_from_tokens(kind, raw.split()))
    raw = _env("spectrum_file")
    if raw is not None:
        env_sources.append({"type": "values", "file": raw})
    if len(env_sources) > 1:
        raise _CliError("give exactly one spectrum source in the environment")
    if env_sources:
        return _spectrum_from_spec(env_sources[0])

    if file_spec is not None:
        return _spectrum_from_spec(file_spec)
    raise _CliError(
        "no spectrum given: use --flat/--exp-floor/--three-level/--spectrum-file "
        "or a config file"
    )


# ---------------------------------------------------------------------------
# noise resolution


def parse_noise_spec(text: str):
    """zero | gaussian:S | student:DF:S | worst:S | file:PATH"""
    head, _, rest = text.partition(":")
    try:
        if head == "zero":
            if rest:
                raise _CliError(f"noise 'zero' takes no parameters, got {text!r}")
            return ZeroNoise()
        if head == "gaussian":
            return GaussianNoise(sigma=_parse_float(rest, "--noise gaussian:S"))
        if head == "student":
            df_text, _, scale_text = rest.partition(":")
            if not scale_text:
                raise _CliError("noise 'student' takes student:DF:S")
            return StudentTNoise(
                df=_parse_float(df_text, "--noise student DF"),
                scale=_parse_float(scale_text, "--noise student S"),
            )
        if head == "worst":
            return ScaledDirectionNoise(target_norm=_parse_float(rest, "--noise worst:S"))
        if head == "file":
            if not rest:
                raise _CliError("noise 'file' takes file:PATH")
            return DeterministicNoise(_load_vector(rest))
    except _CliError:
        raise
    except (OSError, ValueError) as exc:
        raise _CliError(f"--noise: {exc}")
    raise _CliError(
        f"unknown noise spec {text!r}: expected "
        "zero | gaussian:S | student:DF:S | worst:S | file:PATH"
    )


# ---------------------------------------------------------------------------
# config file


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _CliError(f"config file: {exc}")
    except json.JSONDecodeError as exc:
        raise _CliError(f"config file {path}: invalid JSON ({exc})")
    if not isinstance(data, dict):
        raise _CliError(f"config file {path}: expected a JSON object")
    errors = []
    if data.get("schema") != 1:
        errors.append(f"config file {path}: 'schema' must be 1, got {data.get('schema')!r}")
    for key in sorted(set(data) - _CONFIG_KEYS):
        errors.append(f"config file {path}: unknown key {key!r}")
    if errors:
        raise _CliError(errors)
    return data


def _resolve_constants(ns, file_conf: dict) -> Constants:
    base = file_conf.get("constants")
    if base is not None:
        try:
            cons = Constants.from_dict(base)
        except (TypeError, ValueError) as exc:
            raise _CliError(f"config constants: {exc}")
    else:
        cons = Constants()
    fields = {}
    for name in ("c0", "eta", "gamma", "c3", "c_frac"):
        value = _pick(getattr(ns, name), name, float)
        if value is not None:
            fields[name] = value
    if not fields:
        return cons
    try:
        return Constants(**{**cons.to_dict(), **fields})
    except ValueError as exc:
        raise _CliError(f"constants: {exc}")


def _resolve_checks(file_conf: dict):
    raw = _env("checks")
    if raw is not None:
        names = [t for t in raw.replace(",", " ").split() if t]
    elif "checks" in file_conf:
        names = file_conf["checks"]
        if not isinstance(names, list):
            raise _CliError("config checks: expected a list of check names")
    else:
        return ALL_CHECKS
    unknown = sorted(set(names) - ALL_CHECKS)
    if unknown:
        raise _CliError([f"unknown check {name!r}" for name in unknown])
    return frozenset(names)


def _build_experiment_config(ns, *, need_noise: bool = True) -> ExperimentConfig:
    config_path = ns.config if ns.config is not None else _env("config")
    file_conf = _load_config_file(config_path) if config_path else {}

    errors = []
    spectrum = spec_echo = None
    try:
        spectrum, spec_echo = _resolve_spectrum(ns, file_conf.get("spectrum"))
    except _CliError as exc:
        errors.extend(exc.messages)

    noise = None
    try:
        noise_text = _pick(ns.noise, "noise", str)
        if noise_text is not None:
            noise = parse_noise_spec(noise_text)
        elif "noise" in file_conf:
            noise = noise_from_dict(file_conf["noise"])
        elif need_noise:
            noise = ZeroNoise()
    except _CliError as exc:
        errors.extend(exc.messages)
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"config noise: {exc}")

    constants = Constants()
    try:
        constants = _resolve_constants(ns, file_conf)
    except _CliError as exc:
        errors.extend(exc.messages)

    checks = ALL_CHECKS
    try:
        checks = _resolve_checks(file_conf)
    except _CliError as exc:
        errors.extend(exc.messages)

    n = trials = seed = beta_norm = beta_direction = rel_tol = None
    try:
        n = _pick(ns.n, "n", int, file_conf.get("n"))
        if n is None:
            errors.append("missing required option --n")
    except _CliError as exc:
        errors.extend(exc.messages)
    try:
        trials = _pick(ns.trials, "trials", int, file_conf.get("trials"), 100)
        seed = _pick(ns.seed, "seed", int, file_conf.get("seed"), 0)
        beta_norm = _pick(ns.beta_norm, "beta_norm", float, file_conf.get("beta_norm"), 0.0)
        beta_direction = _pick(
            ns.beta_direction, "beta_direction", str, file_conf.get("beta_direction"), "e1"
        )
        rel_tol = _pick(None, "rel_tol", float, file_conf.get("rel_tol"), 1e-10)
    except _CliError as exc:
        errors.extend(exc.messages)

    beta_values = None
    if file_conf.get("beta_values") is not None:
        raw = file_conf["beta_values"]
        try:
            beta_values = _load_vector(raw) if isinstance(raw, str) else np.asarray(raw, dtype=float)
        except (OSError, ValueError) as exc:
            errors.append(f"config beta_values: {exc}")

    rotation = None
    if file_conf.get("rotation") is not None:
        try:
            rotation = np.asarray(file_conf["rotation"], dtype=float)
        except ValueError as exc:
            errors.append(f"config rotation: {exc}")

    if errors:
        raise _CliError(errors)

    try:
        cov = CovarianceModel(spectrum, rotation)
        return ExperimentConfig(
            covariance=cov,
            n=n,
            noise_model=noise,
            trials=trials,
            seed=seed,
            constants=constants,
            beta_norm=beta_norm,
            beta_direction=beta_direction,
            beta_values=beta_values,
            checks=checks,
            rel_tol=rel_tol,
            spectrum_spec=spec_echo,
        )
    except (TypeError, ValueError) as exc:
        raise _CliError(str(exc))


# ---------------------------------------------------------------------------
# output helpers

_KNOWN_SUFFIXES = (".plot.csv", ".json", ".csv")


def _pick_format(ns) -> str:
    fmt = _pick(ns.format, "format", str, None, "json")
    if fmt not in ("json", "csv", "both"):
        raise _CliError(f"--format must be json, csv, or both, got {fmt!r}")
    return fmt


def _out_base(path: str) -> str:
    for suffix in _KNOWN_SUFFIXES:
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _print_aggregates(aggregates: dict, out=sys.stdout) -> None:
    cols = ("min", "q05", "median", "q95", "max", "mean")
    width = max(len(name) for name in aggregates)
    print(f"{'metric':<{width}}  " + "  ".join(f"{c:>12}" for c in cols), file=out)
    for name, stats in aggregates.items():
        row = "  ".join(f"{_fmt(stats[c]):>12}" for c in cols)
        print(f"{name:<{width}}  {row}", file=out)


def _identity_status(result) -> tuple[bool, str]:
    worst = max(r.identity_residual for r in result.records)
    ok = worst <= IDENTITY_TOL
    tag = "[OK]" if ok else "[FAIL]"
    return ok, f"{tag} identity: max residual {worst:.3e} (tolerance {IDENTITY_TOL:g})"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_diagnose(ns) -> int:
    config_path = ns.config if ns.config is not None else _env("config")
    file_conf = _load_config_file(config_path) if config_path else {}
    spectrum, spec_echo = _resolve_spectrum(ns, file_conf.get("spectrum"))
    n = _pick(ns.n, "n", int, file_conf.get("n"))
    if n is None:
        raise _CliError("missing required option --n")
    beta_norm = _pick(ns.beta_norm, "beta_norm", float, file_conf.get("beta_norm"), 0.0)
    xi_norm = _pick(ns.xi_norm, "xi_norm", float, None, 0.0)
    constants = _resolve_constants(ns, file_conf)

    try:
        report = diagnose(spectrum, n, beta_norm, xi_norm, constants)
    except ValueError as exc:
        raise _CliError(str(exc))

    payload = {"schema": 1, "spectrum": spec_echo}
    payload.update(report.to_dict())
    if ns.out:
        write_text(_out_base(ns.out) + ".json", to_json(payload))
    if not ns.quiet:
        for key, value in report.to_dict().items():
            if key == "constants":
                value = " ".join(f"{k}={_fmt(v)}" for k, v in value.items())
            print(f"{key:>14}  {_fmt(value)}")
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
        return 2
    return 0


def _cmd_simulate(ns) -> int:
    config = _build_experiment_config(ns)
    threads = _pick(ns.threads, "threads", int, None, 1)
    try:
        result = run_experiment(config, threads=threads)
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    fmt = _pick_format(ns)
    out = _pick(ns.out, "out", str)
    if out:
        base = _out_base(out)
        if fmt in ("json", "both"):
            write_text(base + ".json", to_json(result_to_dict(result)))
        if fmt in ("csv", "both"):
            lines = [csv_line(record_csv_header())]
            lines += [csv_line(record_csv_row(r)) for r in result.records]
            write_text(base + ".csv", "".join(lines))

    if not ns.quiet:
        _print_aggregates(result.aggregates)
        for name, value in result.rates.items():
            print(f"{name} {_fmt(value)}")
        for check, reason in result.skipped.items():
            print(f"[SKIP] {check}: {reason}")

    if CHECK_IDENTITY in config.checks:
        ok, line = _identity_status(result)
        print(line)
        if not ok:
            return 3
    return 0


def _parse_snr_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise _CliError(f"--snr-grid takes LO:HI:N, got {text!r}")
    lo = _parse_float(parts[0], "--snr-grid LO")
    hi = _parse_float(parts[1], "--snr-grid HI")
    count = _parse_int(parts[2], "--snr-grid N")
    if not (lo > 0 and hi > lo and count >= 2):
        raise _CliError("--snr-grid needs 0 < LO < HI and N >= 2")
    return [float(v) for v in np.geomspace(lo, hi, count)]


_PLOT_COLUMNS = (
    "snr",
    "regime",
    "median_pred",
    "q05_pred",
    "q95_pred",
    "upper_bound",
    "lower_bound",
    "corollary_upper",
    "corollary_lower",
    "snr_threshold",
    "snr_threshold_cn",
)


def _cmd_scan(ns) -> int:
    grid_text = _pick(ns.snr_grid, "snr_grid", str)
    if grid_text is None:
        raise _CliError("missing required option --snr-grid LO:HI:N")
    grid = _parse_snr_grid(grid_text)
    config = _build_experiment_config(ns)
    if math.isinf(effective_rank_index(config.covariance.spectrum, config.n, config.constants.c0)):
        print(
            "error: effective-rank index is infinite for this spectrum and c0; "
            "the scan's regime split is undefined",
            file=sys.stderr,
        )
        return 2
    threads = _pick(ns.threads, "threads", int, None, 1)
    try:
        points = snr_scan(config, grid, threads=threads)
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        raise _CliError(str(exc))

    fmt = _pick_format(ns)
    out = _pick(ns.out, "out", str)
    if out:
        base = _out_base(out)
        if fmt in ("json", "both"):
            payload = {
                "config": points[0].result.config_echo,
                "snr_grid": [pt.snr_target for pt in points],
                "points": [
                    {
                        "snr_target": pt.snr_target,
                        "beta_norm": pt.beta_norm,
                        "regime": pt.regime,
                        "snr_threshold": pt.snr_threshold,
                        "snr_threshold_cn": pt.snr_threshold_cn,
                        "diagnostics": pt.result.diagnostics.to_dict(),
                        "aggregates": pt.result.aggregates,
                        "rates": pt.result.rates,
                        "skipped": pt.result.skipped,
                    }
                    for pt in points
                ],
            }
            write_text(base + ".json", to_json(payload))
        if fmt in ("csv", "both"):
            lines = [csv_line(record_csv_header(extra=("snr", "regime")))]
            for pt in points:
                for r in pt.result.records:
                    lines.append(csv_line(record_csv_row(r, extra=(pt.snr_target, pt.regime))))
            write_text(base + ".csv", "".join(lines))
        plot_lines = [csv_line(_PLOT_COLUMNS)]
        for pt in points:
            diag = pt.result.diagnostics
            agg = pt.result.aggregates["pred_error"]
            plot_lines.append(
                csv_line(
                    [
                        pt.snr_target,
                        pt.regime,
                        agg["median"],
                        agg["q05"],
                        agg["q95"],
                        diag.upper_bound,
                        diag.lower_bound,
                        diag.corollary_upper,
                        diag.corollary_lower,
                        pt.snr_threshold,
                        pt.snr_threshold_cn,
                    ]
                )
            )
        write_text(base + ".plot.csv", "".join(plot_lines))

    if not ns.quiet:
        for pt in points:
            print(
                f"snr {_fmt(pt.snr_target):>12}  regime {pt.regime:<7}  "
                f"median_pred {_fmt(pt.result.aggregates['pred_error']['median'])}"
            )
        switches = sum(
            1 for a, b in zip(points, points[1:]) if a.regime != b.regime
        )
        print(f"regime switches: {switches}")

    if CHECK_IDENTITY in config.checks:
        worst = max(r.identity_residual for pt in points for r in pt.result.records)
        ok = worst <= IDENTITY_TOL
        print(
            f"{'[OK]' if ok else '[FAIL]'} identity: max residual {worst:.3e} "
            f"(tolerance {IDENTITY_TOL:g})"
        )
        if not ok:
            return 3
    return 0


def _cmd_certify(ns) -> int:
    config_path = ns.config if ns.config is not None else _env("config")
    file_conf = _load_config_file(config_path) if config_path else {}
    spectrum, spec_echo = _resolve_spectrum(ns, file_conf.get("spectrum"))
    n = _pick(ns.n, "n", int, file_conf.get("n"))
    if n is None:
        raise _CliError("missing required option --n")
    trials = _pick(ns.trials, "trials", int, file_conf.get("trials"), 200)
    seed = _pick(ns.seed, "seed", int, file_conf.get("seed"), 0)
    constants = _resolve_constants(ns, file_conf)
    bins = _pick(ns.bins, "bins", int, None, 20)

    if math.isinf(effective_rank_index(spectrum, n, constants.c0)):
        print(
            "error: effective-rank index is infinite; the certificate threshold "
            "is undefined",
            file=sys.stderr,
        )
        return 2
    try:
        study = certificate_study(spectrum, n, constants.c0, trials, seed, bins=bins)
    except ValueError as exc:
        raise _CliError(str(exc))

    fmt = _pick_format(ns)
    out = _pick(ns.out, "out", str)
    if out:
        base = _out_base(out)
        if fmt in ("json", "both"):
            payload = {
                "schema": 1,
                "spectrum": spec_echo,
                "n": n,
                "c0": constants.c0,
                "trials": trials,
                "seed": seed,
                "k_star": study.k_star,
                "r_kstar": study.r_kstar,
                "threshold": study.threshold,
                "pass_rate": study.pass_rate,
                "hist_edges": list(study.hist_edges),
                "hist_counts": list(study.hist_counts),
                "sigma_min": list(study.sigma_min),
            }
            write_text(base + ".json", to_json(payload))
        if fmt in ("csv", "both"):
            lines = [csv_line(["ratio_lo", "ratio_hi", "count"])]
            for i, count in enumerate(study.hist_counts):
                lines.append(
                    csv_line([study.hist_edges[i], study.hist_edges[i + 1], count])
                )
            write_text(base + ".csv", "".join(lines))

    if not ns.quiet:
        print(f"k_star {study.k_star}")
        print(f"r_kstar {format_float(study.r_kstar)}")
        print(f"threshold {format_float(study.threshold)}")
    print(f"pass_rate {format_float(study.pass_rate)}")
    return 0


def _cmd_spectrum(ns) -> int:
    config_path = ns.config if ns.config is not None else _env("config")
    file_conf = _load_config_file(config_path) if config_path else {}
    spectrum, spec_echo = _resolve_spectrum(ns, file_conf.get("spectrum"))

    fmt = _pick_format(ns)
    out = _pick(ns.out, "out", str)
    if out:
        base = _out_base(out)
        if fmt in ("json", "both"):
            payload = {
                "schema": 1,
                "spectrum": spec_echo,
                "p": spectrum.p,
                "trace": spectrum.trace,
                "values": [float(v) for v in spectrum.values],
            }
            write_text(base + ".json", to_json(payload))
        if fmt in ("csv", "both"):
            # one value per line; loadable back through --spectrum-file
            lines = [format_float(float(v)) + "\n" for v in spectrum.values]
            write_text(base + ".csv", "".join(lines))
    if not ns.quiet:
        print(f"p {spectrum.p}")
        print(f"trace {format_float(spectrum.trace)}")
        print(f"largest {format_float(float(spectrum.values[0]))}")
        print(f"smallest {format_float(float(spectrum.values[-1]))}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_spectrum_flags(sub) -> None:
    sub.add_argument("--flat", nargs="+", metavar=("P", "V"), help="flat spectrum: P eigenvalues, each V (default 1)")
    sub.add_argument("--exp-floor", nargs=3, metavar=("P", "TAU", "EPS"), help="exp(-k/TAU) + EPS, k = 1..P")
    sub.add_argument("--three-level", nargs=5, metavar=("K1", "CN", "P", "E1", "E2"), help="three-level spectrum")
    sub.add_argument("--spectrum-file", metavar="PATH", help="eigenvalues from a text file")
    sub.add_argument("--config", metavar="PATH", help="JSON config file (schema 1)")


def _add_constant_flags(sub) -> None:
    sub.add_argument("--c0", type=float, help="effective-rank constant (default 10)")
    sub.add_argument("--eta", type=float, help="complexity-radius level (default 0.05)")
    sub.add_argument("--gamma", type=float, help="lower-radius budget fraction (default 0.5)")
    sub.add_argument("--c3", type=float, help="noise-floor constant (default 1)")
    sub.add_argument("--c-frac", type=float, help="cn = max(1, floor(c_frac * n)) (default 0.5)")


def _add_output_flags(sub) -> None:
    sub.add_argument("--out", metavar="PATH", help="output base path (known suffixes stripped)")
    sub.add_argument("--format", choices=("json", "csv", "both"), help="output format (default json)")
    sub.add_argument("-q", "--quiet", action="store_true", help="suppress the stdout tables")


def _add_experiment_flags(sub) -> None:
    sub.add_argument("--n", type=int, help="sample count")
    sub.add_argument("--beta-norm", type=float, help="true coefficient norm (default 0)")
    sub.add_argument("--beta-direction", choices=("e1", "random", "top"), help="true coefficient direction (default e1)")
    sub.add_argument("--noise", metavar="SPEC", help="zero | gaussian:S | student:DF:S | worst:S | file:PATH")
    sub.add_argument("--trials", type=int, help="number of Monte Carlo trials (default 100)")
    sub.add_argument("--seed", type=int, help="base seed (default 0)")
    sub.add_argument("--threads", type=int, help="worker thread cap; never affects results")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ridgeless", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("diagnose", help="spectrum diagnostics and bound report")
    _add_spectrum_flags(p)
    _add_constant_flags(p)
    _add_output_flags(p)
    p.add_argument("--n", type=int, help="sample count")
    p.add_argument("--beta-norm", type=float, help="true coefficient norm (default 0)")
    p.add_argument("--xi-norm", type=float, help="noise norm (default 0)")
    p.set_defaults(func=_cmd_diagnose)

    p = subs.add_parser("simulate", help="run one Monte Carlo experiment")
    _add_spectrum_flags(p)
    _add_constant_flags(p)
    _add_experiment_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("scan", help="sweep the SNR grid and tag regimes")
    _add_spectrum_flags(p)
    _add_constant_flags(p)
    _add_experiment_flags(p)
    _add_output_flags(p)
    p.add_argument("--snr-grid", metavar="LO:HI:N", help="log-spaced SNR targets")
    p.set_defaults(func=_cmd_scan)

    p = subs.add_parser("certify", help="smallest-singular-value certificate study")
    _add_spectrum_flags(p)
    _add_constant_flags(p)
    _add_output_flags(p)
    p.add_argument("--n", type=int, help="sample count")
    p.add_argument("--trials", type=int, help="number of designs sampled (default 200)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--bins", type=int, help="histogram bin count (default 20)")
    p.set_defaults(func=_cmd_certify)

    p = subs.add_parser("spectrum", help="build a spectrum and export its values")
    _add_spectrum_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_spectrum)

    return parser


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0 if code is None else 1
    try:
        return ns.func(ns)
    except _CliError as exc:
        for message in exc.messages:
            print(f"error: {message}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
