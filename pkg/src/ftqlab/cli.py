"""Command-line experiment runner.

Exit codes: 0 every acceptance predicate of the run passed, 1 some
predicate failed, 2 bad usage or configuration, 3 crash (including I/O).
Outputs carry no timestamps, so a rerun with the same configuration
reproduces them byte for byte.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .rng import resolve_seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CRASH = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _int_list(s: str) -> list[int]:
    return [int(v) for v in str(s).split(",") if v.strip()]


def _float_list(s: str) -> list[float]:
    return [float(v) for v in str(s).split(",") if v.strip()]


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


# key -> (parser, default, help); default None means required
SCHEMA: dict[str, dict[str, tuple]] = {
    "rep-check": {
        "code": (str, "all", "shipped code id, or 'all' for every golden record"),
    },
    "noise-bounds": {
        "n": (_int_list, "50,100,200,400", "comma-separated block sizes"),
        "delta": (_float_list, "0.02,0.05,0.1", "comma-separated noise rates"),
    },
    "toric-comm": {
        "L": (_int_list, "5,7", "comma-separated lattice sizes"),
        "nu": (float, "0.001", "channel noise rate"),
        "delta_prime": (float, "0.001", "encoder/decoder noise rate"),
        "trials": (int, "100000", "trials per lattice size (>= 100)"),
        "sampler": (str, "iid", "iid or cluster"),
        "spread": (float, "0.0", "cluster growth probability"),
    },
    "rec-sim": {
        "code": (str, "surface_d5", "shipped base code"),
        "gate": (str, "I", "Rec gate, or 'interface' for the encode/decode round trip"),
        "level": (int, "1", "1 or 2"),
        "sweep": (str, "single-fault-exhaustive", "single-fault-exhaustive or monte-carlo"),
        "delta": (float, "0.0001", "fault rate for monte-carlo"),
        "trials": (int, "10000", "monte-carlo shots"),
    },
    "teleport-verify": {
        "code": (str, "toric_L3", "shipped code"),
        "gate_set": (str, "default", "paulis, cnot, default (paulis + CNOTs), clifford, or one gate name"),
        "trials": (int, "4", "random stabilizer inputs per gate, on top of the basis inputs"),
        "blocks": (int, "1", "data blocks per group (2 = cross-block gates)"),
    },
    "single-shot": {
        "code": (str, "toric_L3", "shipped code (n <= 20)"),
        "delta": (_float_list, "0.005", "comma-separated circuit noise rates"),
        "rounds": (int, "10", "rounds per trial"),
        "trials": (int, "10000", "trials per noise rate"),
        "min_survival": (float, "0.95", "acceptance: survival after the last round"),
    },
}
GLOBAL_KEYS = {"seed": (int, None, "master seed (falls back to FTQLAB_SEED)"),
               "out": (str, "results", "output directory"),
               "threads": (int, "1", "parallelism hint")}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    seed: int
    out: Path
    threads: int = 1
    sources: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "threads": self.threads,
                "params": {k: self.params[k] for k in sorted(self.params)}}


def _norm(key: str) -> str:
    return key.strip().replace("-", "_")


def _convert(key: str, parser, raw):
    try:
        return parser(raw)
    except (TypeError, ValueError):
        name = getattr(parser, "__name__", "value").lstrip("_")
        raise ConfigError(f"{key}: cannot read {raw!r} as {name}") from None


def parse_config(subcommand: str, flags: dict, config_file: str | None = None) -> RunConfig:
    """Defaults, then the config file ([global] and [<subcommand>] sections), then flags."""
    if subcommand not in SCHEMA:
        raise ConfigError(f"subcommand: unknown {subcommand!r}")
    schema = SCHEMA[subcommand]
    raw = {k: v[1] for k, v in schema.items()}
    graw = {k: v[1] for k, v in GLOBAL_KEYS.items()}
    sources = {k: "default" for k in list(raw) + list(graw)}
    if config_file:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            with open(config_file, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as e:
            raise ConfigError(f"config: cannot read {config_file}: {e.strerror}") from None
        except configparser.Error as e:
            raise ConfigError(f"config: {e}") from None
        for section in cp.sections():
            if section != "global" and section not in SCHEMA:
                raise ConfigError(f"{section}: unknown config section")
            if section not in ("global", subcommand):
                continue
            for k, v in cp.items(section):
                key = _norm(k)
                if section == "global":
                    if key not in GLOBAL_KEYS:
                        raise ConfigError(f"{key}: unknown key in [global]")
                    graw[key] = v
                    sources[key] = "file"
                else:
                    if key not in schema:
                        raise ConfigError(f"{key}: unknown key for {subcommand}")
                    raw[key] = v
                    sources[key] = "file"
    for k, v in flags.items():
        if v is None:
            continue
        key = _norm(k)
        if key in GLOBAL_KEYS:
            graw[key] = v
        elif key in schema:
            raw[key] = v
        else:
            raise ConfigError(f"{key}: unknown key for {subcommand}")
        sources[key] = "flag"
    params = {}
    for k, (parser, _, _) in schema.items():
        if raw[k] is None:
            raise ConfigError(f"{k}: required")
        params[k] = _convert(k, parser, raw[k])
    seed = resolve_seed(_convert("seed", int, graw["seed"]) if graw["seed"] is not None else None)
    threads = _convert("threads", int, graw["threads"])
    if threads < 1:
        raise ConfigError("threads: must be at least 1")
    return RunConfig(subcommand, params, seed, Path(graw["out"]), threads, sources)


# output --------------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _meta(cfg: RunConfig, passed: bool) -> str:
    return json_text({"config": cfg.resolved(), "version": __version__, "pass": passed})


def _finish(cfg: RunConfig, passed: bool, files: list[Path]) -> int:
    files.append(_write(cfg, f"{cfg.subcommand}.meta.json", _meta(cfg, passed)))
    print(f"{cfg.subcommand}: {'PASS' if passed else 'FAIL'} -> {', '.join(str(f) for f in files)}")
    return EXIT_OK if passed else EXIT_FAIL


# subcommands ------------------------------------------------------------------------------


def run_rep_check(cfg: RunConfig) -> int:
    from .golden import load_cases, run_case

    cases = load_cases()
    if cfg.params["code"] != "all":
        cases = [c for c in cases if c["code_id"] == cfg.params["code"]]
        if not cases:
            raise ConfigError(f"code: no golden records for {cfg.params['code']!r}")
    results = [run_case(c) for c in cases]
    for r in results:
        print(f"  {r['code_id']} {r['channel_kind']}: residual {r['residual']:.3e} {'pass' if r['pass'] else 'FAIL'}")
    passed = all(r["pass"] for r in results)
    report = {"config": cfg.resolved(), "version": __version__, "cases": results, "pass": passed,
              "seed": cfg.seed, "stream_index": -1}
    return _finish(cfg, passed, [_write(cfg, "rep-check.json", json_text(report))])


def run_noise_bounds(cfg: RunConfig) -> int:
    from .noise import adversarial_truncation, tail_sum

    rows = []
    for n in sorted(cfg.params["n"]):
        for d in sorted(cfg.params["delta"]):
            if n < 1 or not 0 < d < 1:
                raise ConfigError(f"n/delta: need n >= 1 and 0 < delta < 1, got n={n}, delta={d}")
            if n * d < 1:
                continue
            t, bound = adversarial_truncation(n, d)
            ts = tail_sum(n, d, t)
            ok = ts <= bound
            rows.append([n, d, t, ts, bound, ok, cfg.seed, -1])
            print(f"  n={n} delta={d}: tail {ts:.3e} <= {bound:.3e} {'pass' if ok else 'FAIL'}")
    if not rows:
        raise ConfigError("n/delta: no grid point with n*delta >= 1")
    text = csv_text(["n", "delta", "t", "tail_sum", "chernoff_bound", "pass", "seed", "stream_index"], rows)
    return _finish(cfg, all(r[5] for r in rows), [_write(cfg, "noise-bounds.csv", text)])


def run_toric_comm(cfg: RunConfig) -> int:
    from .toric import CommExperimentConfig, bound_zeta, estimate_logical_failure, monotone_within_ci

    p = cfg.params
    if p["trials"] < 100:
        raise ConfigError(f"trials: need at least 100, got {p['trials']}")
    if p["sampler"] not in ("iid", "cluster"):
        raise ConfigError(f"sampler: expected iid or cluster, got {p['sampler']!r}")
    rows, ests = [], []
    for L in sorted(p["L"]):
        try:
            c = CommExperimentConfig(L, p["nu"], p["delta_prime"], p["trials"], cfg.seed, p["sampler"], p["spread"])
        except ValueError as e:
            raise ConfigError(f"toric-comm: {e}") from None
        est = estimate_logical_failure(c, threads=cfg.threads)
        ests.append(est)
        zeta = bound_zeta(L, c.alpha_eff, strict=False) if c.in_bound_regime() else math.nan
        ok = not (zeta < 1) or est.ci[1] <= zeta
        rows.append([L, p["nu"], p["delta_prime"], c.alpha_eff, est.trials, est.failures, est.rate, est.ci[0], est.ci[1],
                     zeta, ok, cfg.seed, est.first_stream])
        print(f"  L={L}: rate {est.rate:.3e} CI [{est.ci[0]:.3e}, {est.ci[1]:.3e}] zeta {zeta:.3e} {'pass' if ok else 'FAIL'}")
    mono = monotone_within_ci(ests)
    print(f"  monotone in L within CI: {mono}")
    header = ["L", "nu", "delta_prime", "alpha_eff", "trials", "failures", "rate", "ci_low", "ci_high", "zeta_bound",
              "pass", "seed", "stream_index"]
    return _finish(cfg, mono and all(r[10] for r in rows), [_write(cfg, "toric-comm.csv", csv_text(header, rows))])


def run_rec_sim(cfg: RunConfig) -> int:
    from . import ftscheme as fs
    from .codes import load_code

    p = cfg.params
    try:
        code = load_code(p["code"])
    except (KeyError, FileNotFoundError, ValueError):
        raise ConfigError(f"code: unknown {p['code']!r}") from None
    if p["sweep"] not in ("single-fault-exhaustive", "monte-carlo"):
        raise ConfigError(f"sweep: expected single-fault-exhaustive or monte-carlo, got {p['sweep']!r}")
    if p["level"] not in (1, 2):
        raise ConfigError(f"level: expected 1 or 2, got {p['level']}")
    report: dict = {"config": cfg.resolved(), "version": __version__, "seed": cfg.seed}
    if p["gate"] == "interface":
        if p["level"] != 1 or p["sweep"] != "single-fault-exhaustive":
            raise ConfigError("gate: the interface check is a level-1 single-fault sweep")
        r = fs.sweep_interface_faults(fs.build_round_trip(code))
        report.update(total_paths=r.total_paths, failing_paths=r.failing_paths, failing_level0=r.failing_level0,
                      failing_encoded=r.failing_encoded, vacuous=r.vacuous, noiseless_identity=r.noiseless_identity,
                      failing_by_tag=dict(sorted(r.failing_by_tag.items())), witnesses=r.witnesses, stream_index=-1)
        passed = r.all_pass
    elif p["gate"] not in fs.REC_GATES:
        raise ConfigError(f"gate: expected one of {', '.join(fs.REC_GATES + ('interface',))}, got {p['gate']!r}")
    elif p["level"] == 2:
        if p["sweep"] != "monte-carlo":
            raise ConfigError("level: level-2 Recs are too large for an exhaustive frame sweep; use --sweep monte-carlo")
        tree = fs.build_rec(p["gate"], code, 2)
        pg = fs.rectree_good_probability(tree, p["delta"])
        report.update(level=2, size=tree.size, n_subrecs=tree.n_subrecs, p_good=pg, delta=p["delta"],
                      total_paths=None, good=None, bad=None, correct_given_good=None, witnesses=[], stream_index=-1)
        passed = True
    else:
        rec = fs.build_rec(p["gate"], code, 1)
        if p["sweep"] == "single-fault-exhaustive":
            r = fs.sweep_single_faults(rec)
            report["stream_index"] = -1
        else:
            if p["trials"] < 1:
                raise ConfigError("trials: must be positive")
            r = fs.monte_carlo_rec(rec, p["delta"], p["trials"], cfg.seed)
            report["stream_index"] = 0
        report.update(level=1, **r.as_dict())
        passed = r.correct_given_good == r.good
    print(f"  {p['gate']} level {p['level']} {p['sweep']}: "
          + ", ".join(f"{k}={report[k]}" for k in ("total_paths", "good", "bad", "correct_given_good", "failing_paths",
                                                   "size", "n_subrecs", "p_good")
                      if report.get(k) is not None))
    return _finish(cfg, passed, [_write(cfg, "rec-sim.json", json_text(report))])


def run_teleport_verify(cfg: RunConfig) -> int:
    from .codes import load_code
    from .rng import stream
    from .teleport import AncillaSpec, gate_set, verify_logical_action

    p = cfg.params
    try:
        code = load_code(p["code"])
    except (KeyError, FileNotFoundError, ValueError):
        raise ConfigError(f"code: unknown {p['code']!r}") from None
    if p["blocks"] not in (1, 2):
        raise ConfigError("blocks: expected 1 or 2")
    if p["trials"] < 0:
        raise ConfigError("trials: must be nonnegative")
    try:
        gates = gate_set(p["gate_set"], p["blocks"] * code.k)
    except ValueError as e:
        raise ConfigError(f"gate_set: {e}") from None
    out = {}
    for i, (name, u) in enumerate(sorted(gates.items())):
        r = verify_logical_action(AncillaSpec(code, u, p["blocks"]), p["trials"], stream(cfg.seed, i))
        out[name] = dict(r.as_dict(), stream_index=i)
        print(f"  {name}: {'pass' if r.passed else 'FAIL'} ({r.runs} runs)")
    passed = all(v["pass"] for v in out.values())
    report = {"config": cfg.resolved(), "version": __version__, "seed": cfg.seed, "gates": out, "pass": passed}
    return _finish(cfg, passed, [_write(cfg, "teleport-verify.json", json_text(report))])


def run_single_shot(cfg: RunConfig) -> int:
    from .codes import load_code
    from .singleshot import REDUCED_TABLE_MAX_N, memory_experiment

    p = cfg.params
    try:
        code = load_code(p["code"])
    except (KeyError, FileNotFoundError, ValueError):
        raise ConfigError(f"code: unknown {p['code']!r}") from None
    if code.n > REDUCED_TABLE_MAX_N:
        raise ConfigError(f"code: single-shot runs need n <= {REDUCED_TABLE_MAX_N}")
    if p["rounds"] < 1 or p["trials"] < 1:
        raise ConfigError("rounds/trials: must be positive")
    rows = []
    passed = True
    for d in sorted(p["delta"]):
        if not 0 <= d < 1:
            raise ConfigError(f"delta: must lie in [0, 1), got {d}")
        curve = memory_experiment(code, d, p["rounds"], p["trials"], cfg.seed)
        for r, s, lo, hi, w in curve.rows():
            rows.append([d, r, s, lo, hi, w, cfg.seed, 0])
        last = float(curve.survival[-1])
        ok = last >= p["min_survival"]
        passed &= ok
        print(f"  delta={d}: survival after {p['rounds']} rounds {last:.4f} (>= {p['min_survival']}: {ok})")
    header = ["delta", "round", "survival", "ci_low", "ci_high", "mean_reduced_weight", "seed", "stream_index"]
    return _finish(cfg, passed, [_write(cfg, "single-shot.csv", csv_text(header, rows))])


RUNNERS = {
    "rep-check": run_rep_check,
    "noise-bounds": run_noise_bounds,
    "toric-comm": run_toric_comm,
    "rec-sim": run_rec_sim,
    "teleport-verify": run_teleport_verify,
    "single-shot": run_single_shot,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for k, (_, _, h) in GLOBAL_KEYS.items():
        common.add_argument(f"--{k}", default=argparse.SUPPRESS, help=h)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI file with [global] and per-subcommand sections")
    ap = argparse.ArgumentParser(prog="ftqlab", description="Fault-tolerance experiments", parents=[common])
    ap.add_argument("--version", action="version", version=f"ftqlab {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMA.items():
        sp = sub.add_parser(name, parents=[common], help=f"run {name}")
        for k, (_, default, h) in schema.items():
            flag = "--" + k.replace("_", "-")
            sp.add_argument(flag, dest=k, default=argparse.SUPPRESS, help=f"{h} (default {default})")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    args = vars(ns)
    sub = args.pop("subcommand")
    config_file = args.pop("config", None)
    try:
        cfg = parse_config(sub, args, config_file)
        return RUNNERS[sub](cfg)
    except ConfigError as e:
        print(f"ftqlab {sub}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001 - crashes get their own exit code
        traceback.print_exc()
        return EXIT_CRASH


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
