"""Command-line client. Builds a request, sends it to the service and writes the result.

Without --server the service runs in-process. Exit codes: 0 success, 2 invalid
input or configuration, 3 numerical failure (or a failed acceptance criterion).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

# fields that only steer I/O and are left out of the embedded config
_IO_KEYS = {"out", "manifest", "diagnostics", "server", "threads", "config", "format", "command", "input"}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- argument parsing

def _common(sp: argparse.ArgumentParser, p=True, mode=True, kappa=False):
    sp.add_argument("--N", type=int, help="dimension")
    sp.add_argument("--gamma", type=float, help="fractional order in (0, 1)")
    if p:
        sp.add_argument("--p", type=float, help="exponent")
    if mode:
        sp.add_argument("--mode", type=int, help="spherical-harmonic degree (default 0)")
    if kappa:
        sp.add_argument("--kappa", type=float, help="spectral shift (default 0)")
    sp.add_argument("--config", help="key=value file; flags override its entries")
    sp.add_argument("--out", help="output path (stdout when omitted)")
    sp.add_argument("--format", choices=["csv", "json"], help="output format")
    sp.add_argument("--threads", type=int, help="cap on BLAS/OpenMP threads (default: all cores)")
    sp.add_argument("--server", help="base URL of a running service; in-process when omitted")


def _grid_args(sp, lo, hi, n, prefix="t"):
    sp.add_argument(f"--{prefix}-min", type=float, default=None, help=f"first node (default {lo})")
    sp.add_argument(f"--{prefix}-max", type=float, default=None, help=f"last node (default {hi})")
    sp.add_argument("--n", type=int, default=None, help=f"number of nodes (default {n})")


DEFAULTS = {
    "symbol": {"mode": 0, "xi_min": 0.0, "xi_max": 10.0, "n": 101, "conjugate": False, "format": "csv"},
    "constants": {"mode": 0, "format": "json"},
    "poles": {"mode": 0, "kappa": 0.0, "count": 10, "no_certify": False, "format": "json"},
    "green": {"mode": 0, "kappa": 0.0, "t_min": 0.05, "t_max": 5.0, "n": 100, "t_cut": 0.05,
              "format": "csv"},
    "kernel": {"mode": 0, "t_min": 0.01, "t_max": 5.0, "n": 100, "format": "csv"},
    "solve-mode": {"mode": 0, "kappa": 0.0, "format": "csv"},
    "ball": {"n_r": 48, "n_ang": 24, "tol": 1e-8, "max_iter": 500, "format": "csv"},
    "hamiltonian": {"n_tau": 8, "levels": 30, "check_quadrature": False, "format": "csv"},
    "verify": {"suite": "acceptance", "format": "csv"},
    "serve": {"host": "127.0.0.1", "port": 8000},
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csk", description="Cylinder symbols, Green's functions, kernels and singular solutions.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("symbol", help="table of Theta_m(xi) or the conjugate symbol")
    _common(sp)
    _grid_args(sp, 0.0, 10.0, 101, "xi")
    sp.add_argument("--conjugate", action="store_true", default=None, help="evaluate Theta_m(xi - i Q0)")

    sp = sub.add_parser("constants", help="Lambda, A, p1, d_gamma, Q0, A_m, B_m")
    _common(sp)

    sp = sub.add_parser("poles", help="zeros of Theta_m - kappa as JSON")
    _common(sp, kappa=True)
    sp.add_argument("--count", type=int)
    sp.add_argument("--no-certify", action="store_true", default=None)

    sp = sub.add_parser("green", help="Green's function G_m(t) from the residue series")
    _common(sp, kappa=True)
    _grid_args(sp, 0.05, 5.0, 100)
    sp.add_argument("--t-cut", type=float, help="smallest |t| covered by the series (default 0.05)")
    sp.add_argument("--window", type=int, help="contour shift index J")

    sp = sub.add_parser("kernel", help="convolution kernel K_m(t)")
    _common(sp)
    _grid_args(sp, 0.01, 5.0, 100)

    sp = sub.add_parser("solve-mode", help="solve (P_m - kappa) w = h for a profile file h")
    _common(sp, kappa=True)
    sp.add_argument("--input", help="two-column CSV (t, h) with decay header")
    sp.add_argument("--window", type=int, help="contour shift index J")

    sp = sub.add_parser("ball", help="minimal solution of the ball problem")
    _common(sp, mode=False)
    sp.add_argument("--lam", type=float, help="lambda > 0")
    sp.add_argument("--n-r", type=int)
    sp.add_argument("--n-ang", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")

    sp = sub.add_parser("hamiltonian", help="conformal Hamiltonian H(t) of a profile file v")
    _common(sp, mode=False)
    sp.add_argument("--input", help="two-column CSV (t, v) with decay header")
    sp.add_argument("--n-tau", type=int)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--check-quadrature", action="store_true", default=None)
    sp.add_argument("--diagnostics", help="diagnostics path (default <out>.diagnostics.json)")

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--suite", choices=["acceptance"])
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.add_argument("--config")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--threads", type=int)
    sp.add_argument("--server")
    sp.add_argument("--out")

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host")
    sp.add_argument("--port", type=int)
    sp.add_argument("--config")
    sp.add_argument("--threads", type=int)
    return ap


def read_config(path: str) -> dict:
    """Plain key=value lines; '#' starts a comment; keys may use dashes or underscores."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"config: cannot read {path}: {exc}")
    out = {}
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"config {path}:{i}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return out


def _convert(parser: argparse.ArgumentParser, command: str, key: str, raw: str):
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[command]
    for act in sp._actions:
        if act.dest == key:
            if act.nargs == 0:  # store_true
                low = raw.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise CliError(f"config: {key} must be a boolean")
                return low in ("true", "1", "yes")
            try:
                return act.type(raw) if act.type else raw
            except ValueError:
                raise CliError(f"config: invalid value {raw!r} for {key}")
    raise CliError(f"config: unknown key {key!r} for {command}")


def resolve(parser, args) -> list[dict]:
    """Merge flags over config over defaults; a comma list in the config gives a sweep."""
    cmd = args.command
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    base = dict(DEFAULTS.get(cmd, {}))
    sweep_key, sweep_vals = None, None
    for k, raw in cfg.items():
        if getattr(args, k, None) is not None:
            continue
        if "," in raw and k != "only":
            if sweep_key is not None:
                raise CliError("config: only one key may hold a comma-separated sweep")
            sweep_key = k
            sweep_vals = [_convert(parser, cmd, k, r.strip()) for r in raw.split(",")]
            continue
        base[k] = _convert(parser, cmd, k, raw)
    for k, v in vars(args).items():
        if v is not None:
            base[k] = v
    if sweep_key is None:
        return [base]
    return [{**base, sweep_key: v, "_sweep": (sweep_key, v)} for v in sweep_vals]


# ---------------------------------------------------------------- requests

def _need(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise CliError(f"missing required field {k!r}")


def _params(cfg) -> dict:
    _need(cfg, "N", "gamma")
    return {"N": cfg["N"], "gamma": cfg["gamma"], "p": cfg.get("p")}


def _read_profile(path) -> tuple[dict, str]:
    from .grid import GridFunction
    from .errors import CskError
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"input: cannot read {path}: {exc}")
    try:
        g = GridFunction.from_csv(path)
    except CskError as exc:
        raise CliError(f"input: {exc}")
    prof = {"t_min": g.t_min, "t_max": g.t_max, "values": g.values.tolist(),
            "decay_plus": g.decay_plus, "decay_minus": g.decay_minus}
    return prof, hashlib.sha256(raw).hexdigest()


def build_request(cfg) -> tuple[str, dict, dict]:
    """Endpoint, JSON body and extra config entries for the embedded header."""
    cmd = cfg["command"]
    extra = {}
    if cmd == "symbol":
        body = {"params": _params(cfg), "mode": cfg["mode"], "conjugate": bool(cfg["conjugate"]),
                "xi": {"t_min": cfg["xi_min"], "t_max": cfg["xi_max"], "n": cfg["n"]}}
    elif cmd == "constants":
        body = {"params": _params(cfg), "mode": cfg["mode"]}
    elif cmd == "poles":
        body = {"params": _params(cfg), "mode": cfg["mode"], "kappa": cfg["kappa"],
                "count": cfg["count"], "certify": not cfg["no_certify"]}
    elif cmd == "green":
        body = {"params": _params(cfg), "mode": cfg["mode"], "kappa": cfg["kappa"],
                "grid": {"t_min": cfg["t_min"], "t_max": cfg["t_max"], "n": cfg["n"]},
                "t_cut": cfg["t_cut"], "window": cfg.get("window")}
    elif cmd == "kernel":
        body = {"params": _params(cfg), "mode": cfg["mode"],
                "grid": {"t_min": cfg["t_min"], "t_max": cfg["t_max"], "n": cfg["n"]}}
    elif cmd == "solve-mode":
        _need(cfg, "input")
        prof, digest = _read_profile(cfg["input"])
        extra["input_sha256"] = digest
        body = {"params": _params(cfg), "mode": cfg["mode"], "kappa": cfg["kappa"],
                "window": cfg.get("window"), "h": prof}
    elif cmd == "ball":
        _need(cfg, "lam")
        body = {"params": _params(cfg), "lam": cfg["lam"], "n_r": cfg["n_r"], "n_ang": cfg["n_ang"],
                "tol": cfg["tol"], "max_iter": cfg["max_iter"]}
    elif cmd == "hamiltonian":
        _need(cfg, "input")
        prof, digest = _read_profile(cfg["input"])
        extra["input_sha256"] = digest
        body = {"params": _params(cfg), "v": prof, "n_tau": cfg["n_tau"], "levels": cfg["levels"],
                "check_quadrature": bool(cfg["check_quadrature"])}
    elif cmd == "verify":
        only = cfg.get("only")
        if isinstance(only, str):
            try:
                only = [int(x) for x in only.split(",") if x.strip()]
            except ValueError:
                raise CliError("only: expected comma-separated integers")
        body = {"suite": cfg["suite"], "only": only}
    else:
        raise CliError(f"unknown command {cmd}")
    return "/v1/" + cmd, body, extra


# ---------------------------------------------------------------- transport

def _client(server):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app, raise_server_exceptions=False)


def call(client, endpoint: str, body: dict) -> dict:
    payload = json.dumps(body, allow_nan=True)
    resp = client.post(endpoint, content=payload, headers={"content-type": "application/json"})
    try:
        data = json.loads(resp.text)
    except ValueError:
        raise CliError(f"service returned status {resp.status_code} without a JSON body", EXIT_NUMERICAL)
    if resp.status_code == 200:
        return data
    field = data.get("field")
    where = f" [field {field}]" if field else ""
    msg = f"{data.get('error', 'error')}{where}: {data.get('message', resp.text)}"
    if resp.status_code == 422:
        raise CliError(msg, EXIT_INVALID)
    raise CliError(msg, EXIT_NUMERICAL)


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return str(x).replace(" ", "_")


def embedded_config(cfg: dict, extra: dict) -> dict:
    out = {k: v for k, v in cfg.items() if k not in _IO_KEYS and not k.startswith("_") and v is not None}
    out.update(extra)
    return dict(sorted(out.items()))


def render_csv(command: str, config: dict, table: dict) -> str:
    lines = [",".join(table["columns"])]
    lines += [",".join(f"{x:.17g}" for x in row) for row in table["rows"]]
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    tokens = [f"command={command}"] + [f"{k}={_fmt(v)}" for k, v in config.items()]
    meta = table.get("meta", {})
    for k in ("decay_plus", "decay_minus"):
        if k in meta:
            tokens.append(f"{k}={_fmt(float(meta[k]))}")
    tokens.append(f"sha256={digest}")
    return "# csk " + " ".join(tokens) + "\n" + body


def render_json(command: str, config: dict, data: dict) -> str:
    core = json.dumps(data, sort_keys=True, allow_nan=True)
    doc = {"command": command, "config": config, "data": data,
           "sha256": hashlib.sha256(core.encode()).hexdigest()}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _suffixed(path: str, cfg: dict) -> str:
    if "_sweep" not in cfg:
        return path
    k, v = cfg["_sweep"]
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{k}={_fmt(v)}{p.suffix}"))


def emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def run_one(client, cfg: dict) -> int:
    cmd = cfg["command"]
    endpoint, body, extra = build_request(cfg)
    data = call(client, endpoint, body)
    config = embedded_config(cfg, extra)
    out = _suffixed(cfg["out"], cfg) if cfg.get("out") else None
    for note in data.get("notes", []):
        print(f"csk {cmd}: note: {note}", file=sys.stderr)

    if cmd == "verify":
        results = data["results"]
        if cfg["format"] == "json":
            emit(render_json(cmd, config, data), out)
        else:
            lines = []
            for r in results:
                flag = "PASS" if r["passed"] else "FAIL"
                lines.append(f"[{flag}] {r['number']:2d} {r['name']}: {r['detail']}")
            passed = sum(r["passed"] for r in results)
            lines.append(f"{passed}/{len(results)} criteria passed")
            emit("\n".join(lines) + "\n", out)
        return EXIT_OK if data["all_passed"] else EXIT_NUMERICAL

    if "columns" not in data:  # records: constants, poles
        payload = data["data"]
        if cfg["format"] == "csv":
            rows = "\n".join(f"{k},{_fmt(v) if not isinstance(v, (list, dict)) else json.dumps(v)}"
                             for k, v in payload.items())
            digest = hashlib.sha256(rows.encode()).hexdigest()
            head = "# csk " + " ".join([f"command={cmd}"] + [f"{k}={_fmt(v)}" for k, v in config.items()]
                                       + [f"sha256={digest}"])
            emit(head + "\nkey,value\n" + rows + "\n", out)
        else:
            emit(render_json(cmd, config, payload), out)
        return EXIT_OK

    if cfg["format"] == "json":
        emit(render_json(cmd, config, data), out)
    else:
        emit(render_csv(cmd, config, data), out)
    side = {"ball": "manifest", "hamiltonian": "diagnostics"}.get(cmd)
    if side:
        path = cfg.get(side) or (f"{out}.{side}.json" if out else None)
        if path:
            Path(_suffixed(path, cfg) if cfg.get(side) else path).write_text(
                render_json(cmd, config, data.get("meta", {})))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("csk: threads must be at least 1", file=sys.stderr)
            return EXIT_INVALID
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
    try:
        cfgs = resolve(parser, args)
        if args.command == "serve":
            from .service import serve
            serve(cfgs[0]["host"], cfgs[0]["port"])
            return EXIT_OK
        code = EXIT_OK
        with _client(cfgs[0].get("server")) as client:
            for cfg in cfgs:
                code = max(code, run_one(client, cfg))
        return code
    except CliError as exc:
        print(f"csk {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
