"""HTTP service over the numerical core. Each endpoint maps a request model to one computation."""
from __future__ import annotations

import json
import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import acceptance, greens, hamiltonian, indicial, kernels, odesolve
from . import symbols as sy
from .errors import CskError, DomainError, ValidationError
from .grid import GridFunction
from .schemas import (BallRequest, ConstantsRequest, CriterionOut, ErrorBody, GreenRequest,
                      HamiltonianRequest, KernelRequest, PolesRequest, Profile, Record,
                      SolveModeRequest, SymbolRequest, Table, VerifyRequest, VerifyResponse)
from .symbols import ProblemParams


class FloatJSONResponse(JSONResponse):
    """JSON with Infinity allowed, so compact-support tails survive the round trip."""

    def render(self, content) -> bytes:
        return json.dumps(content, allow_nan=True, separators=(",", ":")).encode()


app = FastAPI(title="csk", version="0.1.0", default_response_class=FloatJSONResponse)


def _field_of(message: str):
    for name in ("gamma", "kappa", "mode", "lam", "N", "p", "k"):
        if message.startswith(name + " ") or message.startswith(name + "=") or f" {name}=" in message:
            return name
    return None


@app.exception_handler(CskError)
async def _csk_error(request: Request, exc: CskError):
    validation = isinstance(exc, ValidationError)
    body = ErrorBody(kind="validation" if validation else "numerical", error=type(exc).__name__,
                     message=str(exc), field=_field_of(str(exc)) if validation else None)
    return FloatJSONResponse(body.model_dump(), status_code=422 if validation else 500)


@app.exception_handler(RequestValidationError)
async def _request_error(request: Request, exc: RequestValidationError):
    first = exc.errors()[0] if exc.errors() else {}
    loc = [str(x) for x in first.get("loc", ()) if x != "body"]
    body = ErrorBody(kind="validation", error="RequestValidationError",
                     message=str(first.get("msg", "invalid request")), field=".".join(loc) or None)
    return FloatJSONResponse(body.model_dump(), status_code=422)


def _params(req) -> ProblemParams:
    return ProblemParams(req.params.N, req.params.gamma, req.params.p)


def _grid(g) -> np.ndarray:
    return np.linspace(g.t_min, g.t_max, g.n)


def _profile(pr: Profile) -> GridFunction:
    return GridFunction(pr.t_min, pr.t_max, np.asarray(pr.values), pr.decay_plus, pr.decay_minus)


def _rows(*cols) -> list[list[float]]:
    return np.column_stack([np.asarray(c, dtype=float) for c in cols]).tolist()


# ---------------------------------------------------------------- computations

def run_symbol(req: SymbolRequest) -> Table:
    P = _params(req)
    xi = _grid(req.xi)
    th = sy.theta_tilde(P, req.mode, xi) if req.conjugate else sy.theta(P, req.mode, xi)
    return Table(columns=["xi", "re", "im"], rows=_rows(xi, np.real(th), np.imag(th)))


def run_constants(req: ConstantsRequest) -> Record:
    P = _params(req)
    N, g = P.N, P.gamma
    hp = sy.half_params(P, req.mode)
    data = {
        "Lambda": sy.hardy_constant(N, g),
        "A": None,
        "p1": sy.p_one(N, g),
        "d_gamma": sy.d_gamma(g),
        "d_tilde_gamma": sy.d_tilde_gamma(g),
        "Q0": None,
        "A_m": hp.A_m,
        "B_m": hp.B_m,
        "p_range": list(sy.p_range(N, g)),
        "mode": req.mode,
    }
    notes = []
    if P.p is None:
        notes.append("no p given: A and Q0 reported as null")
    else:
        try:
            data["A"] = sy.A_constant(P)
            data["Q0"] = sy.q0(P)
        except DomainError as exc:
            notes.append(f"{exc}: A and Q0 reported as null")
    return Record(data=data, notes=notes)


def run_poles(req: PolesRequest) -> Record:
    table = indicial.find_poles(_params(req), req.mode, req.kappa, req.count, certify=req.certify)
    return Record(data=json.loads(table.to_json()))


def run_green(req: GreenRequest) -> Table:
    P = _params(req)
    if req.window is None:
        series = greens.green_series(P, req.mode, req.kappa, req.t_cut)
    else:
        series = greens.green_shifted(P, req.mode, req.kappa, req.window, req.t_cut)
    t = _grid(req.grid)
    keep = np.abs(t) >= req.t_cut
    notes = [] if np.all(keep) else [f"{int(np.sum(~keep))} nodes with |t| < {req.t_cut} skipped"]
    G = greens.green_eval(series, t[keep])
    meta = {"regime": series.regime.value, "truncation": series.truncation, "window": series.window}
    return Table(columns=["t", "G"], rows=_rows(t[keep], G), meta=meta, notes=notes)


def run_kernel(req: KernelRequest) -> Table:
    P = _params(req)
    spec = kernels.KernelSpec.for_mode(P, req.mode)
    t = _grid(req.grid)
    keep = t != 0
    notes = [] if np.all(keep) else ["node t = 0 skipped (kernel singular)"]
    K = spec(t[keep])
    return Table(columns=["t", "K"], rows=_rows(t[keep], K),
                 meta={"form": spec.form.value, "decay_rate": spec.decay_rate}, notes=notes)


def run_solve_mode(req: SolveModeRequest) -> Table:
    P = _params(req)
    h = _profile(req.h)
    if req.window is None:
        series = greens.green_series(P, req.mode, req.kappa)
    else:
        series = greens.green_shifted(P, req.mode, req.kappa, req.window)
    w = greens.solve_mode(series, h)
    meta = {"decay_plus": w.decay_plus, "decay_minus": w.decay_minus, "regime": series.regime.value}
    return Table(columns=["t", "w"], rows=_rows(w.t, w.values), meta=meta)


def run_ball(req: BallRequest) -> Table:
    P = _params(req)
    sol = odesolve.picard_ball(P, req.lam, req.n_r, req.n_ang, req.tol, req.max_iter)
    rep = odesolve.uniform_bound_check(sol)
    meta = {
        "iterations": sol.iterations, "sup_norm": sol.sup_norm, "defect": sol.defect,
        "bound": {"exponent": rep.exponent, "C0": rep.C0, "local_exponent": rep.local_exponent,
                  "holds": rep.holds},
    }
    return Table(columns=["r", "w"], rows=_rows(sol.r, sol.w), meta=meta)


def run_hamiltonian(req: HamiltonianRequest) -> Table:
    P = _params(req)
    v = _profile(req.v)
    field = hamiltonian.extension_field(P, v, req.n_tau, req.levels)
    H = hamiltonian.hamiltonian_trace(P, field, v)
    j = int(np.argmin(field.rho))
    diag = {
        "n_tau": req.n_tau, "levels": req.levels, "rho_nodes": int(field.rho.size),
        "smallest_rho": float(field.rho[j]),
        "dirichlet_error": float(np.max(np.abs(field.V[j] - v.values))),
        "rho_star_0": float(field.rho_star.max()),
        "dH_dt_identity": hamiltonian.hamiltonian_derivative(P, field).tolist(),
    }
    if req.check_quadrature:
        diag["doubling_change"] = hamiltonian.quadrature_check(P, v, req.n_tau)
    meta = {"decay_plus": v.decay_plus, "decay_minus": v.decay_minus, "diagnostics": diag}
    return Table(columns=["t", "H"], rows=_rows(H.t, H.values), meta=meta)


def run_verify(req: VerifyRequest) -> VerifyResponse:
    results = acceptance.run_suite(req.only)
    out = [CriterionOut(number=r.number, name=r.name, passed=r.passed, detail=r.detail,
                        seconds=r.seconds) for r in results]
    return VerifyResponse(results=out, all_passed=all(r.passed for r in results))


# ---------------------------------------------------------------- routes

@app.get("/v1/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/v1/symbol", response_model=Table)
def symbol(req: SymbolRequest):
    return run_symbol(req)


@app.post("/v1/constants", response_model=Record)
def constants(req: ConstantsRequest):
    return run_constants(req)


@app.post("/v1/poles", response_model=Record)
def poles(req: PolesRequest):
    return run_poles(req)


@app.post("/v1/green", response_model=Table)
def green(req: GreenRequest):
    return run_green(req)


@app.post("/v1/kernel", response_model=Table)
def kernel(req: KernelRequest):
    return run_kernel(req)


@app.post("/v1/solve-mode", response_model=Table)
def solve_mode(req: SolveModeRequest):
    return run_solve_mode(req)


@app.post("/v1/ball", response_model=Table)
def ball(req: BallRequest):
    return run_ball(req)


@app.post("/v1/hamiltonian", response_model=Table)
def hamiltonian_endpoint(req: HamiltonianRequest):
    return run_hamiltonian(req)


@app.post("/v1/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest):
    return run_verify(req)


def serve(host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn
    uvicorn.run(app, host=host, port=port)
