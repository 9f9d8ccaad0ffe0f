"""Command-line front end.

Exit codes: 0 success, 2 usage or parameter error, 3 unphysical covariance
matrix, 4 numerical non-convergence. JSON output carries 17 significant
digits; human-readable tables carry 9.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import metadata

import numpy as np

from . import channels, nonlocality as nl, protocols, separability as sep
from .errors import CVLabError, ConvergenceError, PhysicalityError
from .states import (
    Coherent,
    DisplacedSqueezedThermal,
    Thermal,
    TriT,
    TriV3,
    TWB,
    TwoModeSqueezedThermal,
    Vacuum,
    build,
    mean_photon_number,
    purity,
    state_from_dict,
    state_to_dict,
    von_neumann_entropy,
)

EXIT_OK, EXIT_USAGE, EXIT_PHYSICALITY, EXIT_CONVERGENCE = 0, 2, 3, 4


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ----------------------------------------------------------------------------
# Formatting

def _json_text(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_text(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return json.dumps("inf" if x > 0 else "-inf")
        if math.isnan(x):
            return json.dumps("nan")
        return format(x, ".17g")
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, dict):
        return "{" + ", ".join(f"{k}: {_fmt(v)}" for k, v in x.items()) + "}"
    return str(x)


def _table(outputs: dict) -> str:
    width = max((len(k) for k in outputs), default=0)
    return "\n".join(f"{k.ljust(width)}  {_fmt(v)}" for k, v in outputs.items())


def _parse_grid(text: str, log: bool | None = None) -> tuple[str, np.ndarray]:
    """Parse ``name=lo:hi:n``; ``j`` grids are logarithmic, others linear."""
    try:
        name, rng = text.split("=", 1)
        lo, hi, n = rng.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise CVLabError(f"grid must look like name=lo:hi:n, got {text!r}") from exc
    if n < 1:
        raise CVLabError("grid needs at least one point")
    name = name.strip().lower()
    use_log = (name == "j") if log is None else log
    return name, (nl.log_grid(lo, hi, n) if use_log else np.linspace(lo, hi, n))


# ----------------------------------------------------------------------------
# Commands

def _state_from_args(a) -> object:
    kind = a.kind
    if kind == "vacuum":
        return build(Vacuum(a.modes))
    if kind == "thermal":
        return build(Thermal([a.n] * a.modes))
    if kind == "coherent":
        return build(Coherent([complex(a.alpha_re, a.alpha_im)] * a.modes))
    if kind == "squeezed":
        return build(DisplacedSqueezedThermal(complex(a.alpha_re, a.alpha_im), a.r, a.phi, a.n))
    if kind == "twb":
        return build(TWB(a.r))
    if kind == "tmst":
        return build(TwoModeSqueezedThermal(a.r, a.n1, a.n2))
    if kind == "v3":
        return build(TriV3(a.r))
    if kind == "t":
        return build(TriT(a.n2, a.n3, a.phi2, a.phi3, a.n))
    raise CVLabError(f"unknown state kind {kind!r}")


def cmd_state(a) -> dict:
    st = _state_from_args(a)
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(_json_text(state_to_dict(st)) + "\n")
    return {
        "purity": purity(st),
        "entropy": von_neumann_entropy(st),
        "photon_number": mean_photon_number(st),
        "symplectic_eigenvalues": [float(x) for x in st.symplectic_eigenvalues()],
        **({"file": a.out} if a.out else {}),
    }


def _read_state(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CVLabError(f"cannot read state file {path!r}: {exc}") from exc
    return state_from_dict(data)


def _modes(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(t) for t in text.replace("|", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise CVLabError(f"partition must list 0-based mode indices, got {text!r}") from exc


def cmd_separability(a) -> dict:
    st = _read_state(a.file)
    party_b = _modes(a.partition)
    out = {"n_modes": st.n_modes}
    ppt = sep.ppt_check(st, party_b)
    out["ppt"] = ppt.to_dict()
    out["log_negativity"] = sep.log_negativity(st, party_b)
    party_a = [k for k in range(st.n_modes) if k not in (party_b or [st.n_modes - 1])]
    out["giedke"] = sep.giedke_iterate(st, party_a).to_dict()
    if st.n_modes == 2:
        out["simon"] = sep.simon_invariant_check(st)
        out["duan"] = sep.duan_check(st)
    if st.n_modes == 3:
        cls = sep.tripartite_classify(st)
        out["tripartite"] = {"label": cls.label, "separable_modes": list(cls.separable_modes),
                             "pt_eigenvalues": list(cls.pt_eigenvalues)}
    out["separable"] = bool(ppt.separable) if st.n_modes == 2 or (party_b and len(party_b) == 1) \
        else out["giedke"]["separable"]
    return out


def _channel_args(a):
    bath = channels.BathPhysicalParams(a.nth, a.ns)
    return bath


def cmd_evolve(a) -> dict:
    bath = _channel_args(a)
    st = _read_state(a.file) if a.file else build(TWB(a.r))
    spec = channels.ChannelSpec.uniform(st.n_modes, a.gamma, bath.N, bath.M)
    party_b = _modes(a.partition) or [st.n_modes - 1]
    times = np.linspace(0.0, a.t_max, a.steps)
    lines = ["t,purity,min_pt_eig,log_negativity"]
    for t in times:
        ev = channels.evolve(st, spec, float(t))
        d = channels.min_pt_eigenvalue(ev, party_b)
        lines.append(",".join(format(float(v), ".17g") for v in
                              (t, purity(ev), d, sep.log_negativity(ev, party_b))))
    _emit_csv("\n".join(lines) + "\n", a.out)
    return {"rows": len(times), **({"file": a.out} if a.out else {})}


def _time_value(t):
    return float(t) if not isinstance(t, channels.NeverSeparable) else math.inf


def cmd_threshold(a) -> dict:
    if a.state != "twb":
        raise CVLabError("closed-form thresholds are available for the twin beam only")
    t0 = channels.twb_separability_time_unsqueezed(a.r, a.gamma, a.nth)
    ts = channels.twb_separability_time(a.r, a.gamma, a.nth, a.ns)
    out = {"t0": _time_value(t0), "t_s": _time_value(ts)}
    if a.numeric:
        bath = channels.BathPhysicalParams(a.nth, a.ns)
        spec = channels.ChannelSpec.uniform(2, a.gamma, bath.N, bath.M)
        tn = channels.separability_time_numeric(build(TWB(a.r)), spec, [1], a.t_max)
        if tn is None:
            raise ConvergenceError("no separability crossing before t_max")
        out["t_numeric"] = tn
    return out


def cmd_teleport(a) -> dict:
    if a.sweep:
        name, grid = _parse_grid(a.sweep, log=False)
        if name not in ("lambda", "t"):
            raise CVLabError("teleport sweeps run over lambda or t")
        lines = [f"{name},fidelity"]
        for v in grid:
            lam = v if name == "lambda" else a.lam
            t = v if name == "t" else a.t
            lines.append(f"{format(float(v), '.17g')},{format(_teleport_value(a, lam, t), '.17g')}")
        _emit_csv("\n".join(lines) + "\n", a.out)
        return {"rows": len(grid)}
    return {"fidelity": _teleport_value(a, a.lam, a.t)}


def _teleport_value(a, lam: float, t: float) -> float:
    if a.tau_eff is not None:
        return protocols.ips_teleport_fidelity(lam, a.tau_eff)
    if t == 0 and a.nth == 0 and a.ns == 0 and a.eta == 1:
        return protocols.teleport_fidelity_ideal(lam)
    setup = protocols.TeleportationSetup(protocols.r_from_lambda(lam), a.gamma, a.nth, a.ns, a.eta)
    return protocols.teleport_fidelity_noisy(setup, t)[0]


def cmd_clone(a) -> dict:
    if a.N is not None:
        return {"fidelity": protocols.teleclone_symmetric_fidelity(a.N)}
    rep = protocols.teleclone_report(a.N2, a.N3)
    return {"fidelities": list(rep.fidelities), "symmetric": rep.symmetric}


def _bell_state_fn(a):
    st = a.state
    if st == "twb":
        return lambda r: build(TWB(r)), "r", a.r
    if st == "ips":
        return lambda lam: nl.ips_wigner(lam, a.tau_eff), "lambda", a.lam
    if st == "twba":
        return (lambda n2: nl.twba_wigner(n2 + a.n3_scale / n2, n2, a.n3_scale / n2, a.eta)), "N2", a.n2
    raise CVLabError(f"state {st!r} does not support this test")


def cmd_bell(a) -> dict:
    test = a.test
    rows: list = []
    if test == "dp":
        fn, pname, pval = _bell_state_fn(a)
        params = _parse_grid(a.param_sweep, log=False)[1] if a.param_sweep else [pval]
        js = _parse_grid(a.sweep)[1] if a.sweep else [a.J]
        res = nl.bell2_dp_sweep(fn, a.setting, params, js, a.state, refine=False, rows=rows)
        out = {"bell_value": res.value, "violation": res.violation, pname: res.params["param"],
               "J": res.params["J"], "setting": a.setting}
    elif test == "ps":
        if a.state == "twb":
            f = nl.f_twb(a.r)
            out = {"f": f, "bell_value": nl.bell2_ps(f)}
        elif a.state == "twba":
            f = nl.f_twba(a.n2, a.n3, a.eta)
            out = {"f": f, "bell_value": nl.bell2_ps(f)}
        elif a.state == "ips":
            out = {"bell_value": nl.ips_ps_bell(a.lam, a.tau_eff)}
        else:
            raise CVLabError(f"state {a.state!r} does not support the two-mode pseudospin test")
        out["violation"] = abs(out["bell_value"]) > nl.LOCAL_BOUND
    elif test == "h":
        if a.state == "ips":
            st = nl.ips_wigner(a.lam, a.tau_eff)
        elif a.state == "twb":
            st = build(TWB(a.r))
        else:
            raise CVLabError(f"state {a.state!r} does not support the homodyne test")
        angles = (0.0, np.pi / 2, -np.pi / 4, np.pi / 4)
        val = nl.homodyne_bell2(st, angles, a.eta)
        out = {"bell_value": val, "violation": abs(val) > nl.LOCAL_BOUND}
        if a.samples:
            mc, err = nl.homodyne_bell2_monte_carlo(st, angles, a.eta, a.samples, a.seed)
            out.update({"monte_carlo": mc, "monte_carlo_stderr": err, "seed": a.seed})
    elif test == "dp3":
        x = a.r if a.state == "v3" else a.N
        js = _parse_grid(a.sweep)[1] if a.sweep else [a.J]
        vals = [nl.bell3_dp(a.state, x, float(j), a.setting3) for j in js]
        rows = [("DP3", a.state, x, float(j), v) for j, v in zip(js, vals)]
        i = int(np.argmax(np.abs(vals)))
        out = {"bell_value": vals[i], "J": float(js[i]), "violation": abs(vals[i]) > nl.LOCAL_BOUND}
    elif test == "ps3":
        x = a.r if a.state == "v3" else a.N
        val = nl.bell3_ps(a.state, x, a.representation)
        out = {"bell_value": val, "violation": abs(val) > nl.LOCAL_BOUND}
    else:
        raise CVLabError(f"unknown test {test!r}")
    if rows and (a.sweep or a.param_sweep):
        _emit_csv(nl.write_sweep_csv(rows), a.out)
        if a.out:
            out["file"] = a.out
    return out


def _emit_csv(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvlab", description="Gaussian-state toolkit")
    p.add_argument("--json", action="store_true", help="print a JSON run record instead of a table")
    p.add_argument("--record", help="also write the JSON run record to this file")
    p.add_argument("--version", action="version", version=version())
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("state", help="build a Gaussian state and report its functionals")
    s.add_argument("--kind", required=True,
                   choices=["vacuum", "thermal", "coherent", "squeezed", "twb", "tmst", "v3", "t"])
    s.add_argument("--modes", type=int, default=1)
    s.add_argument("--n", type=float, default=0.0, help="thermal photon number")
    s.add_argument("--alpha-re", type=float, default=0.0)
    s.add_argument("--alpha-im", type=float, default=0.0)
    s.add_argument("--r", type=float, default=0.0)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--n1", type=float, default=0.0)
    s.add_argument("--n2", type=float, default=0.0)
    s.add_argument("--n3", type=float, default=0.0)
    s.add_argument("--phi2", type=float, default=0.0)
    s.add_argument("--phi3", type=float, default=0.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_state)

    s = sub.add_parser("separability", help="run every applicable separability criterion")
    s.add_argument("file")
    s.add_argument("--partition", help="0-based modes of the transposed party, e.g. 1 or 1,2")
    s.set_defaults(func=cmd_separability)

    def bath(sp):
        sp.add_argument("--gamma", type=float, default=1.0)
        sp.add_argument("--nth", type=float, default=0.0)
        sp.add_argument("--ns", type=float, default=0.0)

    s = sub.add_parser("evolve", help="evolve a state in identical squeezed thermal baths")
    s.add_argument("--file", help="state file (default: twin beam with --r)")
    s.add_argument("--r", type=float, default=0.5)
    bath(s)
    s.add_argument("--t-max", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=11)
    s.add_argument("--partition")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("threshold", help="separability time of a twin beam")
    s.add_argument("--state", default="twb")
    s.add_argument("--r", type=float, required=True)
    bath(s)
    s.add_argument("--numeric", action="store_true", help="add a bisection cross-check")
    s.add_argument("--t-max", type=float, default=50.0)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("teleport", help="coherent-state teleportation fidelity")
    s.add_argument("--lambda", dest="lam", type=float, default=0.5)
    bath(s)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--tau-eff", type=float, help="use a photon-subtracted resource")
    s.add_argument("--sweep", help="lambda=lo:hi:n or t=lo:hi:n")
    s.add_argument("--out")
    s.set_defaults(func=cmd_teleport)

    s = sub.add_parser("clone", help="telecloning fidelities")
    s.add_argument("--N", type=float)
    s.add_argument("--N2", type=float, default=0.5)
    s.add_argument("--N3", type=float, default=0.5)
    s.set_defaults(func=cmd_clone)

    s = sub.add_parser("bell", help="Bell-combination evaluation and sweeps")
    s.add_argument("--test", required=True, choices=["dp", "ps", "h", "dp3", "ps3"])
    s.add_argument("--state", required=True, choices=["twb", "ips", "twba", "v3", "t"])
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--lambda", dest="lam", type=float, default=0.5)
    s.add_argument("--tau-eff", type=float, default=0.9999)
    s.add_argument("--N", type=float, default=100.0, help="total photons of the T state")
    s.add_argument("--n2", type=float, default=1.0)
    s.add_argument("--n3", type=float, default=0.1)
    s.add_argument("--n3-scale", type=float, default=1e-2, help="N3 = scale / N2 in TWBA sweeps")
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--J", type=float, default=1e-2)
    s.add_argument("--setting", default="BW", choices=["BW", "Optimized", "TWBA"])
    s.add_argument("--setting3", default=None, choices=["v3", "t", "t-optimized"])
    s.add_argument("--representation", default="fock", choices=["fock", "pi"])
    s.add_argument("--sweep", help="displacement grid j=lo:hi:n (logarithmic)")
    s.add_argument("--param-sweep", help="state-parameter grid name=lo:hi:n (linear)")
    s.add_argument("--samples", type=int, default=0, help="Monte Carlo samples for the homodyne test")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bell)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "json", "record", "command")}
    try:
        with np.errstate(over="ignore", under="ignore"):
            outputs = args.func(args)
    except PhysicalityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICALITY
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (CVLabError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    record = {"command": args.command, "params": params, "outputs": outputs, "version": version()}
    if args.record:
        with open(args.record, "w", encoding="utf-8") as fh:
            fh.write(_json_text(record) + "\n")
    stream = sys.stdout if not _csv_on_stdout(args) else sys.stderr
    stream.write((_json_text(record) if args.json else _table(outputs)) + "\n")
    return EXIT_OK


def _csv_on_stdout(args) -> bool:
    return args.command in ("evolve", "bell", "teleport") and not getattr(args, "out", None) and (
        args.command == "evolve" or getattr(args, "sweep", None) or getattr(args, "param_sweep", None))


if __name__ == "__main__":
    sys.exit(main())
