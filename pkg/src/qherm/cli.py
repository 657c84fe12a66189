"""``qherm`` command-line interface.

Exit codes: 0 ok, 1 bad configuration or parameters, 2 not quasi-Hermitian,
3 the two spectrum routes disagree, 4 solver did not converge, 5 sweep does
not bracket a threshold.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional

import numpy as np

from . import analytic
from .config import (
    ChainConfig,
    ConfigError,
    ResultDocument,
    complex_list,
    complex_pair,
    load,
    parse_chain_config,
    parse_complex,
    parse_real,
)
from .eigensolver import ConvergenceError, general_eigenvalues, match_multisets, symmetric_eigenvalues
from .errors import DecouplingError, DomainError, NotSymmetrizableError, SpecificationError
from .lattice import TridiagMatrix, build_chain, root_residual
from .symmetrizer import (
    DEFAULT_TOL,
    MetricDiagonal,
    compute_metric,
    quasi_herm_check,
    symmetrize,
    verify_intertwining,
)

log = logging.getLogger("qherm")

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NOT_QH = 2
EXIT_DISAGREE = 3
EXIT_CONVERGENCE = 4
EXIT_BRACKET = 5

CROSS_METHOD_TOL = 1e-8
SWEEP_BISECTIONS = 40


def _report_dict(report) -> dict:
    out = {
        "is_quasi_hermitian": report.is_quasi_hermitian,
        "diag_real": report.diag_real,
        "ratios_positive": report.ratios_positive,
        "cyclic_ok": report.cyclic_ok,
        "first_violation": None,
    }
    if report.first_violation is not None:
        index, rule, value = report.first_violation
        out["first_violation"] = {"index": index, "rule": rule, "value": complex_pair(value)}
    return out


def _metric_dict(q: MetricDiagonal) -> dict:
    out = {"q1": q.q1, "log_scaled": q.log_scaled, "ratios": q.ratios}
    if q.log_scaled:
        out["sign"] = q.sign
        out["log_abs_q"] = q.q
    else:
        out["q"] = q.q
    return out


def _matrix_dict(t: TridiagMatrix) -> dict:
    out = {"diag": complex_list(t.diag), "upper": complex_list(t.upper), "lower": complex_list(t.lower)}
    if t.cyclic:
        out["corner_up"] = complex_pair(t.corner_up)
        out["corner_down"] = complex_pair(t.corner_down)
    return out


def _intertwining(m: TridiagMatrix, q: MetricDiagonal) -> dict:
    offdiag = bool(np.any(np.asarray(m.diag).imag != 0))
    return {"intertwining": verify_intertwining(m, q, offdiag_only=offdiag),
            "intertwining_form": "offdiagonal" if offdiag else "full"}


def _chain(config) -> tuple[ChainConfig, TridiagMatrix]:
    cfg = parse_chain_config(config)
    return cfg, build_chain(cfg.spec)


def cmd_check(config: dict, tol: float = DEFAULT_TOL, q1: Optional[float] = None) -> ResultDocument:
    """Quasi-Hermiticity report plus the intertwining residual when a metric exists."""
    cfg, m = _chain(config)
    report = quasi_herm_check(m, tol)
    doc = ResultDocument("check", config)
    doc.details["report"] = _report_dict(report)
    if report.ratios_positive:
        q = compute_metric(m, cfg.q1 if q1 is None else q1, tol)
        doc.metric = _metric_dict(q)
        doc.residuals.update(_intertwining(m, q))
    doc.exit_code = EXIT_OK if report.is_quasi_hermitian else EXIT_NOT_QH
    if doc.exit_code:
        doc.diagnostics.append(f"not quasi-Hermitian: {doc.details['report']['first_violation']}")
    return doc


def _coalescence_notes(values, scale) -> list[str]:
    notes = []
    vals = np.asarray(values)
    for i in range(vals.size):
        for j in range(i + 1, vals.size):
            if abs(vals[i] - vals[j]) <= 1e-6 * scale:
                notes.append(
                    f"eigenvalues {i} and {j} nearly coincide ({complex(vals[i])!r}): "
                    "possible exceptional point, eigenvectors may be defective"
                )
    return notes


def cmd_spectrum(config: dict, method: str = "auto", tol: float = DEFAULT_TOL,
                 q1: Optional[float] = None) -> ResultDocument:
    """Spectrum through the symmetrized route, the characteristic-polynomial route, or both."""
    if method not in ("auto", "symmetrize", "oracle"):
        raise ConfigError(f"unknown method {method!r}")
    cfg, m = _chain(config)
    report = quasi_herm_check(m, tol)
    doc = ResultDocument("spectrum", config)
    doc.details["method"] = method
    doc.details["report"] = _report_dict(report)
    use_sym = method == "symmetrize" or (method == "auto" and report.is_quasi_hermitian and not m.cyclic)
    use_oracle = method in ("auto", "oracle")
    if method == "symmetrize":
        if not report.is_quasi_hermitian:
            doc.exit_code = EXIT_NOT_QH
            doc.diagnostics.append("symmetrize route needs a quasi-Hermitian chain")
            return doc
        if m.cyclic:
            raise ConfigError("symmetrize route supports open chains only")
    sym = oracle = None
    if use_sym:
        q = compute_metric(m, cfg.q1 if q1 is None else q1, tol)
        t = symmetrize(m, q)
        sym = symmetric_eigenvalues(t)
        doc.residuals.update(_intertwining(m, q))
        doc.metric = _metric_dict(q)
    if use_oracle:
        oracle = general_eigenvalues(m)
    chosen = sym if sym is not None else oracle
    doc.details["route"] = "symmetrize" if sym is not None else "oracle"
    doc.spectrum = complex_list(chosen.values)
    doc.all_real = chosen.all_real
    doc.residuals["char_poly"] = root_residual(m, chosen.values).tolist()
    doc.diagnostics.extend(_coalescence_notes(chosen.values, m.scale()))
    if sym is not None and oracle is not None:
        deviation = match_multisets(sym.values, oracle.values)
        doc.residuals["cross_method_deviation"] = deviation
        doc.residuals["oracle_max_imag"] = oracle.max_imag()
        if not deviation <= CROSS_METHOD_TOL:
            doc.exit_code = EXIT_DISAGREE
            doc.diagnostics.append(f"routes disagree by {deviation:.3g} > {CROSS_METHOD_TOL:g}")
    return doc


def cmd_transform(config: dict, tol: float = DEFAULT_TOL, q1: Optional[float] = None) -> ResultDocument:
    """Metric, symmetrized matrix and intertwining residual."""
    cfg, m = _chain(config)
    doc = ResultDocument("transform", config)
    try:
        q = compute_metric(m, cfg.q1 if q1 is None else q1, tol)
    except (DecouplingError, NotSymmetrizableError) as exc:
        doc.exit_code = EXIT_NOT_QH
        doc.diagnostics.append(str(exc))
        return doc
    t = symmetrize(m, q)
    doc.metric = _metric_dict(q)
    doc.details["symmetrized"] = _matrix_dict(t)
    doc.residuals.update(_intertwining(m, q))
    if q.log_scaled:
        doc.diagnostics.append("metric stored as sign and natural-log magnitude")
    return doc


def _sweep_settings(config: dict, v_range, steps):
    section = config.get("sweep", {}) if isinstance(config, dict) else {}
    if not isinstance(section, dict):
        raise ConfigError("sweep: expected an object")
    if v_range is None:
        v_range = section.get("range")
    if steps is None:
        steps = section.get("steps", 100)
    if not isinstance(v_range, (list, tuple)) or len(v_range) != 2:
        raise ConfigError("sweep range: expected [low, high]")
    lo, hi = (parse_real(v, "sweep range") for v in v_range)
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
        raise ConfigError(f"sweep steps: expected a positive integer, got {steps!r}")
    if not hi > lo:
        raise ConfigError("sweep range: high must exceed low")
    return lo, hi, steps


def cmd_sweep(config: dict, parameter: str = "v0", v_range=None, steps=None) -> ResultDocument:
    """Locate the V0 at which the spectrum of an alternating gain/loss chain turns complex.

    The grid scan brackets the first real-to-complex transition, then 40
    bisection steps on the oracle's ``all_real`` refine it.
    """
    if parameter != "v0":
        raise ConfigError(f"unsupported sweep parameter {parameter!r}")
    cfg = parse_chain_config(config)
    if cfg.yuce is None:
        raise ConfigError("sweep needs omega given by the 'yuce' generator")
    gamma, _ = cfg.yuce
    lo, hi, steps = _sweep_settings(config, v_range, steps)
    n = cfg.spec.n

    def all_real(v0: float) -> bool:
        over = {"omega": {"yuce": {"gamma": gamma, "v0": v0}}}
        return general_eigenvalues(build_chain(parse_chain_config(config, over).spec)).all_real

    grid = [lo + (hi - lo) * i / steps for i in range(steps + 1)]
    flags = [all_real(v) for v in grid]
    doc = ResultDocument("sweep", config)
    doc.details.update({"parameter": parameter, "range": [lo, hi], "steps": steps, "gamma": gamma})
    bracket = next((i for i in range(steps) if flags[i] and not flags[i + 1]), None)
    if n % 2 == 0 and gamma > 0:
        doc.details["analytic_threshold"] = analytic.yuce_critical_v0(n, gamma)
    if bracket is None:
        doc.exit_code = EXIT_BRACKET
        doc.diagnostics.append("no real-to-complex transition inside the sweep range")
        return doc
    a, b = grid[bracket], grid[bracket + 1]
    doc.details["grid_bracket"] = [a, b]
    for _ in range(SWEEP_BISECTIONS):
        mid = 0.5 * (a + b)
        if all_real(mid):
            a = mid
        else:
            b = mid
    threshold = 0.5 * (a + b)
    doc.details["bracket"] = [a, b]
    doc.details["threshold"] = threshold
    if "analytic_threshold" in doc.details:
        doc.details["deviation"] = abs(threshold - doc.details["analytic_threshold"])
    return doc


def _parse_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _param(params: dict, key: str, kind=parse_real):
    if key not in params:
        raise ConfigError(f"{key}: required")
    return kind(params[key], key)


def cmd_analytic(config: dict, model: Optional[str] = None) -> ResultDocument:
    """Closed-form spectra: ``2x2``, ``uniform`` or ``yuce``."""
    model = model or config.get("model")
    doc = ResultDocument("analytic", config)
    doc.details["model"] = model
    if model == "2x2":
        w1 = _param(config, "omega1", parse_complex)
        w2 = _param(config, "omega2", parse_complex)
        a = _param(config, "alpha", parse_complex)
        b = _param(config, "beta", parse_complex)
        res = analytic.two_by_two_spectrum(w1, w2, a, b)
        doc.details["formula"] = "E = (w1 + w2 +- sqrt((w1 - w2)^2 + 4 alpha beta)) / 2"
        doc.details["plus"] = complex_pair(res.plus)
        doc.details["minus"] = complex_pair(res.minus)
        doc.spectrum = complex_list(sorted([res.plus, res.minus], key=lambda z: (z.real, z.imag)))
        doc.all_real = res.real
    elif model == "uniform":
        n = _param(config, "n", _parse_int)
        p = analytic.UniformChainParams(n, _param(config, "omega"), _param(config, "alpha"),
                                        _param(config, "beta"))
        table = [{"k": k, "E": float(pr.value.real), "d": pr.vector_d.real, "c": pr.vector_c.real}
                 for k, pr in enumerate(analytic.uniform_chain_pairs(p), start=1)]
        doc.details["formula"] = ("E_k = omega + 2 sqrt(alpha beta) cos(k pi/(N+1)); "
                                  "d_jk = sqrt(2/(N+1)) sin(k j pi/(N+1)); "
                                  "c_jk = (beta/alpha)^(j/2) d_jk; d_jk gains (-1)^j when alpha < 0")
        doc.details["table"] = table
        doc.spectrum = complex_list(np.sort([row["E"] for row in table]))
        doc.all_real = True
    elif model == "yuce":
        n = _param(config, "n", _parse_int)
        p = analytic.YuceParams(n, _param(config, "gamma"), _param(config, "v0"))
        spec = analytic.yuce_spectrum(p)
        doc.details["formula"] = "E_k^2 = 4 gamma cos^2(k pi/(N+1)) - V0^2, k = 1..N/2"
        doc.details["energies_squared"] = analytic.yuce_energies_squared(p)
        doc.details["critical_v0"] = analytic.yuce_critical_v0(int(p.n), p.gamma)
        doc.spectrum = complex_list(spec.values)
        doc.all_real = spec.all_real
    else:
        raise ConfigError(f"unknown analytic model {model!r}; expected 2x2, uniform or yuce")
    return doc


COMMANDS = ("check", "spectrum", "transform", "sweep", "analytic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qherm", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--method", default="auto", choices=("auto", "symmetrize", "oracle"))
    parser.add_argument("--q1", type=float, default=None, help="metric normalization Q_1")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, help="quasi-Hermiticity tolerance")
    parser.add_argument("--out", default=None, help="write the result document here instead of stdout")
    parser.add_argument("--parameter", default="v0", help="sweep parameter (only v0)")
    parser.add_argument("--range", nargs=2, type=float, default=None, metavar=("LOW", "HIGH"))
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--model", default=None, choices=("2x2", "uniform", "yuce"))
    return parser


def run(args: argparse.Namespace) -> ResultDocument:
    config = load(args.config)
    if not isinstance(config, dict):
        raise ConfigError("configuration must be a JSON object")
    if args.command == "check":
        return cmd_check(config, args.tol, args.q1)
    if args.command == "spectrum":
        return cmd_spectrum(config, args.method, args.tol, args.q1)
    if args.command == "transform":
        return cmd_transform(config, args.tol, args.q1)
    if args.command == "sweep":
        return cmd_sweep(config, args.parameter, args.range, args.steps)
    return cmd_analytic(config, args.model)


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="qherm: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        doc = run(args)
    except (ConfigError, SpecificationError, DomainError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except ConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_CONVERGENCE
    for line in doc.diagnostics:
        log.warning("%s", line)
    text = doc.stamp().to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return doc.exit_code


if __name__ == "__main__":
    sys.exit(main())
