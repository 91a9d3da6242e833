import json
import logging
import os

import numpy as np
import pandas as pd

from src.data.states import gaussian_state, hermite_state, plane_wave_state
from src.models.energy import (
    calibration_report,
    orthogonality,
    spectrum,
    u2_generator_residual,
    uncorrected_spectrum,
)
from src.models.pairing import BKSPairing, pairing_map_B, wedge_identity_residual
from src.models.phase_space import PhasePoint, Trivialization
from src.models.kahler import FirstTypeFamily
from src.models.schrodinger import pde_refinement, u1_consistency_check
from src.models.semiclassical import (
    exact_eigenstate,
    maslov_phase,
    overlap,
    psi_lagrangian,
    residual_diagnostics,
)
from src.utils.errors import BKSRegError, NumericError, OutputError
from src.utils.performance import PerformanceMonitor

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

FLOAT_FORMAT = "%.17g"


def build_state(spec, config):
    """Instantiate the Schrödinger state described by a validated state spec."""
    family = spec["family"]
    if family == "hermite":
        return hermite_state(spec["k"], config)
    if family == "gaussian":
        return gaussian_state(config, spec["width"], spec["center"], spec["momentum"])
    return plane_wave_state(config, spec["momentum"], spec["window"])


def write_csv(frame, path):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.info("wrote %d rows to %s", len(frame), path)


def write_json(payload, path):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(payload, handle, indent=2, ensure_ascii=False)
            handle.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.info("wrote %s", path)


def summary_path(path):
    root, _ = os.path.splitext(path)
    return f"{root}_summary.json"


def cmd_spectrum(cfg):
    """Corrected and uncorrected levels for m = 0..m_max as CSV."""
    columns = ["m", "energy_corrected", "energy_uncorrected"]
    if cfg.m_max is None or cfg.m_max < 0:
        frame = pd.DataFrame(columns=columns)
    else:
        hbar = cfg.quant.hbar
        frame = pd.DataFrame({
            "m": np.arange(cfg.m_max + 1),
            "energy_corrected": spectrum(cfg.m_max, hbar),
            "energy_uncorrected": uncorrected_spectrum(cfg.m_max, hbar),
        }, columns=columns)
    write_csv(frame, cfg.out)
    return EXIT_OK


def cmd_pair(cfg):
    """Limit of the regularized pairing for the configured state, written as JSON."""
    state = build_state(cfg.state, cfg.quant)
    payload = {"state": cfg.state, "m": cfg.m, "hbar": cfg.quant.hbar}
    try:
        result = BKSPairing(cfg.quant).limit(state, cfg.m, cfg.schedule, cfg.path)
    except NumericError as exc:
        payload.update({"error": str(exc), "diagnostics": exc.diagnostics})
        write_json(payload, cfg.out)
        raise
    payload.update(result.to_dict())
    write_json(payload, cfg.out)
    print(f"pairing m={cfg.m}: {result.value:.12g} (oracle {result.oracle:.12g}, "
          f"relative error {result.relative_error:.3e})")
    return EXIT_OK


def cmd_semiclassical(cfg):
    """ψ_{L_m} and the exact eigenfunction on the q grid, plus a JSON summary."""
    hbar = cfg.quant.hbar
    q = cfg.quant.q_grid.points
    lagrangian = psi_lagrangian(cfg.m, hbar)
    psi = lagrangian.total(q)
    exact = exact_eigenstate(cfg.m, cfg.quant).psi_q
    frame = pd.DataFrame({
        "q": q,
        "re_psi": psi.real,
        "im_psi": psi.imag,
        "abs_psi": np.abs(psi),
        "re_exact": exact.real,
        "im_exact": exact.imag,
    })
    write_csv(frame, cfg.out)

    report = residual_diagnostics(cfg.m, cfg.hbar_scan, cfg.exclusion)
    summary = {
        "m": cfg.m,
        "hbar": hbar,
        "caustic_q": lagrangian.caustic_q,
        "maslov_phase": maslov_phase(lagrangian),
        "overlap": overlap(cfg.m, cfg.quant),
        "residual_slope": report.slope,
        "residuals": report.table.to_dict(orient="records"),
    }
    write_json(summary, summary_path(cfg.out))
    return EXIT_OK


def _verification_checks(cfg):
    """(name, callable returning a residual, tolerance) for every invariant."""
    config = cfg.quant
    hbar = config.hbar
    rng = np.random.default_rng(0)

    def wedge():
        points = rng.uniform(-3.0, 3.0, size=(1000, 2))
        times = rng.uniform(0.0, 10.0, size=1000), rng.uniform(0.0, 1e6, size=1000)
        return max(wedge_identity_residual(PhasePoint(q, p), t1, t2)
                   for (q, p), t1, t2 in zip(points, *times))

    def polarization_first():
        _, residuals, _ = pde_refinement(hermite_state(0, config), FirstTypeFamily(0.5), config,
                                         spacings=(0.1, 0.05))
        return residuals[-1]

    def generator_first():
        return u1_consistency_check(hermite_state(0, config), FirstTypeFamily(0.5), 1e-3, config)

    def generator_second():
        return u2_generator_residual(1, 0.5, 1e-3, config)

    def orthogonal():
        return abs(orthogonality(0, 1, 0.5, config))

    def gauge():
        engine = BKSPairing(config)
        state = hermite_state(0, config)
        nodes = engine.mapper.momentum_nodes(state)
        first = engine.regularized(state, 0, 1e-2, 100.0 / hbar, Trivialization.SIGMA, nodes)
        second = engine.regularized(state, 0, 1e-2, 100.0 / hbar, Trivialization.SIGMA_TILDE, nodes)
        return abs(first - second) / max(abs(first), 1e-300)

    def calibration():
        report = calibration_report(0, hbar)
        return abs(report.candidates["exp(m/2+1/4)"] / report.a_m - 1.0)

    def maslov():
        return max(abs(maslov_phase(psi_lagrangian(m, hbar)) - 0.5 * np.pi) for m in range(9))

    def state_identity():
        q = np.array([-0.5, 0.0, 0.4]) * psi_lagrangian(cfg.m, hbar).caustic_q
        density = pairing_map_B(cfg.m, config, route="mollified", q=q).psi_q
        expected = psi_lagrangian(cfg.m, hbar).total(q)
        return float(np.max(np.abs(density - expected)) / np.max(np.abs(expected)))

    def pairing_limit():
        result = BKSPairing(config).limit(hermite_state(0, config), 0)
        return result.relative_error

    return [
        ("wedge identity", wedge, 1e-12),
        ("first-type polarization", polarization_first, 1e-4),
        ("first-type generator", generator_first, 1e-3),
        ("second-type generator", generator_second, 1e-3),
        ("orthogonality", orthogonal, 1e-10),
        ("gauge invariance", gauge, 1e-12),
        ("a_m calibration", calibration, 1e-6),
        ("Maslov phase", maslov, 1e-12),
        ("pairing map vs semiclassical state", state_identity, 1e-3),
        ("pairing limit vs circle integral", pairing_limit, 1e-3),
    ]


def cmd_verify(cfg):
    """
    Run the invariant suite and print a pass/fail table.

    Returns:
        int: EXIT_OK when every check passes, EXIT_NUMERIC otherwise
    """
    monitor = PerformanceMonitor()
    rows = []
    for name, check, tolerance in _verification_checks(cfg):
        try:
            with monitor.track(name):
                residual = float(check())
            passed = bool(np.isfinite(residual) and residual <= tolerance)
        except BKSRegError as exc:
            logger.error("check %s failed: %s", name, exc)
            residual, passed = float("nan"), False
        rows.append({"check": name, "residual": residual, "tolerance": tolerance,
                     "status": "pass" if passed else "FAIL"})

    table = pd.DataFrame(rows)
    columns = ["check", "residual", "tolerance", "status"] if cfg.verbose else ["check", "status"]
    print(table[columns].to_string(index=False))
    if cfg.verbose:
        timings = pd.DataFrame(
            [{"check": name, "ms": stats["total"]} for name, stats in monitor.generate_report()["timings"].items()]
        )
        print(timings.to_string(index=False, float_format=lambda x: f"{x:.1f}"))
    if cfg.out:
        write_csv(table, cfg.out)
    return EXIT_OK if table["status"].eq("pass").all() else EXIT_NUMERIC


COMMAND_HANDLERS = {
    "spectrum": cmd_spectrum,
    "pair": cmd_pair,
    "semiclassical": cmd_semiclassical,
    "verify": cmd_verify,
}
