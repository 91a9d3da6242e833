import copy
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from src.data.grids import QuantConfig
from src.models.pairing import Extrapolation, PairingSchedule
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = ("spectrum", "pair", "semiclassical", "verify")

DEFAULT_OUTPUTS = {
    "spectrum": "spectrum.csv",
    "pair": "pair.json",
    "semiclassical": "semiclassical.csv",
    "verify": None,
}

STATE_FAMILIES = {
    "hermite": {"k": 0},
    "gaussian": {"width": None, "center": 0.0, "momentum": 0.0},
    "plane_wave": {"momentum": 0.0, "window": 3.0},
}

DEFAULT_RUN = {
    "quant": {},
    "m": 0,
    "m_max": 5,
    "state": {"family": "hermite", "k": 0},
    "schedule": {
        "t1": list(PairingSchedule.t1_sequence),
        "t2": list(PairingSchedule.t2_sequence),
        "extrapolation": Extrapolation.RICHARDSON.value,
        "path": "joint",
    },
    "hbar_scan": [0.1, 0.05, 0.025],
    "exclusion": 0.2,
    "out": None,
}


@dataclass
class RunConfig:
    """
    Validated settings of one command line run.

    Values come from DEFAULT_RUN, then the JSON file, then the command line
    flags; later sources win.
    """

    command: str
    quant: QuantConfig
    m: int = 0
    m_max: Optional[int] = 5
    state: dict = field(default_factory=lambda: dict(DEFAULT_RUN["state"]))
    schedule: PairingSchedule = field(default_factory=PairingSchedule)
    path: str = "joint"
    hbar_scan: tuple = (0.1, 0.05, 0.025)
    exclusion: float = 0.2
    out: Optional[str] = None
    verbose: bool = False

    @classmethod
    def from_sources(cls, command, config_path=None, overrides=None, verbose=False):
        """
        Merge defaults, a JSON file and flag overrides, then validate.

        Args:
            command (str): One of COMMANDS
            config_path (str, optional): JSON configuration file
            overrides (dict, optional): Flag values; None entries are ignored.
                'hbar' is routed into the numeric configuration.
            verbose (bool): Print per-check detail

        Returns:
            RunConfig

        Raises:
            ConfigError: On unreadable files or invalid values
        """
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
        raw = copy.deepcopy(DEFAULT_RUN)
        if config_path:
            raw = _merge(raw, _load_json(config_path))
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key == "hbar":
                raw["quant"] = {**raw["quant"], "hbar": value}
            else:
                raw[key] = value
        return cls._validated(command, raw, verbose)

    @classmethod
    def _validated(cls, command, raw, verbose):
        unknown = set(raw) - set(DEFAULT_RUN)
        if unknown:
            raise ConfigError(f"unknown run keys: {sorted(unknown)}")
        if not isinstance(raw["quant"], dict):
            raise ConfigError("'quant' must be a mapping")
        quant = QuantConfig(raw["quant"])

        m = _nonnegative_int(raw["m"], "m")
        m_max = raw["m_max"]
        if m_max is not None:
            if int(m_max) != m_max:
                raise ConfigError(f"m_max must be an integer, got {m_max!r}")
            m_max = int(m_max)

        state = _validated_state(raw["state"])

        sched = raw["schedule"]
        if not isinstance(sched, dict):
            raise ConfigError("'schedule' must be a mapping")
        path = sched.get("path", "joint")
        if path not in ("joint", "iterated"):
            raise ConfigError(f"unknown limit path {path!r}")
        schedule = PairingSchedule(
            tuple(sched.get("t1", ())), tuple(sched.get("t2", ())),
            sched.get("extrapolation", Extrapolation.RICHARDSON.value),
        )

        try:
            hbar_scan = tuple(float(h) for h in raw["hbar_scan"])
            exclusion = float(raw["exclusion"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid residual scan settings: {exc}") from exc
        if len(hbar_scan) < 2 or any(h <= 0 for h in hbar_scan):
            raise ConfigError("hbar_scan needs at least two positive values")
        if not 0.0 < exclusion < 1.0:
            raise ConfigError(f"exclusion must lie in (0, 1), got {exclusion}")

        out = raw["out"] if raw["out"] is not None else DEFAULT_OUTPUTS[command]
        config = cls(command, quant, m, m_max, state, schedule, path, hbar_scan, exclusion, out, verbose)
        logger.debug("run configuration: %s", config.to_dict())
        return config

    def to_dict(self):
        return {
            "command": self.command,
            "quant": self.quant.to_dict(),
            "m": self.m,
            "m_max": self.m_max,
            "state": self.state,
            "schedule": {
                "t1": list(self.schedule.t1_sequence),
                "t2": list(self.schedule.t2_sequence),
                "extrapolation": self.schedule.extrapolation.value,
                "path": self.path,
            },
            "hbar_scan": list(self.hbar_scan),
            "exclusion": self.exclusion,
            "out": self.out,
        }


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"configuration {path} must hold a JSON object")
    return data


def _merge(base, extra):
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(merged.get(key), dict) and isinstance(value, dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def _nonnegative_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < 0:
        raise ConfigError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(value)


def _validated_state(spec):
    if not isinstance(spec, dict):
        raise ConfigError("'state' must be a mapping")
    family = spec.get("family", "hermite")
    if family not in STATE_FAMILIES:
        raise ConfigError(f"unknown state family {family!r}; expected one of {sorted(STATE_FAMILIES)}")
    extra = set(spec) - set(STATE_FAMILIES[family]) - {"family"}
    if extra:
        raise ConfigError(f"unexpected keys for {family} state: {sorted(extra)}")
    state = {"family": family, **STATE_FAMILIES[family], **{k: v for k, v in spec.items() if k != "family"}}
    if family == "hermite":
        state["k"] = _nonnegative_int(state["k"], "state.k")
    return state
