"""Command-line front end: single runs, noise-parameter sweeps, and the
Bell-mapping table, with CSV/JSON reports that put the numerical results next
to the closed-form oracles.

Exit codes: 0 success, 1 invariant violation in some row, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

from .analytic import (
    NoiseParams,
    teleport_fidelity,
    teleport_norm,
    truncation_fidelity,
    truncation_norm,
)
from .apparatus import (
    QubitAmplitudes,
    ScissorsConfig,
    TeleportConfig,
    bell_click_assignment,
    bs_action_on_bell,
    full_pipeline,
    run_scissors,
    run_teleport,
)
from .channels import BeamSplitterSpec, DetectorSpec, ImpossibleOutcomeError
from .fock import CoherentDrive

DEFAULT_SWEEP = {
    "eta": [0.5, 0.7, 1.0],
    "gamma_bs": [0.0, 0.02, 0.1],
    "drive": [0.5, 1.0, 2.0],
}

FLOAT_FORMAT = ".12g"


class ConfigError(ValueError):
    """Schema or range violation in a run configuration."""


@dataclass(frozen=True)
class RunSettings:
    """Validated single-point settings with defaults applied."""

    eta: float = 1.0
    gamma_bs: float = 0.0
    drive_gamma: complex = 1.0
    cutoff: int | None = None
    tail_eps: float = 1e-12
    clicks: tuple[int, int] = (1, 0)
    input_qubit: QubitAmplitudes | None = None
    out: str | None = None

    def drive(self) -> CoherentDrive:
        return CoherentDrive(self.drive_gamma, cutoff=self.cutoff, tail_eps=self.tail_eps)

    def beam_splitter(self) -> BeamSplitterSpec:
        return BeamSplitterSpec.lossy_5050(self.gamma_bs)

    def detector(self) -> DetectorSpec:
        return DetectorSpec(self.eta)


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian grid over (eta, Gamma, drive amplitude)."""

    eta: tuple[float, ...]
    gamma_bs: tuple[float, ...]
    drive: tuple[float, ...]
    cutoff: int | None = None
    tail_eps: float = 1e-12

    def __post_init__(self):
        for name in ("eta", "gamma_bs", "drive"):
            values = getattr(self, name)
            object.__setattr__(self, name, tuple(float(v) for v in values))
            if not getattr(self, name):
                raise ConfigError(f"sweep.{name}: list must be non-empty")
        for v in self.eta:
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"sweep.eta: value {v} outside [0, 1]")
        for v in self.gamma_bs:
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"sweep.gamma_bs: value {v} outside [0, 1)")
        for v in self.drive:
            if v <= 0.0:
                raise ConfigError(f"sweep.drive: amplitude {v} must be positive")

    def points(self):
        """Deterministic lexicographic order over the grid."""
        for eta in self.eta:
            for gamma in self.gamma_bs:
                for drive in self.drive:
                    yield eta, gamma, drive


@dataclass
class ReportRow:
    """One sweep point: simulated quantities beside the verbatim oracles.

    ``run_error`` is empty for a clean point and carries a token (e.g.
    ``impossible_outcome``) when the point failed; failures never abort a
    sweep.  ``oor_*`` flag oracle values escaping [0, 1]; they are findings,
    not errors.
    """

    eta: float
    gamma: float
    ratio_R: float
    drive_gamma: float
    fid_scissors_numeric: float = 0.0
    fid_scissors_eq16: float = 0.0
    fid_teleport_numeric: float = 0.0
    fid_teleport_eq20: float = 0.0
    prob_scissors: float = 0.0
    prob_teleport: float = 0.0
    norm_eq15: float = 0.0
    norm_eq180: float = 0.0
    abs_diff_16: float = 0.0
    abs_diff_20: float = 0.0
    oor_eq16: int = 0
    oor_eq20: int = 0
    truncation_error: float = 0.0
    run_error: str = ""

    def has_violation(self) -> bool:
        if self.run_error:
            return True
        numeric = [
            self.fid_scissors_numeric,
            self.fid_teleport_numeric,
            self.prob_scissors,
            self.prob_teleport,
        ]
        if any(not math.isfinite(v) for v in asdict(self).values() if isinstance(v, float)):
            return True
        return any(not 0.0 <= v <= 1.0 for v in numeric)


CSV_COLUMNS = [f.name for f in fields(ReportRow)]


def parse_config(source) -> dict:
    """Validate a raw config (dict, JSON text, or file path) against the
    schema; rejects unknown keys, reports offending field paths."""
    if isinstance(source, dict):
        raw = source
    else:
        text = str(source)
        if text.strip().startswith("{"):
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from exc
        else:
            try:
                with open(text, "r", encoding="utf-8") as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file {text!r}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {text!r}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"eta", "gamma_bs", "drive", "input", "clicks", "sweep", "out"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    out = {}
    out["eta"] = _check_range(raw.get("eta", 1.0), "eta", 0.0, 1.0)
    out["gamma_bs"] = _check_range(raw.get("gamma_bs", 0.0), "gamma_bs", 0.0, 1.0, open_high=True)
    out["drive"] = _parse_drive(raw.get("drive", 1.0))
    out["clicks"] = _parse_clicks(raw.get("clicks", [1, 0]))
    out["input"] = _parse_input(raw.get("input")) if "input" in raw else None
    out["sweep"] = _parse_sweep(raw["sweep"]) if "sweep" in raw else None
    out["out"] = raw.get("out")
    if out["out"] is not None and not isinstance(out["out"], str):
        raise ConfigError("out: must be a path string")
    return out


def settings_from_config(cfg: dict) -> RunSettings:
    drive = cfg["drive"]
    return RunSettings(
        eta=cfg["eta"],
        gamma_bs=cfg["gamma_bs"],
        drive_gamma=drive["gamma"],
        cutoff=drive["cutoff"],
        tail_eps=drive["tail_eps"],
        clicks=cfg["clicks"],
        input_qubit=cfg["input"],
        out=cfg["out"],
    )


def _parse_drive(raw) -> dict:
    if isinstance(raw, (int, float)):
        raw = {"gamma": float(raw)}
    if not isinstance(raw, dict):
        raise ConfigError("drive: must be a number or an object")
    for key in raw:
        if key not in {"gamma", "cutoff", "tail_eps"}:
            raise ConfigError(f"unknown config key 'drive.{key}'")
    gamma = _parse_complex(raw.get("gamma", 1.0), "drive.gamma")
    cutoff = raw.get("cutoff")
    if cutoff is not None and (not isinstance(cutoff, int) or cutoff < 1):
        raise ConfigError("drive.cutoff: must be a positive integer")
    tail = raw.get("tail_eps", 1e-12)
    if not isinstance(tail, (int, float)) or not 0 < tail < 1:
        raise ConfigError("drive.tail_eps: must lie in (0, 1)")
    return {"gamma": gamma, "cutoff": cutoff, "tail_eps": float(tail)}


def _parse_input(raw) -> QubitAmplitudes:
    if not isinstance(raw, dict) or set(raw) - {"c0", "c1"}:
        raise ConfigError("input: must be an object with keys c0, c1")
    c0 = _parse_complex(raw.get("c0", 1.0), "input.c0")
    c1 = _parse_complex(raw.get("c1", 0.0), "input.c1")
    norm = math.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
    if norm == 0:
        raise ConfigError("input: c0 and c1 cannot both vanish")
    return QubitAmplitudes(c0 / norm, c1 / norm)


def _parse_clicks(raw) -> tuple[int, int]:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, int) and v >= 0 for v in raw)
    ):
        raise ConfigError("clicks: must be a pair of non-negative integers")
    return int(raw[0]), int(raw[1])


def _parse_sweep(raw) -> SweepGrid:
    if not isinstance(raw, dict):
        raise ConfigError("sweep: must be an object")
    for key in raw:
        if key not in {"eta", "gamma_bs", "drive", "cutoff", "tail_eps"}:
            raise ConfigError(f"unknown config key 'sweep.{key}'")
    def listing(key, default):
        values = raw.get(key, default)
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{key}: must be a non-empty list")
        if not all(isinstance(v, (int, float)) for v in values):
            raise ConfigError(f"sweep.{key}: values must be numbers")
        return values
    try:
        return SweepGrid(
            eta=listing("eta", DEFAULT_SWEEP["eta"]),
            gamma_bs=listing("gamma_bs", DEFAULT_SWEEP["gamma_bs"]),
            drive=listing("drive", DEFAULT_SWEEP["drive"]),
            cutoff=raw.get("cutoff"),
            tail_eps=raw.get("tail_eps", 1e-12),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_complex(raw, path: str) -> complex:
    if isinstance(raw, (int, float)):
        return complex(raw)
    if isinstance(raw, (list, tuple)) and len(raw) == 2 and all(isinstance(v, (int, float)) for v in raw):
        return complex(raw[0], raw[1])
    raise ConfigError(f"{path}: must be a number or [re, im] pair")


def _check_range(value, name, low, high, open_high=False) -> float:
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: must be a number")
    value = float(value)
    ok = low <= value < high if open_high else low <= value <= high
    if not ok:
        bracket = f"[{low}, {high})" if open_high else f"[{low}, {high}]"
        raise ConfigError(f"{name}: value {value} outside {bracket}")
    return value


def evaluate_point(
    eta: float,
    gamma_bs: float,
    drive_gamma: float,
    cutoff: int | None = None,
    tail_eps: float = 1e-12,
) -> ReportRow:
    """Run the full machine at one noise point and evaluate every oracle."""
    drive = CoherentDrive(drive_gamma, cutoff=cutoff, tail_eps=tail_eps)
    params = NoiseParams.from_drive(eta, gamma_bs, drive)
    bs = BeamSplitterSpec.lossy_5050(gamma_bs)
    row = ReportRow(
        eta=eta,
        gamma=gamma_bs,
        ratio_R=params.ratio_R,
        drive_gamma=abs(drive_gamma),
    )
    errors = []
    try:
        eq16 = truncation_fidelity(params)
        eq20 = teleport_fidelity(params)
        eq15 = truncation_norm(params, bs)
        eq180 = teleport_norm(params)
        row.fid_scissors_eq16 = eq16.value
        row.fid_teleport_eq20 = eq20.value
        row.norm_eq15 = eq15.value
        row.norm_eq180 = eq180.value
        row.oor_eq16 = int(eq16.out_of_range)
        row.oor_eq20 = int(eq20.out_of_range)
    except (ZeroDivisionError, OverflowError, ValueError):
        eq16 = eq20 = None
        errors.append("oracle_undefined")
    scissors_cfg = ScissorsConfig(drive=drive, bs1=bs, bs2=bs, detectors=DetectorSpec(eta))
    try:
        s_res, t_res, fid_e2e = full_pipeline(scissors_cfg)
        row.fid_scissors_numeric = s_res.fidelity
        row.fid_teleport_numeric = fid_e2e
        row.prob_scissors = s_res.probability
        row.prob_teleport = t_res.probability
        row.truncation_error = s_res.diagnostics["truncation_error"]
        if eq16 is not None:
            row.abs_diff_16 = abs(s_res.fidelity - eq16.value)
            row.abs_diff_20 = abs(fid_e2e - eq20.value)
    except ImpossibleOutcomeError:
        errors.append("impossible_outcome")
    row.run_error = ";".join(errors)
    return row


def run_sweep(grid: SweepGrid) -> list[ReportRow]:
    """One row per grid point, in deterministic lexicographic grid order."""
    return [
        evaluate_point(eta, gamma, drive, cutoff=grid.cutoff, tail_eps=grid.tail_eps)
        for eta, gamma, drive in grid.points()
    ]


def format_float(value: float) -> str:
    return format(value, FLOAT_FORMAT)


def rows_to_csv(rows: list[ReportRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = []
        for name in CSV_COLUMNS:
            value = getattr(row, name)
            if isinstance(value, float):
                cells.append(format_float(value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_reports(rows: list[ReportRow], out_path: str):
    csv_path = out_path if out_path.endswith(".csv") else out_path + ".csv"
    json_path = csv_path[:-4] + ".json"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(rows_to_csv(rows))
    payload = {"columns": CSV_COLUMNS, "rows": [asdict(r) for r in rows]}
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def _result_payload(kind: str, result, settings: RunSettings) -> dict:
    return {
        "kind": kind,
        "eta": settings.eta,
        "gamma_bs": settings.gamma_bs,
        "drive_gamma": [settings.drive_gamma.real, settings.drive_gamma.imag],
        "clicks": list(settings.clicks),
        "probability": result.probability,
        "fidelity": result.fidelity,
        "diagnostics": result.diagnostics,
        "conditional_state": result.state.to_json_dict(),
        "target": result.target.to_json_dict(),
    }


def _cmd_single(kind: str, settings: RunSettings) -> int:
    if kind == "scissors":
        cfg = ScissorsConfig(
            drive=settings.drive(),
            bs1=settings.beam_splitter(),
            bs2=settings.beam_splitter(),
            detectors=settings.detector(),
            clicks=settings.clicks,
        )
        result = run_scissors(cfg)
    else:
        qubit = settings.input_qubit
        if qubit is None:
            drive = settings.drive()
            norm = math.sqrt(drive.qubit_norm_sq)
            qubit = QubitAmplitudes(drive.amp0 / norm, drive.amp1 / norm)
        cfg = TeleportConfig(
            input_state=qubit,
            bs1=settings.beam_splitter(),
            bs2=settings.beam_splitter(),
            detectors=settings.detector(),
            clicks=settings.clicks,
        )
        result = run_teleport(cfg)
    payload = _result_payload(kind, result, settings)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if settings.out:
        with open(settings.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    print(
        f"{kind}: eta={format_float(settings.eta)} gamma={format_float(settings.gamma_bs)} "
        f"probability={format_float(result.probability)} fidelity={format_float(result.fidelity)}"
    )
    if not 0.0 <= result.probability <= 1.0 or not 0.0 <= result.fidelity <= 1.0:
        return 1
    return 0


def _cmd_pipeline(settings: RunSettings) -> int:
    row = evaluate_point(
        settings.eta,
        settings.gamma_bs,
        abs(settings.drive_gamma),
        cutoff=settings.cutoff,
        tail_eps=settings.tail_eps,
    )
    rows = [row]
    if settings.out:
        write_reports(rows, settings.out)
    print(rows_to_csv(rows), end="")
    return 1 if row.has_violation() else 0


def _cmd_sweep(grid: SweepGrid, out: str | None) -> int:
    rows = run_sweep(grid)
    if out:
        csv_path, json_path = write_reports(rows, out)
        print(f"wrote {csv_path} and {json_path} ({len(rows)} rows)")
    else:
        print(rows_to_csv(rows), end="")
    return 1 if any(r.has_violation() for r in rows) else 0


def _cmd_bell_check() -> int:
    spec = BeamSplitterSpec.ideal_5050()
    images = bs_action_on_bell(spec)
    assignment = bell_click_assignment(spec)
    print("Bell state mapping through the balanced splitter (t=1/sqrt2, r=i/sqrt2):")
    print(f"{'state':<10} {'click pattern':<14} {'norm':<16} image components")
    violation = False
    for label, img in images.items():
        pattern = assignment[label]
        pattern_text = f"({pattern[0]},{pattern[1]})" if pattern else "mixed"
        norm = img.norm()
        if abs(norm - 1.0) > 1e-12:
            violation = True
        parts = []
        for occ, amp in zip(img.register.occupations(), img.amplitudes):
            if abs(amp) > 1e-12:
                parts.append(f"({amp.real:+.4f}{amp.imag:+.4f}i)|{occ[0]}{occ[1]}>")
        print(f"{label:<10} {pattern_text:<14} {format_float(norm):<16} " + " + ".join(parts))
    exact = assignment.get("psi_plus") == (1, 0) and assignment.get("psi_minus") == (0, 1)
    print(
        "resolved assignment: psi_plus <-> (1,0) click carries the unmodified input; "
        "psi_minus <-> (0,1) click carries the phase-flipped input"
        if exact
        else "WARNING: unexpected assignment"
    )
    return 1 if (violation or not exact) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qscissors",
        description="Simulate the zero/one-photon scissors teleporter and compare with closed-form oracles",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("scissors", "teleport", "pipeline", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file or inline JSON object")
        p.add_argument("--eta", type=float, help="detector efficiency in [0, 1]")
        p.add_argument("--gamma", type=float, help="beam-splitter damping in [0, 1)")
        p.add_argument("--drive", type=float, help="coherent drive amplitude |gamma|")
        p.add_argument("--ratio", type=float, help="target weight ratio R (sets drive to 1/sqrt(R))")
        p.add_argument("--cutoff", type=int, help="drive photon-number cutoff (default: auto)")
        p.add_argument("--out", help="report output path")
        if name == "teleport":
            p.add_argument("--input-c0", type=float, help="input qubit amplitude c0")
            p.add_argument("--input-c1", type=float, help="input qubit amplitude c1")
    sub.add_parser("bell-check")
    return parser


def _merge_cli_settings(args) -> RunSettings:
    cfg = parse_config(args.config) if args.config else parse_config({})
    settings = settings_from_config(cfg)
    updates = {}
    if args.eta is not None:
        updates["eta"] = _check_range(args.eta, "eta", 0.0, 1.0)
    if args.gamma is not None:
        updates["gamma_bs"] = _check_range(args.gamma, "gamma_bs", 0.0, 1.0, open_high=True)
    if args.drive is not None and args.ratio is not None:
        raise ConfigError("give either --drive or --ratio, not both")
    if args.drive is not None:
        if args.drive <= 0:
            raise ConfigError("drive: amplitude must be positive")
        updates["drive_gamma"] = complex(args.drive)
    if args.ratio is not None:
        if args.ratio <= 0:
            raise ConfigError("ratio: must be positive")
        updates["drive_gamma"] = complex(1.0 / math.sqrt(args.ratio))
    if args.cutoff is not None:
        if args.cutoff < 1:
            raise ConfigError("cutoff: must be a positive integer")
        updates["cutoff"] = args.cutoff
    if args.out is not None:
        updates["out"] = args.out
    c0 = getattr(args, "input_c0", None)
    c1 = getattr(args, "input_c1", None)
    if c0 is not None or c1 is not None:
        c0 = 1.0 if c0 is None else c0
        c1 = 0.0 if c1 is None else c1
        norm = math.sqrt(c0**2 + c1**2)
        if norm == 0:
            raise ConfigError("input: c0 and c1 cannot both vanish")
        updates["input_qubit"] = QubitAmplitudes(c0 / norm, c1 / norm)
    if updates:
        settings = RunSettings(**{**_settings_dict(settings), **updates})
    return settings


def _settings_dict(settings: RunSettings) -> dict:
    return {f.name: getattr(settings, f.name) for f in fields(RunSettings)}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bell-check":
            return _cmd_bell_check()
        if args.command == "sweep":
            cfg = parse_config(args.config) if args.config else parse_config({})
            grid = cfg["sweep"]
            if grid is None:
                overrides = {}
                if args.eta is not None:
                    overrides["eta"] = [args.eta]
                if args.gamma is not None:
                    overrides["gamma_bs"] = [args.gamma]
                if args.drive is not None:
                    overrides["drive"] = [args.drive]
                grid = SweepGrid(
                    eta=overrides.get("eta", DEFAULT_SWEEP["eta"]),
                    gamma_bs=overrides.get("gamma_bs", DEFAULT_SWEEP["gamma_bs"]),
                    drive=overrides.get("drive", DEFAULT_SWEEP["drive"]),
                    cutoff=args.cutoff,
                )
            out = args.out if args.out is not None else cfg["out"]
            return _cmd_sweep(grid, out)
        settings = _merge_cli_settings(args)
        if args.command == "pipeline":
            return _cmd_pipeline(settings)
        return _cmd_single(args.command, settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
