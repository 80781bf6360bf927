"""Command-line front end.

Every subcommand reads its parameters from flags and an optional JSON config
(blocks named after modules; flags win), prints a short text summary and
writes a JSON document (plus CSV for tabular results).  Output goes to
``--output``, else to ``$RYDCLUSTER_OUTPUT_DIR/<command>.json``, else the
JSON is printed on stdout and the summary on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import budget, cluster, gate_blockade, gate_noblockade, lattice, ramps
from . import io as rio
from .errors import ContractError, DomainError, ParameterError
from .params import RB87_HYPERFINE_MHZ, InteractionParams, PulseParams

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_DOMAIN = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class Option:
    block: str
    name: str
    default: object
    kind: object = float
    help: str = ""
    choices: tuple | None = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


LATTICE = [
    Option("lattice", "V0", 100.0, help="short-lattice depth (E_R)"),
    Option("lattice", "V1", 100.0, help="long-lattice depth (E_R)"),
    Option("lattice", "phi", 0.0, help="relative phase (rad)"),
    Option("lattice", "k", 1.0, help="wavevector (units of k1)"),
    Option("lattice", "E_R_kHz", 3.5, help="recoil energy (kHz)"),
    Option("lattice", "n_max", lattice.DEFAULT_N_MAX, int, "plane-wave cutoff N_max"),
    Option("lattice", "q_points", lattice.DEFAULT_Q_POINTS, int, "quasi-momentum grid size"),
    Option("lattice", "n_bands", 4, int, "number of bands"),
    Option("lattice", "coupling", "physical", str, "Fourier coupling convention",
           tuple(lattice.COUPLING_DIVISORS)),
]


def _pulse(omega_eff, V_int):
    return [
        Option("pulse", "Omega_eff", omega_eff, help="effective Rabi frequency Omega1*Omega2/Delta (MHz)"),
        Option("pulse", "Delta", 4.0e4, help="intermediate detuning (MHz)"),
        Option("pulse", "Delta_hf", RB87_HYPERFINE_MHZ, help="hyperfine splitting (MHz)"),
        Option("pulse", "photon_order", 2, int, "photon order of the drive", (1, 2, 4)),
        Option("pulse", "rabi_offset", 0.0, help="relative Rabi-frequency error"),
        Option("pulse", "drive_ratio", 1.0, help="local drive amplitude relative to the maximum"),
        Option("interaction", "V_int", V_int, help="pair interaction (MHz)"),
        Option("interaction", "gamma", 0.0, help="Rydberg decay rate (1/s)"),
        Option("interaction", "power", 6, int, "interaction power law", (3, 6)),
    ]


COMMANDS = {
    "bands": LATTICE,
    "wannier": LATTICE + [Option("lattice", "cell", 0, int, "home-cell index")],
    "ramp": [
        Option("schedule", "E_R_kHz", 3.5, help="recoil energy (kHz)"),
        Option("schedule", "split_us", [250.0, 100.0, 250.0], _floats, "segment durations (us)"),
        Option("schedule", "V0_high", 100.0, help="V0 at start and end (E_R)"),
        Option("schedule", "V0_low", 20.0, help="V0 during the phase ramp (E_R)"),
        Option("schedule", "V1", 100.0, help="long-lattice depth (E_R)"),
        Option("schedule", "scale", 1.0, help="duration scale factor"),
        Option("schedule", "n_tracked", 4, int, "bands reported"),
        Option("schedule", "scales", [], _floats, "comma-separated scales for an adiabaticity scan"),
        Option("schedule", "tune", False, _bool, "tune the duration scale before the final run"),
    ],
    "stretch": [
        Option("stretch", "duration", 16.0, help="ramp duration (1/E_R)"),
        Option("stretch", "k_start", 2.0, help="initial k (units of k1)"),
        Option("stretch", "k_end", 0.4, help="final k (units of k1)"),
        Option("stretch", "V1", 100.0, help="lattice depth (E_R)"),
        Option("stretch", "E_R_kHz", 3.5, help="recoil energy (kHz)"),
    ],
    "gate-noblockade": _pulse(30.0, 3.0),
    "gate-blockade": _pulse(0.04, 50.0) + [
        Option("pulse", "Delta_vec_kHz", 200.0, help="vector shift between the pair (kHz)"),
    ],
    "error-budget": [
        Option("budget", "preset", "all", str, "preset name or 'all'", ("all", *budget.PRESETS)),
    ],
    "timing": [
        Option("timing", "scheme", "all", str, "protocol", ("all", *budget.SCHEMES)),
        Option("timing", "dimension", 0, int, "1, 2 or 0 for both", (0, 1, 2)),
    ],
    "cluster": [
        Option("cluster", "geometry", "1d:6", str, "1d:N or 2d:RxC"),
        Option("cluster", "gate", "ideal", str, "gate source", ("ideal", "realized", "noblockade")),
    ],
}
VERIFY_COMMANDS = {"gate-noblockade", "gate-blockade", "error-budget"}
SCAN_COMMANDS = {"ramp"}
TABULAR = {"bands", "wannier", "ramp", "stretch", "timing"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rydcluster", description="Rydberg cluster-state toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, options in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config; flags override its values")
        p.add_argument("--output", type=Path, help="output file or directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--save-config", type=Path, help="write the effective config and exit")
        p.add_argument("--reproducible", action="store_true", help="omit the timestamp from the header")
        if name in VERIFY_COMMANDS:
            p.add_argument("--verify", action="store_true", help="print the analytic-vs-numeric table")
        if name in SCAN_COMMANDS:
            p.add_argument("--jobs", type=int, default=1, help="parallel workers for scans")
        for opt in options:
            p.add_argument(opt.flag, dest=opt.name, type=opt.kind, default=None, choices=opt.choices,
                           help=f"{opt.help} [default: {opt.default}]")
    return parser


def _load_config(path: Path | None, options) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    known = {(o.block, o.name): o for o in options}
    blocks = {o.block for o in options}
    values = {}
    for block, entries in data.items():
        if block in ("command", "meta"):
            continue
        if block not in blocks or not isinstance(entries, dict):
            raise UsageError(f"config block {block!r} does not apply to this command")
        for key, value in entries.items():
            opt = known.get((block, key))
            if opt is None:
                raise UsageError(f"unknown config key {block}.{key}")
            try:
                values[key] = opt.kind(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise ParameterError(f"bad value for {block}.{key}: {exc}") from None
            if opt.choices and values[key] not in opt.choices:
                raise ParameterError(f"{block}.{key} must be one of {opt.choices}")
    return values


def effective_config(command: str, args) -> dict:
    """Nested {block: {name: value}} after merging defaults, config file and flags."""
    options = COMMANDS[command]
    from_file = _load_config(args.config, options)
    nested = {}
    for opt in options:
        value = getattr(args, opt.name)
        if value is None:
            value = from_file.get(opt.name, opt.default)
        if isinstance(value, float) and not math.isfinite(value):
            raise ParameterError(f"{opt.name} must be finite")
        nested.setdefault(opt.block, {})[opt.name] = value
    return nested


def _flat(config: dict) -> dict:
    return {k: v for block in config.values() for k, v in block.items()}


@dataclass
class Result:
    payload: dict
    summary: str
    table: tuple | None = None  # (header, rows)


# Runners -------------------------------------------------------------------

def _lattice_params(c) -> lattice.LatticeParams:
    return lattice.LatticeParams(c["V0"], c["V1"], c["phi"], c["k"], c["E_R_kHz"])


def run_bands(c, args) -> Result:
    p = _lattice_params(c)
    bs = lattice.solve_bands(p, c["n_bands"], c["q_points"], c["n_max"], c["coupling"])
    splitting = lattice.lowest_two_splitting(p, c["q_points"], c["n_max"], c["coupling"])
    header = ["q"] + [f"E{n + 1}" for n in range(bs.n_bands)]
    rows = np.column_stack([bs.q_grid, bs.energies.T])
    payload = {"q": bs.q_grid, "energies": bs.energies, "lowest_two_splitting": splitting}
    return Result(payload, f"lowest-two splitting: {splitting:.6g} E_R", (header, rows))


def run_wannier(c, args) -> Result:
    p = _lattice_params(c)
    bs = lattice.solve_bands(p, max(2, c["n_bands"]), c["q_points"], c["n_max"], c["coupling"])
    ws = lattice.wannier(bs, c["cell"])
    widths = {name: lattice.wannier_width(ws.x_grid, getattr(ws, name)) for name in ("w1", "w2", "psiL", "psiR")}
    payload = {
        "widths": widths,
        "psiL_weight_left": ws.weight_left(ws.psiL),
        "psiR_weight_right": ws.weight_right(ws.psiR),
        "harmonic_width": lattice.harmonic_width(p),
        "cell_center": ws.cell_center,
    }
    names = ("w1", "w2", "psiL", "psiR")
    header = ["x"] + [f"{n}_{part}" for n in names for part in ("re", "im")]
    columns = [ws.x_grid]
    for n in names:
        columns += [np.real(getattr(ws, n)), np.imag(getattr(ws, n))]
    rows = np.column_stack(columns)
    summary = f"ground Wannier width {widths['w1']:.6g} / k; psiL left weight {payload['psiL_weight_left']:.6g}"
    return Result(payload, summary, (header, rows))


def _ramp_table(report: ramps.RetentionReport):
    header = ["time_us"] + [f"P_band{n + 1}" for n in range(report.band_populations.shape[1])]
    return header, report.rows()


def run_ramp(c, args) -> Result:
    schedule = ramps.merge_schedule(c["E_R_kHz"], tuple(c["split_us"]), c["V0_high"], c["V0_low"], c["V1"],
                                    c["scale"])
    payload = {}
    if c["tune"]:
        tuned = ramps.tune_schedule(schedule, jobs=args.jobs)
        payload["tuning"] = {"scale": tuned.scale, "retention": tuned.retention, "scan": tuned.scan}
        schedule = tuned.schedule
    if c["scales"]:
        payload["scan"] = ramps.adiabaticity_scan(schedule, c["scales"], jobs=args.jobs)
    report = ramps.evolve_bands(schedule, n_tracked=c["n_tracked"])
    payload.update(report.to_dict())
    summary = f"ground-band retention {report.retention:.8f} over {report.total_time:.6g} us"
    return Result(payload, summary, _ramp_table(report))


def run_stretch(c, args) -> Result:
    report = ramps.evolve_stretch(c["duration"], c["k_start"], c["k_end"], c["V1"], c["E_R_kHz"])
    summary = f"ground-band retention {report.retention:.8f} over {report.total_time:.6g} us"
    return Result(report.to_dict(), summary, _ramp_table(report))


def _pulse_params(c) -> PulseParams:
    return PulseParams.from_effective(c["Omega_eff"], c["Delta"], Delta_hf=c["Delta_hf"],
                                      photon_order=c["photon_order"], rabi_offset=c["rabi_offset"],
                                      drive_ratio=c["drive_ratio"])


def _interaction(c) -> InteractionParams:
    return InteractionParams(V_int=c["V_int"], gamma=c["gamma"], power=c["power"])


def _ratio_lines(rows) -> str:
    lines = [f"{'quantity':<34}{'numeric':>16}{'analytic':>16}{'ratio':>12}"]
    for name, num, ana in rows:
        ratio = num / ana if ana else float("nan")
        lines.append(f"{name:<34}{num:>16.8g}{ana:>16.8g}{ratio:>12.6g}")
    return "\n".join(lines)


def run_gate_noblockade(c, args) -> Result:
    p, i = _pulse_params(c), _interaction(c)
    outcome = gate_noblockade.run_gate(p, i)
    payload = {"outcome": outcome.to_dict(), "branch_survival": outcome.branch_norms}
    summary = f"infidelity {outcome.infidelity:.6g}, conditional phase {outcome.phase:.8f} rad"
    if getattr(args, "verify", False):
        ratio = budget.NO_BLOCKADE_DRIVE_RATIO ** p.photon_order
        rows = [
            ("infidelity vs (V/Omega_eff)^2/8", outcome.infidelity,
             budget.interaction_errors(i.V_int, abs(p.Omega_eff), power=i.power)[0]),
            ("|11> survival", outcome.branch_norms["11"],
             gate_noblockade.decay_survival_11(abs(p.Omega_eff), i.V_int, i.gamma)),
            ("inactive <P>", gate_noblockade.run_inactive(p, i, effective_ratio=ratio),
             gate_noblockade.inactive_closed_form(ratio)),
        ]
        table = _ratio_lines(rows)
        payload["verify"] = [{"quantity": n, "numeric": a, "analytic": b} for n, a, b in rows]
        if i.V_int > 0:
            report = gate_noblockade.perturbation_check(p, i)
            payload["perturbation"] = report.to_dict()
            table += f"\nseries check at V/Omega_eff = {report.ratio:.4g}: eigenvalue dev " \
                     f"{report.eigenvalue_deviation:.3g}, overlap dev {report.overlap_deviation:.3g}"
        summary += "\n" + table
    return Result(payload, summary)


def run_gate_blockade(c, args) -> Result:
    p, i = _pulse_params(c), _interaction(c)
    pulse = gate_blockade.BlockadePulse(p, c["Delta_vec_kHz"])
    theta = gate_blockade.theta_check(abs(p.Omega_eff), abs(pulse.Delta_vec_MHz))
    outcome = gate_blockade.run_blockade_gate(pulse, i)
    payload = {
        "outcome": outcome.to_dict(),
        "branch_survival": outcome.branch_norms,
        "theta": theta.to_dict(),
        "local_phase_stripped": gate_blockade.local_phase_stripped(outcome),
    }
    summary = (f"infidelity {outcome.infidelity:.6g}, conditional phase {outcome.phase:.8f} rad, "
               f"theta = {theta.theta / math.pi:.6g} pi ({'ok' if theta.satisfied else 'not 2 pi n'})")
    if getattr(args, "verify", False):
        decay = gate_blockade.decay_survival_analytic(abs(p.Omega_eff), i.gamma)
        ratio = gate_blockade.inactive_ratio(1.0, 1.0)
        rows = [
            ("infidelity vs Omega_eff^2/(2 Dv^2)", outcome.infidelity,
             budget.imperfect_blockade_error(abs(p.Omega_eff), abs(pulse.Delta_vec_MHz))),
            ("|11> survival", outcome.branch_norms["11"], decay["11"]),
            ("|10> survival", outcome.branch_norms["10"], decay["10"]),
            ("|01> survival", outcome.branch_norms["01"], decay["01"]),
            ("inactive <P>",
             gate_blockade.run_blockade_inactive(ratio, p.photon_order, numeric=True,
                                                 Omega_eff=abs(p.Omega_eff), Delta_vec=c["Delta_vec_kHz"],
                                                 Delta=p.Delta, V_int=i.V_int),
             gate_blockade.run_blockade_inactive(ratio, p.photon_order)),
        ]
        payload["verify"] = [{"quantity": n, "numeric": a, "analytic": b} for n, a, b in rows]
        summary += "\n" + _ratio_lines(rows)
    return Result(payload, summary)


def run_error_budget(c, args) -> Result:
    names = list(budget.PRESETS) if c["preset"] == "all" else [c["preset"]]
    budgets = [budget.assemble_table(n) for n in names]
    payload = {b.preset: b.to_dict() for b in budgets}
    summary = budget.format_table(budgets)
    if getattr(args, "verify", False):
        lines, checks = [f"{'preset':<20}{'row':<26}{'computed':>14}{'quoted':>10}  pass"], []
        for b in budgets:
            for row, text in budget.TABLE_I_QUOTED.get(b.preset, {}).items():
                value = budget.budget_value(b, row)
                ok = abs(value - float(text)) <= budget.quoted_tolerance(text)
                checks.append({"preset": b.preset, "row": row, "computed": value, "quoted": text, "pass": ok})
                lines.append(f"{b.preset:<20}{row:<26}{value:>14.4g}{text:>10}  {'yes' if ok else 'NO'}")
        payload["verify"] = checks
        summary += "\n" + "\n".join(lines)
    return Result(payload, summary)


def run_timing(c, args) -> Result:
    schemes = budget.SCHEMES if c["scheme"] == "all" else (c["scheme"],)
    dims = (1, 2) if c["dimension"] == 0 else (c["dimension"],)
    payload, rows, lines = {}, [], []
    for scheme in schemes:
        for dim in dims:
            t = budget.timing(scheme, dim)
            payload[f"{scheme}_{dim}d"] = t.to_dict()
            rows.append([budget.SCHEMES.index(scheme), dim, t.total])
            lines.append(f"{scheme:<12} {dim}D: {t.total:g} us")
    return Result(payload, "\n".join(lines), (["scheme_index", "dimension", "total_us"], rows))


def run_cluster(c, args) -> Result:
    geometry = cluster.Geometry.parse(c["geometry"])
    gate = c["gate"]
    source = gate
    if gate == "noblockade":
        source = gate_noblockade.run_gate(PulseParams.from_effective(30.0, 4.0e4), InteractionParams(V_int=3.0))
    result = cluster.run_protocol(geometry, source)
    schedule = cluster.make_schedule(geometry)
    payload = {
        "geometry": geometry.describe(),
        "rounds": [list(map(list, rnd)) for rnd in schedule.rounds],
        **result.to_dict(),
    }
    summary = (f"{geometry.describe()}: fidelity {result.fidelity:.12g}, min stabilizer "
               f"{result.stabilizers.min():.12g}")
    return Result(payload, summary)


RUNNERS = {
    "bands": run_bands,
    "wannier": run_wannier,
    "ramp": run_ramp,
    "stretch": run_stretch,
    "gate-noblockade": run_gate_noblockade,
    "gate-blockade": run_gate_blockade,
    "error-budget": run_error_budget,
    "timing": run_timing,
    "cluster": run_cluster,
}


def _destination(command: str, output: Path | None, suffix: str) -> Path | None:
    if output is not None:
        if output.suffix:
            return output.with_suffix(suffix)
        return output / f"{command}{suffix}"
    directory = rio.default_output_dir()
    return directory / f"{command}{suffix}" if directory else None


def _emit(command: str, args, config: dict, result: Result) -> None:
    if args.format == "csv" and result.table is None:
        raise ParameterError(f"{command} has no tabular output; use --format json")
    doc = rio.document(result.payload, command, config, timestamp=not args.reproducible)
    target = _destination(command, args.output, "." + args.format)
    if target is None:
        print(result.summary, file=sys.stderr)
        if args.format == "csv":
            sys.stdout.write(rio.csv_text(*result.table))
        else:
            print(rio.payload_text(doc))
        return
    print(result.summary)
    if args.format == "csv":
        rio.write_csv(target, *result.table)
        rio.write_json(target.with_suffix(".json"), doc)
    else:
        rio.write_json(target, doc)
        if result.table is not None:
            rio.write_csv(target.with_suffix(".csv"), *result.table)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        config = effective_config(command, args)
        if args.save_config is not None:
            args.save_config.parent.mkdir(parents=True, exist_ok=True)
            args.save_config.write_text(rio.payload_text({"command": command, **config}) + "\n", encoding="utf-8")
            return EXIT_OK
        result = RUNNERS[command](_flat(config), args)
        _emit(command, args, config, result)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rydcluster: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ContractError) as exc:
        print(f"rydcluster: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except DomainError as exc:
        print(f"rydcluster: numerical domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
