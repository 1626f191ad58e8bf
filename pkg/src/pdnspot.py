#!/usr/bin/env python3
"""
PDNspot command line
  validate  check every input file and topology
  etee      evaluate topologies at one operating point
  sweep     topology x TDP x workload matrix, normalized to a reference
  simulate  run the FlexWatts controller over a trace
  cost      VR BOM and board area, normalized to a reference
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO

from cost_model import estimate_cost_area, icc_max_profile, normalize_costs
from data_io import (DEFAULT_CONFIG, Inputs, emit, load_config, load_cost_table, load_curve, load_inputs,
                     load_loads_model, load_pf_curves, load_power_state_model, load_trace,
                     load_validated_topology, load_workloads, render_document, render_rows)
from errors import PdnError, UnknownTdp
from etee import EteeReport, evaluate
from flexwatts import GridSpec, SimulationPolicy, SwitchLatency, build_etee_table, simulate_trace
from monitoring import EvaluationStats, setup_logging
from parallel_sweep import ParallelEvaluator
from pdn_core import Architecture, FlexMode, PdnTopology, WorkloadType
from perf_budget import WorkloadDescriptor, performance_from_etee, reference_name
from schemas import Diagnostic, RunConfig
from topologies import PRESETS, preset

logger = logging.getLogger("pdnspot.cli")

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1


class PdnSpot:
    """One CLI invocation: a loaded configuration plus where reports go"""

    def __init__(self, config: RunConfig, args: argparse.Namespace, stdout: TextIO, stderr: TextIO):
        self.config = config
        self.args = args
        self.stdout = stdout
        self.stderr = stderr
        self.stats = EvaluationStats()
        self._inputs: Optional[Inputs] = None

    @property
    def inputs(self) -> Inputs:
        if self._inputs is None:
            self._inputs = load_inputs(self.config)
        return self._inputs

    @property
    def report_format(self) -> str:
        return getattr(self.args, "format", None) or self.config.report_format

    @property
    def out_dir(self) -> Optional[str]:
        return getattr(self.args, "out", None) or self.config.out_dir

    def topologies(self) -> List[PdnTopology]:
        names = getattr(self.args, "topology", None)
        if not names:
            return self.inputs.topologies
        return [self._topology(name) for name in names]

    def _topology(self, name: str) -> PdnTopology:
        if name in {a.value for a in PRESETS}:
            return preset(name)
        return load_validated_topology(name)

    def tdps(self) -> List[float]:
        return getattr(self.args, "tdp", None) or list(self.config.tdp_list)

    def ars(self) -> List[float]:
        return getattr(self.args, "ar", None) or list(self.config.ar_list)

    def workload_types(self) -> List[WorkloadType]:
        return [WorkloadType(w) for w in (getattr(self.args, "workload_type", None) or self.config.workload_types)]

    def reference(self) -> str:
        return getattr(self.args, "reference", None) or self.config.reference.value

    def evaluator(self) -> ParallelEvaluator:
        return ParallelEvaluator(self.config.max_workers, self.stats)

    def write(self, name: str, rows: Sequence[Dict[str, Any]], document: Any) -> None:
        if self.report_format == "document":
            emit(render_document(document), self.out_dir, f"{name}.json", self.stdout)
        else:
            emit(render_rows(rows), self.out_dir, f"{name}.csv", self.stdout)

    # commands

    def cmd_validate(self) -> List[Diagnostic]:
        """Load every input independently so one bad file does not hide the next"""
        diagnostics: List[Diagnostic] = []
        config = self.config
        topologies = []

        def check(load: Callable[[], Any]) -> Any:
            try:
                return load()
            except PdnError as exc:
                diagnostics.extend(exc.to_diagnostics())
                return None

        for path in config.topologies:
            found = check(lambda: load_validated_topology(path))
            if found is not None:
                topologies.append((path, found))
        for name, path in config.curve_pack.items():
            check(lambda: load_curve(path, name))
        check(lambda: load_loads_model(config.loads_table))
        check(lambda: load_power_state_model(config.power_states))
        check(lambda: load_pf_curves(config.pf_curves))
        check(lambda: load_workloads(config.workloads))
        check(lambda: load_cost_table(config.cost_table))
        trace = getattr(self.args, "trace", None) or config.trace
        if trace:
            check(lambda: load_trace(trace))

        for path, t in topologies:
            for stage in t.stages():
                if stage.curve is not None and stage.curve not in config.curve_pack:
                    diagnostics.append(Diagnostic(file=str(path), code="EmptyCurve",
                                                  message=f"stage {stage.name} uses curve {stage.curve!r}, "
                                                          f"which the curve pack does not define"))
        return diagnostics

    def cmd_etee(self) -> None:
        loads = self.inputs.loads
        tdp, ar, wl_type = self.tdps()[0], self.ars()[0], self.workload_types()[0]
        mode = FlexMode(self.args.mode) if getattr(self.args, "mode", None) else None
        reports = []
        for t in self.topologies():
            report = evaluate(t, loads.loads(tdp, wl_type, ar, t.domains),
                              mode=mode if t.name == Architecture.FLEXWATTS else None,
                              curves=self.inputs.curves)
            reports.append(report)
        rows = [etee_row(r, tdp, wl_type, ar) for r in reports]
        document = [dict(r.to_dict(), tdp_W=tdp, workload_type=wl_type.value, ar=ar,
                         loss_fractions=r.loss_fractions()) for r in reports]
        self.write("etee", rows, document if len(document) > 1 else document[0])

    def _workload_points(self) -> List[WorkloadDescriptor]:
        if getattr(self.args, "workloads", False):
            return list(self.inputs.workloads)
        return [WorkloadDescriptor(f"{wl_type.value}@{ar}", wl_type, ar)
                for wl_type in self.workload_types() for ar in self.ars()]

    def cmd_sweep(self) -> None:
        topologies = self.topologies()
        loads, curves = self.inputs.loads, self.inputs.curves
        cells = [(tdp, w, t) for tdp in self.tdps() for w in self._workload_points() for t in topologies]

        def run(cell) -> EteeReport:
            tdp, w, t = cell
            return evaluate(t, loads.loads(tdp, w.workload_type, w.ar, t.domains), curves=curves)

        reports = self.evaluator().map_ordered(run, cells)
        reference = reference_name(topologies, self.reference())
        per_point: Dict[Any, Dict[str, EteeReport]] = {}
        for (tdp, w, t), report in zip(cells, reports):
            per_point.setdefault((tdp, w), {})[t.display_name] = report

        rows = []
        for (tdp, w), by_topology in per_point.items():
            etees = {name: r.etee for name, r in by_topology.items()}
            try:
                perf = {p.topology: p.performance for p in performance_from_etee(
                    etees, reference, tdp, w, self.inputs.pf_curves, loads.sa_io_budget(tdp, w.workload_type))}
            except UnknownTdp as exc:
                logger.warning("no performance column at %s W: %s", tdp, exc.message)
                perf = {}
            for name, r in by_topology.items():
                rows.append({
                    "topology": name,
                    "architecture": r.architecture,
                    "mode": r.mode,
                    "tdp_W": float(tdp),
                    "workload": w.name,
                    "wl_type": w.workload_type.value,
                    "ar": w.ar,
                    "scalability": w.scalability,
                    "etee": r.etee,
                    "etee_norm": r.etee / etees[reference],
                    "supply_W": r.supply_power,
                    "performance_norm": perf.get(name),
                })
        self.write("sweep", rows, {"reference": reference, "rows": rows})

    def cmd_cost(self) -> None:
        topologies = self.topologies()
        inputs = self.inputs
        estimates = []
        for tdp in self.tdps():
            for t in topologies:
                profile = icc_max_profile(t, tdp, inputs.loads, inputs.curves)
                estimates.append(estimate_cost_area(profile, inputs.cost_table))
        reference = reference_name(topologies, self.reference())
        ratios = normalize_costs(estimates, reference)
        rows = [{
            "topology": r.topology,
            "tdp_W": float(r.tdp),
            "class": r.vr_class.value,
            "bom": r.bom,
            "area_mm2": r.area,
            "bom_ratio": r.bom_ratio,
            "area_ratio": r.area_ratio,
        } for r in ratios]
        document = {
            "reference": reference,
            "rows": rows,
            "rails": [{"topology": e.topology, "tdp_W": float(e.tdp),
                       "items": [vars(i) for i in e.items]} for e in estimates],
        }
        self.write("cost", rows, document)

    def cmd_simulate(self) -> None:
        trace_path = getattr(self.args, "trace", None) or self.config.trace
        if not trace_path:
            raise ValueError("simulate needs a trace (--trace or the config's trace entry)")
        flexwatts = [t for t in self.topologies() if t.name == Architecture.FLEXWATTS]
        if not flexwatts:
            raise ValueError("simulate needs a FlexWatts topology")
        t = flexwatts[0]
        inputs = self.inputs
        sim = self.config.simulation
        grid = GridSpec(tuple(self.config.grid.tdp), tuple(self.config.grid.ar))
        table = build_etee_table(t, inputs.loads, grid, inputs.power_states, inputs.curves, self.evaluator())
        trace = load_trace(trace_path, t.domains)
        report = simulate_trace(
            trace, table, t, inputs.loads, inputs.power_states,
            latency=SwitchLatency(sim.latency.enter_c6_s, sim.latency.vr_adjust_s, sim.latency.exit_c6_s),
            policy=SimulationPolicy(sim.interval_s, sim.hysteresis, sim.min_dwell_s, sim.absorb_into_idle),
            curves=inputs.curves,
            default_tdp=sim.tdp,
        )
        intervals = [{
            "start_s": r.start,
            "end_s": r.end,
            "phase": r.phase,
            "mode": r.mode.value,
            "oracle_mode": r.oracle_mode.value,
            "energy_J": r.energy,
            "switched": r.switched,
        } for r in report.intervals]
        summary = report.summary()
        if self.report_format == "document":
            emit(render_document({"summary": summary, "intervals": intervals}), self.out_dir,
                 "simulate.json", self.stdout)
            return
        summary_rows = [{"metric": k, "value": v} for k, v in summary.items()]
        if self.out_dir is None:
            emit(render_rows(intervals) + "\n" + render_rows(summary_rows), None, "", self.stdout)
        else:
            emit(render_rows(intervals), self.out_dir, "simulate_intervals.csv", self.stdout)
            emit(render_rows(summary_rows), self.out_dir, "simulate_summary.csv", self.stdout)


def etee_row(report: EteeReport, tdp: float, wl_type: WorkloadType, ar: float) -> Dict[str, Any]:
    row = {
        "topology": report.topology,
        "architecture": report.architecture,
        "mode": report.mode,
        "package_state": report.package_state,
        "tdp_W": float(tdp),
        "wl_type": WorkloadType(wl_type).value,
        "ar": ar,
        "nominal_W": report.nominal_power,
        "supply_W": report.supply_power,
        "etee": report.etee,
    }
    row.update({f"{k}_W": v for k, v in report.losses.to_dict().items()})
    row["extrapolated"] = len(report.extrapolated)
    return row


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdnspot", description="PDN efficiency and FlexWatts analysis")
    parser.add_argument('--config', type=str, default=str(DEFAULT_CONFIG), help='Run configuration (JSON)')
    parser.add_argument('--log-level', type=str, help='Logging level, overrides the config')
    sub = parser.add_subparsers(dest="command", required=True)

    def outputs(p: argparse.ArgumentParser) -> None:
        p.add_argument('--out', type=str, help='Report directory (stdout when omitted)')
        p.add_argument('--format', choices=["rows", "document"], help='Report format')

    def selection(p: argparse.ArgumentParser) -> None:
        p.add_argument('--topology', action='append', help='Preset name or topology TOML, repeatable')
        p.add_argument('--tdp', type=float, action='append', help='TDP in W, repeatable')

    p = sub.add_parser("validate", help="check inputs and report diagnostics")
    p.add_argument('--trace', type=str, help='Also check this trace')

    p = sub.add_parser("etee", help="evaluate ETEE at one operating point")
    selection(p)
    p.add_argument('--ar', type=float, action='append', help='Application ratio')
    p.add_argument('--workload-type', choices=[w.value for w in WorkloadType], action='append')
    p.add_argument('--mode', choices=[m.value for m in FlexMode], help='Force a FlexWatts mode')
    outputs(p)

    p = sub.add_parser("sweep", help="topology x TDP x workload sweep")
    selection(p)
    p.add_argument('--ar', type=float, action='append', help='Application ratio, repeatable')
    p.add_argument('--workload-type', choices=[w.value for w in WorkloadType], action='append')
    p.add_argument('--workloads', action='store_true', help='Sweep the workload manifest instead')
    p.add_argument('--reference', type=str, help='Normalization reference topology')
    outputs(p)

    p = sub.add_parser("simulate", help="FlexWatts mode switching over a trace")
    p.add_argument('--topology', action='append', help='FlexWatts preset or topology TOML')
    p.add_argument('--trace', type=str, help='Trace file')
    outputs(p)

    p = sub.add_parser("cost", help="VR BOM and board area")
    selection(p)
    p.add_argument('--reference', type=str, help='Normalization reference topology')
    outputs(p)
    return parser


def _check_ranges(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    for tdp in getattr(args, "tdp", None) or []:
        if not 1.0 <= tdp <= 200.0:
            parser.error(f"--tdp {tdp} is outside [1, 200] W")
    for ar in getattr(args, "ar", None) or []:
        if not 0.0 < ar <= 1.0:
            parser.error(f"--ar {ar} is outside (0, 1]")


def _report(diagnostics: Sequence[Diagnostic], stderr: TextIO) -> None:
    for d in diagnostics:
        stderr.write(d.render() + "\n")


def main(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_ranges(args, parser)

    try:
        config = load_config(Path(args.config))
    except PdnError as exc:
        _report(exc.to_diagnostics(), stderr)
        return EXIT_DIAGNOSTICS

    setup_logging(args.log_level or config.log_level, config.log_file)
    app = PdnSpot(config, args, stdout, stderr)
    logger.info("running %s with %s", args.command, args.config)

    try:
        if args.command == "validate":
            diagnostics = app.cmd_validate()
            _report(diagnostics, stderr)
            return EXIT_DIAGNOSTICS if diagnostics else EXIT_OK
        commands = {
            "etee": app.cmd_etee,
            "sweep": app.cmd_sweep,
            "simulate": app.cmd_simulate,
            "cost": app.cmd_cost,
        }
        commands[args.command]()
    except PdnError as exc:
        _report(exc.to_diagnostics(), stderr)
        return EXIT_DIAGNOSTICS
    except (ValueError, KeyError) as exc:
        _report([Diagnostic(code="InvalidInput", message=str(exc))], stderr)
        return EXIT_DIAGNOSTICS
    finally:
        logger.info("evaluation stats: %s", app.stats.summary())

    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
