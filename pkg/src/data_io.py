"""
Reading input files and writing reports
Every delimited file is validated row by row through a pydantic row model so problems are
reported with the file and 1-based line they came from.
"""

import csv
import io
import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, TextIO, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from cost_model import CostAreaTable
from efficiency_curves import CurvePack, CurveSample, EfficiencyCurve
from errors import InputFormatError, PdnError, TopologyError
from flexwatts import RESIDENCY_COLUMNS, TracePhase
from pdn_core import DomainLoad, PdnTopology, validate_topology
from perf_budget import PowerFrequencyCurve, WorkloadDescriptor, pf_curves_from_rows
from platform_model import LoadPoint, LoadsModel, PowerStateModel, StateShare
from schemas import CostRow, CurveRow, LoadRow, PfRow, PowerStateRow, RunConfig, TraceRow, WorkloadRow
from topologies import ALL_DOMAINS, load_topology

logger = logging.getLogger("pdnspot.io")

PathLike = Union[str, Path]
Row = TypeVar("Row", bound=BaseModel)

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
DEFAULT_CONFIG = REPO_ROOT / "config" / "default.json"
DEFAULT_CURVE_FILES = {"offchip": DATA_DIR / "curves" / "offchip.csv", "ivr": DATA_DIR / "curves" / "ivr.csv"}


def _first_error(exc: ValidationError) -> str:
    first = exc.errors()[0]
    where = ".".join(str(part) for part in first["loc"])
    return f"{where}: {first['msg']}" if where else first["msg"]


def read_rows(path: PathLike, model: Type[Row]) -> Iterator[Tuple[int, Row]]:
    """Yield (line, row) pairs; the header is line 1"""
    path = Path(path)
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise InputFormatError(f"cannot read file: {exc.strerror}", file=str(path)) from exc
    with handle:
        reader = csv.DictReader(handle)
        if not reader.fieldnames:
            raise InputFormatError("file is empty", file=str(path), line=1)
        for record in reader:
            line = reader.line_num
            if None in record:
                raise InputFormatError("row has more fields than the header", file=str(path), line=line)
            values = {k.strip(): v.strip() for k, v in record.items() if v is not None and v.strip() != ""}
            try:
                yield line, model.model_validate(values)
            except ValidationError as exc:
                raise InputFormatError(_first_error(exc), file=str(path), line=line) from exc


def load_curve(path: PathLike, name: Optional[str] = None) -> EfficiencyCurve:
    path = Path(path)
    samples = [CurveSample(r.vin_V, r.vout_V, r.iout_A, r.power_state, r.eta) for _, r in read_rows(path, CurveRow)]
    try:
        curve = EfficiencyCurve.from_samples(name or path.stem, samples)
    except ValueError as exc:
        raise InputFormatError(str(exc), file=str(path)) from exc
    logger.debug("loaded curve %s with %d samples", curve.name, len(samples))
    return curve


def load_curve_pack(files: Mapping[str, PathLike]) -> Dict[str, EfficiencyCurve]:
    return {name: load_curve(path, name) for name, path in files.items()}


@lru_cache(maxsize=1)
def default_curve_pack() -> Dict[str, EfficiencyCurve]:
    return load_curve_pack(DEFAULT_CURVE_FILES)


def load_loads_model(path: PathLike) -> LoadsModel:
    points = [LoadPoint(r.wl_type, r.tdp_W, r.domain, r.pnom_W, r.vnom_V) for _, r in read_rows(path, LoadRow)]
    try:
        return LoadsModel(points)
    except ValueError as exc:
        raise InputFormatError(str(exc), file=str(path)) from exc


def load_power_state_model(path: PathLike) -> PowerStateModel:
    shares = [StateShare(r.state, r.p_state_W, r.domain, r.share, r.vnom_V, r.ar)
              for _, r in read_rows(path, PowerStateRow)]
    try:
        return PowerStateModel(shares)
    except ValueError as exc:
        raise InputFormatError(str(exc), file=str(path)) from exc


def load_pf_curves(path: PathLike) -> Dict[str, PowerFrequencyCurve]:
    rows = [(r.tdp_W, r.domain, r.freq_GHz, r.mw_per_percent) for _, r in read_rows(path, PfRow)]
    try:
        return pf_curves_from_rows(rows)
    except ValueError as exc:
        raise InputFormatError(str(exc), file=str(path)) from exc


def load_workloads(path: PathLike) -> List[WorkloadDescriptor]:
    return [WorkloadDescriptor(r.name, r.type, r.ar, r.scalability) for _, r in read_rows(path, WorkloadRow)]


def load_cost_table(path: PathLike) -> CostAreaTable:
    rows = [(r.vr_class, r.icc_max_A, r.cost, r.area_mm2) for _, r in read_rows(path, CostRow)]
    try:
        return CostAreaTable.from_rows(rows)
    except ValueError as exc:
        raise InputFormatError(str(exc), file=str(path)) from exc


def _explicit_loads(extra: Mapping[str, Any], domains: Sequence[str], ar: float, path: Path,
                    line: int) -> Optional[Tuple[DomainLoad, ...]]:
    columns = {k.lower(): v for k, v in extra.items()}
    present = [d for d in domains if f"pnom_{d.lower()}_w" in columns or f"vnom_{d.lower()}_v" in columns]
    if not present:
        return None
    loads = []
    for domain in domains:
        p_key, v_key = f"pnom_{domain.lower()}_w", f"vnom_{domain.lower()}_v"
        if p_key not in columns or v_key not in columns:
            raise InputFormatError(f"per-domain columns must cover every domain, {domain} is missing",
                                   file=str(path), line=line)
        try:
            loads.append(DomainLoad(domain, float(columns[p_key]), float(columns[v_key]), ar=ar))
        except ValueError as exc:
            raise InputFormatError(f"{domain}: {exc}", file=str(path), line=line) from exc
    return tuple(loads)


def load_trace(path: PathLike, domains: Sequence[str] = ALL_DOMAINS) -> List[TracePhase]:
    path = Path(path)
    phases = []
    for line, row in read_rows(path, TraceRow):
        residencies = {state: getattr(row, column) for state, column in RESIDENCY_COLUMNS.items()}
        loads = _explicit_loads(row.model_extra or {}, domains, row.ar, path, line)
        try:
            phases.append(TracePhase(row.duration_s, row.wl_type, row.ar, residencies, row.tdp_W, loads))
        except PdnError as exc:
            raise InputFormatError(exc.message, file=str(path), line=line, code=exc.code) from exc
        except ValueError as exc:
            raise InputFormatError(str(exc), file=str(path), line=line) from exc
    return phases


def load_config(path: PathLike = DEFAULT_CONFIG) -> RunConfig:
    """Read a run configuration; file paths inside it are relative to the config file"""
    path = Path(path)
    try:
        with open(path) as f:
            document = json.load(f)
    except OSError as exc:
        raise InputFormatError(f"cannot read config: {exc.strerror}", file=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"malformed JSON: {exc.msg}", file=str(path), line=exc.lineno) from exc
    try:
        config = RunConfig.model_validate(document)
    except ValidationError as exc:
        raise InputFormatError(_first_error(exc), file=str(path)) from exc

    base = path.resolve().parent

    def resolve(p: Optional[str]) -> Optional[str]:
        return None if p is None else str((base / p).resolve())

    return config.model_copy(update={
        "topologies": [resolve(p) for p in config.topologies],
        "curve_pack": {name: resolve(p) for name, p in config.curve_pack.items()},
        "loads_table": resolve(config.loads_table),
        "power_states": resolve(config.power_states),
        "pf_curves": resolve(config.pf_curves),
        "workloads": resolve(config.workloads),
        "cost_table": resolve(config.cost_table),
        "trace": resolve(config.trace),
        "out_dir": resolve(config.out_dir),
        "log_file": resolve(config.log_file),
    })


def load_validated_topology(path: PathLike) -> PdnTopology:
    try:
        return validate_topology(load_topology(path))
    except TopologyError as exc:
        exc.file = str(path)
        raise


@dataclass
class Inputs:
    """Everything a run needs, loaded from a RunConfig"""
    topologies: List[PdnTopology]
    curves: CurvePack
    loads: LoadsModel
    power_states: PowerStateModel
    pf_curves: Dict[str, PowerFrequencyCurve]
    workloads: List[WorkloadDescriptor]
    cost_table: CostAreaTable


def load_inputs(config: RunConfig) -> Inputs:
    return Inputs(
        topologies=[load_validated_topology(p) for p in config.topologies],
        curves=load_curve_pack(config.curve_pack),
        loads=load_loads_model(config.loads_table),
        power_states=load_power_state_model(config.power_states),
        pf_curves=load_pf_curves(config.pf_curves),
        workloads=load_workloads(config.workloads),
        cost_table=load_cost_table(config.cost_table),
    )


def format_value(value: Any) -> str:
    """Cell text for a report value; floats use their shortest round-trip form"""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return {(k.value if isinstance(k, Enum) else k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def render_rows(rows: Sequence[Mapping[str, Any]]) -> str:
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row.get(k)) for k in header])
    return buffer.getvalue()


def render_document(document: Any) -> str:
    return json.dumps(_plain(document), indent=2) + "\n"


def parse_report_row(header: str, line: str) -> Dict[str, Any]:
    """Read one emitted report row back into a dict keyed in header order"""
    names = next(csv.reader([header]))
    cells = next(csv.reader([line]))
    if len(names) != len(cells):
        raise InputFormatError(f"row has {len(cells)} fields, header has {len(names)}")
    return {name: _parse_cell(cell) for name, cell in zip(names, cells)}


def _parse_cell(cell: str) -> Any:
    if cell == "":
        return None
    if cell in ("true", "false"):
        return cell == "true"
    for convert in (int, float):
        try:
            return convert(cell)
        except ValueError:
            continue
    return cell


def emit(text: str, out_dir: Optional[PathLike], name: str, stream: TextIO) -> Optional[Path]:
    """Write report text into out_dir/name, or to stream when there is no directory"""
    if out_dir is None:
        stream.write(text)
        return None
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    path = target / name
    path.write_text(text)
    logger.info("wrote %s", path)
    return path
