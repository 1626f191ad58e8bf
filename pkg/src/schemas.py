"""
Pydantic models for configuration, data-file rows and diagnostics
"""
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from pdn_core import Architecture, PackagePowerState, VrKind, VrPowerState, WorkloadType


class GridConfig(BaseModel):
    tdp: List[float] = Field(default=[4, 6, 8, 10, 15, 18, 25, 35, 44, 50],
                             description="TDP axis of the FlexWatts ETEE table (W)")
    ar: List[float] = Field(default=[round(0.05 * k, 2) for k in range(1, 21)],
                            description="Application-ratio axis of the FlexWatts ETEE table")

    @field_validator("tdp", "ar")
    @classmethod
    def strictly_increasing(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("grid axis must not be empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("grid axis must be strictly increasing")
        return v


class LatencyConfig(BaseModel):
    enter_c6_s: float = Field(default=45e-6, ge=0, description="Time to put the package into C6")
    vr_adjust_s: float = Field(default=19e-6, ge=0, description="Time to move the input rail to the new mode voltage")
    exit_c6_s: float = Field(default=30e-6, ge=0, description="Time to wake from C6")


class SimulationConfig(BaseModel):
    interval_s: float = Field(default=0.01, gt=0, description="Mode evaluation interval")
    hysteresis: bool = Field(default=True, description="Switch only when the predicted saving beats the switch cost")
    min_dwell_s: float = Field(default=0.0, ge=0, description="Minimum time between two switches")
    absorb_into_idle: bool = Field(default=False, description="Hide the switch latency in existing idle time")
    tdp: float = Field(default=4.0, gt=0, description="TDP for trace phases without a tdp_W column")
    latency: LatencyConfig = Field(default_factory=LatencyConfig)


class RunConfig(BaseModel):
    topologies: List[str] = Field(..., min_length=1, description="Topology TOML files")
    curve_pack: Dict[str, str] = Field(..., description="Curve name to efficiency CSV")
    loads_table: str = Field(..., description="Per-domain operating points by TDP and workload type")
    power_states: str = Field(..., description="Package power-state operating points")
    pf_curves: str = Field(..., description="Power-frequency curves")
    workloads: str = Field(..., description="Workload manifest")
    cost_table: str = Field(..., description="Icc_max to cost/area table")
    trace: Optional[str] = Field(default=None, description="Workload trace for simulate")
    tdp_list: List[float] = Field(default=[4, 18, 50], description="TDPs swept by sweep and cost")
    ar_list: List[float] = Field(default=[0.56], description="Application ratios swept by sweep")
    workload_types: List[WorkloadType] = Field(default=[WorkloadType.MULTI_THREAD])
    reference: Architecture = Field(default=Architecture.IVR, description="Normalization reference")
    out_dir: Optional[str] = Field(default=None, description="Report directory; stdout when unset")
    report_format: Literal["rows", "document"] = Field(default="rows")
    grid: GridConfig = Field(default_factory=GridConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    max_workers: int = Field(default=4, ge=1)
    log_level: str = Field(default="WARNING")
    log_file: Optional[str] = Field(default=None)

    @field_validator("tdp_list")
    @classmethod
    def tdp_in_range(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("tdp_list must not be empty")
        for tdp in v:
            if not 1.0 <= tdp <= 200.0:
                raise ValueError(f"TDP {tdp} W outside [1, 200] W")
        return v

    @field_validator("ar_list")
    @classmethod
    def ar_in_range(cls, v: List[float]) -> List[float]:
        if not v or any(not 0.0 < ar <= 1.0 for ar in v):
            raise ValueError("ar_list entries must be within (0, 1]")
        return v

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "topologies": ["../data/topologies/ivr.toml"],
                "curve_pack": {"offchip": "../data/curves/offchip.csv", "ivr": "../data/curves/ivr.csv"},
                "loads_table": "../data/loads.csv",
                "power_states": "../data/power_states.csv",
                "pf_curves": "../data/pf_curves.csv",
                "workloads": "../data/workloads.csv",
                "cost_table": "../data/cost_table.csv",
                "tdp_list": [4, 18, 50],
                "reference": "IVR",
            }
        },
    )


class TopologyHeader(BaseModel):
    name: Architecture
    v_in: Optional[float] = None
    v_supply: float = 7.2
    t_junction: Optional[float] = Field(default=None, description="Junction temperature annotation (C)")
    label: Optional[str] = None

    model_config = ConfigDict(extra="forbid")


class StageSection(BaseModel):
    kind: VrKind
    curve: Optional[str] = None
    v_tob: float = 0.0
    r_ll: float = 0.0
    r_pg: float = 0.0
    icc_max: float = 100.0
    i_effi: Optional[float] = None
    ldo_v_tob: Optional[float] = None

    model_config = ConfigDict(extra="forbid")


class GroupSection(BaseModel):
    rail: str
    members: List[str] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")


class DomainSection(BaseModel):
    stage: Optional[str] = None

    model_config = ConfigDict(extra="forbid")


class TopologyFile(BaseModel):
    topology: TopologyHeader
    stage: Dict[str, StageSection] = Field(default_factory=dict)
    group: Dict[str, GroupSection] = Field(default_factory=dict)
    domain: Dict[str, DomainSection] = Field(default_factory=dict)

    model_config = ConfigDict(extra="forbid")


class CurveRow(BaseModel):
    vin_V: float = Field(..., gt=0)
    vout_V: float = Field(..., gt=0)
    iout_A: float = Field(..., ge=0)
    power_state: VrPowerState
    eta: float = Field(..., gt=0, le=1, description="Conversion efficiency")


class LoadRow(BaseModel):
    wl_type: WorkloadType
    tdp_W: float = Field(..., gt=0)
    domain: str
    pnom_W: float = Field(..., ge=0)
    vnom_V: float = Field(..., gt=0)


class PowerStateRow(BaseModel):
    state: PackagePowerState
    p_state_W: float = Field(..., ge=0)
    domain: str
    share: float = Field(..., ge=0, le=1)
    vnom_V: float = Field(..., gt=0)
    ar: float = Field(default=1.0, gt=0, le=1)


class PfRow(BaseModel):
    tdp_W: float = Field(..., gt=0)
    domain: Literal["cores", "gfx"]
    freq_GHz: float = Field(..., gt=0)
    mw_per_percent: float = Field(..., gt=0)


class WorkloadRow(BaseModel):
    name: str
    type: WorkloadType
    ar: float = Field(..., gt=0, le=1)
    scalability: float = Field(default=1.0, ge=0, le=1)


class CostRow(BaseModel):
    vr_class: Literal["PMIC", "VRM"] = Field(..., alias="class")
    icc_max_A: float = Field(..., gt=0)
    cost: float = Field(..., ge=0)
    area_mm2: float = Field(..., ge=0)


class TraceRow(BaseModel):
    duration_s: float = Field(..., gt=0)
    wl_type: WorkloadType
    ar: float = Field(..., gt=0, le=1)
    c0_res: float = Field(default=0.0, ge=0, le=1)
    c0min_res: float = Field(default=0.0, ge=0, le=1)
    c2_res: float = Field(default=0.0, ge=0, le=1)
    c3_res: float = Field(default=0.0, ge=0, le=1)
    c6_res: float = Field(default=0.0, ge=0, le=1)
    c7_res: float = Field(default=0.0, ge=0, le=1)
    c8_res: float = Field(default=0.0, ge=0, le=1)
    tdp_W: Optional[float] = Field(default=None, gt=0)

    model_config = ConfigDict(extra="allow")


class Diagnostic(BaseModel):
    file: Optional[str] = Field(default=None, description="File the problem was found in")
    line: Optional[int] = Field(default=None, description="1-based line number, header is line 1")
    code: str = Field(..., description="Error code")
    message: str = Field(..., description="Human-readable description")

    def render(self) -> str:
        where = self.file or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        return f"{where}: {self.code}: {self.message}"

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "file": "data/curves/offchip.csv",
                "line": 12,
                "code": "InputFormatError",
                "message": "eta: Input should be less than or equal to 1",
            }
        },
    )
