"""
Unit tests for data files, report formatting, logging and the parallel evaluator
"""
import json
import logging
import pytest

from data_io import (format_value, load_config, load_curve, load_loads_model, load_trace, parse_report_row,
                     read_rows, render_document, render_rows)
from errors import InputFormatError
from monitoring import EvaluationStats, JsonFormatter, setup_logging
from parallel_sweep import ParallelEvaluator
from pdn_core import Architecture, FlexMode, PackagePowerState, WorkloadType
from schemas import CurveRow, Diagnostic, RunConfig, TraceRow

CURVE_HEADER = "vin_V,vout_V,iout_A,power_state,eta"
TRACE_DOMAINS = ("Core0", "Core1", "LLC", "GFX", "SA", "IO")


@pytest.mark.unit
class TestRowReading:
    """Test schema-validated CSV reading"""

    def test_line_numbers_start_after_header(self, write_csv):
        """Test the first data row is line 2"""
        path = write_csv("c.csv", [CURVE_HEADER, "7.2,1.0,1,PS0,0.8", "7.2,1.0,2,PS0,0.9"])
        lines = [line for line, _ in read_rows(path, CurveRow)]
        assert lines == [2, 3]

    def test_eta_above_one_reports_line(self, write_csv):
        """Test eta = 1.3 on the third line"""
        path = write_csv("c.csv", [CURVE_HEADER, "7.2,1.0,1,PS0,0.8", "7.2,1.0,2,PS0,1.3"])
        with pytest.raises(InputFormatError) as exc_info:
            load_curve(path)
        diagnostic = exc_info.value.to_diagnostic()
        assert diagnostic.file == path
        assert diagnostic.line == 3
        assert "eta" in diagnostic.message
        assert diagnostic.render().startswith(f"{path}:3: InputFormatError")

    def test_unknown_power_state(self, write_csv):
        """Test an unparseable enum cell"""
        path = write_csv("c.csv", [CURVE_HEADER, "7.2,1.0,1,PS9,0.8"])
        with pytest.raises(InputFormatError) as exc_info:
            list(read_rows(path, CurveRow))
        assert exc_info.value.line == 2

    def test_extra_field(self, write_csv):
        """Test a row longer than its header"""
        path = write_csv("c.csv", [CURVE_HEADER, "7.2,1.0,1,PS0,0.8,9"])
        with pytest.raises(InputFormatError):
            list(read_rows(path, CurveRow))

    def test_missing_file(self, tmp_path):
        """Test a path that does not exist"""
        with pytest.raises(InputFormatError) as exc_info:
            list(read_rows(tmp_path / "nope.csv", CurveRow))
        assert exc_info.value.file.endswith("nope.csv")

    def test_curve_shape_errors_name_the_file(self, write_csv):
        """Test a one-sample line is reported against the file"""
        path = write_csv("c.csv", [CURVE_HEADER, "7.2,1.0,1,PS0,0.8"])
        with pytest.raises(InputFormatError) as exc_info:
            load_curve(path)
        assert exc_info.value.file == path

    def test_loads_table_interpolates_tdp(self, write_csv):
        """Test per-domain operating points between two TDP rows"""
        path = write_csv("l.csv", ["wl_type,tdp_W,domain,pnom_W,vnom_V",
                                   "multi_thread,4,Core0,1.0,0.6", "multi_thread,8,Core0,3.0,0.8"])
        model = load_loads_model(path)
        p, v = model.operating_point(6, WorkloadType.MULTI_THREAD, "Core0")
        assert p == pytest.approx(2.0)
        assert v == pytest.approx(0.7)


@pytest.mark.unit
class TestTraces:
    """Test trace files"""

    def test_bundled_video_trace(self, data_dir):
        """Test residency columns map onto package states"""
        phases = load_trace(data_dir / "traces" / "video_playback.csv")
        assert len(phases) == 2
        assert phases[0].residencies[PackagePowerState.C8] == pytest.approx(0.85)
        assert phases[0].tdp == 4
        assert phases[0].loads is None

    def test_residency_mismatch_reports_line(self, write_csv):
        """Test residencies summing to 0.9"""
        path = write_csv("t.csv", ["duration_s,wl_type,ar,c0_res,c8_res",
                                   "0.1,multi_thread,0.5,1.0,0.0", "0.1,multi_thread,0.5,0.5,0.4"])
        with pytest.raises(InputFormatError) as exc_info:
            load_trace(path)
        assert exc_info.value.code == "ResidencyMismatch"
        assert exc_info.value.line == 3

    def test_explicit_domain_loads(self, write_csv):
        """Test per-domain power and voltage columns override the loads table"""
        header = ["duration_s", "wl_type", "ar", "c0_res"]
        values = ["0.2", "graphics", "0.7", "1.0"]
        for n, domain in enumerate(TRACE_DOMAINS):
            header += [f"pnom_{domain.lower()}_W", f"vnom_{domain.lower()}_V"]
            values += [str(0.5 + n), "0.8"]
        phase = load_trace(write_csv("t.csv", [",".join(header), ",".join(values)]))[0]
        assert [load.domain for load in phase.loads] == list(TRACE_DOMAINS)
        assert phase.loads[2].p_nom == pytest.approx(2.5)
        assert all(load.ar == 0.7 for load in phase.loads)
        assert phase.workload_type == WorkloadType.GRAPHICS

    def test_partial_domain_loads_rejected(self, write_csv):
        """Test explicit loads must cover every domain"""
        path = write_csv("t.csv", ["duration_s,wl_type,ar,c0_res,pnom_core0_W,vnom_core0_V",
                                   "0.2,multi_thread,0.7,1.0,1.0,0.8"])
        with pytest.raises(InputFormatError) as exc_info:
            load_trace(path)
        assert "Core1" in exc_info.value.message


@pytest.mark.unit
class TestConfig:
    """Test run configuration loading"""

    def test_paths_relative_to_config(self, tmp_path):
        """Test file paths resolve against the config's directory"""
        document = {"topologies": ["t/a.toml"], "curve_pack": {"offchip": "c.csv"}, "loads_table": "l.csv",
                    "power_states": "p.csv", "pf_curves": "f.csv", "workloads": "w.csv", "cost_table": "k.csv"}
        path = tmp_path / "run.json"
        path.write_text(json.dumps(document))
        config = load_config(path)
        assert config.topologies == [str((tmp_path / "t" / "a.toml").resolve())]
        assert config.curve_pack["offchip"] == str((tmp_path / "c.csv").resolve())
        assert config.trace is None
        assert config.reference == Architecture.IVR

    def test_bundled_defaults(self, default_config):
        """Test the bundled configuration"""
        assert default_config.tdp_list == [4, 18, 50]
        assert len(default_config.topologies) == 5
        assert default_config.simulation.latency.vr_adjust_s == pytest.approx(19e-6)

    def test_tdp_out_of_range(self, config_file):
        """Test a 500 W TDP is rejected"""
        with pytest.raises(InputFormatError) as exc_info:
            load_config(config_file(tdp_list=[4, 500]))
        assert "500" in exc_info.value.message

    def test_unknown_key(self, config_file):
        """Test misspelled keys are rejected"""
        with pytest.raises(InputFormatError):
            load_config(config_file(tdp=[4]))

    def test_malformed_json(self, tmp_path):
        """Test a config that is not JSON"""
        path = tmp_path / "bad.json"
        path.write_text("{\n  \"topologies\": [\n")
        with pytest.raises(InputFormatError) as exc_info:
            load_config(path)
        assert exc_info.value.line is not None

    def test_model_settings(self):
        """Test config and diagnostic models declare their extra-field policy and example"""
        assert RunConfig.model_config["extra"] == "forbid"
        assert TraceRow.model_config["extra"] == "allow"
        assert Diagnostic.model_json_schema()["example"]["code"] == "InputFormatError"
        assert "tdp_list" in RunConfig.model_json_schema()["example"]


@pytest.mark.unit
class TestReports:
    """Test report rendering"""

    def test_format_value(self):
        """Test cell text for each value kind"""
        assert format_value(None) == ""
        assert format_value(FlexMode.LDO) == "LdoMode"
        assert format_value(True) == "true"
        assert format_value(0.1 + 0.2) == "0.30000000000000004"
        assert format_value(3) == "3"

    def test_rows_read_back(self, fake):
        """Test an emitted row parses back to the same values"""
        row = {"topology": "MBVR", "tdp_W": 18, "etee": fake.pyfloat(min_value=0.5, max_value=0.95),
               "mode": None, "extrapolated": False}
        header, line = render_rows([row]).splitlines()
        assert parse_report_row(header, line) == row

    def test_empty_rows(self):
        """Test no rows render to nothing"""
        assert render_rows([]) == ""

    def test_field_count_mismatch(self):
        """Test a row shorter than its header"""
        with pytest.raises(InputFormatError):
            parse_report_row("a,b,c", "1,2")

    def test_document_enums_are_plain(self):
        """Test enum keys and values become strings"""
        document = {"fixed": {FlexMode.IVR: 1.0}, "modes": (FlexMode.LDO,)}
        assert json.loads(render_document(document)) == {"fixed": {"IvrMode": 1.0}, "modes": ["LdoMode"]}

    def test_diagnostic_without_file(self):
        """Test a diagnostic with no file or line"""
        assert Diagnostic(code="ZeroPower", message="no power").render() == "<config>: ZeroPower: no power"


@pytest.mark.unit
class TestMonitoring:
    """Test logging setup and evaluation statistics"""

    def test_json_formatter(self):
        """Test the JSON log record"""
        record = logging.LogRecord("pdnspot.etee", logging.INFO, __file__, 10, "etee=%.3f", (0.75,), None)
        entry = json.loads(JsonFormatter().format(record))
        assert entry["level"] == "INFO"
        assert entry["logger"] == "pdnspot.etee"
        assert entry["message"] == "etee=0.750"
        assert "args" not in entry

    def test_json_formatter_extra_fields(self):
        """Test fields passed with extra= land in the record"""
        record = logging.LogRecord("pdnspot.sweep", logging.INFO, __file__, 10, "cell", (), None)
        record.tdp_W = 18.0
        record.topology = "MBVR"
        entry = json.loads(JsonFormatter().format(record))
        assert entry["tdp_W"] == 18.0
        assert entry["topology"] == "MBVR"

    def test_log_file_is_json(self, tmp_path):
        """Test the optional log file gets one JSON object per line"""
        log_file = tmp_path / "run.log"
        logger = setup_logging("INFO", str(log_file))
        try:
            logging.getLogger("pdnspot.sweep").info("swept %d cells", 6)
            for handler in logger.handlers:
                handler.flush()
            entries = [json.loads(line) for line in log_file.read_text().splitlines()]
            assert entries[-1]["message"] == "swept 6 cells"
        finally:
            setup_logging("WARNING")

    def test_stats_counts_and_times(self):
        """Test timed evaluations are counted and observed"""
        stats = EvaluationStats()
        for _ in range(3):
            with stats.timed():
                pass
        assert stats.get_counter("evaluation") == 3
        assert stats.get_histogram_stats("evaluation.seconds")["count"] == 3
        assert "evaluation=3" in stats.summary()

    def test_empty_stats(self):
        """Test a summary with nothing recorded"""
        assert EvaluationStats().summary() == "no evaluations"


@pytest.mark.unit
class TestParallelEvaluator:
    """Test ordered parallel evaluation"""

    def test_results_in_input_order(self):
        """Test four workers return results in submission order"""
        assert ParallelEvaluator(max_workers=4).map_ordered(lambda x: x * x, range(50)) == [x * x for x in range(50)]

    def test_first_failure_in_input_order(self):
        """Test the earliest failing cell's error is raised"""
        def fail_odd(x):
            if x in (3, 7):
                raise ValueError(f"cell {x}")
            return x

        with pytest.raises(ValueError, match="cell 3"):
            ParallelEvaluator(max_workers=4).map_ordered(fail_odd, range(10))

    def test_single_worker_skips_pool(self, mocker):
        """Test one worker runs inline"""
        pool = mocker.patch("parallel_sweep.concurrent.futures.ThreadPoolExecutor")
        assert ParallelEvaluator(max_workers=1).map_ordered(str, [1, 2]) == ["1", "2"]
        pool.assert_not_called()

    def test_stats_recorded(self):
        """Test every cell is counted"""
        stats = EvaluationStats()
        ParallelEvaluator(max_workers=2, stats=stats).map_ordered(abs, [-1, 2, -3])
        assert stats.get_counter("evaluation") == 3

    def test_invalid_worker_count(self):
        """Test zero workers"""
        with pytest.raises(ValueError):
            ParallelEvaluator(max_workers=0)

    def test_module_documented(self):
        """Test the module carries its summary docstring"""
        import parallel_sweep
        assert parallel_sweep.__doc__.strip().startswith("Ordered thread-pool evaluation")
