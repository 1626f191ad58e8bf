#!/usr/bin/env python3
"""
PDNspot Performance Benchmarks
Measures the cost of ETEE evaluation, table building and sweeps
"""

import io
import json
import os
import statistics
import sys
import time
from typing import Any, Callable, Dict

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from data_io import DEFAULT_CONFIG, load_config, load_inputs
from etee import evaluate
from flexwatts import GridSpec, build_etee_table
from parallel_sweep import ParallelEvaluator
from pdn_core import Architecture, WorkloadType
from pdnspot import main as pdnspot_main


def _timings(fn: Callable[[], Any], iterations: int) -> Dict[str, float]:
    times = []
    for _ in range(iterations):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return {
        'total_time': sum(times),
        'average_time': statistics.mean(times),
        'median_time': statistics.median(times),
        'min_time': min(times),
        'max_time': max(times),
    }


class PdnBenchmark:
    """Benchmark the evaluation paths on the bundled data"""

    def __init__(self):
        self.config = load_config(DEFAULT_CONFIG)
        self.inputs = load_inputs(self.config)
        self.topologies = {t.name: t for t in self.inputs.topologies}

    def benchmark_evaluation(self, iterations: int = 2000) -> Dict[str, Dict[str, float]]:
        """Time a single evaluation per architecture"""
        print(f"\n📊 Benchmarking ETEE evaluation ({iterations} iterations)...")
        results = {}
        for name, t in self.topologies.items():
            loads = self.inputs.loads.loads(18, WorkloadType.MULTI_THREAD, 0.56, t.domains)
            stats = _timings(lambda: evaluate(t, loads, curves=self.inputs.curves), iterations)
            stats['evaluations_per_second'] = iterations / stats['total_time']
            results[name.value] = stats
        return results

    def benchmark_table_build(self, workers: int = 4, iterations: int = 3) -> Dict[str, float]:
        """Time building the FlexWatts ETEE table, serial against threaded"""
        print(f"\n🧮 Benchmarking ETEE table build ({iterations} iterations)...")
        t = self.topologies[Architecture.FLEXWATTS]
        grid = GridSpec()

        def build(n: int):
            return build_etee_table(t, self.inputs.loads, grid, self.inputs.power_states,
                                    self.inputs.curves, ParallelEvaluator(max_workers=n))

        serial = _timings(lambda: build(1), iterations)
        threaded = _timings(lambda: build(workers), iterations)
        return {
            'grid_points': grid.size * 2,
            'serial_average': serial['average_time'],
            'threaded_average': threaded['average_time'],
            'workers': workers,
        }

    def benchmark_sweep(self, iterations: int = 3) -> Dict[str, float]:
        """Time the sweep command over every workload in the manifest"""
        print(f"\n🔁 Benchmarking workload sweep ({iterations} iterations)...")

        def sweep():
            out, err = io.StringIO(), io.StringIO()
            if pdnspot_main(["--config", str(DEFAULT_CONFIG), "sweep", "--workloads"], stdout=out, stderr=err):
                raise RuntimeError(err.getvalue())

        return _timings(sweep, iterations)

    def run_all_benchmarks(self) -> Dict[str, Any]:
        print("=" * 60)
        print("🚀 PDNspot Performance Benchmarks")
        print("=" * 60)

        evaluation = self.benchmark_evaluation()
        print("\n📊 ETEE Evaluation Results:")
        for name, stats in evaluation.items():
            print(f"  • {name}: {stats['average_time'] * 1e6:.1f} µs "
                  f"({stats['evaluations_per_second']:.0f}/s)")

        table = self.benchmark_table_build()
        print("\n🧮 ETEE Table Results:")
        print(f"  • Grid points: {table['grid_points']}")
        print(f"  • Serial: {table['serial_average'] * 1000:.1f} ms")
        print(f"  • {table['workers']} workers: {table['threaded_average'] * 1000:.1f} ms")

        sweep = self.benchmark_sweep()
        print("\n🔁 Sweep Results:")
        print(f"  • Average time: {sweep['average_time']:.3f} seconds")

        print("\n" + "=" * 60)
        print("✅ Benchmarks Complete!")
        print("=" * 60)
        return {'evaluation': evaluation, 'table_build': table, 'sweep': sweep}


def main():
    """Run performance benchmarks"""
    results = PdnBenchmark().run_all_benchmarks()
    with open('benchmark_results.json', 'w') as f:
        json.dump(results, f, indent=2)
    print("\n📁 Results saved to benchmark_results.json")


if __name__ == "__main__":
    main()
