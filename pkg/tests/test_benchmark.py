import subprocess
import sys
from pathlib import Path

SCRIPT = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_script_runs():
    out = subprocess.run([sys.executable, str(SCRIPT), "--mb", "0.02", "--repeat", "1"],
                         capture_output=True, text=True, check=True).stdout
    assert "crc16 python" in out and "scan+verify python" in out
