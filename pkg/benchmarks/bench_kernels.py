"""Compare the compiled and pure-Python telemetry kernels.

Usage: python3 benchmarks/bench_kernels.py [--mb 2] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from latticetact import _kernels_py
from latticetact.telemetry import FrameDecoder, WireFrame, encode_frame

try:
    from latticetact import _ckernels
except ImportError:
    _ckernels = None


def make_stream(n_bytes, rng):
    """Valid frames with a sprinkle of random garbage between them."""
    parts, total, seq = [], 0, 0
    while total < n_bytes:
        blob = encode_frame(WireFrame(seq % 65536, tuple(int(v) for v in rng.integers(-10**6, 10**6, 7)), (2500,) * 7))
        if rng.random() < 0.05:
            blob = rng.integers(0, 256, int(rng.integers(1, 20)), dtype=np.uint8).tobytes() + blob
        parts.append(blob)
        total += len(blob)
        seq += 1
    return b"".join(parts)


def decode_all(data, scan):
    """Scan loop equivalent to FrameDecoder.feed, with an injectable kernel."""
    buf = bytearray(data)
    pos = frames = 0
    while True:
        status, off = scan(buf, pos)
        if status == _kernels_py.SCAN_OK:
            frames += 1
            pos = off + _kernels_py.FRAME_SIZE
        elif status == _kernels_py.SCAN_BAD_CRC:
            pos = off + 1
        else:
            return frames


def bench(label, fn, repeat, n_bytes):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"{label:<32} {best * 1e3:9.2f} ms  {n_bytes / best / 1e6:8.2f} MB/s")
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mb", type=float, default=2.0, help="stream size in megabytes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    data = make_stream(int(args.mb * 1e6), rng)
    n = len(data)
    print(f"stream: {n} bytes, {n // 48} frames (approx)")

    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; showing the Python fallback only")

    results = {}
    for name, mod in backends:
        results[name] = (
            bench(f"crc16 {name}", lambda m=mod: m.crc16_ccitt(data), args.repeat, n),
            bench(f"scan+verify {name}", lambda m=mod: decode_all(data, m.scan_frame), args.repeat, n),
        )
        assert decode_all(data, mod.scan_frame) == decode_all(data, _kernels_py.scan_frame)
    bench("FrameDecoder.feed (active)", lambda: FrameDecoder().feed(data), args.repeat, n)
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speed-up: crc {py[0] / cy[0]:.1f}x, scan {py[1] / cy[1]:.1f}x")


if __name__ == "__main__":
    main()
