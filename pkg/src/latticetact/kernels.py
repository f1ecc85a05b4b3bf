"""Telemetry hot kernels: compiled extension when built, pure Python otherwise.

Set ``LATTICE_TACT_PURE=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
crc16_ccitt = _kernels_py.crc16_ccitt
scan_frame = _kernels_py.scan_frame

if not os.environ.get("LATTICE_TACT_PURE"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        crc16_ccitt = _ckernels.crc16_ccitt
        scan_frame = _ckernels.scan_frame

SCAN_OK = _kernels_py.SCAN_OK
SCAN_BAD_CRC = _kernels_py.SCAN_BAD_CRC
SCAN_PARTIAL = _kernels_py.SCAN_PARTIAL
SCAN_NONE = _kernels_py.SCAN_NONE
FRAME_SIZE = _kernels_py.FRAME_SIZE
