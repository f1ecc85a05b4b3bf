"""Pure-Python telemetry kernels (fallback for the compiled extension)."""

MAGIC0 = 0xA7
MAGIC1 = 0x51
FRAME_SIZE = 48

SCAN_OK = 0
SCAN_BAD_CRC = 1
SCAN_PARTIAL = 2
SCAN_NONE = 3


def _make_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
        table.append(crc)
    return tuple(table)


CRC_TABLE = _make_table()


def crc16_ccitt(data, init=0xFFFF):
    """CRC-16/CCITT-FALSE: poly 0x1021, no reflection, no final xor."""
    crc = init
    table = CRC_TABLE
    for b in bytes(data):
        crc = ((crc << 8) & 0xFFFF) ^ table[(crc >> 8) ^ b]
    return crc


def scan_frame(buf, start=0):
    """Look for the next frame in ``buf`` at or after ``start``.

    Returns ``(status, offset)``: ``SCAN_OK``/``SCAN_BAD_CRC`` with the offset
    of a complete candidate, ``SCAN_PARTIAL`` with the offset where an
    incomplete candidate (or a trailing first magic byte) begins, or
    ``SCAN_NONE`` with ``len(buf)`` when nothing resembling a frame remains.
    """
    n = len(buf)
    j = buf.find(b"\xa7\x51", start)
    if j < 0:
        if n > start and buf[n - 1] == MAGIC0:
            return SCAN_PARTIAL, n - 1
        return SCAN_NONE, n
    if n - j < FRAME_SIZE:
        return SCAN_PARTIAL, j
    crc = crc16_ccitt(buf[j : j + FRAME_SIZE - 2])
    stored = buf[j + FRAME_SIZE - 2] | (buf[j + FRAME_SIZE - 1] << 8)
    return (SCAN_OK if crc == stored else SCAN_BAD_CRC), j
