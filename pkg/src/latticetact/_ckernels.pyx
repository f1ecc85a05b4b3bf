# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled telemetry kernels; same contract as ``_kernels_py``."""

from libc.stdint cimport uint16_t, uint8_t

DEF FRAME_SIZE = 48

SCAN_OK = 0
SCAN_BAD_CRC = 1
SCAN_PARTIAL = 2
SCAN_NONE = 3

cdef uint16_t TABLE[256]


cdef void _init_table():
    cdef int byte, k
    cdef uint16_t crc
    for byte in range(256):
        crc = <uint16_t>(byte << 8)
        for k in range(8):
            if crc & 0x8000:
                crc = <uint16_t>((crc << 1) ^ 0x1021)
            else:
                crc = <uint16_t>(crc << 1)
        TABLE[byte] = crc


_init_table()


cdef inline uint16_t _crc(const uint8_t[:] data, Py_ssize_t lo, Py_ssize_t hi, uint16_t crc) nogil:
    cdef Py_ssize_t i
    for i in range(lo, hi):
        crc = <uint16_t>((crc << 8) ^ TABLE[(crc >> 8) ^ data[i]])
    return crc


def crc16_ccitt(data, unsigned int init=0xFFFF):
    cdef const uint8_t[:] view = bytes(data) if not isinstance(data, (bytes, bytearray)) else data
    return _crc(view, 0, view.shape[0], <uint16_t>init)


def scan_frame(buf, Py_ssize_t start=0):
    cdef const uint8_t[:] v = buf
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t j = start
    cdef uint16_t crc, stored
    while j + 1 < n:
        if v[j] == 0xA7 and v[j + 1] == 0x51:
            if n - j < FRAME_SIZE:
                return SCAN_PARTIAL, j
            crc = _crc(v, j, j + FRAME_SIZE - 2, 0xFFFF)
            stored = <uint16_t>(v[j + FRAME_SIZE - 2] | (v[j + FRAME_SIZE - 1] << 8))
            return (SCAN_OK if crc == stored else SCAN_BAD_CRC), j
        j += 1
    if n > start and v[n - 1] == 0xA7 and n - 1 >= start:
        return SCAN_PARTIAL, n - 1
    return SCAN_NONE, n
