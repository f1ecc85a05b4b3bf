"""Binary wire format for the 200 Hz pressure/temperature stream.

Frame layout, little-endian, 48 bytes::

    0   2  magic 0xA7 0x51
    2   2  sequence, u16, +1 per frame modulo 2**16
    4  28  7 x pressure, i32, milli-pascal
    32 14  7 x temperature, i16, centi-degC
    46  2  CRC-16/CCITT (poly 0x1021, init 0xFFFF) over bytes 0..45
"""

from __future__ import annotations

import queue
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import BadMagic, ChecksumError, InvalidInputError, NeedMoreBytes

MAGIC = b"\xa7\x51"
FRAME_SIZE = 48
RATE_HZ = 200.0
_BODY = struct.Struct("<2sH7i7h")
assert _BODY.size + 2 == FRAME_SIZE


@dataclass(frozen=True)
class WireFrame:
    seq: int
    pressure_mpa: tuple  # 7 x int, milli-Pa
    temperature_cc: tuple  # 7 x int, centi-degC

    @property
    def pressures(self):
        return np.array(self.pressure_mpa, dtype=float) / 1000.0

    @property
    def temperatures(self):
        return np.array(self.temperature_cc, dtype=float) / 100.0

    @classmethod
    def from_physical(cls, seq, pressures_pa, temperatures_c):
        p = tuple(int(v) for v in np.rint(np.asarray(pressures_pa, dtype=float) * 1000.0))
        t = tuple(int(v) for v in np.rint(np.asarray(temperatures_c, dtype=float) * 100.0))
        return cls(seq % 65536, p, t)


def encode_frame(frame):
    if len(frame.pressure_mpa) != 7 or len(frame.temperature_cc) != 7:
        raise InvalidInputError("frames carry exactly 7 pressures and 7 temperatures")
    try:
        body = _BODY.pack(MAGIC, frame.seq, *frame.pressure_mpa, *frame.temperature_cc)
    except struct.error as exc:
        raise InvalidInputError(f"frame field out of range: {exc}") from exc
    return body + struct.pack("<H", kernels.crc16_ccitt(body))


def decode_frame(data):
    """Decode one frame from the start of ``data``.

    Raises :class:`NeedMoreBytes` for short input, :class:`BadMagic` when the
    buffer does not start with the magic, :class:`ChecksumError` on a CRC
    mismatch.
    """
    data = bytes(data[:FRAME_SIZE])
    if len(data) < 2 and MAGIC.startswith(data):
        raise NeedMoreBytes(FRAME_SIZE - len(data))
    if data[:2] != MAGIC:
        raise BadMagic(f"bad magic {data[:2].hex()}")
    if len(data) < FRAME_SIZE:
        raise NeedMoreBytes(FRAME_SIZE - len(data))
    stored = data[46] | (data[47] << 8)
    crc = kernels.crc16_ccitt(data[:46])
    if crc != stored:
        raise ChecksumError(f"crc mismatch: stored {stored:#06x}, computed {crc:#06x}")
    fields = _BODY.unpack(data[:46])
    return WireFrame(fields[1], tuple(fields[2:9]), tuple(fields[9:16]))


@dataclass
class DecoderStats:
    bytes_fed: int = 0
    bytes_consumed: int = 0  # emitted frames + discarded bytes
    frames: int = 0
    crc_errors: int = 0
    resync_events: int = 0
    bytes_discarded: int = 0
    missing_frames: int = 0
    gaps: list = field(default_factory=list)  # (last seq, next seq, n missing)


class FrameDecoder:
    """Push parser: feed arbitrary byte chunks, get whole frames back.

    Garbage before a magic is skipped (one resync event per skipped run); a
    candidate with a bad CRC is counted and the scan resumes one byte later.
    """

    def __init__(self):
        self.buf = bytearray()
        self.stats = DecoderStats()
        self._last_seq = None
        self._in_garbage = False

    @property
    def buffered(self):
        return len(self.buf)

    def _discard(self, n):
        if n <= 0:
            return
        if not self._in_garbage:
            self.stats.resync_events += 1
            self._in_garbage = True
        self.stats.bytes_discarded += n
        self.stats.bytes_consumed += n

    def feed(self, data):
        self.stats.bytes_fed += len(data)
        self.buf += data
        frames = []
        pos = 0
        buf = self.buf
        while True:
            status, off = kernels.scan_frame(buf, pos)
            self._discard(off - pos)
            pos = off
            if status == kernels.SCAN_OK:
                frame = decode_frame(buf[pos : pos + FRAME_SIZE])
                self._track_sequence(frame.seq)
                frames.append(frame)
                self.stats.frames += 1
                self.stats.bytes_consumed += FRAME_SIZE
                self._in_garbage = False
                pos += FRAME_SIZE
            elif status == kernels.SCAN_BAD_CRC:
                self.stats.crc_errors += 1
                self._discard(1)
                pos += 1
            else:
                break
        del self.buf[:pos]
        return frames

    def _track_sequence(self, seq):
        if self._last_seq is not None:
            missing = (seq - self._last_seq - 1) % 65536
            if missing:
                self.stats.missing_frames += missing
                self.stats.gaps.append((self._last_seq, seq, missing))
        self._last_seq = seq


def decode_stream(data, chunk_size=4096):
    dec = FrameDecoder()
    frames = []
    for lo in range(0, len(data), chunk_size):
        frames += dec.feed(data[lo : lo + chunk_size])
    return frames, dec


def frames_to_arrays(frames):
    p = np.array([f.pressures for f in frames]).reshape(-1, 7)
    t = np.array([f.temperatures for f in frames]).reshape(-1, 7)
    return p, t


def compensate(frames, baseline_window, temperature=False):
    """Baseline-subtracted channel pressures (Pa), shape (N, 7).

    The first ``baseline_window`` frames are taken as unloaded.  With
    ``temperature=True`` each channel additionally gets a linear
    pressure-vs-own-temperature fit on that window, subtracted everywhere.
    """
    if baseline_window < 1:
        raise InvalidInputError("baseline_window must be >= 1")
    if isinstance(frames, tuple) and len(frames) == 2:
        p, t = (np.asarray(a, dtype=float) for a in frames)
    else:
        p, t = frames_to_arrays(list(frames))
    if baseline_window > len(p):
        raise InvalidInputError(
            f"baseline window of {baseline_window} frames exceeds stream length {len(p)}"
        )
    base_p = p[:baseline_window]
    if not temperature:
        return p - base_p.mean(axis=0)
    out = np.empty_like(p)
    base_t = t[:baseline_window]
    for ch in range(p.shape[1]):
        tc = base_t[:, ch]
        if np.ptp(tc) > 0:
            slope, intercept = np.polyfit(tc, base_p[:, ch], 1)
        else:
            slope, intercept = 0.0, base_p[:, ch].mean()
        out[:, ch] = p[:, ch] - (intercept + slope * t[:, ch])
    return out


def synth_stream(pressures_pa, temperatures_c=None, start_seq=0, ambient_pa=101325.0):
    """Encode a (N, 7) series of deformation pressures as wire bytes."""
    pressures_pa = np.asarray(pressures_pa, dtype=float)
    if temperatures_c is None:
        temperatures_c = np.full_like(pressures_pa, 25.0)
    return b"".join(
        encode_frame(WireFrame.from_physical(start_seq + i, ambient_pa + p, t))
        for i, (p, t) in enumerate(zip(pressures_pa, temperatures_c))
    )


# -- replay ------------------------------------------------------------------


def iter_file_chunks(path, chunk_size=4096):
    with open(path, "rb") as fh:
        while True:
            chunk = fh.read(chunk_size)
            if not chunk:
                return
            yield chunk


def replay(path, pacing="fast", chunk_size=4096, decoder=None, sleep=time.sleep, clock=time.monotonic):
    """Yield decoded frames from a raw capture.

    ``pacing="realtime"`` releases frames at 200 Hz; ``"fast"`` as quickly as
    they decode.  Pass a ``decoder`` to inspect its stats afterwards.
    """
    if pacing not in ("fast", "realtime"):
        raise InvalidInputError(f"pacing must be 'fast' or 'realtime', got {pacing!r}")
    dec = decoder if decoder is not None else FrameDecoder()
    t0 = clock()
    n = 0
    for chunk in iter_file_chunks(path, chunk_size):
        for frame in dec.feed(chunk):
            if pacing == "realtime":
                delay = t0 + n / RATE_HZ - clock()
                if delay > 0:
                    sleep(delay)
            n += 1
            yield frame


class ByteFeeder:
    """Producer thread pushing byte chunks through a bounded FIFO.

    ``put`` blocks when the queue is full; the consumer side iterates frames.
    """

    _DONE = object()

    def __init__(self, chunks, maxsize=16):
        self.queue = queue.Queue(maxsize=maxsize)
        self._chunks = chunks
        self._thread = threading.Thread(target=self._run, daemon=True)
        self.error = None

    def _run(self):
        try:
            for chunk in self._chunks:
                self.queue.put(bytes(chunk))
        except Exception as exc:  # surfaced to the consumer
            self.error = exc
        finally:
            self.queue.put(self._DONE)

    def frames(self, decoder=None):
        decoder = decoder or FrameDecoder()
        self._thread.start()
        while True:
            chunk = self.queue.get()
            if chunk is self._DONE:
                break
            yield from decoder.feed(chunk)
        self._thread.join()
        if self.error is not None:
            raise self.error


def write_capture(path, data):
    Path(path).write_bytes(data)
