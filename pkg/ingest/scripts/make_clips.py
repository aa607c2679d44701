# Writes the tiny uncompressed AVI fixtures used by the ingest tests.
# Every byte is a deterministic function of the clip name, so regenerating
# gives identical files. Video is 24-bit BGR DIB (bottom-up rows), audio is
# 16-bit mono PCM at 8 kHz, interleaved one '01wb' chunk per frame.

import math
import os
import struct

WIDTH, HEIGHT = 16, 16
FPS = 8
RATE = 8000
SAMPLES_PER_FRAME = RATE // FPS


def _chunk(fourcc, payload):
    out = fourcc + struct.pack("<I", len(payload)) + payload
    if len(payload) % 2:
        out += b"\x00"
    return out


def _list(fourcc, payload):
    return _chunk(b"LIST", fourcc + payload)


def _frame_pixels(name, t):
    # bottom-up rows, BGR order, stride already a multiple of 4 at width 16
    rows = []
    for y in range(HEIGHT - 1, -1, -1):
        row = bytearray()
        for x in range(WIDTH):
            if name == "clip_a":
                r, g, b = (x * 16 + t * 5) % 256, (y * 16) % 256, ((x + y) * 8 + t * 3) % 256
            elif name == "clip_b":
                r, g, b = (y * 13 + t * 7) % 256, (x * 9) % 256, (x * x + t) % 256
            else:
                r, g, b = ((x + y) * 11) % 256, (t * 40) % 256, (x * y + t * 2) % 256
            row += bytes((b, g, r))
        rows.append(bytes(row))
    return b"".join(rows)


def _audio_samples(name, offset, n):
    freqs = {"clip_a": (440.0, 1320.0), "clip_b": (660.0, 990.0)}.get(name, (220.0,))
    out = []
    for i in range(n):
        t = (offset + i) / RATE
        v = sum(math.sin(2 * math.pi * f * t) for f in freqs) / len(freqs)
        out.append(int(0.4 * 32767 * v))
    return struct.pack(f"<{n}h", *out)


def write_avi(path, name, n_frames):
    frame_bytes = WIDTH * HEIGHT * 3
    avih = struct.pack("<14I", 1000000 // FPS, frame_bytes * FPS, 0, 0,
                       n_frames, 0, 2, frame_bytes, WIDTH, HEIGHT, 0, 0, 0, 0)
    strh_v = (b"vids" + b"DIB " +
              struct.pack("<IHHIIIII", 0, 0, 0, 0, 1, FPS, 0, n_frames) +
              struct.pack("<III4H", frame_bytes, 0xFFFFFFFF, 0, 0, 0, WIDTH, HEIGHT))
    strf_v = struct.pack("<IiiHHIIiiII", 40, WIDTH, HEIGHT, 1, 24, 0,
                         frame_bytes, 0, 0, 0, 0)
    n_samples = n_frames * SAMPLES_PER_FRAME
    strh_a = (b"auds" + b"\x00" * 4 +
              struct.pack("<IHHIIIII", 0, 0, 0, 0, 1, RATE, 0, n_samples) +
              struct.pack("<III4H", SAMPLES_PER_FRAME * 2, 0xFFFFFFFF, 2, 0, 0, 0, 0))
    strf_a = struct.pack("<HHIIHH", 1, 1, RATE, RATE * 2, 2, 16)

    hdrl = _list(b"hdrl",
                 _chunk(b"avih", avih) +
                 _list(b"strl", _chunk(b"strh", strh_v) + _chunk(b"strf", strf_v)) +
                 _list(b"strl", _chunk(b"strh", strh_a) + _chunk(b"strf", strf_a)))

    movi_items = []
    for t in range(n_frames):
        movi_items.append(_chunk(b"00db", _frame_pixels(name, t)))
        # the waveform continues across chunks, one chunk per frame
        pcm = _audio_samples(name, t * SAMPLES_PER_FRAME, SAMPLES_PER_FRAME)
        movi_items.append(_chunk(b"01wb", pcm))
    movi = _list(b"movi", b"".join(movi_items))

    idx_entries = []
    pos = 4
    for item in movi_items:
        idx_entries.append(item[:4] + struct.pack("<III", 0x10, pos, len(item) - 8))
        pos += len(item)
    idx1 = _chunk(b"idx1", b"".join(idx_entries))

    body = b"AVI " + hdrl + movi + idx1
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    fixtures = os.path.join(here, os.pardir, "fixtures")
    os.makedirs(fixtures, exist_ok=True)
    for name, frames in (("clip_a", 12), ("clip_b", 10), ("clip_short", 3)):
        path = os.path.join(fixtures, f"{name}.avi")
        write_avi(path, name, frames)
        print(f"{path}: {frames} frames, {os.path.getsize(path)} bytes")
    with open(os.path.join(fixtures, "items.csv"), "w") as fh:
        fh.write("path,theme,id\nclip_a.avi,retail,clip_a\nclip_b.avi,travel,clip_b\n")


if __name__ == "__main__":
    main()
