"""EDF/EDF+ reading and writing.

Covers the subset the motor-imagery corpus needs: one fixed 256-byte
header, per-signal headers, int16 little-endian data records, uniform
sampling rate across data channels, and an optional "EDF Annotations"
channel whose time-stamped annotation lists carry the event markers
(T0/T1/T2-style codes). Malformed input of any kind raises EdfError with
the byte offset where parsing failed; truncation never crashes.

Writing re-parses the physical min/max fields exactly as encoded in the
header, so a write -> parse round trip is lossless up to one digital
quantization step.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .pipeline import Recording

ANNOTATION_LABEL = "EDF Annotations"
DEFAULT_EVENT_CODES = {"T0": 0, "T1": 1, "T2": 2, "T3": 3}


class EdfError(ValueError):
    """Structured parse failure; offset is the absolute byte position."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


def _ascii(data, offset, size, name):
    if offset + size > len(data):
        raise EdfError(f"truncated while reading {name}", offset=len(data))
    return data[offset : offset + size].decode("ascii", errors="replace").strip()


def _number(data, offset, size, name, kind=float):
    text = _ascii(data, offset, size, name)
    try:
        return kind(float(text)) if kind is int else kind(text)
    except ValueError:
        raise EdfError(f"field {name} is not numeric: {text!r}", offset=offset) from None


def parse_edf(source, event_codes=None, user_id=None):
    """Parse EDF/EDF+ bytes (or a path) into a Recording.

    event_codes maps annotation texts to class labels; unmapped texts are
    ignored. Data channels must share one sampling rate.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    codes = DEFAULT_EVENT_CODES if event_codes is None else event_codes

    version = _ascii(data, 0, 8, "version")
    if version != "0":
        raise EdfError(f"not an EDF file: version field {version!r}", offset=0)
    patient = _ascii(data, 8, 80, "patient id")
    header_bytes = _number(data, 184, 8, "header byte count", int)
    n_records = _number(data, 236, 8, "record count", int)
    record_duration = _number(data, 244, 8, "record duration")
    ns = _number(data, 252, 4, "signal count", int)
    if ns <= 0:
        raise EdfError(f"signal count must be positive, got {ns}", offset=252)
    if header_bytes != 256 * (ns + 1):
        raise EdfError(
            f"header byte count {header_bytes} inconsistent with {ns} signals",
            offset=184,
        )

    def signal_field(base, size, name, kind=None):
        out = []
        for s in range(ns):
            off = 256 + base * ns + s * size
            if kind is None:
                out.append(_ascii(data, off, size, f"{name}[{s}]"))
            else:
                out.append(_number(data, off, size, f"{name}[{s}]", kind))
        return out

    labels = signal_field(0, 16, "label")
    phys_min = signal_field(16 + 80 + 8, 8, "physical min", float)
    phys_max = signal_field(16 + 80 + 8 + 8, 8, "physical max", float)
    dig_min = signal_field(16 + 80 + 8 + 8 + 8, 8, "digital min", int)
    dig_max = signal_field(16 + 80 + 8 + 8 + 8 + 8, 8, "digital max", int)
    spr = signal_field(16 + 80 + 8 + 8 + 8 + 8 + 8 + 80, 8, "samples per record", int)

    record_words = sum(spr)
    if record_words <= 0:
        raise EdfError("no samples per record", offset=256)
    body = data[header_bytes:]
    if n_records < 0:  # unknown count: infer from the body length
        if len(body) % (2 * record_words) != 0:
            raise EdfError("body length is not a whole number of records", offset=header_bytes)
        n_records = len(body) // (2 * record_words)
    expected = n_records * 2 * record_words
    if len(body) < expected:
        raise EdfError(
            f"truncated data: expected {expected} bytes of records, have {len(body)}",
            offset=len(data),
        )

    raw = np.frombuffer(body[:expected], dtype="<i2").reshape(n_records, record_words)
    starts = np.concatenate([[0], np.cumsum(spr)])

    data_idx = [s for s in range(ns) if labels[s] != ANNOTATION_LABEL]
    ann_idx = [s for s in range(ns) if labels[s] == ANNOTATION_LABEL]
    if not data_idx:
        raise EdfError("file contains no data channels", offset=256)
    rates = {spr[s] for s in data_idx}
    if len(rates) != 1:
        raise EdfError(f"mixed samples-per-record across data channels: {sorted(rates)}", offset=256)
    spr_data = rates.pop()
    if record_duration <= 0:
        raise EdfError(f"record duration must be positive, got {record_duration}", offset=244)
    rate = spr_data / record_duration

    channels = []
    for s in data_idx:
        if dig_max[s] <= dig_min[s]:
            raise EdfError(f"signal {s}: digital range is empty", offset=256)
        gain = (phys_max[s] - phys_min[s]) / (dig_max[s] - dig_min[s])
        dig = raw[:, starts[s] : starts[s + 1]].reshape(-1).astype(np.float64)
        channels.append((dig - dig_min[s]) * gain + phys_min[s])
    samples = np.vstack(channels)

    events = []
    for s in ann_idx:
        for r in range(n_records):
            chunk_off = header_bytes + (r * record_words + starts[s]) * 2
            chunk = raw[r, starts[s] : starts[s + 1]].tobytes()
            events.extend(_parse_tals(chunk, chunk_off, codes, rate, samples.shape[1]))
    events.sort(key=lambda e: e[0])

    return Recording(
        user_id=user_id or patient or "edf",
        rate=rate,
        samples=samples,
        events=events,
    )


_TAL_HEAD = re.compile(rb"^([+-]\d+(?:\.\d+)?)(?:\x15(\d+(?:\.\d+)?))?$")


def _parse_tals(chunk, base_offset, codes, rate, length):
    """Decode one record's annotation bytes into (onset_sample, label) events."""
    events = []
    pos = 0
    for tal in chunk.split(b"\x00"):
        if not tal:
            pos += 1
            continue
        parts = tal.split(b"\x14")
        head = _TAL_HEAD.match(parts[0])
        if head is None or len(parts) < 2:
            raise EdfError(
                f"unknown annotation syntax: {tal[:40]!r}", offset=base_offset + pos
            )
        onset_sec = float(head.group(1))
        for text in parts[1:]:
            name = text.decode("ascii", errors="replace")
            if name in codes:
                onset = int(round(onset_sec * rate))
                if not 0 <= onset < length:
                    raise EdfError(
                        f"event onset {onset_sec}s lies outside the recording",
                        offset=base_offset + pos,
                    )
                events.append((onset, codes[name]))
        pos += len(tal) + 1
    return events


def write_edf(recording, path=None, event_codes=None, include_annotations=True, patient_id=None):
    """Encode a Recording as EDF+ bytes; optionally also write to ``path``.

    Labels are emitted through ``event_codes`` (label -> text, default
    "T<label>"). Each channel's physical range is fitted to its data.
    """
    samples = recording.samples
    n_channels, length = samples.shape
    rate = recording.rate
    if abs(rate - round(rate)) < 1e-9 and length % int(round(rate)) == 0:
        spr = int(round(rate))
        record_duration = 1.0
    else:  # fall back to a single record holding everything
        spr = length
        record_duration = length / rate
    n_records = length // spr

    label_text = {}
    for _, label in recording.events:
        if event_codes and label in event_codes:
            label_text[label] = event_codes[label]
        else:
            label_text[label] = f"T{label}"

    dig_min, dig_max = -32768, 32767
    phys_lo, phys_hi, gains, dig_rows = [], [], [], []
    for ch in samples:
        bound = max(np.max(np.abs(ch)), 1e-6)
        hi_text = _num_field(bound * 1.0000001)
        # quantize against the range exactly as it will be read back
        hi = float(hi_text)
        lo_text = _num_field(-hi)
        lo = float(lo_text)
        gain = (hi - lo) / (dig_max - dig_min)
        dig = np.clip(np.round((ch - lo) / gain + dig_min), dig_min, dig_max)
        phys_lo.append(lo_text)
        phys_hi.append(hi_text)
        gains.append(gain)
        dig_rows.append(dig.astype("<i2"))

    ann_records = None
    if include_annotations:
        per_record = [[] for _ in range(n_records)]
        for onset, label in recording.events:
            per_record[min(onset // spr, n_records - 1)].append((onset, label))
        ann_records = []
        for r in range(n_records):
            buf = bytearray(f"+{r * record_duration:g}".encode() + b"\x14\x14\x00")
            for onset, label in per_record[r]:
                onset_sec = onset / rate
                buf += f"+{onset_sec:.6f}".encode() + b"\x14" + label_text[label].encode() + b"\x14\x00"
            ann_records.append(bytes(buf))
        ann_words = (max(len(b) for b in ann_records) + 1) // 2 + 1
        ann_records = [b.ljust(ann_words * 2, b"\x00") for b in ann_records]

    ns = n_channels + (1 if include_annotations else 0)
    head = bytearray()
    head += _text_field("0", 8)
    head += _text_field(patient_id or recording.user_id, 80)
    head += _text_field("bciqoe synthetic recording", 80)
    head += _text_field("01.01.00", 8)
    head += _text_field("00.00.00", 8)
    head += _text_field(str(256 * (ns + 1)), 8)
    head += _text_field("EDF+C", 44)
    head += _text_field(str(n_records), 8)
    head += _text_field(_num_field(record_duration), 8)
    head += _text_field(str(ns), 4)

    def emit(values, size):
        out = bytearray()
        for v in values:
            out += _text_field(v, size)
        return out

    ch_labels = [f"EEG ch{c}" for c in range(n_channels)]
    if include_annotations:
        ch_labels.append(ANNOTATION_LABEL)
    head += emit(ch_labels, 16)
    head += emit([""] * ns, 80)                       # transducer
    head += emit(["uV"] * n_channels + ([""] if include_annotations else []), 8)
    head += emit(phys_lo + (["-1"] if include_annotations else []), 8)
    head += emit(phys_hi + (["1"] if include_annotations else []), 8)
    head += emit([str(dig_min)] * n_channels + ([str(dig_min)] if include_annotations else []), 8)
    head += emit([str(dig_max)] * n_channels + ([str(dig_max)] if include_annotations else []), 8)
    head += emit([""] * ns, 80)                       # prefiltering
    sprs = [str(spr)] * n_channels + ([str(ann_words)] if include_annotations else [])
    head += emit(sprs, 8)
    head += emit([""] * ns, 32)                       # reserved

    body = bytearray()
    for r in range(n_records):
        for dig in dig_rows:
            body += dig[r * spr : (r + 1) * spr].tobytes()
        if include_annotations:
            body += ann_records[r]

    blob = bytes(head + body)
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(blob)
    return blob


def _text_field(value, size):
    encoded = str(value).encode("ascii", errors="replace")[:size]
    return encoded.ljust(size, b" ")


def _num_field(value):
    """Render a float into <= 8 EDF header characters."""
    for fmt in ("%g", "%.6g", "%.4g", "%.2g"):
        text = fmt % value
        if len(text) <= 8:
            return text
    return "%.1e" % value


# --- motor-imagery directory loading -------------------------------------

_RUN_FILE = re.compile(r"S(\d{3})R(\d{2})\.edf$", re.IGNORECASE)

# Protocol runs: 1 = baseline eyes open, 2 = baseline eyes closed,
# {3,4,7,8,11,12} = left/right fist tasks, {5,6,9,10,13,14} = fists/feet
# tasks. Classes: 0 open eyes, 1 closed eyes, 2 fist, 3 feet.
def default_run_label_map():
    mapping = {1: {"T0": 0}, 2: {"T0": 1}}
    for run in (3, 4, 7, 8, 11, 12):
        mapping[run] = {"T1": 2, "T2": 2}
    for run in (5, 6, 9, 10, 13, 14):
        mapping[run] = {"T1": 2, "T2": 3}
    return mapping


def load_edf_directory(directory, run_label_map=None, max_users=None):
    """Parse every S###R##.edf under ``directory`` into per-user Recordings.

    Runs missing from the map are skipped. Returns {user_id: [Recording]},
    with the run's code->label table applied to each file.
    """
    run_map = default_run_label_map() if run_label_map is None else run_label_map
    by_user = {}
    for name in sorted(os.listdir(directory)):
        m = _RUN_FILE.search(name)
        if not m:
            continue
        user, run = f"S{m.group(1)}", int(m.group(2))
        if run not in run_map:
            continue
        if max_users is not None and user not in by_user and len(by_user) >= max_users:
            continue
        rec = parse_edf(os.path.join(directory, name), event_codes=run_map[run], user_id=user)
        by_user.setdefault(user, []).append(rec)
    if not by_user:
        raise FileNotFoundError(f"no mappable EDF runs found under {directory}")
    return by_user
