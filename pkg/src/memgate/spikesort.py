"""Spike waveform ingestion and the texel-array matching experiment.

Each waveform is triggered on its first rising crossing of ``v_trig``;
six samples are skipped and the next four become a texel input vector.
Per class, a low, a typical and a high instance (L/M/H) are selected by
the mean of those samples, shifted into the texel input range with a
common gain and offset, rounded to 10 mV and fed to the array.

Dataset files are plain CSV: one waveform per row, an integer class
label first, then the samples in volts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources

import numpy as np

from .texel import TexelArrayConfig, array_match

SAMPLE_OFFSET = 7
N_SAMPLES = 4
GAIN = 0.1
OFFSET = 0.66
TAGS = ("L", "M", "H")
FIXTURE_V_TRIG = 0.5


class DatasetError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class TriggerError(ValueError):
    pass


class SelectionError(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpikeDataset:
    waveforms: tuple
    source: str = ""

    def __post_init__(self):
        wf = tuple((int(c), np.asarray(s, dtype=float)) for c, s in self.waveforms)
        lengths = {len(s) for _, s in wf}
        if len(lengths) > 1:
            raise DatasetError(f"ragged waveforms, lengths {sorted(lengths)}")
        object.__setattr__(self, "waveforms", wf)

    def __len__(self):
        return len(self.waveforms)

    @property
    def labels(self):
        return sorted({c for c, _ in self.waveforms})

    def of_class(self, label):
        return [s for c, s in self.waveforms if c == label]


@dataclass(frozen=True)
class TexelInputVector:
    class_label: int
    instance_tag: str
    raw: tuple
    adjusted: tuple
    rounded: tuple


def load_dataset(path) -> SpikeDataset:
    rows = []
    with open(path, newline="") as fh:
        for line, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                label = int(rec[0])
                samples = [float(f) for f in rec[1:]]
            except ValueError as exc:
                raise DatasetError(f"cannot parse row: {exc}", line) from None
            if not samples:
                raise DatasetError("row has no samples", line)
            if rows and len(samples) != len(rows[0][1]):
                raise DatasetError(f"row has {len(samples)} samples, expected "
                                   f"{len(rows[0][1])}", line)
            rows.append((label, samples))
    if not rows:
        raise DatasetError(f"{path}: no waveforms")
    return SpikeDataset(tuple(rows), str(path))


def first_crossing(w, v_trig):
    """Index of the first sample above ``v_trig``, or None."""
    above = np.asarray(w) > v_trig
    hits = np.flatnonzero(above)
    return int(hits[0]) if hits.size else None


def _rising(w, v_trig):
    above = np.asarray(w) > v_trig
    idx = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    return idx if not above[0] else np.concatenate([[0], idx])


def trigger_and_sample(w, v_trig, offset=SAMPLE_OFFSET, n=N_SAMPLES):
    """Samples ``k+offset .. k+offset+n-1`` after the first crossing ``k``."""
    w = np.asarray(w, dtype=float)
    k = first_crossing(w, v_trig)
    if k is None:
        raise TriggerError(f"waveform never exceeds v_trig={v_trig}")
    end = k + offset + n
    if end > len(w):
        raise TriggerError(f"crossing at {k} leaves too few samples "
                           f"(need index {end - 1}, length {len(w)})")
    return w[k + offset:end].copy()


def is_corrupted(w, v_trig, window=SAMPLE_OFFSET + N_SAMPLES - 1):
    """True when a second rising crossing lands within ``window`` samples of the first."""
    r = _rising(w, v_trig)
    return r.size > 1 and r[1] - r[0] <= window


def exclude_corrupted(dataset: SpikeDataset, v_trig) -> SpikeDataset:
    kept = tuple((c, s) for c, s in dataset.waveforms if not is_corrupted(s, v_trig))
    return SpikeDataset(kept, dataset.source)


def round_volts(x):
    """Round to 0.01 V, halves away from zero.

    Values are first snapped to 9 decimals so that binary noise from the
    gain/offset arithmetic (0.735 stored as 0.73499999...) does not flip
    a tie.
    """
    d = Decimal(repr(round(float(x), 9))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return float(d)


def adjust_and_round(raw, gain=GAIN, offset=OFFSET):
    """``(adjusted, rounded)`` tuples for a raw sample vector."""
    adjusted = tuple(gain * float(r) + offset for r in raw)
    return adjusted, tuple(round_volts(a) for a in adjusted)


def select_lmh(dataset: SpikeDataset, class_label, v_trig, gain=GAIN, offset=OFFSET,
               sample_offset=SAMPLE_OFFSET):
    """L/M/H input vectors of one class, ranked by mean raw sample."""
    waves = dataset.of_class(class_label)
    if len(waves) < 3:
        raise SelectionError(f"class {class_label}: {len(waves)} instances, need 3")
    raws = [trigger_and_sample(w, v_trig, sample_offset) for w in waves]
    order = sorted(range(len(raws)), key=lambda i: float(np.mean(raws[i])))
    picks = dict(zip(TAGS, (order[0], order[(len(order) - 1) // 2], order[-1])))
    out = []
    for tag in TAGS:
        raw = tuple(float(r) for r in raws[picks[tag]])
        adjusted, rounded = adjust_and_round(raw, gain, offset)
        out.append(TexelInputVector(class_label, tag, raw, adjusted, rounded))
    return out


@dataclass(frozen=True)
class ExperimentRow:
    vector: TexelInputVector
    v_out: float
    clipped: bool
    shared_with: tuple = ()


def select_all(dataset, v_trig, gain=GAIN, offset=OFFSET, sample_offset=SAMPLE_OFFSET):
    clean = exclude_corrupted(dataset, v_trig)
    vectors = []
    for label in clean.labels:
        vectors.extend(select_lmh(clean, label, v_trig, gain, offset, sample_offset))
    return vectors


def run_experiment(dataset: SpikeDataset, array: TexelArrayConfig, v_trig, gain=GAIN,
                   offset=OFFSET, sample_offset=SAMPLE_OFFSET):
    """Evaluate the array on every selected L/M/H instance.

    Identical rounded vectors are evaluated once; their rows list each
    other in ``shared_with``.
    """
    if len(array.texels) != N_SAMPLES:
        raise ValueError(f"array has {len(array.texels)} texels, need {N_SAMPLES}")
    vectors = select_all(dataset, v_trig, gain, offset, sample_offset)
    cache, owners = {}, {}
    for v in vectors:
        owners.setdefault(v.rounded, []).append(f"{v.class_label}{v.instance_tag}")
        if v.rounded in cache:
            continue
        try:
            cache[v.rounded] = array_match(array, v.rounded)
        except Exception as exc:
            raise ExperimentError(f"class {v.class_label} {v.instance_tag}: {exc}") from exc
    rows = []
    for v in vectors:
        m = cache[v.rounded]
        me = f"{v.class_label}{v.instance_tag}"
        rows.append(ExperimentRow(v, m.v_out, m.clipped,
                                  tuple(o for o in owners[v.rounded] if o != me)))
    return rows


def format_report(rows) -> str:
    lines = ["class,tag,txl1,txl2,txl3,txl4,v_out"]
    for r in rows:
        v = r.vector
        vals = ",".join(f"{x:.4f}" for x in (*v.rounded, r.v_out))
        lines.append(f"{v.class_label},{v.instance_tag},{vals}")
    return "\n".join(lines) + "\n"


# Synthetic fixture -------------------------------------------------------

# Ideal (adjusted) sample vectors of the reference L/M/H instances.
REFERENCE_IDEAL = {
    (3, "H"): (0.7757, 0.7657, 0.7546, 0.7443),
    (3, "M"): (0.7592, 0.7510, 0.7427, 0.7350),
    (3, "L"): (0.7450, 0.7397, 0.7329, 0.7266),
    (2, "H"): (0.7400, 0.7270, 0.7163, 0.7071),
    (2, "M"): (0.7347, 0.7231, 0.7149, 0.7094),
    (2, "L"): (0.7164, 0.7058, 0.6983, 0.6923),
    (1, "H"): (0.7151, 0.7055, 0.6971, 0.6904),
    (1, "M"): (0.7115, 0.7014, 0.6926, 0.6863),
    (1, "L"): (0.6991, 0.6888, 0.6788, 0.6705),
}
CLASS_PEAK = {1: 1.6, 2: 2.0, 3: 2.4}
FIXTURE_LENGTH = 40
FIXTURE_ONSET = 10
FIXTURE_SEED = 20180
BASELINE_NOISE = 0.02


def _spike(peak, tail, length=FIXTURE_LENGTH, onset=FIXTURE_ONSET):
    """Triangular spike whose samples ``k+7..k+10`` equal ``tail``.

    Rises over two samples (crossing ``FIXTURE_V_TRIG`` at ``onset + 1``),
    falls linearly from the peak to the tail window, then linearly to 0.
    """
    w = np.zeros(length)
    w[onset] = 0.1 * peak
    w[onset + 1] = 0.6 * peak
    w[onset + 2] = peak
    k = onset + 1
    a, b = k + SAMPLE_OFFSET, k + SAMPLE_OFFSET + N_SAMPLES
    w[onset + 2:a + 1] = np.linspace(peak, tail[0], a - onset - 1)
    w[a:b] = tail
    stop = b + 8
    w[b - 1:stop] = np.linspace(tail[-1], 0.0, stop - b + 1)
    return w


def _corrupted(peak, length=FIXTURE_LENGTH, onset=FIXTURE_ONSET, gap=8):
    w = np.zeros(length)
    for start in (onset, onset + gap):
        w[start:start + 4] = peak * np.array([0.1, 0.6, 1.0, 0.3])
    return w


def synthetic_dataset(seed=FIXTURE_SEED, fillers=3):
    """Deterministic fixture: ``2 * fillers + 3`` clean spikes per class plus one corrupted.

    The reference L/M/H spikes carry the ideal samples above (inverted
    through the default gain and offset). Fillers are convex blends
    between L and M and between M and H, so the L/M/H ranking is known
    by construction. A two-spike waveform is appended to class 2.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for c in (1, 2, 3):
        ref = {t: _spike(CLASS_PEAK[c], (np.array(REFERENCE_IDEAL[c, t]) - OFFSET) / GAIN)
               for t in TAGS}
        waves = [ref["L"], ref["M"], ref["H"]]
        for j in range(1, fillers + 1):
            f = j / (fillers + 1)
            waves.append((1 - f) * ref["L"] + f * ref["M"])
            waves.append((1 - f) * ref["M"] + f * ref["H"])
        perm = rng.permutation(len(waves))
        for i in perm:
            w = waves[i].copy()
            quiet = w == 0.0
            w[quiet] = rng.uniform(-BASELINE_NOISE, BASELINE_NOISE, quiet.sum())
            rows.append((c, w))
    rows.append((2, _corrupted(CLASS_PEAK[2])))
    return SpikeDataset(tuple(rows), "synthetic")


def write_dataset(dataset: SpikeDataset, path):
    with open(path, "w", newline="") as fh:
        for c, s in dataset.waveforms:
            fh.write(f"{c}," + ",".join(f"{x:.6f}" for x in s) + "\n")


def fixture_path():
    return resources.files("memgate") / "data" / "spikes_synthetic.csv"


def load_fixture() -> SpikeDataset:
    with resources.as_file(fixture_path()) as p:
        return load_dataset(p)
