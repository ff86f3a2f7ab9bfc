"""End-to-end processing: hex logs to traces, corpora to trained
classifiers, traces to trip reports, and reports to per-style tables."""
from __future__ import annotations

import csv
import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import features, fuel, mlp, trace
from .config import Config
from .errors import (BadWeights, CorruptFile, EmptyInput, EmptyTrace,
                     FrameError, LabelMismatch, VersionMismatch, BadTopology)
from .fuel import VehicleProfile
from .obd import Channel, decode, parse_hex
from .trace import Sample, Trip

REPORT_FORMAT = "ecodrive-report"
REPORT_VERSION = 1

_SAMPLE_ATTR = {
    Channel.SPEED: "speed", Channel.RPM: "rpm", Channel.MAF: "maf",
    Channel.MAP: "map", Channel.IAT: "iat", Channel.ABS_LOAD: "abs_load",
    Channel.FUEL_RATE: "fuel_rate",
}


# -- hex logs -----------------------------------------------------------------

@dataclass
class DecodeResult:
    samples: list
    diagnostics: list = field(default_factory=list)   # (line number, message)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def decode_log(lines: Iterable[str]) -> DecodeResult:
    """Turn a log of ``<t_ms> <hex frame>`` lines into samples.

    Frames sharing a timestamp form one sample; a timestamp without both
    speed and rpm is dropped. Blank lines and ``#`` comments are skipped.
    Problems are collected as diagnostics rather than raised.
    """
    groups: "OrderedDict[int, dict]" = OrderedDict()
    first_line: dict[int, int] = {}
    diags = []
    last_t = None
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        head, _, rest = text.partition(" ")
        try:
            t = int(head)
        except ValueError:
            diags.append((lineno, f"bad timestamp {head!r}"))
            continue
        if last_t is not None and t < last_t:
            diags.append((lineno, f"timestamp {t} goes backwards"))
            continue
        try:
            reading = decode(parse_hex(rest))
        except FrameError as exc:
            diags.append((lineno, f"{type(exc).__name__}: {exc}"))
            continue
        last_t = t
        groups.setdefault(t, {})[_SAMPLE_ATTR[reading.channel]] = reading.value
        first_line.setdefault(t, lineno)

    samples = []
    for t, vals in groups.items():
        if "speed" not in vals or "rpm" not in vals:
            diags.append((first_line[t], f"t={t}: no speed and rpm frames, sample dropped"))
            continue
        samples.append(Sample(t=t, **vals))
    return DecodeResult(samples, sorted(diags))


# -- corpora ------------------------------------------------------------------

@dataclass
class LabeledCorpus:
    trip_ids: list
    trips: list
    # per trip: list of (route_label, style_label), one per window
    window_labels: list
    window_s: float


def load_corpus(directory, window_s: float, vehicle: Optional[VehicleProfile] = None
                ) -> LabeledCorpus:
    directory = Path(directory)
    sidecar = directory / "labels.csv"
    if not sidecar.exists():
        raise LabelMismatch(f"no labels.csv in {directory}")
    rows: dict[str, dict[int, tuple[str, str]]] = {}
    with open(sidecar, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"trip_id", "window_index", "route_label", "style_label"}
        if not need <= set(reader.fieldnames or ()):
            raise LabelMismatch(f"labels.csv needs columns {sorted(need)}")
        for r in reader:
            if r["route_label"] not in mlp.ROUTE_LABELS or r["style_label"] not in mlp.STYLE_LABELS:
                raise LabelMismatch(f"unknown label in {dict(r)}")
            rows.setdefault(r["trip_id"], {})[int(r["window_index"])] = (
                r["route_label"], r["style_label"])
    if not rows:
        raise LabelMismatch("labels.csv has no rows")

    corpus = LabeledCorpus([], [], [], window_s)
    for tid in sorted(rows):
        path = directory / f"{tid}.csv"
        if not path.exists():
            raise LabelMismatch(f"labels refer to missing trace {path.name}")
        trip = trace.read_trip(path, vehicle)
        n = len(trace.windows(trip, window_s))
        if sorted(rows[tid]) != list(range(n)):
            raise LabelMismatch(
                f"{tid}: {n} windows of {window_s} s but labels cover "
                f"{len(rows[tid])}; was the corpus written with another window length?")
        corpus.trip_ids.append(tid)
        corpus.trips.append(trip)
        corpus.window_labels.append([rows[tid][k] for k in range(n)])
    return corpus


def _round_robin(classes: np.ndarray) -> np.ndarray:
    """Order rows so classes alternate; keeps online updates from drifting
    towards whichever class came last."""
    buckets = [list(np.flatnonzero(classes == k)) for k in range(mlp.N_OUTPUTS)]
    order = []
    depth = max(len(b) for b in buckets)
    for i in range(depth):
        order.extend(b[i] for b in buckets if i < len(b))
    return np.array(order, dtype=int)


def window_dataset(trips: Sequence[Trip], window_labels: Sequence[Sequence[tuple]],
                   target: str, window_s: float,
                   ranges: features.NormalizationRanges = features.NormalizationRanges(),
                   feature_set: str = features.DEFAULT_FEATURE_SET,
                   min_speed_kmh: float = 3.0) -> tuple[mlp.LabeledSet, np.ndarray]:
    """Labelled feature rows for one classifier, classes interleaved.

    Idle windows (mean speed under ``min_speed_kmh``) are left out of the
    style set. Returns the set and, per row, the index of its source trip.
    """
    labels = mlp.ROUTE_LABELS if target == "route" else mlp.STYLE_LABELS
    col = 0 if target == "route" else 1
    xs, ys, src = [], [], []
    for i, (trip, wl) in enumerate(zip(trips, window_labels)):
        wins = trace.windows(trip, window_s)
        if len(wins) != len(wl):
            raise LabelMismatch(f"trip {i}: {len(wins)} windows but {len(wl)} labels")
        for w, lab in zip(wins, wl):
            if target == "style" and w.speed.mean() < min_speed_kmh:
                continue
            xs.append(features.extract(w, feature_set))
            ys.append(labels.index(lab[col]))
            src.append(i)
    if not xs:
        raise EmptyInput("no usable windows")
    x = features.normalize(np.vstack(xs), ranges, feature_set)
    ys, src = np.array(ys), np.array(src)
    order = _round_robin(ys)
    return mlp.LabeledSet.from_classes(x[order], ys[order]), src[order]


def labels_for(target: str) -> tuple:
    if target not in ("route", "style"):
        raise ValueError(f"target must be 'route' or 'style', got {target!r}")
    return mlp.ROUTE_LABELS if target == "route" else mlp.STYLE_LABELS


@dataclass
class TrainResult:
    model: mlp.MlpModel
    history: mlp.History
    accuracy: float
    per_class_accuracy: dict
    confusion: np.ndarray
    n_rows: int

    def metrics(self) -> dict:
        return {
            "rows": self.n_rows,
            "cycles": self.history.cycles,
            "initial_sse": self.history.sse[0],
            "final_sse": self.history.sse[-1],
            "final_mse": self.history.mse[-1],
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "confusion": self.confusion.tolist(),
            "labels": list(self.model.labels),
        }


def evaluate(model: mlp.MlpModel, data: mlp.LabeledSet) -> tuple[float, dict, np.ndarray]:
    conf = mlp.confusion(model, data)
    per = {}
    for k, lab in enumerate(model.labels):
        total = conf[k].sum()
        per[lab] = float(conf[k, k] / total) if total else None
    return mlp.accuracy(model, data), per, conf


def train_classifier(data: mlp.LabeledSet, target: str, cfg: mlp.TrainConfig
                     ) -> TrainResult:
    labels = labels_for(target)
    model = mlp.init([data.x.shape[1], cfg.hidden, mlp.N_OUTPUTS], cfg.seed,
                     cfg.init_range, labels)
    model, hist = mlp.train(model, data, cfg)
    acc, per, conf = evaluate(model, data)
    return TrainResult(model, hist, acc, per, conf, len(data))


def train_from_corpus(corpus: LabeledCorpus, target: str, config: Config = Config()
                      ) -> TrainResult:
    labels_for(target)
    data, _ = window_dataset(corpus.trips, corpus.window_labels, target, corpus.window_s,
                             config.ranges, config.feature_set,
                             config.analysis.min_speed_kmh)
    return train_classifier(data, target, config.train)


# -- trip reports ---------------------------------------------------------------

def _num(x) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def load_weights(path, target: str, n_in: int) -> mlp.MlpModel:
    try:
        model = mlp.load(path)
    except (OSError, CorruptFile, VersionMismatch, BadTopology) as exc:
        raise BadWeights(f"{path}: {exc}") from None
    if model.labels != labels_for(target):
        raise BadWeights(f"{path}: labels {model.labels} are not {target} labels")
    if model.n_in != n_in:
        raise BadWeights(f"{path}: network takes {model.n_in} inputs, features give {n_in}")
    return model


def analyze(trip: Trip, profile: VehicleProfile, route_model: mlp.MlpModel,
            style_model: mlp.MlpModel, config: Config = Config(),
            window_s: Optional[float] = None) -> dict:
    """Classify every window of ``trip`` and attach its fuel and CO2 figures."""
    window_s = config.analysis.window_s if window_s is None else window_s
    min_speed = config.analysis.min_speed_kmh
    wins = trace.windows(trip, window_s)
    co2_l = fuel.co2_per_liter(profile)
    try:
        tot = fuel.trip_totals(trip, profile)
    except fuel.NoUsableChannels:
        tot = None

    rows = []
    for k, w in enumerate(wins):
        x = features.normalize(features.extract(w, config.feature_set), config.ranges,
                               config.feature_set)
        route, route_conf = mlp.classify(route_model, x)
        mean_speed = float(w.speed.mean())
        idle = mean_speed < min_speed
        if idle:
            style, style_conf = None, None
        else:
            style, style_conf = mlp.classify(style_model, x)
        try:
            wt = fuel.totals(w.samples, w.dt_s, profile)
        except fuel.NoUsableChannels:
            wt = None
        rows.append({
            "index": k,
            "start_t_ms": w.start_t,
            "end_t_ms": w.end_t,
            "mean_speed_kmh": mean_speed,
            "idle": idle,
            "route": route,
            "route_confidence": [float(c) for c in route_conf],
            "style": style,
            "style_confidence": None if style_conf is None else [float(c) for c in style_conf],
            "fuel_ok": wt is not None,
            "fuel_l": None if wt is None else wt.liters,
            "km": None if wt is None else wt.covered_km,
            "l_per_100km": None if wt is None else _num(wt.l_per_100km),
            "kg_co2": None if wt is None else wt.kg_co2,
            "kg_co2_per_100km": None if wt is None else _num(wt.kg_co2_per_100km),
        })

    speeds = trip.column("speed")
    header = {
        "capture_date": trip.capture_date,
        "duration_s": trip.duration_s,
        "max_speed_kmh": float(np.nanmax(speeds)),
        "n_samples": len(trip),
        "window_s": float(window_s),
        "fuel": profile.fuel.value,
        "co2_kg_per_l": co2_l,
        "total_fuel_l": None if tot is None else tot.liters,
        "distance_km": float(np.sum(speeds * trip.intervals_s()) / 3600.0),
        "l_per_100km": None if tot is None else _num(tot.l_per_100km),
        "kg_co2": None if tot is None else tot.kg_co2,
        "kg_co2_per_100km": None if tot is None else _num(tot.kg_co2_per_100km),
        "samples_without_fuel_path": len(trip) if tot is None else tot.n_unusable,
    }
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "header": header,
        "windows": rows,
        "aggregates": aggregate(rows),
    }


def aggregate(rows: Sequence[dict]) -> dict:
    """Class distributions and per-style consumption from per-window rows."""
    def distribution(key, labels):
        picked = [r[key] for r in rows if r[key] is not None]
        if not picked:
            return {}
        return {lab: picked.count(lab) / len(picked) for lab in labels}

    by_style = {}
    for lab in mlp.STYLE_LABELS:
        mine = [r for r in rows if r["style"] == lab and r["fuel_ok"]]
        if not mine:
            continue
        liters = math.fsum(r["fuel_l"] for r in mine)
        km = math.fsum(r["km"] for r in mine)
        kg = math.fsum(r["kg_co2"] for r in mine)
        by_style[lab] = {
            "windows": len(mine),
            "fuel_l": liters,
            "km": km,
            "l_per_100km": liters / km * 100.0 if km > 0 else None,
            "kg_co2_per_100km": kg / km * 100.0 if km > 0 else None,
        }
    n_idle = sum(1 for r in rows if r["idle"])
    notes = []
    if rows and n_idle == len(rows):
        notes.append("vehicle idling for the whole trace; no driving style assigned")
    if any(not r["fuel_ok"] for r in rows):
        notes.append("some windows lack a fuel path (no fuel rate, MAF, load or MAP+IAT)")
    if not rows:
        notes.append("trace shorter than one analysis window")
    return {
        "n_windows": len(rows),
        "n_idle_windows": n_idle,
        "route_distribution": distribution("route", mlp.ROUTE_LABELS),
        "style_distribution": distribution("style", mlp.STYLE_LABELS),
        "consumption_by_style": by_style,
        "notes": notes,
    }


def report_dumps(report: dict) -> str:
    # insertion order is fixed by construction; floats use repr
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def report_loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise EmptyInput(f"not a report: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise EmptyInput("not an ecodrive report")
    return doc


def majority(report: dict, key: str) -> Optional[str]:
    dist = report["aggregates"][f"{key}_distribution"]
    if not dist:
        return None
    return max(dist, key=lambda lab: (dist[lab], -list(dist).index(lab)))


def report_table(report: dict) -> str:
    """Human-readable view of a report."""
    h = report["header"]
    fmt = lambda v, spec=".2f": "-" if v is None else format(v, spec)
    out = [
        f"date: {h['capture_date'] or '-'}   duration: {h['duration_s']:.0f} s   "
        f"max speed: {h['max_speed_kmh']:.0f} km/h",
        f"fuel: {fmt(h['total_fuel_l'], '.3f')} l over {h['distance_km']:.2f} km "
        f"({fmt(h['l_per_100km'])} l/100km, {fmt(h['kg_co2_per_100km'])} kg CO2/100km)",
        "",
        f"{'win':>4} {'t0 s':>6} {'km/h':>6}  {'route':<9} {'style':<10} {'l/100km':>8}",
    ]
    for r in report["windows"]:
        out.append(f"{r['index']:>4} {r['start_t_ms'] / 1000:>6.0f} {r['mean_speed_kmh']:>6.1f}  "
                   f"{r['route']:<9} {r['style'] or 'idle':<10} {fmt(r['l_per_100km']):>8}")
    agg = report["aggregates"]
    out.append("")
    for key in ("route", "style"):
        dist = agg[f"{key}_distribution"]
        out.append(f"{key}: " + (", ".join(f"{k} {v:.0%}" for k, v in dist.items()) or "-"))
    for lab, c in agg["consumption_by_style"].items():
        out.append(f"  {lab:<10} {fmt(c['l_per_100km'])} l/100km  "
                   f"{fmt(c['kg_co2_per_100km'])} kg CO2/100km  ({c['windows']} windows)")
    out.extend(f"note: {n}" for n in agg["notes"])
    return "\n".join(out) + "\n"


# -- style table ----------------------------------------------------------------

def _box(values: Sequence[float]) -> dict:
    if not values:
        return {"n": 0, "mean": None, "min": None, "q1": None, "median": None,
                "q3": None, "max": None}
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"n": len(v), "mean": float(v.mean()), "min": float(v.min()), "q1": float(q1),
            "median": float(med), "q3": float(q3), "max": float(v.max())}


def style_table(reports: Sequence[dict]) -> dict:
    """Box-plot statistics of consumption and CO2 per style class.

    Each report contributes its pooled per-style figure, one value per style
    it contains.
    """
    if not reports:
        raise EmptyInput("no reports given")
    cons = {lab: [] for lab in mlp.STYLE_LABELS}
    co2 = {lab: [] for lab in mlp.STYLE_LABELS}
    for rep in reports:
        for lab, c in rep["aggregates"]["consumption_by_style"].items():
            if c["l_per_100km"] is not None:
                cons[lab].append(c["l_per_100km"])
                co2[lab].append(c["kg_co2_per_100km"])
    if not any(cons.values()):
        raise EmptyInput("no report has a classified window with fuel data")
    table = {lab: {"l_per_100km": _box(cons[lab]), "kg_co2_per_100km": _box(co2[lab])}
             for lab in mlp.STYLE_LABELS}
    ratios = {}
    q, a = table["quiet"]["l_per_100km"]["mean"], table["aggressive"]["l_per_100km"]["mean"]
    if q and a is not None:
        ratios["aggressive_over_quiet"] = a / q
    return {"reports": len(reports), "styles": table, "ratios": ratios}


def style_table_text(table: dict) -> str:
    fmt = lambda v: "-" if v is None else f"{v:.2f}"
    out = [f"{'style':<11}{'n':>4}{'mean':>8}{'min':>8}{'q1':>8}{'median':>8}{'q3':>8}{'max':>8}"]
    for metric, title in (("l_per_100km", "l/100km"), ("kg_co2_per_100km", "kg CO2/100km")):
        out.append(f"-- {title}")
        for lab, stats in table["styles"].items():
            s = stats[metric]
            out.append(f"{lab:<11}{s['n']:>4}" + "".join(
                f"{fmt(s[k]):>8}" for k in ("mean", "min", "q1", "median", "q3", "max")))
    for name, v in table["ratios"].items():
        out.append(f"{name.replace('_', ' ')}: {v:.3f}")
    return "\n".join(out) + "\n"
