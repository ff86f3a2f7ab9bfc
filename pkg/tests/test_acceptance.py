"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are echoed as the tests run and again in the terminal summary.
"""
import io
from dataclasses import replace
import math
import time

import numpy as np
import pytest

from ecodrive import fuel, mlp, obd, pipeline, synth, trace
from ecodrive.errors import FrameError
from ecodrive.fuel import Method, VehicleProfile
from ecodrive.mlp import LabeledSet, ROUTE_LABELS, STYLE_LABELS, TrainConfig

from test_mlp import finite_difference_gradient, rel_error


@pytest.fixture
def verdict(request, capsys):
    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        request.config.stash.setdefault(ACCEPTANCE_KEY, []).append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return record


ACCEPTANCE_KEY = pytest.StashKey[list]()


def test_1_co2_constant(verdict):
    diesel = VehicleProfile.diesel()
    per_kg, per_l = fuel.co2_per_kg(diesel), fuel.co2_per_liter(diesel)
    ok = abs(per_l - 2.64) <= 0.005 and abs(per_kg - 3.15) <= 0.005
    verdict(1, ok, f"diesel CO2 {per_l:.5f} kg/l (2.64), {per_kg:.5f} kg/kg (3.15)")


def test_2_flow_arithmetic(verdict):
    l100 = fuel.consumption_l_per_100km(6.0, 60.0)
    flow = fuel.fuel_flow_from_maf(10.0, VehicleProfile.gasoline())
    ok = l100 == 10.0 and abs(flow - 2.986) <= 1e-3
    verdict(2, ok, f"6 l/h at 60 km/h -> {l100!r} l/100km; 10 g/s gasoline -> {flow:.5f} l/h")


def test_3_fallback_chain(verdict):
    trip = synth.generate(synth.ScenarioSpec("suburban", "normal", 120, seed=31,
                                             with_fuel_rate=True))
    prof = trip.vehicle
    s = next(x for x in trip.samples if x.speed > 40)
    masked = [s, replace(s, fuel_rate=None), replace(s, fuel_rate=None, maf=None),
              replace(s, fuel_rate=None, maf=None, abs_load=None)]
    ests = [fuel.estimate(x, prof) for x in masked]
    methods = [e.method for e in ests]
    maf_path = [e.consumption for e in ests[1:]]
    spread = (max(maf_path) - min(maf_path)) / min(maf_path)
    ok = (methods == [Method.DIRECT_PID, Method.FROM_MAF, Method.MAF_FROM_LOAD,
                      Method.MAF_FROM_MAP] and spread <= 0.02)
    verdict(3, ok, " -> ".join(m.value for m in methods)
            + f"; MAF-path l/100km {', '.join(f'{c:.4f}' for c in maf_path)}"
            + f" (spread {spread:.2e})")


def test_4_gradient_check(verdict):
    rng = np.random.default_rng(2024)
    shapes = [(1, 2, 3), (2, 3, 3), (3, 5, 3), (4, 6, 3), (6, 8, 3)]
    worst, n = 0.0, 0
    for i in range(24):
        sizes = shapes[i % len(shapes)]
        model = mlp.init(sizes, int(rng.integers(1 << 30)), init_range=1.0)
        k = int(rng.integers(1, 8))
        data = LabeledSet.from_classes(rng.uniform(0, 1, (k, sizes[0])), rng.integers(0, 3, k))
        worst = max(worst, rel_error(mlp.gradient(model, data),
                                     finite_difference_gradient(model, data)))
        n += 1
    verdict(4, n >= 20 and worst < 1e-6,
            f"{n} random models up to 6-8-3, worst relative error {worst:.2e}")


def _split_by_trip(corpus, seed, frac=0.7):
    """Per-class 70/30 split of whole trips so no trip feeds both sides."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for route in ROUTE_LABELS:
        for style in STYLE_LABELS:
            idx = [i for i, rs in enumerate(zip(corpus.routes, corpus.styles))
                   if rs == (route, style)]
            idx = list(rng.permutation(idx))
            cut = round(frac * len(idx))
            train += idx[:cut]
            test += idx[cut:]
    return sorted(train), sorted(test)


def _dataset(corpus, idx, target, window_s):
    trips = [corpus.trips[i] for i in idx]
    labels = [[(corpus.routes[i], corpus.styles[i])] * len(trace.windows(corpus.trips[i],
                                                                          window_s))
              for i in idx]
    return pipeline.window_dataset(trips, labels, target, window_s)[0]


@pytest.mark.slow
def test_5_learnability(verdict):
    t0 = time.perf_counter()
    corpus = synth.generate_corpus(10, seed=5, duration_s=300, noise_level=0.1)
    train_idx, test_idx = _split_by_trip(corpus, seed=17)
    cfg = TrainConfig(learning_rate=0.2, max_cycles=2000, seed=3)
    parts, ok = [], True
    for target in ("route", "style"):
        res = pipeline.train_classifier(_dataset(corpus, train_idx, target, 3), target, cfg)
        acc3 = mlp.accuracy(res.model, _dataset(corpus, test_idx, target, 3))
        acc10 = mlp.accuracy(res.model, _dataset(corpus, test_idx, target, 10))
        ok &= acc3 >= 0.90 and res.history.cycles <= 2000
        parts.append(f"{target} {acc3:.1%} held-out ({acc10:.1%} on 10 s windows, "
                     f"{res.history.cycles} cycles)")
    dt = time.perf_counter() - t0
    verdict(5, ok and dt < 120, "; ".join(parts) + f"; {dt:.0f} s")


def test_6_style_consumption(verdict):
    corpus = synth.generate_corpus(6, seed=99, duration_s=300, noise_level=0.1)
    gas = VehicleProfile.gasoline()
    by = {}
    for trip, r, s in zip(corpus.trips, corpus.routes, corpus.styles):
        t = fuel.trip_totals(trip, gas)
        by.setdefault(s, []).append((t.l_per_100km, t.kg_co2_per_100km))
        by.setdefault((r, s), []).append((t.l_per_100km, t.kg_co2_per_100km))
    mean = {k: np.mean(v, axis=0) for k, v in by.items()}
    ok = True
    for keyset in [STYLE_LABELS] + [[(r, s) for s in STYLE_LABELS] for r in ROUTE_LABELS]:
        q, n, a = (mean[k] for k in keyset)
        ok &= a[0] > n[0] > q[0] and a[1] > n[1] > q[1]
    ratio = mean["aggressive"][0] / mean["quiet"][0]
    ok &= ratio >= 1.15
    verdict(6, ok, "mean l/100km quiet {:.2f}, normal {:.2f}, aggressive {:.2f}; "
            "ratio {:.3f}; ordering holds on every route and for CO2".format(
                mean["quiet"][0], mean["normal"][0], mean["aggressive"][0], ratio)
            if ok else f"means {mean}, ratio {ratio:.3f}")


def _report_bytes(seed):
    corpus = synth.generate_corpus(2, seed=seed, duration_s=90)
    cfg = TrainConfig(max_cycles=50, seed=seed)
    models = {}
    for target in ("route", "style"):
        data = _dataset(corpus, range(len(corpus)), target, 3)
        models[target] = pipeline.train_classifier(data, target, cfg).model
    trip = synth.generate(synth.ScenarioSpec("urban", "aggressive", 120, seed=seed))
    return pipeline.report_dumps(pipeline.analyze(trip, VehicleProfile.gasoline(),
                                                  models["route"], models["style"]))


def test_7_determinism_and_round_trips(verdict, tmp_path):
    rng = np.random.default_rng(7)
    model = mlp.init([6, 8, 3], 11, labels=STYLE_LABELS)
    model = model.with_params(model.params() * rng.uniform(-5, 5, model.params().size))
    mlp.save(model, tmp_path / "w.json")
    back = mlp.load(tmp_path / "w.json")
    x = rng.uniform(0, 1, (1000, 6))
    weights_ok = back.equals(model) and np.array_equal(mlp.forward(back, x),
                                                       mlp.forward(model, x))

    trip = synth.generate(synth.ScenarioSpec("highway", "normal", 200, seed=8,
                                             with_fuel_rate=True))
    text = trace.to_csv_text(trip)
    again = trace.ingest_csv(io.StringIO(text), trip.vehicle)
    csv_ok = again.samples == trip.samples and trace.to_csv_text(again) == text

    reports_ok = _report_bytes(12) == _report_bytes(12)
    verdict(7, weights_ok and csv_ok and reports_ok,
            f"weights bitwise {weights_ok}, trace CSV identity {csv_ok}, "
            f"reports byte-identical {reports_ok}")


def _fuzz_frames(n, seed):
    """Random frames, half of them steered toward plausible mode 01 replies."""
    rng = np.random.default_rng(seed)
    pids = np.array(sorted(obd.PIDS))
    lengths = rng.integers(0, 7, n)
    body = rng.integers(0, 256, (n, 6), dtype=np.uint8)
    steer = rng.random(n) < 0.5
    body[steer, 0] = 0x41
    body[steer, 1] = pids[rng.integers(0, len(pids), steer.sum())]
    return [bytes(row[:k]) for row, k in zip(body, lengths)]


def test_8_decoder_totality(verdict):
    t0 = time.perf_counter()
    n, accepted, bad = 10**6, 0, []
    for raw in _fuzz_frames(n, seed=8):
        try:
            frame = obd.parse_frame(raw)
        except FrameError:
            continue
        reading = obd.decode(frame)
        accepted += 1
        if not (math.isfinite(reading.value) and obd.in_range(reading.channel, reading.value)):
            bad.append(raw)
    dt = time.perf_counter() - t0
    verdict(8, not bad and dt < 60,
            f"{n} random frames, {accepted} accepted, {len(bad)} out of range, {dt:.1f} s")
