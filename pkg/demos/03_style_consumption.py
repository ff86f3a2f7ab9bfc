"""
Driving style and fuel
======================

Same roads, different drivers: how much more does the aggressive one burn?
"""

import numpy as np
from ecodrive import fuel, mlp, pipeline, synth, trace
from ecodrive.fuel import VehicleProfile

gas = VehicleProfile.gasoline()
corpus = synth.generate_corpus(6, seed=99, duration_s=300)

for route in mlp.ROUTE_LABELS:
    row = []
    for style in mlp.STYLE_LABELS:
        vals = [fuel.trip_totals(t, gas).l_per_100km
                for t, r, s in zip(corpus.trips, corpus.routes, corpus.styles)
                if (r, s) == (route, style)]
        row.append(f"{style} {np.mean(vals):5.2f}")
    print(f"{route:<9}", "  ".join(row))

# Classify every 10 s window of a few fresh trips, then pool by predicted style.
def labels(window_s):
    return [[(r, s)] * len(trace.windows(t, window_s))
            for t, r, s in zip(corpus.trips, corpus.routes, corpus.styles)]

cfg = mlp.TrainConfig(max_cycles=600, seed=1)
route_net = pipeline.train_classifier(
    pipeline.window_dataset(corpus.trips, labels(3), "route", 3)[0], "route", cfg).model
style_net = pipeline.train_classifier(
    pipeline.window_dataset(corpus.trips, labels(3), "style", 3)[0], "style", cfg).model

reports = []
for seed, (route, style) in enumerate(synth.CLASSES):
    trip = synth.generate(synth.ScenarioSpec(route, style, 300, seed=1000 + seed))
    reports.append(pipeline.analyze(trip, gas, route_net, style_net))

print(pipeline.report_table(reports[-1]))
print(pipeline.style_table_text(pipeline.style_table(reports)))
