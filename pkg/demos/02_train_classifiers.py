"""
Training the route and style networks
=====================================

Six window features feed a small sigmoid network, one per target.
"""

import numpy as np
from ecodrive import features, mlp, pipeline, synth, trace

# Ten trips for every (route, style) pair.
corpus = synth.generate_corpus(10, seed=5, duration_s=300, noise_level=0.1)
print(len(corpus), "trips")

# Each 3 s window becomes one row of normalized features.
w = trace.windows(corpus.trips[0], 3)[4]
print(dict(zip(features.FEATURE_NAMES, features.extract(w).round(2).tolist())))
print(features.normalize(features.extract(w)).round(3))

# Hold out whole trips, so no trip contributes to both sides.
rng = np.random.default_rng(17)
order = rng.permutation(len(corpus))
train_ids, test_ids = sorted(order[:63]), sorted(order[63:])

def dataset(ids, target, window_s=3):
    trips = [corpus.trips[i] for i in ids]
    labels = [[(corpus.routes[i], corpus.styles[i])] * len(trace.windows(corpus.trips[i], window_s))
              for i in ids]
    return pipeline.window_dataset(trips, labels, target, window_s)[0]

cfg = mlp.TrainConfig(learning_rate=0.2, max_cycles=1000, seed=3)
models = {}
for target in ("route", "style"):
    res = pipeline.train_classifier(dataset(train_ids, target), target, cfg)
    models[target] = res.model
    held = dataset(test_ids, target)
    print(target, "SSE", round(res.history.sse[0], 1), "->", round(res.history.sse[-1], 1))
    print(target, "held-out accuracy", mlp.accuracy(res.model, held))
    print(mlp.confusion(res.model, held))

# Weights are plain JSON and load back bit for bit.
text = mlp.dumps(models["style"])
assert mlp.loads(text).equals(models["style"])
