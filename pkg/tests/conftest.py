import pytest

from ecodrive import pipeline, synth, trace
from ecodrive.mlp import TrainConfig


@pytest.fixture(scope="session")
def small_corpus():
    return synth.generate_corpus(6, seed=123, duration_s=240, noise_level=0.1)


def _labels(corpus, window_s):
    return [[(r, s)] * len(trace.windows(t, window_s))
            for t, r, s in zip(corpus.trips, corpus.routes, corpus.styles)]


@pytest.fixture(scope="session")
def trained_models(small_corpus):
    """Route and style networks trained on 3 s windows."""
    cfg = TrainConfig(max_cycles=400, seed=1)
    models = {}
    for target in ("route", "style"):
        data, _ = pipeline.window_dataset(small_corpus.trips, _labels(small_corpus, 3),
                                          target, 3)
        models[target] = pipeline.train_classifier(data, target, cfg).model
    return models


@pytest.fixture(scope="session")
def weights_files(trained_models, tmp_path_factory):
    from ecodrive import mlp
    d = tmp_path_factory.mktemp("weights")
    paths = {}
    for target, model in trained_models.items():
        paths[target] = d / f"{target}.json"
        mlp.save(model, paths[target])
    return paths


def pytest_terminal_summary(terminalreporter, config):
    from test_acceptance import ACCEPTANCE_KEY
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
