"""Smoke test for the caliper extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import json
import math
import random

import caliper


def main():
    # Hand-checked fixture: two uniform bins.
    view = caliper.ClassView.from_scores([0.3, 0.7, 0.9], [True, False, True])
    d = view.diagram(bins=2)
    assert [(b["conf"], b["acc"]) for b in d["bins"]] == [(0.3, 1.0), (0.8, 0.5)], d
    assert math.isclose(view.ece(bins=2), 13 / 30, abs_tol=1e-12)
    assert math.isclose(view.mce(bins=2), 0.7, abs_tol=1e-12)

    # Scoring rules against plain loops.
    rng = random.Random(0)
    probs, labels = [], []
    for _ in range(200):
        w = [rng.random() + 1e-3 for _ in range(3)]
        probs.append([v / sum(w) for v in w])
        labels.append(rng.randrange(3))
    model = caliper.Model("m", probs, labels)
    brier = sum(sum((p - (k == y)) ** 2 for k, p in enumerate(r)) for r, y in zip(probs, labels)) / len(labels)
    nll = -sum(math.log(r[y]) for r, y in zip(probs, labels)) / len(labels)
    assert math.isclose(caliper.brier_score(model), brier, abs_tol=1e-12)
    assert math.isclose(caliper.log_loss(model), nll, abs_tol=1e-12)
    assert sum(map(sum, model.confusion_matrix())) == 200

    # Calibrated synthetic data: small ECE and a near-diagonal learned curve.
    session = caliper.synth(n=20000, classes=2, informative=1, noise=1, seed=42)
    m = session.model("synth")
    cw = m.view("classwise", 1)
    assert cw.ece(bins=15) < 0.02
    lrd = cw.fit_lrd(seed=7)
    assert max(abs(lrd(s) - s) for s, _ in lrd.curve() if 0.1 <= s <= 0.9) < 0.1
    assert 0.0 < lrd(0.5) < 1.0

    # Payloads match the service layout.
    diagram = session.diagram("synth", mode="classwise", class_index=1, bins=10)
    assert sum(b["count"] for b in diagram["diagram"]["bins"]) == session.n
    region = session.region("synth", 0.8, 1.0, limit=5)
    assert len(region["rows"]) <= 5 and region["count"] >= len(region["rows"])
    feats = session.features()
    assert feats["count"] == session.n

    report = session.report([("synth", "classwise", 0), ("synth", "classwise", 1)], bins=10)
    assert report.svg().startswith("<svg")
    assert json.loads(report.to_json()) == report.to_dict()
    again = session.report([("synth", "classwise", 0), ("synth", "classwise", 1)], bins=10)
    assert again.to_json() == report.to_json()

    try:
        caliper.Model("bad", [[0.7, 0.7]], [0])
    except ValueError as e:
        assert "row sum" in str(e)
    else:
        raise AssertionError("invalid probabilities accepted")

    print("smoke test passed:", session)


if __name__ == "__main__":
    main()
