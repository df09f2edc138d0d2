"""Smoke test for the pymemlab extension module.

Build the module and place it next to this script, then run it:

    cargo build --release -p memlab-py --features extension-module
    cp target/release/libpymemlab.so python/pymemlab.so
    python3 python/smoke_test.py
"""

import math
import os
import tempfile

import pymemlab as pm


def main():
    data = pm.synth_clusters(num_classes=4, per_class=30, dims=8, seed=1)
    assert len(data) == 120 and data.sample_shape == [8]
    train, test = data.split_at(80)

    net, csv = pm.train_classifier(train, epochs=20, hidden=32, seed=3, test=test)
    assert csv.splitlines()[0] == "epoch,train_acc,test_acc,loss,g_bar"
    assert len(csv.splitlines()) == 21

    probs = net.predict_probs(test.inputs()[:5])
    assert all(abs(sum(row) - 1.0) < 1e-9 for row in probs)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.nnck")
        net.save(path)
        again = pm.Network.load(path)
        back = again.predict_probs(test.inputs()[:5])
        assert max(abs(a - b) for r, s in zip(probs, back) for a, b in zip(r, s)) < 1e-6

    assert abs(pm.kl_divergence([1.0, 0.0], [0.5, 0.5]) - math.log(2)) < 1e-15
    assert pm.kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0

    gen = pm.ClusterGenerator(num_classes=4, dims=8, seed=1)
    before = net.checksum()
    pattern = pm.activation_maximize(net, gen, 2, seed=5, iterations=50)
    assert len(pattern["objective_trace"]) == 50 and len(pattern["x_star"]) == 8
    assert net.checksum() == before

    same = pm.dissect_pair(net, net, gen, seeds_per_class=2, iterations=20)
    assert same["dist_mean"] == 0.0

    noisy = train.randomize_labels(1.0, 7)
    other, _ = pm.train_classifier(noisy, epochs=20, hidden=32, seed=4)
    diff = pm.dissect_pair(net, other, gen, seeds_per_class=2, iterations=20)
    assert diff["dist_mean"] > 0.0 and len(diff["terms"]) == 8

    print("pymemlab smoke test passed")


if __name__ == "__main__":
    main()
