# Copyright 2026 The MobGT Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import json
import math

import numpy as np
import pytest

import mobgt


def test_haversine_one_degree_of_longitude_on_the_equator():
    assert mobgt.haversine(0.0, 0.0, 0.0, 1.0) == pytest.approx(6371.0 * math.pi / 180.0, rel=1e-12)
    assert mobgt.haversine(35.0, 139.0, 35.0, 139.0) == 0.0


def test_bins():
    edges, count = mobgt.make_bins([0, 1, 2, 3, 4, 5, 6, 7])
    assert count == 2
    assert edges == [3.5]
    assert mobgt.bin_index(3.4, edges) == 0
    assert mobgt.bin_index(3.5, edges) == 1
    assert mobgt.fd_bin_count([2.0] * 5) == 1
    with pytest.raises(mobgt.DataError):
        mobgt.fd_bin_count([])


def test_worked_local_graph():
    g = mobgt.local_graph([1, 2, 3, 4, 2, 3, 1])
    assert sorted(g["nodes"]) == [1, 2, 3, 4]
    counts = {(s, t): c for s, t, c in g["edges"]}
    assert counts == {(1, 2): 1, (2, 3): 2, (3, 4): 1, (4, 2): 1, (3, 1): 1}
    hops = np.asarray(g["hops"])
    i, j = g["nodes"].index(1), g["nodes"].index(4)
    assert hops[i, j] == 2
    assert hops.shape == (5, 5)


def test_tail_loss_and_metrics():
    value = mobgt.tail_loss(np.zeros((1, 1)), [0])
    assert value == pytest.approx(0.2 * 0.5**1.2 * math.log(2.0), abs=1e-12)
    m = mobgt.metrics_for_rank(3)
    assert m["acc1"] == 0.0 and m["acc5"] == 1.0
    assert m["ndcg5"] == pytest.approx(0.5)
    assert mobgt.metrics_for_rank(None)["mrr"] == 0.0


def test_pipeline(tmp_path):
    tsv = tmp_path / "in.tsv"
    corpus = tmp_path / "corpus"
    ckpt = tmp_path / "model.ckpt"
    synth = ["--synth-users", "4", "--synth-pois", "20", "--synth-days", "6", "--synth-checkins-per-day", "5"]
    tiny = ["--d", "16", "--heads", "2", "--layers", "1", "--d-p", "8", "--d-c", "4", "--d-u", "4", "--epochs", "2"]
    assert mobgt.run_cli(["synth", "--out", str(tsv), *synth])[0] == 0
    assert mobgt.run_cli(["prepare", "--input", str(tsv), "--out", str(corpus)])[0] == 0
    code, _, err = mobgt.run_cli(["train", "--corpus", str(corpus), "--out", str(ckpt), *tiny])
    assert code == 0, err

    model = mobgt.Checkpoint(ckpt)
    assert "d = 16" in model.config_text
    report = model.evaluate(corpus)
    code, out, _ = mobgt.run_cli(["evaluate", "--checkpoint", str(ckpt), "--corpus", str(corpus)])
    assert code == 0
    assert json.loads(out) == report
    assert model.evaluate(corpus, mode="last")["n_examples"] < report["n_examples"]
    assert set(mobgt.markov_baseline(corpus)) == set(report)

    rows = [line.split("\t") for line in tsv.read_text().splitlines()[:2]]
    prefix = [(u, p, c, float(lat), float(lon), ts) for u, p, c, lat, lon, ts in rows]
    top = model.predict(prefix, k=3)
    assert len(top) == 3
    assert top[0][1] >= top[1][1] >= top[2][1]
    assert len(model.predict(prefix, k=10_000)) == model.poi_count

    with pytest.raises(mobgt.DataError, match="pZZ"):
        model.predict(prefix[:1] + [(prefix[0][0], "pZZ", "c0", 35.7, 139.7, prefix[1][5])])
    with pytest.raises(mobgt.UsageError):
        model.evaluate(corpus, mode="sideways")
    assert mobgt.run_cli(["train", "--bogus"])[0] == 1
