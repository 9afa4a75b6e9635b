"""Sweep result containers: CSV round trip, plot data, manifests."""

import json

from revanneal.results import SweepPoint, SweepResult, write_manifest


def sample_result():
    r = SweepResult()
    r.add(SweepPoint(m0=0.9, s_inv=0.3, p0=0.5, stderr=0.01, n_traj=100))
    r.add(SweepPoint(m0=0.9, s_inv=0.1, p0=0.95, stderr=0.02, n_traj=100))
    r.add(SweepPoint(m0=0.8, s_inv=0.1, p0=0.9, stderr=0.03, n_traj=100))
    return r


def test_csv_round_trip(tmp_path):
    r = sample_result()
    f = tmp_path / "sweep.csv"
    r.to_csv(f)
    header = f.read_text().splitlines()[0]
    assert header == "m0,s_inv,P0,stderr,K"
    back = SweepResult.from_csv(f)
    assert len(back.points) == 3
    s, p0, err = back.curve(0.9)
    assert s == [0.1, 0.3]
    assert p0 == [0.95, 0.5]
    assert err == [0.02, 0.01]


def test_byte_identical_csv(tmp_path):
    r = sample_result()
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    r.to_csv(f1)
    r.to_csv(f2)
    assert f1.read_bytes() == f2.read_bytes()


def test_max_p0():
    r = sample_result()
    assert r.max_p0(0.9).s_inv == 0.1
    assert r.max_p0(0.8).p0 == 0.9


def test_plot_dat_blocks(tmp_path):
    r = sample_result()
    f = tmp_path / "sweep.dat"
    r.to_plot_dat(f)
    text = f.read_text()
    assert text.count("# m0 =") == 2
    assert "\n\n\n" in text  # gnuplot block separator (two blank lines)


def test_manifest(tmp_path):
    f = tmp_path / "manifest.json"
    write_manifest(f, {"b": 1, "a": {"nested": [1, 2]}})
    payload = json.loads(f.read_text())
    assert payload == {"a": {"nested": [1, 2]}, "b": 1}
