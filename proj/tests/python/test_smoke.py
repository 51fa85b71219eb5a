import json

import pytest

import edgeflow


OCR_FLOW = {
    "tabs": [
        {"id": "main", "name": "Main", "offloadable": False},
        {"id": "tab-ocr", "name": "OCR", "offloadable": True},
    ],
    "nodes": [
        {"id": "in", "tab": "main", "kind": "inject", "config": {}},
        {"id": "to-ocr", "tab": "main", "kind": "link-out", "config": {"target": "ocr-in"}},
        {"id": "ocr-in", "tab": "tab-ocr", "kind": "link-in", "config": {}},
        {"id": "ocr", "tab": "tab-ocr", "kind": "work", "config": {"work_units": "24.5"}},
        {"id": "ocr-out", "tab": "tab-ocr", "kind": "link-out", "config": {"target": "back"}},
        {"id": "back", "tab": "main", "kind": "link-in", "config": {}},
        {"id": "out", "tab": "main", "kind": "sink", "config": {}},
    ],
    "wires": [
        {"from": "in", "to": "to-ocr"},
        {"from": "ocr-in", "to": "ocr"},
        {"from": "ocr", "to": "ocr-out"},
        {"from": "back", "to": "out"},
    ],
}


def test_validate_and_canonical():
    text = json.dumps(OCR_FLOW)
    assert edgeflow.validate(text) == []
    assert json.loads(edgeflow.canonical(text)) == json.loads(edgeflow.canonical(edgeflow.canonical(text)))
    broken = dict(OCR_FLOW, wires=OCR_FLOW["wires"] + [{"from": "out", "to": "x9"}])
    assert [v[0] for v in edgeflow.validate(json.dumps(broken))] == ["DanglingWire"]


def test_flow_errors_are_value_errors():
    with pytest.raises(edgeflow.FlowError):
        edgeflow.canonical("{")
    with pytest.raises(ValueError):
        edgeflow.extract_offloadable(json.dumps(OCR_FLOW), "http://r", "cpu:2")


def test_extract_offloadable():
    r = edgeflow.extract_offloadable(json.dumps(OCR_FLOW), "http://r:8780", "jobs:4")
    assert r["offload_node_id"] == "tab-ocr-olink"
    assert r["flow_id"] == "tab-ocr"
    local = json.loads(r["local_flow"])
    remote = json.loads(r["remote_flow"])
    assert len(local["nodes"]) + len(remote["nodes"]) == len(OCR_FLOW["nodes"]) + 1
    olink = next(n for n in local["nodes"] if n["kind"] == "offload-link")
    assert olink["config"] == {"policy": "jobs:4", "remote_url": "http://r:8780", "flow_id": "tab-ocr"}


def test_policy():
    assert edgeflow.parse_policy(" any-of( cpu:0.75 , temp:75 )") == "any-of(cpu:0.75,temp:75)"
    with pytest.raises(edgeflow.PolicyError):
        edgeflow.parse_policy("cpu:1.5")
    at = edgeflow.MetricsSnapshot(jobs_in_flight=4)
    assert edgeflow.decide("jobs:4", at) == ("remote", "jobs 4 >= 4")
    target, reason = edgeflow.decide("any-of(cpu:0.75,temp:75)", edgeflow.MetricsSnapshot(cpu_util=0.8, cpu_temp_c=60))
    assert target == "remote" and reason.startswith("cpu")


def test_step():
    model = edgeflow.GatewayModel()
    state = edgeflow.GatewayState(model)
    state.running = [edgeflow.RunningJob(1, 0.05), edgeflow.RunningJob(2, 5.0)]
    nxt, done = edgeflow.step(model, state, 0.1)
    assert [job for job, _ in done] == [1]
    assert done[0][1] == pytest.approx(0.05)
    assert len(nxt.running) == 1
    assert nxt.temp_c > state.temp_c


def test_simulate():
    r = edgeflow.simulate("jobs:4")
    s = edgeflow.stats(r.records)
    assert s.jobs_total == 120
    assert abs(s.local_fraction - 0.70) <= 0.10
    assert r.jobs_csv.startswith("job_id,location,duration_s,success,started_at,finished_at\n")
    again = edgeflow.simulate("jobs:4")
    assert again.jobs_csv == r.jobs_csv and again.series_csv == r.series_csv

    remote = edgeflow.simulate("always-remote", total_jobs=5)
    assert all(rec.location == "remote" for rec in remote.records)
    assert all(rec.duration_s == pytest.approx(12.2) for rec in remote.records)

    closed = edgeflow.simulate("always-local", mode="closed-loop", total_jobs=40)
    assert closed.throttle_onset_s == pytest.approx(170, abs=30)
    with pytest.raises(ValueError):
        edgeflow.simulate("always-local", mode="sideways")
