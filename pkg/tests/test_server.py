import threading

import pytest
from fastapi.testclient import TestClient

from pilotwalk import launch, server
from pilotwalk.jobs import SweepJob, SweepSessionManager
from pilotwalk.models import *

SMALL_SWEEP = {
    "plane": "sigma-r",
    "params": {"sigma": 10.0, "r": 10.0, "A": 1.0, "B": 5.0},
    "axis1": {"min": 4.0, "max": 10.0, "n": 2},
    "axis2": {"min": 2.0, "max": 3.0, "n": 2},
    "integrator": {"t_end": 200.0, "sample_dt": 0.1},
}


@pytest.fixture
def manager(monkeypatch):
    manager = SweepSessionManager()
    monkeypatch.setattr(server, "sweep_manager", manager)
    return manager


@pytest.fixture
def client():
    return TestClient(server.pilotwalk_api)


def test_stability_endpoint(client):
    response = client.get("/stability", params={"sigma": 10, "r": 10, "A": 1, "B": 5, "k": 1})
    assert response.status_code == 200

    report = response.json()
    assert report["parity"] == "trough"
    assert report["verdict"] == "unstable"
    assert len(report["eigenvalues"]) == 4

    lowmem = client.get("/stability", params={"sigma": 5, "r": 2, "A": 1, "B": 1, "system": "lowmem"}).json()
    assert lowmem["verdict"] == "stable"


def test_stability_rejects_bad_params(client):
    assert client.get("/stability", params={"sigma": 10, "r": 10, "A": 1, "B": 0}).status_code == 400
    assert client.get("/stability", params={"sigma": 10, "r": 10, "A": 1, "B": 5,
                                            "system": "memory"}).status_code == 400


def test_boundary_endpoint(client):
    curve = client.get("/boundary", params={"A": 1, "B": 5, "n_points": 3}).json()
    assert len(curve) == 3
    assert curve[0][0] == 0.5

    assert client.get("/boundary", params={"A": 1, "B": 5, "n_points": 1}).status_code == 400


def test_presets_endpoint(client):
    names = [preset["name"] for preset in client.get("/presets").json()]
    assert "lorenz-like" in names and "basin-fast-walker" in names


def test_simulate_endpoint(client):
    response = client.post("/simulate", json={
        "params": {"sigma": 10.0, "r": 2.0, "A": 1.0, "B": 5.0},
        "integrator": {"t_end": 200.0, "sample_dt": 0.1},
    })
    assert response.status_code == 200

    summary = response.json()
    assert summary["behavior"] == "Stationary"
    assert summary["well_hops"] == 0
    assert len(summary["terminal_state"]) == 4


def test_simulate_reports_short_runs(client):
    summary = client.post("/simulate", json={
        "params": {"sigma": 10.0, "r": 2.0, "A": 1.0, "B": 5.0},
        "integrator": {"t_end": 10.0},
    }).json()

    assert summary["behavior"] is None
    assert summary["error"].startswith("TrajectoryTooShortError")


def test_simulate_rejects_memory_system(client):
    response = client.post("/simulate", json={"params": {"sigma": 10.0, "r": 2.0, "A": 1.0, "B": 5.0},
                                              "system": "memory"})
    assert response.status_code == 400


def test_background_sweep(client, manager):
    assert client.get("/sweeps").json()["status"] == "idle"
    assert client.get("/sweeps/result").status_code == 404

    response = client.post("/sweeps/start", json=SMALL_SWEEP)
    assert response.status_code == 200
    assert response.json()["total"] == 4

    manager.wait(timeout=300)

    status = client.get("/sweeps").json()
    assert status["status"] == "finished"
    assert status["done"] == status["total"] == 4

    result = client.get("/sweeps/result").json()
    assert [cell["behavior"] for row in result["cells"] for cell in row] == ["Stationary"] * 4


def test_only_one_sweep_at_a_time(client, manager):
    manager._current_job = SweepJob(SweepSpec(**SMALL_SWEEP), 1, manager._job_finished)

    assert manager.is_running()
    assert client.get("/sweeps").json()["status"] == "running"
    assert client.post("/sweeps/start", json=SMALL_SWEEP).status_code == 400


def test_start_server_reads_host_and_port(monkeypatch):
    calls = []
    monkeypatch.setattr(launch.uvicorn, "run", lambda app, host, port: calls.append((app, host, port)))
    monkeypatch.setenv("PILOTWALK_HOST", "127.0.0.1")
    monkeypatch.setenv("PILOTWALK_PORT", "8123")

    launch.start_server()

    assert calls == [(server.pilotwalk_api, "127.0.0.1", 8123)]


def test_wait_reads_the_current_job_under_the_lock():
    manager = SweepSessionManager()
    waiter = threading.Thread(target=manager.wait)

    with manager._lock:
        waiter.start()
        waiter.join(timeout=0.2)
        assert waiter.is_alive()

    waiter.join(timeout=5)
    assert not waiter.is_alive()
