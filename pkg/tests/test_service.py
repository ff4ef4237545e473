import json
import time

import pytest
from fastapi.testclient import TestClient

from probekit.minicorpus import write_minicorpus
from probekit.service import create_app


@pytest.fixture(scope="module")
def service_ws(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    paths = write_minicorpus(root / "data", n=1500, seed=13, vec_dim=10)
    config = {
        "seed": 5,
        "out_dir": str(root / "out"),
        "languages": ["en"],
        "sizes": [200, 400],
        "corpora": {"en": {"conllu": str(paths["conllu"])}},
        "vectors": {"en": str(paths["vec"])},
        "lexicons": {"en": str(paths["lexicon"])},
        "tasks": [
            {"id": "voice", "size": 900, "protocol": "fixed"},
            {"id": "length", "size": 900, "protocol": "kfold", "k": 3},
        ],
        "encoders": [
            {"id": "avg", "kind": "avg"},
            {"id": "pmeans", "kind": "pmeans"},
            {"id": "rlstm", "kind": "random_lstm", "hidden": 6},
        ],
        "classifiers": {"kinds": ["lr", "nb"], "train": {"max_epochs": 20}},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    return {"root": root, "config": config, "config_path": config_path}


@pytest.fixture(scope="module")
def client(service_ws):
    return TestClient(create_app())


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"


def test_generate_endpoint(client, service_ws):
    response = client.post("/datasets/generate", json={
        "config_path": str(service_ws["config_path"]),
        "tasks": ["voice"],
    })
    assert response.status_code == 200
    datasets = response.json()["datasets"]
    assert len(datasets) == 1
    assert datasets[0]["task"] == "voice"
    assert datasets[0]["size"] == 900
    assert set(datasets[0]["labels"]) == {"True", "False"}


def test_generate_rejects_bad_config(client):
    response = client.post("/datasets/generate", json={
        "config": {"languages": [], "tasks": []},
    })
    assert response.status_code == 400
    assert "languages" in response.json()["detail"]


def test_generate_requires_exactly_one_source(client, service_ws):
    response = client.post("/datasets/generate", json={})
    assert response.status_code == 422
    response = client.post("/datasets/generate", json={
        "config_path": str(service_ws["config_path"]),
        "config": {"languages": ["en"]},
    })
    assert response.status_code == 422


def test_encode_endpoint(client, service_ws):
    response = client.post("/embeddings/encode", json={
        "config_path": str(service_ws["config_path"]),
        "tasks": ["voice"],
        "encoders": ["avg", "rlstm"],
    })
    assert response.status_code == 200
    files = response.json()["files"]
    assert {f["encoder"] for f in files} == {"avg", "rlstm"}
    by_encoder = {f["encoder"]: f for f in files}
    assert by_encoder["avg"]["dim"] == 10
    assert by_encoder["rlstm"]["dim"] == 12  # 2 * hidden
    assert by_encoder["avg"]["rows"] == 900


def _wait_for_job(client, job_id, timeout=300.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        info = client.get(f"/jobs/{job_id}").json()
        if info["status"] in ("done", "failed"):
            return info
        time.sleep(0.2)
    raise TimeoutError("job did not finish")


def test_matrix_job_lifecycle(client, service_ws):
    response = client.post("/jobs/matrix", json={
        "config_path": str(service_ws["config_path"]),
        "only": "probing",
        "jobs": 1,
    })
    assert response.status_code == 200
    job_id = response.json()["job_id"]
    info = _wait_for_job(client, job_id)
    assert info["status"] == "done", info
    assert info["failures"] == []
    assert info["total_cells"] == 24  # 2 tasks x 3 encoders x 2 classifiers x 2 sizes
    assert info["completed_cells"] == 24
    assert info["results_csv"]

    listing = client.get("/jobs").json()
    assert any(j["job_id"] == job_id for j in listing)
    assert client.get("/jobs/nope").status_code == 404

    # analyze the produced results
    response = client.post("/analyze", json={
        "results_csv": info["results_csv"],
        "method": "pearson",
    })
    assert response.status_code == 200
    body = response.json()
    assert body["languages"], body["skipped"]
    summary = body["languages"][0]
    assert summary["language"] == "en"
    assert len(summary["mu_table"]) == 4  # 2 classifiers x 2 sizes
    mus = [row["mu"] for row in summary["mu_table"]]
    assert mus == sorted(mus, reverse=True)
    assert set(summary["cross_size_minavg"]) == {"lr", "nb"}

    # render reports
    out_dir = str(service_ws["root"] / "reports")
    response = client.post("/report", json={
        "results_csv": info["results_csv"],
        "out_dir": out_dir,
        "method": "pearson",
    })
    assert response.status_code == 200
    body = response.json()
    assert any(p.endswith("mu_table_en.csv") for p in body["written"])
    assert any(p.endswith(".svg") for p in body["written"])


def test_analyze_missing_results(client, service_ws):
    response = client.post("/analyze", json={
        "results_csv": str(service_ws["root"] / "nothing.csv"),
    })
    assert response.status_code == 404
