import json
import time

import pytest
from fastapi.testclient import TestClient

from storydance.service import DanceService, ServiceConfig, create_app


@pytest.fixture(scope="module")
def service(library_dir, tmp_path_factory):
    config = ServiceConfig(
        library_path=library_dir / "manifest.json",
        store_dir=tmp_path_factory.mktemp("store"),
        provider="stub",
    )
    return DanceService(config)


@pytest.fixture(scope="module")
def client(service):
    return TestClient(create_app(service=service))


def generate_ready_dance(client, prompt="A swan dancing"):
    response = client.post("/api/dances", json={"prompt": prompt})
    assert response.status_code == 202
    dance_id = response.json()["dance_id"]
    for _ in range(50):  # poll; background task runs inline under TestClient
        record = client.get(f"/api/dances/{dance_id}").json()
        if record["status"] in ("ready", "failed"):
            return dance_id, record
        time.sleep(0.05)
    raise AssertionError("dance never became terminal")


class TestMovementEndpoints:
    def test_list_movements(self, client):
        response = client.get("/api/movements")
        assert response.status_code == 200
        movements = response.json()
        assert len(movements) == 59
        assert {"id", "gloss", "tags"} <= set(movements[0])

    def test_movement_clip_glb(self, client):
        response = client.get("/api/movements/a-swan-gliding/clip.glb")
        assert response.status_code == 200
        assert response.headers["content-type"] == "model/gltf-binary"
        assert response.content[:4] == b"glTF"

    def test_unknown_movement_404(self, client):
        assert client.get("/api/movements/nope/clip.glb").status_code == 404


class TestGenerationFlow:
    def test_post_poll_fetch(self, client):
        dance_id, record = generate_ready_dance(client)
        assert record["status"] == "ready"
        assert len(record["plan"]["selections"]) == 3
        assert record["plan"]["selections"][0]["movement_id"] == "a-swan-gliding"
        assert record["exchanges"], "exchanges must be stored for inspection"
        assert record["exchanges"][0]["raw_response"]

    def test_empty_prompt_400_with_path(self, client):
        response = client.post("/api/dances", json={"prompt": "   "})
        assert response.status_code == 400
        detail = response.json()["detail"]
        assert detail[0]["path"] == "prompt"

    def test_missing_prompt_400(self, client):
        assert client.post("/api/dances", json={}).status_code == 400
        assert client.post("/api/dances").status_code == 400

    def test_idempotent_repost(self, client):
        first, record1 = generate_ready_dance(client, "The deer walks at dawn")
        response = client.post("/api/dances",
                               json={"prompt": "The deer walks at dawn"})
        assert response.status_code == 202
        assert response.json()["dance_id"] == first
        record2 = client.get(f"/api/dances/{first}").json()
        assert record2["created_at"] == record1["created_at"]

    def test_prompt_normalization_shares_record(self, client):
        a, _ = generate_ready_dance(client, "Fire on the mountain")
        b = client.post("/api/dances",
                        json={"prompt": "  fire   ON the mountain "}).json()
        assert b["dance_id"] == a

    def test_unknown_dance_404(self, client):
        assert client.get("/api/dances/deadbeef").status_code == 404


class TestPerformanceEndpoint:
    def test_frames_json(self, client, service):
        dance_id, record = generate_ready_dance(client, "Waves under the moon")
        response = client.get(f"/api/dances/{dance_id}/performance",
                              params={"format": "frames-json"})
        assert response.status_code == 200
        doc = response.json()
        assert list(doc.keys()) == ["rate", "duration", "joints", "frames",
                                    "segments"]
        assert len(doc["segments"]) == 3
        assert doc["duration"] == pytest.approx(4 + 4 + 4 - 2 * 0.5)

    def test_glb(self, client):
        dance_id, _ = generate_ready_dance(client, "Waves under the moon")
        response = client.get(f"/api/dances/{dance_id}/performance",
                              params={"format": "glb"})
        assert response.status_code == 200
        assert response.content[:4] == b"glTF"

    def test_bad_format_400(self, client):
        dance_id, _ = generate_ready_dance(client, "Waves under the moon")
        response = client.get(f"/api/dances/{dance_id}/performance",
                              params={"format": "fbx"})
        assert response.status_code == 400

    def test_not_ready_404(self, client, service):
        service.store.save_dance({
            "dance_id": "pending1", "prompt": "x", "provider": "stub",
            "library": service.library.fingerprint, "created_at": "t",
            "status": "generating", "error": None, "plan": None,
            "provenance": None, "exchanges": [], "performances": [],
            "current_performance": None,
        })
        response = client.get("/api/dances/pending1/performance")
        assert response.status_code == 404

    def test_unknown_version_404(self, client):
        dance_id, _ = generate_ready_dance(client, "Waves under the moon")
        response = client.get(f"/api/dances/{dance_id}/performance",
                              params={"version": "bogus"})
        assert response.status_code == 404


class TestRefineFlow:
    def test_refine_changes_only_edited_segment(self, client):
        dance_id, record = generate_ready_dance(client, "Ritual of the machine")
        before = client.get(f"/api/dances/{dance_id}/performance").json()

        response = client.post(f"/api/dances/{dance_id}/refine", json={
            "selection_index": 0,
            "adjustments": {"energy": {"left_leg": 0.3, "right_leg": 0.3}},
        })
        assert response.status_code == 200
        body = response.json()
        old_perf = record["current_performance"]
        assert body["performance_id"] != old_perf
        assert body["versions"] == [old_perf, body["performance_id"]]

        after = client.get(f"/api/dances/{dance_id}/performance").json()
        seg0 = before["segments"][0]
        boundary = seg0["end"] + 0.5  # segment span + crossfade window
        rate = before["rate"]
        changed = 0
        for i, (ra, rb) in enumerate(zip(before["frames"], after["frames"])):
            if i / rate > boundary:
                assert ra == rb, f"frame {i} changed outside edited segment"
            elif ra != rb:
                changed += 1
        assert changed > 0
        # Rationale is preserved, adjustments replaced.
        updated = client.get(f"/api/dances/{dance_id}").json()
        assert updated["plan"]["selections"][0]["rationale"] == \
            record["plan"]["selections"][0]["rationale"]
        assert updated["plan"]["selections"][0]["adjustments"] == \
            {"energy": {"left_leg": 0.3, "right_leg": 0.3}}

    def test_refine_back_to_original_restores_performance_id(self, client):
        dance_id, record = generate_ready_dance(client, "Shadow and light duel")
        original_perf = record["current_performance"]
        original_adj = record["plan"]["selections"][0]["adjustments"]
        client.post(f"/api/dances/{dance_id}/refine", json={
            "selection_index": 0,
            "adjustments": {"circles_curves": 0.9},
        })
        response = client.post(f"/api/dances/{dance_id}/refine", json={
            "selection_index": 0,
            "adjustments": original_adj,
        })
        assert response.json()["performance_id"] == original_perf

    def test_old_versions_remain_fetchable(self, client):
        dance_id, record = generate_ready_dance(client, "Guardian of the gate")
        old_perf = record["current_performance"]
        client.post(f"/api/dances/{dance_id}/refine", json={
            "selection_index": 1, "adjustments": {"synchronous_limbs": 1.0}})
        response = client.get(f"/api/dances/{dance_id}/performance",
                              params={"version": old_perf})
        assert response.status_code == 200

    def test_refine_not_ready_409(self, client, service):
        service.store.save_dance({
            "dance_id": "pending2", "prompt": "x", "provider": "stub",
            "library": service.library.fingerprint, "created_at": "t",
            "status": "generating", "error": None, "plan": None,
            "provenance": None, "exchanges": [], "performances": [],
            "current_performance": None,
        })
        response = client.post("/api/dances/pending2/refine", json={
            "selection_index": 0, "adjustments": {}})
        assert response.status_code == 409

    def test_refine_bad_index_400(self, client):
        dance_id, _ = generate_ready_dance(client, "Guardian of the gate")
        for bad in (-1, 99, "zero", None, True):
            response = client.post(f"/api/dances/{dance_id}/refine", json={
                "selection_index": bad, "adjustments": {}})
            assert response.status_code == 400
            assert response.json()["detail"][0]["path"] == "selection_index"

    def test_refine_bad_adjustments_400_with_path(self, client):
        dance_id, _ = generate_ready_dance(client, "Guardian of the gate")
        response = client.post(f"/api/dances/{dance_id}/refine", json={
            "selection_index": 0,
            "adjustments": {"energy": {"left_leg": 9.0}}})
        assert response.status_code == 400
        assert "energy.left_leg" in response.json()["detail"][0]["path"]

    def test_refine_unknown_joint_400(self, client):
        dance_id, _ = generate_ready_dance(client, "Guardian of the gate")
        response = client.post(f"/api/dances/{dance_id}/refine", json={
            "selection_index": 0,
            "adjustments": {"axis_point": {"joint": "tail", "intensity": 1.0}}})
        assert response.status_code == 400
        assert "axis_point.joint" in response.json()["detail"][0]["path"]


class TestFailureSurface:
    def test_provider_failure_lands_in_status_and_502(self, library_dir,
                                                      tmp_path_factory):
        config = ServiceConfig(
            library_path=library_dir / "manifest.json",
            store_dir=tmp_path_factory.mktemp("store-failed"),
            provider="recorded",
        )
        client = TestClient(create_app(service=DanceService(config)))
        response = client.post("/api/dances",
                               json={"prompt": "a story nobody recorded"})
        assert response.status_code == 202
        dance_id = response.json()["dance_id"]
        record = client.get(f"/api/dances/{dance_id}").json()
        assert record["status"] == "failed"
        assert "no recorded transcript" in record["error"]
        perf = client.get(f"/api/dances/{dance_id}/performance")
        assert perf.status_code == 502
        # Re-POST after failure restarts generation rather than wedging.
        again = client.post("/api/dances",
                            json={"prompt": "a story nobody recorded"})
        assert again.json()["dance_id"] == dance_id


class TestSchemaEndpoint:
    def test_plan_schema_published(self, client):
        schema = client.get("/api/schema/plan").json()
        assert schema["properties"]["selections"]["maxItems"] == 12
        adjustments = schema["properties"]["selections"]["items"][
            "properties"]["adjustments"]
        assert adjustments["properties"]["external_body_spaces"]["maximum"] == 2


class TestServiceConfig:
    def test_from_file_with_env_overrides(self, tmp_path, library_dir):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "library": str(library_dir / "manifest.json"),
            "store": str(tmp_path / "store"),
            "provider": "stub",
            "max_attempts": 5,
            "crossfade": 0.25,
        }))
        config = ServiceConfig.from_file(config_path, env={})
        assert config.retry.max_attempts == 5
        assert config.compile_options.crossfade == 0.25
        overridden = ServiceConfig.from_file(
            config_path, env={"STORYDANCE_PROVIDER": "recorded",
                              "STORYDANCE_PORT": "9000"})
        assert overridden.provider == "recorded"
        assert overridden.port == 9000

    def test_hosted_provider_requires_credential(self, library_dir, tmp_path,
                                                 monkeypatch):
        monkeypatch.delenv("PROVIDER_API_KEY", raising=False)
        config = ServiceConfig(library_path=library_dir / "manifest.json",
                               store_dir=tmp_path / "store", provider="hosted")
        from storydance.generator import ProviderUnavailable
        with pytest.raises(ProviderUnavailable, match="PROVIDER_API_KEY"):
            DanceService(config)
