"""Protocol conformance: every endpoint and every error path validates."""

from concurrent.futures import ThreadPoolExecutor

import jsonschema
import pytest
import requests

from cxr_tool_server.schemas import ERROR_RESPONSE_SCHEMA, RESPONSE_SCHEMAS


def post(server, endpoint, payload, expected_status):
    response = requests.post(f"{server.url}{endpoint}", json=payload, timeout=5)
    assert response.status_code == expected_status, response.text
    body = response.json()
    if expected_status == 200:
        jsonschema.validate(body, RESPONSE_SCHEMAS[endpoint])
    else:
        jsonschema.validate(body, ERROR_RESPONSE_SCHEMA)
    return body


class TestSuccessPaths:
    def test_exists_present_and_absent(self, server):
        body = post(server, "/v1/exists", {"image_id": "s1", "object_name": "carina"}, 200)
        assert body == {"exists": True, "confidence": 0.99}
        body = post(server, "/v1/exists", {"image_id": "s1", "object_name": "ghost"}, 200)
        assert body == {"exists": False, "confidence": 0.0}

    def test_find_returns_degenerate_bbox_for_point(self, server):
        body = post(server, "/v1/find", {"image_id": "s1", "object_name": "endotracheal tube"}, 200)
        assert body["image_size"] == [512, 512]
        (det,) = body["detections"]
        assert det["bbox"] == [100.0, 200.0, 100.0, 200.0]
        left, lower, right, upper = det["bbox"]
        assert left == right and lower == upper

    def test_find_unknown_object_is_empty_list(self, server):
        body = post(server, "/v1/find", {"image_id": "s1", "object_name": "ghost"}, 200)
        assert body["detections"] == []

    def test_segment_rle_round_trips(self, server):
        body = post(server, "/v1/segment", {"image_id": "s1", "object_name": "left lung"}, 200)
        assert body["starts_with"] == 0
        assert sum(body["rle"]) == 512 * 512
        # decode and re-encode: 5 rows of 30 pixels starting at (200, 100)
        flat = []
        value = body["starts_with"]
        for run in body["rle"]:
            flat.extend([value] * run)
            value = 1 - value
        ones = [i for i, v in enumerate(flat) if v]
        assert len(ones) == 150
        assert min(ones) == 100 * 512 + 200

    def test_segment_unknown_object_is_empty_mask(self, server):
        body = post(server, "/v1/segment", {"image_id": "s1", "object_name": "ghost"}, 200)
        assert body["rle"] == [512 * 512]


class TestErrorPaths:
    def test_unknown_image_404(self, server):
        body = post(server, "/v1/find", {"image_id": "nope", "object_name": "carina"}, 404)
        assert body["error"]["code"] == "unknown_image"

    def test_unknown_endpoint_404(self, server):
        body = post(server, "/v1/count", {"image_id": "s1", "object_name": "carina"}, 404)
        assert body["error"]["code"] == "not_found"

    def test_malformed_body_400(self, server):
        response = requests.post(
            f"{server.url}/v1/find",
            data=b"not json",
            headers={"Content-Type": "application/json"},
            timeout=5,
        )
        assert response.status_code == 400
        body = response.json()
        jsonschema.validate(body, ERROR_RESPONSE_SCHEMA)
        assert body["error"]["code"] == "bad_request"

    def test_missing_fields_400(self, server):
        body = post(server, "/v1/find", {"image_id": "s1"}, 400)
        assert body["error"]["code"] == "bad_request"

    def test_non_string_fields_400(self, server):
        body = post(server, "/v1/find", {"image_id": "s1", "object_name": 7}, 400)
        assert body["error"]["code"] == "bad_request"

    def test_get_method_rejected_with_error_body(self, server):
        response = requests.get(f"{server.url}/v1/find", timeout=5)
        assert response.status_code == 405
        jsonschema.validate(response.json(), ERROR_RESPONSE_SCHEMA)

    def test_frame_size_unknown_422(self, server):
        # s2 has a detection but neither a size record nor a mask
        body = post(server, "/v1/find", {"image_id": "s2", "object_name": "carina"}, 422)
        assert body["error"]["code"] == "unknown_image_size"
        # exists needs no frame and still answers
        body = post(server, "/v1/exists", {"image_id": "s2", "object_name": "carina"}, 200)
        assert body["exists"] is True


class TestConcurrency:
    def test_eight_concurrent_requests(self, server):
        def hit(i):
            endpoint = ("/v1/exists", "/v1/find", "/v1/segment")[i % 3]
            return post(server, endpoint, {"image_id": "s1", "object_name": "carina"}, 200)

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(hit, range(24)))
        assert len(results) == 24
        for i in range(3, 24, 3):
            assert results[i] == results[0]


class TestStoreValidation:
    def test_malformed_fixture_rejected(self, tmp_path):
        from cxr_tool_server import FixtureFormatError, FixtureStore

        path = tmp_path / "bad.tsv"
        path.write_text("s1\tcarina\t1,2,3\t0.9\n", encoding="utf-8")
        with pytest.raises(FixtureFormatError) as err:
            FixtureStore(path)
        assert err.value.line == 1

    def test_mask_must_match_frame(self, tmp_path):
        from cxr_tool_server import FixtureFormatError, FixtureStore

        path = tmp_path / "bad.tsv"
        path.write_text(
            "s1\t__size__\t10,10\ns1\tlung\tMASK\t4,4\t16\n", encoding="utf-8"
        )
        with pytest.raises(FixtureFormatError):
            FixtureStore(path)

    def test_golden_fixture_set_loads(self, golden_dir):
        from cxr_tool_server import FixtureStore

        store = FixtureStore(golden_dir / "fixtures.tsv")
        assert len(store.studies) == 50
        assert all(s.frame_size() is not None for s in store.studies.values())
