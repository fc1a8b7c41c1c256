"""JSON schemas for the wire protocol, usable with any draft-2020 validator."""

REQUEST_SCHEMA = {
    "type": "object",
    "required": ["image_id", "object_name"],
    "properties": {
        "image_id": {"type": "string"},
        "object_name": {"type": "string"},
    },
    "additionalProperties": False,
}

_IMAGE_SIZE = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1},
    "minItems": 2,
    "maxItems": 2,
}

_CONFIDENCE = {"type": "number", "minimum": 0, "maximum": 1}

EXISTS_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["exists", "confidence"],
    "properties": {"exists": {"type": "boolean"}, "confidence": _CONFIDENCE},
    "additionalProperties": False,
}

FIND_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["image_size", "detections"],
    "properties": {
        "image_size": _IMAGE_SIZE,
        "detections": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["bbox", "confidence"],
                "properties": {
                    "bbox": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 4,
                        "maxItems": 4,
                    },
                    "confidence": _CONFIDENCE,
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

SEGMENT_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["image_size", "rle", "starts_with"],
    "properties": {
        "image_size": _IMAGE_SIZE,
        "rle": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "starts_with": {"enum": [0, 1]},
    },
    "additionalProperties": False,
}

ERROR_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["error"],
    "properties": {
        "error": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {"code": {"type": "string"}, "message": {"type": "string"}},
            "additionalProperties": False,
        }
    },
    "additionalProperties": False,
}

RESPONSE_SCHEMAS = {
    "/v1/exists": EXISTS_RESPONSE_SCHEMA,
    "/v1/find": FIND_RESPONSE_SCHEMA,
    "/v1/segment": SEGMENT_RESPONSE_SCHEMA,
}
