"""Published JSON Schemas for every machine-readable output.

Reports written by the CLI validate against these schemas; tests enforce it
per command.
"""

from __future__ import annotations

_REASON = {
    "type": "object",
    "properties": {"code": {"type": "string"}, "message": {"type": "string"}},
    "required": ["code", "message"],
    "additionalProperties": False,
}

EVALUATION_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "caseId": {"type": "string"},
        "caseValid": {"type": "boolean"},
        "evaluatedAt": {"type": "string"},
        "moduleValid": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "verdicts": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "status": {"enum": ["valid", "invalid", "needsSupport", "notEvaluated"]},
                    "reasons": {"type": "array", "items": _REASON},
                },
                "required": ["status", "reasons"],
                "additionalProperties": False,
            },
        },
        "artifactResults": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "passed": {"type": "boolean"},
                    "loadError": {"type": ["string", "null"]},
                    "constraints": {
                        "type": "object",
                        "additionalProperties": {
                            "anyOf": [
                                {"type": "boolean"},
                                {
                                    "type": "object",
                                    "properties": {"error": {"type": "string"}},
                                    "required": ["error"],
                                    "additionalProperties": False,
                                },
                            ]
                        },
                    },
                },
                "required": ["passed", "loadError", "constraints"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["caseId", "caseValid", "evaluatedAt", "moduleValid", "verdicts",
                 "artifactResults"],
    "additionalProperties": False,
}

FINDINGS_SCHEMA = {
    "type": "object",
    "properties": {
        "caseId": {"type": "string"},
        "findings": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "code": {"type": "string"},
                    "subjectId": {"type": "string"},
                    "message": {"type": "string"},
                },
                "required": ["code", "subjectId", "message"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["caseId", "findings"],
    "additionalProperties": False,
}

BASELINE_SCHEMA = {
    "type": "object",
    "properties": {
        "caseId": {"type": "string"},
        "createdAt": {"type": "string"},
        "fingerprints": {
            "type": "object",
            "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        },
    },
    "required": ["caseId", "createdAt", "fingerprints"],
    "additionalProperties": False,
}

IMPACT_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "caseId": {"type": "string"},
        "changedArtifacts": {"type": "array", "items": {"type": "string"}},
        "addedArtifacts": {"type": "array", "items": {"type": "string"}},
        "removedArtifacts": {"type": "array", "items": {"type": "string"}},
        "impactedNodes": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["caseId", "changedArtifacts", "addedArtifacts", "removedArtifacts",
                 "impactedNodes"],
    "additionalProperties": False,
}

STATUS_SCHEMA = {
    "type": "object",
    "properties": {
        "timestamp": {"type": "string"},
        "caseValid": {"type": "boolean"},
        "failedNodes": {"type": "array", "items": {"type": "string"}},
        "lastSeq": {"type": "integer"},
        "evaluationCount": {"type": "integer"},
        "degraded": {"type": "boolean"},
        "rejectedCount": {"type": "integer"},
    },
    "required": ["timestamp", "caseValid", "failedNodes", "lastSeq", "evaluationCount",
                 "degraded", "rejectedCount"],
    "additionalProperties": False,
}

DIAGNOSTICS_SCHEMA = {
    "type": "object",
    "properties": {
        "ok": {"type": "boolean"},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "severity": {"enum": ["error", "warning"]},
                    "message": {"type": "string"},
                    "line": {"type": "integer"},
                },
                "required": ["id", "severity", "message"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["ok", "entries"],
    "additionalProperties": False,
}
