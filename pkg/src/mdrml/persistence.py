"""Canonical JSON and model artifact files.

Canonical form: sorted keys, no insignificant whitespace, floats written
with 17 significant digits (always with a decimal point or exponent), so
equal objects serialise to equal bytes and floats round-trip exactly.
"""
import hashlib
import json
import math
import os

import numpy as np

from . import classifiers
from .errors import ModelFileError, NumericError

SCHEMA_VERSION = 1


class ModelVersionError(ModelFileError):
    pass


class ChecksumError(ModelFileError):
    pass


def _float(v):
    if not math.isfinite(v):
        raise NumericError(f"cannot serialise non-finite float {v!r}")
    # shortest text that round-trips; always carries "." or an exponent
    return repr(float(v))


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj.tolist() if isinstance(obj, np.ndarray) else obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj):
    out = []
    _encode(obj, out)
    return "".join(out)


def canonical_bytes(obj):
    return (canonical_json(obj) + "\n").encode("utf-8")


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def model_to_document(model, metadata=None):
    body = {
        "schema_version": SCHEMA_VERSION,
        "spec": model.spec.to_dict(),
        "feature_names": list(model.feature_names),
        "payload": classifiers.payload_to_dict(model),
        "metadata": metadata or {},
    }
    body["checksum"] = sha256_bytes(canonical_json(body).encode("utf-8"))
    return body


def save_model(model, path, metadata=None):
    data = canonical_bytes(model_to_document(model, metadata))
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def document_to_model(doc):
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ModelFileError("not a model artifact")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ModelVersionError(f"unsupported model schema_version {doc['schema_version']!r}")
    body = {k: v for k, v in doc.items() if k != "checksum"}
    expected = sha256_bytes(canonical_json(body).encode("utf-8"))
    if doc.get("checksum") != expected:
        raise ChecksumError("model checksum mismatch")
    try:
        spec = classifiers.ClassifierSpec.from_dict(doc["spec"])
        payload = classifiers.payload_from_dict(spec.kind, doc["payload"])
        names = tuple(doc["feature_names"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model payload: {exc}") from None
    return classifiers.TrainedModel(spec, payload, names)


def load_model(path):
    """Return ``(model, document)``."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from None
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"model file is truncated or malformed: {exc}") from None
    return document_to_model(doc), doc


def write_json(path, obj):
    data = canonical_bytes(obj)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
