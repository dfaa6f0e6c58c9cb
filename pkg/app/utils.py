from flask import jsonify
from pydantic import ValidationError
from .models import ErrorResponse
import csv
import io
import json
import os


def make_response(data, status_code=200):
    """Standard way to create JSON responses."""
    return jsonify(data), status_code

def handle_pydantic_error(error: ValidationError, status_code=400):
    """Handles Pydantic validation errors by returning a structured error response."""
    return jsonify(error_document(error)), status_code

def error_document(error):
    """ErrorResponse payload for a ValidationError or any other exception."""
    if isinstance(error, ValidationError):
        detail = error.errors(include_url=False, include_context=False)
    else:
        detail = str(error)
    return ErrorResponse(detail=detail).model_dump()


def dumps_canonical(document):
    """JSON with sorted keys and a fixed indent, so equal documents are equal bytes."""
    if hasattr(document, 'model_dump'):
        document = document.model_dump()
    return json.dumps(document, sort_keys=True, indent=2) + '\n'

def dumps_curve_csv(rows):
    """CSV with columns p, q_star, code; floats written with repr precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['p', 'q_star', 'code'])
    for p, q_star, label in rows:
        writer.writerow([repr(float(p)), repr(float(q_star)), label])
    return buffer.getvalue()


def write_output(text, path=None):
    """Writes to `path` (creating parent directories) or returns the text for stdout."""
    if path is None:
        return text
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='') as handle:
        handle.write(text)
    return None
