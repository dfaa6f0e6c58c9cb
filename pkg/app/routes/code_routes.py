from flask import Blueprint, request, jsonify, current_app
from pydantic import ValidationError
from app.models import CodeSummary, FidelityPoint, PolynomialResponse, RunConfig, ErrorResponse
from app import analysis, codes
from app.errors import ParameterRangeError, QECError
from app.fidelity_engine import unencoded_baseline
from app.utils import handle_pydantic_error, make_response
import logging

logger = logging.getLogger(__name__)
bp = Blueprint('codes', __name__, url_prefix='/codes')


def _lookup(label):
    """Resolves a label from the registry; unknown labels become a 404."""
    if label not in codes.CODE_LABELS:
        return None
    code = codes.build_code(label)
    channel = request.args.get('channel')
    return codes.with_channel(code, channel) if channel else code


def _poly(code):
    return analysis.polynomial_for(code, workers=current_app.config['WORKERS'],
                                   chunk_size=current_app.config['CHUNK_SIZE'])


def _not_found(label):
    return jsonify(ErrorResponse(detail=f'Unknown code label {label!r}.').model_dump()), 404


# All code labels
@bp.route('', methods=['GET'])
def list_codes():
    try:
        summaries = []
        for label in codes.CODE_LABELS:
            code = codes.build_code(label)
            summaries.append(CodeSummary(label=code.label, n_qubits=code.n_qubits, channel=code.channel_family,
                                         augmented=code.augmented, gate_count=code.gate_count()).model_dump())
        return make_response(summaries)
    except Exception as e:
        logger.error(f"Error listing codes: {e}")
        return jsonify(ErrorResponse(detail='Internal server error').model_dump()), 500


@bp.route('/<label>', methods=['GET'])
def get_code(label):
    try:
        code = _lookup(label)
        if code is None:
            return _not_found(label)
        poly = _poly(code)
        return make_response(PolynomialResponse(code=code.label, channel=code.channel_family,
                                                degree_p=poly.degree_p(), degree_q=poly.degree_q(),
                                                terms=poly.to_json()).model_dump())
    except QECError as e:
        return jsonify(ErrorResponse(detail=str(e)).model_dump()), 400
    except Exception as e:
        logger.error(f"Error building fidelity polynomial for {label}: {e}")
        return jsonify(ErrorResponse(detail='Internal server error').model_dump()), 500


@bp.route('/<label>/coefficients', methods=['GET'])
def get_coefficients(label):
    try:
        config = RunConfig(command='coeffs', code=label, max_order=request.args.get('max_order', 1))
    except ValidationError as e:
        return handle_pydantic_error(e)
    try:
        code = _lookup(label)
        if code is None:
            return _not_found(label)
        table = analysis.coefficient_table(code, config.max_order, poly=_poly(code))
        return make_response(table.to_model().model_dump())
    except QECError as e:
        return jsonify(ErrorResponse(detail=str(e)).model_dump()), 400
    except Exception as e:
        logger.error(f"Error tabulating coefficients for {label}: {e}")
        return jsonify(ErrorResponse(detail='Internal server error').model_dump()), 500


@bp.route('/<label>/fidelity', methods=['GET'])
def get_fidelity(label):
    try:
        config = RunConfig(command='fidelity', code=label, p=request.args.get('p'), q=request.args.get('q'))
    except ValidationError as e:
        return handle_pydantic_error(e)
    if config.p is None or config.q is None:
        return jsonify(ErrorResponse(detail='Query parameters p and q are required.').model_dump()), 400
    try:
        code = _lookup(label)
        if code is None:
            return _not_found(label)
        poly = _poly(code)
        point = FidelityPoint(code=code.label, p=config.p, q=config.q, fidelity=float(poly.eval(config.p, config.q)),
                              baseline=unencoded_baseline(code.channel_family, config.p),
                              useful=analysis.usefulness(code, config.p, config.q, poly=poly))
        return make_response(point.model_dump())
    except QECError as e:
        return jsonify(ErrorResponse(detail=str(e)).model_dump()), 400
    except Exception as e:
        logger.error(f"Error evaluating fidelity of {label}: {e}")
        return jsonify(ErrorResponse(detail='Internal server error').model_dump()), 500


@bp.route('/<label>/tolerable-q', methods=['GET'])
def get_tolerable_q(label):
    try:
        config = RunConfig(command='tolerable-q', code=label, p=request.args.get('p'),
                           p_grid=request.args.get('p_grid'))
    except ValidationError as e:
        return handle_pydantic_error(e)
    try:
        code = _lookup(label)
        if code is None:
            return _not_found(label)
        if config.p_grid is not None:
            grid = config.p_grid
        elif config.p is not None:
            grid = [config.p]
        else:
            raise ParameterRangeError('Query parameter p or p_grid is required.')
        curve = analysis.curve_sweep(code, grid, poly=_poly(code))
        return make_response(curve.to_model().model_dump())
    except QECError as e:
        return jsonify(ErrorResponse(detail=str(e)).model_dump()), 400
    except Exception as e:
        logger.error(f"Error sweeping tolerable q for {label}: {e}")
        return jsonify(ErrorResponse(detail='Internal server error').model_dump()), 500
