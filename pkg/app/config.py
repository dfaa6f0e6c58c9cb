import os
import logging


def load_settings():
    """Reads the optional QEC_* environment variables (a .env file is loaded by the entry points)."""
    return dict(
        WORKERS=int(os.environ.get('QEC_WORKERS', '1')),
        SEED=int(os.environ.get('QEC_SEED', '0')),
        CHUNK_SIZE=int(os.environ.get('QEC_CHUNK_SIZE', '4096')),
        LOG_LEVEL=os.environ.get('QEC_LOG_LEVEL', 'INFO'),
        OUTPUT_DIR=os.environ.get('QEC_OUTPUT_DIR', 'results'),
    )


def configure_logging(level='INFO'):
    # stderr only, stdout is reserved for emitted data
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
