from flask import Flask
from flask_cors import CORS
from .config import configure_logging, load_settings

def create_app(test_config=None):
    app = Flask(__name__, instance_relative_config=True)
    CORS(app) # Enable CORS for all routes

    # QEC_* environment variables, see config.load_settings
    app.config.from_mapping(load_settings())

    if test_config is None:
        # load the instance config, if it exists, when not testing
        app.config.from_pyfile('config.py', silent=True)
    else:
        # load the test config if passed in
        app.config.from_mapping(test_config)

    configure_logging(app.config['LOG_LEVEL'])

    # Register blueprints
    from .routes import code_routes
    app.register_blueprint(code_routes.bp)

    # coeffs, tolerable-q, verify, optimize, report under `flask`
    from .cli import register
    register(app)

    @app.route('/hello')
    def hello():
        return 'Hello from the mixed-ancilla QEC simulator!'

    return app
