from .app import STORE_ENV_VAR, create_app

__all__ = ["create_app", "STORE_ENV_VAR"]
