"""Application configuration and settings."""
from pathlib import Path
from typing import Dict, Optional

from pydantic_settings import BaseSettings


SPECS_PATH = Path(__file__).resolve().parent.parent / "specs"

# Default tolerance per check family; CRCARTAN_TOL overrides all of them.
TOLERANCES: Dict[str, float] = {
    "structure": 1e-9,
    "admissibility": 1e-9,
    "symmetry": 1e-9,
    "jets_fd": 1e-6,
    "jets_identity": 1e-10,
    "gauge_L": 1e-8,
    "gauge_TS": 1e-7,
    "tractor": 1e-9,
    "compatibility": 1e-8,
    "curvature": 1e-7,
    "fefferman": 1e-7,
    "holonomic": 1e-6,
    "sphericity": 1e-6,
}


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application Settings
    APP_NAME: str = "crcartan"
    DEBUG: bool = False
    LOG_LEVEL: str = "WARNING"
    CORS_ORIGINS: list = ["*"]

    # Numerics
    DEFAULT_ORDER: int = 6
    SPHERICITY_TOL: float = 1e-6
    CRCARTAN_TOL: Optional[float] = None

    # Check suites
    DEFAULT_SEED: int = 7
    DEFAULT_POINTS: int = 3

    # Shipped example manifolds
    SPECS_DIR: str = str(SPECS_PATH)

    class Config:
        env_file = ".env"
        case_sensitive = True

    def tolerance(self, name: str) -> float:
        """Effective tolerance for a check family."""
        if self.CRCARTAN_TOL is not None:
            return self.CRCARTAN_TOL
        if name == "sphericity":
            return self.SPHERICITY_TOL
        return TOLERANCES[name]


settings = Settings()
