from pydantic_settings import BaseSettings

class Settings(BaseSettings):
    """Application settings"""

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # EM multi-start (defaults follow the usual "sets=50, emiterations=500" setup)
    EM_N_STARTS: int = 50
    EM_MAX_ITERATIONS: int = 500
    EM_TOLERANCE: float = 1e-8
    EM_START_TOLERANCE: float = 1e-5
    EM_MONOTONICITY_SLACK: float = 1e-10
    DEGENERATE_CLASS_RATIO: float = 0.1     # class share below ratio / N => degenerate chain

    # Newton M-step for the logit measurement model
    NEWTON_MAX_ITERATIONS: int = 25
    NEWTON_TOLERANCE: float = 1e-8
    NEWTON_MAX_HALVINGS: int = 40
    NEWTON_ROUNDING_SLACK: float = 1e-12   # relative; smaller predicted gains are rounding noise
    COEFFICIENT_CLAMP: float = 30.0          # |beta| above this => quasi-separation

    # Gaussian external variable
    VARIANCE_FLOOR_RATIO: float = 1e-6       # times the sample variance of Z

    # Inference
    HESSIAN_STEP: float = 1e-5
    EIGENVALUE_TOLERANCE: float = 1e-10

    # Parallelism
    PARALLEL_STARTS: bool = False
    MAX_WORKERS: int = 4

    # Simulation / calibration
    DEFAULT_SEED: int = 0
    CALIBRATION_N: int = 20000
    CALIBRATION_TARGET_R2: float = 0.7
    CALIBRATION_TOLERANCE: float = 0.02
    CALIBRATION_LOWER: float = 0.1
    CALIBRATION_UPPER: float = 5.0
    CALIBRATION_MAX_STEPS: int = 30
    CALIBRATION_STARTS: int = 5

    # Study runs
    STUDY_N: int = 30000
    STUDY_MAX_CLASSES: int = 5

    # Output
    OUTPUT_DIR: str = "results"

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "allow"

settings = Settings()
