import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

class Settings:
    # Only logging and the fallback output directory come from the environment;
    # numeric results never do.
    LOG_LEVEL: str = os.getenv("CONJLAB_LOG_LEVEL", "WARNING")
    OUTPUT_DIR: Path = Path(os.getenv("CONJLAB_OUTPUT_DIR", "."))

    # series / entropy
    SIMPLEX_TOL: float = 1e-12
    MEAN_TOL: float = 1e-10
    TRUNCATION_EPS: float = 1e-16
    BISECTION_WIDTH_TOL: float = 1e-13
    BISECTION_MAX_DOUBLINGS: int = 200
    SUMMATION_CHUNK: int = 1_000_000

    # dynsys
    POWER_MAX_ITER: int = 10_000
    POWER_BLOCK: int = 1024
    SPECTRAL_SHIFT: float = 1e-3
    SPECTRAL_TOL: float = 1e-12
    GELFAND_DOUBLINGS: int = 64
    INFINITY_THRESHOLD: float = 0.5
    HULL_TOL: float = 1e-8

    # fenchel / brute force
    BRUTEFORCE_MAX_NODES: int = 1_000_000
    BRUTEFORCE_MAX_DIM: int = 4
    SWEEP_BLOCK_ENTRIES: int = 4_000_000

    # verification harness
    FY_GAP_TOL: float = 1e-8
    ATTAINMENT_TOL: float = 1e-8
    BRUTEFORCE_TOL: float = 5e-2

    THREADS: int = 1

settings = Settings()
