"""
Configuration settings for SocialForge
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Application Configuration
APP_NAME = os.getenv("APP_NAME", "SocialForge")
TOOL_VERSION = "0.3.0"
LOG_LEVEL = os.getenv("SOCIALFORGE_LOG", "INFO").upper()
DEFAULT_THREADS = int(os.getenv("SOCIALFORGE_THREADS", str(os.cpu_count() or 1)))

# Randomness
DEFAULT_SEED = int(os.getenv("SOCIALFORGE_SEED", "42"))

# Profile Configuration
EMBEDDING_DIM = int(os.getenv("EMBEDDING_DIM", "32"))
INTRA_SPREAD = float(os.getenv("INTRA_SPREAD", "0.3"))

# Botnet Construction
DEFAULT_TAU = float(os.getenv("DEFAULT_TAU", "0.97"))
MAX_COMPLETION_ITERS = int(os.getenv("MAX_COMPLETION_ITERS", "50000"))
SIMILARITY_TEMPERATURE = float(os.getenv("SIMILARITY_TEMPERATURE", "0.2"))
PAIR_SAMPLE_ATTEMPTS = int(os.getenv("PAIR_SAMPLE_ATTEMPTS", "1000"))
HOP_HORIZON = int(os.getenv("HOP_HORIZON", "6"))

# Chain Policy
MAX_HOPS = 6
MIN_HOPS = int(os.getenv("MIN_HOPS", "3"))
BEAM_WIDTH = int(os.getenv("BEAM_WIDTH", "8"))
GROUP_SIZE = int(os.getenv("GROUP_SIZE", "4"))

# Interaction Modeling
KL_EPSILON = float(os.getenv("KL_EPSILON", "1e-3"))
THRESHOLD_SAMPLE_PAIRS = int(os.getenv("THRESHOLD_SAMPLE_PAIRS", "10000"))

# Reachability
EXACT_REACHABILITY_LIMIT = int(os.getenv("EXACT_REACHABILITY_LIMIT", "20000"))
REACHABILITY_SAMPLE_SOURCES = int(os.getenv("REACHABILITY_SAMPLE_SOURCES", "256"))
DISTANCE_INDEX_LIMIT = int(os.getenv("DISTANCE_INDEX_LIMIT", "3000"))

# Paths
BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = Path(os.getenv("SOCIALFORGE_OUT", str(BASE_DIR / "runs")))
