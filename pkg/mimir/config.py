"""Config objects used for mimir

Every default can be overridden via environment (or a .env file):

- MIMIR_STRICT          : Fail on malformed rows and dangling parents (default: 1)
- MIMIR_RULES           : Path to a rule file. Uses the embedded rules when unset
- MIMIR_WINDOW          : Token tail length kept in digests
- MIMIR_TOP_K           : Number of top bigrams / suggestions in digests
- MIMIR_REP_THRESHOLD   : Minimum consecutive repetitions for a pattern trigger
- MIMIR_MAX_PATTERN     : Longest repeated pattern searched for (1-3)
- MIMIR_PHASE_WINDOW    : Tokens per phase classification window
- MIMIR_THETA_SETUP     : MODIFY share that makes a window a setup phase
- MIMIR_THETA_EXPLORE   : GENERATION share that makes a window an exploration phase
- MIMIR_NGRAM_ORDERS    : Comma separated n-gram orders to mine
- MIMIR_SEED            : Seed for synthetic corpora

CLI flags always take precedence. `mimir --debug` (or MIMIR_DEBUG=1) uses
DebugConfig, which parses leniently and logs at debug level.
"""

import logging
import os

import dotenv

dotenv.load_dotenv()


def _flag(name, default):
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() not in ("0", "false", "no", "off", "")


class Config:
    STRICT = _flag("MIMIR_STRICT", True)
    RULES = os.getenv("MIMIR_RULES")

    WINDOW = int(os.getenv("MIMIR_WINDOW", 20))
    TOP_K = int(os.getenv("MIMIR_TOP_K", 5))
    REP_THRESHOLD = int(os.getenv("MIMIR_REP_THRESHOLD", 5))
    MAX_PATTERN = int(os.getenv("MIMIR_MAX_PATTERN", 3))

    PHASE_WINDOW = int(os.getenv("MIMIR_PHASE_WINDOW", 5))
    THETA_SETUP = float(os.getenv("MIMIR_THETA_SETUP", 0.5))
    THETA_EXPLORE = float(os.getenv("MIMIR_THETA_EXPLORE", 0.5))

    SUGGEST_MIN_PROB = float(os.getenv("MIMIR_SUGGEST_MIN_PROB", 0.5))
    SUGGEST_MIN_SUPPORT = int(os.getenv("MIMIR_SUGGEST_MIN_SUPPORT", 2))

    NGRAM_ORDERS = tuple(int(n) for n in os.getenv("MIMIR_NGRAM_ORDERS", "2").split(",") if n.strip())
    SEED = int(os.getenv("MIMIR_SEED", 42))

    LOG_LEVEL = logging.WARNING


class DebugConfig(Config):
    STRICT = False
    LOG_LEVEL = logging.DEBUG
