import sys
from pathlib import Path

# make tests/oracles.py importable from any working directory
sys.path.insert(0, str(Path(__file__).parent))
