"""GLA: HMM gauge likelihood analysis for discrete event streams."""

# Add parent directory to path so modules can import config
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))
