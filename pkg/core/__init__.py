# core/__init__.py
from .logger import get_logger as get_logger
from .models import PhaseDensity as PhaseDensity
from .models import SleState as SleState
from .models import WaveField as WaveField
