"""stopmax - stopping at the maximum and within a proportion of the maximum."""
import os

__version__ = "0.1.0"
APP_NAME = "stopmax"
os.environ["LOGURU_AUTOINIT"] = "False"


# Import full api to toplevel
from stopmax.options import *
from stopmax.exceptions import *
from stopmax.dist import *
from stopmax.game_max import *
from stopmax.sim import *
from stopmax.game_alpha import *
from stopmax.bound import *
