"""Privacy-preserving kickstarting: a Dirichlet-mechanism teacher and a gated student."""

from privkick.accountant import KSchedule, PrivacyLedger
from privkick.calculus import MechanismConfig, price
from privkick.dirichlet import DirichletMechanism, concentration_radius, make_rng
from privkick.env import FeatureGrid, GridLayout
from privkick.kickstart import KickstartConfig, run_student
from privkick.ppo import PpoConfig, run_ppo

__version__ = "0.1.0"
