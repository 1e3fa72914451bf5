"""Agnostic boosting with sample reuse, baselines, exact oracles and an MDP simulator."""

from .baselines import boost_bhs20, boost_kk09
from .booster import (BoostConfig, BoostingRun, BoostResult, BranchMode, RelabelMode, StepMode,
                      WeakLearnerError, boost, default_config)
from .data import Dataset, gen_halfspace, gen_planted, inject_noise, kfold, load_csv, save_csv
from .ensemble import Ensemble, SignClassifier
from .estimators import AgnosticBoostClassifier, BHS20Classifier, KK09Classifier
from .oracles import FiniteDistribution, exact_corr
from .potential import phi, phi_prime, phi_second
from .resampler import ReuseDistribution, pseudo_label_prob
from .sources import ArraySource, CallableSource, ResamplingSource
from .weak_learners import DecisionStump, ERMLearner, ParityLearner

__version__ = "0.1.0"
