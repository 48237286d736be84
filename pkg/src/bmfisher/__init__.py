"""Fully connected Boltzmann machines under Ising and QUBO encodings.

Exact and sampled moments, the Fisher information matrix and its spectrum,
and SGD / natural-gradient training.
"""

from .encoding import BinaryConfig, Convention, Encoding, ModelParams, energy, ising_to_qubo, qubo_to_ising
from .fisher import FimMatrix, MomentTable, fim_from_moments, likelihood_gradient
from .gibbs import EmpiricalDistribution, ExactDistribution, enumerate_distribution, exact_moments, kl_divergence
from .optim import TrainConfig, TrainingTrace, train
from .sampler import AnnealSchedule, SampleSet, metropolis_sample
from .spectral import Spectrum, fim_spectrum, schur_bound, spectral_entropy

__version__ = "0.1.0"
