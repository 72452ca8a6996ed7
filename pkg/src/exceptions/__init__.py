"""Custom exceptions for SB-MCL operations"""

from .sbmcl_exceptions import (
    SBMCLException,
    ShapeMismatchException,
    NonFiniteException,
    InvalidPosteriorException,
    SecondOrderException,
    EmptyBankException,
    HeadMismatchException,
    ConfigException,
    CheckpointException,
    DivergenceException
)
