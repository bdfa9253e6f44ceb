#!/usr/bin/env python3

import numpy as np


def power_law_decay(log_x, log_C, exponent):
    """
    The logarithm of the power-law decay form.
    Returns log(C x^(-exponent))
    """

    return log_C - exponent * log_x


def log_linear(log_x, a, b):
    """
    The linear-in-logarithm form used for β(ε) and for log-log growth.
    Returns a + b log x
    """

    return a + b * log_x


def log_sobolev_beta(epsilon, c, slope):
    """
    The log-Sobolev constant function of an ultracontractive semigroup.
    Returns c - slope log ε
    """

    return c - slope * np.log(epsilon)
