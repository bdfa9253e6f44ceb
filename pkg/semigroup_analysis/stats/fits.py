#!/usr/bin/env python3

import warnings

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit
from uncertainties import ufloat, umath

from ..fit_forms import log_linear, power_law_decay


def _fit(form, xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2:
        raise ValueError(f"Need at least two points to fit, not {len(xs)}.")

    with warnings.catch_warnings():
        # Exact data gives an infinite covariance estimate with two points
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, pcov = curve_fit(form, xs, ys, p0=[ys.mean(), 0.0])

    errors = np.sqrt(np.abs(pcov.diagonal()))
    residuals = ys - form(xs, *popt)
    return [ufloat(value, error) for value, error in zip(popt, errors)], residuals


def fit_log_linear(xs, ys):
    """
    Least-squares fit of ys = a + b xs.

    Returns:
        a, b: The fitted parameters, with their standard errors
        residuals: ys minus the fitted line
    """

    (a, b), residuals = _fit(log_linear, xs, ys)
    return a, b, residuals


def fit_power_law(times, values):
    """
    Fit values ≈ C times^(-exponent) by least squares in log-log coordinates.

    Returns:
        C, exponent: The fitted parameters, with their standard errors
        residuals: The residuals of log(values)
    """

    (log_C, exponent), residuals = _fit(
        power_law_decay, np.log(times), np.log(values)
    )
    return umath.exp(log_C), exponent, residuals
