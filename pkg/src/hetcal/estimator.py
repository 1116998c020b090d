"""
scikit-learn style estimators over analyzer traces and acquisitions.

    >>> enbw = EnbwEstimator(rbw_hz=1e6).fit(tone_traces)
    >>> est = HeterodyneEfficiencyEstimator(enbw=enbw.result_).fit(datasets)
    >>> est.eta_, est.expanded_u_

Parameters are plain constructor arguments so ``get_params``/``set_params``
and ``sklearn.base.clone`` work as usual; fitted state ends in ``_``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .analysis import (
    DEFAULT_ENBW_REL_U,
    DEFAULT_K,
    DEFAULT_TYPE_B_REL,
    calibrated_power,
    compute_enbw,
    estimate_efficiency,
    extract_spectral_ratio,
    power_calibration_from_dataset,
    spectral_ratio,
)
from .constants import photon_energy
from .exceptions import ConfigError
from .validation import check_datasets, check_traces

#: Relative standard uncertainty of the ND attenuation certificate.
DEFAULT_REL_U_ATTENUATION = 0.006
#: Relative standard uncertainty of the monitor responsivity certificate.
DEFAULT_REL_U_RESPONSIVITY = 0.0045


class EnbwEstimator(BaseEstimator):
    """Equivalent noise bandwidth of the analyzer RBW filter from tone traces.

    Parameters
    ----------
    rbw_hz : float
        Nominal resolution bandwidth the traces were taken with.
    reference_power : float
        Linear power of 0 dBmV in the traces.
    type_b_rel : float
        Relative uncertainty assigned when a single trace is fitted.
    min_peak_db : float
        Required tone prominence over the trace median.
    """

    def __init__(self, rbw_hz=None, reference_power=1.0, type_b_rel=DEFAULT_ENBW_REL_U, min_peak_db=20.0):
        self.rbw_hz = rbw_hz
        self.reference_power = reference_power
        self.type_b_rel = type_b_rel
        self.min_peak_db = min_peak_db

    def _check_params(self):
        if self.rbw_hz is None or self.rbw_hz <= 0:
            raise ConfigError("EnbwEstimator needs a positive rbw_hz")

    def fit(self, X, y=None):
        self._check_params()
        traces = check_traces(X)
        self.result_ = compute_enbw(
            traces,
            self.rbw_hz,
            reference_power=self.reference_power,
            type_b_rel=self.type_b_rel,
            min_peak_db=self.min_peak_db,
        )
        self.enbw_hz_ = self.result_.enbw_hz.value
        self.u_std_hz_ = self.result_.enbw_hz.u_std
        self.ratio_ = self.result_.ratio
        self.n_traces_ = len(traces)
        return self

    def transform(self, X):
        """ENBW of each trace individually, in Hz."""
        self._check_params()
        return np.array([
            compute_enbw(t, self.rbw_hz, reference_power=self.reference_power,
                         min_peak_db=self.min_peak_db).enbw_hz.value
            for t in check_traces(X)
        ])


class HeterodyneEfficiencyEstimator(BaseEstimator):
    """Effective heterodyne detection efficiency from shot-noise-referenced spectra.

    ``fit`` pools repeated acquisitions taken at one setting: the spectral
    ratio is averaged over the repeats (Type-A uncertainty from their
    scatter) and the dark-corrected monitor samples are pooled for the
    signal power.

    Parameters
    ----------
    enbw : EnbwResult, UncertainValue or float
        Equivalent noise bandwidth of the analyzer setting. A bare float is
        given the default 0.3 % Type-B uncertainty.
    k : float
        Coverage factor of the expanded uncertainty.
    type_b_rel : float
        Relative Type-B term for the shot-noise approximation.
    rel_u_attenuation, rel_u_responsivity : float
        Relative standard uncertainties of the power-calibration constants.
    tone_halfwidth_hz : float, optional
        Half width of the window searched for the beat note (default 2 RBW).
    noise_region : (float, float), optional
        Frequency interval averaged for the shot level (default full span).
    noise_exclude : list of (float, float), optional
        Intervals dropped from the shot level, e.g. spurs.
    check_physical : bool
        Raise when the estimate exceeds one by more than 3 u.
    """

    def __init__(
        self,
        enbw=None,
        k=DEFAULT_K,
        type_b_rel=DEFAULT_TYPE_B_REL,
        rel_u_attenuation=DEFAULT_REL_U_ATTENUATION,
        rel_u_responsivity=DEFAULT_REL_U_RESPONSIVITY,
        tone_halfwidth_hz=None,
        noise_region=None,
        noise_exclude=None,
        check_physical=True,
    ):
        self.enbw = enbw
        self.k = k
        self.type_b_rel = type_b_rel
        self.rel_u_attenuation = rel_u_attenuation
        self.rel_u_responsivity = rel_u_responsivity
        self.tone_halfwidth_hz = tone_halfwidth_hz
        self.noise_region = noise_region
        self.noise_exclude = noise_exclude
        self.check_physical = check_physical

    def _window(self):
        return dict(
            tone_halfwidth_hz=self.tone_halfwidth_hz,
            noise_region=self.noise_region,
            noise_exclude=self.noise_exclude,
        )

    def _enbw(self):
        if self.enbw is None:
            raise ConfigError("an ENBW (EnbwResult, UncertainValue or Hz) is required")
        if isinstance(self.enbw, EnbwEstimator):
            check_is_fitted(self.enbw)
            return self.enbw.result_
        return self.enbw

    def fit(self, X, y=None):
        datasets = check_datasets(X)
        self.n_datasets_ = len(datasets)
        self.x_ratio_ = extract_spectral_ratio(datasets, **self._window())
        self.power_calibration_ = power_calibration_from_dataset(
            datasets, self.rel_u_attenuation, self.rel_u_responsivity
        )
        p_alpha = calibrated_power(self.power_calibration_)
        self.estimate_ = estimate_efficiency(
            self.x_ratio_,
            p_alpha,
            self._enbw(),
            datasets[0].metadata.wavelength_m,
            type_b_rel=self.type_b_rel,
            k=self.k,
            check_physical=self.check_physical,
        )
        self.eta_ = self.estimate_.eta.value
        self.u_std_ = self.estimate_.eta.u_std
        self.expanded_u_ = self.estimate_.expanded_u
        self.p_alpha_w_ = p_alpha.value
        self.budget_ = dict(self.estimate_.budget)
        return self

    def transform(self, X):
        """Spectral ratio ``X`` of each acquisition."""
        return np.array([spectral_ratio(ds, **self._window()).x for ds in check_datasets(X)])

    def predict(self, X):
        """Point estimate of the efficiency for each acquisition on its own.

        Uses the fitted bandwidth and each acquisition's own monitor reading.
        """
        check_is_fitted(self, "estimate_")
        b = self.estimate_.enbw_hz.value
        out = []
        for ds in check_datasets(X):
            x = spectral_ratio(ds, **self._window()).x
            cal = power_calibration_from_dataset(ds, self.rel_u_attenuation, self.rel_u_responsivity)
            p = calibrated_power(cal).value
            out.append(photon_energy(ds.metadata.wavelength_m) * b * x / (2.0 * p))
        return np.array(out)
