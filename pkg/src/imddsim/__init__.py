"""
imddsim: simulation of probabilistically shaped PAM over a short-reach
IM/DD optical link, from rate planning to BER waterfalls.

The submodules are usable on their own:

``shaping``
    Maxwell-Boltzmann (cap and cup) distributions, entropy targeting,
    rate planning, Gray and PAM-6 bit mappings.
``txchain``
    PRBS, root-raised-cosine shaping, rational resampling and DAC scaling.
``channel``
    Electrical front end, MZM, fibre, optical pre-amplifier, photodiode, ADC.
``rxdsp``
    Matched filter, synchronisation, Volterra equalizer (MMSE + DD-LMS),
    decisions and bit error counting.
``metrics``
    BER curves, sensitivity at the HD-FEC threshold, eyes and histograms.
``runner`` / ``config`` / ``cli``
    Configured experiments, sweeps and their file outputs.
"""

from .channel import ChannelConfig, run_channel
from .config import RunConfig, RxConfig, TxConfig, dumps_config, load_config, parse_config
from .errors import ImddError
from .metrics import HD_FEC_THRESHOLD, BerCurve, BerPoint, sensitivity
from .runner import plan_format, plan_table, simulate, sweep
from .rxdsp import EqualizerConfig, equalize
from .shaping import mb_distribution, pam, required_entropy, solve_nu

__version__ = "0.1.0"

__all__ = [
    "BerCurve",
    "BerPoint",
    "ChannelConfig",
    "EqualizerConfig",
    "HD_FEC_THRESHOLD",
    "ImddError",
    "RunConfig",
    "RxConfig",
    "TxConfig",
    "dumps_config",
    "equalize",
    "load_config",
    "mb_distribution",
    "pam",
    "parse_config",
    "plan_format",
    "plan_table",
    "required_entropy",
    "run_channel",
    "sensitivity",
    "simulate",
    "solve_nu",
    "sweep",
]
