"""Unit conventions.

Internally everything is angular frequency in rad/us, distance in um, time
in us, temperature in K. Files, configs, and CLI flags speak plain MHz (and
MHz*um^6 for the van der Waals coefficient); the 2*pi lives only at the
boundary, in the two converters below.
"""

import math

TWO_PI = 2.0 * math.pi


def mhz_to_angular(f_mhz):
    """Plain frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * f_mhz


def angular_to_mhz(w_rad_us):
    """Angular frequency in rad/us -> plain frequency in MHz."""
    return w_rad_us / TWO_PI
