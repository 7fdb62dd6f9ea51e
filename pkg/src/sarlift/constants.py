"""Physical constants."""

C0 = 299792458.0  # free-space propagation speed [m/s]
