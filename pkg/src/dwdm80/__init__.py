"""Direct-detection DWDM link simulator.

Simulates PAM4 and DMT transceivers over dispersive single-mode fiber with
ASE noise loading, interleaver/VSB filtering and WDM multiplexing, plus the
analytic BER/OSNR toolbox and sweep runners that drive them.
"""

__version__ = "0.1.0"
